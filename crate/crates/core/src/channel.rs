//! Scenario geometry, path loss, ULA steering and Rician channel draws.
//!
//! Node placement: PT at the origin, PR at `(d0, 0)`, BD at
//! `(d0 cos theta, d0 sin theta)`. The PT-PR channel `h` departs at angle 0,
//! the PT-BD channel `g` at angle `theta`, and the BD-PR link `f` is a
//! scalar over distance `d1 = 2 d0 sin(theta / 2)`.
//!
//! Random draws come from ChaCha20 seeded with `seed_from_u64(seed)`. The
//! draw order is fixed: `M` NLoS entries of `h`, `M` NLoS entries of `g`,
//! the NLoS term of `f`, then the LoS phase of `f`. None of these draws
//! depend on the geometry, so two scenarios that differ only in angle or
//! path loss share identical small-scale fading for the same seed.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CVec;

pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Smallest admissible BD-PR distance in meters.
pub const MIN_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGeometry {
    /// Number of PT antennas.
    pub antennas: usize,
    /// PT-PR and PT-BD distance in meters.
    pub d0_m: f64,
    /// Angle between the PT-PR and PT-BD segments, radians.
    pub theta_rad: f64,
    /// Rician K-factor (linear).
    pub k_factor: f64,
    pub alpha_tr: f64,
    pub alpha_td: f64,
    pub alpha_dr: f64,
}

impl Default for ScenarioGeometry {
    fn default() -> Self {
        Self {
            antennas: 4,
            d0_m: 300.0,
            theta_rad: 20f64.to_radians(),
            k_factor: 10.0,
            alpha_tr: 2.7,
            alpha_td: 2.7,
            alpha_dr: 2.1,
        }
    }
}

impl ScenarioGeometry {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.antennas == 0 {
            return bad("antennas must be >= 1".into());
        }
        if !(self.d0_m > 0.0 && self.d0_m.is_finite()) {
            return bad(format!("d0 must be positive, got {}", self.d0_m));
        }
        if !(self.theta_rad > 0.0 && self.theta_rad <= PI) {
            return bad(format!("theta must lie in (0, pi], got {}", self.theta_rad));
        }
        if !(self.k_factor >= 0.0 && self.k_factor.is_finite()) {
            return bad(format!("K-factor must be >= 0, got {}", self.k_factor));
        }
        for (name, a) in [
            ("alpha_tr", self.alpha_tr),
            ("alpha_td", self.alpha_td),
            ("alpha_dr", self.alpha_dr),
        ] {
            if !(1.5..=6.0).contains(&a) {
                return bad(format!("{name} must lie in [1.5, 6], got {a}"));
            }
        }
        bd_pr_distance(self).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RFParams {
    pub bandwidth_hz: f64,
    /// Noise power sigma^2 in Watts.
    pub noise_w: f64,
    /// Power reflection coefficient of the BD.
    pub rho: f64,
    /// Power amplifier inefficiency (> 1).
    pub mu: f64,
    /// PT circuit power in Watts.
    pub ps_w: f64,
    /// BD circuit power in Watts.
    pub pc_w: f64,
    /// PT transmit power budget in Watts.
    pub pmax_w: f64,
    pub carrier_hz: f64,
}

impl Default for RFParams {
    fn default() -> Self {
        Self {
            bandwidth_hz: 10e6,
            noise_w: dbm_to_watts(-110.0),
            rho: 1.0,
            mu: 2.85,
            ps_w: 20e-3,
            pc_w: 0.2e-3,
            pmax_w: 0.1,
            carrier_hz: 3.5e9,
        }
    }
}

impl RFParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.bandwidth_hz) {
            return bad(format!(
                "bandwidth must be positive, got {}",
                self.bandwidth_hz
            ));
        }
        if !positive(self.noise_w) {
            return bad(format!(
                "noise power must be positive, got {}",
                self.noise_w
            ));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad(format!("rho must lie in [0, 1], got {}", self.rho));
        }
        if !(self.mu > 1.0 && self.mu.is_finite()) {
            return bad(format!("mu must exceed 1, got {}", self.mu));
        }
        if !(self.ps_w >= 0.0 && self.ps_w.is_finite()) {
            return bad(format!("Ps must be >= 0, got {}", self.ps_w));
        }
        if !positive(self.pc_w) {
            return bad(format!("Pc must be positive, got {}", self.pc_w));
        }
        if !positive(self.pmax_w) {
            return bad(format!("Pmax must be positive, got {}", self.pmax_w));
        }
        if !positive(self.carrier_hz) {
            return bad(format!("carrier must be positive, got {}", self.carrier_hz));
        }
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        self.noise_w.sqrt()
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Large-scale gain `beta0 * d^-alpha` with `beta0 = (lambda / 4 pi)^2`.
pub fn path_loss(d_m: f64, alpha_exp: f64, carrier_hz: f64) -> Result<f64> {
    if !(d_m > 0.0 && d_m.is_finite()) {
        return Err(Error::Domain(format!(
            "distance must be positive, got {d_m}"
        )));
    }
    if !(carrier_hz > 0.0) {
        return Err(Error::Domain(format!(
            "carrier must be positive, got {carrier_hz}"
        )));
    }
    let lambda = SPEED_OF_LIGHT / carrier_hz;
    let beta0 = (lambda / (4.0 * PI)).powi(2);
    Ok(beta0 * d_m.powf(-alpha_exp))
}

/// Half-wavelength ULA response: entry `m` is `exp(-j pi m sin(phi))`.
pub fn steering(antennas: usize, phi: f64) -> CVec {
    let s = phi.sin();
    let entries = (0..antennas)
        .map(|m| Complex64::from_polar(1.0, -PI * m as f64 * s))
        .collect();
    CVec::new(entries).expect("steering vector needs antennas >= 1")
}

/// BD-PR distance `2 d0 sin(theta / 2)`.
pub fn bd_pr_distance(geometry: &ScenarioGeometry) -> Result<f64> {
    let d1 = 2.0 * geometry.d0_m * (0.5 * geometry.theta_rad).sin();
    if !(d1 >= MIN_DISTANCE_M) {
        return Err(Error::InvalidParameter(format!(
            "BD-PR distance {d1} m is below the {MIN_DISTANCE_M} m floor"
        )));
    }
    Ok(d1)
}

/// Raw channels together with their noise/reflection normalized forms
/// `h_hat = h / sigma` and `g_hat = sqrt(rho) f g / sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    h: CVec,
    g: CVec,
    f: Complex64,
    h_hat: CVec,
    g_hat: CVec,
}

impl ChannelSet {
    pub fn new(h: CVec, g: CVec, f: Complex64, rf: &RFParams) -> Result<Self> {
        if h.len() != g.len() {
            return Err(Error::DimensionMismatch {
                left: h.len(),
                right: g.len(),
            });
        }
        if !f.re.is_finite() || !f.im.is_finite() {
            return Err(Error::Domain("f must be finite".into()));
        }
        let (h_hat, g_hat) = normalize(&h, &g, f, rf);
        Ok(Self {
            h,
            g,
            f,
            h_hat,
            g_hat,
        })
    }

    /// Channels given directly in normalized form (unit noise, `rho = 1`,
    /// `f = 1`), convenient for analysis and tests.
    pub fn from_normalized(h_hat: CVec, g_hat: CVec) -> Result<Self> {
        let unit = RFParams {
            noise_w: 1.0,
            rho: 1.0,
            ..RFParams::default()
        };
        Self::new(h_hat, g_hat, Complex64::new(1.0, 0.0), &unit)
    }

    pub fn h(&self) -> &CVec {
        &self.h
    }

    pub fn g(&self) -> &CVec {
        &self.g
    }

    pub fn f(&self) -> Complex64 {
        self.f
    }

    pub fn h_hat(&self) -> &CVec {
        &self.h_hat
    }

    pub fn g_hat(&self) -> &CVec {
        &self.g_hat
    }

    pub fn antennas(&self) -> usize {
        self.h.len()
    }
}

fn normalize(h: &CVec, g: &CVec, f: Complex64, rf: &RFParams) -> (CVec, CVec) {
    let sigma = rf.sigma();
    let h_hat = h.scale(1.0 / sigma);
    let g_hat = g.scale_complex(f * rf.rho.sqrt() / sigma);
    (h_hat, g_hat)
}

/// Recomputes the normalized channels from the raw ones; used to check the
/// stored values.
pub fn renormalize(ch: &ChannelSet, rf: &RFParams) -> (CVec, CVec) {
    normalize(&ch.h, &ch.g, ch.f, rf)
}

fn cn01<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

fn rician_vector(los: &CVec, nlos: &[Complex64], k: f64, beta: f64) -> CVec {
    let los_amp = (k / (k + 1.0)).sqrt();
    let nlos_amp = (1.0 / (k + 1.0)).sqrt();
    let scale = beta.sqrt();
    let entries = los
        .iter()
        .zip(nlos)
        .map(|(l, n)| (l * los_amp + n * nlos_amp) * scale)
        .collect();
    CVec::new(entries).expect("finite Rician draw")
}

/// Draws one Rician realization of `(h, g, f)` for the scenario.
pub fn gen_channels(geometry: &ScenarioGeometry, rf: &RFParams, seed: u64) -> Result<ChannelSet> {
    geometry.validate()?;
    rf.validate()?;
    let m = geometry.antennas;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let nlos_h: Vec<Complex64> = (0..m).map(|_| cn01(&mut rng)).collect();
    let nlos_g: Vec<Complex64> = (0..m).map(|_| cn01(&mut rng)).collect();
    let nlos_f = cn01(&mut rng);
    let los_phase_f: f64 = rng.random_range(0.0..2.0 * PI);

    let k = geometry.k_factor;
    let beta_h = path_loss(geometry.d0_m, geometry.alpha_tr, rf.carrier_hz)?;
    let beta_g = path_loss(geometry.d0_m, geometry.alpha_td, rf.carrier_hz)?;
    let d1 = bd_pr_distance(geometry)?;
    let beta_f = path_loss(d1, geometry.alpha_dr, rf.carrier_hz)?;

    let h = rician_vector(&steering(m, 0.0), &nlos_h, k, beta_h);
    let g = rician_vector(&steering(m, geometry.theta_rad), &nlos_g, k, beta_g);
    let f_los = CVec::new(vec![Complex64::from_polar(1.0, los_phase_f)])?;
    let f = rician_vector(&f_los, &[nlos_f], k, beta_f)[0];

    ChannelSet::new(h, g, f, rf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_loss_reference() {
        let beta0 = path_loss(1.0, 2.7, 3.5e9).unwrap();
        let lambda = SPEED_OF_LIGHT / 3.5e9;
        assert!((lambda - 0.085_655).abs() < 1e-6);
        assert!((beta0 - 4.646068e-5).abs() / 4.646068e-5 < 1e-6);
        let b300 = path_loss(300.0, 2.7, 3.5e9).unwrap();
        assert!((b300 - beta0 * 300f64.powf(-2.7)).abs() <= 1e-15 * b300);
        assert!(path_loss(301.0, 2.7, 3.5e9).unwrap() < b300);
        assert!(path_loss(0.0, 2.7, 3.5e9).is_err());
    }

    #[test]
    fn steering_cases() {
        let ones = steering(5, 0.0);
        assert!(ones.iter().all(|z| (*z - 1.0).norm() < 1e-15));
        assert_eq!(steering(1, 1.234).as_slice(), &[Complex64::new(1.0, 0.0)]);
        let s = steering(2, PI / 2.0);
        assert!((s[0] - 1.0).norm() < 1e-15);
        assert!((s[1] + 1.0).norm() < 1e-15);
        for m in 1..9 {
            for phi in [0.1, 0.7, 2.0, -1.0] {
                let v = steering(m, phi);
                assert!((v.norm_sqr() - m as f64).abs() < 1e-12);
                assert!(v.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
            }
        }
    }

    #[test]
    fn bd_distance_cases() {
        let mut geo = ScenarioGeometry {
            theta_rad: 60f64.to_radians(),
            ..ScenarioGeometry::default()
        };
        assert!((bd_pr_distance(&geo).unwrap() - 300.0).abs() < 1e-9);
        geo.theta_rad = PI;
        assert!((bd_pr_distance(&geo).unwrap() - 600.0).abs() < 1e-9);
        geo.theta_rad = 20f64.to_radians();
        assert!((bd_pr_distance(&geo).unwrap() - 104.189).abs() < 1e-3);
        geo.theta_rad = 1e-4;
        assert!(bd_pr_distance(&geo).is_err());
    }

    #[test]
    fn defaults_are_valid() {
        ScenarioGeometry::default().validate().unwrap();
        RFParams::default().validate().unwrap();
        assert!((RFParams::default().noise_w - 1e-14).abs() < 1e-28);
    }

    #[test]
    fn validation_rejects_bad_params() {
        let rf = RFParams {
            mu: 0.5,
            ..RFParams::default()
        };
        assert!(rf.validate().is_err());
        let rf = RFParams {
            rho: 1.5,
            ..RFParams::default()
        };
        assert!(rf.validate().is_err());
        let geo = ScenarioGeometry {
            alpha_dr: 7.0,
            ..ScenarioGeometry::default()
        };
        assert!(geo.validate().is_err());
        let geo = ScenarioGeometry {
            antennas: 0,
            ..ScenarioGeometry::default()
        };
        assert!(geo.validate().is_err());
    }

    #[test]
    fn same_seed_same_channels() {
        let geo = ScenarioGeometry::default();
        let rf = RFParams::default();
        let a = gen_channels(&geo, &rf, 42).unwrap();
        let b = gen_channels(&geo, &rf, 42).unwrap();
        assert_eq!(a, b);
        let c = gen_channels(&geo, &rf, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn normalization_is_reproducible() {
        let geo = ScenarioGeometry::default();
        let rf = RFParams::default();
        let ch = gen_channels(&geo, &rf, 7).unwrap();
        let (h_hat, g_hat) = renormalize(&ch, &rf);
        assert_eq!(&h_hat, ch.h_hat());
        assert_eq!(&g_hat, ch.g_hat());
    }

    #[test]
    fn zero_reflection_kills_backscatter() {
        let rf = RFParams {
            rho: 0.0,
            ..RFParams::default()
        };
        let ch = gen_channels(&ScenarioGeometry::default(), &rf, 3).unwrap();
        assert_eq!(ch.g_hat().norm_sqr(), 0.0);
        assert!(ch.h_hat().norm_sqr() > 0.0);
    }

    #[test]
    fn los_limit() {
        let geo = ScenarioGeometry {
            k_factor: 1e12,
            ..ScenarioGeometry::default()
        };
        let rf = RFParams::default();
        let ch = gen_channels(&geo, &rf, 11).unwrap();
        let beta_h = path_loss(geo.d0_m, geo.alpha_tr, rf.carrier_hz).unwrap();
        let los = steering(geo.antennas, 0.0).scale(beta_h.sqrt());
        let err = ch.h().sub(&los).unwrap().norm() / los.norm();
        assert!(err < 1e-5, "{err}");
    }
}
