//! Experiment configuration file.
//!
//! Every key is optional; missing keys take the default scenario values.
//! Unknown keys are rejected. Units are SI (Watts, Hz, meters); angles are
//! given either in radians (`theta_rad`) or degrees (`theta_deg`), and the
//! noise power either in Watts (`noise_w`) or dBm (`noise_dbm`).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{dbm_to_watts, RFParams, ScenarioGeometry};
use crate::error::{Error, Result};
use crate::numerics::RootConfig;
use crate::pareto::{EEProfile, ParetoConfig, ProfileScaling};
use crate::sca::ScaConfig;

pub const DEFAULT_ALPHA_COUNT: usize = 21;
pub const DEFAULT_ALPHA_MIN: f64 = 0.01;
pub const DEFAULT_ALPHA_MAX: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub antennas: usize,
    pub d0_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_rad: Option<f64>,
    pub k_factor: f64,
    pub alpha_tr: f64,
    pub alpha_td: f64,
    pub alpha_dr: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        let g = ScenarioGeometry::default();
        Self {
            antennas: g.antennas,
            d0_m: g.d0_m,
            theta_deg: None,
            theta_rad: None,
            k_factor: g.k_factor,
            alpha_tr: g.alpha_tr,
            alpha_td: g.alpha_td,
            alpha_dr: g.alpha_dr,
        }
    }
}

impl GeometrySection {
    pub fn resolve(&self) -> Result<ScenarioGeometry> {
        let theta_rad = match (self.theta_deg, self.theta_rad) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidParameter(
                    "give either geometry.theta_deg or geometry.theta_rad, not both".into(),
                ))
            }
            (Some(deg), None) => deg.to_radians(),
            (None, Some(rad)) => rad,
            (None, None) => ScenarioGeometry::default().theta_rad,
        };
        let geometry = ScenarioGeometry {
            antennas: self.antennas,
            d0_m: self.d0_m,
            theta_rad,
            k_factor: self.k_factor,
            alpha_tr: self.alpha_tr,
            alpha_td: self.alpha_td,
            alpha_dr: self.alpha_dr,
        };
        geometry.validate()?;
        Ok(geometry)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfSection {
    pub bandwidth_hz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_dbm: Option<f64>,
    pub rho: f64,
    pub mu: f64,
    pub ps_w: f64,
    pub pc_w: f64,
    pub pmax_w: f64,
    pub carrier_hz: f64,
}

impl Default for RfSection {
    fn default() -> Self {
        let rf = RFParams::default();
        Self {
            bandwidth_hz: rf.bandwidth_hz,
            noise_w: None,
            noise_dbm: None,
            rho: rf.rho,
            mu: rf.mu,
            ps_w: rf.ps_w,
            pc_w: rf.pc_w,
            pmax_w: rf.pmax_w,
            carrier_hz: rf.carrier_hz,
        }
    }
}

impl RfSection {
    pub fn resolve(&self) -> Result<RFParams> {
        let noise_w = match (self.noise_w, self.noise_dbm) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidParameter(
                    "give either rf.noise_w or rf.noise_dbm, not both".into(),
                ))
            }
            (Some(w), None) => w,
            (None, Some(dbm)) => dbm_to_watts(dbm),
            (None, None) => RFParams::default().noise_w,
        };
        let rf = RFParams {
            bandwidth_hz: self.bandwidth_hz,
            noise_w,
            rho: self.rho,
            mu: self.mu,
            ps_w: self.ps_w,
            pc_w: self.pc_w,
            pmax_w: self.pmax_w,
            carrier_hz: self.carrier_hz,
        };
        rf.validate()?;
        Ok(rf)
    }
}

/// Either an explicit list of profiles or an evenly spaced grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaGrid {
    List(Vec<f64>),
    Range(AlphaRange),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaRange {
    pub count: usize,
    #[serde(default = "default_alpha_min")]
    pub min: f64,
    #[serde(default = "default_alpha_max")]
    pub max: f64,
}

fn default_alpha_min() -> f64 {
    DEFAULT_ALPHA_MIN
}

fn default_alpha_max() -> f64 {
    DEFAULT_ALPHA_MAX
}

impl Default for AlphaGrid {
    fn default() -> Self {
        AlphaGrid::Range(AlphaRange {
            count: DEFAULT_ALPHA_COUNT,
            min: DEFAULT_ALPHA_MIN,
            max: DEFAULT_ALPHA_MAX,
        })
    }
}

impl AlphaGrid {
    pub fn resolve(&self) -> Result<Vec<EEProfile>> {
        match self {
            AlphaGrid::List(list) if list.is_empty() => {
                Err(Error::InvalidParameter("alpha_grid list is empty".into()))
            }
            AlphaGrid::List(list) => list.iter().map(|&a| EEProfile::new(a)).collect(),
            AlphaGrid::Range(r) => {
                if r.min > r.max {
                    return Err(Error::InvalidParameter(format!(
                        "alpha_grid.min {} exceeds alpha_grid.max {}",
                        r.min, r.max
                    )));
                }
                EEProfile::grid(r.count, r.min, r.max)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// SCA stops when the surrogate objective grows by less than this fraction.
    pub kappa: f64,
    pub sca_max_iters: usize,
    pub root_abs_tol: f64,
    pub root_rel_tol: f64,
    pub root_max_iters: usize,
    pub bisection_rel_tol: f64,
    pub max_bisection_iters: usize,
    pub profile_scaling: ProfileScaling,
}

impl Default for SolverSection {
    fn default() -> Self {
        let p = ParetoConfig::default();
        Self {
            kappa: p.sca.kappa,
            sca_max_iters: p.sca.max_iters,
            root_abs_tol: p.root.abs_tol,
            root_rel_tol: p.root.rel_tol,
            root_max_iters: p.root.max_iters,
            bisection_rel_tol: p.bisection_rel_tol,
            max_bisection_iters: p.max_bisection_iters,
            profile_scaling: p.scaling,
        }
    }
}

impl SolverSection {
    pub fn resolve(&self) -> Result<ParetoConfig> {
        let root = RootConfig {
            abs_tol: self.root_abs_tol,
            rel_tol: self.root_rel_tol,
            max_iters: self.root_max_iters,
        };
        root.validate()?;
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "solver.kappa must lie in (0, 1), got {}",
                self.kappa
            )));
        }
        if !(self.bisection_rel_tol > 0.0 && self.bisection_rel_tol < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "solver.bisection_rel_tol must lie in (0, 1), got {}",
                self.bisection_rel_tol
            )));
        }
        if self.sca_max_iters == 0 || self.max_bisection_iters == 0 {
            return Err(Error::InvalidParameter(
                "iteration limits must be >= 1".into(),
            ));
        }
        Ok(ParetoConfig {
            root,
            sca: ScaConfig {
                kappa: self.kappa,
                max_iters: self.sca_max_iters,
                ..ScaConfig::default()
            },
            bisection_rel_tol: self.bisection_rel_tol,
            max_bisection_iters: self.max_bisection_iters,
            scaling: self.profile_scaling,
        })
    }
}

/// The configuration document as written by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub geometry: GeometrySection,
    pub rf: RfSection,
    pub seeds: Vec<u64>,
    pub alpha_grid: AlphaGrid,
    pub solver: SolverSection,
    pub output_dir: PathBuf,
}

impl Default for ConfigFile {
    fn default() -> Self {
        Self {
            geometry: GeometrySection::default(),
            rf: RfSection::default(),
            seeds: vec![1],
            alpha_grid: AlphaGrid::default(),
            solver: SolverSection::default(),
            output_dir: PathBuf::from("results"),
        }
    }
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("config: {e}")))
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn resolve(&self) -> Result<ExperimentConfig> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter("seeds must not be empty".into()));
        }
        Ok(ExperimentConfig {
            geometry: self.geometry.resolve()?,
            rf: self.rf.resolve()?,
            seeds: self.seeds.clone(),
            alphas: self.alpha_grid.resolve()?,
            solver: self.solver.resolve()?,
            output_dir: self.output_dir.clone(),
            digest: self.digest(),
        })
    }
}

/// Validated configuration ready for the commands.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub geometry: ScenarioGeometry,
    pub rf: RFParams,
    pub seeds: Vec<u64>,
    pub alphas: Vec<EEProfile>,
    pub solver: ParetoConfig,
    pub output_dir: PathBuf,
    /// Digest of the document this was resolved from.
    pub digest: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ConfigFile::default().resolve().expect("defaults are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = ConfigFile::from_json("{}").unwrap().resolve().unwrap();
        assert_eq!(cfg.geometry, ScenarioGeometry::default());
        assert_eq!(cfg.rf, RFParams::default());
        assert_eq!(cfg.alphas.len(), 21);
        assert_eq!(cfg.seeds, vec![1]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ConfigFile::from_json(r#"{"geometry": {"antenas": 4}}"#).is_err());
        assert!(ConfigFile::from_json(r#"{"extra": 1}"#).is_err());
    }

    #[test]
    fn theta_units() {
        let deg = ConfigFile::from_json(r#"{"geometry": {"theta_deg": 40}}"#).unwrap();
        let rad =
            ConfigFile::from_json(r#"{"geometry": {"theta_rad": 0.6981317007977318}}"#).unwrap();
        let a = deg.resolve().unwrap().geometry.theta_rad;
        let b = rad.resolve().unwrap().geometry.theta_rad;
        assert!((a - b).abs() < 1e-15);
        let both =
            ConfigFile::from_json(r#"{"geometry": {"theta_deg": 40, "theta_rad": 0.7}}"#).unwrap();
        assert!(both.resolve().is_err());
    }

    #[test]
    fn noise_in_dbm() {
        let cfg = ConfigFile::from_json(r#"{"rf": {"noise_dbm": -100}}"#).unwrap();
        assert!((cfg.resolve().unwrap().rf.noise_w - 1e-13).abs() < 1e-25);
    }

    #[test]
    fn bad_mu_is_rejected() {
        let cfg = ConfigFile::from_json(r#"{"rf": {"mu": 0.5}}"#).unwrap();
        assert!(matches!(cfg.resolve(), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn alpha_grid_forms() {
        let list = ConfigFile::from_json(r#"{"alpha_grid": [0.2, 0.8]}"#).unwrap();
        assert_eq!(list.resolve().unwrap().alphas.len(), 2);
        let range = ConfigFile::from_json(r#"{"alpha_grid": {"count": 5}}"#).unwrap();
        let alphas = range.resolve().unwrap().alphas;
        assert_eq!(alphas.len(), 5);
        assert!((alphas[0].alpha() - 0.01).abs() < 1e-15);
        assert!(ConfigFile::from_json(r#"{"alpha_grid": [1.5]}"#)
            .unwrap()
            .resolve()
            .is_err());
    }

    #[test]
    fn digest_tracks_content() {
        let a = ConfigFile::default();
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.seeds = vec![2];
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
