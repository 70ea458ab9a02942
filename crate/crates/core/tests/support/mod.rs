//! Reference computations shared by the integration tests. Everything here
//! is written independently of the library's own formulas.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use symbio_ee::channel::{ChannelSet, RFParams};
use symbio_ee::linalg::CVec;
use symbio_ee::numerics::avg_backscatter_spectral;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn gl_panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Adaptive Gauss-Legendre quadrature to relative accuracy `rel_tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let rule = gauss_legendre(20);
    let panels = 32;
    let h = (b - a) / panels as f64;
    let rough: f64 = (0..panels)
        .map(|k| gl_panel(f, a + k as f64 * h, a + (k + 1) as f64 * h, &rule))
        .sum();
    let abs_tol = rel_tol * rough.abs();
    let mut total = 0.0;
    let mut stack = vec![(a, b, gl_panel(f, a, b, &rule), 0usize)];
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = gl_panel(f, lo, mid, &rule);
        let right = gl_panel(f, mid, hi, &rule);
        let width_share = (hi - lo) / (b - a);
        if (left + right - whole).abs() <= abs_tol * width_share || depth > 60 {
            total += left + right;
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    total
}

/// `int_0^inf exp(-t) / (z + t) dt` after the substitution
/// `t = z (e^u - 1)`, which turns the integrand into `exp(-z (e^u - 1))`.
pub fn scaled_e1_quadrature(z: f64) -> f64 {
    let tail = 90.0;
    let upper = (tail / z).ln_1p();
    integrate(&|u: f64| (-z * u.exp_m1()).exp(), 0.0, upper, 1e-13)
}

/// `E[log2(1 + gamma X)]` for `X ~ Exp(1)`, by quadrature.
pub fn spectral_quadrature(gamma: f64) -> f64 {
    integrate(
        &|x: f64| (gamma * x).ln_1p() / std::f64::consts::LN_2 * (-x).exp(),
        0.0,
        90.0,
        1e-13,
    )
}

pub fn to_dvec(v: &CVec) -> DVector<Complex64> {
    DVector::from_iterator(v.len(), v.iter().copied())
}

pub fn dot_h(a: &CVec, b: &CVec) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `p h^H (p g g^H + I)^{-1} h` by a dense LU solve.
pub fn max_sinr_dense(h: &CVec, g: &CVec, p: f64) -> f64 {
    let m = h.len();
    let gv = to_dvec(g);
    let hv = to_dvec(h);
    let a = &gv * gv.adjoint() * Complex64::new(p, 0.0) + DMatrix::<Complex64>::identity(m, m);
    let y = a.lu().solve(&hv).expect("regular system");
    (hv.adjoint() * y)[(0, 0)].re * p
}

/// SINR of the primary link for beamformer `w`, from its definition.
pub fn sinr_direct(w: &CVec, h: &CVec, g: &CVec) -> f64 {
    dot_h(h, w).norm_sqr() / (dot_h(g, w).norm_sqr() + 1.0)
}

/// PT EE along the maximum-SINR curve, written via Sherman-Morrison:
/// `f(p) = a p - k p^2 / (1 + c p)` with `k = |g^H h|^2`.
pub struct CurveOracle {
    pub a: f64,
    pub c: f64,
    pub k: f64,
}

impl CurveOracle {
    pub fn new(ch: &ChannelSet) -> Self {
        Self {
            a: ch.h_hat().norm_sqr(),
            c: ch.g_hat().norm_sqr(),
            k: dot_h(ch.g_hat(), ch.h_hat()).norm_sqr(),
        }
    }

    pub fn f(&self, p: f64) -> f64 {
        (self.a * p - self.k * p * p / (1.0 + self.c * p)).max(0.0)
    }

    pub fn df(&self, p: f64) -> f64 {
        let d = 1.0 + self.c * p;
        self.a - self.k * p * (2.0 + self.c * p) / (d * d)
    }

    pub fn ee(&self, p: f64, rf: &RFParams) -> f64 {
        rf.bandwidth_hz * (1.0 + self.f(p)).log2() / (rf.mu * p + rf.ps_w)
    }

    pub fn h(&self, p: f64, rf: &RFParams) -> f64 {
        let f = self.f(p);
        (rf.mu * p + rf.ps_w) * self.df(p) / (1.0 + f) - rf.mu * (1.0 + f).ln()
    }
}

pub fn random_cvec<R: Rng>(rng: &mut R, m: usize, scale: f64) -> CVec {
    let entries = (0..m)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * scale
        })
        .collect();
    CVec::new(entries).unwrap()
}

/// EE pair of `w`, from the definitions.
pub fn ee_pair_direct(w: &CVec, ch: &ChannelSet, rf: &RFParams) -> (f64, f64) {
    let p = w.norm_sqr();
    let sinr = sinr_direct(w, ch.h_hat(), ch.g_hat());
    let ee_pt = rf.bandwidth_hz * (1.0 + sinr).log2() / (rf.mu * p + rf.ps_w);
    let gain = dot_h(ch.g_hat(), w).norm_sqr();
    let ee_bd = rf.bandwidth_hz * avg_backscatter_spectral(gain).unwrap() / rf.pc_w;
    (ee_pt, ee_bd)
}

/// Orthonormal basis of span{h, g} (Gram-Schmidt, h first).
fn span_basis(h: &CVec, g: &CVec) -> (CVec, Option<CVec>) {
    let e1 = h.scale(1.0 / h.norm());
    let proj = dot_h(&e1, g);
    let rest: Vec<Complex64> = g
        .iter()
        .zip(e1.iter())
        .map(|(gi, ei)| gi - proj * ei)
        .collect();
    let rest = CVec::new(rest).unwrap();
    let n = rest.norm();
    (e1, (n > 1e-12 * g.norm()).then(|| rest.scale(1.0 / n)))
}

/// Brute-force boundary point for profile `alpha` with axis scales
/// `(s_pt, s_bd)`: the largest `min(EE_PT / (alpha s_pt),
/// EE_BD / ((1 - alpha) s_bd))` over `w = sqrt(p) (cos t e1 + e^{j psi} sin t e2)`.
///
/// A coarse grid over `(p, t, psi)` is refined around the best candidates
/// several times, each level shrinking the search box.
pub fn brute_force_eta(
    ch: &ChannelSet,
    rf: &RFParams,
    alpha: f64,
    s_pt: f64,
    s_bd: f64,
) -> (f64, CVec) {
    let (e1, e2) = span_basis(ch.h_hat(), ch.g_hat());
    let e2 = e2.expect("h and g are not parallel");
    let build = |p: f64, t: f64, psi: f64| -> CVec {
        let rot = Complex64::from_polar(t.sin(), psi);
        let entries = e1
            .iter()
            .zip(e2.iter())
            .map(|(a, b)| (a * t.cos() + b * rot) * p.sqrt())
            .collect();
        CVec::new(entries).unwrap()
    };
    let score = |x: [f64; 3]| -> f64 {
        let w = build(x[0], x[1], x[2]);
        let (pt, bd) = ee_pair_direct(&w, ch, rf);
        (pt / (alpha * s_pt)).min(bd / ((1.0 - alpha) * s_bd))
    };
    let lo = [0.0, 0.0, -std::f64::consts::PI];
    let hi = [rf.pmax_w, std::f64::consts::FRAC_PI_2, std::f64::consts::PI];
    let n = 100;
    let mut cands: Vec<(f64, [f64; 3])> = Vec::with_capacity(n * n * n);
    for i in 1..=n {
        for j in 0..=n {
            for k in 0..n {
                let x = [
                    lo[0] + (hi[0] - lo[0]) * i as f64 / n as f64,
                    lo[1] + (hi[1] - lo[1]) * j as f64 / n as f64,
                    lo[2] + (hi[2] - lo[2]) * k as f64 / n as f64,
                ];
                cands.push((score(x), x));
            }
        }
    }
    let keep = 24;
    let mut step = [
        (hi[0] - lo[0]) / n as f64,
        (hi[1] - lo[1]) / n as f64,
        (hi[2] - lo[2]) / n as f64,
    ];
    for _level in 0..8 {
        cands.sort_by(|a, b| b.0.total_cmp(&a.0));
        cands.truncate(keep);
        let mut next = cands.clone();
        let r = 6;
        for (_, c) in &cands {
            for i in -r..=r {
                for j in -r..=r {
                    for k in -r..=r {
                        let x = [
                            (c[0] + step[0] * i as f64 / r as f64).clamp(lo[0], hi[0]),
                            (c[1] + step[1] * j as f64 / r as f64).clamp(lo[1], hi[1]),
                            c[2] + step[2] * k as f64 / r as f64,
                        ];
                        next.push((score(x), x));
                    }
                }
            }
        }
        cands = next;
        for s in &mut step {
            *s /= r as f64 * 0.5;
        }
    }
    cands.sort_by(|a, b| b.0.total_cmp(&a.0));
    let best = cands[0];
    (best.0, build(best.1[0], best.1[1], best.1[2]))
}
