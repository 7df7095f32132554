//! Closed-form model functions and bound evaluators.
//!
//! Everything here is a pure function of scalars: the generalized sine and
//! cosine `sn_H`/`cs_H`, the constant-curvature shape-operator traces, the
//! Heintze–Karcher integrand and its first zero, the constants and bound of
//! the integral-curvature tube estimate, and its inversion into a uniform
//! lower volume bound for minimal submanifolds.

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::quadrature::sphere_volume;

/// Below this |H| the flat branch is used for sn/cs.
pub const FLAT_THRESHOLD: f64 = 1e-8;

/// A constant model curvature H.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelCurvature(pub f64);

impl ModelCurvature {
    pub fn value(self) -> f64 {
        self.0
    }

    /// (sn_H(r), cs_H(r)) with cs_H = sn_H'.
    pub fn sn_cs(self, r: f64) -> (f64, f64) {
        let h = self.0;
        if h.abs() < FLAT_THRESHOLD {
            // first-order term in H keeps the switch continuous
            (r - h * r.powi(3) / 6.0, 1.0 - h * r * r / 2.0)
        } else if h > 0.0 {
            let s = h.sqrt();
            ((s * r).sin() / s, (s * r).cos())
        } else {
            let s = (-h).sqrt();
            ((s * r).sinh() / s, (s * r).cosh())
        }
    }

    pub fn sn(self, r: f64) -> f64 {
        self.sn_cs(r).0
    }

    pub fn cs(self, r: f64) -> f64 {
        self.sn_cs(r).1
    }
}

/// Free-function form of [`ModelCurvature::sn_cs`].
pub fn sn_cs(h: ModelCurvature, r: f64) -> (f64, f64) {
    h.sn_cs(r)
}

/// Right-hand side of the k-Ricci Hessian comparison.
///
/// With `tangential_w0 = Some(w0)` this is `k (w0 cs - H sn) / (cs + w0 sn)`,
/// the log-derivative of `(cs + w0 sn)^k`; otherwise `k cs / sn`.
pub fn model_shape_trace(h: ModelCurvature, k: usize, tangential_w0: Option<f64>, t: f64) -> Result<f64> {
    if k == 0 {
        return Err(GeomError::InvalidParameters("k must be at least 1".into()));
    }
    if !(t > 0.0) {
        return Err(GeomError::Domain(format!("t = {t} must be positive")));
    }
    let (sn, cs) = h.sn_cs(t);
    let kf = k as f64;
    match tangential_w0 {
        Some(w0) => {
            let z = first_zero_of(
                |s| {
                    let (sn, cs) = h.sn_cs(s);
                    cs + w0 * sn
                },
                t,
                march_step(h, t),
            );
            if z < t {
                return Err(GeomError::Domain(format!("t = {t} is beyond the first zero {z} of cs_H + w0 sn_H")));
            }
            let den = cs + w0 * sn;
            if den <= 0.0 {
                return Err(GeomError::Domain(format!("cs_H + w0 sn_H vanishes at t = {t}")));
            }
            Ok(kf * (w0 * cs - h.0 * sn) / den)
        }
        None => {
            let z = first_zero_of(|s| h.sn(s), t, march_step(h, t));
            if z < t || sn <= 0.0 {
                return Err(GeomError::Domain(format!("t = {t} is at or beyond the first zero of sn_H")));
            }
            Ok(kf * cs / sn)
        }
    }
}

/// `(cs_H(t) + ⟨η,ξ⟩ sn_H(t))^m · sn_H(t)^{n-m-1}`.
pub fn hk_integrand(h: ModelCurvature, n: usize, m: usize, eta_dot_xi: f64, t: f64) -> f64 {
    debug_assert!(m < n);
    let (sn, cs) = h.sn_cs(t);
    (cs + eta_dot_xi * sn).powi(m as i32) * sn.powi((n - m - 1) as i32)
}

fn march_step(h: ModelCurvature, r: f64) -> f64 {
    let scale = std::f64::consts::PI / h.0.max(FLAT_THRESHOLD).sqrt();
    r.min(scale) / 256.0
}

/// First t in (0, r] where `f` changes sign or vanishes; r when none.
fn first_zero_of(f: impl Fn(f64) -> f64, r: f64, step: f64) -> f64 {
    let mut a = 0.0;
    let mut fa = f(step * 1e-3);
    loop {
        let b = (a + step).min(r);
        let fb = f(b);
        if fb == 0.0 {
            return b;
        }
        if fa.signum() != fb.signum() && fa != 0.0 {
            return bisect(&f, a.max(step * 1e-3), b, fa);
        }
        if b >= r {
            return r;
        }
        a = b;
        fa = fb;
    }
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    while (b - a) > 1e-12 * b.abs().max(1e-300) {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// z(r, ξ): the minimum of r and the first positive zero of the
/// Heintze–Karcher integrand.
pub fn first_zero(h: ModelCurvature, n: usize, m: usize, eta_dot_xi: f64, r: f64) -> f64 {
    let step = march_step(h, r);
    let mut z = r;
    if m > 0 {
        z = z.min(first_zero_of(
            |t| {
                let (sn, cs) = h.sn_cs(t);
                cs + eta_dot_xi * sn
            },
            r,
            step,
        ));
    }
    if n - m - 1 > 0 {
        z = z.min(first_zero_of(|t| h.sn(t), r, step));
    }
    z
}

/// Constants of the integral-curvature tube estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub h: f64,
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub kappa: f64,
}

pub fn thm1_constants(n: usize, m: usize, p: f64, h: f64) -> Result<BoundConstants> {
    if n < 3 {
        return Err(GeomError::InvalidParameters(format!("n = {n} must be at least 3")));
    }
    if m == 0 || m + 1 >= n {
        return Err(GeomError::InvalidParameters(format!("m = {m} must satisfy 0 < m < n - 1 = {}", n - 1)));
    }
    if h > 0.0 || !h.is_finite() {
        return Err(GeomError::InvalidParameters(format!("H = {h} must be finite and ≤ 0")));
    }
    let k = m.min(n - m - 1);
    let nk = (n - k) as f64;
    if !(p > nk) || !p.is_finite() {
        return Err(GeomError::InvalidParameters(format!("p = {p} must exceed n - k = {nk}")));
    }
    let alpha = (nk - 1.0) / nk;
    let beta = 1.0 / (n - m - 1) as f64 - 1.0 / p;
    let delta = 4.0 * (nk - 1.0) + (4.0 / k as f64) * ((2.0 * p - 1.0) / (p - nk));
    let kappa = (delta * h.abs()).powf(alpha) / (2.0 * alpha);
    Ok(BoundConstants { n, m, p, h, k, alpha, beta, delta, kappa })
}

impl BoundConstants {
    /// w(r) of the tube estimate.
    pub fn w(&self, vol_sigma: f64, deficit_norm: f64, r: f64) -> f64 {
        let d = (self.n - self.m - 1) as f64;
        let lead = (self.alpha / d).powf(1.0 / (self.n - self.k - 1) as f64)
            * (sphere_volume(self.n - self.m - 1) * vol_sigma * r.powi((self.n - self.m) as i32)).powf(1.0 / d);
        lead + self.delta * deficit_norm.powf(1.0 - self.beta) * r * r
    }
}

/// Upper bound on vol(T(Σ, r)) for a closed minimal Σ given vol(Σ) and the
/// L^p norm of (ρ_k − H)_−.
pub fn thm1_bound(c: &BoundConstants, vol_sigma: f64, deficit_norm: f64, r: f64) -> f64 {
    let w = c.w(vol_sigma, deficit_norm, r);
    let d = (c.n - c.m - 1) as i32;
    let tail =
        if deficit_norm > 0.0 { 2f64.powf(c.p / c.alpha) * deficit_norm.powf(c.beta * c.p) * w.powf(c.p) } else { 0.0 };
    (w.powi(d) + tail) * (c.kappa * r.powf(2.0 * c.alpha)).exp()
}

/// Largest vol(Σ) lower bound δ such that the tube bound at radius `diameter`
/// with deficit `epsilon` does not exceed `v0`.
pub fn cheeger_delta(n: usize, m: usize, p: f64, h: f64, v0: f64, diameter: f64, epsilon: f64) -> Result<f64> {
    if !(v0 > 0.0) || !(diameter > 0.0) || !(epsilon >= 0.0) {
        return Err(GeomError::InvalidParameters(format!(
            "need v0 > 0, D > 0, ε ≥ 0 (got {v0}, {diameter}, {epsilon})"
        )));
    }
    let c = thm1_constants(n, m, p, h)?;
    let f = |vol: f64| thm1_bound(&c, vol, epsilon, diameter);
    let floor = f(0.0);
    if floor >= v0 {
        return Err(GeomError::Infeasible(format!(
            "bound at vol(Σ) → 0 is {floor} ≥ v0 = {v0}; ε = {epsilon} too large"
        )));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi) <= v0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(GeomError::Infeasible("bound does not reach v0".into()));
        }
    }
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= v0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Outcome of comparing a measured quantity against a bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub label: String,
    pub measured: f64,
    pub bound: f64,
    pub slack: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub equality: bool,
    pub error_estimate: f64,
    pub constants: Option<BoundConstants>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BoundReport {
    /// `measured ≤ bound` within `tolerance`; equality is flagged when the
    /// slack is within 10× the error estimate.
    pub fn new(label: impl Into<String>, measured: f64, bound: f64, tolerance: f64, error_estimate: f64) -> Self {
        let slack = bound - measured;
        Self {
            label: label.into(),
            measured,
            bound,
            slack,
            tolerance,
            passed: slack >= -tolerance,
            equality: slack.abs() <= 10.0 * error_estimate,
            error_estimate,
            constants: None,
            note: None,
        }
    }

    pub fn with_constants(mut self, c: BoundConstants) -> Self {
        self.constants = Some(c);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn sn_cs_branches() {
        assert_eq!(ModelCurvature(0.0).sn_cs(2.5), (2.5, 1.0));
        let (s, c) = ModelCurvature(1.0).sn_cs(PI / 2.0);
        assert_relative_eq!(s, 1.0, epsilon = 1e-15);
        assert!(c.abs() < 1e-15);
        let (s, c) = ModelCurvature(-1.0).sn_cs(1.0);
        assert_relative_eq!(s, 1.0f64.sinh(), epsilon = 1e-15);
        assert_relative_eq!(c, 1.0f64.cosh(), epsilon = 1e-15);
    }

    #[test]
    fn sn_cs_continuous_across_flat_switch() {
        for r in [0.3, 1.0, 2.0] {
            for h in [-2e-8, -0.9e-8, 0.9e-8, 2e-8] {
                let (s0, c0) = ModelCurvature(h).sn_cs(r);
                // series in H for small H, to first order
                assert!((s0 - (r - h * r.powi(3) / 6.0)).abs() < 1e-14);
                assert!((c0 - (1.0 - h * r * r / 2.0)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn model_shape_trace_examples() {
        let v = model_shape_trace(ModelCurvature(-1.0), 1, None, 1.0).unwrap();
        assert_relative_eq!(v, 1.0 / 1.0f64.tanh(), epsilon = 1e-14);
        let v = model_shape_trace(ModelCurvature(0.0), 2, Some(-1.0), 0.5).unwrap();
        assert_relative_eq!(v, -4.0, epsilon = 1e-14);
        let v = model_shape_trace(ModelCurvature(1.0), 3, Some(0.0), PI / 4.0).unwrap();
        assert_relative_eq!(v, -3.0, epsilon = 1e-14);
    }

    #[test]
    fn model_shape_trace_rejects_past_zero() {
        assert!(model_shape_trace(ModelCurvature(0.0), 1, Some(-1.0), 1.5).is_err());
        assert!(model_shape_trace(ModelCurvature(1.0), 1, None, 3.5).is_err());
        assert!(model_shape_trace(ModelCurvature(1.0), 1, Some(0.0), 2.0).is_err());
    }

    #[test]
    fn hk_integrand_examples() {
        assert_relative_eq!(hk_integrand(ModelCurvature(1.0), 3, 1, 0.0, PI / 4.0), 0.5, epsilon = 1e-15);
        assert_eq!(hk_integrand(ModelCurvature(0.0), 4, 1, 0.0, 2.0), 4.0);
        assert_eq!(hk_integrand(ModelCurvature(0.0), 3, 0, 7.0, 1.5), 2.25);
    }

    #[test]
    fn first_zero_examples() {
        assert_relative_eq!(first_zero(ModelCurvature(0.0), 4, 1, -1.0, 5.0), 1.0, max_relative = 1e-12);
        assert_relative_eq!(first_zero(ModelCurvature(1.0), 4, 1, 0.0, 2.0), PI / 2.0, max_relative = 1e-12);
        assert_eq!(first_zero(ModelCurvature(-1.0), 4, 1, 0.0, 3.0), 3.0);
        assert_eq!(first_zero(ModelCurvature(0.0), 4, 1, 0.3, 3.0), 3.0);
    }

    #[test]
    fn constants_examples() {
        let c = thm1_constants(4, 1, 4.0, 0.0).unwrap();
        assert_eq!(c.k, 1);
        assert_relative_eq!(c.alpha, 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(c.beta, 0.25, epsilon = 1e-15);
        assert_relative_eq!(c.delta, 36.0, epsilon = 1e-13);
        assert_eq!(c.kappa, 0.0);

        // k = 2, n - k = 3: α = 2/3, δ = 4·2 + (4/2)·(9/2) = 17
        let c = thm1_constants(5, 2, 5.0, 0.0).unwrap();
        assert_eq!(c.k, 2);
        assert_relative_eq!(c.alpha, 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(c.beta, 0.3, epsilon = 1e-15);
        assert_relative_eq!(c.delta, 17.0, epsilon = 1e-13);

        let c = thm1_constants(4, 1, 4.0, -1.0).unwrap();
        // 36^{2/3} / (4/3), evaluated independently
        assert_relative_eq!(c.kappa, 8.177_042_667_744_628, max_relative = 1e-12);
    }

    #[test]
    fn constants_reject_bad_parameters() {
        assert!(thm1_constants(4, 1, 3.0, 0.0).is_err());
        assert!(thm1_constants(4, 1, 4.0, 0.5).is_err());
        assert!(thm1_constants(4, 0, 4.0, 0.0).is_err());
        assert!(thm1_constants(4, 3, 4.0, 0.0).is_err());
        assert!(thm1_constants(2, 1, 4.0, 0.0).is_err());
    }

    #[test]
    fn thm1_bound_flat_reduction() {
        let c = thm1_constants(4, 1, 4.0, 0.0).unwrap();
        assert_relative_eq!(thm1_bound(&c, 2.0 * PI, 0.0, 0.5), PI * PI / 3.0, max_relative = 1e-13);
        assert_eq!(thm1_bound(&c, 2.0 * PI, 0.0, 0.0), 0.0);
    }

    #[test]
    fn thm1_bound_with_deficit_matches_high_precision_oracle() {
        // 40-digit evaluation of the same closed form (n=4, m=1, p=4, H=0,
        // vol Σ = 2π, norm 0.1, r = 0.5)
        let c = thm1_constants(4, 1, 4.0, 0.0).unwrap();
        assert_relative_eq!(c.w(2.0 * PI, 0.1, 0.5), 3.414_250_833_269_248, max_relative = 1e-13);
        assert_relative_eq!(thm1_bound(&c, 2.0 * PI, 0.1, 0.5), 881.341_489_342_176_7, max_relative = 1e-12);
    }

    #[test]
    fn cheeger_delta_examples() {
        let d = cheeger_delta(4, 1, 4.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(d, 3.0 / (4.0 * PI), max_relative = 1e-10);
        let d2 = cheeger_delta(4, 1, 4.0, 0.0, 2.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(d2, 2.0 * d, max_relative = 1e-10);
        assert!(matches!(cheeger_delta(4, 1, 4.0, 0.0, 1.0, 1.0, 10.0), Err(GeomError::Infeasible(_))));
    }

    #[test]
    fn report_pass_and_equality() {
        let r = BoundReport::new("x", 1.0, 1.0 + 1e-9, 1e-5, 1e-9);
        assert!(r.passed && r.equality);
        let r = BoundReport::new("x", 1.1, 1.0, 1e-5, 1e-9);
        assert!(!r.passed && !r.equality);
    }
}
