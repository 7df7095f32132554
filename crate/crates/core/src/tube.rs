//! Tube volumes, equidistant areas and tube-restricted curvature norms by
//! integration over the unit normal bundle.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::geometry::{rho_deficit_from, ChartManifold, FrameCurvature, RhoOptions};
use crate::quadrature::{pairwise_sum, random_unit_vector, sphere_volume, FiberRule, Rule1d};
use crate::ray::{RadialProfile, RaySolver, TransportState, DEFAULT_RTOL};
use crate::submanifolds::{frames_at, unit_normal_grid, EmbeddedSubmanifold, NormalFiberGrid};

fn default_nodes() -> usize {
    16
}
fn default_panels() -> usize {
    2
}
fn default_base() -> usize {
    16
}
fn default_rtol() -> f64 {
    DEFAULT_RTOL
}

/// Monte Carlo sampling of ν̂ (radial direction stays Gauss–Legendre).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSpec {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Gauss–Legendre nodes per radial panel.
    #[serde(default = "default_nodes")]
    pub nodes_per_panel: usize,
    #[serde(default = "default_panels")]
    pub panels: usize,
    /// Nodes per base-parameter axis.
    #[serde(default = "default_base")]
    pub base_resolution: usize,
    #[serde(default)]
    pub fiber: FiberRule,
    #[serde(default)]
    pub monte_carlo: Option<MonteCarloSpec>,
    #[serde(default = "default_rtol")]
    pub rtol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            nodes_per_panel: default_nodes(),
            panels: default_panels(),
            base_resolution: default_base(),
            fiber: FiberRule::default(),
            monte_carlo: None,
            rtol: DEFAULT_RTOL,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let fiber_ok = match self.fiber {
            FiberRule::Product { resolution } => resolution >= 1,
            FiberRule::MonteCarlo { samples, .. } => samples >= 1,
        };
        if self.nodes_per_panel < 2 || self.panels < 1 || self.base_resolution < 1 || !fiber_ok {
            return Err(GeomError::InvalidParameters(
                "quadrature counts must be positive (at least 2 radial nodes)".into(),
            ));
        }
        if self.monte_carlo.is_some_and(|mc| mc.samples < 2) {
            return Err(GeomError::InvalidParameters("Monte Carlo needs at least 2 samples".into()));
        }
        if !(self.rtol > 0.0 && self.rtol < 1e-2) {
            return Err(GeomError::InvalidParameters(format!("integrator tolerance {} out of range", self.rtol)));
        }
        Ok(())
    }
}

/// ∫_{T(Σ,r)} f by the product rule, with focal truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeIntegral {
    pub value: f64,
    /// Same integral with the half-order radial rule.
    pub coarse: f64,
    pub rays_used: usize,
    pub truncated_at_focal: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TubeVolumeResult {
    pub value: f64,
    pub error_estimate: f64,
    pub rays_used: usize,
    pub truncated_at_focal: Vec<bool>,
    /// r exceeds the declared injectivity radius (or none is declared), so
    /// the value may over-count overlapping normal geodesics.
    pub over_estimate: bool,
}

impl TubeVolumeResult {
    pub fn truncated_count(&self) -> usize {
        self.truncated_at_focal.iter().filter(|b| **b).count()
    }

    /// Compact flag string for tables.
    pub fn flags(&self) -> String {
        let mut f = Vec::new();
        let k = self.truncated_count();
        if k > 0 {
            f.push(format!("focal={k}"));
        }
        if self.over_estimate {
            f.push("over_estimate".to_string());
        }
        f.join(";")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

fn ray_failed(s: &[f64], coeffs: &[f64], e: GeomError) -> GeomError {
    GeomError::RayFailed { base: s.to_vec(), fiber: coeffs.to_vec(), source: Box::new(e) }
}

fn profile_sum(profile: &[(f64, TransportState)], f: &(impl Fn(&TransportState) -> Result<f64> + Sync)) -> Result<f64> {
    let mut acc = 0.0;
    for (w, st) in profile {
        let a = st.volume_density().max(0.0);
        if a == 0.0 {
            continue;
        }
        acc += w * f(st)? * a;
    }
    Ok(acc)
}

/// ∫₀^r ∫_ν̂ f(γ(t)) A(t,ξ) dξ dt over a prepared grid.
pub fn integrate_over_tube<F>(
    mfd: &ChartManifold,
    grid: &NormalFiberGrid,
    r: f64,
    spec: &QuadratureSpec,
    f: F,
) -> Result<TubeIntegral>
where
    F: Fn(&TransportState) -> Result<f64> + Sync,
{
    spec.validate()?;
    if !(r >= 0.0 && r.is_finite()) {
        return Err(GeomError::InvalidParameters(format!("radius {r} must be finite and nonnegative")));
    }
    let samples = grid.samples();
    let per_ray: Result<Vec<(f64, f64, bool)>> = samples
        .par_iter()
        .map(|smp| {
            let frames = &grid.base[smp.base].frames;
            let coeffs = &grid.fiber[smp.fiber].0;
            let wrap = |e| ray_failed(&frames.s, coeffs, e);
            let solver = RaySolver::new(mfd, frames, &smp.xi).map_err(wrap)?.with_rtol(spec.rtol);
            let prof: RadialProfile = solver.radial_profile(r, spec.nodes_per_panel, spec.panels).map_err(wrap)?;
            let fine = profile_sum(&prof.fine, &f).map_err(wrap)?;
            let coarse = profile_sum(&prof.coarse, &f).map_err(wrap)?;
            Ok((smp.weight * fine, smp.weight * coarse, prof.truncated()))
        })
        .collect();
    let per_ray = per_ray?;
    let fine: Vec<f64> = per_ray.iter().map(|p| p.0).collect();
    let coarse: Vec<f64> = per_ray.iter().map(|p| p.1).collect();
    Ok(TubeIntegral {
        value: pairwise_sum(&fine),
        coarse: pairwise_sum(&coarse),
        rays_used: per_ray.len(),
        truncated_at_focal: per_ray.iter().map(|p| p.2).collect(),
    })
}

fn beyond_validity(mfd: &ChartManifold, r: f64) -> bool {
    mfd.volume_validity_radius.is_none_or(|v| r > v + 1e-12)
}

/// vol T(Σ, r) on a prepared grid.
pub fn tube_volume_on(
    mfd: &ChartManifold,
    grid: &NormalFiberGrid,
    r: f64,
    spec: &QuadratureSpec,
) -> Result<TubeVolumeResult> {
    let ti = integrate_over_tube(mfd, grid, r, spec, |_| Ok(1.0))?;
    Ok(TubeVolumeResult {
        value: ti.value,
        error_estimate: (ti.value - ti.coarse).abs() + spec.rtol * ti.value.abs(),
        rays_used: ti.rays_used,
        truncated_at_focal: ti.truncated_at_focal,
        over_estimate: beyond_validity(mfd, r),
    })
}

pub fn tube_volume(
    mfd: &ChartManifold,
    sigma: &EmbeddedSubmanifold,
    r: f64,
    spec: &QuadratureSpec,
) -> Result<TubeVolumeResult> {
    spec.validate()?;
    let grid = unit_normal_grid(sigma, mfd, spec.base_resolution, &spec.fiber)?;
    tube_volume_on(mfd, &grid, r, spec)
}

/// v(t) = ∫_ν̂ A(t, ξ) dξ, with A = 0 past the focal time.
pub fn equidistant_area_on(mfd: &ChartManifold, grid: &NormalFiberGrid, t: f64, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(GeomError::InvalidParameters(format!("time {t} must be finite and nonnegative")));
    }
    let samples = grid.samples();
    let terms: Result<Vec<f64>> = samples
        .par_iter()
        .map(|smp| {
            let frames = &grid.base[smp.base].frames;
            let wrap = |e| ray_failed(&frames.s, &grid.fiber[smp.fiber].0, e);
            let solver = RaySolver::new(mfd, frames, &smp.xi).map_err(wrap)?.with_rtol(spec.rtol);
            if t == 0.0 {
                return Ok(smp.weight * solver.initial_state().map_err(wrap)?.volume_density());
            }
            if solver.focal_distance(t).map_err(wrap)?.is_some_and(|f| f < t) {
                return Ok(0.0);
            }
            let st = solver.states_at(&[t]).map_err(wrap)?;
            Ok(smp.weight * st[0].volume_density().max(0.0))
        })
        .collect();
    Ok(pairwise_sum(&terms?))
}

pub fn equidistant_area(
    mfd: &ChartManifold,
    sigma: &EmbeddedSubmanifold,
    t: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    spec.validate()?;
    let grid = unit_normal_grid(sigma, mfd, spec.base_resolution, &spec.fiber)?;
    equidistant_area_on(mfd, &grid, t, spec)
}

/// ‖(ρ_k − H)_−‖_{p} on the tube T(Σ, t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TubeDeficit {
    pub value: f64,
    pub integral: f64,
    pub error_estimate: f64,
}

fn check_deficit_args(n: usize, k: usize, p: f64) -> Result<()> {
    if !(p >= 1.0) {
        return Err(GeomError::InvalidParameters(format!("p = {p} < 1")));
    }
    if k == 0 || k >= n {
        return Err(GeomError::InvalidParameters(format!("k = {k} outside 1..{}", n - 1)));
    }
    Ok(())
}

fn deficit_integrand<'a>(
    mfd: &'a ChartManifold,
    k: usize,
    h: f64,
    p: f64,
    opts: &'a RhoOptions,
) -> impl Fn(&TransportState) -> Result<f64> + Sync + 'a {
    move |st: &TransportState| {
        let r = FrameCurvature::at(mfd, &st.x)?;
        Ok(rho_deficit_from(&r, k, h, opts)?.powf(p))
    }
}

#[allow(clippy::too_many_arguments)]
pub fn tube_lp_deficit_on(
    mfd: &ChartManifold,
    grid: &NormalFiberGrid,
    t: f64,
    k: usize,
    h: f64,
    p: f64,
    spec: &QuadratureSpec,
    opts: &RhoOptions,
) -> Result<TubeDeficit> {
    check_deficit_args(mfd.dim(), k, p)?;
    let ti = integrate_over_tube(mfd, grid, t, spec, deficit_integrand(mfd, k, h, p, opts))?;
    let value = ti.value.max(0.0).powf(1.0 / p);
    let error_estimate = (value - ti.coarse.max(0.0).powf(1.0 / p)).abs();
    Ok(TubeDeficit { value, integral: ti.value, error_estimate })
}

#[allow(clippy::too_many_arguments)]
pub fn tube_lp_deficit(
    mfd: &ChartManifold,
    sigma: &EmbeddedSubmanifold,
    t: f64,
    k: usize,
    h: f64,
    p: f64,
    spec: &QuadratureSpec,
    opts: &RhoOptions,
) -> Result<TubeDeficit> {
    spec.validate()?;
    let grid = unit_normal_grid(sigma, mfd, spec.base_resolution, &spec.fiber)?;
    tube_lp_deficit_on(mfd, &grid, t, k, h, p, spec, opts)
}

/// ∫_{T(Σ,r)} f with base points and normal directions drawn uniformly at
/// random; the radial integral along each ray stays Gauss–Legendre.
pub fn integrate_over_tube_mc<F>(
    mfd: &ChartManifold,
    sigma: &EmbeddedSubmanifold,
    r: f64,
    spec: &QuadratureSpec,
    mc: MonteCarloSpec,
    f: F,
) -> Result<MonteCarloEstimate>
where
    F: Fn(&TransportState) -> Result<f64> + Sync,
{
    spec.validate()?;
    if mc.samples < 2 {
        return Err(GeomError::InvalidParameters("Monte Carlo needs at least 2 samples".into()));
    }
    let dom = &sigma.domain;
    if dom.lo.iter().chain(&dom.hi).any(|v| !v.is_finite()) {
        return Err(GeomError::InvalidParameters("Monte Carlo needs a bounded parameter domain".into()));
    }
    let n = mfd.dim();
    let fiber_dim = n - sigma.m;
    let box_volume: f64 = dom.lo.iter().zip(&dom.hi).map(|(a, b)| b - a).product();
    let scale = box_volume * sphere_volume(fiber_dim - 1);

    let mut rng = crate::rng(mc.seed);
    let draws: Vec<(Vec<f64>, Vec<f64>)> = (0..mc.samples)
        .map(|_| {
            let s: Vec<f64> = dom.lo.iter().zip(&dom.hi).map(|(a, b)| a + (b - a) * rng.random::<f64>()).collect();
            (s, random_unit_vector(&mut rng, fiber_dim))
        })
        .collect();

    let values: Result<Vec<f64>> = draws
        .par_iter()
        .map(|(s, c)| {
            let wrap = |e| ray_failed(s, c, e);
            let frames = frames_at(sigma, mfd, s).map_err(wrap)?;
            let xi = frames.normal_vector(c);
            let solver = RaySolver::new(mfd, &frames, &xi).map_err(wrap)?.with_rtol(spec.rtol);
            let prof = solver.radial_profile(r, spec.nodes_per_panel, spec.panels).map_err(wrap)?;
            Ok(scale * frames.area_element * profile_sum(&prof.fine, &f).map_err(wrap)?)
        })
        .collect();
    let values = values?;
    let count = values.len() as f64;
    let mean = pairwise_sum(&values) / count;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let var = pairwise_sum(&dev) / (count - 1.0);
    Ok(MonteCarloEstimate { value: mean, std_error: (var / count).sqrt(), samples: values.len() })
}

pub fn tube_volume_mc(
    mfd: &ChartManifold,
    sigma: &EmbeddedSubmanifold,
    r: f64,
    spec: &QuadratureSpec,
    mc: MonteCarloSpec,
) -> Result<MonteCarloEstimate> {
    integrate_over_tube_mc(mfd, sigma, r, spec, mc, |_| Ok(1.0))
}

/// Monte Carlo estimate of ∫_{T(Σ,t)} (ρ_k − H)_−^p (not its p-th root).
#[allow(clippy::too_many_arguments)]
pub fn tube_deficit_integral_mc(
    mfd: &ChartManifold,
    sigma: &EmbeddedSubmanifold,
    t: f64,
    k: usize,
    h: f64,
    p: f64,
    spec: &QuadratureSpec,
    mc: MonteCarloSpec,
    opts: &RhoOptions,
) -> Result<MonteCarloEstimate> {
    check_deficit_args(mfd.dim(), k, p)?;
    integrate_over_tube_mc(mfd, sigma, t, spec, mc, deficit_integrand(mfd, k, h, p, opts))
}

/// Composite Gauss–Legendre rule on [0, r] matching `spec`'s radial rule.
pub fn radial_rule(r: f64, spec: &QuadratureSpec) -> Rule1d {
    Rule1d::composite_gauss(0.0, r, spec.nodes_per_panel, spec.panels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Bump, ManifoldSpec};
    use crate::submanifolds::SubmanifoldSpec;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn build(amb: &ManifoldSpec, sub: SubmanifoldSpec) -> (ChartManifold, EmbeddedSubmanifold) {
        (amb.build().unwrap(), sub.build(amb).unwrap())
    }

    fn flat_t4_circle() -> (ChartManifold, EmbeddedSubmanifold) {
        build(
            &ManifoldSpec::FlatTorus { dim: 4, side: 2.0 * PI, bump: None },
            SubmanifoldSpec::ClosedGeodesic { axis: 0, offset: None },
        )
    }

    fn coarse_spec() -> QuadratureSpec {
        QuadratureSpec { base_resolution: 4, fiber: FiberRule::Product { resolution: 8 }, ..Default::default() }
    }

    #[test]
    fn flat_tube_volume() {
        let (m, s) = flat_t4_circle();
        let v = tube_volume(&m, &s, 0.5, &coarse_spec()).unwrap();
        assert!((v.value - PI * PI / 3.0).abs() < 1e-9, "{v:?}");
        assert!(v.error_estimate < 1e-8);
        assert_eq!(tube_volume(&m, &s, 0.0, &coarse_spec()).unwrap().value, 0.0);
        let area = equidistant_area(&m, &s, 0.5, &coarse_spec()).unwrap();
        assert!((area - 2.0 * PI * PI).abs() < 1e-9);
    }

    #[test]
    fn great_circle_tube_volume() {
        let amb = ManifoldSpec::Sphere { dim: 3, radius: 1.0 };
        let (m, s) = build(&amb, SubmanifoldSpec::GreatCircle);
        let spec =
            QuadratureSpec { base_resolution: 8, fiber: FiberRule::Product { resolution: 12 }, ..Default::default() };
        let v = tube_volume(&m, &s, FRAC_PI_4, &spec).unwrap();
        assert!((v.value - PI * PI).abs() < 1e-6 * PI * PI, "{v:?}");
        let area = equidistant_area(&m, &s, FRAC_PI_4, &spec).unwrap();
        assert!((area - 2.0 * PI * PI).abs() < 1e-6);
        let full = tube_volume(&m, &s, FRAC_PI_2, &spec).unwrap();
        assert!((full.value - 2.0 * PI * PI).abs() < 1e-4 * 2.0 * PI * PI, "{full:?}");
    }

    #[test]
    fn doubling_sigma_doubles_flat_volume() {
        let a = build(
            &ManifoldSpec::FlatTorus { dim: 4, side: 2.0 * PI, bump: None },
            SubmanifoldSpec::ClosedGeodesic { axis: 0, offset: None },
        );
        let b = build(
            &ManifoldSpec::FlatTorus { dim: 4, side: 4.0 * PI, bump: None },
            SubmanifoldSpec::ClosedGeodesic { axis: 0, offset: None },
        );
        let va = tube_volume(&a.0, &a.1, 0.3, &coarse_spec()).unwrap().value;
        let vb = tube_volume(&b.0, &b.1, 0.3, &coarse_spec()).unwrap().value;
        assert!((vb / va - 2.0).abs() < 1e-12);
    }

    #[test]
    fn flat_deficit_is_zero() {
        let (m, s) = flat_t4_circle();
        let d = tube_lp_deficit(&m, &s, 0.5, 1, 0.0, 2.0, &coarse_spec(), &RhoOptions::default()).unwrap();
        assert_eq!(d.value, 0.0);
    }

    #[test]
    fn constant_curvature_deficit_reduces_to_volume() {
        let amb = ManifoldSpec::Sphere { dim: 3, radius: 2.0 };
        let (m, s) = build(&amb, SubmanifoldSpec::GreatCircle);
        let spec =
            QuadratureSpec { base_resolution: 6, fiber: FiberRule::Product { resolution: 8 }, ..Default::default() };
        let opts = RhoOptions { grid: 64, starts: 1, rounds: 1 };
        let t = 0.3;
        let d = tube_lp_deficit(&m, &s, t, 1, 1.0, 2.0, &spec, &opts).unwrap();
        let v = tube_volume(&m, &s, t, &spec).unwrap().value;
        assert!((d.value - (0.5625 * v).sqrt()).abs() < 1e-9, "{} vs {}", d.value, (0.5625 * v).sqrt());
    }

    #[test]
    fn monte_carlo_agrees_with_product_rule() {
        let amb = ManifoldSpec::FlatTorus {
            dim: 3,
            side: 2.0 * PI,
            bump: Some(Bump { amplitude: 0.1, radius: 1.2, center: vec![PI, PI, PI] }),
        };
        let (m, s) = build(&amb, SubmanifoldSpec::ClosedGeodesic { axis: 0, offset: Some(vec![0.0, PI, PI]) });
        let spec =
            QuadratureSpec { base_resolution: 32, fiber: FiberRule::Product { resolution: 32 }, ..Default::default() };
        let q = tube_volume(&m, &s, 0.6, &spec).unwrap();
        let mc = tube_volume_mc(&m, &s, 0.6, &spec, MonteCarloSpec { samples: 512, seed: 7 }).unwrap();
        assert!((q.value - mc.value).abs() < 3.0 * mc.std_error + q.error_estimate, "{q:?} {mc:?}");
        let flat = 2.0 * PI * PI * 0.36;
        assert!((q.value - flat).abs() > 1e-4, "bump should change the volume");
    }

    #[test]
    fn rejects_bad_spec() {
        let (m, s) = flat_t4_circle();
        let spec = QuadratureSpec { panels: 0, ..Default::default() };
        assert!(tube_volume(&m, &s, 0.5, &spec).is_err());
        assert!(tube_volume(&m, &s, -1.0, &coarse_spec()).is_err());
    }
}
