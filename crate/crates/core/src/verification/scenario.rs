//! Scenario configuration and the geometric context built from it.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::geometry::{rho_k_search, ChartManifold, FrameCurvature, ManifoldSpec, RhoOptions};
use crate::ray::RaySolver;
use crate::submanifolds::{unit_normal_grid, EmbeddedSubmanifold, NormalFiberGrid, NormalSample, SubmanifoldSpec};
use crate::tube::QuadratureSpec;

/// Minimum number of points at which a curvature precondition is sampled.
pub const CERTIFICATION_SAMPLES: usize = 512;

/// Largest |η| accepted as minimal.
pub const MINIMALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    HessianComparison,
    FocalRadius,
    HkBound,
    IntegralBound,
    Lemmas,
    Structural,
}

impl CheckKind {
    pub const ALL: [CheckKind; 6] = [
        CheckKind::HessianComparison,
        CheckKind::FocalRadius,
        CheckKind::HkBound,
        CheckKind::IntegralBound,
        CheckKind::Lemmas,
        CheckKind::Structural,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::HessianComparison => "hessian_comparison",
            CheckKind::FocalRadius => "focal_radius",
            CheckKind::HkBound => "hk_bound",
            CheckKind::IntegralBound => "integral_bound",
            CheckKind::Lemmas => "lemmas",
            CheckKind::Structural => "structural",
        }
    }
}

/// Facts asserted by the scenario author. Unset entries fall back to what the
/// submanifold construction declares.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredFacts {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimal: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub totally_geodesic: Option<bool>,
    /// Radius below which the normal exponential map is injective on the
    /// tube, so quadrature volumes are exact rather than over-estimates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validity_radius: Option<f64>,
    /// Constant value of ρ_k for homogeneous ambients.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_k: Option<f64>,
}

fn default_checks() -> Vec<CheckKind> {
    CheckKind::ALL.to_vec()
}
fn default_tolerance() -> f64 {
    1e-5
}
fn default_rays() -> usize {
    64
}
fn default_deficit_nodes() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub manifold: ManifoldSpec,
    pub submanifold: SubmanifoldSpec,
    /// Defaults to min{m, n−m−1}, or n−1 when that minimum is 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Curvature constant H. When absent, the sampled minimum of ρ_k/k is
    /// used as a certified lower bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Integral exponent; defaults to n−k+1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default)]
    pub radii: Vec<f64>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub facts: DeclaredFacts,
    #[serde(default = "default_checks")]
    pub checks: Vec<CheckKind>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    /// Exponents for the two-mean estimate; defaults to n−k+1 and 2(n−k).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lemma_p: Vec<f64>,
    /// Rays sampled by the per-ray checks.
    #[serde(default = "default_rays")]
    pub rays: usize,
    /// Nodes per axis for the global deficit norm.
    #[serde(default = "default_deficit_nodes")]
    pub deficit_nodes: usize,
    /// Test hook: multiplies every measured tube volume.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inflate_volume: Option<f64>,
    /// Directory for report files; the command line takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl Scenario {
    pub fn new(name: impl Into<String>, manifold: ManifoldSpec, submanifold: SubmanifoldSpec) -> Self {
        Scenario {
            name: name.into(),
            manifold,
            submanifold,
            k: None,
            h: None,
            p: None,
            radii: Vec::new(),
            quadrature: QuadratureSpec::default(),
            facts: DeclaredFacts::default(),
            checks: default_checks(),
            tolerance: default_tolerance(),
            seed: 0,
            lemma_p: Vec::new(),
            rays: default_rays(),
            deficit_nodes: default_deficit_nodes(),
            inflate_volume: None,
            out: None,
        }
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Reseeds every random component from one seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        if let Some(mc) = self.quadrature.monte_carlo.as_mut() {
            mc.seed = seed;
        }
        if let crate::quadrature::FiberRule::MonteCarlo { seed: s, .. } = &mut self.quadrature.fiber {
            *s = seed;
        }
        self
    }

    pub fn default_k(n: usize, m: usize) -> usize {
        let k = m.min(n - m - 1);
        if k == 0 {
            n - 1
        } else {
            k
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(GeomError::InvalidParameters(format!("scenario {}: {msg}", self.name)));
        if self.name.is_empty() {
            return bad("empty name".into());
        }
        if let Some(r) = self.radii.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return bad(format!("radius {r} must be finite and nonnegative"));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return bad(format!("tolerance {} must be positive", self.tolerance));
        }
        if self.rays == 0 {
            return bad("rays must be positive".into());
        }
        if self.h.is_some_and(|h| !h.is_finite()) {
            return bad("h must be finite".into());
        }
        if self.inflate_volume.is_some_and(|f| !(f > 0.0 && f.is_finite())) {
            return bad("inflate_volume must be positive".into());
        }
        self.quadrature.validate()
    }
}

/// Sampled minimum of ρ_k over points of the tube.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoSamples {
    pub count: usize,
    pub min_rho_k: f64,
    pub at: Vec<f64>,
}

/// Outcome of sampling a curvature lower bound Ric_k ≥ kH.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    pub samples: usize,
    pub k: usize,
    pub h: f64,
    pub min_rho_k: f64,
    /// min ρ_k − kH over the samples.
    pub margin: f64,
    /// min of tr_W R_γ̇ − kH over the rays of the check, when it uses rays.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ray_margin: Option<f64>,
    pub tolerance: f64,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// A scenario with its manifold, submanifold and normal grid built.
pub struct Context {
    pub scenario: Scenario,
    pub mfd: ChartManifold,
    pub sigma: EmbeddedSubmanifold,
    pub grid: NormalFiberGrid,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub p: f64,
    rho: OnceLock<std::result::Result<RhoSamples, GeomError>>,
}

impl Context {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let mut mfd = scenario.manifold.build()?;
        if let Some(v) = scenario.facts.validity_radius {
            mfd = mfd.with_validity_radius(v);
        }
        let mut sigma = scenario.submanifold.build(&scenario.manifold)?;
        if let Some(b) = scenario.facts.minimal {
            sigma.minimal_declared = b;
        }
        if let Some(b) = scenario.facts.totally_geodesic {
            sigma.totally_geodesic_declared = b;
        }
        let n = mfd.dim();
        let m = sigma.m;
        let k = scenario.k.unwrap_or_else(|| Scenario::default_k(n, m));
        if k == 0 || k >= n {
            return Err(GeomError::InvalidParameters(format!("k = {k} outside 1..{}", n - 1)));
        }
        let p = scenario.p.unwrap_or((n - k + 1) as f64);
        let q = &scenario.quadrature;
        let grid = unit_normal_grid(&sigma, &mfd, q.base_resolution, &q.fiber)?;
        Ok(Context { scenario: scenario.clone(), mfd, sigma, grid, n, m, k, p, rho: OnceLock::new() })
    }

    pub fn name(&self) -> &str {
        &self.scenario.name
    }

    pub fn tolerance(&self) -> f64 {
        self.scenario.tolerance
    }

    /// Farthest distance from Σ the checks look at.
    pub fn reach(&self) -> f64 {
        if self.scenario.radii.is_empty() {
            return 1.0;
        }
        self.scenario.radii.iter().copied().fold(0.0, f64::max)
    }

    pub fn lemma_exponents(&self) -> Vec<f64> {
        if self.scenario.lemma_p.is_empty() {
            let nk = (self.n - self.k) as f64;
            vec![nk + 1.0, 2.0 * nk]
        } else {
            self.scenario.lemma_p.clone()
        }
    }

    pub fn inflation(&self) -> f64 {
        self.scenario.inflate_volume.unwrap_or(1.0)
    }

    pub fn minimal(&self) -> bool {
        self.grid.max_mean_curvature() <= MINIMALITY_TOL
    }

    /// Evenly spaced subset of the normal grid.
    pub fn sample_rays(&self, count: usize) -> Vec<NormalSample> {
        let all = self.grid.samples();
        if all.len() <= count {
            return all;
        }
        (0..count).map(|i| all[i * all.len() / count].clone()).collect()
    }

    pub fn solver(&self, smp: &NormalSample) -> Result<RaySolver<'_>> {
        let frames = &self.grid.base[smp.base].frames;
        Ok(RaySolver::new(&self.mfd, frames, &smp.xi)?.with_rtol(self.scenario.quadrature.rtol))
    }

    /// ρ_k sampled at no fewer than 512 points along rays of the tube.
    pub fn rho_samples(&self) -> Result<&RhoSamples> {
        self.rho.get_or_init(|| self.sample_rho()).as_ref().map_err(Clone::clone)
    }

    fn sample_rho(&self) -> Result<RhoSamples> {
        let rays = self.sample_rays(64);
        let per_ray = CERTIFICATION_SAMPLES.div_ceil(rays.len()).max(2);
        let reach = self.reach();
        let times: Vec<f64> = (0..per_ray).map(|i| reach * i as f64 / (per_ray - 1) as f64).collect();
        let opts = RhoOptions::default();
        let rho_at =
            |x: &[f64]| -> Result<f64> { Ok(rho_k_search(&FrameCurvature::at(&self.mfd, x)?, self.k, &opts)?.value) };
        let per_ray: Result<Vec<(usize, f64, Vec<f64>)>> = rays
            .par_iter()
            .map(|smp| {
                let solver = self.solver(smp)?;
                let points: Vec<Vec<f64>> = solver.states_at(&times)?.into_iter().map(|st| st.x).collect();
                let values: Vec<f64> = points.iter().map(|x| rho_at(x)).collect::<Result<_>>()?;
                let i = argmin(&values);
                let mut best = (values[i], points[i].clone());
                let mut count = values.len();
                if reach > 0.0 {
                    // Refine between the neighbours of the worst grid time.
                    let lo = times[i.saturating_sub(1)];
                    let hi = times[(i + 1).min(per_ray - 1)];
                    let eval = |t: f64| -> Result<(f64, Vec<f64>)> {
                        let x = solver.states_at(&[t])?.remove(0).x;
                        Ok((rho_at(&x)?, x))
                    };
                    let (found, evals) = golden_section(eval, lo, hi, 1e-3 * reach)?;
                    count += evals;
                    if found.0 < best.0 {
                        best = found;
                    }
                }
                Ok((count, best.0, best.1))
            })
            .collect();
        let per_ray = per_ray?;
        let values: Vec<f64> = per_ray.iter().map(|r| r.1).collect();
        let i = argmin(&values);
        Ok(RhoSamples { count: per_ray.iter().map(|r| r.0).sum(), min_rho_k: values[i], at: per_ray[i].2.clone() })
    }

    /// The scenario's H, or the certified sample bound min ρ_k/k.
    pub fn resolved_h(&self) -> Result<f64> {
        match self.scenario.h {
            Some(h) => Ok(h),
            None => Ok(self.rho_samples()?.min_rho_k / self.k as f64),
        }
    }

    /// Samples Ric_k ≥ kH on the tube.
    pub fn certify(&self, h: f64) -> Result<Certification> {
        let rho = self.rho_samples()?;
        let kh = self.k as f64 * h;
        let margin = rho.min_rho_k - kh;
        let tolerance = self.tolerance() * kh.abs().max(1.0);
        let mut holds = margin >= -tolerance;
        let mut note = None;
        if let Some(declared) = self.scenario.facts.rho_k {
            if (rho.min_rho_k - declared).abs() > tolerance {
                holds = false;
                note = Some(format!("declared rho_k {declared} disagrees with sampled minimum {}", rho.min_rho_k));
            }
        }
        if !holds && note.is_none() {
            note = Some(format!("rho_k = {} < kH = {kh} at {:?}", rho.min_rho_k, rho.at));
        }
        Ok(Certification {
            samples: rho.count,
            k: self.k,
            h,
            min_rho_k: rho.min_rho_k,
            margin,
            ray_margin: None,
            tolerance,
            holds,
            note,
        })
    }
}

fn argmin(values: &[f64]) -> usize {
    values.iter().enumerate().fold(0, |best, (i, v)| if *v < values[best] { i } else { best })
}

/// Golden-section minimisation of f on [lo, hi]; returns the smallest value
/// seen with its payload, and the number of evaluations.
fn golden_section<T>(
    f: impl Fn(f64) -> Result<(f64, T)>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<((f64, T), usize)> {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut evals = 2;
    while hi - lo > tol {
        if fc.0 <= fd.0 {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = f(d)?;
        }
        evals += 1;
    }
    Ok((if fc.0 <= fd.0 { fc } else { fd }, evals))
}
