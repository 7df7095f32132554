//! Each comparison theorem and lemma executed as a numerical check.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::report::{CheckReport, Status};
use super::scenario::{Certification, CheckKind, Context, MINIMALITY_TOL};
use crate::error::{GeomError, Result};
use crate::geometry::{lp_deficit_norm, DeficitRegion, RhoOptions};
use crate::linalg;
use crate::model_kernels::{
    first_zero, hk_integrand, model_shape_trace, thm1_bound, thm1_constants, BoundConstants, BoundReport,
    ModelCurvature,
};
use crate::quadrature::{pairwise_sum, Rule1d};
use crate::ray::{TransportState, FOCAL_TOL};
use crate::submanifolds::NormalSample;
use crate::tube::{tube_lp_deficit_on, tube_volume_mc, tube_volume_on};

/// Tolerance on the finite-difference residual of J″ ≤ −(Ric_m/m)J.
pub const JACOBI_RESIDUAL_TOL: f64 = 1e-4;
pub const RICCATI_RESIDUAL_TOL: f64 = 1e-5;
pub const DENSITY_RESIDUAL_TOL: f64 = 1e-6;
pub const WRONSKIAN_TOL: f64 = 1e-8;
pub const TAYLOR_TOL: f64 = 1e-3;
/// Slack within which the focal radius counts as attained.
pub const FOCAL_EQUALITY_TOL: f64 = 1e-6;

pub fn run_check(ctx: &Context, kind: CheckKind) -> CheckReport {
    let out = match kind {
        CheckKind::HessianComparison => check_hessian_comparison(ctx),
        CheckKind::FocalRadius => check_focal_radius(ctx),
        CheckKind::HkBound => check_hk_bound(ctx),
        CheckKind::IntegralBound => check_integral_bound(ctx),
        CheckKind::Lemmas => check_ray_lemmas(ctx),
        CheckKind::Structural => check_structural(ctx),
    };
    out.unwrap_or_else(|e| CheckReport::new(ctx.name(), kind, Status::Error).with_message(e.to_string()))
}

fn violation(ctx: &Context, kind: CheckKind, cert: Option<Certification>, msg: impl Into<String>) -> CheckReport {
    let mut r = CheckReport::new(ctx.name(), kind, Status::PreconditionViolation).with_message(msg);
    r.certification = cert;
    r
}

fn finish(
    ctx: &Context,
    kind: CheckKind,
    cert: Option<Certification>,
    reports: Vec<BoundReport>,
    failed: bool,
) -> CheckReport {
    let status = if failed { Status::Fail } else { Status::Pass };
    let mut r = CheckReport::new(ctx.name(), kind, status);
    r.certification = cert;
    r.reports = reports;
    r
}

fn any_failed(reports: &[BoundReport]) -> bool {
    reports.iter().any(|r| !r.passed)
}

/// Report for a residual that must stay below `limit`; never an equality.
fn residual_report(label: &str, value: f64, limit: f64) -> BoundReport {
    let mut r = BoundReport::new(label, value, limit, 0.0, 0.0);
    r.equality = false;
    r
}

/// Times t_end·i/count for i = 1..=count.
fn time_grid(t_end: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|i| t_end * i as f64 / count as f64).collect()
}

/// Random k-dimensional subspace of R^{dim} as orthonormal columns.
fn random_subspace<R: Rng>(rng: &mut R, dim: usize, k: usize, offset: usize, total: usize) -> Vec<Vec<f64>> {
    let a = DMatrix::from_fn(dim, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = a.qr().q();
    (0..k)
        .map(|c| {
            let mut v = vec![0.0; total];
            for i in 0..dim {
                v[offset + i] = q[(i, c)];
            }
            v
        })
        .collect()
}

fn unit_block(start: usize, k: usize, total: usize) -> Vec<Vec<f64>> {
    (start..start + k)
        .map(|i| {
            let mut v = vec![0.0; total];
            v[i] = 1.0;
            v
        })
        .collect()
}

fn columns(w: &[Vec<f64>]) -> DMatrix<f64> {
    let d = w.first().map_or(0, Vec::len);
    DMatrix::from_fn(d, w.len(), |i, c| w[c][i])
}

/// End of the usable part of a ray: `reach`, or `fraction` of the way to the
/// first focal point when that comes earlier.
fn usable_end(ctx: &Context, smp: &NormalSample, fraction: f64) -> Result<f64> {
    let reach = ctx.reach();
    // Look slightly past the reach so a focal point sitting on it is seen.
    let focal = ctx.solver(smp)?.focal_distance(1.05 * reach)?;
    Ok(focal.map_or(reach, |f| reach.min(fraction * f)))
}

// ---------------------------------------------------------------------------
// Hessian comparison

#[derive(Debug, Clone, Copy, PartialEq)]
enum Branch {
    Tangential,
    TangentialRandom,
    Normal,
    Generic,
}

impl Branch {
    const ALL: [Branch; 4] = [Branch::Tangential, Branch::TangentialRandom, Branch::Normal, Branch::Generic];

    fn label(self) -> &'static str {
        match self {
            Branch::Tangential => "hessian_tangential",
            Branch::TangentialRandom => "hessian_tangential_random",
            Branch::Normal => "hessian_normal",
            Branch::Generic => "hessian_generic",
        }
    }
}

struct Subspace {
    branch: Branch,
    w: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
struct HessianSample {
    branch: usize,
    ray: usize,
    t: f64,
    measured: f64,
    bound: f64,
    err: f64,
    hypothesis: f64,
}

fn subspaces_for_ray<R: Rng>(rng: &mut R, m: usize, d: usize, k: usize) -> Vec<Subspace> {
    let mut out = Vec::new();
    if m >= k {
        out.push(Subspace { branch: Branch::Tangential, w: unit_block(0, k, d) });
        if m > k {
            out.push(Subspace { branch: Branch::TangentialRandom, w: random_subspace(rng, m, k, 0, d) });
        }
    }
    if d - m >= k {
        out.push(Subspace { branch: Branch::Normal, w: unit_block(m, k, d) });
    }
    if k < d {
        out.push(Subspace { branch: Branch::Generic, w: random_subspace(rng, d, k, 0, d) });
    }
    out
}

pub fn check_hessian_comparison(ctx: &Context) -> Result<CheckReport> {
    let kind = CheckKind::HessianComparison;
    let h = ctx.resolved_h()?;
    let mut cert = ctx.certify(h)?;
    let (k, m, d) = (ctx.k, ctx.m, ctx.n - 1);
    let model = ModelCurvature(h);
    let rays = ctx.sample_rays(ctx.scenario.rays);
    let mut rng = crate::rng(ctx.scenario.seed);
    let spaces: Vec<Vec<Subspace>> = rays.iter().map(|_| subspaces_for_ray(&mut rng, m, d, k)).collect();
    let rtol = ctx.scenario.quadrature.rtol;

    let per_ray: Result<Vec<Vec<HessianSample>>> = rays
        .par_iter()
        .zip(&spaces)
        .enumerate()
        .map(|(ri, (smp, spaces))| {
            let t_end = usable_end(ctx, smp, 0.95)?;
            let times = time_grid(t_end, 20);
            let solver = ctx.solver(smp)?;
            let jp0 = solver.initial_state()?.jp;
            let states = solver.states_at(&times)?;
            let rough = solver.clone().with_rtol(rtol * 100.0).states_at(&times)?;
            let mut out = Vec::new();
            for (si, sp) in spaces.iter().enumerate() {
                let cols = columns(&sp.w);
                let w0 = match sp.branch {
                    Branch::Tangential | Branch::TangentialRandom => {
                        Some(linalg::partial_trace(&jp0, &cols) / k as f64)
                    }
                    _ => None,
                };
                for (st, st2) in states.iter().zip(&rough) {
                    let measured = st.partial_trace_shape(&sp.w)?;
                    let bound = model_shape_trace(model, k, w0, st.t).map_err(|e| {
                        GeomError::Domain(format!("model singular before the focal time at t = {}: {e}", st.t))
                    })?;
                    let err = (measured - st2.partial_trace_shape(&sp.w)?).abs() + 1e-12 * (1.0 + bound.abs());
                    let hypothesis = linalg::partial_trace(&st.curvature, &cols) - k as f64 * h;
                    out.push(HessianSample { branch: si, ray: ri, t: st.t, measured, bound, err, hypothesis });
                }
            }
            Ok(out)
        })
        .collect();
    let per_ray = per_ray?;

    let ray_margin = per_ray.iter().flatten().map(|s| s.hypothesis).fold(f64::INFINITY, f64::min);
    cert.ray_margin = Some(ray_margin);
    if ray_margin < -cert.tolerance {
        cert.holds = false;
    }
    if !cert.holds {
        return Ok(violation(ctx, kind, Some(cert), "Ric_k(γ̇, W_t) ≥ kH not certified on the sampled rays"));
    }

    let mut reports = Vec::new();
    for branch in Branch::ALL {
        let samples: Vec<&HessianSample> = per_ray
            .iter()
            .zip(&spaces)
            .flat_map(|(v, sp)| v.iter().filter(move |s| sp[s.branch].branch == branch))
            .collect();
        let Some(worst) = samples.iter().min_by(|a, b| (a.bound - a.measured).total_cmp(&(b.bound - b.measured)))
        else {
            continue;
        };
        let err = samples.iter().map(|s| s.err).fold(0.0, f64::max);
        let max_abs = samples.iter().map(|s| (s.bound - s.measured).abs()).fold(0.0, f64::max);
        let mut r = BoundReport::new(branch.label(), worst.measured, worst.bound, ctx.tolerance(), err)
            .with_note(format!("worst at ray {} t = {:.6}; {} samples", worst.ray, worst.t, samples.len()));
        r.equality = max_abs <= 10.0 * err;
        reports.push(r);
    }
    let failed = any_failed(&reports);
    Ok(finish(ctx, kind, Some(cert), reports, failed))
}

// ---------------------------------------------------------------------------
// Focal radius

pub fn check_focal_radius(ctx: &Context) -> Result<CheckReport> {
    let kind = CheckKind::FocalRadius;
    let h = ctx.resolved_h()?;
    if h <= 0.0 {
        return Ok(violation(ctx, kind, None, format!("focal radius bound needs H > 0, got {h}")));
    }
    if ctx.m < ctx.k {
        return Ok(violation(ctx, kind, None, format!("dim Σ = {} < k = {}", ctx.m, ctx.k)));
    }
    let cert = ctx.certify(h)?;
    if !cert.holds {
        return Ok(violation(ctx, kind, Some(cert), "Ric_k ≥ kH not certified"));
    }
    let bound = FRAC_PI_2 / h.sqrt();
    // A pair whose nearer focal time passes the bound already fails, so the
    // search stops just beyond it; far focal points may sit on chart poles.
    let horizon = 1.01 * bound;
    let rays = ctx.sample_rays(ctx.scenario.rays);
    let pairs: Result<Vec<(f64, f64)>> = rays
        .par_iter()
        .map(|smp| {
            let frames = &ctx.grid.base[smp.base].frames;
            let rtol = ctx.scenario.quadrature.rtol;
            let neg: Vec<f64> = smp.xi.iter().map(|v| -v).collect();
            let mut f = [horizon; 2];
            for (slot, xi) in f.iter_mut().zip([&smp.xi, &neg]) {
                let solver = crate::ray::RaySolver::new(&ctx.mfd, frames, xi)?.with_rtol(rtol);
                if let Some(t) = solver.focal_distance(horizon)? {
                    *slot = t;
                }
            }
            Ok((f[0].min(f[1]), f[0].max(f[1])))
        })
        .collect();
    let pairs = pairs?;
    let measured = pairs.iter().map(|p| p.0).fold(0.0, f64::max);
    let radius = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let mut r = BoundReport::new("focal_radius", measured, bound, FOCAL_EQUALITY_TOL, FOCAL_TOL)
        .with_note(format!("max over {} ±ξ pairs of the nearer focal time; focal radius {radius:.9}", pairs.len()));
    r.equality = r.slack.abs() <= FOCAL_EQUALITY_TOL && ctx.sigma.totally_geodesic_declared;
    let failed = !r.passed;
    Ok(finish(ctx, kind, Some(cert), vec![r], failed))
}

// ---------------------------------------------------------------------------
// Heintze–Karcher type bound

/// ∫_ν̂ ∫₀^{z(r,ξ)} (cs_H + ⟨η,ξ⟩ sn_H)^m sn_H^{n−m−1} dt dξ on the grid, with
/// its half-resolution companion.
pub fn hk_model_volume(ctx: &Context, h: f64, r: f64) -> (f64, f64) {
    let q = &ctx.scenario.quadrature;
    let model = ModelCurvature(h);
    let (n, m) = (ctx.n, ctx.m);
    let terms: Vec<(f64, f64)> = ctx
        .grid
        .samples()
        .iter()
        .map(|smp| {
            if r == 0.0 {
                return (0.0, 0.0);
            }
            let z = first_zero(model, n, m, smp.eta_dot_xi, r);
            let f = |t: f64| hk_integrand(model, n, m, smp.eta_dot_xi, t);
            let fine = Rule1d::composite_gauss(0.0, z, q.nodes_per_panel, q.panels).integrate(f);
            let coarse = Rule1d::composite_gauss(0.0, z, (q.nodes_per_panel / 2).max(1), q.panels).integrate(f);
            (smp.weight * fine, smp.weight * coarse)
        })
        .collect();
    let fine: Vec<f64> = terms.iter().map(|t| t.0).collect();
    let coarse: Vec<f64> = terms.iter().map(|t| t.1).collect();
    (pairwise_sum(&fine), pairwise_sum(&coarse))
}

pub fn check_hk_bound(ctx: &Context) -> Result<CheckReport> {
    let kind = CheckKind::HkBound;
    let h = ctx.resolved_h()?;
    let cert = ctx.certify(h)?;
    if !cert.holds {
        return Ok(violation(ctx, kind, Some(cert), "Ric_k ≥ kH not certified"));
    }
    let q = &ctx.scenario.quadrature;
    let mut reports = Vec::new();
    for &r in &ctx.scenario.radii {
        let vol = tube_volume_on(&ctx.mfd, &ctx.grid, r, q)?;
        let (bound, coarse) = hk_model_volume(ctx, h, r);
        let err = vol.error_estimate + (bound - coarse).abs() + q.rtol * bound.abs();
        let measured = vol.value * ctx.inflation();
        reports.push(
            BoundReport::new(format!("hk_bound r={r}"), measured, bound, ctx.tolerance(), err).with_note(vol.flags()),
        );
    }
    let failed = any_failed(&reports);
    Ok(finish(ctx, kind, Some(cert), reports, failed))
}

// ---------------------------------------------------------------------------
// Integral curvature bound

/// Parameters of the integral bound, or why it does not apply.
pub fn thm1_preconditions(ctx: &Context, h: f64) -> std::result::Result<BoundConstants, String> {
    let (n, m, k, p) = (ctx.n, ctx.m, ctx.k, ctx.p);
    if !(0 < m && m + 1 < n) {
        return Err(format!("needs 0 < m < n−1, got m = {m}, n = {n}"));
    }
    if k != m.min(n - m - 1) {
        return Err(format!("needs k = min(m, n−m−1), got k = {k}"));
    }
    let constants = thm1_constants(n, m, p, h).map_err(|e| e.to_string())?;
    let eta = ctx.grid.max_mean_curvature();
    if eta > MINIMALITY_TOL {
        return Err(format!("Σ is not minimal: max |η| = {eta:e}"));
    }
    Ok(constants)
}

pub fn check_integral_bound(ctx: &Context) -> Result<CheckReport> {
    let kind = CheckKind::IntegralBound;
    let (k, p) = (ctx.k, ctx.p);
    let h = ctx.resolved_h()?;
    let constants = match thm1_preconditions(ctx, h) {
        Ok(c) => c,
        Err(msg) => return Ok(violation(ctx, kind, None, msg)),
    };
    // Informational only: the theorem has no pointwise curvature hypothesis.
    let cert = ctx.certify(h).ok();

    let q = &ctx.scenario.quadrature;
    let opts = RhoOptions::default();
    let global = lp_deficit_norm(&ctx.mfd, &DeficitRegion::Global, k, h, p, ctx.scenario.deficit_nodes, &opts)?;
    let vol_sigma = ctx.grid.vol_sigma();
    let mut reports = Vec::new();
    let mut failed = false;
    for &r in &ctx.scenario.radii {
        let vol = tube_volume_on(&ctx.mfd, &ctx.grid, r, q)?;
        let measured = vol.value * ctx.inflation();
        let tube_norm = tube_lp_deficit_on(&ctx.mfd, &ctx.grid, r, k, h, p, q, &opts)?;

        let bound = thm1_bound(&constants, vol_sigma, global.value, r);
        let rg = BoundReport::new(format!("thm1_global r={r}"), measured, bound, ctx.tolerance(), vol.error_estimate)
            .with_constants(constants)
            .with_note(format!("deficit_norm {:e} ± {:e}; {}", global.value, global.error_estimate, vol.flags()));
        failed |= !rg.passed;
        reports.push(rg);

        let bound_t = thm1_bound(&constants, vol_sigma, tube_norm.value, r);
        reports.push(
            BoundReport::new(format!("thm1_tube r={r}"), measured, bound_t, ctx.tolerance(), vol.error_estimate)
                .with_constants(constants)
                .with_note(format!(
                    "deficit_norm {:e} ± {:e}; informational",
                    tube_norm.value, tube_norm.error_estimate
                )),
        );

        if let Some(mc) = q.monte_carlo {
            let est = tube_volume_mc(&ctx.mfd, &ctx.sigma, r, q, mc)?;
            let diff = (vol.value - est.value).abs();
            let mut rm =
                BoundReport::new(format!("volume_mc r={r}"), diff, 3.0 * est.std_error, 0.0, 0.0).with_note(format!(
                    "quadrature {:e}, monte carlo {:e} ± {:e} ({} samples)",
                    vol.value, est.value, est.std_error, est.samples
                ));
            rm.equality = false;
            failed |= !rm.passed;
            reports.push(rm);
        }
    }
    Ok(finish(ctx, kind, cert, reports, failed))
}

// ---------------------------------------------------------------------------
// J/Y lemmas

#[derive(Debug, Clone, Copy)]
struct Worst {
    slack: f64,
    measured: f64,
    bound: f64,
    scale: f64,
    count: usize,
}

impl Worst {
    fn new() -> Self {
        Worst { slack: f64::INFINITY, measured: 0.0, bound: 0.0, scale: 0.0, count: 0 }
    }

    fn add(&mut self, measured: f64, bound: f64) {
        self.count += 1;
        self.scale = self.scale.max(1.0 + measured.abs() + bound.abs());
        if bound - measured < self.slack {
            *self = Worst { slack: bound - measured, measured, bound, ..*self };
        }
    }

    fn merge(&mut self, other: &Worst) {
        let count = self.count + other.count;
        let scale = self.scale.max(other.scale);
        if other.slack < self.slack {
            *self = *other;
        }
        self.count = count;
        self.scale = scale;
    }

    fn report(&self, label: &str, tolerance: f64, rtol: f64) -> BoundReport {
        let err = 100.0 * rtol * self.scale;
        BoundReport::new(label, self.measured, self.bound, tolerance, err).with_note(format!("{} samples", self.count))
    }
}

/// Fourth-order central first derivative from f(t−2h), f(t−h), f(t+h), f(t+2h).
fn five_point<T>(m2: &T, m1: &T, p1: &T, p2: &T, h: f64) -> T
where
    T: Clone + std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    ((p1.clone() - m1.clone()) * 8.0 + (m2.clone() - p2.clone())) * (1.0 / (12.0 * h))
}

/// Largest residual of a scalar second-order inequality f″ + c f ≤ 0 by
/// central differences.
fn second_difference(lo: f64, mid: f64, hi: f64, step: f64) -> f64 {
    (hi - 2.0 * mid + lo) / (step * step)
}

pub fn check_ray_lemmas(ctx: &Context) -> Result<CheckReport> {
    let kind = CheckKind::Lemmas;
    let (n, m, k) = (ctx.n, ctx.m, ctx.k);
    if !(0 < m && m + 1 < n) {
        return Ok(violation(ctx, kind, None, format!("needs 0 < m < n−1, got m = {m}, n = {n}")));
    }
    let eta = ctx.grid.max_mean_curvature();
    if eta > MINIMALITY_TOL {
        return Ok(violation(ctx, kind, None, format!("Σ is not minimal: max |η| = {eta:e}")));
    }
    let ps = ctx.lemma_exponents();
    let nk = (n - k) as f64;
    if let Some(p) = ps.iter().find(|&&p| !(p > nk)) {
        return Ok(violation(ctx, kind, None, format!("two-mean exponent p = {p} must exceed n−k = {nk}")));
    }
    let d = n - m - 1;
    let (mf, df) = (m as f64, d as f64);
    let rays = ctx.sample_rays(ctx.scenario.rays);
    let fd_step = 2e-3;

    let per_ray: Result<Vec<Vec<Worst>>> = rays
        .par_iter()
        .map(|smp| {
            let t_end = usable_end(ctx, smp, 0.9)?;
            let grid = time_grid(t_end, 16);
            let centers: Vec<f64> = [0.3, 0.6, 0.9].iter().map(|f| f * t_end).filter(|&t| t > 2.0 * fd_step).collect();
            let mut times: Vec<f64> = grid.clone();
            for &c in &centers {
                times.extend([c - fd_step, c, c + fd_step]);
            }
            times.sort_by(f64::total_cmp);
            let solver = ctx.solver(smp)?.with_integrals(&ps);
            let states = solver.states_at(&times)?;
            let at = |t: f64| -> &TransportState {
                let i = times.partition_point(|&s| s < t);
                &states[i]
            };
            // Slots: 5.1 J, 5.1 Y, one per p, residual J, residual Y.
            let mut w = vec![Worst::new(); 4 + ps.len()];
            for &t in &grid {
                let st = at(t);
                let ints = st.integrals.as_ref().expect("integrals requested");
                let (phi, psi) = st.split_mean_curvature()?;
                let a = st.volume_density();
                w[0].add(phi / mf * a.powf(1.0 / mf), ints.j_curvature + ints.j_product / (mf * mf));
                w[1].add(psi / df * a.powf(1.0 / df), 1.0 + ints.y_curvature + ints.y_product / (df * df));
                for (i, (tm, &p)) in ints.two_mean.iter().zip(&ps).enumerate() {
                    let c = (2.0 * p - 1.0) / (p - nk);
                    w[2 + i].add(tm.product.max(0.0).powf(1.0 / p), c * tm.curvature.max(0.0).powf(1.0 / p));
                }
            }
            let slot = 2 + ps.len();
            for &c in &centers {
                let (lo, mid, hi) = (at(c - fd_step), at(c), at(c + fd_step));
                let (j, y) = mid.jy_factors()?;
                let (jl, yl) = lo.jy_factors()?;
                let (jh, yh) = hi.jy_factors()?;
                let jpp = second_difference(jl, j, jh, fd_step);
                let ypp = second_difference(yl, y, yh, fd_step);
                w[slot].add(jpp + mid.ric_horizontal() / mf * j, 0.0);
                w[slot + 1].add(ypp + mid.ric_vertical() / df * y, 0.0);
            }
            Ok(w)
        })
        .collect();
    let per_ray = per_ray?;
    let mut total = vec![Worst::new(); 4 + ps.len()];
    for w in &per_ray {
        for (t, x) in total.iter_mut().zip(w) {
            t.merge(x);
        }
    }
    let rtol = ctx.scenario.quadrature.rtol;
    let tol = ctx.tolerance();
    let mut reports = vec![total[0].report("jacobi_j_bound", tol, rtol), total[1].report("jacobi_y_bound", tol, rtol)];
    for (i, p) in ps.iter().enumerate() {
        reports.push(total[2 + i].report(&format!("two_mean p={p}"), tol, rtol));
    }
    let slot = 2 + ps.len();
    for (i, label) in ["jacobi_residual_j", "jacobi_residual_y"].iter().enumerate() {
        let w = &total[slot + i];
        let mut r = BoundReport::new(*label, w.measured, 0.0, JACOBI_RESIDUAL_TOL, 0.0)
            .with_note(format!("{} samples", w.count));
        r.equality = false;
        reports.push(r);
    }
    for r in reports.iter_mut() {
        r.note = Some(format!("{}; {} rays", r.note.take().unwrap_or_default(), rays.len()));
    }
    let failed = any_failed(&reports);
    Ok(finish(ctx, kind, None, reports, failed))
}

// ---------------------------------------------------------------------------
// Structural residuals

#[derive(Debug, Clone, Copy, Default)]
pub struct StructuralResiduals {
    pub riccati: f64,
    pub density: f64,
    pub wronskian: f64,
    pub taylor: f64,
}

impl StructuralResiduals {
    fn max(self, o: Self) -> Self {
        StructuralResiduals {
            riccati: self.riccati.max(o.riccati),
            density: self.density.max(o.density),
            wronskian: self.wronskian.max(o.wronskian),
            taylor: self.taylor.max(o.taylor),
        }
    }
}

/// Residuals of S′ + S² + R = 0, A′ = tr(S)A, constancy of J′ᵀJ − JᵀJ′ and
/// A(t)/t^{n−m−1} = 1 + tr(S_ξ)t + O(t²) along one ray.
pub fn ray_structural_residuals(ctx: &Context, smp: &NormalSample) -> Result<StructuralResiduals> {
    let step = 1e-3;
    let t_end = usable_end(ctx, smp, 0.8)?;
    let solver = ctx.solver(smp)?.with_rtol(ctx.scenario.quadrature.rtol.min(1e-11));
    let centers: Vec<f64> = [0.25, 0.5, 0.75].iter().map(|f| f * t_end).filter(|&t| t > 4.0 * step).collect();
    let offsets = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let mut times = Vec::new();
    for &c in &centers {
        times.extend(offsets.iter().map(|o| c + o * step));
    }
    let states = solver.states_at(&times)?;
    let start = solver.initial_state()?;
    let w0 = start.wronskian();
    let mut out = StructuralResiduals::default();
    for st in states.chunks(5) {
        let shape: Vec<DMatrix<f64>> = st.iter().map(|x| x.shape_operator()).collect::<Result<_>>()?;
        let s = &shape[2];
        let sp = five_point(&shape[0], &shape[1], &shape[3], &shape[4], step);
        out.riccati = out.riccati.max((sp + s * s + &st[2].curvature).amax());
        let a: Vec<f64> = st.iter().map(|x| x.volume_density()).collect();
        let ap = five_point(&a[0], &a[1], &a[3], &a[4], step);
        out.density = out.density.max((ap - s.trace() * a[2]).abs() / a[2].abs().max(1.0));
    }
    for st in &states {
        out.wronskian = out.wronskian.max((st.wronskian() - &w0).amax());
    }
    let t = 1e-3;
    let d = (ctx.n - ctx.m - 1) as i32;
    let near = &solver.states_at(&[t])?[0];
    let tr = (0..ctx.m).map(|a| start.jp[(a, a)]).sum::<f64>();
    out.taylor = (near.volume_density() / t.powi(d) - (1.0 + tr * t)).abs();
    Ok(out)
}

pub fn check_structural(ctx: &Context) -> Result<CheckReport> {
    let kind = CheckKind::Structural;
    let rays = ctx.sample_rays(ctx.scenario.rays);
    let all: Result<Vec<StructuralResiduals>> = rays.par_iter().map(|smp| ray_structural_residuals(ctx, smp)).collect();
    let worst = all?.into_iter().fold(StructuralResiduals::default(), StructuralResiduals::max);
    let note = format!("max over {} rays", rays.len());
    let reports: Vec<BoundReport> = [
        ("riccati_residual", worst.riccati, RICCATI_RESIDUAL_TOL),
        ("density_residual", worst.density, DENSITY_RESIDUAL_TOL),
        ("wronskian_drift", worst.wronskian, WRONSKIAN_TOL),
        ("taylor_residual", worst.taylor, TAYLOR_TOL),
    ]
    .iter()
    .map(|(l, v, lim)| residual_report(l, *v, *lim).with_note(note.clone()))
    .collect();
    let failed = any_failed(&reports);
    Ok(finish(ctx, kind, None, reports, failed))
}

// ---------------------------------------------------------------------------
// Volume tables

/// Tube volume at one radius next to the comparison bounds that apply.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeRow {
    pub scenario: String,
    pub r: f64,
    pub value: f64,
    pub error_estimate: f64,
    /// Model-space bound, present when Ric_k ≥ kH is certified.
    pub hk_bound: Option<f64>,
    /// Integral bound with the global deficit norm, present when it applies.
    pub thm1_bound: Option<f64>,
    pub flags: String,
}

pub fn volume_table(ctx: &Context, radii: &[f64]) -> Result<Vec<VolumeRow>> {
    let h = ctx.resolved_h()?;
    let hk_holds = ctx.certify(h)?.holds;
    let thm1 = match thm1_preconditions(ctx, h) {
        Ok(constants) => {
            let opts = RhoOptions::default();
            let global =
                lp_deficit_norm(&ctx.mfd, &DeficitRegion::Global, ctx.k, h, ctx.p, ctx.scenario.deficit_nodes, &opts)?;
            Some((constants, global.value))
        }
        Err(_) => None,
    };
    let vol_sigma = ctx.grid.vol_sigma();
    radii
        .iter()
        .map(|&r| {
            let vol = tube_volume_on(&ctx.mfd, &ctx.grid, r, &ctx.scenario.quadrature)?;
            Ok(VolumeRow {
                scenario: ctx.name().to_string(),
                r,
                value: vol.value,
                error_estimate: vol.error_estimate,
                hk_bound: hk_holds.then(|| hk_model_volume(ctx, h, r).0),
                thm1_bound: thm1.map(|(c, norm)| thm1_bound(&c, vol_sigma, norm, r)),
                flags: vol.flags(),
            })
        })
        .collect()
}
