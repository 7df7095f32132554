use rayon::prelude::*;

use super::rho::{rho_deficit_from, FrameCurvature, RhoOptions};
use super::ChartManifold;
use crate::error::{GeomError, Result};
use crate::quadrature::{pairwise_sum, tensor_product, Rule1d};

/// Integration region for the curvature deficit.
#[derive(Debug, Clone, PartialEq)]
pub enum DeficitRegion {
    /// The whole chart. Where the metric declares a compact curvature
    /// support and H ≤ 0, only that box contributes.
    Global,
    /// Coordinate sub-box; infinite ends are allowed.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeficitResult {
    /// ‖(ρ_k − H)_−‖_p.
    pub value: f64,
    /// ∫ (ρ_k − H)_−^p dvol.
    pub integral: f64,
    /// Difference against the half-resolution rule, in norm units.
    pub error_estimate: f64,
}

fn axis_rule(lo: f64, hi: f64, nodes: usize) -> Rule1d {
    if !(lo.is_finite() && hi.is_finite()) || nodes < 16 {
        Rule1d::on_interval(lo, hi, nodes)
    } else {
        Rule1d::composite_gauss(lo, hi, 8, nodes / 8)
    }
}

#[allow(clippy::too_many_arguments)]
fn box_integral(
    m: &ChartManifold,
    lo: &[f64],
    hi: &[f64],
    nodes: usize,
    k: usize,
    h: f64,
    p: f64,
    opts: &RhoOptions,
) -> Result<f64> {
    let rules: Vec<Rule1d> = lo.iter().zip(hi).map(|(&a, &b)| axis_rule(a, b, nodes)).collect();
    let points = tensor_product(&rules);
    let terms: Result<Vec<f64>> = points
        .par_iter()
        .map(|(x, w)| {
            if *w == 0.0 {
                return Ok(0.0);
            }
            let r = FrameCurvature::at(m, x)?;
            let d = rho_deficit_from(&r, k, h, opts)?;
            if d == 0.0 {
                return Ok(0.0);
            }
            Ok(w * d.powf(p) * m.volume_element(x))
        })
        .collect();
    Ok(pairwise_sum(&terms?))
}

/// ‖(ρ_k − H)_−‖_p over a region by tensor Gauss–Legendre quadrature with
/// `nodes` points per axis.
pub fn lp_deficit_norm(
    m: &ChartManifold,
    region: &DeficitRegion,
    k: usize,
    h: f64,
    p: f64,
    nodes: usize,
    opts: &RhoOptions,
) -> Result<DeficitResult> {
    if p < 1.0 {
        return Err(GeomError::InvalidParameters(format!("p = {p} < 1")));
    }
    let n = m.dim();
    if k == 0 || k >= n {
        return Err(GeomError::InvalidParameters(format!("k = {k} outside 1..{}", n - 1)));
    }
    let (lo, hi) = match region {
        DeficitRegion::Box { lo, hi } => {
            if lo.len() != n || hi.len() != n {
                return Err(GeomError::DimensionMismatch { expected: n, got: lo.len() });
            }
            (lo.clone(), hi.clone())
        }
        DeficitRegion::Global => match m.metric.curvature_support() {
            Some(support) if h <= 0.0 => support,
            _ => (m.domain.lo.clone(), m.domain.hi.clone()),
        },
    };
    let nodes = nodes.max(2);
    let fine = box_integral(m, &lo, &hi, nodes, k, h, p, opts)?;
    let coarse = box_integral(m, &lo, &hi, nodes / 2, k, h, p, opts)?;
    let value = fine.max(0.0).powf(1.0 / p);
    let error_estimate = (value - coarse.max(0.0).powf(1.0 / p)).abs();
    Ok(DeficitResult { value, integral: fine, error_estimate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ManifoldSpec;
    use std::f64::consts::PI;

    #[test]
    fn flat_torus_has_no_deficit() {
        let m = ManifoldSpec::FlatTorus { dim: 3, side: 2.0 * PI, bump: None }.build().unwrap();
        let r = lp_deficit_norm(&m, &DeficitRegion::Global, 1, -1.0, 2.0, 8, &RhoOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn sphere_of_radius_two() {
        let m = ManifoldSpec::Sphere { dim: 2, radius: 2.0 }.build().unwrap();
        let opts = RhoOptions { grid: 64, starts: 1, rounds: 1 };
        let r1 = lp_deficit_norm(&m, &DeficitRegion::Global, 1, 1.0, 1.0, 64, &opts).unwrap();
        assert!((r1.value - 12.0 * PI).abs() < 1e-6 * 12.0 * PI, "{r1:?}");
        let r2 = lp_deficit_norm(&m, &DeficitRegion::Global, 1, 1.0, 2.0, 64, &opts).unwrap();
        assert!((r2.value - 3.0 * PI.sqrt()).abs() < 1e-6 * 3.0 * PI.sqrt(), "{r2:?}");
    }

    #[test]
    fn nested_regions_are_monotone() {
        let m = ManifoldSpec::Sphere { dim: 2, radius: 1.0 }.build().unwrap();
        let opts = RhoOptions { grid: 64, starts: 1, rounds: 1 };
        let small = DeficitRegion::Box { lo: vec![-0.5, -0.5], hi: vec![0.5, 0.5] };
        let big = DeficitRegion::Box { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] };
        let a = lp_deficit_norm(&m, &small, 1, 2.0, 2.0, 16, &opts).unwrap();
        let b = lp_deficit_norm(&m, &big, 1, 2.0, 2.0, 16, &opts).unwrap();
        assert!(a.value > 0.0 && b.value > a.value);
    }

    #[test]
    fn rejects_small_p() {
        let m = ManifoldSpec::Euclidean { dim: 2 }.build().unwrap();
        assert!(lp_deficit_norm(&m, &DeficitRegion::Global, 1, 0.0, 0.5, 8, &RhoOptions::default()).is_err());
    }
}
