//! Chart-based Riemannian metrics and the curvature quantities built on them.

mod curvature;
mod deficit;
mod metrics;
mod rho;

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{GeomError, Result};

pub use curvature::{
    christoffel_at, curvature_tensor_at, directional_curvature_operator, ric_k, Christoffel, CurvatureOperatorAt,
    PointGeometry, RiemannTensor,
};
pub use deficit::{lp_deficit_norm, DeficitRegion, DeficitResult};
pub use metrics::{
    Bump, ConformalFactor, ConformalMetric, EuclideanMetric, HyperbolicModel, ManifoldSpec, ProductMetric, Warp,
    WarpedProduct,
};
pub use rho::{
    rho_deficit_at, rho_deficit_from, rho_k_at, rho_k_brute_force, rho_k_search, rho_objective, FrameCurvature,
    RhoEstimate, RhoOptions,
};

pub const FD_STEP_FIRST: f64 = 1e-5;
pub const FD_STEP_SECOND: f64 = 1e-4;

/// Metric tensor and its first two coordinate derivatives at a point.
/// Storage is row-major: `g[i*n+j]`, `dg[(k*n+i)*n+j] = ∂_k g_ij`,
/// `ddg[((k*n+l)*n+i)*n+j] = ∂_k ∂_l g_ij`.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub n: usize,
    pub g: Vec<f64>,
    pub dg: Vec<f64>,
    pub ddg: Vec<f64>,
}

impl MetricJet {
    pub fn zeros(n: usize) -> Self {
        MetricJet { n, g: vec![0.0; n * n], dg: vec![0.0; n * n * n], ddg: vec![0.0; n * n * n * n] }
    }

    #[inline]
    pub fn dg(&self, k: usize, i: usize, j: usize) -> f64 {
        self.dg[(k * self.n + i) * self.n + j]
    }

    #[inline]
    pub fn ddg(&self, k: usize, l: usize, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.ddg[((k * n + l) * n + i) * n + j]
    }
}

/// A smooth field of inner products on an open set of R^n.
pub trait MetricField: Send + Sync + Debug {
    fn dim(&self) -> usize;

    /// Row-major n×n metric matrix at `x`.
    fn metric(&self, x: &[f64]) -> Vec<f64>;

    /// Metric with derivatives. The default uses central differences.
    fn jet(&self, x: &[f64]) -> MetricJet {
        fd_jet(self, x)
    }

    /// Whether `x` lies where the metric is defined.
    fn contains(&self, _x: &[f64]) -> bool {
        true
    }

    /// Chart box outside which the curvature vanishes identically, if any.
    fn curvature_support(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }
}

/// Finite-difference jet: step 1e-5 for first derivatives, 1e-4 for second.
pub fn fd_jet<M: MetricField + ?Sized>(metric: &M, x: &[f64]) -> MetricJet {
    let n = metric.dim();
    let nn = n * n;
    let mut jet = MetricJet::zeros(n);
    jet.g = metric.metric(x);
    let h1 = FD_STEP_FIRST;
    let h2 = FD_STEP_SECOND;
    let mut y = x.to_vec();
    let eval = |y: &[f64]| metric.metric(y);

    let mut plus2 = Vec::with_capacity(n);
    let mut minus2 = Vec::with_capacity(n);
    for k in 0..n {
        y[k] = x[k] + h1;
        let p = eval(&y);
        y[k] = x[k] - h1;
        let m = eval(&y);
        y[k] = x[k];
        for a in 0..nn {
            jet.dg[k * nn + a] = (p[a] - m[a]) / (2.0 * h1);
        }
        y[k] = x[k] + h2;
        plus2.push(eval(&y));
        y[k] = x[k] - h2;
        minus2.push(eval(&y));
        y[k] = x[k];
    }
    for k in 0..n {
        for a in 0..nn {
            jet.ddg[(k * n + k) * nn + a] = (plus2[k][a] - 2.0 * jet.g[a] + minus2[k][a]) / (h2 * h2);
        }
        for l in k + 1..n {
            let mut corner = |sk: f64, sl: f64| {
                y[k] = x[k] + sk * h2;
                y[l] = x[l] + sl * h2;
                let v = eval(&y);
                y[k] = x[k];
                y[l] = x[l];
                v
            };
            let pp = corner(1.0, 1.0);
            let pm = corner(1.0, -1.0);
            let mp = corner(-1.0, 1.0);
            let mm = corner(-1.0, -1.0);
            for a in 0..nn {
                let v = (pp[a] - pm[a] - mp[a] + mm[a]) / (4.0 * h2 * h2);
                jet.ddg[(k * n + l) * nn + a] = v;
                jet.ddg[(l * n + k) * nn + a] = v;
            }
        }
    }
    jet
}

/// Coordinate box of a chart; periodic directions identify `lo` with `hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub periodic: Vec<bool>,
}

impl ChartDomain {
    pub fn unbounded(n: usize) -> Self {
        ChartDomain { lo: vec![f64::NEG_INFINITY; n], hi: vec![f64::INFINITY; n], periodic: vec![false; n] }
    }

    pub fn torus(n: usize, side: f64) -> Self {
        ChartDomain { lo: vec![0.0; n], hi: vec![side; n], periodic: vec![true; n] }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, &xi)| xi.is_finite() && (self.periodic[i] || (xi >= self.lo[i] && xi <= self.hi[i])))
    }
}

/// The ambient manifold M^n: a metric on one chart.
#[derive(Debug, Clone)]
pub struct ChartManifold {
    pub name: String,
    pub metric: Arc<dyn MetricField>,
    pub domain: ChartDomain,
    /// Radius within which the normal exponential map of the scenario's
    /// submanifold is known to be injective.
    pub volume_validity_radius: Option<f64>,
}

impl ChartManifold {
    pub fn new(name: impl Into<String>, metric: Arc<dyn MetricField>, domain: ChartDomain) -> Result<Self> {
        let n = metric.dim();
        if n < 2 {
            return Err(GeomError::InvalidParameters(format!("manifold dimension {n} < 2")));
        }
        if domain.lo.len() != n || domain.hi.len() != n || domain.periodic.len() != n {
            return Err(GeomError::DimensionMismatch { expected: n, got: domain.lo.len() });
        }
        for i in 0..n {
            if domain.periodic[i] && !(domain.hi[i] - domain.lo[i] > 0.0 && (domain.hi[i] - domain.lo[i]).is_finite()) {
                return Err(GeomError::InvalidParameters(format!("periodic direction {i} has no positive period")));
            }
        }
        Ok(ChartManifold { name: name.into(), metric, domain, volume_validity_radius: None })
    }

    pub fn with_validity_radius(mut self, r: f64) -> Self {
        self.volume_validity_radius = Some(r);
        self
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(GeomError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        if !self.domain.contains(x) || !self.metric.contains(x) {
            return Err(GeomError::Domain(format!("point {x:?} outside the chart")));
        }
        Ok(())
    }

    pub fn metric_matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_row_slice(n, n, &self.metric.metric(x))
    }

    pub fn jet(&self, x: &[f64]) -> MetricJet {
        self.metric.jet(x)
    }

    /// Riemannian volume element √det g.
    pub fn volume_element(&self, x: &[f64]) -> f64 {
        self.metric_matrix(x).determinant().max(0.0).sqrt()
    }

    /// The g-orthonormal coordinate frame at `x` obtained by Gram–Schmidt on
    /// the coordinate basis.
    pub fn orthonormal_frame(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let g = self.metric_matrix(x);
        let basis: Vec<Vec<f64>> =
            (0..self.dim()).map(|i| (0..self.dim()).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        crate::linalg::gram_schmidt(&g, &[], &basis)
    }

    /// g-orthonormal basis of the complement of the unit vector `u`.
    pub fn complement_frame(&self, x: &[f64], u: &[f64]) -> Result<Vec<Vec<f64>>> {
        let g = self.metric_matrix(x);
        complement_frame_g(&g, u)
    }
}

/// g-orthonormal basis of u^⊥ built from the coordinate vectors least
/// aligned with `u`.
pub fn complement_frame_g(g: &DMatrix<f64>, u: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = u.len();
    let mut order: Vec<usize> = (0..n).collect();
    // Coordinate direction most aligned with u is dropped last.
    order.sort_by(|&a, &b| {
        let ca = u[a].abs() * g[(a, a)].sqrt();
        let cb = u[b].abs() * g[(b, b)].sqrt();
        ca.partial_cmp(&cb).unwrap_or(std::cmp::Ordering::Equal)
    });
    let basis: Vec<Vec<f64>> =
        order[..n - 1].iter().map(|&i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    crate::linalg::gram_schmidt(g, &[u.to_vec()], &basis)
}
