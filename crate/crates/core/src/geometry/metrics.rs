//! Built-in metrics and the serializable description used by configs.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ChartDomain, ChartManifold, MetricField, MetricJet};
use crate::error::{GeomError, Result};

#[derive(Debug, Clone, Copy)]
pub struct EuclideanMetric {
    pub n: usize,
}

impl MetricField for EuclideanMetric {
    fn dim(&self) -> usize {
        self.n
    }

    fn metric(&self, _x: &[f64]) -> Vec<f64> {
        identity(self.n)
    }

    fn jet(&self, _x: &[f64]) -> MetricJet {
        let mut j = MetricJet::zeros(self.n);
        j.g = identity(self.n);
        j
    }

    fn curvature_support(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        Some((vec![0.0; self.n], vec![0.0; self.n]))
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        g[i * n + i] = 1.0;
    }
    g
}

/// Log-conformal factor u with g = e^{2u} δ.
pub trait ConformalFactor: Send + Sync + std::fmt::Debug {
    fn dim(&self) -> usize;
    /// (u, ∇u, ∇²u row-major).
    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>);
    fn contains(&self, _x: &[f64]) -> bool {
        true
    }
    fn support(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct ConformalMetric<F> {
    pub factor: F,
}

impl<F: ConformalFactor> MetricField for ConformalMetric<F> {
    fn dim(&self) -> usize {
        self.factor.dim()
    }

    fn metric(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let (u, _, _) = self.factor.eval(x);
        let s = (2.0 * u).exp();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            g[i * n + i] = s;
        }
        g
    }

    fn jet(&self, x: &[f64]) -> MetricJet {
        let n = self.dim();
        let (u, du, ddu) = self.factor.eval(x);
        let s = (2.0 * u).exp();
        let mut j = MetricJet::zeros(n);
        for i in 0..n {
            j.g[i * n + i] = s;
        }
        for k in 0..n {
            let v = 2.0 * s * du[k];
            for i in 0..n {
                j.dg[(k * n + i) * n + i] = v;
            }
            for l in 0..n {
                let v = s * (4.0 * du[k] * du[l] + 2.0 * ddu[k * n + l]);
                for i in 0..n {
                    j.ddg[((k * n + l) * n + i) * n + i] = v;
                }
            }
        }
        j
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.factor.contains(x)
    }

    fn curvature_support(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        self.factor.support()
    }
}

/// Round sphere of radius R through stereographic projection:
/// g = 4R²/(1+|x|²)² δ.
#[derive(Debug, Clone, Copy)]
pub struct StereographicFactor {
    pub n: usize,
    pub radius: f64,
}

impl ConformalFactor for StereographicFactor {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let n = self.n;
        let s: f64 = x.iter().map(|v| v * v).sum();
        let q = 1.0 + s;
        let u = (2.0 * self.radius).ln() - q.ln();
        let du = x.iter().map(|v| -2.0 * v / q).collect();
        let mut ddu = vec![0.0; n * n];
        for k in 0..n {
            for l in 0..n {
                ddu[k * n + l] = 4.0 * x[k] * x[l] / (q * q) - if k == l { 2.0 / q } else { 0.0 };
            }
        }
        (u, du, ddu)
    }
}

/// Hyperbolic space of curvature −1/R² in the Poincaré ball.
#[derive(Debug, Clone, Copy)]
pub struct PoincareBallFactor {
    pub n: usize,
    pub radius: f64,
}

impl ConformalFactor for PoincareBallFactor {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let n = self.n;
        let s: f64 = x.iter().map(|v| v * v).sum();
        let q = 1.0 - s;
        let u = (2.0 * self.radius).ln() - q.ln();
        let du = x.iter().map(|v| 2.0 * v / q).collect();
        let mut ddu = vec![0.0; n * n];
        for k in 0..n {
            for l in 0..n {
                ddu[k * n + l] = 4.0 * x[k] * x[l] / (q * q) + if k == l { 2.0 / q } else { 0.0 };
            }
        }
        (u, du, ddu)
    }

    fn contains(&self, x: &[f64]) -> bool {
        x.iter().map(|v| v * v).sum::<f64>() < 1.0
    }
}

/// Hyperbolic space of curvature −1/R² in the upper half-space, g = R²/y² δ
/// with y the last coordinate.
#[derive(Debug, Clone, Copy)]
pub struct HalfSpaceFactor {
    pub n: usize,
    pub radius: f64,
}

impl ConformalFactor for HalfSpaceFactor {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let n = self.n;
        let y = x[n - 1];
        let mut du = vec![0.0; n];
        du[n - 1] = -1.0 / y;
        let mut ddu = vec![0.0; n * n];
        ddu[n * n - 1] = 1.0 / (y * y);
        (self.radius.ln() - y.ln(), du, ddu)
    }

    fn contains(&self, x: &[f64]) -> bool {
        x[self.n - 1] > 0.0
    }
}

/// Compactly supported bump on a flat torus: g = e^{2εφ} δ with
/// φ(y) = exp(1 − 1/(1 − q)), q = |y − c|²/R² using the periodic distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub amplitude: f64,
    pub radius: f64,
    pub center: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BumpFactor {
    pub n: usize,
    pub side: f64,
    pub bump: Bump,
}

impl BumpFactor {
    fn offset(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.bump.center)
            .map(|(xi, ci)| {
                let d = xi - ci;
                d - self.side * (d / self.side).round()
            })
            .collect()
    }
}

impl ConformalFactor for BumpFactor {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let n = self.n;
        let d = self.offset(x);
        let r2 = self.bump.radius * self.bump.radius;
        let q = d.iter().map(|v| v * v).sum::<f64>() / r2;
        let mut du = vec![0.0; n];
        let mut ddu = vec![0.0; n * n];
        if q >= 1.0 {
            return (0.0, du, ddu);
        }
        let a = 1.0 / (1.0 - q);
        let b = (1.0 - a).exp();
        let b1 = -b * a * a;
        let b2 = b * (a.powi(4) - 2.0 * a.powi(3));
        let eps = self.bump.amplitude;
        for k in 0..n {
            let qk = 2.0 * d[k] / r2;
            du[k] = eps * b1 * qk;
            for l in 0..n {
                let ql = 2.0 * d[l] / r2;
                let qkl = if k == l { 2.0 / r2 } else { 0.0 };
                ddu[k * n + l] = eps * (b2 * qk * ql + b1 * qkl);
            }
        }
        (eps * b, du, ddu)
    }

    fn support(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let r = self.bump.radius;
        Some((self.bump.center.iter().map(|c| c - r).collect(), self.bump.center.iter().map(|c| c + r).collect()))
    }
}

/// Riemannian product with block-diagonal metric.
#[derive(Debug, Clone)]
pub struct ProductMetric {
    pub factors: Vec<Arc<dyn MetricField>>,
}

impl ProductMetric {
    fn offsets(&self) -> Vec<usize> {
        let mut o = vec![0];
        for f in &self.factors {
            o.push(o.last().unwrap() + f.dim());
        }
        o
    }
}

impl MetricField for ProductMetric {
    fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim()).sum()
    }

    fn metric(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let off = self.offsets();
        let mut g = vec![0.0; n * n];
        for (f, w) in self.factors.iter().zip(off.windows(2)) {
            let d = w[1] - w[0];
            let gf = f.metric(&x[w[0]..w[1]]);
            for i in 0..d {
                for j in 0..d {
                    g[(w[0] + i) * n + w[0] + j] = gf[i * d + j];
                }
            }
        }
        g
    }

    fn jet(&self, x: &[f64]) -> MetricJet {
        let n = self.dim();
        let off = self.offsets();
        let mut jet = MetricJet::zeros(n);
        for (f, w) in self.factors.iter().zip(off.windows(2)) {
            let (o, d) = (w[0], w[1] - w[0]);
            let jf = f.jet(&x[o..w[1]]);
            for i in 0..d {
                for j in 0..d {
                    jet.g[(o + i) * n + o + j] = jf.g[i * d + j];
                    for k in 0..d {
                        jet.dg[((o + k) * n + o + i) * n + o + j] = jf.dg(k, i, j);
                        for l in 0..d {
                            jet.ddg[(((o + k) * n + o + l) * n + o + i) * n + o + j] = jf.ddg(k, l, i, j);
                        }
                    }
                }
            }
        }
        jet
    }

    fn contains(&self, x: &[f64]) -> bool {
        let off = self.offsets();
        self.factors.iter().zip(off.windows(2)).all(|(f, w)| f.contains(&x[w[0]..w[1]]))
    }
}

/// Warping function for dr² + f(r)² |dy|².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Warp {
    Exp {
        rate: f64,
    },
    Sin,
    Sinh,
    Cosh,
    /// Natural cubic spline through the samples (r_i, f_i).
    Sampled {
        r: Vec<f64>,
        f: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
enum WarpEval {
    Exp(f64),
    Sin,
    Sinh,
    Cosh,
    Spline(Spline),
}

#[derive(Debug, Clone)]
struct Spline {
    r: Vec<f64>,
    f: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    fn new(r: &[f64], f: &[f64]) -> Result<Self> {
        let n = r.len();
        if n < 3 || f.len() != n {
            return Err(GeomError::InvalidParameters("sampled warp needs ≥ 3 matching samples".into()));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(GeomError::InvalidParameters("sampled warp abscissae must increase".into()));
        }
        if f.iter().any(|v| *v <= 0.0) {
            return Err(GeomError::InvalidParameters("warping function must be positive".into()));
        }
        // Natural spline second derivatives by the Thomas algorithm.
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = r[i] - r[i - 1];
            let h1 = r[i + 1] - r[i];
            let rhs = 6.0 * ((f[i + 1] - f[i]) / h1 - (f[i] - f[i - 1]) / h0);
            let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
            c[i] = h1 / diag;
            d[i] = (rhs - h0 * d[i - 1]) / diag;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        Ok(Spline { r: r.to_vec(), f: f.to_vec(), m })
    }

    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.r.len();
        let i = match self.r.partition_point(|v| *v <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.r[i + 1] - self.r[i];
        let a = (self.r[i + 1] - x) / h;
        let b = (x - self.r[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let f = a * self.f[i] + b * self.f[i + 1] + ((a.powi(3) - a) * m0 + (b.powi(3) - b) * m1) * h * h / 6.0;
        let df = (self.f[i + 1] - self.f[i]) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        let ddf = a * m0 + b * m1;
        (f, df, ddf)
    }
}

impl WarpEval {
    fn eval(&self, r: f64) -> (f64, f64, f64) {
        match self {
            WarpEval::Exp(c) => {
                let e = (c * r).exp();
                (e, c * e, c * c * e)
            }
            WarpEval::Sin => (r.sin(), r.cos(), -r.sin()),
            WarpEval::Sinh => (r.sinh(), r.cosh(), r.sinh()),
            WarpEval::Cosh => (r.cosh(), r.sinh(), r.cosh()),
            WarpEval::Spline(s) => s.eval(r),
        }
    }
}

/// Warped product dr² + f(r)² |dy|² over a flat fiber; coordinate 0 is r.
#[derive(Debug, Clone)]
pub struct WarpedProduct {
    n: usize,
    warp: WarpEval,
    range: (f64, f64),
}

impl WarpedProduct {
    pub fn new(n: usize, warp: &Warp) -> Result<Self> {
        let (eval, range) = match warp {
            Warp::Exp { rate } => (WarpEval::Exp(*rate), (f64::NEG_INFINITY, f64::INFINITY)),
            Warp::Sin => (WarpEval::Sin, (0.0, PI)),
            Warp::Sinh => (WarpEval::Sinh, (0.0, f64::INFINITY)),
            Warp::Cosh => (WarpEval::Cosh, (f64::NEG_INFINITY, f64::INFINITY)),
            Warp::Sampled { r, f } => {
                let s = Spline::new(r, f)?;
                (WarpEval::Spline(s), (r[0], r[r.len() - 1]))
            }
        };
        Ok(WarpedProduct { n, warp: eval, range })
    }

    /// (f, f′, f″) at r.
    pub fn warp(&self, r: f64) -> (f64, f64, f64) {
        self.warp.eval(r)
    }
}

impl MetricField for WarpedProduct {
    fn dim(&self) -> usize {
        self.n
    }

    fn metric(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let (f, _, _) = self.warp.eval(x[0]);
        let mut g = identity(n);
        for i in 1..n {
            g[i * n + i] = f * f;
        }
        g
    }

    fn jet(&self, x: &[f64]) -> MetricJet {
        let n = self.n;
        let (f, df, ddf) = self.warp.eval(x[0]);
        let mut j = MetricJet::zeros(n);
        j.g = identity(n);
        for i in 1..n {
            j.g[i * n + i] = f * f;
            j.dg[i * n + i] = 2.0 * f * df;
            j.ddg[i * n + i] = 2.0 * (df * df + f * ddf);
        }
        j
    }

    fn contains(&self, x: &[f64]) -> bool {
        x[0] > self.range.0 && x[0] < self.range.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperbolicModel {
    #[default]
    Ball,
    HalfSpace,
}

fn default_side() -> f64 {
    2.0 * PI
}

fn default_radius() -> f64 {
    1.0
}

/// Named ambient manifolds addressable from configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum ManifoldSpec {
    Euclidean {
        dim: usize,
    },
    FlatTorus {
        dim: usize,
        #[serde(default = "default_side")]
        side: f64,
        #[serde(default)]
        bump: Option<Bump>,
    },
    Sphere {
        dim: usize,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    Hyperbolic {
        dim: usize,
        #[serde(default = "default_radius")]
        radius: f64,
        #[serde(default)]
        model: HyperbolicModel,
    },
    Product {
        factors: Vec<ManifoldSpec>,
    },
    WarpedProduct {
        dim: usize,
        warp: Warp,
    },
}

impl ManifoldSpec {
    pub fn dim(&self) -> usize {
        match self {
            ManifoldSpec::Euclidean { dim }
            | ManifoldSpec::FlatTorus { dim, .. }
            | ManifoldSpec::Sphere { dim, .. }
            | ManifoldSpec::Hyperbolic { dim, .. }
            | ManifoldSpec::WarpedProduct { dim, .. } => *dim,
            ManifoldSpec::Product { factors } => factors.iter().map(|f| f.dim()).sum(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ManifoldSpec::Euclidean { .. } => "euclidean",
            ManifoldSpec::FlatTorus { .. } => "flat_torus",
            ManifoldSpec::Sphere { .. } => "sphere",
            ManifoldSpec::Hyperbolic { .. } => "hyperbolic",
            ManifoldSpec::Product { .. } => "product",
            ManifoldSpec::WarpedProduct { .. } => "warped_product",
        }
    }

    fn parts(&self) -> Result<(Arc<dyn MetricField>, ChartDomain)> {
        let positive = |what: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(GeomError::InvalidParameters(format!("{what} must be positive, got {v}")))
            }
        };
        let dim = self.dim();
        if dim < 2 && !matches!(self, ManifoldSpec::Product { .. }) {
            return Err(GeomError::InvalidParameters(format!("dimension {dim} < 2")));
        }
        Ok(match self {
            ManifoldSpec::Euclidean { dim } => (Arc::new(EuclideanMetric { n: *dim }), ChartDomain::unbounded(*dim)),
            ManifoldSpec::FlatTorus { dim, side, bump } => {
                positive("side", *side)?;
                let domain = ChartDomain::torus(*dim, *side);
                match bump {
                    None => (Arc::new(EuclideanMetric { n: *dim }), domain),
                    Some(b) => {
                        positive("bump radius", b.radius)?;
                        if b.center.len() != *dim {
                            return Err(GeomError::DimensionMismatch { expected: *dim, got: b.center.len() });
                        }
                        if 2.0 * b.radius >= *side {
                            return Err(GeomError::InvalidParameters("bump does not fit in the torus".into()));
                        }
                        let factor = BumpFactor { n: *dim, side: *side, bump: b.clone() };
                        (Arc::new(ConformalMetric { factor }), domain)
                    }
                }
            }
            ManifoldSpec::Sphere { dim, radius } => {
                positive("radius", *radius)?;
                (
                    Arc::new(ConformalMetric { factor: StereographicFactor { n: *dim, radius: *radius } }),
                    ChartDomain::unbounded(*dim),
                )
            }
            ManifoldSpec::Hyperbolic { dim, radius, model } => {
                positive("radius", *radius)?;
                match model {
                    HyperbolicModel::Ball => (
                        Arc::new(ConformalMetric { factor: PoincareBallFactor { n: *dim, radius: *radius } }),
                        ChartDomain { lo: vec![-1.0; *dim], hi: vec![1.0; *dim], periodic: vec![false; *dim] },
                    ),
                    HyperbolicModel::HalfSpace => {
                        let mut d = ChartDomain::unbounded(*dim);
                        d.lo[*dim - 1] = 0.0;
                        (Arc::new(ConformalMetric { factor: HalfSpaceFactor { n: *dim, radius: *radius } }), d)
                    }
                }
            }
            ManifoldSpec::Product { factors } => {
                if factors.len() < 2 {
                    return Err(GeomError::InvalidParameters("product needs at least two factors".into()));
                }
                let mut metrics = Vec::new();
                let mut domain = ChartDomain { lo: vec![], hi: vec![], periodic: vec![] };
                for f in factors {
                    let (m, d) = f.parts_any_dim()?;
                    metrics.push(m);
                    domain.lo.extend(d.lo);
                    domain.hi.extend(d.hi);
                    domain.periodic.extend(d.periodic);
                }
                (Arc::new(ProductMetric { factors: metrics }), domain)
            }
            ManifoldSpec::WarpedProduct { dim, warp } => {
                let w = WarpedProduct::new(*dim, warp)?;
                let mut d = ChartDomain::unbounded(*dim);
                d.lo[0] = w.range.0;
                d.hi[0] = w.range.1;
                (Arc::new(w), d)
            }
        })
    }

    /// Like `parts` but allows one-dimensional factors (circles, lines)
    /// inside products.
    fn parts_any_dim(&self) -> Result<(Arc<dyn MetricField>, ChartDomain)> {
        match self {
            ManifoldSpec::Euclidean { dim: 1 } => Ok((Arc::new(EuclideanMetric { n: 1 }), ChartDomain::unbounded(1))),
            ManifoldSpec::FlatTorus { dim: 1, side, bump: None } => {
                Ok((Arc::new(EuclideanMetric { n: 1 }), ChartDomain::torus(1, *side)))
            }
            _ => self.parts(),
        }
    }

    pub fn build(&self) -> Result<ChartManifold> {
        let (metric, domain) = self.parts()?;
        ChartManifold::new(self.name(), metric, domain)
    }
}
