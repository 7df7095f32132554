//! Parameterised embeddings and the built-in submanifold descriptions.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{EmbeddedSubmanifold, ParamDomain};
use crate::error::{GeomError, Result};
use crate::geometry::ManifoldSpec;

pub const EMBEDDING_FD_STEP: f64 = 1e-4;

/// A map from an m-dimensional parameter box into the ambient chart.
pub trait Embedding: Send + Sync + std::fmt::Debug {
    fn param_dim(&self) -> usize;
    fn ambient_dim(&self) -> usize;
    fn map(&self, s: &[f64]) -> Vec<f64>;

    /// ∂_a x for each parameter a. Central differences by default.
    fn differential(&self, s: &[f64]) -> Vec<Vec<f64>> {
        let h = EMBEDDING_FD_STEP;
        let mut t = s.to_vec();
        (0..self.param_dim())
            .map(|a| {
                t[a] = s[a] + h;
                let p = self.map(&t);
                t[a] = s[a] - h;
                let m = self.map(&t);
                t[a] = s[a];
                p.iter().zip(&m).map(|(x, y)| (x - y) / (2.0 * h)).collect()
            })
            .collect()
    }

    /// ∂_a ∂_b x, indexed `[a][b]`. Central differences by default.
    fn second_derivatives(&self, s: &[f64]) -> Vec<Vec<Vec<f64>>> {
        let h = EMBEDDING_FD_STEP;
        let m = self.param_dim();
        let x0 = self.map(s);
        let mut t = s.to_vec();
        let mut out = vec![vec![vec![0.0; self.ambient_dim()]; m]; m];
        for a in 0..m {
            for b in a..m {
                let v: Vec<f64> = if a == b {
                    t[a] = s[a] + h;
                    let p = self.map(&t);
                    t[a] = s[a] - h;
                    let q = self.map(&t);
                    t[a] = s[a];
                    (0..x0.len()).map(|i| (p[i] - 2.0 * x0[i] + q[i]) / (h * h)).collect()
                } else {
                    let mut corner = |sa: f64, sb: f64| {
                        t[a] = s[a] + sa * h;
                        t[b] = s[b] + sb * h;
                        let v = self.map(&t);
                        t[a] = s[a];
                        t[b] = s[b];
                        v
                    };
                    let (pp, pm, mp, mm) = (corner(1.0, 1.0), corner(1.0, -1.0), corner(-1.0, 1.0), corner(-1.0, -1.0));
                    (0..x0.len()).map(|i| (pp[i] - pm[i] - mp[i] + mm[i]) / (4.0 * h * h)).collect()
                };
                out[b][a] = v.clone();
                out[a][b] = v;
            }
        }
        out
    }
}

/// A single point (m = 0).
#[derive(Debug, Clone)]
pub struct PointEmbedding {
    pub at: Vec<f64>,
}

impl Embedding for PointEmbedding {
    fn param_dim(&self) -> usize {
        0
    }
    fn ambient_dim(&self) -> usize {
        self.at.len()
    }
    fn map(&self, _s: &[f64]) -> Vec<f64> {
        self.at.clone()
    }
    fn differential(&self, _s: &[f64]) -> Vec<Vec<f64>> {
        vec![]
    }
    fn second_derivatives(&self, _s: &[f64]) -> Vec<Vec<Vec<f64>>> {
        vec![]
    }
}

/// x = origin + Σ s_a v_a.
#[derive(Debug, Clone)]
pub struct AffineEmbedding {
    pub origin: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
}

impl Embedding for AffineEmbedding {
    fn param_dim(&self) -> usize {
        self.directions.len()
    }
    fn ambient_dim(&self) -> usize {
        self.origin.len()
    }
    fn map(&self, s: &[f64]) -> Vec<f64> {
        let mut x = self.origin.clone();
        for (sa, v) in s.iter().zip(&self.directions) {
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += sa * vi;
            }
        }
        x
    }
    fn differential(&self, _s: &[f64]) -> Vec<Vec<f64>> {
        self.directions.clone()
    }
    fn second_derivatives(&self, _s: &[f64]) -> Vec<Vec<Vec<f64>>> {
        let m = self.param_dim();
        vec![vec![vec![0.0; self.ambient_dim()]; m]; m]
    }
}

/// Where the points of a round sphere live.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereTarget {
    /// Directly in Euclidean coordinates.
    Euclidean,
    /// On the unit sphere S^n ⊂ R^{n+1}, seen through the stereographic chart
    /// from (0, …, 0, 1).
    Stereographic,
}

/// Round m-sphere Y(θ) = c + a Σ ω_j(θ) b_j with ω the hyperspherical point
/// of the angles θ_1..θ_m and b_j orthonormal in the carrier space.
#[derive(Debug, Clone)]
pub struct RoundSphereEmbedding {
    pub center: Vec<f64>,
    pub radius: f64,
    pub basis: Vec<Vec<f64>>,
    pub target: SphereTarget,
}

/// (f, f′, f″) factors of ω_j in angle i.
fn omega_factor(j: usize, i: usize, m: usize, th: f64) -> [f64; 3] {
    let (s, c) = th.sin_cos();
    if i < j {
        [s, c, -s]
    } else if i == j && j < m {
        [c, -s, -c]
    } else {
        [1.0, 0.0, 0.0]
    }
}

/// Point with first and second derivatives in the parameters.
type Jet2 = (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>);

impl RoundSphereEmbedding {
    /// Carrier-space point, first and second derivatives.
    fn carrier(&self, s: &[f64]) -> Jet2 {
        let m = s.len();
        let dim = self.center.len();
        let mut y = self.center.clone();
        let mut dy = vec![vec![0.0; dim]; m];
        let mut ddy = vec![vec![vec![0.0; dim]; m]; m];
        for j in 0..=m {
            let f: Vec<[f64; 3]> = (0..m).map(|i| omega_factor(j, i, m, s[i])).collect();
            let prod = |a: Option<usize>, b: Option<usize>| {
                let mut p = 1.0;
                for (i, fi) in f.iter().enumerate() {
                    let order = (a == Some(i)) as usize + (b == Some(i)) as usize;
                    p *= fi[order];
                }
                p
            };
            let w = self.radius * prod(None, None);
            for (yk, bk) in y.iter_mut().zip(&self.basis[j]) {
                *yk += w * bk;
            }
            for a in 0..m {
                let wa = self.radius * prod(Some(a), None);
                for (k, bk) in self.basis[j].iter().enumerate() {
                    dy[a][k] += wa * bk;
                }
                for b in 0..m {
                    let wab = self.radius * prod(Some(a), Some(b));
                    for (k, bk) in self.basis[j].iter().enumerate() {
                        ddy[a][b][k] += wab * bk;
                    }
                }
            }
        }
        (y, dy, ddy)
    }

    fn all(&self, s: &[f64]) -> Jet2 {
        let (y, dy, ddy) = self.carrier(s);
        match self.target {
            SphereTarget::Euclidean => (y, dy, ddy),
            SphereTarget::Stereographic => {
                let m = s.len();
                let n = y.len() - 1;
                let q = 1.0 / (1.0 - y[n]);
                let x: Vec<f64> = (0..n).map(|i| y[i] * q).collect();
                // σ_i = Y_i q with q = 1/(1 − Y_n).
                let dx: Vec<Vec<f64>> =
                    (0..m).map(|a| (0..n).map(|i| q * dy[a][i] + y[i] * q * q * dy[a][n]).collect()).collect();
                let mut ddx = vec![vec![vec![0.0; n]; m]; m];
                for a in 0..m {
                    for b in 0..m {
                        for i in 0..n {
                            ddx[a][b][i] = q * ddy[a][b][i]
                                + y[i] * q * q * ddy[a][b][n]
                                + q * q * (dy[a][i] * dy[b][n] + dy[b][i] * dy[a][n])
                                + 2.0 * y[i] * q * q * q * dy[a][n] * dy[b][n];
                        }
                    }
                }
                (x, dx, ddx)
            }
        }
    }
}

impl Embedding for RoundSphereEmbedding {
    fn param_dim(&self) -> usize {
        self.basis.len() - 1
    }
    fn ambient_dim(&self) -> usize {
        match self.target {
            SphereTarget::Euclidean => self.center.len(),
            SphereTarget::Stereographic => self.center.len() - 1,
        }
    }
    fn map(&self, s: &[f64]) -> Vec<f64> {
        self.all(s).0
    }
    fn differential(&self, s: &[f64]) -> Vec<Vec<f64>> {
        self.all(s).1
    }
    fn second_derivatives(&self, s: &[f64]) -> Vec<Vec<Vec<f64>>> {
        self.all(s).2
    }
}

fn unit(dim: usize, i: usize) -> Vec<f64> {
    (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect()
}

fn default_tilt() -> f64 {
    PI / 4.0
}

/// Named submanifolds addressable from configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum SubmanifoldSpec {
    Point {
        at: Vec<f64>,
    },
    /// Coordinate circle of a flat torus along `axis` through `offset`.
    ClosedGeodesic {
        axis: usize,
        #[serde(default)]
        offset: Option<Vec<f64>>,
    },
    /// Coordinate sub-torus of a flat torus spanned by `axes`.
    SubTorus {
        axes: Vec<usize>,
        #[serde(default)]
        offset: Option<Vec<f64>>,
    },
    /// Great hypersphere of a round sphere, tilted against the chart pole.
    Equator {
        #[serde(default = "default_tilt")]
        tilt: f64,
    },
    /// Great circle through the chart's x1x2 unit circle.
    GreatCircle,
    /// Round hypersphere: of Euclidean radius `radius` in R^n, or at
    /// extrinsic radius `radius` (sin of the geodesic radius) around the chart
    /// origin of a round sphere.
    RoundSphere {
        radius: f64,
    },
    /// {point} × (last factor) in a product.
    FactorSphere {
        point: Vec<f64>,
    },
}

impl SubmanifoldSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SubmanifoldSpec::Point { .. } => "point",
            SubmanifoldSpec::ClosedGeodesic { .. } => "closed_geodesic",
            SubmanifoldSpec::SubTorus { .. } => "sub_torus",
            SubmanifoldSpec::Equator { .. } => "equator",
            SubmanifoldSpec::GreatCircle => "great_circle",
            SubmanifoldSpec::RoundSphere { .. } => "round_sphere",
            SubmanifoldSpec::FactorSphere { .. } => "factor_sphere",
        }
    }

    /// Whether the construction is minimal (η ≡ 0); checked numerically
    /// before any bound that needs it.
    pub fn declared_minimal(&self) -> bool {
        !matches!(self, SubmanifoldSpec::RoundSphere { .. })
    }

    pub fn declared_totally_geodesic(&self) -> bool {
        !matches!(self, SubmanifoldSpec::RoundSphere { .. } | SubmanifoldSpec::Point { .. })
    }

    pub fn build(&self, ambient: &ManifoldSpec) -> Result<EmbeddedSubmanifold> {
        let n = ambient.dim();
        let wrong = |what: &str| {
            Err(GeomError::InvalidParameters(format!("{} needs {what}, got a {} ambient", self.name(), ambient.name())))
        };
        let (embedding, domain): (Arc<dyn Embedding>, ParamDomain) = match self {
            SubmanifoldSpec::Point { at } => {
                if at.len() != n {
                    return Err(GeomError::DimensionMismatch { expected: n, got: at.len() });
                }
                (Arc::new(PointEmbedding { at: at.clone() }), ParamDomain::empty())
            }
            SubmanifoldSpec::ClosedGeodesic { axis, offset } => {
                return SubmanifoldSpec::SubTorus { axes: vec![*axis], offset: offset.clone() }
                    .build(ambient)
                    .map(|s| s.renamed(self.name(), self.declared_minimal(), self.declared_totally_geodesic()));
            }
            SubmanifoldSpec::SubTorus { axes, offset } => {
                let ManifoldSpec::FlatTorus { side, .. } = ambient else {
                    return wrong("a flat torus");
                };
                if axes.is_empty() || axes.len() >= n - 1 {
                    return Err(GeomError::InvalidParameters(format!("sub-torus needs 1..{} axes", n - 2)));
                }
                if axes.iter().any(|a| *a >= n) {
                    return Err(GeomError::InvalidParameters("sub-torus axis out of range".into()));
                }
                let mut sorted = axes.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != axes.len() {
                    return Err(GeomError::InvalidParameters("repeated sub-torus axis".into()));
                }
                let origin = offset.clone().unwrap_or_else(|| vec![0.0; n]);
                if origin.len() != n {
                    return Err(GeomError::DimensionMismatch { expected: n, got: origin.len() });
                }
                let directions = axes.iter().map(|a| unit(n, *a)).collect();
                let m = axes.len();
                (
                    Arc::new(AffineEmbedding { origin, directions }),
                    ParamDomain { lo: vec![0.0; m], hi: vec![*side; m], periodic: vec![true; m] },
                )
            }
            SubmanifoldSpec::Equator { tilt } => {
                if !matches!(ambient, ManifoldSpec::Sphere { .. }) {
                    return wrong("a round sphere");
                }
                // Unit normal a = (sin β, 0, …, −cos β) of the hyperplane in R^{n+1}.
                let (sb, cb) = tilt.sin_cos();
                let mut basis = vec![{
                    let mut v = vec![0.0; n + 1];
                    v[0] = cb;
                    v[n] = sb;
                    v
                }];
                for i in 1..n {
                    basis.push(unit(n + 1, i));
                }
                (
                    Arc::new(RoundSphereEmbedding {
                        center: vec![0.0; n + 1],
                        radius: 1.0,
                        basis,
                        target: SphereTarget::Stereographic,
                    }),
                    ParamDomain::hyperspherical(n - 1),
                )
            }
            SubmanifoldSpec::GreatCircle => {
                if !matches!(ambient, ManifoldSpec::Sphere { .. }) {
                    return wrong("a round sphere");
                }
                (
                    Arc::new(RoundSphereEmbedding {
                        center: vec![0.0; n + 1],
                        radius: 1.0,
                        basis: vec![unit(n + 1, 0), unit(n + 1, 1)],
                        target: SphereTarget::Stereographic,
                    }),
                    ParamDomain::hyperspherical(1),
                )
            }
            SubmanifoldSpec::RoundSphere { radius } => {
                let target = match ambient {
                    ManifoldSpec::Euclidean { .. } => SphereTarget::Euclidean,
                    ManifoldSpec::Sphere { .. } => {
                        if !(*radius < 1.0) {
                            return Err(GeomError::InvalidParameters("round sphere in S^n needs radius < 1".into()));
                        }
                        SphereTarget::Stereographic
                    }
                    _ => return wrong("a Euclidean or round-sphere"),
                };
                if !(*radius > 0.0) {
                    return Err(GeomError::InvalidParameters("round sphere radius must be positive".into()));
                }
                let (center, basis) = match target {
                    SphereTarget::Euclidean => (vec![0.0; n], (0..n).map(|i| unit(n, i)).collect()),
                    SphereTarget::Stereographic => {
                        let mut c = vec![0.0; n + 1];
                        c[n] = -(1.0 - radius * radius).sqrt();
                        (c, (0..n).map(|i| unit(n + 1, i)).collect())
                    }
                };
                (
                    Arc::new(RoundSphereEmbedding { center, radius: *radius, basis, target }),
                    ParamDomain::hyperspherical(n - 1),
                )
            }
            SubmanifoldSpec::FactorSphere { point } => {
                let ManifoldSpec::Product { factors } = ambient else {
                    return wrong("a product");
                };
                let last = factors.last().expect("product has factors");
                let fd = last.dim();
                if point.len() != n - fd {
                    return Err(GeomError::DimensionMismatch { expected: n - fd, got: point.len() });
                }
                let factor = last.build()?;
                let mut origin = point.clone();
                origin.extend(std::iter::repeat_n(0.0, fd));
                let directions = (0..fd).map(|i| unit(n, n - fd + i)).collect();
                (
                    Arc::new(AffineEmbedding { origin, directions }),
                    ParamDomain {
                        lo: factor.domain.lo.clone(),
                        hi: factor.domain.hi.clone(),
                        periodic: factor.domain.periodic.clone(),
                    },
                )
            }
        };
        if embedding.ambient_dim() != n {
            return Err(GeomError::DimensionMismatch { expected: n, got: embedding.ambient_dim() });
        }
        let m = embedding.param_dim();
        if m + 1 > n {
            return Err(GeomError::InvalidParameters(format!("submanifold dimension {m} ≥ ambient {n}")));
        }
        Ok(EmbeddedSubmanifold {
            name: self.name().to_string(),
            m,
            embedding,
            domain,
            minimal_declared: self.declared_minimal(),
            totally_geodesic_declared: self.declared_totally_geodesic(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    /// Same map through the default finite-difference derivatives.
    #[derive(Debug)]
    struct Fd<'a>(&'a RoundSphereEmbedding);

    impl Embedding for Fd<'_> {
        fn param_dim(&self) -> usize {
            self.0.param_dim()
        }
        fn ambient_dim(&self) -> usize {
            self.0.ambient_dim()
        }
        fn map(&self, s: &[f64]) -> Vec<f64> {
            self.0.map(s)
        }
    }

    #[test]
    fn analytic_sphere_derivatives_match_differences() {
        let (sb, cb) = (PI / 4.0).sin_cos();
        let tilted = RoundSphereEmbedding {
            center: vec![0.0; 4],
            radius: 1.0,
            basis: vec![vec![cb, 0.0, 0.0, sb], unit(4, 1), unit(4, 2)],
            target: SphereTarget::Stereographic,
        };
        let small = RoundSphereEmbedding {
            center: vec![0.0, 0.0, 0.0, -0.6],
            radius: 0.8,
            basis: (0..3).map(|i| unit(4, i)).collect(),
            target: SphereTarget::Stereographic,
        };
        let flat = RoundSphereEmbedding {
            center: vec![0.5, 0.0, 0.0],
            radius: 2.0,
            basis: (0..3).map(|i| unit(3, i)).collect(),
            target: SphereTarget::Euclidean,
        };
        let s = [0.7, 1.9];
        for e in [&tilted, &small, &flat] {
            let fd = Fd(e);
            let (a, b) = (e.differential(&s), fd.differential(&s));
            for i in 0..2 {
                assert!(max_diff(&a[i], &b[i]) < 1e-7);
            }
            let (a, b) = (e.second_derivatives(&s), fd.second_derivatives(&s));
            for i in 0..2 {
                for j in 0..2 {
                    assert!(max_diff(&a[i][j], &b[i][j]) < 1e-6, "{:?} vs {:?}", a[i][j], b[i][j]);
                }
            }
        }
    }

    #[test]
    fn round_sphere_lies_on_the_unit_sphere() {
        let sub =
            SubmanifoldSpec::RoundSphere { radius: 0.8 }.build(&ManifoldSpec::Sphere { dim: 3, radius: 1.0 }).unwrap();
        let x = sub.embedding.map(&[1.1, 0.3]);
        // Inverse stereographic: |Y| = 1 and Y_4 = −0.6.
        let s: f64 = x.iter().map(|v| v * v).sum();
        let y4 = (s - 1.0) / (s + 1.0);
        assert!((y4 + 0.6).abs() < 1e-14);
    }

    #[test]
    fn wrong_ambient_is_rejected() {
        let err = SubmanifoldSpec::GreatCircle.build(&ManifoldSpec::Euclidean { dim: 3 }).unwrap_err();
        assert!(matches!(err, GeomError::InvalidParameters(_)));
        let err = SubmanifoldSpec::SubTorus { axes: vec![0, 1, 2], offset: None }
            .build(&ManifoldSpec::FlatTorus { dim: 4, side: 1.0, bump: None })
            .unwrap_err();
        assert!(matches!(err, GeomError::InvalidParameters(_)));
    }
}
