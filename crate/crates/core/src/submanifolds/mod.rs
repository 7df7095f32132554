//! Closed submanifolds Σ^m ⊂ M given by parameterised embeddings, their
//! extrinsic geometry, and quadrature over the unit normal bundle.

mod embeddings;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{GeomError, Result};
use crate::geometry::{ChartManifold, PointGeometry};
use crate::linalg;
use crate::quadrature::{sphere_rule, tensor_product, FiberRule, Rule1d};

pub use embeddings::{
    AffineEmbedding, Embedding, PointEmbedding, RoundSphereEmbedding, SphereTarget, SubmanifoldSpec, EMBEDDING_FD_STEP,
};

/// Parameter box of an embedding; periodic directions identify the ends.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub periodic: Vec<bool>,
}

impl ParamDomain {
    pub fn empty() -> Self {
        ParamDomain { lo: vec![], hi: vec![], periodic: vec![] }
    }

    /// Hyperspherical angles: m − 1 polar angles in [0, π] and a periodic
    /// azimuth in [0, 2π).
    pub fn hyperspherical(m: usize) -> Self {
        let mut d = ParamDomain { lo: vec![0.0; m], hi: vec![PI; m], periodic: vec![false; m] };
        if m > 0 {
            d.hi[m - 1] = 2.0 * PI;
            d.periodic[m - 1] = true;
        }
        d
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn axis_rule(&self, i: usize, resolution: usize) -> Rule1d {
        let res = resolution.max(1);
        if self.periodic[i] {
            Rule1d::periodic(self.lo[i], self.hi[i] - self.lo[i], res)
        } else {
            Rule1d::on_interval(self.lo[i], self.hi[i], res)
        }
    }

    /// Tensor rule with `resolution` nodes per axis (parameter measure only).
    pub fn rule(&self, resolution: usize) -> Vec<(Vec<f64>, f64)> {
        let rules: Vec<Rule1d> = (0..self.dim()).map(|i| self.axis_rule(i, resolution)).collect();
        tensor_product(&rules)
    }
}

/// Closed submanifold of the ambient chart.
#[derive(Debug, Clone)]
pub struct EmbeddedSubmanifold {
    pub name: String,
    pub m: usize,
    pub embedding: Arc<dyn Embedding>,
    pub domain: ParamDomain,
    pub minimal_declared: bool,
    pub totally_geodesic_declared: bool,
}

impl EmbeddedSubmanifold {
    pub(crate) fn renamed(mut self, name: &str, minimal: bool, totally_geodesic: bool) -> Self {
        self.name = name.to_string();
        self.minimal_declared = minimal;
        self.totally_geodesic_declared = totally_geodesic;
        self
    }
}

/// Tangent and normal frames at one parameter point, with the covariant
/// derivatives ∇_{e_a} e_b needed for the second fundamental form.
#[derive(Debug, Clone)]
pub struct Frames {
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    pub tangent: Vec<Vec<f64>>,
    pub normal: Vec<Vec<f64>>,
    /// √det of the induced metric in parameter coordinates.
    pub area_element: f64,
    /// `second[a][b]` = ∇_{e_a} e_b (coordinate vector), up to tangential terms.
    pub second: Vec<Vec<Vec<f64>>>,
    pub geometry: PointGeometry,
}

impl Frames {
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.geometry.inner(a, b)
    }

    /// Normal vector with frame coefficients `c`.
    pub fn normal_vector(&self, c: &[f64]) -> Vec<f64> {
        let n = self.x.len();
        let mut v = vec![0.0; n];
        for (cj, nu) in c.iter().zip(&self.normal) {
            for (vi, ni) in v.iter_mut().zip(nu) {
                *vi += cj * ni;
            }
        }
        v
    }

    /// S_ξ in the tangent frame: ⟨S_ξ e_a, e_b⟩ = −⟨ξ, ∇_{e_a} e_b⟩.
    pub fn weingarten(&self, xi: &[f64]) -> DMatrix<f64> {
        let m = self.tangent.len();
        let mut s = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in a..m {
                let v = -self.inner(xi, &self.second[a][b]);
                s[(a, b)] = v;
                s[(b, a)] = v;
            }
        }
        s
    }

    /// η = Σ_j (tr S_{ν_j} / m) ν_j; zero for points.
    pub fn mean_curvature(&self) -> Vec<f64> {
        let m = self.tangent.len();
        if m == 0 {
            return vec![0.0; self.x.len()];
        }
        let c: Vec<f64> = self.normal.iter().map(|nu| self.weingarten(nu).trace() / m as f64).collect();
        self.normal_vector(&c)
    }

    pub(crate) fn check_normal(&self, xi: &[f64]) -> Result<()> {
        let norm = self.inner(xi, xi).max(0.0).sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(GeomError::NotUnit { norm });
        }
        let residual = self.tangent.iter().map(|e| self.inner(xi, e).abs()).fold(0.0, f64::max);
        if residual > 1e-8 {
            return Err(GeomError::NotNormal { residual });
        }
        Ok(())
    }
}

pub fn frames_at(sigma: &EmbeddedSubmanifold, mfd: &ChartManifold, s: &[f64]) -> Result<Frames> {
    let m = sigma.m;
    if s.len() != m {
        return Err(GeomError::DimensionMismatch { expected: m, got: s.len() });
    }
    let x = sigma.embedding.map(s);
    let geometry = PointGeometry::at(mfd, &x)?;
    let n = geometry.n;
    let g = geometry.metric_matrix();
    let d = sigma.embedding.differential(s);
    let rank_err = || GeomError::RankDeficient { param: s.to_vec() };

    let mut gram = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            gram[(a, b)] = geometry.inner(&d[a], &d[b]);
        }
    }
    let area_element = if m == 0 { 1.0 } else { gram.determinant().max(0.0).sqrt() };
    let scale = (0..m).map(|a| gram[(a, a)]).product::<f64>().sqrt();
    if m > 0 && !(area_element > 1e-10 * scale) {
        return Err(rank_err());
    }
    let tangent = linalg::gram_schmidt(&g, &[], &d).map_err(|_| rank_err())?;
    let normal = linalg::complete_orthonormal(&g, &tangent, n)?;

    // e_a = Σ_α C_aα ∂_α x, with Cᵀ = G⁻¹ Dᵀ g E.
    let mut coeff = DMatrix::zeros(m, m);
    if m > 0 {
        let mut dge = DMatrix::zeros(m, m);
        for al in 0..m {
            for b in 0..m {
                dge[(al, b)] = geometry.inner(&d[al], &tangent[b]);
            }
        }
        let ct = gram.clone().lu().solve(&dge).ok_or_else(rank_err)?;
        coeff = ct.transpose();
    }

    let dd = sigma.embedding.second_derivatives(s);
    // B_αβ = ∂_α∂_β x + Γ(∂_α x, ∂_β x).
    let mut b = vec![vec![vec![0.0; n]; m]; m];
    for al in 0..m {
        for be in al..m {
            let mut v = dd[al][be].clone();
            for (i, vi) in v.iter_mut().enumerate() {
                let mut sum = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        sum += geometry.gamma.get(i, j, k) * d[al][j] * d[be][k];
                    }
                }
                *vi += sum;
            }
            b[be][al] = v.clone();
            b[al][be] = v;
        }
    }
    let mut second = vec![vec![vec![0.0; n]; m]; m];
    for a in 0..m {
        for c in 0..m {
            for al in 0..m {
                for be in 0..m {
                    let w = coeff[(a, al)] * coeff[(c, be)];
                    if w != 0.0 {
                        for i in 0..n {
                            second[a][c][i] += w * b[al][be][i];
                        }
                    }
                }
            }
        }
    }
    Ok(Frames { s: s.to_vec(), x, tangent, normal, area_element, second, geometry })
}

pub fn weingarten(sigma: &EmbeddedSubmanifold, mfd: &ChartManifold, s: &[f64], xi: &[f64]) -> Result<DMatrix<f64>> {
    let f = frames_at(sigma, mfd, s)?;
    if xi.len() != f.x.len() {
        return Err(GeomError::DimensionMismatch { expected: f.x.len(), got: xi.len() });
    }
    f.check_normal(xi)?;
    Ok(f.weingarten(xi))
}

pub fn mean_curvature_vector(sigma: &EmbeddedSubmanifold, mfd: &ChartManifold, s: &[f64]) -> Result<Vec<f64>> {
    Ok(frames_at(sigma, mfd, s)?.mean_curvature())
}

/// One base node of Σ with its frames.
#[derive(Debug, Clone)]
pub struct BaseNode {
    pub frames: Frames,
    /// Quadrature weight including the area element.
    pub weight: f64,
    pub eta: Vec<f64>,
}

/// Product quadrature over the unit normal bundle ν̂.
#[derive(Debug, Clone)]
pub struct NormalFiberGrid {
    pub m: usize,
    pub n: usize,
    pub base: Vec<BaseNode>,
    /// Unit vectors in R^{n−m} (normal-frame coefficients) with weights
    /// summing to vol(S^{n−m−1}).
    pub fiber: Vec<(Vec<f64>, f64)>,
}

/// A unit normal ξ at a base node with its ν̂ weight.
#[derive(Debug, Clone)]
pub struct NormalSample {
    pub base: usize,
    pub fiber: usize,
    pub xi: Vec<f64>,
    pub weight: f64,
    pub eta_dot_xi: f64,
}

impl NormalFiberGrid {
    pub fn vol_sigma(&self) -> f64 {
        self.base.iter().map(|b| b.weight).sum()
    }

    pub fn fiber_volume(&self) -> f64 {
        self.fiber.iter().map(|f| f.1).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.vol_sigma() * self.fiber_volume()
    }

    pub fn samples(&self) -> Vec<NormalSample> {
        let mut out = Vec::with_capacity(self.base.len() * self.fiber.len());
        for (bi, b) in self.base.iter().enumerate() {
            for (fi, (c, w)) in self.fiber.iter().enumerate() {
                let xi = b.frames.normal_vector(c);
                let eta_dot_xi = b.frames.inner(&b.eta, &xi);
                out.push(NormalSample { base: bi, fiber: fi, xi, weight: b.weight * w, eta_dot_xi });
            }
        }
        out
    }

    /// Largest |η| over base nodes.
    pub fn max_mean_curvature(&self) -> f64 {
        self.base.iter().map(|b| b.frames.inner(&b.eta, &b.eta).max(0.0).sqrt()).fold(0.0, f64::max)
    }
}

pub fn unit_normal_grid(
    sigma: &EmbeddedSubmanifold,
    mfd: &ChartManifold,
    base_resolution: usize,
    fiber_rule: &FiberRule,
) -> Result<NormalFiberGrid> {
    let n = mfd.dim();
    let m = sigma.m;
    if m + 1 > n {
        return Err(GeomError::InvalidParameters(format!("fiber dimension of Σ^{m} in M^{n} is negative")));
    }
    let rule = sigma.domain.rule(base_resolution);
    let base: Result<Vec<BaseNode>> = rule
        .par_iter()
        .map(|(s, w)| {
            let frames = frames_at(sigma, mfd, s)?;
            let eta = frames.mean_curvature();
            Ok(BaseNode { weight: w * frames.area_element, eta, frames })
        })
        .collect();
    let fiber = sphere_rule(n - m - 1, fiber_rule);
    Ok(NormalFiberGrid { m, n, base: base?, fiber })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ManifoldSpec;
    use crate::quadrature::sphere_volume;

    #[test]
    fn coordinate_circle_frames() {
        let amb = ManifoldSpec::FlatTorus { dim: 4, side: 2.0 * PI, bump: None };
        let mfd = amb.build().unwrap();
        let sigma = SubmanifoldSpec::ClosedGeodesic { axis: 0, offset: None }.build(&amb).unwrap();
        let f = frames_at(&sigma, &mfd, &[1.0]).unwrap();
        assert_eq!(f.tangent, vec![vec![1.0, 0.0, 0.0, 0.0]]);
        assert_eq!(f.normal.len(), 3);
        for nu in &f.normal {
            assert_eq!(nu[0], 0.0);
        }
        assert_eq!(f.weingarten(&f.normal[1])[(0, 0)], 0.0);
        assert_eq!(mean_curvature_vector(&sigma, &mfd, &[2.0]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn euclidean_sphere_outward_weingarten() {
        let amb = ManifoldSpec::Euclidean { dim: 3 };
        let mfd = amb.build().unwrap();
        let a = 1.7;
        let sigma = SubmanifoldSpec::RoundSphere { radius: a }.build(&amb).unwrap();
        let s = [1.0, 0.4];
        let x = sigma.embedding.map(&s);
        let outward: Vec<f64> = x.iter().map(|v| v / a).collect();
        let sxi = weingarten(&sigma, &mfd, &s, &outward).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 / a } else { 0.0 };
                assert!((sxi[(i, j)] - expect).abs() < 1e-12);
            }
        }
        let eta = mean_curvature_vector(&sigma, &mfd, &s).unwrap();
        for i in 0..3 {
            assert!((eta[i] - outward[i] / a).abs() < 1e-12);
        }
    }

    #[test]
    fn weingarten_rejects_tangent_and_non_unit() {
        let amb = ManifoldSpec::Euclidean { dim: 3 };
        let mfd = amb.build().unwrap();
        let sigma = SubmanifoldSpec::RoundSphere { radius: 1.0 }.build(&amb).unwrap();
        let s = [PI / 2.0, 0.0];
        assert!(matches!(weingarten(&sigma, &mfd, &s, &[1.0, 0.0, 0.0]), Err(GeomError::NotNormal { .. })));
        assert!(matches!(weingarten(&sigma, &mfd, &s, &[0.0, 2.0, 0.0]), Err(GeomError::NotUnit { .. })));
    }

    #[test]
    fn fiber_weights() {
        let amb = ManifoldSpec::Euclidean { dim: 3 };
        let mfd = amb.build().unwrap();
        let point = SubmanifoldSpec::Point { at: vec![0.0; 3] }.build(&amb).unwrap();
        let grid = unit_normal_grid(&point, &mfd, 4, &FiberRule::default()).unwrap();
        assert!((grid.total_weight() - 4.0 * PI).abs() < 1e-12);

        let amb = ManifoldSpec::Sphere { dim: 3, radius: 1.0 };
        let mfd = amb.build().unwrap();
        let eq = SubmanifoldSpec::Equator { tilt: PI / 4.0 }.build(&amb).unwrap();
        let grid = unit_normal_grid(&eq, &mfd, 16, &FiberRule::default()).unwrap();
        assert_eq!(grid.fiber.len(), 2);
        assert!((grid.total_weight() - 2.0 * sphere_volume(2)).abs() < 1e-8 * 8.0 * PI);
    }
}
