use nalgebra::DMatrix;

use super::{ChartManifold, MetricJet};
use crate::error::{GeomError, Result};
use crate::linalg;

/// Connection coefficients Γ^i_jk, stored at `(i*n + j)*n + k`.
#[derive(Debug, Clone)]
pub struct Christoffel {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Christoffel {
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }
}

/// All-lowered curvature tensor R_ijkl with R_ijij the sectional curvature of
/// an orthonormal pair, stored at `((i*n + j)*n + k)*n + l`.
#[derive(Debug, Clone)]
pub struct RiemannTensor {
    pub n: usize,
    pub data: Vec<f64>,
}

impl RiemannTensor {
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        self.data[((i * n + j) * n + k) * n + l]
    }

    /// R(a, b, c, d) for coordinate vectors.
    pub fn eval(&self, a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                if b[j] == 0.0 {
                    continue;
                }
                let ab = a[i] * b[j];
                for k in 0..n {
                    let base = ((i * n + j) * n + k) * n;
                    let mut inner = 0.0;
                    for l in 0..n {
                        inner += self.data[base + l] * d[l];
                    }
                    s += ab * c[k] * inner;
                }
            }
        }
        s
    }

    /// Coordinate matrix T_ik = R(∂_i, u, ∂_k, u), so that
    /// R(X, u, Y, u) = Xᵀ T Y.
    pub fn along(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut t = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    let base = ((i * n + j) * n + k) * n;
                    let mut inner = 0.0;
                    for l in 0..n {
                        inner += self.data[base + l] * u[l];
                    }
                    s += u[j] * inner;
                }
                t[i * n + k] = s;
            }
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, b| a.max(b.abs()))
    }
}

/// Metric, inverse, connection and curvature at one point.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub n: usize,
    pub g: Vec<f64>,
    pub ginv: Vec<f64>,
    pub gamma: Christoffel,
    pub riemann: RiemannTensor,
}

fn invert(n: usize, g: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let m = DMatrix::from_row_slice(n, n, g);
    let chol = m.cholesky().ok_or_else(|| GeomError::SingularMetric { point: x.to_vec() })?;
    let inv = chol.inverse();
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(GeomError::SingularMetric { point: x.to_vec() });
    }
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = inv[(i, j)];
        }
    }
    Ok(out)
}

fn christoffel_from(jet: &MetricJet, ginv: &[f64]) -> Christoffel {
    let n = jet.n;
    // Lowered symbols Γ_{l,jk} = ½(∂_j g_lk + ∂_k g_lj − ∂_l g_jk).
    let mut low = vec![0.0; n * n * n];
    for l in 0..n {
        for j in 0..n {
            for k in j..n {
                let v = 0.5 * (jet.dg(j, l, k) + jet.dg(k, l, j) - jet.dg(l, j, k));
                low[(l * n + j) * n + k] = v;
                low[(l * n + k) * n + j] = v;
            }
        }
    }
    let mut data = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += ginv[i * n + l] * low[(l * n + j) * n + k];
                }
                data[(i * n + j) * n + k] = s;
                data[(i * n + k) * n + j] = s;
            }
        }
    }
    Christoffel { n, data }
}

fn riemann_from(jet: &MetricJet, gamma: &Christoffel) -> RiemannTensor {
    let n = jet.n;
    // Contractions Q_{p,jk} = g_pn Γ^n_jk.
    let mut low = vec![0.0; n * n * n];
    for p in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for q in 0..n {
                    s += jet.g[p * n + q] * gamma.get(q, j, k);
                }
                low[(p * n + j) * n + k] = s;
            }
        }
    }
    let mut data = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v =
                        0.5 * (jet.ddg(j, k, i, l) + jet.ddg(i, l, j, k) - jet.ddg(j, l, i, k) - jet.ddg(i, k, j, l));
                    for p in 0..n {
                        v += low[(p * n + j) * n + k] * gamma.get(p, i, l)
                            - low[(p * n + j) * n + l] * gamma.get(p, i, k);
                    }
                    data[((i * n + j) * n + k) * n + l] = v;
                }
            }
        }
    }
    RiemannTensor { n, data }
}

impl PointGeometry {
    pub fn from_jet(jet: &MetricJet, x: &[f64]) -> Result<Self> {
        let n = jet.n;
        let ginv = invert(n, &jet.g, x)?;
        let gamma = christoffel_from(jet, &ginv);
        let riemann = riemann_from(jet, &gamma);
        Ok(PointGeometry { n, g: jet.g.clone(), ginv, gamma, riemann })
    }

    pub fn at(m: &ChartManifold, x: &[f64]) -> Result<Self> {
        m.check_point(x)?;
        Self::from_jet(&m.jet(x), x)
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += a[i] * self.g[i * n + j] * b[j];
            }
        }
        s
    }

    pub fn metric_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.g)
    }

    /// Matrix of R_u = R(·,u)u on the frame vectors: entries R(e_a, u, e_b, u).
    pub fn operator_in_frame(&self, u: &[f64], frame: &[Vec<f64>]) -> DMatrix<f64> {
        let n = self.n;
        let t = self.riemann.along(u);
        let d = frame.len();
        let mut tf = vec![0.0; n * d];
        for i in 0..n {
            for b in 0..d {
                let mut s = 0.0;
                for k in 0..n {
                    s += t[i * n + k] * frame[b][k];
                }
                tf[i * d + b] = s;
            }
        }
        let mut out = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in a..d {
                let mut s = 0.0;
                for i in 0..n {
                    s += frame[a][i] * tf[i * d + b];
                }
                out[(a, b)] = s;
                out[(b, a)] = s;
            }
        }
        out
    }
}

pub fn christoffel_at(m: &ChartManifold, x: &[f64]) -> Result<Christoffel> {
    m.check_point(x)?;
    let jet = m.jet(x);
    let ginv = invert(jet.n, &jet.g, x)?;
    Ok(christoffel_from(&jet, &ginv))
}

pub fn curvature_tensor_at(m: &ChartManifold, x: &[f64]) -> Result<RiemannTensor> {
    Ok(PointGeometry::at(m, x)?.riemann)
}

/// R_u = R(·,u)u on u^⊥ in a Gram–Schmidt orthonormal frame.
#[derive(Debug, Clone)]
pub struct CurvatureOperatorAt {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    /// Coordinate vectors of the orthonormal frame of u^⊥.
    pub frame: Vec<Vec<f64>>,
    pub matrix: DMatrix<f64>,
}

impl CurvatureOperatorAt {
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::sym_eigenvalues(&self.matrix)
    }
}

pub(crate) fn check_unit(geo: &PointGeometry, u: &[f64]) -> Result<()> {
    let norm = geo.inner(u, u).max(0.0).sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(GeomError::NotUnit { norm });
    }
    Ok(())
}

pub fn directional_curvature_operator(m: &ChartManifold, x: &[f64], u: &[f64]) -> Result<CurvatureOperatorAt> {
    let geo = PointGeometry::at(m, x)?;
    if u.len() != geo.n {
        return Err(GeomError::DimensionMismatch { expected: geo.n, got: u.len() });
    }
    check_unit(&geo, u)?;
    let frame = super::complement_frame_g(&geo.metric_matrix(), u)?;
    let matrix = geo.operator_in_frame(u, &frame);
    Ok(CurvatureOperatorAt { x: x.to_vec(), u: u.to_vec(), frame, matrix })
}

/// Ric_k(u, V): partial trace of R_u over the span of `v`, which must lie in u^⊥.
pub fn ric_k(m: &ChartManifold, x: &[f64], u: &[f64], v: &[Vec<f64>]) -> Result<f64> {
    let geo = PointGeometry::at(m, x)?;
    let n = geo.n;
    if u.len() != n {
        return Err(GeomError::DimensionMismatch { expected: n, got: u.len() });
    }
    if v.is_empty() || v.len() > n - 1 {
        return Err(GeomError::DimensionMismatch { expected: n - 1, got: v.len() });
    }
    if let Some(bad) = v.iter().find(|w| w.len() != n) {
        return Err(GeomError::DimensionMismatch { expected: n, got: bad.len() });
    }
    check_unit(&geo, u)?;
    for w in v {
        let residual = geo.inner(w, u).abs() / geo.inner(w, w).sqrt().max(1e-300);
        if residual > 1e-8 {
            return Err(GeomError::NotNormal { residual });
        }
    }
    let basis = linalg::gram_schmidt(&geo.metric_matrix(), &[], v)?;
    let t = geo.riemann.along(u);
    let mut s = 0.0;
    for e in &basis {
        for i in 0..n {
            for k in 0..n {
                s += e[i] * t[i * n + k] * e[k];
            }
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ManifoldSpec;

    #[test]
    fn flat_torus_has_no_connection() {
        let m = ManifoldSpec::FlatTorus { dim: 3, side: 2.0 * std::f64::consts::PI, bump: None }.build().unwrap();
        let x = [0.3, 1.0, 2.0];
        assert!(christoffel_at(&m, &x).unwrap().data.iter().all(|v| *v == 0.0));
        assert!(curvature_tensor_at(&m, &x).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn unit_sphere_constant_curvature() {
        let m = ManifoldSpec::Sphere { dim: 3, radius: 1.0 }.build().unwrap();
        let x = [0.2, -0.4, 0.7];
        let geo = PointGeometry::at(&m, &x).unwrap();
        let n = 3;
        let g = |i: usize, j: usize| geo.g[i * n + j];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let expect = g(i, k) * g(j, l) - g(i, l) * g(j, k);
                        assert!((geo.riemann.get(i, j, k, l) - expect).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn ric_k_rejects_bad_input() {
        let m = ManifoldSpec::Euclidean { dim: 3 }.build().unwrap();
        let x = [0.0; 3];
        let u = [1.0, 0.0, 0.0];
        assert!(matches!(ric_k(&m, &x, &[2.0, 0.0, 0.0], &[vec![0.0, 1.0, 0.0]]), Err(GeomError::NotUnit { .. })));
        assert!(matches!(ric_k(&m, &x, &u, &[vec![1.0, 1.0, 0.0]]), Err(GeomError::NotNormal { .. })));
        assert!(matches!(ric_k(&m, &x, &u, &[]), Err(GeomError::DimensionMismatch { .. })));
    }
}
