//! Pointwise minimum of k-Ricci curvature over unit directions.

use nalgebra::DMatrix;

use super::{ChartManifold, PointGeometry};
use crate::error::{GeomError, Result};
use crate::linalg;
use crate::quadrature::{direction_set, sphere_volume};

/// Search settings for the outer minimisation over unit directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoOptions {
    pub grid: usize,
    /// Number of best grid directions refined by coordinate descent.
    pub starts: usize,
    pub rounds: usize,
}

impl Default for RhoOptions {
    fn default() -> Self {
        RhoOptions { grid: 2048, starts: 4, rounds: 3 }
    }
}

/// Curvature tensor in an orthonormal frame at a point.
#[derive(Debug, Clone)]
pub struct FrameCurvature {
    pub n: usize,
    pub data: Vec<f64>,
}

impl FrameCurvature {
    pub fn at(m: &ChartManifold, x: &[f64]) -> Result<Self> {
        let geo = PointGeometry::at(m, x)?;
        let frame = m.orthonormal_frame(x)?;
        Ok(Self::from_geometry(&geo, &frame))
    }

    pub fn from_geometry(geo: &PointGeometry, frame: &[Vec<f64>]) -> Self {
        let n = geo.n;
        let src = &geo.riemann.data;
        // Contract one index at a time: R̂_abcd = e_a^i e_b^j e_c^k e_d^l R_ijkl.
        let mut cur = src.clone();
        for slot in 0..4 {
            let mut next = vec![0.0; n * n * n * n];
            let stride = n.pow(3 - slot as u32);
            for (idx, v) in next.iter_mut().enumerate() {
                let a = (idx / stride) % n;
                let base = idx - a * stride;
                let mut s = 0.0;
                for i in 0..n {
                    s += frame[a][i] * cur[base + i * stride];
                }
                *v = s;
            }
            cur = next;
        }
        FrameCurvature { n, data: cur }
    }

    /// Smallest eigenvalue of the curvature operator on 2-vectors; a lower
    /// bound for every sectional curvature.
    pub fn operator_min_eigenvalue(&self) -> f64 {
        let n = self.n;
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let op = DMatrix::from_fn(pairs.len(), pairs.len(), |i, j| {
            let ((a, b), (c, d)) = (pairs[i], pairs[j]);
            self.data[((a * n + b) * n + c) * n + d]
        });
        linalg::sym_eigenvalues(&op).first().copied().unwrap_or(0.0)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Sum of the k smallest eigenvalues of R_w on w^⊥, for a Euclidean unit
/// coefficient vector `w` in the orthonormal frame.
pub fn rho_objective(r: &FrameCurvature, k: usize, w: &[f64]) -> f64 {
    let n = r.n;
    let mut kmat = DMatrix::zeros(n, n);
    for b in 0..n {
        for c in b..n {
            let mut s = 0.0;
            for a in 0..n {
                if w[a] == 0.0 {
                    continue;
                }
                let base = ((b * n + a) * n + c) * n;
                let mut inner = 0.0;
                for d in 0..n {
                    inner += r.data[base + d] * w[d];
                }
                s += w[a] * inner;
            }
            kmat[(b, c)] = s;
            kmat[(c, b)] = s;
        }
    }
    let q = linalg::complement_basis(w);
    let proj = q.transpose() * kmat * q;
    linalg::sym_eigenvalues(&proj).iter().take(k).sum()
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= n;
    }
}

fn rotate(w: &[f64], dir: &[f64], theta: f64) -> Vec<f64> {
    let (s, c) = theta.sin_cos();
    let mut v: Vec<f64> = w.iter().zip(dir).map(|(a, b)| c * a + s * b).collect();
    normalize(&mut v);
    v
}

/// Golden-section minimisation of θ ↦ f(rotate(w, dir, θ)) on [−h, h].
fn line_search(f: &impl Fn(&[f64]) -> f64, w: &[f64], dir: &[f64], h: f64) -> (f64, Vec<f64>) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (-h, h);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(&rotate(w, dir, c));
    let mut fd = f(&rotate(w, dir, d));
    for _ in 0..30 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(&rotate(w, dir, c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(&rotate(w, dir, d));
        }
    }
    let t = 0.5 * (a + b);
    let v = rotate(w, dir, t);
    (f(&v), v)
}

/// Result of the direction search.
#[derive(Debug, Clone)]
pub struct RhoEstimate {
    pub value: f64,
    /// Best value on the grid before refinement.
    pub grid_value: f64,
    /// Minimising direction as frame coefficients.
    pub direction: Vec<f64>,
}

pub fn rho_k_search(r: &FrameCurvature, k: usize, opts: &RhoOptions) -> Result<RhoEstimate> {
    let n = r.n;
    if k == 0 || k >= n {
        return Err(GeomError::InvalidParameters(format!("k = {k} outside 1..{}", n - 1)));
    }
    let f = |w: &[f64]| rho_objective(r, k, w);
    let grid = direction_set(n, opts.grid);
    let mut scored: Vec<(f64, usize)> = grid.iter().enumerate().map(|(i, w)| (f(w), i)).collect();
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
    let grid_value = scored[0].0;
    let spacing = (sphere_volume(n - 1) / grid.len() as f64).powf(1.0 / (n - 1) as f64);

    let mut best = (grid_value, grid[scored[0].1].clone());
    for &(v0, idx) in scored.iter().take(opts.starts) {
        let mut cur = (v0, grid[idx].clone());
        let mut h = 2.0 * spacing;
        for _ in 0..opts.rounds {
            let q = linalg::complement_basis(&cur.1);
            for j in 0..n - 1 {
                let dir: Vec<f64> = q.column(j).iter().copied().collect();
                let cand = line_search(&f, &cur.1, &dir, h);
                if cand.0 < cur.0 {
                    cur = cand;
                }
            }
            h *= 0.5;
        }
        if cur.0 < best.0 {
            best = cur;
        }
    }
    Ok(RhoEstimate { value: best.0, grid_value, direction: best.1 })
}

/// ρ_k(x): min over unit u of the sum of the k smallest eigenvalues of R_u.
pub fn rho_k_at(m: &ChartManifold, x: &[f64], k: usize) -> Result<f64> {
    let r = FrameCurvature::at(m, x)?;
    Ok(rho_k_search(&r, k, &RhoOptions::default())?.value)
}

/// (ρ_k − H)_− at x; skips the search when the curvature is too small to
/// dip below H in any direction.
pub fn rho_deficit_at(m: &ChartManifold, x: &[f64], k: usize, h: f64, opts: &RhoOptions) -> Result<f64> {
    let r = FrameCurvature::at(m, x)?;
    rho_deficit_from(&r, k, h, opts)
}

pub fn rho_deficit_from(r: &FrameCurvature, k: usize, h: f64, opts: &RhoOptions) -> Result<f64> {
    let frob = r.frobenius();
    if -(k as f64) * frob >= h {
        return Ok(0.0);
    }
    // Sectional curvatures are bounded below by the curvature operator, so
    // k·λ_min ≤ ρ_k. Within rounding of H the gap itself bounds the deficit.
    let lower = k as f64 * r.operator_min_eigenvalue();
    if lower >= h {
        return Ok(0.0);
    }
    if h - lower <= 1e-8 * (1.0 + frob) {
        return Ok(h - lower);
    }
    Ok((h - rho_k_search(r, k, opts)?.value).max(0.0))
}

/// Dense-sampling oracle: objective minimum over `count` directions, no
/// refinement.
pub fn rho_k_brute_force(m: &ChartManifold, x: &[f64], k: usize, count: usize) -> Result<f64> {
    let r = FrameCurvature::at(m, x)?;
    let n = r.n;
    if k == 0 || k >= n {
        return Err(GeomError::InvalidParameters(format!("k = {k} outside 1..{}", n - 1)));
    }
    Ok(direction_set(n, count).iter().map(|w| rho_objective(&r, k, w)).fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ManifoldSpec;

    fn s2xs2() -> ChartManifold {
        ManifoldSpec::Product {
            factors: vec![ManifoldSpec::Sphere { dim: 2, radius: 1.0 }, ManifoldSpec::Sphere { dim: 2, radius: 1.0 }],
        }
        .build()
        .unwrap()
    }

    #[test]
    fn space_form_gives_k_times_h() {
        let m = ManifoldSpec::Hyperbolic { dim: 4, radius: 1.0, model: Default::default() }.build().unwrap();
        let x = [0.1, 0.2, -0.1, 0.3];
        for k in 1..4 {
            assert!((rho_k_at(&m, &x, k).unwrap() + k as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn product_of_spheres() {
        let m = s2xs2();
        let x = [0.3, -0.1, 0.2, 0.5];
        let r = FrameCurvature::at(&m, &x).unwrap();
        let est = rho_k_search(&r, 2, &RhoOptions::default()).unwrap();
        assert!(est.value.abs() < 1e-3, "{est:?}");
        assert!(est.value <= est.grid_value);
        assert!((rho_k_at(&m, &x, 3).unwrap() - 1.0).abs() < 1e-3);
        assert!(rho_k_at(&m, &x, 1).unwrap().abs() < 1e-9);
    }

    #[test]
    fn rejects_out_of_range_k() {
        let m = s2xs2();
        assert!(rho_k_at(&m, &[0.0; 4], 0).is_err());
        assert!(rho_k_at(&m, &[0.0; 4], 4).is_err());
    }

    #[test]
    fn curvature_operator_bounds_sectional_curvature() {
        let r = FrameCurvature::at(&s2xs2(), &[0.3, -0.1, 0.2, 0.5]).unwrap();
        assert!(r.operator_min_eigenvalue().abs() < 1e-9);
        let bump = ManifoldSpec::FlatTorus {
            dim: 3,
            side: 2.0 * std::f64::consts::PI,
            bump: Some(crate::geometry::Bump { amplitude: 0.1, radius: 1.2, center: vec![3.0; 3] }),
        }
        .build()
        .unwrap();
        for x in [[3.5, 3.2, 2.9], [4.0, 3.0, 3.0], [2.2, 3.6, 3.2]] {
            let r = FrameCurvature::at(&bump, &x).unwrap();
            let rho1 = rho_k_search(&r, 1, &RhoOptions::default()).unwrap().value;
            assert!(r.operator_min_eigenvalue() <= rho1 + 1e-12);
        }
    }

    #[test]
    fn deficit_skip_agrees_with_search() {
        let m = ManifoldSpec::Sphere { dim: 3, radius: 2.0 }.build().unwrap();
        let opts = RhoOptions::default();
        let x = [0.4, 0.1, -0.3];
        assert_eq!(rho_deficit_at(&m, &x, 1, -10.0, &opts).unwrap(), 0.0);
        assert!((rho_deficit_at(&m, &x, 1, 1.0, &opts).unwrap() - 0.75).abs() < 1e-9);
    }
}
