//! Small dense linear-algebra helpers: metric inner products, Gram–Schmidt
//! in a metric, orthogonal complements and eigenvalues of small symmetric
//! matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};

pub fn inner(g: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += g[(i, j)] * b[j];
        }
        s += a[i] * row;
    }
    s
}

pub fn norm_g(g: &DMatrix<f64>, a: &[f64]) -> f64 {
    inner(g, a, a).max(0.0).sqrt()
}

/// Modified Gram–Schmidt in the metric `g`, re-orthogonalising when the
/// Gram residual exceeds 1e-12. Columns of the result are g-orthonormal.
/// `prefix` columns are assumed already orthonormal and are kept first.
pub fn gram_schmidt(g: &DMatrix<f64>, prefix: &[Vec<f64>], vectors: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut basis: Vec<Vec<f64>> = prefix.to_vec();
    for v in vectors {
        let mut w = v.clone();
        let scale = norm_g(g, v).max(1e-300);
        for _pass in 0..3 {
            for b in &basis {
                let c = inner(g, &w, b);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
            let residual = basis.iter().map(|b| inner(g, &w, b).abs()).fold(0.0, f64::max);
            if residual <= 1e-12 * norm_g(g, &w).max(1e-300) {
                break;
            }
        }
        let nrm = norm_g(g, &w);
        if nrm <= 1e-10 * scale {
            return Err(GeomError::Domain("linearly dependent vectors in Gram-Schmidt".into()));
        }
        basis.push(w.into_iter().map(|x| x / nrm).collect());
    }
    Ok(basis.split_off(prefix.len()))
}

/// Extend the g-orthonormal `prefix` to a full basis of R^n, returning only
/// the new vectors. Coordinate vectors are added greedily by largest residual.
pub fn complete_orthonormal(g: &DMatrix<f64>, prefix: &[Vec<f64>], n: usize) -> Result<Vec<Vec<f64>>> {
    let mut basis: Vec<Vec<f64>> = prefix.to_vec();
    let mut out = Vec::with_capacity(n - prefix.len());
    while basis.len() < n {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            let scale = norm_g(g, &e);
            for b in &basis {
                let c = inner(g, &e, b);
                for (ei, bi) in e.iter_mut().zip(b) {
                    *ei -= c * bi;
                }
            }
            let r = norm_g(g, &e) / scale;
            if best.as_ref().is_none_or(|(br, _)| r > *br) {
                best = Some((r, e));
            }
        }
        let (r, e) = best.expect("n > 0");
        if r < 1e-8 {
            return Err(GeomError::Domain("prefix vectors are not independent".into()));
        }
        let v = gram_schmidt(g, &basis, &[e])?.remove(0);
        basis.push(v.clone());
        out.push(v);
    }
    Ok(out)
}

/// Orthonormal basis (columns, Euclidean) of the complement of the unit
/// vector `c` in R^d, via a Householder reflection.
pub fn complement_basis(c: &[f64]) -> DMatrix<f64> {
    let d = c.len();
    let mut v: Vec<f64> = c.to_vec();
    let s = if c[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += s;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let mut q = DMatrix::<f64>::identity(d, d);
    if vv > 0.0 {
        for i in 0..d {
            for j in 0..d {
                q[(i, j)] -= 2.0 * v[i] * v[j] / vv;
            }
        }
    }
    // First column of q is ∓c; the rest span c^⊥.
    q.columns(1, d - 1).into_owned()
}

/// Eigenvalues of a small symmetric matrix in ascending order.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut ev = match n {
        0 => vec![],
        1 => vec![a[(0, 0)]],
        2 => {
            let (p, q, r) = (a[(0, 0)], 0.5 * (a[(0, 1)] + a[(1, 0)]), a[(1, 1)]);
            let mean = 0.5 * (p + r);
            let rad = (0.25 * (p - r) * (p - r) + q * q).sqrt();
            vec![mean - rad, mean + rad]
        }
        3 => sym3_eigenvalues(a),
        _ => {
            let s = (a + a.transpose()) * 0.5;
            s.symmetric_eigenvalues().iter().copied().collect()
        }
    };
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// Trigonometric closed form for 3×3 symmetric eigenvalues.
fn sym3_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let a01 = 0.5 * (a[(0, 1)] + a[(1, 0)]);
    let a02 = 0.5 * (a[(0, 2)] + a[(2, 0)]);
    let a12 = 0.5 * (a[(1, 2)] + a[(2, 1)]);
    let p1 = a01 * a01 + a02 * a02 + a12 * a12;
    let (a00, a11, a22) = (a[(0, 0)], a[(1, 1)], a[(2, 2)]);
    let q = (a00 + a11 + a22) / 3.0;
    let p2 = (a00 - q).powi(2) + (a11 - q).powi(2) + (a22 - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    if p1 == 0.0 || p < 1e-300 {
        return vec![a00, a11, a22];
    }
    let b00 = (a00 - q) / p;
    let b11 = (a11 - q) / p;
    let b22 = (a22 - q) / p;
    let b01 = a01 / p;
    let b02 = a02 / p;
    let b12 = a12 / p;
    let det = b00 * (b11 * b22 - b12 * b12) - b01 * (b01 * b22 - b12 * b02) + b02 * (b01 * b12 - b11 * b02);
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    vec![e1, e2, e3]
}

/// Partial trace Σ⟨A w_i, w_i⟩ over orthonormal coefficient vectors
/// (columns of `w`).
pub fn partial_trace(a: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    let aw = a * w;
    let mut s = 0.0;
    for c in 0..w.ncols() {
        s += w.column(c).dot(&aw.column(c));
    }
    s
}

pub fn to_dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
