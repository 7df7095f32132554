//! Normal geodesics γ(t) = exp(tξ) with a parallel frame and the Jacobi
//! matrix pair (J, J′) solving J″ = −R_γ̇ J.

pub mod dopri;

use nalgebra::DMatrix;

use crate::error::{GeomError, Result};
use crate::geometry::{ChartManifold, PointGeometry};
use crate::linalg;
use crate::quadrature::Rule1d;
use crate::submanifolds::{frames_at, EmbeddedSubmanifold, Frames};
use dopri::{Node, Tolerance};

pub const DEFAULT_RTOL: f64 = 1e-9;
/// Relative size of |det J| treated as zero.
pub const FOCAL_SCALE: f64 = 1e-12;
/// Absolute tolerance on located focal times.
pub const FOCAL_TOL: f64 = 1e-9;

/// Normal geodesic request: base parameter, unit normal, time horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalRay {
    pub base: Vec<f64>,
    pub xi: Vec<f64>,
    pub t_max: f64,
    pub rtol: f64,
}

impl NormalRay {
    pub fn new(base: Vec<f64>, xi: Vec<f64>, t_max: f64) -> Self {
        NormalRay { base, xi, t_max, rtol: DEFAULT_RTOL }
    }
}

/// Exponent-dependent integrals for the two-mean estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoMeanIntegrals {
    pub p: f64,
    /// ∫ (στ)^p A with σ, τ the min and max of φ₊/m and ψ₊/(n−m−1).
    pub product: f64,
    /// ∫ c^p A with c = max{(Ric_m(γ̇,𝓗)/m)_−, (Ric_{n−m−1}(γ̇,𝓥)/(n−m−1))_−}.
    pub curvature: f64,
}

/// Scalars accumulated along the ray.
#[derive(Debug, Clone, PartialEq)]
pub struct RayIntegrals {
    /// ∫ φ/m, so J = exp(log_j).
    pub log_j: f64,
    /// ∫ (ψ − (n−m−1)/s)/(n−m−1), so Y = t·exp(log_y).
    pub log_y: f64,
    /// ∫ (Ric_m(γ̇,𝓗)/m)_− A^{1/m}.
    pub j_curvature: f64,
    /// ∫ φ₊ψ₊ A^{1/m}.
    pub j_product: f64,
    /// ∫ (Ric_{n−m−1}(γ̇,𝓥)/(n−m−1))_− A^{1/(n−m−1)}.
    pub y_curvature: f64,
    /// ∫ φ₊ψ₊ A^{1/(n−m−1)}.
    pub y_product: f64,
    pub two_mean: Vec<TwoMeanIntegrals>,
}

/// One point of an integrated ray.
#[derive(Debug, Clone)]
pub struct TransportState {
    pub t: f64,
    pub m: usize,
    pub x: Vec<f64>,
    pub velocity: Vec<f64>,
    /// Parallel frame of γ̇^⊥ (coordinate vectors); the first m start in TΣ.
    pub frame: Vec<Vec<f64>>,
    pub j: DMatrix<f64>,
    pub jp: DMatrix<f64>,
    /// R(e_a, γ̇, e_b, γ̇) on the frame.
    pub curvature: DMatrix<f64>,
    pub integrals: Option<RayIntegrals>,
}

impl TransportState {
    pub fn volume_density(&self) -> f64 {
        self.j.determinant()
    }

    fn check_regular(&self) -> Result<()> {
        let d = self.j.nrows();
        let scale = self.j.amax().max(1.0).powi(d as i32);
        if self.t <= 0.0 || self.volume_density().abs() <= FOCAL_SCALE * scale {
            return Err(GeomError::FocalSingularity { t: self.t });
        }
        Ok(())
    }

    /// S = J′J⁻¹.
    pub fn shape_operator(&self) -> Result<DMatrix<f64>> {
        self.check_regular()?;
        let lu = self.j.transpose().lu();
        let st = lu.solve(&self.jp.transpose()).ok_or(GeomError::FocalSingularity { t: self.t })?;
        Ok(st.transpose())
    }

    /// (φ, ψ): traces of S over the first m and the last n−m−1 frame vectors.
    pub fn split_mean_curvature(&self) -> Result<(f64, f64)> {
        let s = self.shape_operator()?;
        let phi = (0..self.m).map(|a| s[(a, a)]).sum();
        let psi = (self.m..s.nrows()).map(|a| s[(a, a)]).sum();
        Ok((phi, psi))
    }

    /// tr_W S for W spanned by orthonormal frame-coefficient vectors.
    pub fn partial_trace_shape(&self, w: &[Vec<f64>]) -> Result<f64> {
        let d = self.j.nrows();
        check_orthonormal(w, d)?;
        let s = self.shape_operator()?;
        let mut cols = DMatrix::zeros(d, w.len());
        for (c, v) in w.iter().enumerate() {
            cols.set_column(c, &linalg::to_dvec(v));
        }
        Ok(linalg::partial_trace(&s, &cols))
    }

    /// (J, Y) with J^m Y^{n−m−1} = A.
    pub fn jy_factors(&self) -> Result<(f64, f64)> {
        self.check_regular()?;
        let ints = self
            .integrals
            .as_ref()
            .ok_or_else(|| GeomError::InvalidParameters("ray was integrated without scalar integrals".into()))?;
        Ok((ints.log_j.exp(), self.t * ints.log_y.exp()))
    }

    /// Ric_m(γ̇, 𝓗_t): trace of the curvature over the first m frame vectors.
    pub fn ric_horizontal(&self) -> f64 {
        (0..self.m).map(|a| self.curvature[(a, a)]).sum()
    }

    /// Ric_{n−m−1}(γ̇, 𝓥_t).
    pub fn ric_vertical(&self) -> f64 {
        (self.m..self.curvature.nrows()).map(|a| self.curvature[(a, a)]).sum()
    }

    /// J′ᵀJ − JᵀJ′, constant along an exact solution.
    pub fn wronskian(&self) -> DMatrix<f64> {
        self.jp.transpose() * &self.j - self.j.transpose() * &self.jp
    }
}

fn check_orthonormal(w: &[Vec<f64>], d: usize) -> Result<()> {
    if w.len() > d {
        return Err(GeomError::InvalidParameters(format!("{} vectors in a {d}-dimensional frame", w.len())));
    }
    for (i, a) in w.iter().enumerate() {
        if a.len() != d {
            return Err(GeomError::DimensionMismatch { expected: d, got: a.len() });
        }
        for (j, b) in w.iter().enumerate().take(i + 1) {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            if (dot - target).abs() > 1e-8 {
                return Err(GeomError::InvalidParameters("subspace basis is not orthonormal".into()));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    n: usize,
    m: usize,
    d: usize,
}

impl Layout {
    fn v(&self) -> usize {
        self.n
    }
    fn e(&self) -> usize {
        2 * self.n
    }
    fn j(&self) -> usize {
        self.e() + self.n * self.d
    }
    fn jp(&self) -> usize {
        self.j() + self.d * self.d
    }
    fn aux(&self) -> usize {
        self.jp() + self.d * self.d
    }
}

const AUX_FIXED: usize = 6;

/// Integrator for one normal geodesic.
#[derive(Debug, Clone)]
pub struct RaySolver<'a> {
    mfd: &'a ChartManifold,
    layout: Layout,
    y0: Vec<f64>,
    tol: Tolerance,
    lemma_p: Vec<f64>,
    integrals: bool,
}

impl<'a> RaySolver<'a> {
    /// Ray from the base point of `frames` in direction ξ (coordinates).
    pub fn new(mfd: &'a ChartManifold, frames: &Frames, xi: &[f64]) -> Result<Self> {
        let n = mfd.dim();
        if xi.len() != n {
            return Err(GeomError::DimensionMismatch { expected: n, got: xi.len() });
        }
        frames.check_normal(xi)?;
        let m = frames.tangent.len();
        let layout = Layout { n, m, d: n - 1 };
        let g = frames.geometry.metric_matrix();
        let mut prefix = frames.tangent.clone();
        prefix.push(xi.to_vec());
        let rest = linalg::complete_orthonormal(&g, &prefix, n)?;

        let mut y0 = vec![0.0; layout.aux()];
        y0[..n].copy_from_slice(&frames.x);
        y0[layout.v()..layout.v() + n].copy_from_slice(xi);
        for (c, col) in frames.tangent.iter().chain(&rest).enumerate() {
            y0[layout.e() + c * n..layout.e() + (c + 1) * n].copy_from_slice(col);
        }
        let d = layout.d;
        for a in 0..m {
            y0[layout.j() + a * d + a] = 1.0;
        }
        let s_xi = frames.weingarten(xi);
        for a in 0..m {
            for b in 0..m {
                y0[layout.jp() + a * d + b] = s_xi[(a, b)];
            }
        }
        for a in m..d {
            y0[layout.jp() + a * d + a] = 1.0;
        }
        Ok(RaySolver { mfd, layout, y0, tol: Tolerance::relative(DEFAULT_RTOL), lemma_p: Vec::new(), integrals: false })
    }

    pub fn from_ray(mfd: &'a ChartManifold, sigma: &EmbeddedSubmanifold, ray: &NormalRay) -> Result<Self> {
        let frames = frames_at(sigma, mfd, &ray.base)?;
        Ok(Self::new(mfd, &frames, &ray.xi)?.with_rtol(ray.rtol))
    }

    pub fn with_rtol(mut self, rtol: f64) -> Self {
        self.tol = Tolerance::relative(rtol);
        self
    }

    /// Also accumulate the scalar integrals, with two-mean integrals for each
    /// exponent in `lemma_p`. The ray must then stop before its focal time.
    pub fn with_integrals(mut self, lemma_p: &[f64]) -> Self {
        self.integrals = true;
        self.lemma_p = lemma_p.to_vec();
        self.y0.truncate(self.layout.aux());
        self.y0.resize(self.layout.aux() + AUX_FIXED + 2 * lemma_p.len(), 0.0);
        self
    }

    fn plain(&self) -> RaySolver<'a> {
        let mut s = self.clone();
        s.integrals = false;
        s.lemma_p.clear();
        s.y0.truncate(self.layout.aux());
        s
    }

    pub fn dim(&self) -> usize {
        self.layout.n
    }

    pub fn initial_state(&self) -> Result<TransportState> {
        self.state(0.0, &self.y0)
    }

    /// States at every accepted step on [0, t_max].
    pub fn trajectory(&self, t_max: f64) -> Result<Vec<TransportState>> {
        let nodes = self.run(0.0, &self.y0, t_max, &[])?;
        nodes.iter().map(|nd| self.state(nd.t, &nd.y)).collect()
    }

    /// States exactly at the sorted nonnegative `times`.
    pub fn states_at(&self, times: &[f64]) -> Result<Vec<TransportState>> {
        self.nodes_at(times)?.iter().map(|nd| self.state(nd.t, &nd.y)).collect()
    }

    /// Accepted nodes of a run that stops at every time in `times`; the
    /// returned slice holds one node per requested time.
    fn nodes_at(&self, times: &[f64]) -> Result<Vec<Node>> {
        if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
            return Err(GeomError::InvalidParameters("output times must be sorted and nonnegative".into()));
        }
        let Some(&last) = times.last() else {
            return Ok(Vec::new());
        };
        let positive: Vec<f64> = times.iter().copied().filter(|&t| t > 0.0).collect();
        let mut dedup = positive.clone();
        dedup.dedup();
        let run = self.run(0.0, &self.y0, last, &dedup)?;
        let hits: Vec<&Node> = run.iter().filter(|nd| nd.stop).collect();
        let mut out = Vec::with_capacity(times.len());
        let mut k = 0;
        for &t in times {
            if t == 0.0 {
                out.push(run[0].clone());
                continue;
            }
            while hits[k].t < t {
                k += 1;
            }
            out.push(hits[k].clone());
        }
        Ok(out)
    }

    fn run(&self, t0: f64, y0: &[f64], t1: f64, stops: &[f64]) -> Result<Vec<Node>> {
        dopri::solve(|t, y, dy| self.rhs(t, y, dy), t0, y0, t1, stops, self.tol)
    }

    fn advance(&self, t0: f64, y0: &[f64], t1: f64) -> Result<Vec<f64>> {
        let run = self.run(t0, y0, t1, &[])?;
        Ok(run.last().expect("nonempty run").y.clone())
    }

    fn frame_of(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let Layout { n, d, .. } = self.layout;
        (0..d).map(|c| y[self.layout.e() + c * n..self.layout.e() + (c + 1) * n].to_vec()).collect()
    }

    fn jacobi_of(&self, y: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let d = self.layout.d;
        let j = DMatrix::from_row_slice(d, d, &y[self.layout.j()..self.layout.j() + d * d]);
        let jp = DMatrix::from_row_slice(d, d, &y[self.layout.jp()..self.layout.jp() + d * d]);
        (j, jp)
    }

    fn state(&self, t: f64, y: &[f64]) -> Result<TransportState> {
        let Layout { n, m, .. } = self.layout;
        let x = y[..n].to_vec();
        let velocity = y[self.layout.v()..self.layout.v() + n].to_vec();
        let frame = self.frame_of(y);
        let geo = PointGeometry::at(self.mfd, &x)?;
        let curvature = geo.operator_in_frame(&velocity, &frame);
        let (j, jp) = self.jacobi_of(y);
        let integrals = self.integrals.then(|| {
            let a = &y[self.layout.aux()..];
            RayIntegrals {
                log_j: a[0],
                log_y: a[1],
                j_curvature: a[2],
                j_product: a[3],
                y_curvature: a[4],
                y_product: a[5],
                two_mean: self
                    .lemma_p
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| TwoMeanIntegrals { p, product: a[6 + 2 * i], curvature: a[7 + 2 * i] })
                    .collect(),
            }
        });
        Ok(TransportState { t, m, x, velocity, frame, j, jp, curvature, integrals })
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let lay = self.layout;
        let Layout { n, d, .. } = lay;
        let x = &y[..n];
        let v = &y[lay.v()..lay.v() + n];
        self.mfd.check_point(x)?;
        let geo = PointGeometry::from_jet(&self.mfd.jet(x), x)?;

        // G^i_k = Γ^i_jk v^j, so v′ = −G v and E′ = −G E.
        let mut gmat = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                gmat[i * n + k] = (0..n).map(|j| geo.gamma.get(i, j, k) * v[j]).sum();
            }
        }
        let apply = |src: &[f64], dst: &mut [f64]| {
            for i in 0..n {
                dst[i] = -(0..n).map(|k| gmat[i * n + k] * src[k]).sum::<f64>();
            }
        };
        dy[..n].copy_from_slice(v);
        apply(v, &mut dy[lay.v()..lay.v() + n]);
        for c in 0..d {
            let off = lay.e() + c * n;
            apply(&y[off..off + n], &mut dy[off..off + n]);
        }

        let frame = self.frame_of(y);
        let r = geo.operator_in_frame(v, &frame);
        let (j, jp) = self.jacobi_of(y);
        let jpp = -(&r * &j);
        dy[lay.j()..lay.j() + d * d].copy_from_slice(&y[lay.jp()..lay.jp() + d * d]);
        for a in 0..d {
            for b in 0..d {
                dy[lay.jp() + a * d + b] = jpp[(a, b)];
            }
        }
        if self.integrals {
            self.aux_rhs(t, &r, &j, &jp, &mut dy[lay.aux()..])?;
        }
        Ok(())
    }

    fn aux_rhs(&self, t: f64, r: &DMatrix<f64>, j: &DMatrix<f64>, jp: &DMatrix<f64>, out: &mut [f64]) -> Result<()> {
        out.iter_mut().for_each(|o| *o = 0.0);
        let Layout { m, d, .. } = self.layout;
        let dv = d - m;
        let (mf, dvf) = (m as f64, dv as f64);

        if t <= 0.0 {
            // Limits as t → 0: S = P/t + S_ξ + O(t) and A ~ t^{n−m−1}.
            let phi: f64 = (0..m).map(|a| jp[(a, a)]).sum();
            if m > 0 {
                out[0] = phi / mf;
            }
            if m > 0 && dv > 0 {
                let pp = phi.max(0.0) * dvf;
                out[3] = if dv == m { pp } else { 0.0 };
                out[5] = pp;
            }
            return Ok(());
        }

        let a = j.determinant();
        if a <= 0.0 {
            return Err(GeomError::FocalSingularity { t });
        }
        let s = jp * j.clone().try_inverse().ok_or(GeomError::FocalSingularity { t })?;
        let phi: f64 = (0..m).map(|i| s[(i, i)]).sum();
        let psi: f64 = (m..d).map(|i| s[(i, i)]).sum();
        if m > 0 {
            out[0] = phi / mf;
        }
        if dv > 0 {
            out[1] = (psi - dvf / t) / dvf;
        }
        if m == 0 || dv == 0 {
            return Ok(());
        }
        let ric_h: f64 = (0..m).map(|i| r[(i, i)]).sum();
        let ric_v: f64 = (m..d).map(|i| r[(i, i)]).sum();
        let ch = (-ric_h / mf).max(0.0);
        let cv = (-ric_v / dvf).max(0.0);
        let pp = phi.max(0.0) * psi.max(0.0);
        let am = a.powf(1.0 / mf);
        let ad = a.powf(1.0 / dvf);
        out[2] = ch * am;
        out[3] = pp * am;
        out[4] = cv * ad;
        out[5] = pp * ad;
        let (x1, x2) = (phi.max(0.0) / mf, psi.max(0.0) / dvf);
        let st = x1.min(x2) * x1.max(x2);
        let c = ch.max(cv);
        for (i, &p) in self.lemma_p.iter().enumerate() {
            out[AUX_FIXED + 2 * i] = st.powf(p) * a;
            out[AUX_FIXED + 2 * i + 1] = c.powf(p) * a;
        }
        Ok(())
    }

    fn det_of(&self, y: &[f64]) -> f64 {
        self.jacobi_of(y).0.determinant()
    }

    fn sigma_min(&self, y: &[f64]) -> f64 {
        self.jacobi_of(y).0.singular_values().min()
    }

    /// First zero of det J in (0, t_max], if any.
    pub fn focal_distance(&self, t_max: f64) -> Result<Option<f64>> {
        let plain = self.plain();
        let nodes = plain.run(0.0, &plain.y0, t_max, &[])?;
        plain.focal_in(&nodes)
    }

    /// Focal time among the accepted nodes of a run from t = 0.
    fn focal_in(&self, nodes: &[Node]) -> Result<Option<f64>> {
        let dets: Vec<f64> = nodes.iter().map(|nd| self.det_of(&nd.y)).collect();
        let sig: Vec<f64> = nodes.iter().map(|nd| self.sigma_min(&nd.y)).collect();
        let mut scale = 1.0f64;
        for i in 1..nodes.len() {
            scale = scale.max(dets[i].abs());
            if dets[i] == 0.0 {
                return Ok(Some(nodes[i].t));
            }
            if (dets[i] < 0.0) != (dets[i - 1] < 0.0) {
                return self.bisect(&nodes[i - 1], nodes[i].t).map(Some);
            }
            if i >= 2 && sig[i - 1] < sig[i - 2] && sig[i - 1] <= sig[i] {
                let (t, det) = self.golden_min(&nodes[i - 2], nodes[i].t)?;
                if det.abs() <= FOCAL_SCALE * scale {
                    return Ok(Some(t));
                }
            }
        }
        if let (Some(last), Some(&dl)) = (nodes.last(), dets.last()) {
            if nodes.len() > 1 && dl.abs() <= FOCAL_SCALE * scale {
                return Ok(Some(last.t));
            }
        }
        Ok(None)
    }

    fn bisect(&self, start: &Node, t_hi: f64) -> Result<f64> {
        let (mut a, mut b) = (start.t, t_hi);
        let neg_a = self.det_of(&start.y) < 0.0;
        while b - a > 0.5 * FOCAL_TOL {
            let mid = 0.5 * (a + b);
            let y = self.advance(start.t, &start.y, mid)?;
            let q = self.det_of(&y);
            if q == 0.0 {
                return Ok(mid);
            }
            if (q < 0.0) == neg_a {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    }

    /// Golden-section minimum of σ_min(J) on [start.t, t_hi]; returns the
    /// minimiser and det J there.
    fn golden_min(&self, start: &Node, t_hi: f64) -> Result<(f64, f64)> {
        let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (start.t, t_hi);
        let eval = |t: f64| -> Result<(f64, f64)> {
            let y = self.advance(start.t, &start.y, t)?;
            Ok((self.sigma_min(&y), self.det_of(&y)))
        };
        let mut c = b - inv_phi * (b - a);
        let mut e = a + inv_phi * (b - a);
        let mut fc = eval(c)?;
        let mut fe = eval(e)?;
        while b - a > 0.1 * FOCAL_TOL {
            if fc.0 < fe.0 {
                b = e;
                e = c;
                fe = fc;
                c = b - inv_phi * (b - a);
                fc = eval(c)?;
            } else {
                a = c;
                c = e;
                fc = fe;
                e = a + inv_phi * (b - a);
                fe = eval(e)?;
            }
        }
        let (t, f) = if fc.0 < fe.0 { (c, fc) } else { (e, fe) };
        Ok((t, f.1))
    }
}

/// States at the nodes of a composite Gauss–Legendre rule and of its
/// half-order companion on [0, upper], upper = min(r, first focal time).
#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub focal: Option<f64>,
    pub upper: f64,
    /// (weight, state) pairs of the main rule.
    pub fine: Vec<(f64, TransportState)>,
    pub coarse: Vec<(f64, TransportState)>,
}

impl RadialProfile {
    pub fn truncated(&self) -> bool {
        self.focal.is_some()
    }
}

impl RaySolver<'_> {
    pub fn radial_profile(&self, r: f64, nodes_per_panel: usize, panels: usize) -> Result<RadialProfile> {
        if r <= 0.0 {
            return Ok(RadialProfile { focal: None, upper: 0.0, fine: Vec::new(), coarse: Vec::new() });
        }
        let plain = self.plain();
        let rules = |upper: f64| {
            let fine = Rule1d::composite_gauss(0.0, upper, nodes_per_panel, panels);
            let coarse = Rule1d::composite_gauss(0.0, upper, (nodes_per_panel / 2).max(1), panels);
            let mut stops: Vec<f64> = fine.nodes.iter().chain(&coarse.nodes).copied().collect();
            stops.sort_by(f64::total_cmp);
            stops.dedup();
            (fine, coarse, stops)
        };
        let (mut fine, mut coarse, mut stops) = rules(r);
        let mut run = plain.run(0.0, &plain.y0, r, &stops)?;
        let focal = plain.focal_in(&run)?;
        let mut upper = r;
        if let Some(f) = focal {
            upper = f.min(r);
            (fine, coarse, stops) = rules(upper);
            run = plain.run(0.0, &plain.y0, upper, &stops)?;
        }
        let hits: Vec<&Node> = run.iter().filter(|nd| nd.stop).collect();
        let pick = |rule: &Rule1d| -> Result<Vec<(f64, TransportState)>> {
            rule.nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&t, &w)| {
                    let i = stops.partition_point(|&s| s < t);
                    let nd = hits[i];
                    Ok((w, plain.state(nd.t, &nd.y)?))
                })
                .collect()
        };
        Ok(RadialProfile { focal, upper, fine: pick(&fine)?, coarse: pick(&coarse)? })
    }
}

/// Integrates the ray with its scalar integrals; states at accepted steps.
pub fn integrate_ray(mfd: &ChartManifold, sigma: &EmbeddedSubmanifold, ray: &NormalRay) -> Result<Vec<TransportState>> {
    RaySolver::from_ray(mfd, sigma, ray)?.with_integrals(&[]).trajectory(ray.t_max)
}

/// First focal time along the ray in (0, t_max], if any.
pub fn focal_distance(
    mfd: &ChartManifold,
    sigma: &EmbeddedSubmanifold,
    ray: &NormalRay,
    t_max: f64,
) -> Result<Option<f64>> {
    if t_max <= 0.0 {
        return Err(GeomError::InvalidParameters(format!("t_max = {t_max} must be positive")));
    }
    RaySolver::from_ray(mfd, sigma, ray)?.focal_distance(t_max)
}

#[cfg(test)]
mod tests;
