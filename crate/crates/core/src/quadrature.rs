//! Quadrature rules: Gauss–Legendre panels, periodic trapezoid rules,
//! tangent-mapped rules for unbounded intervals, product-angle rules on
//! spheres and the direction sets used by the curvature minimiser.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Γ(x) for x > 0 by the Lanczos approximation (g = 7, 9 coefficients),
/// with reflection for x < 1/2.
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = COEF[0];
        let t = x + G + 0.5;
        for (i, c) in COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// Volume of the unit sphere S^d ⊂ R^{d+1}: 2π^{(d+1)/2} / Γ((d+1)/2).
/// S^0 is two points and has volume 2.
pub fn sphere_volume(d: usize) -> f64 {
    let h = (d as f64 + 1.0) / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// A one-dimensional rule: nodes with weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).collect();
        pairwise_sum(&terms)
    }

    /// Composite Gauss–Legendre rule with `panels` equal panels on [a, b].
    pub fn composite_gauss(a: f64, b: f64, nodes_per_panel: usize, panels: usize) -> Self {
        let (x, w) = gauss_legendre(nodes_per_panel);
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * nodes_per_panel);
        let mut weights = Vec::with_capacity(panels * nodes_per_panel);
        for p in 0..panels {
            let lo = a + p as f64 * h;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(lo + 0.5 * h * (xi + 1.0));
                weights.push(0.5 * h * wi);
            }
        }
        Self { nodes, weights }
    }

    /// Offset trapezoid (midpoint) rule for a full period [a, a + L).
    pub fn periodic(a: f64, period: f64, n: usize) -> Self {
        let h = period / n as f64;
        Self { nodes: (0..n).map(|i| a + (i as f64 + 0.5) * h).collect(), weights: vec![h; n] }
    }

    /// Gauss–Legendre rule on an interval with possibly infinite ends,
    /// using x = tan(θ) on the infinite sides.
    pub fn on_interval(lo: f64, hi: f64, n: usize) -> Self {
        match (lo.is_finite(), hi.is_finite()) {
            (true, true) => Self::composite_gauss(lo, hi, n, 1),
            _ => {
                let th_lo = if lo.is_finite() { lo.atan() } else { -PI / 2.0 };
                let th_hi = if hi.is_finite() { hi.atan() } else { PI / 2.0 };
                let base = Self::composite_gauss(th_lo, th_hi, n, 1);
                let nodes = base.nodes.iter().map(|t| t.tan()).collect();
                let weights = base.nodes.iter().zip(&base.weights).map(|(t, w)| w / t.cos().powi(2)).collect();
                Self { nodes, weights }
            }
        }
    }
}

/// Pairwise summation, deterministic for a fixed input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Tensor-product nodes over a box; each entry is (point, weight).
pub fn tensor_product(rules: &[Rule1d]) -> Vec<(Vec<f64>, f64)> {
    let mut out = vec![(Vec::with_capacity(rules.len()), 1.0)];
    for rule in rules {
        let mut next = Vec::with_capacity(out.len() * rule.len());
        for (p, w) in &out {
            for (x, wx) in rule.nodes.iter().zip(&rule.weights) {
                let mut q = p.clone();
                q.push(*x);
                next.push((q, w * wx));
            }
        }
        out = next;
    }
    out
}

/// How to sample the unit sphere S^d of normal directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum FiberRule {
    /// Product-angle rule with `resolution` azimuthal nodes and
    /// `resolution / 2` nodes for each polar angle.
    Product { resolution: usize },
    /// Uniform random directions with equal weights.
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for FiberRule {
    fn default() -> Self {
        FiberRule::Product { resolution: 16 }
    }
}

/// Nodes on the unit sphere S^d ⊂ R^{d+1}, as coefficient vectors with
/// weights summing to vol(S^d).
pub fn sphere_rule(d: usize, rule: &FiberRule) -> Vec<(Vec<f64>, f64)> {
    match *rule {
        FiberRule::Product { resolution } => product_angle_sphere(d, resolution.max(4)),
        FiberRule::MonteCarlo { samples, seed } => {
            let mut rng = crate::rng(seed);
            let w = sphere_volume(d) / samples as f64;
            (0..samples).map(|_| (random_unit_vector(&mut rng, d + 1), w)).collect()
        }
    }
}

fn product_angle_sphere(d: usize, resolution: usize) -> Vec<(Vec<f64>, f64)> {
    if d == 0 {
        return vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)];
    }
    // Hyperspherical angles: θ_1..θ_{d-1} ∈ [0, π] with density sin^{d-j}, θ_d periodic.
    let azimuth = Rule1d::periodic(0.0, 2.0 * PI, resolution);
    let polar_n = (resolution / 2).max(2);
    let mut rules: Vec<Rule1d> = Vec::with_capacity(d);
    for j in 0..d - 1 {
        let power = (d - 1 - j) as i32;
        if power % 2 == 1 {
            // Odd powers: (1 − c²)^{(p−1)/2} is polynomial in c = cos θ, so
            // Gauss–Legendre in c is exact.
            let g = Rule1d::composite_gauss(-1.0, 1.0, polar_n, 1);
            let weights =
                g.nodes.iter().zip(&g.weights).map(|(c, w)| w * (1.0 - c * c).powi((power - 1) / 2)).collect();
            rules.push(Rule1d { nodes: g.nodes.iter().map(|c| c.acos()).collect(), weights });
        } else {
            // Even powers: the integrand is a smooth even periodic function
            // of θ and the midpoint rule is spectrally accurate.
            let r = Rule1d::periodic(0.0, PI, polar_n);
            let weights = r.nodes.iter().map(|t| PI / polar_n as f64 * t.sin().powi(power)).collect();
            rules.push(Rule1d { nodes: r.nodes, weights });
        }
    }
    rules.push(azimuth);
    tensor_product(&rules).into_iter().map(|(angles, w)| (hyperspherical_point(&angles), w)).collect()
}

/// Point on S^d from hyperspherical angles (θ_1, …, θ_d).
pub fn hyperspherical_point(angles: &[f64]) -> Vec<f64> {
    let d = angles.len();
    let mut x = vec![0.0; d + 1];
    let mut s = 1.0;
    for (j, a) in angles.iter().enumerate() {
        x[j] = s * a.cos();
        s *= a.sin();
    }
    x[d] = s;
    x
}

pub fn random_unit_vector<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Direction set on S^{n-1} ⊂ R^n for global searches: uniform circle for
/// n = 2, Fibonacci sphere for n = 3, super-Fibonacci spiral for n = 4 and
/// product-angle grids beyond.
pub fn direction_set(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        0 | 1 => vec![vec![1.0; n]],
        2 => (0..count)
            .map(|i| {
                let a = PI * (i as f64 + 0.5) / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * i as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
        4 => {
            let phi = 2f64.sqrt();
            let psi = 1.533_751_168_755_204_3;
            (0..count)
                .map(|i| {
                    let s = i as f64 + 0.5;
                    let r = (s / count as f64).sqrt();
                    let big_r = (1.0 - s / count as f64).sqrt();
                    let alpha = 2.0 * PI * s / phi;
                    let beta = 2.0 * PI * s / psi;
                    vec![r * alpha.sin(), r * alpha.cos(), big_r * beta.sin(), big_r * beta.cos()]
                })
                .collect()
        }
        _ => {
            // Roughly count^(1/(n-1)) nodes per angle.
            let per = ((count as f64).powf(1.0 / (n as f64 - 1.0)).ceil() as usize).max(4);
            product_angle_sphere(n - 1, per).into_iter().map(|(p, _)| p).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..=20 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn sphere_volumes_match_closed_forms() {
        assert_relative_eq!(sphere_volume(0), 2.0, max_relative = 1e-13);
        assert_relative_eq!(sphere_volume(1), 2.0 * PI, max_relative = 1e-13);
        assert_relative_eq!(sphere_volume(2), 4.0 * PI, max_relative = 1e-13);
        assert_relative_eq!(sphere_volume(3), 2.0 * PI * PI, max_relative = 1e-13);
        assert_relative_eq!(sphere_volume(4), 8.0 * PI * PI / 3.0, max_relative = 1e-13);
    }

    #[test]
    fn sphere_rule_weights_sum_to_volume() {
        for d in 0..5 {
            let rule = sphere_rule(d, &FiberRule::Product { resolution: 12 });
            let total: f64 = rule.iter().map(|(_, w)| w).sum();
            assert_relative_eq!(total, sphere_volume(d), max_relative = 1e-10);
            for (p, _) in &rule {
                let n: f64 = p.iter().map(|x| x * x).sum();
                assert_relative_eq!(n, 1.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn sphere_rule_integrates_second_moments() {
        // ∫_{S^2} x_0^2 = 4π/3
        let rule = sphere_rule(2, &FiberRule::Product { resolution: 8 });
        let q: f64 = rule.iter().map(|(p, w)| w * p[0] * p[0]).sum();
        assert_relative_eq!(q, 4.0 * PI / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn infinite_interval_rule() {
        let r = Rule1d::on_interval(f64::NEG_INFINITY, f64::INFINITY, 64);
        let q = r.integrate(|x| 1.0 / (1.0 + x * x).powi(2));
        assert_relative_eq!(q, PI / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn direction_sets_are_unit() {
        for n in 2..=6 {
            let dirs = direction_set(n, 256);
            assert!(dirs.len() >= 16);
            for d in dirs {
                let s: f64 = d.iter().map(|x| x * x).sum();
                assert_relative_eq!(s, 1.0, epsilon = 1e-12);
            }
        }
    }
}
