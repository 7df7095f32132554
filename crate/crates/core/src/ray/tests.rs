use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use super::*;
use crate::geometry::{Bump, HyperbolicModel, ManifoldSpec};
use crate::submanifolds::SubmanifoldSpec;

struct Setup {
    mfd: ChartManifold,
    frames: Frames,
}

fn setup(amb: ManifoldSpec, sub: SubmanifoldSpec, s: &[f64]) -> Setup {
    let mfd = amb.build().unwrap();
    let sigma = sub.build(&amb).unwrap();
    let frames = frames_at(&sigma, &mfd, s).unwrap();
    Setup { mfd, frames }
}

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b}");
}

fn s3_great_circle() -> Setup {
    setup(ManifoldSpec::Sphere { dim: 3, radius: 1.0 }, SubmanifoldSpec::GreatCircle, &[0.7])
}

fn bump_torus() -> Setup {
    let amb = ManifoldSpec::FlatTorus {
        dim: 3,
        side: 2.0 * PI,
        bump: Some(Bump { amplitude: 0.1, radius: 1.2, center: vec![PI, PI, PI] }),
    };
    setup(amb, SubmanifoldSpec::ClosedGeodesic { axis: 0, offset: Some(vec![0.0, PI, PI]) }, &[2.6])
}

#[test]
fn flat_torus_linear_solution() {
    let su = setup(
        ManifoldSpec::FlatTorus { dim: 4, side: 2.0 * PI, bump: None },
        SubmanifoldSpec::ClosedGeodesic { axis: 0, offset: None },
        &[1.0],
    );
    let xi = su.frames.normal[1].clone();
    let solver = RaySolver::new(&su.mfd, &su.frames, &xi).unwrap().with_integrals(&[5.0]);
    let st = &solver.states_at(&[0.8]).unwrap()[0];
    let expect_j = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.8, 0.8]));
    assert!((&st.j - &expect_j).amax() < 1e-12);
    close(st.volume_density(), 0.64, 1e-12);
    let s = st.shape_operator().unwrap();
    close(s[(0, 0)], 0.0, 1e-12);
    close(s[(1, 1)], 1.25, 1e-12);
    let (phi, psi) = st.split_mean_curvature().unwrap();
    close(phi, 0.0, 1e-12);
    close(psi, 2.0 / 0.8, 1e-10);
    let (jj, yy) = st.jy_factors().unwrap();
    close(jj, 1.0, 1e-10);
    close(yy, 0.8, 1e-9);
    let ints = st.integrals.as_ref().unwrap();
    assert_eq!(ints.j_curvature, 0.0);
    assert_eq!(ints.two_mean[0].product, 0.0);
    assert_eq!(solver.focal_distance(10.0).unwrap(), None);
}

#[test]
fn great_circle_block_solution() {
    let su = s3_great_circle();
    let xi = vec![0.0, 0.0, 1.0];
    let solver = RaySolver::new(&su.mfd, &su.frames, &xi).unwrap().with_integrals(&[]);
    for t in [0.3, FRAC_PI_4, 1.2] {
        let st = &solver.states_at(&[t]).unwrap()[0];
        close(st.j[(0, 0)], t.cos(), 1e-8);
        close(st.j[(1, 1)], t.sin(), 1e-8);
        close(st.j[(0, 1)], 0.0, 1e-8);
        close(st.volume_density(), t.cos() * t.sin(), 1e-8);
        let s = st.shape_operator().unwrap();
        close(s[(0, 0)], -t.tan(), 1e-7);
        close(s[(1, 1)], 1.0 / t.tan(), 1e-7);
        let (jj, yy) = st.jy_factors().unwrap();
        close(jj, t.cos(), 1e-8);
        close(yy, t.sin(), 1e-8);
    }
    let st = &solver.states_at(&[FRAC_PI_4]).unwrap()[0];
    let (phi, psi) = st.split_mean_curvature().unwrap();
    close(phi, -1.0, 1e-7);
    close(psi, 1.0, 1e-7);
    let f = solver.focal_distance(2.0).unwrap().unwrap();
    close(f, FRAC_PI_2, 1e-8);
}

#[test]
fn hyperbolic_from_a_point() {
    for model in [HyperbolicModel::Ball, HyperbolicModel::HalfSpace] {
        let at = match model {
            HyperbolicModel::Ball => vec![0.1, -0.2, 0.05],
            HyperbolicModel::HalfSpace => vec![0.3, 0.0, 1.5],
        };
        let amb = ManifoldSpec::Hyperbolic { dim: 3, radius: 1.0, model };
        let su = setup(amb, SubmanifoldSpec::Point { at }, &[]);
        let g = su.frames.geometry.metric_matrix();
        let mut xi = vec![0.3, 0.5, -0.4];
        let norm = linalg::norm_g(&g, &xi);
        xi.iter_mut().for_each(|v| *v /= norm);
        let solver = RaySolver::new(&su.mfd, &su.frames, &xi).unwrap();
        let st = &solver.states_at(&[1.0]).unwrap()[0];
        let expect = 1f64.sinh();
        for a in 0..2 {
            for b in 0..2 {
                close(st.j[(a, b)], if a == b { expect } else { 0.0 }, 1e-8);
            }
        }
        let s = st.shape_operator().unwrap();
        close(s[(0, 0)], 1.0 / 1f64.tanh(), 1e-7);
        let w = vec![vec![0.6, 0.8]];
        close(st.partial_trace_shape(&w).unwrap(), 1.0 / 1f64.tanh(), 1e-7);
        close(st.partial_trace_shape(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(), 2.0 / 1f64.tanh(), 1e-7);
    }
}

#[test]
fn equator_focal_time_is_a_double_root() {
    let su =
        setup(ManifoldSpec::Sphere { dim: 3, radius: 1.0 }, SubmanifoldSpec::Equator { tilt: FRAC_PI_4 }, &[1.1, 0.4]);
    for sign in [1.0, -1.0] {
        let xi: Vec<f64> = su.frames.normal[0].iter().map(|v| sign * v).collect();
        let solver = RaySolver::new(&su.mfd, &su.frames, &xi).unwrap();
        let f = solver.focal_distance(2.0).unwrap().unwrap();
        close(f, FRAC_PI_2, 1e-6);
    }
}

#[test]
fn conjugate_point_of_a_point_in_s3() {
    let su =
        setup(ManifoldSpec::Sphere { dim: 3, radius: 1.0 }, SubmanifoldSpec::Point { at: vec![0.5, 0.0, 0.0] }, &[]);
    let g = su.frames.geometry.metric_matrix();
    let mut xi = vec![0.0, 1.0, 0.0];
    let norm = linalg::norm_g(&g, &xi);
    xi.iter_mut().for_each(|v| *v /= norm);
    let solver = RaySolver::new(&su.mfd, &su.frames, &xi).unwrap();
    let st = &solver.states_at(&[2.0]).unwrap()[0];
    close(st.volume_density(), 2f64.sin().powi(2), 1e-8);
    close(solver.focal_distance(3.5).unwrap().unwrap(), PI, 1e-6);
}

#[test]
fn small_sphere_focal_inward() {
    let a: f64 = 0.8;
    let rho = a.asin();
    let su =
        setup(ManifoldSpec::Sphere { dim: 3, radius: 1.0 }, SubmanifoldSpec::RoundSphere { radius: a }, &[1.0, 2.0]);
    let xi = su.frames.normal[0].clone();
    let solver = RaySolver::new(&su.mfd, &su.frames, &xi).unwrap();
    let eta = su.frames.mean_curvature();
    let inward = su.frames.inner(&eta, &xi) < 0.0;
    let f = solver.focal_distance(2.0).unwrap();
    if inward {
        close(f.unwrap(), rho, 1e-8);
    } else {
        assert_eq!(f, None);
    }
}

#[test]
fn structural_identities_on_bump_torus() {
    let su = bump_torus();
    let xi = su.frames.normal[0].clone();
    let solver = RaySolver::new(&su.mfd, &su.frames, &xi).unwrap().with_integrals(&[3.0]);
    let h = 1e-4;
    let times: Vec<f64> = [0.4, 0.9, 1.4].iter().flat_map(|&t| [t - h, t, t + h]).collect();
    let states = solver.states_at(&times).unwrap();
    let w0 = states[0].wronskian();
    for tri in states.chunks(3) {
        let (a, b, c) = (&tri[0], &tri[1], &tri[2]);
        assert!((b.wronskian() - &w0).amax() < 1e-8);
        let s = b.shape_operator().unwrap();
        assert!((&s - s.transpose()).amax() < 1e-7);
        let dlog = (c.volume_density().ln() - a.volume_density().ln()) / (2.0 * h);
        close(dlog, s.trace(), 1e-6);
        let sp = (c.shape_operator().unwrap() - a.shape_operator().unwrap()) / (2.0 * h);
        let residual = (sp + &s * &s + &b.curvature).norm();
        assert!(residual < 1e-5, "Riccati residual {residual}");
        let (jj, yy) = b.jy_factors().unwrap();
        close(jj * yy / b.volume_density(), 1.0, 1e-7);
    }
}

#[test]
fn curvature_enters_the_bump_ray() {
    let su = bump_torus();
    let xi = su.frames.normal[0].clone();
    let st = RaySolver::new(&su.mfd, &su.frames, &xi).unwrap().trajectory(1.0).unwrap();
    assert!(st.iter().any(|s| s.curvature.amax() > 1e-3));
}

#[test]
fn taylor_expansion_near_sigma() {
    let su = setup(ManifoldSpec::Euclidean { dim: 4 }, SubmanifoldSpec::RoundSphere { radius: 1.5 }, &[0.8, 1.3, 2.0]);
    let xi = su.frames.normal[0].clone();
    let solver = RaySolver::new(&su.mfd, &su.frames, &xi).unwrap();
    let st = &solver.states_at(&[1e-3]).unwrap()[0];
    let s = st.shape_operator().unwrap();
    let s_xi = su.frames.weingarten(&xi);
    assert!((s.view((0, 0), (3, 3)) - s_xi).amax() < 1e-2);
}

#[test]
fn codimension_two_taylor_limit() {
    let su = bump_torus();
    let xi = su.frames.normal[1].clone();
    let solver = RaySolver::new(&su.mfd, &su.frames, &xi).unwrap();
    let t = 1e-3;
    let st = &solver.states_at(&[t]).unwrap()[0];
    let ts = st.shape_operator().unwrap() * t;
    close(ts[(0, 0)], 0.0, 1e-2);
    close(ts[(1, 1)], 1.0, 1e-2);
    close(st.volume_density() / t, 1.0, 1e-3);
}

#[test]
fn rejects_tangent_direction_and_bad_subspace() {
    let su = s3_great_circle();
    let tangent = su.frames.tangent[0].clone();
    assert!(RaySolver::new(&su.mfd, &su.frames, &tangent).is_err());
    let solver = RaySolver::new(&su.mfd, &su.frames, &[0.0, 0.0, 1.0]).unwrap();
    let st = &solver.states_at(&[0.5]).unwrap()[0];
    assert!(st.partial_trace_shape(&[vec![1.0, 1.0]]).is_err());
    assert!(matches!(solver.initial_state().unwrap().shape_operator(), Err(GeomError::FocalSingularity { .. })));
}
