use tubecomp::geometry::ManifoldSpec;
use tubecomp::submanifolds::SubmanifoldSpec;
use tubecomp::verification::{bump_torus, run_scenario, run_suite, CheckKind, Registry, Scenario, Status};

fn light_sphere(name: &str) -> Scenario {
    let mut s = Scenario::new(name, ManifoldSpec::Sphere { dim: 3, radius: 1.0 }, SubmanifoldSpec::GreatCircle);
    s.h = Some(1.0);
    s.radii = vec![0.5];
    s.quadrature.base_resolution = 4;
    s.quadrature.fiber = tubecomp::quadrature::FiberRule::Product { resolution: 8 };
    s.rays = 8;
    s
}

#[test]
fn empty_suite_succeeds() {
    let r = run_suite("empty", &[]);
    assert!(r.success());
    assert_eq!(r.summary.scenarios, 0);
    assert!(r.checks.is_empty());
    assert_eq!(r.to_csv().lines().count(), 1);
}

#[test]
fn one_precondition_violation() {
    let mut ok = light_sphere("ok");
    ok.checks = vec![CheckKind::HkBound];
    let mut violating = light_sphere("negative_h");
    violating.h = Some(-1.0);
    violating.checks = vec![CheckKind::FocalRadius];
    let r = run_suite("mixed", &[violating, ok]);
    assert_eq!(r.summary.precondition_violations, 1);
    assert_eq!(r.summary.passed, 1);
    assert!(r.success());
    let v: Vec<_> = r.checks.iter().filter(|c| c.status == Status::PreconditionViolation).collect();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].scenario, "negative_h");
    assert!(v[0].message.as_deref().unwrap().contains("H > 0"));
}

#[test]
fn uncertified_curvature_is_never_a_failure() {
    let mut s = bump_torus(0.1);
    s.checks = vec![CheckKind::HkBound];
    s.inflate_volume = Some(10.0);
    let reports = run_scenario(&s);
    assert_eq!(reports[0].status, Status::PreconditionViolation);
    let cert = reports[0].certification.as_ref().unwrap();
    assert!(!cert.holds && cert.margin < -1.0);
}

#[test]
fn declared_fact_must_match_the_samples() {
    let mut s = light_sphere("wrong_fact");
    s.checks = vec![CheckKind::HkBound];
    s.facts.rho_k = Some(0.5);
    let reports = run_scenario(&s);
    assert_eq!(reports[0].status, Status::PreconditionViolation);
}

#[test]
fn inflated_volume_fails_the_bound() {
    let mut s = light_sphere("inflated");
    s.checks = vec![CheckKind::HkBound];
    s.inflate_volume = Some(1.1);
    let r = run_suite("fault", &[s]);
    assert!(!r.success());
    assert_eq!(r.summary.failed, 1);
}

#[test]
fn construction_errors_become_error_reports() {
    let mut s = light_sphere("bad_axis");
    s.manifold = ManifoldSpec::FlatTorus { dim: 3, side: 1.0, bump: None };
    s.submanifold = SubmanifoldSpec::ClosedGeodesic { axis: 7, offset: None };
    s.checks = vec![CheckKind::HkBound, CheckKind::Structural];
    let r = run_suite("errors", &[s]);
    assert_eq!(r.summary.errors, 2);
    assert!(!r.success());
}

#[test]
fn spaceforms_suite_flags_equality() {
    let registry = Registry::builtin();
    let r = run_suite("spaceforms", &registry.suite("spaceforms").unwrap());
    assert!(r.success(), "{}", r.human_summary());
    assert_eq!(r.summary.failed + r.summary.errors + r.summary.precondition_violations, 0);
    for c in &r.checks {
        for b in &c.reports {
            let equality_case = b.label.starts_with("hk_bound")
                || b.label.starts_with("thm1_global")
                || b.label == "focal_radius"
                || (c.scenario == "h3_point" && c.check == CheckKind::HessianComparison);
            if equality_case {
                assert!(b.equality, "{} {}: slack {:e} err {:e}", c.scenario, b.label, b.slack, b.error_estimate);
            }
        }
    }
    let names: Vec<&str> = r.checks.iter().map(|c| c.scenario.as_str()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
}
