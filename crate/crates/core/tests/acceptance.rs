//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng;

use tubecomp::geometry::{rho_k_at, rho_k_brute_force, ManifoldSpec};
use tubecomp::model_kernels::{cheeger_delta, thm1_bound, thm1_constants};
use tubecomp::submanifolds::SubmanifoldSpec;
use tubecomp::tube::tube_volume_on;
use tubecomp::verification::{
    bump_torus, check_focal_radius, check_integral_bound, check_ray_lemmas, check_structural, hk_model_volume,
    CheckReport, Context, Registry, Scenario, Status,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn builtin(name: &str) -> Scenario {
    Registry::builtin().get(name).unwrap_or_else(|| panic!("built-in {name}")).clone()
}

fn report<'a>(c: &'a CheckReport, label: &str) -> Result<&'a tubecomp::model_kernels::BoundReport, String> {
    c.report(label).ok_or_else(|| format!("{}: no report {label:?} ({:?} {:?})", c.scenario, c.status, c.message))
}

fn flat_tube_equality() -> Outcome {
    let start = Instant::now();
    let s = builtin("flat_t4_circle");
    let ctx = Context::new(&s).map_err(err)?;
    let oracle = PI * PI / 3.0;
    let vol = tube_volume_on(&ctx.mfd, &ctx.grid, 0.5, &s.quadrature).map_err(err)?;
    let check = check_integral_bound(&ctx).map_err(err)?;
    let bound = report(&check, "thm1_global r=0.5")?.bound;
    let elapsed = start.elapsed().as_secs_f64();
    let rel = |x: f64| (x - oracle).abs() / oracle;
    ensure(rel(vol.value) <= 1e-5, || format!("volume {} vs {oracle}", vol.value))?;
    ensure(rel(bound) <= 1e-5, || format!("bound {bound} vs {oracle}"))?;
    ensure(elapsed <= 30.0, || format!("took {elapsed:.1} s"))?;
    Ok(format!("volume {:.9}, bound {bound:.9}, oracle {oracle:.9}, {elapsed:.1} s", vol.value))
}

fn space_form_tube_equality() -> Outcome {
    let s = builtin("s3_great_circle");
    let ctx = Context::new(&s).map_err(err)?;
    let q = &s.quadrature;
    let quarter = tube_volume_on(&ctx.mfd, &ctx.grid, FRAC_PI_4, q).map_err(err)?.value;
    let (hk, _) = hk_model_volume(&ctx, 1.0, FRAC_PI_4);
    let half = tube_volume_on(&ctx.mfd, &ctx.grid, FRAC_PI_2, q).map_err(err)?.value;
    let pi2 = PI * PI;
    ensure((quarter - pi2).abs() <= 1e-5, || format!("vol(π/4) = {quarter}"))?;
    ensure((hk - pi2).abs() <= 1e-5, || format!("model bound(π/4) = {hk}"))?;
    ensure((half - 2.0 * pi2).abs() <= 1e-4, || format!("vol(π/2) = {half}"))?;
    Ok(format!("vol(π/4) {quarter:.9}, bound {hk:.9}, vol(π/2) {half:.9}"))
}

fn hessian_space_forms() -> Outcome {
    let s = builtin("h3_point");
    let ctx = Context::new(&s).map_err(err)?;
    let times: Vec<f64> = (0..=38).map(|i| 0.1 + 0.05 * i as f64).collect();
    let mut worst_h: f64 = 0.0;
    for smp in ctx.sample_rays(32) {
        for st in ctx.solver(&smp).map_err(err)?.states_at(&times).map_err(err)? {
            let tr = st.shape_operator().map_err(err)?.trace();
            worst_h = worst_h.max((tr - 2.0 / st.t.tanh()).abs());
        }
    }
    ensure(worst_h <= 1e-5, || format!("H³ |tr S − 2 coth t| = {worst_h:e}"))?;

    let mut s3 = Scenario::new(
        "s3_point",
        ManifoldSpec::Sphere { dim: 3, radius: 1.0 },
        SubmanifoldSpec::Point { at: vec![0.0; 3] },
    );
    s3.k = Some(1);
    let ctx = Context::new(&s3).map_err(err)?;
    let mut rng = tubecomp::rng(11);
    let times: Vec<f64> = (1..=20).map(|i| 0.1 * i as f64).collect();
    let mut worst_s: f64 = 0.0;
    for smp in ctx.sample_rays(32) {
        let angle = rng.random::<f64>() * 2.0 * PI;
        let w = vec![vec![angle.cos(), angle.sin()]];
        for st in ctx.solver(&smp).map_err(err)?.states_at(&times).map_err(err)? {
            let tr = st.partial_trace_shape(&w).map_err(err)?;
            worst_s = worst_s.max((tr - st.t.cos() / st.t.sin()).abs());
        }
    }
    ensure(worst_s <= 1e-5, || format!("S³ generic |tr_W S − cs/sn| = {worst_s:e}"))?;
    Ok(format!("H³ max error {worst_h:.2e}, S³ generic-W max error {worst_s:.2e}"))
}

fn focal_radius() -> Outcome {
    let eq = check_focal_radius(&Context::new(&builtin("sn_equator")).map_err(err)?).map_err(err)?;
    let r = report(&eq, "focal_radius")?;
    ensure((r.measured - FRAC_PI_2).abs() <= 1e-6, || format!("equator focal distance {}", r.measured))?;
    ensure(r.equality, || "equator equality not flagged".into())?;
    let small = check_focal_radius(&Context::new(&builtin("s3_small_sphere")).map_err(err)?).map_err(err)?;
    let rs = report(&small, "focal_radius")?;
    ensure(small.status == Status::Pass, || format!("small sphere status {:?}", small.status))?;
    ensure(rs.measured < FRAC_PI_2 - 1e-3, || format!("small sphere focal distance {}", rs.measured))?;
    Ok(format!("equator {:.9} (equality flagged), sphere of radius 0.8 {:.9}", r.measured, rs.measured))
}

fn rho_product() -> Outcome {
    let m = ManifoldSpec::Product { factors: vec![ManifoldSpec::Sphere { dim: 2, radius: 1.0 }; 2] }
        .build()
        .map_err(err)?;
    let mut rng = tubecomp::rng(5);
    let mut worst: f64 = 0.0;
    for _ in 0..4 {
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        for (k, expect) in [(2, 0.0), (3, 1.0)] {
            let search = rho_k_at(&m, &x, k).map_err(err)?;
            let brute = rho_k_brute_force(&m, &x, k, 20_000).map_err(err)?;
            ensure((search - expect).abs() <= 1e-3, || format!("ρ_{k} = {search} at {x:?}"))?;
            ensure((search - brute).abs() <= 1e-3, || format!("ρ_{k}: search {search} vs dense {brute}"))?;
            worst = worst.max((search - expect).abs());
        }
    }
    Ok(format!("max |ρ_k − oracle| {worst:.2e} over 4 points, dense oracle agrees"))
}

fn structural_residuals() -> Outcome {
    let mut rays = 0;
    let mut worst = [0.0f64; 4];
    for s in Registry::builtin().scenarios() {
        let ctx = Context::new(s).map_err(err)?;
        let c = check_structural(&ctx).map_err(err)?;
        ensure(c.status == Status::Pass, || format!("{}: {:?} {:?}", s.name, c.status, c.reports))?;
        for (i, label) in
            ["riccati_residual", "density_residual", "wronskian_drift", "taylor_residual"].iter().enumerate()
        {
            worst[i] = worst[i].max(report(&c, label)?.measured);
        }
        rays += ctx.sample_rays(s.rays).len();
    }
    ensure(worst[0] <= 1e-5 && worst[1] <= 1e-6 && worst[2] <= 1e-8 && worst[3] <= 1e-3, || format!("{worst:?}"))?;
    Ok(format!(
        "{rays} rays: riccati {:.1e}, density {:.1e}, wronskian {:.1e}, taylor {:.1e}",
        worst[0], worst[1], worst[2], worst[3]
    ))
}

fn lemma_suite() -> Outcome {
    let mut scenarios = vec![builtin("flat_t4_circle"), builtin("s3_great_circle"), builtin("s2xs2_factor")];
    for amp in [0.05, 0.1] {
        let mut s = bump_torus(amp);
        s.name = format!("bump_torus_{amp}");
        scenarios.push(s);
    }
    let mut rays = 0;
    let mut worst = f64::INFINITY;
    let mut exponents = 0;
    for s in &scenarios {
        let ctx = Context::new(s).map_err(err)?;
        let c = check_ray_lemmas(&ctx).map_err(err)?;
        ensure(c.status == Status::Pass, || format!("{}: {:?} {:?}", s.name, c.status, c.message))?;
        let (n, k) = (ctx.n as f64, ctx.k as f64);
        for p in [n - k + 1.0, 2.0 * (n - k)] {
            report(&c, &format!("two_mean p={p}"))?;
            exponents += 1;
        }
        for r in c.reports.iter().filter(|r| !r.label.starts_with("jacobi_residual")) {
            worst = worst.min(r.slack);
        }
        rays += ctx.sample_rays(s.rays).len();
    }
    ensure(rays >= 256, || format!("only {rays} rays"))?;
    ensure(worst >= -1e-5, || format!("worst slack {worst:e}"))?;
    Ok(format!("{rays} rays over {} scenarios, {exponents} exponent cases, worst slack {worst:.2e}", scenarios.len()))
}

fn integral_bound_bump() -> Outcome {
    let ctx = Context::new(&bump_torus(0.1)).map_err(err)?;
    let c = check_integral_bound(&ctx).map_err(err)?;
    ensure(c.status == Status::Pass, || format!("{:?} {:?}", c.status, c.message))?;
    let global = report(&c, "thm1_global r=0.6")?;
    let tube = report(&c, "thm1_tube r=0.6")?;
    let mc = report(&c, "volume_mc r=0.6")?;
    ensure(global.slack > 0.0, || format!("global slack {}", global.slack))?;
    ensure(mc.passed, || format!("|quadrature − MC| = {} > 3 se = {}", mc.measured, mc.bound))?;
    let constants = thm1_constants(3, 1, ctx.p, -0.1).map_err(err)?;
    let no_deficit = thm1_bound(&constants, ctx.grid.vol_sigma(), 0.0, 0.6);
    ensure(global.bound > no_deficit && tube.bound > no_deficit, || "deficit norm is zero".into())?;
    Ok(format!(
        "volume {:.6}, global bound {:.4e} (slack {:.3e}), tube-norm bound {:.4e}, MC diff {:.2e} ≤ {:.2e}",
        global.measured, global.bound, global.slack, tube.bound, mc.measured, mc.bound
    ))
}

fn cheeger_round_trip() -> Outcome {
    let mut rng = tubecomp::rng(2024);
    let mut worst: f64 = 0.0;
    for draw in 0..100 {
        let n = rng.random_range(3..=7usize);
        let m = rng.random_range(1..=n - 2);
        let k = m.min(n - m - 1);
        let p = (n - k) as f64 + rng.random_range(0.1..3.0);
        let h = -rng.random_range(0.0..2.0);
        let diameter = rng.random_range(0.1..2.0);
        let epsilon = if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..0.05) };
        let c = thm1_constants(n, m, p, h).map_err(err)?;
        let floor = thm1_bound(&c, 0.0, epsilon, diameter).max(1e-3);
        let v0 = floor * rng.random_range(1.5..10.0);
        let delta = cheeger_delta(n, m, p, h, v0, diameter, epsilon).map_err(|e| format!("draw {draw}: {e}"))?;
        let rel = (thm1_bound(&c, delta, epsilon, diameter) - v0).abs() / v0;
        ensure(rel <= 1e-8, || format!("draw {draw} (n={n}, m={m}, p={p}, H={h}): relative error {rel:e}"))?;
        worst = worst.max(rel);
    }
    Ok(format!("100 draws, max relative error {worst:.2e}"))
}

fn run_verify(args: &[&str], dir: &Path) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_tubecomp"))
        .arg("verify")
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .map_err(err)?;
    ensure(out.status.code() == Some(0), || {
        format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr))
    })?;
    let name = if args.contains(&"csv") { "report.csv" } else { "report.json" };
    std::fs::read(dir.join(name)).map_err(err)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(err)?;
    let config = tmp.path().join("seeded.json");
    std::fs::write(
        &config,
        r#"{"name": "seeded_fiber", "manifold": {"kind": "sphere", "dim": 3},
            "submanifold": {"kind": "great_circle"}, "h": 1.0, "radii": [0.5],
            "checks": ["hessian_comparison", "hk_bound"],
            "quadrature": {"base_resolution": 8, "fiber": {"kind": "monte_carlo", "samples": 24, "seed": 0}}}"#,
    )
    .map_err(err)?;
    let mut sizes = Vec::new();
    for args in [
        vec!["--scenario", "spaceforms", "--seed", "7", "--format", "json"],
        vec!["--config", config.to_str().unwrap(), "--seed", "7", "--format", "csv"],
    ] {
        let runs: Vec<Vec<u8>> = (0..2)
            .map(|i| {
                let dir = tmp.path().join(format!("run{}{i}", sizes.len()));
                std::fs::create_dir(&dir).map_err(err)?;
                run_verify(&args, &dir)
            })
            .collect::<Result<_, _>>()?;
        ensure(runs[0] == runs[1], || format!("{args:?}: outputs differ"))?;
        sizes.push(runs[0].len());
    }
    Ok(format!("spaceforms JSON ({} bytes) and seeded CSV ({} bytes) byte-identical across runs", sizes[0], sizes[1]))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("flat tube equality", flat_tube_equality),
        ("space-form tube equality", space_form_tube_equality),
        ("Hessian comparison in space forms", hessian_space_forms),
        ("focal radius", focal_radius),
        ("rho_k on S2xS2", rho_product),
        ("structural residuals", structural_residuals),
        ("J/Y lemma suite", lemma_suite),
        ("integral bound with nonzero deficit", integral_bound_bump),
        ("cheeger_delta round trip", cheeger_round_trip),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
