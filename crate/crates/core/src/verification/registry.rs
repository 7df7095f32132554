//! Built-in scenarios and suites.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use super::scenario::{CheckKind, Scenario};
use crate::geometry::{Bump, HyperbolicModel, ManifoldSpec};
use crate::quadrature::FiberRule;
use crate::submanifolds::SubmanifoldSpec;
use crate::tube::MonteCarloSpec;

use CheckKind::*;

#[derive(Debug, Clone, Default)]
pub struct Registry {
    scenarios: Vec<Scenario>,
}

fn flat_torus(dim: usize) -> ManifoldSpec {
    ManifoldSpec::FlatTorus { dim, side: 2.0 * PI, bump: None }
}

fn bump_torus_spec(amplitude: f64) -> ManifoldSpec {
    ManifoldSpec::FlatTorus {
        dim: 3,
        side: 2.0 * PI,
        bump: Some(Bump { amplitude, radius: 1.2, center: vec![PI, PI, PI] }),
    }
}

fn bump_geodesic() -> SubmanifoldSpec {
    SubmanifoldSpec::ClosedGeodesic { axis: 0, offset: Some(vec![0.0, PI, PI]) }
}

/// The flat density is the same on every ray, so a coarse grid is exact.
fn flat_quadrature(s: &mut Scenario) {
    s.quadrature.base_resolution = 2;
    s.quadrature.fiber = FiberRule::Product { resolution: 8 };
    s.deficit_nodes = 4;
}

fn sphere3() -> ManifoldSpec {
    ManifoldSpec::Sphere { dim: 3, radius: 1.0 }
}

/// Bump torus around the geodesic through the bump centre, with H = −0.1.
pub fn bump_torus(amplitude: f64) -> Scenario {
    let mut s = Scenario::new("bump_torus", bump_torus_spec(amplitude), bump_geodesic());
    s.h = Some(-0.1);
    s.radii = vec![0.6];
    s.checks = vec![IntegralBound, Lemmas, Structural];
    s.quadrature.monte_carlo = Some(MonteCarloSpec { samples: 512, seed: 0 });
    s
}

impl Registry {
    pub fn empty() -> Self {
        Registry::default()
    }

    pub fn builtin() -> Self {
        let mut v = Vec::new();

        let mut s =
            Scenario::new("flat_t4_circle", flat_torus(4), SubmanifoldSpec::ClosedGeodesic { axis: 0, offset: None });
        s.h = Some(0.0);
        s.p = Some(4.0);
        s.radii = vec![0.5];
        s.facts.validity_radius = Some(PI);
        s.facts.rho_k = Some(0.0);
        flat_quadrature(&mut s);
        s.checks = vec![HessianComparison, HkBound, IntegralBound, Lemmas, Structural];
        v.push(s);

        let mut s = Scenario::new(
            "flat_t5_torus2",
            flat_torus(5),
            SubmanifoldSpec::SubTorus { axes: vec![0, 1], offset: None },
        );
        s.h = Some(0.0);
        s.p = Some(4.0);
        s.radii = vec![0.4];
        s.facts.validity_radius = Some(PI);
        s.facts.rho_k = Some(0.0);
        flat_quadrature(&mut s);
        s.checks = vec![HessianComparison, HkBound, IntegralBound, Lemmas, Structural];
        v.push(s);

        let mut s = Scenario::new("s3_great_circle", sphere3(), SubmanifoldSpec::GreatCircle);
        s.h = Some(1.0);
        s.radii = vec![FRAC_PI_4, FRAC_PI_2];
        s.facts.validity_radius = Some(FRAC_PI_2);
        s.facts.rho_k = Some(1.0);
        s.checks = vec![HessianComparison, FocalRadius, HkBound, Lemmas, Structural];
        v.push(s);

        let mut s = Scenario::new("sn_equator", sphere3(), SubmanifoldSpec::Equator { tilt: FRAC_PI_4 });
        s.h = Some(1.0);
        s.radii = vec![0.6];
        s.facts.validity_radius = Some(FRAC_PI_2);
        s.facts.rho_k = Some(2.0);
        s.checks = vec![HessianComparison, FocalRadius, HkBound, Structural];
        v.push(s);

        let mut s = Scenario::new("s3_small_sphere", sphere3(), SubmanifoldSpec::RoundSphere { radius: 0.8 });
        s.h = Some(1.0);
        s.radii = vec![0.5];
        s.facts.validity_radius = Some(0.8f64.asin());
        s.checks = vec![HessianComparison, FocalRadius, HkBound, Structural];
        v.push(s);

        let mut s = Scenario::new(
            "h3_point",
            ManifoldSpec::Hyperbolic { dim: 3, radius: 1.0, model: HyperbolicModel::Ball },
            SubmanifoldSpec::Point { at: vec![0.0; 3] },
        );
        s.h = Some(-1.0);
        s.radii = vec![1.0, 2.0];
        s.facts.validity_radius = Some(1e3);
        s.facts.rho_k = Some(-2.0);
        s.checks = vec![HessianComparison, HkBound, Structural];
        v.push(s);

        let mut s = Scenario::new(
            "s2xs2_factor",
            ManifoldSpec::Product { factors: vec![ManifoldSpec::Sphere { dim: 2, radius: 1.0 }; 2] },
            SubmanifoldSpec::FactorSphere { point: vec![0.0, 0.0] },
        );
        s.h = Some(0.0);
        s.radii = vec![0.4];
        s.quadrature.base_resolution = 6;
        s.quadrature.fiber = FiberRule::Product { resolution: 8 };
        s.deficit_nodes = 4;
        s.facts.validity_radius = Some(PI);
        s.checks = vec![HessianComparison, HkBound, IntegralBound, Lemmas, Structural];
        v.push(s);

        v.push(bump_torus(0.1));

        let mut s = Scenario::new("bump_torus_certified", bump_torus_spec(0.1), bump_geodesic());
        s.radii = vec![0.6];
        s.checks = vec![HessianComparison, HkBound];
        v.push(s);

        v.sort_by(|a, b| a.name.cmp(&b.name));
        Registry { scenarios: v }
    }

    pub fn from_scenarios(mut scenarios: Vec<Scenario>) -> Self {
        scenarios.sort_by(|a, b| a.name.cmp(&b.name));
        Registry { scenarios }
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn get(&self, name: &str) -> Option<&Scenario> {
        self.scenarios.iter().find(|s| s.name == name)
    }

    pub fn suite_names() -> &'static [&'static str] {
        &["all", "spaceforms"]
    }

    /// A named suite, or the single scenario of that name.
    pub fn suite(&self, name: &str) -> Option<Vec<Scenario>> {
        const SPACEFORMS: [&str; 5] = ["flat_t4_circle", "flat_t5_torus2", "h3_point", "s3_great_circle", "sn_equator"];
        match name {
            "all" => Some(self.scenarios.clone()),
            "spaceforms" => {
                Some(self.scenarios.iter().filter(|s| SPACEFORMS.contains(&s.name.as_str())).cloned().collect())
            }
            _ => self.get(name).map(|s| vec![s.clone()]),
        }
    }
}
