use std::f64::consts::PI;

use proptest::prelude::*;

use mbions_core::config::{Model, Profile, RunConfig};
use mbions_core::diagnostics::relative_entropy;
use mbions_core::domain::{Domain, DomainSpec, Geometry};
use mbions_core::kinetics::{
    advect_x, bgk_relax, moments, specular_reflect, Interpolation, PhaseDistribution, Species,
};
use mbions_core::two_species::EtaRule;

fn small_domain(geometry_interval: bool) -> std::sync::Arc<Domain> {
    let spec = if geometry_interval {
        DomainSpec::interval_1d(1.0, 8, 2.0, 8)
    } else {
        DomainSpec::periodic_1d(2.0 * PI, 8, 2.0, 8)
    };
    Domain::new(spec).unwrap()
}

fn positive_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-6f64..10.0, n)
}

proptest! {
    #[test]
    fn free_streaming_conserves_mass(values in positive_values(64), dt in 0.0f64..0.5, interval in any::<bool>(), cubic in any::<bool>()) {
        let dom = small_domain(interval);
        let f = PhaseDistribution::new(dom, Species::Ion, values).unwrap();
        let scheme = if cubic { Interpolation::ClippedCubic } else { Interpolation::Linear };
        let g = advect_x(&f, dt, scheme).unwrap();
        prop_assert!((g.mass() - f.mass()).abs() <= 1e-12 * f.mass());
        prop_assert!(g.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn velocity_reflection_is_an_involution(values in positive_values(64)) {
        let f = PhaseDistribution::new(small_domain(true), Species::Ion, values).unwrap();
        prop_assert_eq!(f.reflect_velocities().reflect_velocities(), f);
    }

    #[test]
    fn specular_reflection_preserves_speed(v in prop::array::uniform2(-10.0f64..10.0), axis in 0usize..2, sign in any::<bool>()) {
        let mut n = [0.0, 0.0];
        n[axis] = if sign { 1.0 } else { -1.0 };
        let r = specular_reflect(&v, &n);
        prop_assert_eq!(specular_reflect(&r, &n), v.to_vec());
        prop_assert_eq!(r[0] * r[0] + r[1] * r[1], v[0] * v[0] + v[1] * v[1]);
        prop_assert_eq!(r[axis], -v[axis]);
    }

    #[test]
    fn relative_entropy_is_nonnegative(a in positive_values(64), b in positive_values(64)) {
        let dom = small_domain(false);
        let f = PhaseDistribution::new(dom.clone(), Species::Electron, a).unwrap();
        let g = PhaseDistribution::new(dom, Species::Electron, b).unwrap();
        prop_assert!(relative_entropy(&f, &g).unwrap() >= 0.0);
        prop_assert_eq!(relative_entropy(&f, &f).unwrap(), 0.0);
    }

    #[test]
    fn bgk_keeps_moments_and_dissipates(values in positive_values(64), rate in 0.0f64..5.0, dt in 0.0f64..2.0) {
        let f = PhaseDistribution::new(small_domain(false), Species::Electron, values).unwrap();
        let (g, report) = bgk_relax(&f, rate, dt).unwrap();
        prop_assert!(report.entropy_change <= 0.0);
        let (a, b) = (moments(&f), moments(&g));
        for ix in 0..8 {
            let s = a.density.values[ix];
            prop_assert!((a.density.values[ix] - b.density.values[ix]).abs() <= 1e-9 * s);
            prop_assert!((a.momentum[0].values[ix] - b.momentum[0].values[ix]).abs() <= 1e-9 * s);
            prop_assert!((a.kinetic_energy_density.values[ix] - b.kinetic_energy_density.values[ix]).abs() <= 1e-9 * s);
        }
    }

    #[test]
    fn config_dump_is_a_fixed_point(
        model in prop::sample::select(Model::ALL.to_vec()),
        n_x in 4usize..512,
        v_max in 0.1f64..50.0,
        e0 in 1e-3f64..1e3,
        length in 1e-6f64..1e6,
        interval in any::<bool>(),
        epsilons in prop::collection::vec(1e-6f64..0.999, 1..5),
        eta in (0.01f64..10.0, 0.0f64..0.99),
        amp in -0.99f64..0.99,
        tol in 1e-15f64..1e-3,
        times in prop::collection::vec(0.0f64..100.0, 0..4),
    ) {
        let mut c = RunConfig::new(model);
        c.domain.n_x = n_x;
        c.domain.v_max = v_max;
        c.domain.geometry = if interval { Geometry::Interval { length } } else { Geometry::Periodic { lengths: vec![length] } };
        c.physics.e0 = Some(e0);
        c.physics.e1 = Some(2.5);
        c.physics.freeze_ions = true;
        c.physics.epsilons = epsilons;
        c.physics.eta_rule = EtaRule { coefficient: eta.0, exponent: eta.1 };
        c.electrons.profile = Profile::Equilibrium;
        c.ions.profile = Profile::Cosine;
        c.ions.amplitude = amp;
        c.electrons.amplitude = amp;
        c.numerics.tol.pde = tol;
        c.output.snapshot_times = times;
        prop_assert!(c.violations().is_empty(), "{:?}", c.violations());
        let dump = c.dump();
        let parsed = RunConfig::parse(&dump).unwrap();
        prop_assert_eq!(&parsed, &c);
        prop_assert_eq!(parsed.dump(), dump);
    }
}
