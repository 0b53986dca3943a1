use std::f64::consts::PI;

use approx::assert_relative_eq;
use libm::erfc;

use mbions_core::domain::{Domain, DomainSpec};
use mbions_core::equilibrium::verify_maxwell_boltzmann;
use mbions_core::fields::{PoissonBoltzmann, SpatialField};
use mbions_core::kinetics::{maxwellian, PhaseDistribution, Species};
use mbions_core::reduced_ions::{self, beta_invariant, ReducedParams, RunControl, TimeStep};

/// Kinetic-energy residual left by truncating a unit-mass 1D Maxwellian at
/// `|v| = v_max`: `T_n / (2 beta) - T_E` with the two Gaussian tails.
fn tail_residual(beta: f64, v_max: f64) -> f64 {
    let s = v_max * (beta / 2.0).sqrt();
    let t_n = erfc(s);
    let t_e = (beta / (2.0 * PI)).sqrt()
        * ((v_max / beta) * (-beta * v_max * v_max / 2.0).exp()
            + (1.0 / beta) * (PI / (2.0 * beta)).sqrt() * erfc(s));
    t_n / (2.0 * beta) - t_e
}

#[test]
fn kinetic_energy_residual_matches_gaussian_tail() {
    let beta = 1.3;
    let v_max = 3.0;
    let mut gaps = Vec::new();
    for n_v in [512, 1024] {
        let dom = Domain::new(DomainSpec::periodic_1d(2.0 * PI, 16, v_max, n_v)).unwrap();
        let phi = SpatialField::from_fn(dom.space.clone(), |x| 0.2 * x[0].sin());
        let f = maxwellian(beta, &phi, dom.clone(), Species::Electron).unwrap();
        let r = verify_maxwell_boltzmann(&f, &phi, beta).unwrap();
        let mass = phi.map(|p| (beta * p).exp()).integral();
        let oracle = mass * tail_residual(beta, v_max).abs();
        assert!(oracle > 1e-3, "tail too small to resolve: {oracle}");
        gaps.push((r.kinetic_energy - oracle).abs() / oracle);
    }
    // the leftover is the O(h^2) endpoint error of the midpoint rule
    assert!(gaps[1] < 1e-4, "{gaps:?}");
    assert_relative_eq!(gaps[0] / gaps[1], 4.0, max_relative = 0.05);
}

fn manufactured_error(
    spec: DomainSpec,
    lambda: f64,
    beta: f64,
    exact: impl Fn(f64) -> f64,
    lap: impl Fn(f64) -> f64,
) -> f64 {
    let mut spec = spec;
    spec.lambda_d = lambda;
    let dom = Domain::new(spec).unwrap();
    let n_i = SpatialField::from_fn(dom.space.clone(), |x| {
        -lambda * lambda * lap(x[0]) + (beta * exact(x[0])).exp()
    });
    let sol = PoissonBoltzmann::new(lambda, 1)
        .solve_phi(&n_i, beta)
        .unwrap();
    sol.phi.values.iter().enumerate().fold(0.0f64, |m, (i, p)| {
        m.max((p - exact(dom.space.position(i)[0])).abs())
    })
}

#[test]
fn debye_length_and_temperature_enter_as_written() {
    let errs: Vec<f64> = [32, 64]
        .iter()
        .map(|&n| {
            manufactured_error(
                DomainSpec::periodic_1d(2.0 * PI, n, 4.0, 8),
                0.5,
                2.0,
                |x| 0.3 * (2.0 * x).sin(),
                |x| -1.2 * (2.0 * x).sin(),
            )
        })
        .collect();
    assert!(errs[1] < 1e-3);
    assert_relative_eq!(errs[0] / errs[1], 4.0, max_relative = 0.1);
}

#[test]
fn neumann_manufactured_solution_is_second_order() {
    let l = 3.0;
    let k = PI / l;
    let errs: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| {
            manufactured_error(
                DomainSpec::interval_1d(l, n, 4.0, 8),
                1.0,
                1.0,
                |x| 0.2 * (k * x).cos(),
                |x| -0.2 * k * k * (k * x).cos(),
            )
        })
        .collect();
    for w in errs.windows(2) {
        assert!((3.5..=4.5).contains(&(w[0] / w[1])), "{errs:?}");
    }
}

#[test]
fn reduced_ions_between_specular_walls() {
    let dom = Domain::new(DomainSpec::interval_1d(2.0 * PI, 64, 6.0, 64)).unwrap();
    let n = SpatialField::from_fn(dom.space.clone(), |x| 1.0 + 0.2 * (x[0] / 2.0).cos());
    let f0 = PhaseDistribution::with_density(dom, Species::Ion, &n, &[0.0], 0.5).unwrap();
    let params = ReducedParams::new(3.0);
    let state = reduced_ions::init(&params, f0).unwrap();
    let (m0, e0, c0) = (state.m0, state.total_energy(), state.c0);
    let control = RunControl {
        t_end: 2.0,
        step: TimeStep::Fixed(0.025),
        output_every: 1,
        max_steps: 1000,
    };
    let (end, records) = reduced_ions::run(&params, state, &control, |_| Ok(())).unwrap();
    assert!((end.f_plus.mass() - m0).abs() < 1e-12 * m0);
    assert!((end.total_energy() - e0).abs() < 1e-8 * e0);
    assert!((beta_invariant(&end) - c0).abs() < 1e-5 * c0.abs());
    // the ions actually moved
    assert!(records
        .iter()
        .any(|r| (r.beta.unwrap() - records[0].beta.unwrap()).abs() > 1e-6));
}

#[test]
fn snapshot_reload_continues_a_run_bit_for_bit() {
    let dom = Domain::new(DomainSpec::periodic_1d(2.0 * PI, 32, 6.0, 32)).unwrap();
    let n = SpatialField::from_fn(dom.space.clone(), |x| 1.0 + 0.1 * x[0].cos());
    let f0 = PhaseDistribution::with_density(dom.clone(), Species::Ion, &n, &[0.0], 0.5).unwrap();
    let params = ReducedParams::new(3.0);
    let half = RunControl {
        t_end: 0.25,
        step: TimeStep::Fixed(0.05),
        output_every: 1,
        max_steps: 100,
    };
    let s0 = reduced_ions::init(&params, f0).unwrap();
    let (mid, _) = reduced_ions::run(&params, s0, &half, |_| Ok(())).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mid.bin");
    mbions_core::io::write_snapshot(&path, &mid.f_plus, mid.t).unwrap();
    let (g, t) = mbions_core::io::read_snapshot(&path, dom, Species::Ion).unwrap();
    assert_eq!(t, mid.t);
    assert_eq!(g, mid.f_plus);
}
