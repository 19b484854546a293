//! Property tests for the invariants the simulator is built around.

use dnls::evolution::{evolve, EvolveOptions, Exponents, Problem, SimState, Stepper};
use dnls::functionals::Diagnostics;
use dnls::hypotheses::{check_control, compute_lambda};
use dnls::profiles::{EvaluatedProfile, ProfileKind, ProfileSpec, Role};
use dnls::{ComplexField, Grid, Spectral};
use num_complex::Complex64;
use proptest::prelude::*;

#[derive(Clone, Debug)]
struct Bump {
    amp: f64,
    phase: f64,
    center: [f64; 3],
    width: f64,
    k: [f64; 3],
}

fn bump() -> impl Strategy<Value = Bump> {
    (
        0.1..2.0f64,
        0.0..6.3f64,
        prop::array::uniform3(-2.5..2.5f64),
        0.8..2.0f64,
        prop::array::uniform3(-1.5..1.5f64),
    )
        .prop_map(|(amp, phase, center, width, k)| Bump {
            amp,
            phase,
            center,
            width,
            k,
        })
}

fn grid_for(d: usize) -> Grid {
    let n = if d == 3 { 16 } else { 32 };
    Grid::new(d, n, 8.0).unwrap()
}

fn smooth_field(grid: Grid, bumps: &[Bump]) -> ComplexField {
    ComplexField::from_fn(grid, |x| {
        bumps
            .iter()
            .map(|b| {
                let mut r2 = 0.0;
                let mut kx = 0.0;
                for (i, &xi) in x.iter().enumerate() {
                    r2 += (xi - b.center[i]).powi(2);
                    kx += b.k[i] * xi;
                }
                Complex64::from_polar(b.amp * (-r2 / (b.width * b.width)).exp(), b.phase + kx)
            })
            .sum()
    })
}

fn field_case() -> impl Strategy<Value = (usize, Vec<Bump>)> {
    (1usize..=3, prop::collection::vec(bump(), 1..4))
}

fn well(depth: f64) -> ProfileSpec {
    ProfileSpec::signed(
        ProfileKind::Gaussian {
            amplitude: depth,
            width: 1.5,
            center: vec![],
        },
        -1.0,
    )
    .unwrap()
}

fn damping() -> ProfileSpec {
    ProfileSpec::new(ProfileKind::Plateau {
        amplitude: 0.8,
        r1: 1.5,
        r2: 3.5,
    })
    .unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn max_diff(a: &ComplexField, b: &ComplexField) -> f64 {
    a.samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval((d, bumps) in field_case()) {
        let grid = grid_for(d);
        let spectral = Spectral::new(grid);
        let u = smooth_field(grid, &bumps);
        let u_hat = spectral.to_frequency(&u).unwrap();
        let physical = u.mass();
        let spectral_sum = spectral.spectral_l2_sq(u_hat.samples());
        prop_assert!(rel(spectral_sum, physical) <= 1e-12, "{spectral_sum} vs {physical}");
    }

    #[test]
    fn free_propagation_is_unitary((d, bumps) in field_case(), t in -10.0..10.0f64) {
        let grid = grid_for(d);
        let spectral = Spectral::new(grid);
        let u = smooth_field(grid, &bumps);
        let v = spectral.free_propagate(&u, t).unwrap();
        let before = u.lp_norm(2.0).unwrap();
        let after = v.lp_norm(2.0).unwrap();
        prop_assert!(rel(after, before) <= 1e-12);
    }

    #[test]
    fn gradient_commutes_with_propagation((d, bumps) in field_case(), t in -10.0..10.0f64) {
        let grid = grid_for(d);
        let spectral = Spectral::new(grid);
        let u = smooth_field(grid, &bumps);
        let a = spectral.gradient(&spectral.free_propagate(&u, t).unwrap()).unwrap();
        let b = spectral.gradient(&u).unwrap();
        for (ga, gb) in a.iter().zip(&b) {
            let gb = spectral.free_propagate(gb, t).unwrap();
            let scale = gb.max_modulus().max(1e-300);
            prop_assert!(max_diff(ga, &gb) / scale <= 1e-12);
        }
    }

    #[test]
    fn structural_bounds_on_smooth_fields(
        (d, bumps) in field_case(),
        depth in 0.0..1.5f64,
        sigma1 in 0.5..1.9f64,
        s3_frac in 0.1..0.9f64,
    ) {
        let grid = grid_for(d);
        let sigma3 = s3_frac * sigma1;
        let exps = Exponents::new(sigma1, 0.5 * sigma1, sigma3).unwrap();
        let problem = Problem::new(grid, exps, &damping(), &well(depth)).unwrap();
        let lambda = compute_lambda(problem.potential().sup_norm(), sigma1, sigma3).unwrap();
        let diag = Diagnostics::new(Spectral::new(grid), lambda, 1.0, true);
        let u = smooth_field(grid, &bumps);
        let view = diag.view(&u).unwrap();
        let r = diag.record(&view, 0.0, &problem);
        let grad_sq = r.grad_l2 * r.grad_l2;
        let l2 = r.mass.sqrt();
        prop_assert!(r.energy_plus >= 0.5 * grad_sq * (1.0 - 1e-12), "E+ {} < {}", r.energy_plus, 0.5 * grad_sq);
        prop_assert!(r.morawetz_i.abs() <= l2 * r.grad_l2 * (1.0 + 1e-12));
        let b = r.interaction_b.unwrap();
        prop_assert!(b.abs() <= l2.powi(3) * r.grad_l2 * (1.0 + 1e-12));
    }

    #[test]
    fn control_witness_is_scale_covariant(factor in 0.01..100.0f64, depth in 0.05..1.0f64, s2 in 0.2..1.0f64) {
        let grid = Grid::new(2, 32, 8.0).unwrap();
        let a = EvaluatedProfile::evaluate(
            &ProfileSpec::new(ProfileKind::Gaussian { amplitude: 1.0, width: 3.0, center: vec![] }).unwrap(),
            &grid,
            Role::Damping,
        )
        .unwrap();
        let v = |amp: f64| {
            EvaluatedProfile::evaluate(
                &ProfileSpec::signed(ProfileKind::Gaussian { amplitude: amp, width: 1.0, center: vec![] }, -1.0).unwrap(),
                &grid,
                Role::Potential,
            )
            .unwrap()
        };
        let base = check_control(&a, &v(depth), s2, 0.5 * s2);
        let scaled = check_control(&a, &v(factor * depth), s2, 0.5 * s2);
        prop_assert!(base.holds && scaled.holds);
        prop_assert!(rel(scaled.c0, factor * base.c0) <= 1e-12);
        prop_assert_eq!(
            base.argsup.map(|w| w.location),
            scaled.argsup.map(|w| w.location)
        );
    }

    #[test]
    fn profile_sums_are_additive(
        x in prop::array::uniform3(-6.0..6.0f64),
        amp in 0.1..2.0f64,
        rate in 0.5..6.0f64,
    ) {
        let g = ProfileSpec::new(ProfileKind::Gaussian { amplitude: amp, width: 1.3, center: vec![] }).unwrap();
        let p = ProfileSpec::new(ProfileKind::PolyDecay { amplitude: 1.0, rate }).unwrap();
        let s = ProfileSpec::new(ProfileKind::Sum(vec![g.clone(), p.clone()])).unwrap();
        let (eg, ep, es) = (g.eval_point(&x), p.eval_point(&x), s.eval_point(&x));
        prop_assert_eq!(es.value, eg.value + ep.value);
        prop_assert_eq!(es.laplacian, eg.laplacian + ep.laplacian);
        for i in 0..3 {
            prop_assert_eq!(es.grad[i], eg.grad[i] + ep.grad[i]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn evolution_is_gauge_equivariant(
        (d, bumps) in field_case(),
        alpha in 0.0..6.3f64,
        dealias in any::<bool>(),
    ) {
        let grid = grid_for(d);
        let spectral = Spectral::new(grid);
        let problem = Problem::new(grid, Exponents::new(1.0, 0.6, 0.5).unwrap(), &damping(), &well(0.4)).unwrap();
        let mut stepper = Stepper::new(spectral, &problem, 0.01, dealias).unwrap();
        let u = smooth_field(grid, &bumps);
        let rot = Complex64::from_polar(1.0, alpha);
        let mut plain = SimState { step: 0, t: 0.0, u: u.clone() };
        let mut turned = SimState { step: 0, t: 0.0, u: u.scale(rot) };
        for _ in 0..10 {
            stepper.step(&mut plain, &problem).unwrap();
            stepper.step(&mut turned, &problem).unwrap();
        }
        let expected = plain.u.scale(rot);
        prop_assert!(max_diff(&turned.u, &expected) <= 1e-12 * expected.max_modulus().max(1.0));
    }

    #[test]
    fn mass_decreases_and_accumulators_grow((d, bumps) in field_case(), depth in 0.0..0.8f64) {
        let grid = grid_for(d);
        let problem = Problem::new(grid, Exponents::new(1.0, 0.8, 0.4).unwrap(), &damping(), &well(depth)).unwrap();
        let mut opts = EvolveOptions::new(0.01, 0.2);
        opts.cadence = 2;
        let diag = Diagnostics::new(Spectral::new(grid), 0.0, 1.0, false);
        let series = evolve(&problem, smooth_field(grid, &bumps), &opts, diag, |_, _| Ok(())).unwrap();
        let m0 = series.initial().record.mass;
        for cp in &series.checkpoints {
            prop_assert!(cp.record.mass <= m0 * (1.0 + 1e-8));
        }
        for w in series.checkpoints.windows(2) {
            let (p, c) = (&w[0].accumulators, &w[1].accumulators);
            prop_assert!(c.diss_mass >= p.diss_mass);
            prop_assert!(c.led >= p.led);
            prop_assert!(c.a_int >= p.a_int);
            prop_assert!(c.l4 >= p.l4);
            prop_assert!(c.l2s2 >= p.l2s2);
        }
    }
}
