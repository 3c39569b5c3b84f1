use fk_core::estimators::{brf, exit_max_sampling_with, BrfParams, StepContext};
use fk_core::geometry::{sample_uniform_interior, Ball, Domain, DEFAULT_REJECTION_BUDGET};
use fk_core::montecarlo::{empirical_cdf, ks_distance, mc_estimate};
use fk_core::problems::{dirichlet_disk, poisson_basis, poisson_disk};
use fk_core::stochastics::{expected_exit_time, levy_fpt_cdf, mills_ratio_bounds};
use fk_core::tdl::{td_error_interior, td_error_terminal, LinearModel};
use fk_core::{EstimatorConfig, Point, RngStream};
use proptest::prelude::*;

fn laplacian(u: &dyn Fn(&[f64]) -> f64, x: f64, y: f64) -> f64 {
    let h = 1e-4;
    (u(&[x + h, y]) + u(&[x - h, y]) + u(&[x, y + h]) + u(&[x, y - h]) - 4.0 * u(&[x, y])) / (h * h)
}

proptest! {
    #[test]
    fn exact_solutions_solve_their_pde(r in 0.0..0.95f64, th in 0.0..std::f64::consts::TAU) {
        let (x, y) = (r * th.cos(), r * th.sin());
        // The Dirichlet solution is singular where the boundary data jumps.
        prop_assume!(((x.abs() - 1.0).powi(2) + y * y).sqrt() > 0.2);
        for p in [poisson_disk(), dirichlet_disk()] {
            let u = p.exact.clone().unwrap();
            prop_assert!((laplacian(&*u, x, y) - (p.forcing)(&[x, y])).abs() < 1e-4);
        }
    }

    #[test]
    fn exact_solutions_meet_boundary_data(th in 0.0..std::f64::consts::TAU) {
        prop_assume!(th.sin().abs() > 1e-3);
        for p in [poisson_disk(), dirichlet_disk()] {
            let b = [th.cos(), th.sin()];
            let inside = [(1.0 - 1e-9) * b[0], (1.0 - 1e-9) * b[1]];
            prop_assert!((p.exact_at(&inside).unwrap() - (p.boundary)(&b)).abs() < 1e-3);
        }
    }

    #[test]
    fn exit_time_mean_within_mills_bounds(a_frac in 0.01..0.99f64, x in 0.01..10.0f64, dt in 1e-3..10.0f64) {
        let a = a_frac * x;
        let e = expected_exit_time(a, x, dt).unwrap();
        let (lo, hi) = mills_ratio_bounds(x, dt);
        let r = e / (a / x * dt);
        prop_assert!(r >= lo - 1e-12 && r <= hi + 1e-12);
        prop_assert!(e > 0.0 && e < dt);
    }

    #[test]
    fn levy_cdf_is_monotone(a in 0.1..3.0f64, t in 1e-3..50.0f64, dt in 1e-3..5.0f64) {
        prop_assert!(levy_fpt_cdf(a, t) <= levy_fpt_cdf(a, t + dt));
        prop_assert!((0.0..=1.0).contains(&levy_fpt_cdf(a, t)));
    }

    #[test]
    fn ks_distance_bounds(samples in prop::collection::vec(0.0..1.0f64, 1..200)) {
        let d = ks_distance(&samples, |x| x.clamp(0.0, 1.0));
        prop_assert!((0.0..=1.0).contains(&d));
        let cdf = empirical_cdf(&samples, &[0.0, 0.25, 0.5, 0.75, 1.0]);
        prop_assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(cdf[4], 1.0);
    }

    #[test]
    fn exit_certain_once_outside(rho_old in -2.0..-1e-6f64, rho_new in 0.0..2.0f64, e in 0.0..20.0f64) {
        let (b0, b1) = ([0.0], [1.0]);
        let ctx = StepContext::new(&b0, &b1, 0.1, rho_old, rho_new);
        prop_assert!(exit_max_sampling_with(&ctx, e).unwrap());
    }

    #[test]
    fn brf_lands_on_boundary(x in -0.9..0.9f64, y in -0.4..0.4f64, step in 0.2..0.6f64, seed in 0u64..1000) {
        let disk = Ball::unit_disk();
        let b_old = [x * 0.9, y];
        prop_assume!(disk.signed_distance(&b_old) < -1e-3);
        let n = (b_old[0] * b_old[0] + b_old[1] * b_old[1]).sqrt().max(1e-3);
        let b_new = [b_old[0] + step * b_old[0] / n + step, b_old[1] + step * b_old[1] / n];
        let ctx = StepContext::from_domain(&disk, &b_old, &b_new, 0.05);
        let mut rng = RngStream::new(seed, 0);
        let out = brf(&ctx, &BrfParams::default(), &disk, &mut rng).unwrap();
        prop_assert!(out.time > 0.0 && out.time <= 0.05);
        prop_assert!(disk.signed_distance(&out.location).abs() < 1e-9);
    }

    #[test]
    fn td_errors_vanish_for_exact_model(seed in 0u64..500) {
        let m = LinearModel::with_coefficients(poisson_basis(), vec![0.0, 0.125, 0.125]).unwrap();
        let disk = Ball::unit_disk();
        let mut rng = RngStream::new(seed, 1);
        let a = sample_uniform_interior(&disk, &mut rng, DEFAULT_REJECTION_BUDGET).unwrap();
        let b = sample_uniform_interior(&disk, &mut rng, DEFAULT_REJECTION_BUDGET).unwrap();
        // With f = 1 the model increment equals half the quadratic-form change.
        let f_est = 2.0 * (m.eval(&b) - m.eval(&a));
        prop_assert!(td_error_interior(&m, &a, &b, f_est).abs() < 1e-14);
        prop_assert!((td_error_terminal(&m, &a, m.eval(&a), 0.0)).abs() < 1e-15);
    }
}

#[test]
fn stderr_scales_as_inverse_sqrt_n() {
    let p = dirichlet_disk();
    let cfg = EstimatorConfig::default();
    let x0 = Point::new(&[0.1, 0.3]);
    let a = mc_estimate(&p, &x0, 2000, 0.05, &cfg, 1).unwrap();
    let b = mc_estimate(&p, &x0, 32000, 0.05, &cfg, 2).unwrap();
    let ratio = a.stderr / b.stderr;
    assert!((ratio / 4.0 - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn estimates_independent_of_thread_count() {
    let p = poisson_disk();
    let cfg = EstimatorConfig::default();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| mc_estimate(&p, &[0.2, -0.3], 40_000, 0.02, &cfg, 5).unwrap())
    };
    assert_eq!(run(1), run(3));
}
