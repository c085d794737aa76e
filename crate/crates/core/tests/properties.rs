use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tnl_core::closed_form::characteristic_coefficients;
use tnl_core::hamiltonian::generalized_hamiltonian;
use tnl_core::lagrangian::{action, action_smooth, SmoothQuadrature};
use tnl_core::oracle::solve_integro;
use tnl_core::published::appendix_solution;
use tnl_core::report::{random_general_lagrangian, SmoothPath};
use tnl_core::variational::{el_residual_analytic, oscillator_residual};
use tnl_core::{
    solve_closed_form, BoundaryData, Grid, KernelArgumentOrder, MemoryKernel, OscillatorParams, Path, PhasePath,
    QuadratureRule, SolverMethod, ToReduced,
};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 32,
        ..ProptestConfig::default()
    }
}

fn params() -> impl Strategy<Value = OscillatorParams> {
    (0.5..3.0f64, 0.1..5.0f64, 0.1..5.0f64, 0.3..3.0f64)
        .prop_map(|(m, k, kt, g)| OscillatorParams::new(m, k, kt, g).unwrap())
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn trapezoid_is_exact_on_lines(a in -5.0..5.0f64, b in -5.0..5.0f64, t in 0.1..10.0f64, n in 3usize..60) {
        let g = Grid::uniform(t, n).unwrap();
        let y: Vec<f64> = g.nodes().iter().map(|s| a + b * s).collect();
        let exact = a * t + b * t * t / 2.0;
        let got = QuadratureRule::Trapezoid.integrate(&g, &y).unwrap();
        prop_assert!((got - exact).abs() <= 1e-12 * (1.0 + exact.abs()));
    }

    #[test]
    fn simpson_is_exact_on_cubics(c in prop::array::uniform4(-3.0..3.0f64), t in 0.1..5.0f64, half in 1usize..40) {
        let g = Grid::uniform(t, 2 * half + 1).unwrap();
        let y: Vec<f64> = g.nodes().iter().map(|s| c[0] + s * (c[1] + s * (c[2] + s * c[3]))).collect();
        let exact = t * (c[0] + t * (c[1] / 2.0 + t * (c[2] / 3.0 + t * c[3] / 4.0)));
        let got = QuadratureRule::Simpson.integrate(&g, &y).unwrap();
        prop_assert!((got - exact).abs() <= 1e-11 * (1.0 + exact.abs()));
    }

    #[test]
    fn exponential_kernel_is_symmetric(gamma in 0.01..50.0f64, t in 0.0..10.0f64, s in 0.0..10.0f64) {
        let k = MemoryKernel::exponential(gamma).unwrap();
        prop_assert_eq!(k.eval(t, s).unwrap(), k.eval(s, t).unwrap());
    }

    #[test]
    fn reduction_preserves_the_action(seed in any::<u64>(), t in 0.5..4.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let form = random_general_lagrangian(&mut rng);
        let path = SmoothPath::random(&mut rng, t);
        let reduced = form.to_reduced(t).unwrap();
        let (q, v) = (|s| path.value(s), |s| path.derivative(s));
        let quad = SmoothQuadrature::default();
        let a = action_smooth(&form, q, v, t, quad).unwrap();
        let b = action_smooth(&reduced, q, v, t, quad).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(b.abs()).max(1e-300), "{} {}", a, b);
    }

    #[test]
    fn action_is_quadratic_without_linear_terms(seed in any::<u64>(), lambda in -3.0..3.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut form = random_general_lagrangian(&mut rng);
        form.c = 0.0;
        form.d = 0.0;
        let g = Grid::uniform(2.0, 101).unwrap();
        let path = SmoothPath::random(&mut rng, 2.0).sample(g).unwrap();
        let scaled = Path::new(g, path.positions().iter().map(|x| lambda * x).collect()).unwrap();
        let s1 = action(&form, &path, QuadratureRule::Trapezoid).unwrap();
        let s2 = action(&form, &scaled, QuadratureRule::Trapezoid).unwrap();
        prop_assert!((s2 - lambda * lambda * s1).abs() <= 1e-12 * (1.0 + s1.abs() * lambda * lambda));
    }

    #[test]
    fn hamiltonian_is_quadratic_without_linear_terms(seed in any::<u64>(), lambda in -3.0..3.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut form = random_general_lagrangian(&mut rng);
        form.c = 0.0;
        form.d = 0.0;
        let g = Grid::uniform(2.0, 81).unwrap();
        let q = SmoothPath::random(&mut rng, 2.0).sample(g).unwrap().into_positions();
        let p = SmoothPath::random(&mut rng, 2.0).sample(g).unwrap().into_positions();
        let scale = |x: &[f64]| x.iter().map(|v| lambda * v).collect::<Vec<_>>();
        let h1 = generalized_hamiltonian(&form, &PhasePath::new(g, q.clone(), p.clone()).unwrap(), QuadratureRule::Trapezoid).unwrap();
        let h2 = generalized_hamiltonian(&form, &PhasePath::new(g, scale(&q), scale(&p)).unwrap(), QuadratureRule::Trapezoid).unwrap();
        prop_assert!((h2 - lambda * lambda * h1).abs() <= 1e-12 * (1.0 + h1.abs() * lambda * lambda));
    }

    #[test]
    fn argument_order_is_irrelevant_for_symmetric_kernels(p in params(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Grid::uniform(3.0, 61).unwrap();
        let path = SmoothPath::random(&mut rng, 3.0).sample(g).unwrap();
        let spec = p.to_reduced(3.0).unwrap();
        let a = el_residual_analytic(&spec, &path, KernelArgumentOrder::IntegrationTimeFirst).unwrap();
        let b = el_residual_analytic(&spec, &path, KernelArgumentOrder::EvaluationTimeFirst).unwrap();
        prop_assert_eq!(a.r, b.r);
    }

    #[test]
    fn closed_form_solves_the_fourth_order_equation(p in params(), q0 in -2.0..2.0f64, v0 in -2.0..2.0f64, u in 0.0..1.0f64) {
        let t = 5.0;
        let sol = solve_closed_form(&p, q0, v0, t).unwrap();
        let cc = characteristic_coefficients(&p).unwrap();
        let s = u * t;
        let d = sol.derivatives(s).unwrap();
        let q4 = sol.eval(s, 4).unwrap();
        let scale = q4.abs() + (cc.c2 * d[2]).abs() + (cc.c0 * d[0]).abs();
        let r = q4 - cc.c2 * d[2] + cc.c0 * d[0];
        prop_assert!(r.abs() <= 1e-8 * scale.max(1e-300), "{} vs {}", r, scale);
    }

    #[test]
    fn closed_form_is_linear_in_initial_data(
        p in params(),
        a in -2.0..2.0f64, b in -2.0..2.0f64,
        x in prop::array::uniform4(-1.0..1.0f64),
        u in 0.0..1.0f64,
    ) {
        let t = 4.0;
        let s = u * t;
        let one = solve_closed_form(&p, x[0], x[1], t).unwrap().eval(s, 0).unwrap();
        let two = solve_closed_form(&p, x[2], x[3], t).unwrap().eval(s, 0).unwrap();
        let both = solve_closed_form(&p, a * x[0] + b * x[2], a * x[1] + b * x[3], t).unwrap().eval(s, 0).unwrap();
        prop_assert!((both - a * one - b * two).abs() <= 1e-9 * (1.0 + (a * one).abs() + (b * two).abs()));
    }

    #[test]
    fn oscillating_root_tends_to_the_local_frequency(m in 0.5..3.0f64, k in 0.0..5.0f64, kt in 0.1..5.0f64) {
        let p = OscillatorParams::new(m, k, kt, 1.0).unwrap();
        let w = p.local_frequency();
        let far = p.with_gamma(1e3 * w).unwrap();
        let x2 = solve_closed_form(&far, 0.0, 1.0, 1.0).unwrap().roots[1];
        prop_assert!(x2.re.abs() < 1e-12 * x2.norm());
        prop_assert!((x2.norm() - w).abs() <= 1e-2 * w);
    }

    #[test]
    fn printed_solution_starts_at_q0(p in params(), q0 in -2.0..2.0f64, v0 in -2.0..2.0f64) {
        let sol = appendix_solution(&p, q0, v0, 3.0).unwrap();
        let z = sol.eval_complex(0.0, 0).unwrap();
        prop_assert!((z.re - q0).abs() <= 1e-9 * (1.0 + q0.abs()), "{}", z);
    }

    #[test]
    fn oracle_paths_solve_their_own_discretization(p in params(), q0 in -1.0..1.0f64, v0 in -1.0..1.0f64) {
        let b = BoundaryData::Initial { q0, v0 };
        for method in [SolverMethod::Dense, SolverMethod::Banded] {
            let sol = solve_integro(&p, &p.exponential_kernel(), b, 4.0, 201, method).unwrap();
            let r = oscillator_residual(&p, &sol.path).unwrap();
            let scale = p.k.max(p.k_tilde).max(p.m / (0.02f64).powi(2)) * sol.path.max_abs().max(1e-300);
            prop_assert!(r.norm_inf <= 1e-10 * scale, "{:?}: {} vs {}", method, r.norm_inf, scale);
        }
    }
}

#[test]
fn oracle_is_deterministic() {
    let p = OscillatorParams::new(1.0, 1.0, 2.0, 1.0).unwrap();
    let b = BoundaryData::Initial { q0: 0.3, v0: 1.0 };
    for method in [SolverMethod::Dense, SolverMethod::Banded] {
        let a = solve_integro(&p, &p.exponential_kernel(), b, 5.0, 301, method).unwrap();
        let c = solve_integro(&p, &p.exponential_kernel(), b, 5.0, 301, method).unwrap();
        assert_eq!(a.path.positions(), c.path.positions());
    }
}

#[test]
fn sweep_shares_initial_data_and_settles_at_the_root() {
    let p = OscillatorParams::new(1.0, 1.0, 1e6, 1.0).unwrap();
    let entries = tnl_core::analysis::gamma_sweep(&p, &[0.1, 0.3, 0.7, 1.0], 0.2, 1.0, 2.0, 20001).unwrap();
    for e in entries {
        let path = e.path.as_ref().unwrap();
        assert!((path.positions()[0] - 0.2).abs() <= 1e-10);
        let st = &e.stages;
        assert!(st.stabilized, "{st:?}");
        let rel = (st.longtime_period.unwrap() / st.root_period.unwrap() - 1.0).abs();
        assert!(rel <= 5e-3, "gamma {}: {rel}", e.gamma);
    }
}
