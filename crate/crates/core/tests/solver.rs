use infochoice::costs::{DivergenceSpec, QuadraticKernel};
use infochoice::inverse::{certify, Verdict};
use infochoice::revealed::kappa;
use infochoice::solver::{self, grid_oracle, solve, solve_mi, solve_ps, value_convexity_probe, Init, SolveMethod, SolveOptions};
use infochoice::{CostSpec, Error, Menu, Prior, PsiSpec};
use proptest::prelude::*;

const E: f64 = std::f64::consts::E;

fn binary() -> Prior {
    Prior::uniform(2).unwrap()
}

fn sym2() -> Menu {
    Menu::from_utilities(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
}

#[test]
fn constant_utility_stays_uninformative_with_uniform_marginals() {
    let prior = Prior::from_weights(vec![0.2, 0.3, 0.5]).unwrap();
    let menu = Menu::from_utilities(vec![vec![1.0; 3]; 3]).unwrap();
    let sol = solve_mi(&menu, &prior, 1.0, &SolveOptions::default()).unwrap();
    for row in sol.scr.probs() {
        assert!(row.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-12));
    }
    assert!((sol.value - 1.0).abs() < 1e-12);
}

#[test]
fn sym2_logit_fixed_point() {
    let prior = binary();
    let sol = solve_mi(&sym2(), &prior, 1.0, &SolveOptions::default()).unwrap();
    let q = E / (1.0 + E);
    assert!((sol.scr.probs()[1][0] - q).abs() < 1e-10);
    assert!((sol.scr.probs()[1][1] - (1.0 - q)).abs() < 1e-10);
    assert!((sol.scr.marginals(&prior)[1] - 0.5).abs() < 1e-10);
    assert_eq!(sol.method, SolveMethod::BlahutArimoto);
}

#[test]
fn dominant_action_corner() {
    let prior = binary();
    let menu = Menu::from_utilities(vec![vec![0.0, 0.0], vec![2.0, 2.0]]).unwrap();
    let spec = CostSpec::mutual_information(&prior, 1.0).unwrap();
    let sol = solve_mi(&menu, &prior, 1.0, &SolveOptions::default()).unwrap();
    assert_eq!(sol.scr.probs()[1], vec![1.0, 1.0]);
    assert_eq!(kappa(&spec, &sol.scr, &prior).unwrap(), 0.0);
    // Entry value of action 0: ln E[e^{u_0 − u_1}] = −2.
    let cert = certify(&sol.scr, &menu, &prior, &spec, 1e-8).unwrap();
    assert_eq!(cert.verdict, Verdict::Optimal);
    let entry = cert.entry[0].expect("entry test for the unused action");
    assert!((entry + 2.0).abs() < 1e-9, "entry {entry}");
}

#[test]
fn kl_posterior_separable_matches_mutual_information() {
    let prior = binary();
    let mi = solve_mi(&sym2(), &prior, 1.0, &SolveOptions::default()).unwrap();
    let ps_spec = CostSpec::posterior_separable(&prior, DivergenceSpec::Kl).unwrap();
    let ps = solve_ps(&sym2(), &prior, &ps_spec, &SolveOptions::default()).unwrap();
    assert!(ps.scr.max_abs_diff(&mi.scr) < 1e-8);
    let identity = CostSpec::transformed(&prior, DivergenceSpec::Kl, PsiSpec::Affine { a: 1.0, b: 0.0 }).unwrap();
    let t = solve(&sym2(), &prior, &identity, &SolveOptions::default()).unwrap();
    assert!(t.scr.max_abs_diff(&ps.scr) < 1e-8);
}

#[test]
fn chi_square_sym2_closed_form() {
    // s_1 = (q, 1−q): EU = q and κ = 4(q − ½)², so q = 5/8.
    let prior = binary();
    let spec = CostSpec::posterior_separable(&prior, DivergenceSpec::ChiSquare).unwrap();
    let sol = solve(&sym2(), &prior, &spec, &SolveOptions::default()).unwrap();
    assert!((sol.scr.probs()[1][0] - 0.625).abs() < 1e-8, "{:?}", sol.scr.probs());
    assert!((sol.value - (0.625 - 4.0 * 0.125 * 0.125)).abs() < 1e-8);
    assert!(sol.scr.has_full_support());
    let cert = certify(&sol.scr, &sym2(), &prior, &spec, 1e-8).unwrap();
    assert_eq!(cert.verdict, Verdict::Optimal);
}

#[test]
fn chi_square_corner_solution() {
    // Cheap information relative to stakes: χ² optima reach the boundary.
    let prior = Prior::from_weights(vec![0.3, 0.7]).unwrap();
    let menu = Menu::from_utilities(vec![vec![0.0, 5.0], vec![5.0, 0.0]]).unwrap();
    let spec = CostSpec::posterior_separable(&prior, DivergenceSpec::ChiSquare).unwrap();
    let sol = solve(&menu, &prior, &spec, &SolveOptions::default()).unwrap();
    assert!(sol.scr.probs().iter().flatten().any(|&x| x == 0.0), "{:?}", sol.scr.probs());
    let cert = certify(&sol.scr, &menu, &prior, &spec, 1e-8).unwrap();
    assert_eq!(cert.verdict, Verdict::Optimal);
    let grid = grid_oracle(&menu, &prior, &spec, Some(400)).unwrap();
    assert!((grid.value - sol.value).abs() < 5.0 * 5.0 / 399.0);
    assert!(grid.value <= sol.value + 1e-9);
}

#[test]
fn transformed_power_cost_fixed_point() {
    let prior = Prior::from_weights(vec![0.3, 0.3, 0.4]).unwrap();
    let menu = Menu::from_utilities(vec![vec![1.0, 0.0, 0.2], vec![0.0, 1.0, 0.3], vec![0.4, 0.4, 0.6]]).unwrap();
    let psi = PsiSpec::Power { exponent: 2.0 };
    let spec = CostSpec::transformed(&prior, DivergenceSpec::Kl, psi).unwrap();
    let sol = solve(&menu, &prior, &spec, &SolveOptions::default()).unwrap();
    let inner = CostSpec::posterior_separable(&prior, DivergenceSpec::Kl).unwrap();
    let c_inner = kappa(&inner, &sol.scr, &prior).unwrap();
    assert!((sol.derivative_weight - 2.0 * c_inner).abs() < 1e-9);
    let cert = certify(&sol.scr, &menu, &prior, &spec, 1e-8).unwrap();
    assert_eq!(cert.verdict, Verdict::Optimal, "{:?}", cert);
    assert!((sol.value - (menu.expected_utility(&prior, &sol.scr).unwrap() - c_inner * c_inner)).abs() < 1e-12);
}

#[test]
fn grid_oracle_examples() {
    let prior = binary();
    let spec = CostSpec::mutual_information(&prior, 1.0).unwrap();
    let sol = solve_mi(&sym2(), &prior, 1.0, &SolveOptions::default()).unwrap();
    let g = grid_oracle(&sym2(), &prior, &spec, Some(400)).unwrap();
    assert!((g.value - sol.value).abs() < 1e-3);

    let zero = Menu::from_utilities(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
    let g = grid_oracle(&zero, &prior, &spec, None).unwrap();
    assert!(g.value.abs() < 1e-12);
    assert_eq!(g.beliefs.len(), 1);
    assert!((g.beliefs[0].weights()[0] - 0.5).abs() < 1e-12);

    let dominant = Menu::from_utilities(vec![vec![0.0, 0.0], vec![2.0, 2.0]]).unwrap();
    let g = grid_oracle(&dominant, &prior, &spec, None).unwrap();
    assert!((g.value - 2.0).abs() < 1e-12);
    assert_eq!(g.scr.probs()[1], vec![1.0, 1.0]);
}

#[test]
fn grid_oracle_limits() {
    let prior = Prior::uniform(4).unwrap();
    let spec = CostSpec::mutual_information(&prior, 1.0).unwrap();
    let menu = Menu::from_utilities(vec![vec![0.0; 4]]).unwrap();
    assert!(matches!(grid_oracle(&menu, &prior, &spec, None), Err(Error::Unsupported(_))));
}

#[test]
fn value_convexity_examples() {
    let prior = Prior::from_weights(vec![0.3, 0.7]).unwrap();
    let spec = CostSpec::mutual_information(&prior, 1.0).unwrap();
    let u = Menu::from_utilities(vec![vec![1.0, 0.0], vec![0.0, 1.5]]).unwrap();
    let v = Menu::from_utilities(vec![vec![0.2, 2.0], vec![1.0, 0.1]]).unwrap();
    let opts = SolveOptions::default();
    let same = value_convexity_probe(&u, &u, &prior, &spec, 10, 1, &opts).unwrap();
    assert_eq!(same.violations, 0);
    assert!(same.max_excess.abs() < 1e-9);
    let report = value_convexity_probe(&u, &v, &prior, &spec, 100, 2, &opts).unwrap();
    assert_eq!(report.violations, 0, "{report:?}");

    let lambda = [0.4, -1.3];
    let shifted = u
        .with_utilities(u.utilities().iter().map(|r| r.iter().zip(&lambda).map(|(x, l)| x + l).collect()).collect())
        .unwrap();
    let base = solve(&u, &prior, &spec, &opts).unwrap();
    let moved = solve(&shifted, &prior, &spec, &opts).unwrap();
    let mean_shift = 0.3 * lambda[0] + 0.7 * lambda[1];
    assert!((moved.value - base.value - mean_shift).abs() < 1e-10);
}

#[test]
fn huge_scale_is_uninformative() {
    let prior = Prior::from_weights(vec![0.2, 0.3, 0.5]).unwrap();
    let menu = Menu::from_utilities(vec![vec![1.0, 0.0, 0.3], vec![0.0, 1.0, 0.2], vec![0.5, 0.5, 0.6]]).unwrap();
    let sol = solve_mi(&menu, &prior, 1e6, &SolveOptions::default()).unwrap();
    // E[u] = (0.35, 0.4, 0.55): the third action, chosen in every state.
    assert_eq!(sol.scr.probs()[2], vec![1.0, 1.0, 1.0]);
}

#[test]
fn iteration_budget_is_enforced() {
    let prior = binary();
    let mut opts = SolveOptions::default();
    opts.max_iter = 2;
    let menu = Menu::from_utilities(vec![vec![0.0, 1.0], vec![1.0, 0.2]]).unwrap();
    assert!(matches!(solve_mi(&menu, &prior, 1.0, &opts), Err(Error::NonConvergence { .. })));
}

#[test]
fn non_smooth_costs_are_not_solved() {
    let prior = binary();
    let max = CostSpec::max_over_set(&prior, vec![DivergenceSpec::Kl, DivergenceSpec::ChiSquare]).unwrap();
    assert!(matches!(solve(&sym2(), &prior, &max, &SolveOptions::default()), Err(Error::Unsupported(_))));
    let kernel = QuadraticKernel::new(|a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum());
    let quad = CostSpec::quadratic(&prior, kernel, true).unwrap();
    assert!(matches!(solve(&sym2(), &prior, &quad, &SolveOptions::default()), Err(Error::Unsupported(_))));
}

fn utility_rows(n_actions: usize, n_states: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0f64..3.0, n_states), n_actions)
}

fn interior(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1f64..1.0, n).prop_map(|v| {
        let t: f64 = v.iter().sum();
        v.into_iter().map(|x| x / t).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn blahut_arimoto_trace_is_monotone(m0 in interior(3), u in utility_rows(3, 3), seed in any::<u64>()) {
        let prior = Prior::from_weights(m0).unwrap();
        let menu = Menu::from_utilities(u).unwrap();
        let mut opts = SolveOptions::default().with_init(Init::Random { seed });
        opts.record_trace = true;
        let sol = solve_mi(&menu, &prior, 1.0, &opts).unwrap();
        for w in sol.trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12, "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn fixed_point_is_consistent(m0 in interior(3), u in utility_rows(3, 3)) {
        // Recompute the logit rule at the returned marginals.
        let prior = Prior::from_weights(m0.clone()).unwrap();
        let menu = Menu::from_utilities(u.clone()).unwrap();
        let sol = solve_mi(&menu, &prior, 1.0, &SolveOptions::default()).unwrap();
        let p = sol.scr.marginals(&prior);
        for ω in 0..3 {
            let z: f64 = (0..3).map(|b| p[b] * u[b][ω].exp()).sum();
            for a in 0..3 {
                prop_assert!((sol.scr.probs()[a][ω] - p[a] * u[a][ω].exp() / z).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn shifting_by_state_constants_changes_nothing(
        m0 in interior(3),
        u in utility_rows(3, 3),
        lambda in prop::collection::vec(-2.0f64..2.0, 3),
        chi in any::<bool>(),
    ) {
        let prior = Prior::from_weights(m0.clone()).unwrap();
        let spec = if chi {
            CostSpec::posterior_separable(&prior, DivergenceSpec::ChiSquare).unwrap()
        } else {
            CostSpec::mutual_information(&prior, 1.0).unwrap()
        };
        let menu = Menu::from_utilities(u.clone()).unwrap();
        let shifted = Menu::from_utilities(
            u.iter().map(|r| r.iter().zip(&lambda).map(|(x, l)| x + l).collect()).collect(),
        )
        .unwrap();
        let a = solve(&menu, &prior, &spec, &SolveOptions::default()).unwrap();
        let b = solve(&shifted, &prior, &spec, &SolveOptions::default()).unwrap();
        prop_assert!(a.scr.max_abs_diff(&b.scr) < 1e-8);
        let mean: f64 = lambda.iter().zip(&m0).map(|(l, w)| l * w).sum();
        prop_assert!((b.value - a.value - mean).abs() < 1e-9);
    }

    #[test]
    fn solver_beats_the_grid_oracle(m0 in interior(2), u in utility_rows(3, 2), chi in any::<bool>()) {
        let prior = Prior::from_weights(m0).unwrap();
        let spec = if chi {
            CostSpec::posterior_separable(&prior, DivergenceSpec::ChiSquare).unwrap()
        } else {
            CostSpec::mutual_information(&prior, 1.0).unwrap()
        };
        let menu = Menu::from_utilities(u.clone()).unwrap();
        let sol = solve(&menu, &prior, &spec, &SolveOptions::default()).unwrap();
        let grid = grid_oracle(&menu, &prior, &spec, Some(400)).unwrap();
        let flat = u.iter().flatten();
        let range = flat.clone().copied().fold(f64::NEG_INFINITY, f64::max) - flat.copied().fold(f64::INFINITY, f64::min);
        prop_assert!(grid.value <= sol.value + 1e-9);
        prop_assert!(sol.value - grid.value <= 5.0 * range / 399.0 + 1e-12);
    }

    #[test]
    fn random_starts_agree(m0 in interior(3), u in utility_rows(2, 3), seed in any::<u64>()) {
        let prior = Prior::from_weights(m0).unwrap();
        let menu = Menu::from_utilities(u).unwrap();
        let a = solve_mi(&menu, &prior, 1.0, &SolveOptions::default()).unwrap();
        let b = solve_mi(&menu, &prior, 1.0, &SolveOptions::default().with_init(Init::Random { seed })).unwrap();
        prop_assert!(a.scr.max_abs_diff(&b.scr) < 1e-6);
    }

    #[test]
    fn value_is_convex_in_utilities(m0 in interior(2), u in utility_rows(2, 2), v in utility_rows(2, 2), seed in any::<u64>()) {
        let prior = Prior::from_weights(m0).unwrap();
        let spec = CostSpec::mutual_information(&prior, 1.0).unwrap();
        let (mu, mv) = (Menu::from_utilities(u).unwrap(), Menu::from_utilities(v).unwrap());
        let report = value_convexity_probe(&mu, &mv, &prior, &spec, 5, seed, &SolveOptions::default()).unwrap();
        prop_assert_eq!(report.violations, 0);
    }
}

#[test]
fn probe_is_reproducible() {
    let prior = Prior::uniform(3).unwrap();
    let spec = CostSpec::mutual_information(&prior, 1.0).unwrap();
    let a = solver::uniqueness_probe(&prior, &spec, 3, 5, 3, 42, &SolveOptions::default()).unwrap();
    let b = solver::uniqueness_probe(&prior, &spec, 3, 5, 3, 42, &SolveOptions::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.failures, 0);
}
