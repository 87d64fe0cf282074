use infochoice::costs::DivergenceSpec;
use infochoice::inverse::{certify, find_equivalent, rationalize, recover_utility, unique_check, Verdict, INADA_MESSAGE};
use infochoice::revealed::{kappa, reveal};
use infochoice::solver::{grid_oracle, solve, solve_mi, SolveOptions};
use infochoice::{CostSpec, Error, Menu, Prior, Scr};
use proptest::prelude::*;

const E: f64 = std::f64::consts::E;

fn binary() -> Prior {
    Prior::uniform(2).unwrap()
}

fn sym2() -> Menu {
    Menu::from_utilities(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
}

fn sym2_solution() -> Scr {
    let q = E / (1.0 + E);
    Scr::new(vec![vec![1.0 - q, q], vec![q, 1.0 - q]]).unwrap()
}

fn value(menu: &Menu, prior: &Prior, spec: &CostSpec, scr: &Scr) -> f64 {
    menu.expected_utility(prior, scr).unwrap() - kappa(spec, scr, prior).unwrap()
}

/// Rank of a small dense matrix by Gaussian elimination with partial pivoting.
fn rank(mut m: Vec<Vec<f64>>, tol: f64) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(pivot) = (r..m.len()).max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap()) else {
            break;
        };
        if m[pivot][c].abs() <= tol {
            continue;
        }
        m.swap(r, pivot);
        for i in (r + 1)..m.len() {
            let f = m[i][c] / m[r][c];
            for k in c..cols {
                m[i][k] -= f * m[r][k];
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

#[test]
fn sym2_solution_certifies() {
    let prior = binary();
    let spec = CostSpec::mutual_information(&prior, 1.0).unwrap();
    let cert = certify(&sym2_solution(), &sym2(), &prior, &spec, 1e-8).unwrap();
    assert_eq!(cert.verdict, Verdict::Optimal);
    assert!(cert.residual < 1e-8);
    assert!(cert.gamma.iter().flatten().all(|g| g.abs() < 1e-12));
}

#[test]
fn perturbed_sym2_is_refuted() {
    let prior = binary();
    let spec = CostSpec::mutual_information(&prior, 1.0).unwrap();
    let mut probs = sym2_solution().into_probs();
    probs[1][0] += 0.05;
    probs[0][0] -= 0.05;
    let cert = certify(&Scr::new(probs).unwrap(), &sym2(), &prior, &spec, 1e-8).unwrap();
    assert_eq!(cert.verdict, Verdict::NotOptimal);
    assert!(cert.residual > 1e-3);
}

#[test]
fn dominant_corner_certifies_through_entry() {
    let prior = binary();
    let spec = CostSpec::mutual_information(&prior, 1.0).unwrap();
    let menu = Menu::from_utilities(vec![vec![0.0, 0.0], vec![2.0, 2.0]]).unwrap();
    let scr = Scr::new(vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
    let cert = certify(&scr, &menu, &prior, &spec, 1e-8).unwrap();
    assert_eq!(cert.verdict, Verdict::Optimal);
    // max_μ [(u_0 − λ)·μ − K(μ)] = ln E[e^{−2}] = −2.
    assert!((cert.entry[0].unwrap() + 2.0).abs() < 1e-12);
    assert!(cert.entry[1].is_none());
}

#[test]
fn kl_boundary_posteriors_are_inconclusive() {
    let prior = binary();
    let spec = CostSpec::mutual_information(&prior, 1.0).unwrap();
    let scr = Scr::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let cert = certify(&scr, &sym2(), &prior, &spec, 1e-8).unwrap();
    assert_eq!(cert.verdict, Verdict::Inconclusive);
    assert!(cert.reason.unwrap().contains("d_p^+ C(δ_{μ0}) = −∞"));
}

#[test]
fn recovered_sym2_utility() {
    let prior = binary();
    let spec = CostSpec::mutual_information(&prior, 1.0).unwrap();
    let rec = recover_utility(&sym2_solution(), &prior, &spec).unwrap();
    let q = E / (1.0 + E);
    assert!((rec.base[1][0] - (2.0 * q).ln()).abs() < 1e-12);
    assert!((rec.base[1][1] - (2.0 * (1.0 - q)).ln()).abs() < 1e-12);
    assert!((rec.base[1][0] - 1.462117f64.ln()).abs() < 1e-6);
    let u = sym2();
    for ω in 0..2 {
        let d1 = u.utilities()[1][ω] - rec.base[1][ω];
        let d0 = u.utilities()[0][ω] - rec.base[0][ω];
        assert!((d1 - d0).abs() < 1e-12);
        assert!((d1 - 0.620115).abs() < 1e-6);
    }
    assert!(rec.nuisance_spread(u.utilities()) < 1e-12);
}

#[test]
fn uninformative_scr_recovers_zero() {
    let prior = Prior::from_weights(vec![0.2, 0.8]).unwrap();
    let spec = CostSpec::mutual_information(&prior, 1.0).unwrap();
    let scr = Scr::new(vec![vec![0.4, 0.4], vec![0.6, 0.6]]).unwrap();
    let rec = recover_utility(&scr, &prior, &spec).unwrap();
    assert!(rec.base.iter().flatten().all(|x| x.abs() < 1e-15));
    let menu = rationalize(&scr, &prior, &spec).unwrap();
    assert!(menu.utilities().iter().flatten().all(|x| x.abs() < 1e-15));
}

#[test]
fn recovery_needs_conditionally_full_support() {
    let prior = binary();
    let spec = CostSpec::posterior_separable(&prior, DivergenceSpec::ChiSquare).unwrap();
    let scr = Scr::new(vec![vec![1.0, 0.2], vec![0.0, 0.8]]).unwrap();
    assert!(matches!(recover_utility(&scr, &prior, &spec), Err(Error::Precondition(_))));
}

#[test]
fn unique_check_examples() {
    let prior = binary();
    let split = Scr::new(vec![vec![0.75, 0.25], vec![0.25, 0.75]]).unwrap();
    let r = unique_check(&split, &prior).unwrap();
    assert!(r.unique_capable);
    assert_eq!(r.rank, 2);
    let flat = Scr::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
    assert!(!unique_check(&flat, &prior).unwrap().unique_capable);
    let wide = Scr::new(vec![vec![0.6, 0.1], vec![0.3, 0.3], vec![0.1, 0.6]]).unwrap();
    let r = unique_check(&wide, &prior).unwrap();
    assert!(!r.unique_capable);
    assert!(r.rank <= 2);
}

#[test]
fn find_equivalent_on_uninformative_family() {
    let prior = binary();
    let spec = CostSpec::mutual_information(&prior, 1.0).unwrap();
    let menu = Menu::from_utilities(vec![vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
    let scr = Scr::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
    let alt = find_equivalent(&scr, &menu, &prior, &spec).unwrap().expect("a second optimum");
    assert!(alt.scr.max_abs_diff(&scr) > 1e-3);
    let (v0, v1) = (value(&menu, &prior, &spec, &scr), value(&menu, &prior, &spec, &alt.scr));
    assert!((v0 - v1).abs() < 1e-12);
    assert!(alt.value_gap.abs() < 1e-12);
}

#[test]
fn find_equivalent_respects_uniqueness() {
    let prior = binary();
    let spec = CostSpec::mutual_information(&prior, 1.0).unwrap();
    assert!(find_equivalent(&sym2_solution(), &sym2(), &prior, &spec).unwrap().is_none());
}

#[test]
fn find_equivalent_splits_collinear_posteriors() {
    let prior = Prior::from_weights(vec![0.4, 0.6]).unwrap();
    let spec = CostSpec::posterior_separable(&prior, DivergenceSpec::ChiSquare).unwrap();
    let scr = Scr::new(vec![vec![0.6, 0.1], vec![0.3, 0.3], vec![0.1, 0.6]]).unwrap();
    let menu = rationalize(&scr, &prior, &spec).unwrap();
    assert_eq!(certify(&scr, &menu, &prior, &spec, 1e-8).unwrap().verdict, Verdict::Optimal);
    let alt = find_equivalent(&scr, &menu, &prior, &spec).unwrap().expect("a second optimum");
    assert!(alt.scr.max_abs_diff(&scr) > 1e-3);
    assert!((value(&menu, &prior, &spec, &scr) - value(&menu, &prior, &spec, &alt.scr)).abs() < 1e-10);
    assert_eq!(certify(&alt.scr, &menu, &prior, &spec, 1e-8).unwrap().verdict, Verdict::Optimal);
}

#[test]
fn find_equivalent_requires_an_optimum() {
    let prior = binary();
    let spec = CostSpec::mutual_information(&prior, 1.0).unwrap();
    let scr = Scr::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
    assert!(matches!(find_equivalent(&scr, &sym2(), &prior, &spec), Err(Error::NotOptimal { .. })));
}

#[test]
fn rationalize_rejects_zero_regions_under_mi() {
    let prior = binary();
    let spec = CostSpec::mutual_information(&prior, 1.0).unwrap();
    let scr = Scr::new(vec![vec![1.0, 0.3], vec![0.0, 0.7]]).unwrap();
    let err = rationalize(&scr, &prior, &spec).unwrap_err();
    assert!(matches!(err, Error::NotRationalizable(_)));
    assert!(err.to_string().contains(INADA_MESSAGE));
}

#[test]
fn rationalize_handles_unused_actions() {
    let prior = Prior::from_weights(vec![0.3, 0.3, 0.4]).unwrap();
    for spec in [
        CostSpec::mutual_information(&prior, 1.0).unwrap(),
        CostSpec::posterior_separable(&prior, DivergenceSpec::ChiSquare).unwrap(),
    ] {
        let scr = Scr::new(vec![vec![0.7, 0.2, 0.1], vec![0.0, 0.0, 0.0], vec![0.3, 0.8, 0.9]]).unwrap();
        let menu = rationalize(&scr, &prior, &spec).unwrap();
        let cert = certify(&scr, &menu, &prior, &spec, 1e-8).unwrap();
        assert_eq!(cert.verdict, Verdict::Optimal, "{cert:?}");
    }
}

fn interior(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(|v| {
        let t: f64 = v.iter().sum();
        v.into_iter().map(|x| x / t).collect()
    })
}

fn scr_strategy(n_actions: usize, n_states: usize) -> impl Strategy<Value = Scr> {
    prop::collection::vec(interior(n_actions), n_states).prop_map(move |cols| {
        Scr::new((0..n_actions).map(|a| cols.iter().map(|c| c[a]).collect()).collect()).unwrap()
    })
}

/// Random SCRs that are sometimes degenerate: a duplicated action, a
/// proportional pair, or an unused action.
fn maybe_degenerate(n_actions: usize, n_states: usize) -> impl Strategy<Value = Scr> {
    (scr_strategy(n_actions, n_states), 0usize..4).prop_map(move |(s, kind)| {
        let mut p = s.into_probs();
        match kind {
            1 if n_actions >= 3 => {
                // Merge a pair's mass and split it evenly: identical rows.
                for ω in 0..n_states {
                    let m = 0.5 * (p[0][ω] + p[1][ω]);
                    p[0][ω] = m;
                    p[1][ω] = m;
                }
            }
            2 => {
                for ω in 0..n_states {
                    p[0][ω] += p[1][ω];
                    p[1][ω] = 0.0;
                }
            }
            3 => {
                // Row 1 becomes a mixture of rows 0 and 2 (up to scale).
                if n_actions >= 3 {
                    for ω in 0..n_states {
                        let t = p[0][ω] + p[1][ω] + p[2][ω];
                        let (a, c) = (p[0][ω], p[2][ω]);
                        let mix = 0.25 * a + 0.25 * c;
                        p[0][ω] = 0.75 * a * t / (a + c);
                        p[2][ω] = 0.75 * c * t / (a + c);
                        p[1][ω] = mix * t / (a + c);
                    }
                }
            }
            _ => {}
        }
        Scr::new(p).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rationalized_utilities_certify(m0 in interior(3), s in scr_strategy(3, 3), chi in any::<bool>()) {
        let prior = Prior::from_weights(m0).unwrap();
        let spec = if chi {
            CostSpec::posterior_separable(&prior, DivergenceSpec::ChiSquare).unwrap()
        } else {
            CostSpec::mutual_information(&prior, 1.0).unwrap()
        };
        let menu = rationalize(&s, &prior, &spec).unwrap();
        let cert = certify(&s, &menu, &prior, &spec, 1e-8).unwrap();
        prop_assert_eq!(cert.verdict, Verdict::Optimal);
    }

    #[test]
    fn rationalizing_utilities_differ_by_state_terms(
        m0 in interior(3),
        s in scr_strategy(3, 3),
        lambda in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let prior = Prior::from_weights(m0).unwrap();
        let spec = CostSpec::mutual_information(&prior, 1.0).unwrap();
        let rec = recover_utility(&s, &prior, &spec).unwrap();
        let shifted: Vec<Vec<f64>> = rec.base.iter().map(|r| r.iter().zip(&lambda).map(|(x, l)| x + l).collect()).collect();
        prop_assert!(rec.nuisance_spread(&shifted) < 1e-12);
        let menu = Menu::from_utilities(shifted).unwrap();
        prop_assert_eq!(certify(&s, &menu, &prior, &spec, 1e-8).unwrap().verdict, Verdict::Optimal);
        // A rationalizing utility built independently: u_a = ln(μ_a/μ0).
        let r = reveal(&s, &prior).unwrap();
        for (a, mu) in r.posteriors().iter().enumerate() {
            for ω in 0..3 {
                let direct = (mu.weights()[ω] / prior.weights()[ω]).ln();
                prop_assert!((rec.base[a][ω] - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_test_matches_affine_independence(
        m0 in interior(3),
        s in (2usize..=4).prop_flat_map(|n| maybe_degenerate(n, 3)),
    ) {
        let prior = Prior::from_weights(m0).unwrap();
        let report = unique_check(&s, &prior).unwrap();
        let r = reveal(&s, &prior).unwrap();
        let expected = r.excluded().is_empty() && {
            let mus = r.posteriors();
            let diffs: Vec<Vec<f64>> = mus[1..]
                .iter()
                .map(|m| m.weights().iter().zip(mus[0].weights()).map(|(x, y)| x - y).collect())
                .collect();
            diffs.is_empty() || rank(diffs, 1e-9) == mus.len() - 1
        };
        prop_assert_eq!(report.unique_capable, expected);
    }

    #[test]
    fn certificates_agree_with_the_grid_oracle(m0 in interior(2), u in prop::collection::vec(prop::collection::vec(0.0f64..2.0, 2), 3), s in scr_strategy(3, 2)) {
        let prior = Prior::from_weights(m0).unwrap();
        let spec = CostSpec::mutual_information(&prior, 1.0).unwrap();
        let menu = Menu::from_utilities(u).unwrap();
        let grid = grid_oracle(&menu, &prior, &spec, Some(400)).unwrap();
        let slack = 5.0 * 2.0 / 399.0;
        let sol = solve_mi(&menu, &prior, 1.0, &SolveOptions::default()).unwrap();
        prop_assert_eq!(certify(&sol.scr, &menu, &prior, &spec, 1e-8).unwrap().verdict, Verdict::Optimal);
        prop_assert!(sol.value >= grid.value - 1e-9);
        // Clearly worse than the oracle ⇒ refuted.
        if value(&menu, &prior, &spec, &s) < grid.value - slack {
            prop_assert_eq!(certify(&s, &menu, &prior, &spec, 1e-8).unwrap().verdict, Verdict::NotOptimal);
        }
    }

    #[test]
    fn certify_after_solve(m0 in interior(3), u in prop::collection::vec(prop::collection::vec(0.0f64..4.0, 3), 2..=4), chi in any::<bool>()) {
        let prior = Prior::from_weights(m0).unwrap();
        let spec = if chi {
            CostSpec::posterior_separable(&prior, DivergenceSpec::ChiSquare).unwrap()
        } else {
            CostSpec::mutual_information(&prior, 1.0).unwrap()
        };
        let menu = Menu::from_utilities(u).unwrap();
        let sol = solve(&menu, &prior, &spec, &SolveOptions::default()).unwrap();
        let cert = certify(&sol.scr, &menu, &prior, &spec, 1e-8).unwrap();
        prop_assert_eq!(cert.verdict, Verdict::Optimal);
        prop_assert!(cert.residual < 1e-8);
    }
}
