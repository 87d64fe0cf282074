use infochoice_cli::problem::{CostFile, DivergenceName, OptionsFile, PolicyFile, PsiFile};
use infochoice_cli::{Problem, ProblemFile};
use proptest::prelude::*;

fn cost() -> impl Strategy<Value = CostFile> {
    prop_oneof![
        (1e-3f64..1e3).prop_map(|scale| CostFile::MutualInformation { scale }),
        Just(CostFile::PosteriorSeparable { divergence: DivergenceName::ChiSquare }),
        (0.0f64..5.0, -1.0f64..1.0).prop_map(|(a, b)| CostFile::Transformed {
            inner: DivergenceName::Kl,
            psi: PsiFile::Affine { a, b },
        }),
        Just(CostFile::MaxOverSet { divergences: vec![DivergenceName::Kl, DivergenceName::ChiSquare] }),
    ]
}

fn problem() -> impl Strategy<Value = ProblemFile> {
    (
        prop::collection::vec(0.01f64..1.0, 2..5),
        prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 4), 1..4),
        cost(),
        prop::option::of(1e-14f64..1e-3),
        any::<u64>(),
    )
        .prop_map(|(w, u, cost, tol, seed)| {
            let t: f64 = w.iter().sum();
            let n = w.len();
            ProblemFile {
                states: (0..n).map(|i| format!("s{i}")).collect(),
                prior: w.into_iter().map(|x| x / t).collect(),
                actions: None,
                utilities: Some(u.into_iter().map(|r| r[..n].to_vec()).collect()),
                cost: Some(cost),
                scr: None,
                policies: Some(vec![PolicyFile { beliefs: vec![vec![1.0 / 3.0; 3]], weights: vec![1.0] }]),
                options: OptionsFile { tol, max_iter: Some(7), seed: Some(seed), grid_resolution: None },
            }
        })
}

proptest! {
    #[test]
    fn canonical_json_round_trips(file in problem()) {
        let text = file.to_canonical();
        let parsed = ProblemFile::parse(&text, true).unwrap();
        prop_assert_eq!(&parsed, &file);
        prop_assert_eq!(parsed.to_canonical(), text);
    }
}

#[test]
fn every_cost_type_builds() {
    for cost in [
        r#"{"type":"mutual_information"}"#,
        r#"{"type":"posterior_separable","divergence":"kl"}"#,
        r#"{"type":"transformed","inner":"chi_square","psi":{"type":"power","exponent":2.0}}"#,
        r#"{"type":"transformed","inner":"kl","psi":{"type":"exp","rate":0.5}}"#,
        r#"{"type":"max_over_set","divergences":["kl","chi_square"]}"#,
    ] {
        let text = format!(r#"{{"states":["x","y"],"prior":[0.25,0.75],"cost":{cost}}}"#);
        let problem = Problem::new(ProblemFile::parse(&text, true).unwrap()).unwrap();
        problem.cost().unwrap();
    }
    let text = r#"{"states":["x","y"],"prior":[0.25,0.75],"cost":{"type":"quadratic"}}"#;
    assert!(ProblemFile::parse(text, false).is_err());
}

#[test]
fn strict_mode_checks_nested_fields() {
    let text = r#"{"states":["x","y"],"prior":[0.5,0.5],
        "cost":{"type":"transformed","inner":"kl","psi":{"type":"identity","a":1}}}"#;
    assert!(ProblemFile::parse(text, false).is_ok());
    let err = ProblemFile::parse(text, true).unwrap_err();
    assert_eq!(err.location().as_deref(), Some("$.cost.psi.a"));
    assert_eq!(err.exit_code(), 2);
}
