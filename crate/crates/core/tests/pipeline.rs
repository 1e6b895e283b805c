use groupoid_weyl::cstar::{combine, convolve, involute, reduced_norm};
use num_complex::Complex64;
use groupoid_weyl::fourier::make_pw_observable;
use groupoid_weyl::geometry::{make_example, ExampleName, Resolution};
use groupoid_weyl::harness::run::compute_experiment;
use groupoid_weyl::harness::{lookup, ExperimentConfig};
use groupoid_weyl::poisson::Sign;
use groupoid_weyl::quantize::{default_cutoff, weyl_quantize};
use proptest::prelude::*;

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

#[test]
fn single_observable_runs_its_diagonal_pair() {
    let record = compute_experiment(&config(
        r#"{"example": "group-u1", "observables": ["gauss-b"], "ladder": [0.4, 0.2, 0.1], "seed": 2}"#,
    ))
    .unwrap();
    assert_eq!(record.rows.len(), 3);
    assert!(record.rows.iter().all(|r| r.f_id == "gauss-b" && r.g_id == "gauss-b"));
    assert!(record.rows.iter().all(|r| r.dirac_defect == 0.0));
}

#[test]
fn pairs_of_three_observables() {
    let record = compute_experiment(&config(
        r#"{"example": "transf-circle-rotation", "observables": ["gauss-a", "gauss-b", "gauss-c"],
            "ladder": [0.4, 0.2, 0.1], "seed": 2}"#,
    ))
    .unwrap();
    assert_eq!(record.summaries.len(), 3);
    assert_eq!(record.rows.len(), 9);
}

#[test]
fn bump_products_are_rejected() {
    let err = compute_experiment(&config(
        r#"{"example": "pair-flat-line", "observables": ["bump-a", "gauss-a"], "ladder": [0.2], "seed": 2}"#,
    ))
    .unwrap_err();
    assert!(err.to_string().contains("bump"));
}

#[test]
fn invalid_ladders_are_rejected() {
    for ladder in ["[]", "[0.1, 0.2]", "[-0.1]"] {
        let json = format!(r#"{{"example": "group-u1", "observables": ["gauss-a"], "ladder": {ladder}, "seed": 1}}"#);
        assert!(ExperimentConfig::from_json(&json).is_err(), "{ladder}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn real_observables_quantize_to_selfadjoint_kernels(
        index in 0usize..4,
        hbar in 0.05f64..0.6,
        id in prop::sample::select(vec!["gauss-a", "gauss-b", "gauss-c"]),
    ) {
        let name = [ExampleName::PairCircleMetric, ExampleName::GroupU1, ExampleName::PairFlatLine, ExampleName::TransfCircleRotation][index];
        let m = make_example(name.as_str(), Resolution::new(48, 4.0)).unwrap();
        let f = make_pw_observable(&m, &lookup(&m, id).unwrap(), 0.1).unwrap();
        let a = weyl_quantize(&m, &f, hbar, Sign::default_for(m.family), &default_cutoff(&m)).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let diff = combine(one, &a, -one, &involute(&a)).unwrap();
        prop_assert!(reduced_norm(&diff).unwrap() <= 1e-12 * reduced_norm(&a).unwrap().max(1.0));
    }

    #[test]
    fn norm_is_submultiplicative(hbar in 0.1f64..0.6) {
        let m = make_example("pair-circle-metric", Resolution::new(48, 4.0)).unwrap();
        let q = |id: &str| {
            let f = make_pw_observable(&m, &lookup(&m, id).unwrap(), 0.1).unwrap();
            weyl_quantize(&m, &f, hbar, Sign::Minus, &default_cutoff(&m)).unwrap()
        };
        let (a, b) = (q("gauss-a"), q("gauss-b"));
        let ab = reduced_norm(&convolve(&a, &b).unwrap()).unwrap();
        prop_assert!(ab <= reduced_norm(&a).unwrap() * reduced_norm(&b).unwrap() * (1.0 + 1e-8));
    }
}
