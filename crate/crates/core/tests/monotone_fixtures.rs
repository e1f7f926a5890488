use lapbench::monotone::{form_report, replay_counterexample, verify_heinz, Counterexample, ScalarFn};

fn load(name: &str) -> Counterexample {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn stored_counterexamples_replay() {
    for (file, k) in [("counterexample_log1p_2.json", 2), ("counterexample_log1p_3.json", 3)] {
        let c = load(file);
        let (a, b) = c.matrices().unwrap();
        let order = form_report(&a, &b, None, 1e-12).unwrap();
        assert!(!order.violated, "{file}: A ≼ B fails by {:e}", order.min_eigenvalue_of_difference);
        let v = replay_counterexample(&ScalarFn::LogPower { k }, &c).unwrap();
        assert!(v < -1e-9, "{file}: replay gives {v:e}");
        assert!((v - c.violation).abs() <= 1e-9 * (1.0 + v.abs()), "{file}: stored {:e}, replayed {v:e}", c.violation);
    }
}

#[test]
fn monotone_functions_respect_the_stored_pairs() {
    for file in ["counterexample_log1p_2.json", "counterexample_log1p_3.json"] {
        let c = load(file);
        for f in [ScalarFn::Sqrt, ScalarFn::Log1p, ScalarFn::Polylog { n: 2 }, ScalarFn::Polylog { n: 3 }] {
            let v = replay_counterexample(&f, &c).unwrap();
            assert!(v >= -1e-9, "{file}: {} gives {v:e}", f.id());
        }
    }
}

#[test]
fn heinz_holds_on_the_stored_pairs() {
    let alphas: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    for file in ["counterexample_log1p_2.json", "counterexample_log1p_3.json"] {
        let (a, b) = load(file).matrices().unwrap();
        let r = verify_heinz(&a, &b, &alphas, 1e-9).unwrap();
        assert!(!r.violated, "{file}: α = {} gives {:e}", r.worst_alpha, r.worst_min_eigenvalue);
    }
}
