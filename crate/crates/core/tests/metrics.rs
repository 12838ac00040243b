use bayesmr::metrics::{
    bias, coverage, fraction_above, fraction_below, power, write_kappa_csv, write_table1_csv, IntervalEstimate,
    KappaRecord, MethodMetrics, Table1Row,
};
use bayesmr::simgen::Pleiotropy;
use proptest::prelude::*;

fn interval() -> impl Strategy<Value = IntervalEstimate> {
    (-2.0f64..2.0, 0.0f64..1.5, 0.0f64..1.5).prop_map(|(e, a, b)| IntervalEstimate::new(e, e - a, e + b))
}

proptest! {
    #[test]
    fn coverage_partition(results in prop::collection::vec(interval(), 1..40), truth in -2.0f64..2.0) {
        let total = coverage(&results, truth) + fraction_below(&results, truth) + fraction_above(&results, truth);
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn order_does_not_matter(results in prop::collection::vec(interval(), 1..40), truth in -2.0f64..2.0) {
        let mut rev = results.clone();
        rev.reverse();
        prop_assert_eq!(coverage(&results, truth), coverage(&rev, truth));
        prop_assert_eq!(power(&results), power(&rev));
        prop_assert!((bias(&results, truth) - bias(&rev, truth)).abs() < 1e-12);
    }

    #[test]
    fn metrics_survive_serialization(results in prop::collection::vec(interval(), 1..40), truth in -2.0f64..2.0) {
        let json = serde_json::to_string(&results).unwrap();
        let back: Vec<IntervalEstimate> = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(coverage(&results, truth), coverage(&back, truth));
        prop_assert_eq!(power(&results), power(&back));
        prop_assert_eq!(bias(&results, truth).to_bits(), bias(&back, truth).to_bits());
    }
}

#[test]
fn empty_results_are_undefined() {
    assert!(coverage(&[], 0.0).is_nan());
    assert!(bias(&[], 0.0).is_nan());
}

#[test]
fn table_csv_round_trips() {
    let null = vec![IntervalEstimate::new(0.013, -0.21, 0.19), IntervalEstimate::new(-0.1, -0.3, -0.01)];
    let alt = vec![IntervalEstimate::new(0.33, 0.11, 0.52), IntervalEstimate::new(0.41, -0.02, 0.7)];
    let m = MethodMetrics::compute(&null, &alt, 0.35);
    let row = Table1Row {
        scenario_id: "2".into(),
        pleiotropy: Pleiotropy::Negative,
        sample_size: 520,
        bayes: m,
        wme: m,
        bayes_failures: 1,
        wme_failures: 0,
        bayes_unreliable: 0,
    };
    let mut buf = Vec::new();
    write_table1_csv(std::slice::from_ref(&row), &mut buf).unwrap();
    let mut reader = csv::Reader::from_reader(buf.as_slice());
    let headers = reader.headers().unwrap().clone();
    let rec = reader.records().next().unwrap().unwrap();
    let get = |name: &str| rec.get(headers.iter().position(|h| h == name).unwrap()).unwrap().to_string();
    assert_eq!(get("pleiotropy"), "-");
    assert_eq!(get("bayes_coverage_null").parse::<f64>().unwrap(), m.coverage_null);
    assert_eq!(get("wme_bias_alternative").parse::<f64>().unwrap().to_bits(), m.bias_alternative.to_bits());
    assert_eq!(get("bayes_failures"), "1");
    assert_eq!(m.coverage_null, 0.5);
    assert_eq!(m.power, 0.5);
}

#[test]
fn kappa_csv_is_long_format() {
    let rec = KappaRecord { scenario_id: "3".into(), replicate: 4, kappa_means: vec![0.2, 0.9, 0.85], pleiotropic: vec![0] };
    let mut buf = Vec::new();
    write_kappa_csv(&[rec], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "scenario,replicate,instrument,pleiotropic,kappa");
    assert_eq!(lines[1], "3,4,z1,1,0.2");
    assert_eq!(lines[3], "3,4,z3,0,0.85");
}
