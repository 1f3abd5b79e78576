use experttest::synthgen::{run_type1_curve, Type1CurveConfig};

#[test]
fn type1_rate_falls_as_data_grows() {
    let rates: Vec<f64> = [250, 500, 1000]
        .iter()
        .map(|&n| {
            let cfg = Type1CurveConfig::new(n, vec![100], 50, 0.05, 200, 7);
            run_type1_curve(&cfg).unwrap()[0].rate
        })
        .collect();
    assert!(rates[0] >= rates[1] && rates[1] >= rates[2], "rates {rates:?}");
}
