mod oracles;

use certicd::rng::seeded_rng;
use certicd::svm::{train_hard_svm, SvmConfig, TrainingSet};
use oracles::max_margin::{max_margin, random_instance};

#[test]
fn margin_matches_exhaustive_search() {
    let mut rng = seeded_rng(2024);
    for case in 0..100 {
        let (pts, ys) = random_instance(&mut rng, 12, 3, 0.05);
        let oracle = max_margin(&pts, &ys).expect("instance is separable");
        let data = TrainingSet::from_rows(&pts, &ys).unwrap();
        let model = train_hard_svm(&data, &SvmConfig::default()).unwrap();
        let rel = (model.diagnostics.margin - oracle.margin).abs() / oracle.margin;
        assert!(rel <= 1e-4, "case {case}: margin {} vs {}", model.diagnostics.margin, oracle.margin);
        assert!(model.diagnostics.max_kkt_violation <= 1e-6, "case {case}");
    }
}

#[test]
fn oracle_on_two_points() {
    let s = max_margin(&[vec![0.0], vec![2.0]], &[-1, 1]).unwrap();
    assert!((s.w[0] - 1.0).abs() < 1e-12);
    assert!((s.b + 1.0).abs() < 1e-12);
}
