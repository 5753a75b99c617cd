mod common;

use mbmf::stats::{mann_whitney_u, PValueMethod};

#[test]
fn exact_test_matches_permutation_enumeration() {
    let (du, dp) = common::mann_whitney_oracle_gap(10, 6, 2024);
    assert_eq!(du, 0.0);
    assert!(dp <= 1e-12, "p gap {dp}");
}

#[test]
fn exact_and_normal_agree_roughly_at_the_boundary() {
    let a: Vec<f64> = (0..20).map(|i| i as f64 * 1.3).collect();
    let b: Vec<f64> = (0..20).map(|i| i as f64 * 1.3 + 6.0).collect();
    let exact = mann_whitney_u(&a, &b).unwrap();
    assert_eq!(exact.method, PValueMethod::Exact);
    let mut a21 = a.clone();
    a21.push(-1.0);
    let normal = mann_whitney_u(&a21, &b).unwrap();
    assert_eq!(normal.method, PValueMethod::Normal);
    assert!(exact.p_two_sided < 0.05 && normal.p_two_sided < 0.05);
}
