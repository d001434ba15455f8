use driftlab_bench::{besq, heat_kernel, quick_variational, small_ensemble, states};
use driftlab_core::hardy::variational_upper;
use driftlab_core::particles::simulate_ensemble;

#[test]
fn ensemble_fixture_runs() {
    let e = simulate_ensemble(&small_ensemble(48.0)).unwrap();
    assert_eq!(e.records.len(), 64);
}

#[test]
fn drift_fixture_is_finite_and_translation_free() {
    let k = heat_kernel(4, 3, 10.0).unwrap();
    for x in states(4, 3, 16) {
        let v = k.eval(&x);
        assert!(v.iter().all(|c| c.is_finite()));
        for axis in 0..3 {
            let total: f64 = (0..4).map(|i| v[i * 3 + axis]).sum();
            assert!(total.abs() < 1e-9, "{total}");
        }
    }
}

#[test]
fn remaining_fixtures_build() {
    assert!(besq(1.5).is_ok());
    let est = variational_upper(3, 2, &quick_variational(), 1 << 20).unwrap();
    assert!(est.value.is_finite() && est.value > 0.0);
}
