use driftlab_core::fields::{
    mollify, numeric_divergence, MollifierFamily, MollifierKind, Modulation, ParticleKernel, StreamMatrix,
    VectorField,
};
use driftlab_core::LabError;

fn two_body() -> VectorField {
    VectorField::particle_kernel(ParticleKernel::new(2, 3, 48.0, Modulation::Uniform).unwrap())
}

#[test]
fn mollified_particle_kernel_converges_monotonically() {
    let f = two_body();
    let x = [0.4, 0.1, -0.2, -0.3, 0.0, 0.25];
    let exact = f.eval(&x).unwrap();
    for kind in [MollifierKind::Heat, MollifierKind::Bump] {
        let fam = MollifierFamily::new(kind, vec![1e-1, 1e-2, 1e-3]).unwrap();
        let errors: Vec<f64> = (0..3)
            .map(|k| {
                let v = mollify(&fam, &f, k, &x).unwrap();
                v.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
            })
            .collect();
        assert!(errors.windows(2).all(|w| w[1] < w[0]), "{kind:?}: {errors:?}");
    }
}

#[test]
fn stream_drift_is_divergence_free() {
    let q = StreamMatrix::rotational(3, 1.3);
    for x in [[0.7, -0.2, 0.4], [-1.1, 0.5, 2.0]] {
        let div = numeric_divergence(|y| q.row_divergence(y), &x, 1e-4).unwrap();
        assert!(div.abs() < 1e-5, "{div}");
    }
}

#[test]
fn stream_divergence_equals_rotational_field() {
    let q = StreamMatrix::rotational(3, 1.3);
    let f = VectorField::rotational(3, 1.3).unwrap();
    let x = [0.7, -0.2, 0.4];
    let a = q.row_divergence(&x).unwrap();
    let b = f.eval(&x).unwrap();
    assert!(a.iter().zip(&b).all(|(u, v)| (u - v).abs() < 1e-6), "{a:?} vs {b:?}");
}

#[test]
fn singular_configurations_are_reported() {
    let f = two_body();
    assert!(matches!(f.eval(&[0.0; 6]), Err(LabError::SingularPoint(_))));
    assert!(matches!(f.eval(&[0.0; 5]), Err(LabError::DimensionMismatch { .. })));
    let h = VectorField::hardy(1.0, 3).unwrap();
    assert!(matches!(h.eval(&[0.0; 3]), Err(LabError::SingularPoint(_))));
}

#[test]
fn hardy_field_example() {
    // √δ (d−2)/2 · x/|x|² at x = (1, 0, 0), δ = 1, d = 3
    let v = VectorField::hardy(1.0, 3).unwrap().eval(&[1.0, 0.0, 0.0]).unwrap();
    assert_eq!(v, vec![0.5, 0.0, 0.0]);
}
