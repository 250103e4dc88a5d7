use proptest::prelude::*;
use qsplit_core::hermitian::{hs_inner, partial_trace, tensor, CMatrix, Subsystem, C64};
use qsplit_core::{eig_hermitian, random, HermitianOperator, Tolerances};

fn brute_partial_trace_e(m: &CMatrix, ds: usize, de: usize) -> CMatrix {
    CMatrix::from_fn(ds, ds, |s, t| {
        let mut acc = C64::new(0.0, 0.0);
        for e in 0..de {
            acc += m[(s * de + e, t * de + e)];
        }
        acc
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eigen_round_trip(seed in any::<u64>(), dim in 1usize..=64) {
        let mut rng = random::rng(seed);
        let h = random::hermitian(&mut rng, dim, 3.0);
        let spec = eig_hermitian(&h, &Tolerances::default()).unwrap();
        prop_assert!((spec.reconstruct() - h.matrix()).norm() <= 1e-10);
        let v = spec.eigenvectors();
        prop_assert!((v.adjoint() * v - CMatrix::identity(dim, dim)).norm() <= 1e-10);
        prop_assert!(spec.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        // determinism
        let again = eig_hermitian(&h, &Tolerances::default()).unwrap();
        prop_assert_eq!(again.eigenvectors(), spec.eigenvectors());
    }

    #[test]
    fn tensor_partial_trace_consistency(seed in any::<u64>(), ds in 1usize..=5, de in 1usize..=5) {
        let mut rng = random::rng(seed);
        let a = random::hermitian(&mut rng, ds, 1.0);
        let b = random::hermitian(&mut rng, de, 1.0);
        let ab = tensor(a.matrix(), b.matrix());
        let keep_s = partial_trace(&ab, Subsystem::System, (ds, de)).unwrap();
        let keep_e = partial_trace(&ab, Subsystem::Environment, (ds, de)).unwrap();
        let expect_s = a.matrix() * b.matrix().trace();
        let expect_e = b.matrix() * a.matrix().trace();
        prop_assert!(keep_s.iter().zip(expect_s.iter()).all(|(x, y)| (x - y).norm() <= 1e-12));
        prop_assert!(keep_e.iter().zip(expect_e.iter()).all(|(x, y)| (x - y).norm() <= 1e-12));
        let tr = ab.trace() - a.matrix().trace() * b.matrix().trace();
        prop_assert!(tr.norm() <= 1e-12);
    }

    #[test]
    fn hs_inner_is_conjugate_symmetric(seed in any::<u64>(), d in 1usize..=6) {
        let mut rng = random::rng(seed);
        let a = random::hermitian(&mut rng, d, 1.0).into_matrix() * C64::new(0.3, 0.7);
        let b = random::hermitian(&mut rng, d, 1.0).into_matrix();
        let ab = hs_inner(&a, &b).unwrap();
        let ba = hs_inner(&b, &a).unwrap();
        prop_assert!((ab - ba.conj()).norm() <= 1e-12);
        let aa = hs_inner(&a, &a).unwrap();
        prop_assert!(aa.re >= 0.0 && aa.im.abs() <= 1e-12);
        prop_assert!((aa.re - a.norm_squared()).abs() <= 1e-12 * aa.re.max(1.0));
    }
}

#[test]
fn partial_trace_preserves_trace_over_200_seeds() {
    for seed in 0..200u64 {
        let mut rng = random::rng(seed);
        let ds = 1 + (seed % 4) as usize;
        let de = 1 + ((seed / 4) % 4) as usize;
        let tol = Tolerances::default();
        let rho = random::density(&mut rng, ds * de, tol);
        for keep in [Subsystem::System, Subsystem::Environment] {
            let r = partial_trace(rho.matrix(), keep, (ds, de)).unwrap();
            assert!((r.trace() - rho.matrix().trace()).norm() <= 1e-12, "seed {seed}");
        }
        let brute = brute_partial_trace_e(rho.matrix(), ds, de);
        let fast = partial_trace(rho.matrix(), Subsystem::System, (ds, de)).unwrap();
        assert!((brute - fast).norm() <= 1e-14);
    }
}

#[test]
fn partial_trace_of_random_product_recovers_factor() {
    let tol = Tolerances::default();
    let mut rng = random::rng(7);
    let rs = random::density(&mut rng, 3, tol);
    let re = random::density(&mut rng, 4, tol);
    let prod = tensor(rs.matrix(), re.matrix());
    let back = brute_partial_trace_e(&prod, 3, 4);
    assert!((back - rs.matrix()).norm() <= 1e-14);
}

#[test]
fn rejects_non_hermitian_with_diagnostic() {
    let mut m = CMatrix::identity(2, 2);
    m[(0, 1)] = C64::new(1.0, 0.0);
    match HermitianOperator::new(m) {
        Err(qsplit_core::Error::NotHermitian { max_asymmetry, .. }) => {
            assert!((max_asymmetry - 1.0).abs() < 1e-15)
        }
        other => panic!("unexpected {other:?}"),
    }
}
