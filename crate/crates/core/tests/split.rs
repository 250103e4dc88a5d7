use proptest::prelude::*;
use qsplit_core::hermitian::{hs_inner, CMatrix};
use qsplit_core::oracle::{generator_projection, max_elementwise};
use qsplit_core::split::project_commuting_in;
use qsplit_core::{
    build_generators, evolve_driven, lie_split, pinch, project_commuting, random, DensityOperator,
    HermitianOperator, TimeGrid, Tolerances,
};

const DIMS: [usize; 5] = [2, 3, 4, 6, 8];

fn instance(seed: u64, d: usize) -> (HermitianOperator, DensityOperator) {
    let mut rng = random::rng(seed);
    let h = random::hermitian(&mut rng, d, 2.0);
    let rho = random::density(&mut rng, d, Tolerances::default());
    (h, rho)
}

#[test]
fn split_residuals_on_seeded_pairs() {
    for seed in 0..200u64 {
        let d = DIMS[(seed % 5) as usize];
        let (h, rho) = instance(seed, d);
        let split = lie_split(&h, &rho).unwrap();
        let r = split.residuals(&h);
        assert!(r.reconstruction <= 1e-12, "seed {seed}: {r:?}");
        assert!(r.commutator <= 1e-10, "seed {seed}: {r:?}");
        assert!(r.state_overlap <= 1e-10, "seed {seed}: {r:?}");
        assert!(r.mutual_overlap <= 1e-10, "seed {seed}: {r:?}");
        assert!(r.intra_cluster <= 1e-10, "seed {seed}: {r:?}");
    }
}

#[test]
fn pinching_matches_projective_generator_span() {
    for seed in 1000..1100u64 {
        let d = 2 + (seed % 5) as usize;
        let (h, rho) = instance(seed, d);
        assert!(!rho.spectrum().has_degenerate_cluster());
        let basis = build_generators(rho.spectrum());
        let oracle = generator_projection(h.matrix(), &basis.projective).unwrap();
        let primary = pinch(h.matrix(), rho.spectrum()).unwrap();
        assert!(max_elementwise(&primary, &oracle) <= 1e-10, "seed {seed}");
    }
}

#[test]
fn generator_basis_is_orthogonal_and_complete() {
    for d in 1..=5 {
        let (_, rho) = instance(d as u64, d);
        let basis = build_generators(rho.spectrum());
        assert_eq!(basis.len(), d * d);
        assert_eq!(basis.transitional.len(), d * d - d);
        let all: Vec<_> = basis.iter().collect();
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                assert!(hs_inner(a.matrix(), b.matrix()).unwrap().norm() <= 1e-12);
            }
        }
        for g in &basis.transitional {
            assert!(g.expectation(rho.matrix()).abs() <= 1e-12);
            assert!(g.trace().abs() <= 1e-12);
        }
        for g in &basis.projective {
            let c = g.matrix() * rho.matrix() - rho.matrix() * g.matrix();
            assert!(c.norm() <= 1e-12);
        }
        // expansion over the full basis reproduces any operator
        let (h, _) = instance(100 + d as u64, d);
        let gens: Vec<_> = basis.iter().cloned().collect();
        let full = generator_projection(h.matrix(), &gens).unwrap();
        assert!(max_elementwise(&full, h.matrix()) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gauge_invariance_of_projection(seed in any::<u64>(), di in 0usize..5) {
        let (h, rho) = instance(seed, DIMS[di]);
        let mut rng = random::rng(seed ^ 0x5eed);
        let phases = random::phases(&mut rng, DIMS[di]);
        let rephased = rho.spectrum().rephased(&phases);
        let a = project_commuting(&h, &rho).unwrap();
        let b = project_commuting_in(&h, &rephased).unwrap();
        prop_assert!(max_elementwise(a.matrix(), b.matrix()) <= 1e-12);
    }

    #[test]
    fn pinching_is_contractive_idempotent_and_self_adjoint(seed in any::<u64>(), di in 0usize..5) {
        let (h, rho) = instance(seed, DIMS[di]);
        let (k, _) = instance(seed.wrapping_add(1), DIMS[di]);
        let p = project_commuting(&h, &rho).unwrap();
        prop_assert!(p.frobenius_norm() <= h.frobenius_norm() + 1e-12);
        let pp = project_commuting(&p, &rho).unwrap();
        prop_assert!(max_elementwise(p.matrix(), pp.matrix()) <= 1e-12);
        let pk = project_commuting(&k, &rho).unwrap();
        let lhs = hs_inner(p.matrix(), k.matrix()).unwrap();
        let rhs = hs_inner(h.matrix(), pk.matrix()).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10);
    }

    #[test]
    fn degenerate_states_give_block_diagonal_part(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let tol = Tolerances::default();
        let rho = random::density_with_spectrum(&mut rng, &[0.3, 0.3, 0.3, 0.1], tol);
        prop_assert_eq!(rho.spectrum().clusters().len(), 2);
        let h = random::hermitian(&mut rng, 4, 1.0);
        let split = lie_split(&h, &rho).unwrap();
        let r = split.residuals(&h);
        prop_assert!(r.commutator <= 1e-10 && r.intra_cluster <= 1e-10);
        // the 3x3 degenerate block of H is kept whole
        let hb = rho.spectrum().to_eigenbasis(h.matrix());
        let pb = rho.spectrum().to_eigenbasis(split.commuting.matrix());
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((hb[(i, j)] - pb[(i, j)]).norm() <= 1e-12);
            }
        }
    }
}

#[test]
fn maximally_mixed_state_keeps_everything() {
    let (h, _) = instance(3, 5);
    let rho = DensityOperator::maximally_mixed(5, Tolerances::default()).unwrap();
    let p = project_commuting(&h, &rho).unwrap();
    assert!(max_elementwise(p.matrix(), h.matrix()) <= 1e-15);
}

#[test]
fn commuting_part_carries_energy_along_a_closed_evolution() {
    let tol = Tolerances::default();
    let mut rng = random::rng(11);
    let rho0 = random::density(&mut rng, 3, tol);
    let h0 = random::hermitian(&mut rng, 3, 1.0);
    let h1 = random::hermitian(&mut rng, 3, 1.0);
    let schedule = move |t: f64| &h0 + &h1.scaled(t.sin());
    let grid = TimeGrid::new(0.0, 2.0, 1e-2).unwrap();
    let traj = evolve_driven(&schedule, &rho0, &grid).unwrap();
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        let h = schedule(*t);
        let bar = project_commuting(&h, rho).unwrap();
        let lhs = bar.expectation(rho.matrix());
        let rhs = h.expectation(rho.matrix());
        assert!((lhs - rhs).abs() <= 1e-10, "t = {t}");
    }
}

#[test]
fn zero_operator_projects_to_zero() {
    let (_, rho) = instance(5, 4);
    let p = pinch(&CMatrix::zeros(4, 4), rho.spectrum()).unwrap();
    assert_eq!(p.norm(), 0.0);
}
