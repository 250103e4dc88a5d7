//! Splitting a Hamiltonian relative to a state.
//!
//! Given `rho = sum_i lambda_i |phi_i><phi_i|`, any Hermitian `H` decomposes as
//! `H = H_bar + H_perp` where `H_bar` commutes with `rho` (it carries the
//! internal energy, `Tr(rho H) = Tr(rho H_bar)`) and `H_perp` is
//! Hilbert–Schmidt orthogonal to the commutant (it alone drives the state,
//! `d rho/dt = -i [H_perp, rho]`).
//!
//! The projection onto the commutant is the pinching
//! `Pi[H] = sum_k P_k H P_k` over the eigenspace projectors of `rho`. For a
//! non-degenerate `rho` this is the orthogonal projection onto the span of the
//! diagonal generators `{1, w_l}` of [`GeneratorBasis`]; for degenerate
//! clusters it is the projection onto all block-diagonal operators.

use crate::error::{Error, Result};
use crate::hermitian::{
    commutator, trace_product, CMatrix, DensityOperator, HermitianOperator, SpectralDecomposition,
    C64,
};

/// Explicit `u(d)` generators built from the transition-projection operators
/// `P_ij = |phi_i><phi_j|` of an eigenbasis.
#[derive(Clone, Debug)]
pub struct GeneratorBasis {
    /// `1` followed by `w_1 .. w_{d-1}`.
    pub projective: Vec<HermitianOperator>,
    /// `u_ij, v_ij` for `i < j`, in row-major pair order.
    pub transitional: Vec<HermitianOperator>,
    pub basis_state: SpectralDecomposition,
}

impl GeneratorBasis {
    pub fn dim(&self) -> usize {
        self.basis_state.dim()
    }

    pub fn len(&self) -> usize {
        self.projective.len() + self.transitional.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &HermitianOperator> {
        self.projective.iter().chain(self.transitional.iter())
    }
}

fn transition(spec: &SpectralDecomposition, i: usize, j: usize) -> CMatrix {
    spec.vector(i) * spec.vector(j).adjoint()
}

pub fn build_generators(spec: &SpectralDecomposition) -> GeneratorBasis {
    let d = spec.dim();
    let projectors: Vec<CMatrix> = (0..d).map(|i| transition(spec, i, i)).collect();

    let mut projective = Vec::with_capacity(d);
    projective.push(HermitianOperator::from_hermitian_part(
        &projectors.iter().fold(CMatrix::zeros(d, d), |acc, p| acc + p),
    ));
    for l in 1..d {
        // w_l = -sqrt(2 / (l (l + 1))) (sum_{i <= l} P_ii - l P_{l+1,l+1})
        let lf = l as f64;
        let head = projectors[..l]
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, p| acc + p);
        let w = (head - projectors[l].scale(lf)).scale(-(2.0 / (lf * (lf + 1.0))).sqrt());
        projective.push(HermitianOperator::from_hermitian_part(&w));
    }

    let mut transitional = Vec::with_capacity(d * d.saturating_sub(1));
    let i_unit = C64::new(0.0, 1.0);
    for i in 0..d {
        for j in (i + 1)..d {
            let pij = transition(spec, i, j);
            let pji = transition(spec, j, i);
            transitional.push(HermitianOperator::from_hermitian_part(&(&pij + &pji)));
            transitional.push(HermitianOperator::from_hermitian_part(&((pij - pji) * i_unit)));
        }
    }

    GeneratorBasis {
        projective,
        transitional,
        basis_state: spec.clone(),
    }
}

/// Keep only intra-cluster blocks of `m` (given in the eigenbasis of `spec`).
pub(crate) fn zero_intercluster(m: &mut CMatrix, spec: &SpectralDecomposition) {
    let ids = spec.cluster_ids();
    let n = ids.len();
    for i in 0..n {
        for j in 0..n {
            if ids[i] != ids[j] {
                m[(i, j)] = C64::new(0.0, 0.0);
            }
        }
    }
}

/// `sum_k P_k H P_k` for the cluster projectors of `spec`.
pub fn pinch(h: &CMatrix, spec: &SpectralDecomposition) -> Result<CMatrix> {
    if h.nrows() != spec.dim() || !h.is_square() {
        return Err(Error::DimensionMismatch {
            context: "pinch",
            expected: spec.dim(),
            found: h.nrows(),
        });
    }
    let mut t = spec.to_eigenbasis(h);
    zero_intercluster(&mut t, spec);
    Ok(spec.from_eigenbasis(&t))
}

/// The projection of `H` onto the commutant of `rho`.
pub fn project_commuting(h: &HermitianOperator, rho: &DensityOperator) -> Result<HermitianOperator> {
    project_commuting_in(h, rho.spectrum())
}

/// As [`project_commuting`], using an explicitly supplied eigenbasis.
pub fn project_commuting_in(
    h: &HermitianOperator,
    spec: &SpectralDecomposition,
) -> Result<HermitianOperator> {
    Ok(HermitianOperator::from_hermitian_part(&pinch(h.matrix(), spec)?))
}

/// The pair `(H_bar, H_perp)` of a Hamiltonian relative to a state.
#[derive(Clone, Debug)]
pub struct LieSplit {
    pub commuting: HermitianOperator,
    pub orthogonal: HermitianOperator,
    pub state: DensityOperator,
}

/// Violations of the split invariants; all should be round-off sized.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SplitResiduals {
    /// `||H_bar + H_perp - H||_F`
    pub reconstruction: f64,
    /// `||[H_bar, rho]||_F`
    pub commutator: f64,
    /// `|Tr(H_perp rho)|`
    pub state_overlap: f64,
    /// `|Tr(H_bar H_perp)|`
    pub mutual_overlap: f64,
    /// Largest `|<phi_i|H_perp|phi_j>|` with `i, j` in one cluster.
    pub intra_cluster: f64,
}

impl LieSplit {
    pub fn residuals(&self, h: &HermitianOperator) -> SplitResiduals {
        let rho = self.state.matrix();
        let bar = self.commuting.matrix();
        let perp = self.orthogonal.matrix();
        let spec = self.state.spectrum();
        let t = spec.to_eigenbasis(perp);
        let ids = spec.cluster_ids();
        let mut intra = 0.0f64;
        for i in 0..ids.len() {
            for j in 0..ids.len() {
                if ids[i] == ids[j] {
                    intra = intra.max(t[(i, j)].norm());
                }
            }
        }
        SplitResiduals {
            reconstruction: (bar + perp - h.matrix()).norm(),
            commutator: commutator(bar, rho).norm(),
            state_overlap: trace_product(perp, rho).norm(),
            mutual_overlap: trace_product(bar, perp).norm(),
            intra_cluster: intra,
        }
    }
}

pub fn lie_split(h: &HermitianOperator, rho: &DensityOperator) -> Result<LieSplit> {
    let commuting = project_commuting(h, rho)?;
    let orthogonal = h - &commuting;
    Ok(LieSplit {
        commuting,
        orthogonal,
        state: rho.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::{hs_inner, pauli, Tolerances};
    use crate::random;

    fn qubit_state(p: f64) -> DensityOperator {
        DensityOperator::from_probabilities(&[p, 1.0 - p], Tolerances::default()).unwrap()
    }

    #[test]
    fn qubit_generators_match_pauli_up_to_printed_signs() {
        let rho = qubit_state(0.75);
        let g = build_generators(rho.spectrum());
        assert_eq!(g.len(), 4);
        assert_eq!(g.transitional.len(), 2);
        assert_eq!(g.projective[0], HermitianOperator::identity(2));
        // w_1 = -(P_11 - P_22) = -sigma_z ; v_12 = i(P_12 - P_21) = -sigma_y
        assert!((g.projective[1].matrix() + pauli::z().matrix()).norm() < 1e-15);
        assert!((g.transitional[0].matrix() - pauli::x().matrix()).norm() < 1e-15);
        assert!((g.transitional[1].matrix() + pauli::y().matrix()).norm() < 1e-15);
    }

    #[test]
    fn generator_gram_matrix_is_diagonal() {
        let mut r = random::rng(5);
        for d in 1..=5 {
            let rho = random::density(&mut r, d, Tolerances::default());
            let g = build_generators(rho.spectrum());
            assert_eq!(g.len(), d * d);
            assert_eq!(g.transitional.len(), d * d - d);
            let all: Vec<_> = g.iter().collect();
            for (a, x) in all.iter().enumerate() {
                if a > 0 {
                    assert!(x.trace().abs() < 1e-12, "generator {a} not traceless");
                }
                for (b, y) in all.iter().enumerate() {
                    let ip = hs_inner(x.matrix(), y.matrix()).unwrap();
                    let expected = match (a, b) {
                        (0, 0) => d as f64,
                        _ if a == b => 2.0,
                        _ => 0.0,
                    };
                    assert!((ip - C64::new(expected, 0.0)).norm() < 1e-12, "d={d} ({a},{b}) = {ip}");
                }
            }
            for p in &g.projective {
                assert!(commutator(p.matrix(), rho.matrix()).norm() < 1e-12);
            }
            for t in &g.transitional {
                assert!(trace_product(t.matrix(), rho.matrix()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn w_normalization_d3() {
        let rho = DensityOperator::from_probabilities(&[0.5, 0.3, 0.2], Tolerances::default()).unwrap();
        let g = build_generators(rho.spectrum());
        let w1 = g.projective[1].matrix();
        let w2 = g.projective[2].matrix();
        assert!((hs_inner(w1, w1).unwrap().re - 2.0).abs() < 1e-14);
        assert!((hs_inner(w2, w2).unwrap().re - 2.0).abs() < 1e-14);
        assert!(hs_inner(w1, w2).unwrap().norm() < 1e-14);
    }

    #[test]
    fn projection_examples() {
        let rho = qubit_state(0.75);
        let zero = project_commuting(&pauli::x(), &rho).unwrap();
        assert!(zero.frobenius_norm() < 1e-15);
        let z = project_commuting(&pauli::z(), &rho).unwrap();
        assert!((z.matrix() - pauli::z().matrix()).norm() < 1e-15);

        let mut r = random::rng(2);
        let h = random::hermitian(&mut r, 3, 1.0);
        let mixed = DensityOperator::maximally_mixed(3, Tolerances::default()).unwrap();
        let same = project_commuting(&h, &mixed).unwrap();
        assert!((same.matrix() - h.matrix()).norm() < 1e-14);

        let wrong = DensityOperator::maximally_mixed(2, Tolerances::default()).unwrap();
        assert!(project_commuting(&h, &wrong).is_err());
    }

    #[test]
    fn split_by_linearity() {
        let h = &pauli::x() + &pauli::z();
        let s = lie_split(&h, &qubit_state(0.3)).unwrap();
        assert!((s.commuting.matrix() - pauli::z().matrix()).norm() < 1e-15);
        assert!((s.orthogonal.matrix() - pauli::x().matrix()).norm() < 1e-15);

        let s = lie_split(&pauli::z(), &qubit_state(0.3)).unwrap();
        assert!(s.orthogonal.frobenius_norm() < 1e-15);
    }

    #[test]
    fn split_matches_generator_expansion_coefficients() {
        let mut r = random::rng(17);
        let tol = Tolerances::default();
        let h = random::hermitian(&mut r, 4, 1.0);
        let rho = random::density(&mut r, 4, tol);
        assert!(!rho.spectrum().has_degenerate_cluster());
        let s = lie_split(&h, &rho).unwrap();
        let g = build_generators(rho.spectrum());
        for gen in &g.projective {
            let norm = hs_inner(gen.matrix(), gen.matrix()).unwrap().re;
            let ch = hs_inner(gen.matrix(), h.matrix()).unwrap() / norm;
            let cbar = hs_inner(gen.matrix(), s.commuting.matrix()).unwrap() / norm;
            let cperp = hs_inner(gen.matrix(), s.orthogonal.matrix()).unwrap() / norm;
            assert!((ch - cbar).norm() < 1e-10);
            assert!(cperp.norm() < 1e-10);
        }
        for gen in &g.transitional {
            let ch = hs_inner(gen.matrix(), h.matrix()).unwrap() / 2.0;
            let cbar = hs_inner(gen.matrix(), s.commuting.matrix()).unwrap() / 2.0;
            let cperp = hs_inner(gen.matrix(), s.orthogonal.matrix()).unwrap() / 2.0;
            assert!((ch - cperp).norm() < 1e-10);
            assert!(cbar.norm() < 1e-10);
        }
    }

    #[test]
    fn degenerate_state_keeps_cluster_blocks() {
        let tol = Tolerances::default();
        let rho = DensityOperator::from_probabilities(&[0.4, 0.4, 0.2], tol).unwrap();
        let mut r = random::rng(8);
        let h = random::hermitian(&mut r, 3, 1.0);
        let s = lie_split(&h, &rho).unwrap();
        let res = s.residuals(&h);
        assert!(res.commutator < 1e-12);
        assert!(res.intra_cluster < 1e-12);
        // the 2x2 degenerate block is kept whole
        assert!((s.commuting.matrix()[(0, 1)] - h.matrix()[(0, 1)]).norm() < 1e-14);
        assert!(s.commuting.matrix()[(0, 2)].norm() < 1e-14);
    }
}
