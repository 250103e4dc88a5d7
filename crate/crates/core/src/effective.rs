//! Effective Hamiltonians for the two halves of a closed bipartite system.
//!
//! For `H = H_S ⊗ 1 + 1 ⊗ H_E + H_I` and a joint state `rho_SE`, the
//! interaction is rewritten as `H_I = H'_S ⊗ 1 + 1 ⊗ H'_E + H'_I` where
//!
//! * `H'_S = H_bar'_S + H'_perp_S`; the off-diagonal part `H'_perp_S` reproduces
//!   the inter-cluster (unitary) part of the interaction-induced generator
//!   `GEN_S = -i Tr_E [H_I, rho_SE]`, i.e. `-i [H'_perp_S, rho_S]` equals it;
//! * the diagonal parts `H_bar'_S`, `H_bar'_E` minimize `||H'_S ⊗ 1 + 1 ⊗ H'_E||`
//!   subject to `Tr(H'_I rho_SE) = 0`;
//! * `H_eff_S = H_S + H'_S` and `U_S = Tr(rho_S H_eff_S)`, so that
//!   `U_S + U_E = Tr(H rho_SE)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{
    commutator, eig_named, partial_trace, tensor, trace_product, CMatrix, DensityOperator,
    HermitianOperator, SpectralDecomposition, Subsystem, Tolerances, C64,
};
use crate::objective::DiagonalSolution;
use crate::split::{pinch, zero_intercluster};

/// `H_S`, `H_E`, `H_I` (time independent) and an initial joint state.
#[derive(Clone, Debug)]
pub struct BipartiteModel {
    dims: (usize, usize),
    h_s: HermitianOperator,
    h_e: HermitianOperator,
    h_i: HermitianOperator,
    total: HermitianOperator,
    initial: DensityOperator,
}

impl BipartiteModel {
    pub fn new(
        h_s: HermitianOperator,
        h_e: HermitianOperator,
        h_i: HermitianOperator,
        initial: DensityOperator,
    ) -> Result<Self> {
        let dims = (h_s.dim(), h_e.dim());
        let n = dims.0 * dims.1;
        for (found, context) in [(h_i.dim(), "interaction"), (initial.dim(), "initial state")] {
            if found != n {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: n,
                    found,
                });
            }
        }
        let total = &(&h_s.tensor(&HermitianOperator::identity(dims.1))
            + &HermitianOperator::identity(dims.0).tensor(&h_e))
            + &h_i;
        Ok(BipartiteModel {
            dims,
            h_s,
            h_e,
            h_i,
            total,
            initial,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn h_s(&self) -> &HermitianOperator {
        &self.h_s
    }

    pub fn h_e(&self) -> &HermitianOperator {
        &self.h_e
    }

    pub fn h_i(&self) -> &HermitianOperator {
        &self.h_i
    }

    pub fn free(&self, side: Subsystem) -> &HermitianOperator {
        match side {
            Subsystem::System => &self.h_s,
            Subsystem::Environment => &self.h_e,
        }
    }

    pub fn total_hamiltonian(&self) -> &HermitianOperator {
        &self.total
    }

    pub fn initial(&self) -> &DensityOperator {
        &self.initial
    }

    pub fn with_initial(&self, initial: DensityOperator) -> Result<Self> {
        Self::new(self.h_s.clone(), self.h_e.clone(), self.h_i.clone(), initial)
    }

    pub fn with_interaction(&self, h_i: HermitianOperator) -> Result<Self> {
        Self::new(self.h_s.clone(), self.h_e.clone(), h_i, self.initial.clone())
    }
}

/// `-i Tr_other [H_I, rho_SE]`, the interaction-driven part of the reduced
/// equation of motion on `side`.
pub fn reduced_generator(
    h_i: &HermitianOperator,
    rho_se: &DensityOperator,
    dims: (usize, usize),
    side: Subsystem,
) -> Result<HermitianOperator> {
    if h_i.dim() != rho_se.dim() {
        return Err(Error::DimensionMismatch {
            context: "reduced_generator",
            expected: rho_se.dim(),
            found: h_i.dim(),
        });
    }
    let c = commutator(h_i.matrix(), rho_se.matrix());
    let reduced = partial_trace(&c, side, dims)?;
    Ok(HermitianOperator::from_hermitian_part(
        &(reduced * C64::new(0.0, -1.0)),
    ))
}

/// `m - pinch(m)`: the part of `m` connecting different eigenvalue clusters.
pub fn intercluster_part(m: &CMatrix, spec: &SpectralDecomposition) -> Result<CMatrix> {
    Ok(m - pinch(m, spec)?)
}

/// Splitting of a reduced generator into a coherent (commutator) part and a
/// block-diagonal remainder.
#[derive(Clone, Debug)]
pub struct CoherenceDecomposition {
    /// `H'_perp`, with `-i [H'_perp, rho]` equal to the inter-cluster part.
    pub coherent: HermitianOperator,
    /// The cluster-block-diagonal remainder of the generator.
    pub dissipative: HermitianOperator,
    /// Eigenbasis of `rho` re-chosen inside each cluster so that the
    /// remainder is diagonal.
    pub basis: SpectralDecomposition,
    /// Diagonal of the remainder in `basis`.
    pub remainder_diagonal: Vec<f64>,
    /// Some cluster of `rho` holds more than one eigenvalue.
    pub merged: bool,
}

/// Element `(i, j)` of `H'_perp` in the eigenbasis of `rho` is
/// `i GEN_ij / (lambda_j - lambda_i)` for `i`, `j` in different clusters and zero
/// otherwise. Cluster gaps exceed the degeneracy tolerance, so the division
/// is bounded.
pub fn coherence_decomposition(
    generator: &HermitianOperator,
    spec: &SpectralDecomposition,
    tol: &Tolerances,
) -> Result<CoherenceDecomposition> {
    let n = spec.dim();
    if generator.dim() != n {
        return Err(Error::DimensionMismatch {
            context: "coherence_part",
            expected: n,
            found: generator.dim(),
        });
    }
    let lambda = spec.eigenvalues();
    let ids = spec.cluster_ids();
    let t = spec.to_eigenbasis(generator.matrix());

    let i_unit = C64::new(0.0, 1.0);
    let mut x = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if ids[i] != ids[j] {
                x[(i, j)] = i_unit * t[(i, j)] / (lambda[j] - lambda[i]);
            }
        }
    }
    let coherent = HermitianOperator::from_hermitian_part(&spec.from_eigenbasis(&x));

    let mut block_diag = t.clone();
    zero_intercluster(&mut block_diag, spec);
    let dissipative = HermitianOperator::from_hermitian_part(&spec.from_eigenbasis(&block_diag));

    let mut vectors = spec.eigenvectors().clone();
    for range in spec.clusters().iter().filter(|r| r.len() > 1) {
        let block = t.view((range.start, range.start), (range.len(), range.len())).into_owned();
        let block = HermitianOperator::from_hermitian_part(&block);
        let inner = eig_named(block.matrix(), tol, "intra-cluster generator block")?;
        let cols = vectors.columns(range.start, range.len()) * inner.eigenvectors();
        vectors.columns_mut(range.start, range.len()).copy_from(&cols);
    }
    let basis = spec.with_eigenvectors(vectors);
    let rotated = basis.to_eigenbasis(generator.matrix());
    let remainder_diagonal = (0..n).map(|i| rotated[(i, i)].re).collect();

    Ok(CoherenceDecomposition {
        coherent,
        dissipative,
        basis,
        remainder_diagonal,
        merged: spec.has_degenerate_cluster(),
    })
}

/// The coherent part `H'_perp` of `generator` relative to `rho`.
pub fn coherence_part(
    generator: &HermitianOperator,
    rho: &DensityOperator,
) -> Result<HermitianOperator> {
    Ok(coherence_decomposition(generator, rho.spectrum(), rho.tolerances())?.coherent)
}

fn check_simplex(name: &str, lambda: &[f64], dim: usize) -> Result<f64> {
    if lambda.is_empty() || lambda.len() > dim {
        return Err(Error::InvalidArgument(format!(
            "{name}: {} support eigenvalues for dimension {dim}",
            lambda.len()
        )));
    }
    let sum: f64 = lambda.iter().sum();
    if (sum - 1.0).abs() > 1e-6 || lambda.iter().any(|l| !l.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "{name}: support eigenvalues sum to {sum}, expected 1"
        )));
    }
    Ok(sum)
}

/// Exact minimizer of `F(a, b) = d_E |a|^2 + d_S |b|^2 + 2 (sum a)(sum b)`
/// subject to `lambda_S . a + lambda_E . b = U_I`.
///
/// Stationarity gives `a_i = (mu lambda_i - 2B) / (2 d_E)` and
/// `b_j = (mu lambda_j - 2A) / (2 d_S)` with `A = sum a`, `B = sum b`, which
/// reduces the KKT system to three unknowns `(A, B, mu)`. When both supports
/// are the full space the `(A, B)` block is singular (adding `c` to every
/// `a_i` and `-c` to every `b_j` changes neither objective nor constraint) and
/// the minimum-norm member `A = B` is returned.
pub fn diagonal_parts(
    lambda_s: &[f64],
    lambda_e: &[f64],
    d_s: usize,
    d_e: usize,
    u_interaction: f64,
) -> Result<DiagonalSolution> {
    let s1 = check_simplex("lambda_S", lambda_s, d_s)?;
    let t1 = check_simplex("lambda_E", lambda_e, d_e)?;
    if !u_interaction.is_finite() {
        return Err(Error::InvalidArgument("U_I is not finite".into()));
    }
    let (r, q) = (lambda_s.len() as f64, lambda_e.len() as f64);
    let (ds, de) = (d_s as f64, d_e as f64);
    let s2: f64 = lambda_s.iter().map(|l| l * l).sum();
    let t2: f64 = lambda_e.iter().map(|l| l * l).sum();

    let singular = lambda_s.len() == d_s && lambda_e.len() == d_e;
    // (A, B) per unit multiplier
    let (a_unit, b_unit) = if singular {
        let mean = 0.5 * (s1 + t1);
        let a = mean / (2.0 * (de + ds));
        (a, a)
    } else {
        let det = de * ds - r * q;
        (
            0.5 * (ds * s1 - r * t1) / det,
            0.5 * (de * t1 - q * s1) / det,
        )
    };
    let k = s2 / (2.0 * de) + t2 / (2.0 * ds) - b_unit * s1 / de - a_unit * t1 / ds;
    let mu = u_interaction / k;
    let (big_a, big_b) = (mu * a_unit, mu * b_unit);
    let a: Vec<f64> = lambda_s
        .iter()
        .map(|l| (mu * l - 2.0 * big_b) / (2.0 * de))
        .collect();
    let b: Vec<f64> = lambda_e
        .iter()
        .map(|l| (mu * l - 2.0 * big_a) / (2.0 * ds))
        .collect();
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    let objective = de * a.iter().map(|x| x * x).sum::<f64>()
        + ds * b.iter().map(|x| x * x).sum::<f64>()
        + 2.0 * sa * sb;
    Ok(DiagonalSolution {
        a,
        b,
        multiplier: mu,
        objective,
        min_norm_fallback: singular,
    })
}

/// Entries `D_1 U_I / D_2` of the printed closed form for the system-side
/// diagonal, one per entry of `lambda_s`, with
/// `D_1 = ((d_E - 1)/(d_S d_E - 1) - lambda_i) / 2` and
/// `D_2 = (d_S + d_E - 2) / (2 (d_S d_E - 1)) - sum lambda_S^2 - sum lambda_E^2`.
/// No optimality is claimed; `d_S`, `d_E` are used as passed.
pub fn printed_closed_form(
    lambda_s: &[f64],
    lambda_e: &[f64],
    d_s: usize,
    d_e: usize,
    u_interaction: f64,
) -> Result<Vec<f64>> {
    let (ds, de) = (d_s as f64, d_e as f64);
    let denom = ds * de - 1.0;
    if denom == 0.0 {
        return Err(Error::InvalidArgument(
            "closed form needs d_S d_E > 1".into(),
        ));
    }
    let d2 = (ds + de - 2.0) / (2.0 * denom)
        - lambda_s.iter().map(|l| l * l).sum::<f64>()
        - lambda_e.iter().map(|l| l * l).sum::<f64>();
    if d2.abs() <= 1e-14 {
        return Err(Error::SingularClosedForm { d2 });
    }
    Ok(lambda_s
        .iter()
        .map(|l| 0.5 * ((de - 1.0) / denom - l) * u_interaction / d2)
        .collect())
}

/// Complete interaction split at one instant.
#[derive(Clone, Debug)]
pub struct EffectiveSplit {
    pub h_prime_s: HermitianOperator,
    pub h_prime_e: HermitianOperator,
    pub h_prime_i: HermitianOperator,
    pub h_eff_s: HermitianOperator,
    pub h_eff_e: HermitianOperator,
    /// `U_I = Tr(H_I rho_SE)`.
    pub u_interaction: f64,
    /// `||H'_S ⊗ 1 + 1 ⊗ H'_E||` (Hilbert–Schmidt).
    pub distance: f64,
    /// `|Tr(H'_I rho_SE)|`.
    pub residual_constraint: f64,
    pub residual_commutator_s: f64,
    pub residual_commutator_e: f64,
    pub u_s: f64,
    pub u_e: f64,
    pub u_se: f64,
    pub diagonal: DiagonalSolution,
    pub generator_s: HermitianOperator,
    pub generator_e: HermitianOperator,
    pub coherence_s: CoherenceDecomposition,
    pub coherence_e: CoherenceDecomposition,
    pub rho_s: DensityOperator,
    pub rho_e: DensityOperator,
}

impl EffectiveSplit {
    /// `|U_S + U_E - U_SE|`.
    pub fn residual_additivity(&self) -> f64 {
        (self.u_s + self.u_e - self.u_se).abs()
    }

    /// Instantaneous heat flow into `side`,
    /// `sum_i GEN~_ii <phi~_i| H_eff |phi~_i>` in the cluster-rotated eigenbasis,
    /// which equals `Tr(d rho / dt H_eff)`.
    pub fn heat_rate(&self, side: Subsystem) -> f64 {
        let (coh, h_eff) = match side {
            Subsystem::System => (&self.coherence_s, &self.h_eff_s),
            Subsystem::Environment => (&self.coherence_e, &self.h_eff_e),
        };
        let rotated = coh.basis.to_eigenbasis(h_eff.matrix());
        coh.remainder_diagonal
            .iter()
            .enumerate()
            .map(|(i, g)| g * rotated[(i, i)].re)
            .sum()
    }

    pub fn h_prime(&self, side: Subsystem) -> &HermitianOperator {
        match side {
            Subsystem::System => &self.h_prime_s,
            Subsystem::Environment => &self.h_prime_e,
        }
    }
}

fn embed_diagonal(spec: &SpectralDecomposition, values: &[f64]) -> CMatrix {
    let n = spec.dim();
    let mut diag = vec![0.0; n];
    diag[..values.len()].copy_from_slice(values);
    spec.from_eigenbasis(HermitianOperator::from_diagonal(&diag).matrix())
}

fn commutator_residual(coh: &CoherenceDecomposition, rho: &DensityOperator, gen: &HermitianOperator) -> Result<f64> {
    let induced = coh.coherent.liouvillian_action(rho.matrix());
    let target = intercluster_part(gen.matrix(), rho.spectrum())?;
    Ok((induced.matrix() - target).norm())
}

/// Split the interaction for the joint state `rho_se`.
pub fn assemble(model: &BipartiteModel, rho_se: &DensityOperator) -> Result<EffectiveSplit> {
    let dims = model.dims();
    let rho_s = rho_se.reduce(Subsystem::System, dims)?;
    let rho_e = rho_se.reduce(Subsystem::Environment, dims)?;
    assemble_from_reduced(model, rho_se, rho_s, rho_e)
}

/// As [`assemble`] with caller-supplied reduced states, whose cached
/// eigenbases (e.g. rephased ones) are the ones used.
pub fn assemble_from_reduced(
    model: &BipartiteModel,
    rho_se: &DensityOperator,
    rho_s: DensityOperator,
    rho_e: DensityOperator,
) -> Result<EffectiveSplit> {
    let (ds, de) = model.dims();
    if rho_se.dim() != ds * de || rho_s.dim() != ds || rho_e.dim() != de {
        return Err(Error::DimensionMismatch {
            context: "assemble",
            expected: ds * de,
            found: rho_se.dim(),
        });
    }
    let tol = rho_se.tolerances();
    let h_i = model.h_i();
    let u_interaction = rho_se.expectation(h_i);

    let generator_s = reduced_generator(h_i, rho_se, (ds, de), Subsystem::System)?;
    let generator_e = reduced_generator(h_i, rho_se, (ds, de), Subsystem::Environment)?;
    let coherence_s = coherence_decomposition(&generator_s, rho_s.spectrum(), tol)?;
    let coherence_e = coherence_decomposition(&generator_e, rho_e.spectrum(), tol)?;

    let diagonal = diagonal_parts(
        rho_s.spectrum().support_eigenvalues(),
        rho_e.spectrum().support_eigenvalues(),
        ds,
        de,
        u_interaction,
    )?;
    let bar_s = embed_diagonal(rho_s.spectrum(), &diagonal.a);
    let bar_e = embed_diagonal(rho_e.spectrum(), &diagonal.b);
    let h_prime_s = HermitianOperator::from_hermitian_part(&(bar_s + coherence_s.coherent.matrix()));
    let h_prime_e = HermitianOperator::from_hermitian_part(&(bar_e + coherence_e.coherent.matrix()));

    let id_s = CMatrix::identity(ds, ds);
    let id_e = CMatrix::identity(de, de);
    let h_prime = tensor(h_prime_s.matrix(), &id_e) + tensor(&id_s, h_prime_e.matrix());
    let h_prime_i = HermitianOperator::from_hermitian_part(&(h_i.matrix() - &h_prime));

    let h_eff_s = model.h_s() + &h_prime_s;
    let h_eff_e = model.h_e() + &h_prime_e;
    let u_s = rho_s.expectation(&h_eff_s);
    let u_e = rho_e.expectation(&h_eff_e);
    let u_se = rho_se.expectation(model.total_hamiltonian());

    let residual_commutator_s = commutator_residual(&coherence_s, &rho_s, &generator_s)?;
    let residual_commutator_e = commutator_residual(&coherence_e, &rho_e, &generator_e)?;

    Ok(EffectiveSplit {
        residual_constraint: trace_product(h_prime_i.matrix(), rho_se.matrix()).re.abs(),
        distance: h_prime.norm(),
        h_prime_s,
        h_prime_e,
        h_prime_i,
        h_eff_s,
        h_eff_e,
        u_interaction,
        residual_commutator_s,
        residual_commutator_e,
        u_s,
        u_e,
        u_se,
        diagonal,
        generator_s,
        generator_e,
        coherence_s,
        coherence_e,
        rho_s,
        rho_e,
    })
}

/// Mean-field / correlation decomposition of the system-side generator:
/// `GEN_S = -i [H''_S, rho_S] - i Tr_E [H_I, C]` with
/// `H''_S = Tr_E[H_I (1 ⊗ rho_E)]` and `C = rho_SE - rho_S ⊗ rho_E`.
#[derive(Clone, Debug)]
pub struct CorrelationSplit {
    pub mean_field_hamiltonian: HermitianOperator,
    pub mean_field: HermitianOperator,
    pub correlation_term: HermitianOperator,
    /// `C`; Hermitian and traceless but not a state.
    pub correlation: HermitianOperator,
}

pub fn correlation_split(model: &BipartiteModel, rho_se: &DensityOperator) -> Result<CorrelationSplit> {
    let dims = model.dims();
    if rho_se.dim() != dims.0 * dims.1 {
        return Err(Error::DimensionMismatch {
            context: "correlation_split",
            expected: dims.0 * dims.1,
            found: rho_se.dim(),
        });
    }
    let rho_s = partial_trace(rho_se.matrix(), Subsystem::System, dims)?;
    let rho_e = partial_trace(rho_se.matrix(), Subsystem::Environment, dims)?;
    let id_s = CMatrix::identity(dims.0, dims.0);
    let weighted = model.h_i().matrix() * tensor(&id_s, &rho_e);
    let mean_field_hamiltonian =
        HermitianOperator::from_hermitian_part(&partial_trace(&weighted, Subsystem::System, dims)?);
    let mean_field = mean_field_hamiltonian.liouvillian_action(&rho_s);
    let correlation =
        HermitianOperator::from_hermitian_part(&(rho_se.matrix() - tensor(&rho_s, &rho_e)));
    let c = commutator(model.h_i().matrix(), correlation.matrix());
    let correlation_term = HermitianOperator::from_hermitian_part(
        &(partial_trace(&c, Subsystem::System, dims)? * C64::new(0.0, -1.0)),
    );
    Ok(CorrelationSplit {
        mean_field_hamiltonian,
        mean_field,
        correlation_term,
        correlation,
    })
}

/// Which reading of `d_S`, `d_E` is fed to the printed closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DimensionReading {
    Dimension,
    Rank,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::{pauli, CVector};
    use crate::random;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn exchange(g: f64) -> HermitianOperator {
        let sp = pauli::raising();
        let sm = pauli::lowering();
        HermitianOperator::from_hermitian_part(&((tensor(&sp, &sm) + tensor(&sm, &sp)).scale(g)))
    }

    fn ket(amps: &[f64]) -> DensityOperator {
        let v = CVector::from_iterator(amps.len(), amps.iter().map(|&a| c(a)));
        DensityOperator::from_pure(&v, Tolerances::default()).unwrap()
    }

    fn qubit_model(h_i: HermitianOperator, rho: DensityOperator) -> BipartiteModel {
        BipartiteModel::new(pauli::z().scaled(0.5), pauli::z().scaled(0.5), h_i, rho).unwrap()
    }

    #[test]
    fn generator_vanishes_for_commuting_pair() {
        let h_i = pauli::z().tensor(&pauli::z());
        let rho = DensityOperator::from_probabilities(&[0.1, 0.2, 0.3, 0.4], Tolerances::default()).unwrap();
        let g = reduced_generator(&h_i, &rho, (2, 2), Subsystem::System).unwrap();
        assert!(g.frobenius_norm() < 1e-15);
    }

    #[test]
    fn generator_vanishes_for_product_basis_state_under_exchange() {
        let rho = ket(&[0.0, 1.0, 0.0, 0.0]);
        let g = reduced_generator(&exchange(0.7), &rho, (2, 2), Subsystem::System).unwrap();
        assert!(g.frobenius_norm() < 1e-15);
    }

    #[test]
    fn generator_for_bell_state_under_exchange() {
        // Direct 4x4 evaluation: [H_I, |psi><psi|] = 0 because |psi> is an
        // eigenvector of the exchange coupling, so the reduced generator is 0.
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let rho = ket(&[0.0, r, r, 0.0]);
        let g = reduced_generator(&exchange(1.0), &rho, (2, 2), Subsystem::System).unwrap();
        assert!(g.frobenius_norm() < 1e-15);
        assert!(g.trace().abs() < 1e-15);
    }

    #[test]
    fn generator_for_tilted_superposition_is_traceless_hermitian() {
        // |psi> = (|01> + i|10>)/sqrt(2): rho_SE has coherence i/2 between
        // |01> and |10>; -i Tr_E[H_I, rho] = diag(1, -1) * g by direct expansion.
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let v = CVector::from_vec(vec![c(0.0), c(r), C64::new(0.0, r), c(0.0)]);
        let rho = DensityOperator::from_pure(&v, Tolerances::default()).unwrap();
        let g = reduced_generator(&exchange(1.0), &rho, (2, 2), Subsystem::System).unwrap();
        let expected = HermitianOperator::from_diagonal(&[1.0, -1.0]);
        assert!((g.matrix() - expected.matrix()).norm() < 1e-15, "{}", g.matrix());
    }

    #[test]
    fn coherence_part_examples() {
        let rho = DensityOperator::from_probabilities(&[0.7, 0.3], Tolerances::default()).unwrap();
        let zero = coherence_part(&HermitianOperator::zeros(2), &rho).unwrap();
        assert!(zero.frobenius_norm() == 0.0);
        let diag = coherence_part(&HermitianOperator::from_diagonal(&[0.2, -0.2]), &rho).unwrap();
        assert!(diag.frobenius_norm() < 1e-16);

        let m = C64::new(0.3, -0.4);
        let mut gen = CMatrix::zeros(2, 2);
        gen[(0, 1)] = m;
        gen[(1, 0)] = m.conj();
        let gen = HermitianOperator::new(gen).unwrap();
        let x = coherence_part(&gen, &rho).unwrap();
        let expected = C64::new(0.0, 1.0) * m / (0.3 - 0.7);
        assert!((x.matrix()[(0, 1)] - expected).norm() < 1e-15);
        let induced = x.liouvillian_action(rho.matrix());
        assert!((induced.matrix() - gen.matrix()).norm() < 1e-15);
    }

    #[test]
    fn symmetric_qubit_instance() {
        let s = diagonal_parts(&[0.5, 0.5], &[0.5, 0.5], 2, 2, 1.0).unwrap();
        for x in s.a.iter().chain(s.b.iter()) {
            assert!((x - 0.5).abs() < 1e-15);
        }
        assert!(s.min_norm_fallback);
        let printed = printed_closed_form(&[0.5, 0.5], &[0.5, 0.5], 2, 2, 1.0).unwrap();
        for x in printed {
            assert!((x - 0.125).abs() < 1e-15);
        }
        let zero = diagonal_parts(&[0.5, 0.5], &[0.5, 0.5], 2, 2, 0.0).unwrap();
        assert!(zero.stacked().iter().all(|&x| x == 0.0));
        assert_eq!(zero.objective, 0.0);
        assert!(printed_closed_form(&[0.3, 0.7], &[1.0], 2, 2, 0.0).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pure_reduced_states_fix_a_unique_point() {
        // r_S = r_E = 1: a_1 = b_1 = U/2 by symmetry, F = (d_E + d_S + 2) U^2 / 4.
        let s = diagonal_parts(&[1.0], &[1.0], 2, 2, 2.0).unwrap();
        assert!(!s.min_norm_fallback);
        assert!((s.a[0] - 1.0).abs() < 1e-14 && (s.b[0] - 1.0).abs() < 1e-14);
        assert!((s.objective - 6.0).abs() < 1e-13);
    }

    #[test]
    fn diagonal_parts_rejects_bad_input() {
        assert!(diagonal_parts(&[0.5, 0.2], &[1.0], 2, 2, 1.0).is_err());
        assert!(diagonal_parts(&[0.5, 0.5], &[1.0], 1, 2, 1.0).is_err());
        assert!(diagonal_parts(&[1.0], &[1.0], 2, 2, f64::NAN).is_err());
    }

    #[test]
    fn zero_interaction_assembly() {
        let tol = Tolerances::default();
        let mut r = random::rng(4);
        let rs = random::density(&mut r, 2, tol);
        let re = random::density(&mut r, 3, tol);
        let rho = random::correlated_state(&mut r, &rs, &re, 0.5);
        let model = BipartiteModel::new(
            random::hermitian(&mut r, 2, 1.0),
            random::hermitian(&mut r, 3, 1.0),
            HermitianOperator::zeros(6),
            rho.clone(),
        )
        .unwrap();
        let split = assemble(&model, &rho).unwrap();
        assert!(split.h_prime_s.frobenius_norm() < 1e-15);
        assert!(split.h_prime_e.frobenius_norm() < 1e-15);
        assert!(split.h_prime_i.frobenius_norm() < 1e-15);
        assert!((split.u_s - rs.expectation(model.h_s())).abs() < 1e-14);
    }

    #[test]
    fn diagonal_coupling_absorbed_by_diagonal_parts() {
        let rho = DensityOperator::from_probabilities(&[0.12, 0.28, 0.18, 0.42], Tolerances::default())
            .unwrap(); // = diag(0.4, 0.6) ⊗ diag(0.3, 0.7)
        let h_i = pauli::z().tensor(&pauli::z());
        let model = qubit_model(h_i.clone(), rho.clone());
        let split = assemble(&model, &rho).unwrap();
        assert!(split.generator_s.frobenius_norm() < 1e-15);
        assert!(split.coherence_s.coherent.frobenius_norm() < 1e-15);
        // U_I = <z>_S <z>_E = (-0.2)(-0.4)
        assert!((split.u_interaction - 0.08).abs() < 1e-15);
        assert!(split.residual_constraint <= 1e-10);
        assert!(split.residual_additivity() <= 1e-12);
    }

    #[test]
    fn entangled_exchange_assembly_is_additive() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let rho = ket(&[0.0, r, r, 0.0]);
        let model = qubit_model(exchange(1.0), rho.clone());
        let split = assemble(&model, &rho).unwrap();
        assert!((split.u_interaction - 1.0).abs() < 1e-14);
        assert!(split.residual_additivity() <= 1e-9);
        assert!(split.residual_constraint <= 1e-9);
        // maximally mixed marginals: H'_S = H'_E = 1/2 * identity
        assert!((split.h_prime_s.matrix() - CMatrix::identity(2, 2).scale(0.5)).norm() < 1e-14);
        assert!((split.u_s - 0.5).abs() < 1e-14 && (split.u_e - 0.5).abs() < 1e-14);
        assert!(split.coherence_s.merged);
    }

    #[test]
    fn correlation_split_examples() {
        let tol = Tolerances::default();
        let mut r = random::rng(9);
        let rs = random::density(&mut r, 2, tol);
        let re = random::density(&mut r, 2, tol);
        let product = DensityOperator::new(tensor(rs.matrix(), re.matrix()), tol).unwrap();
        let h_i = random::hermitian(&mut r, 4, 1.0);
        let model = qubit_model(h_i.clone(), product.clone());
        let cs = correlation_split(&model, &product).unwrap();
        assert!(cs.correlation_term.frobenius_norm() < 1e-15);
        let full = reduced_generator(&h_i, &product, (2, 2), Subsystem::System).unwrap();
        assert!((cs.mean_field.matrix() - full.matrix()).norm() < 1e-15);

        // H_I = A ⊗ B with Tr(B rho_E) = 0
        let rho_e = DensityOperator::from_probabilities(&[0.5, 0.5], tol).unwrap();
        let rho = DensityOperator::new(tensor(rs.matrix(), rho_e.matrix()), tol).unwrap();
        let model = qubit_model(pauli::x().tensor(&pauli::z()), rho.clone());
        let cs = correlation_split(&model, &rho).unwrap();
        assert!(cs.mean_field_hamiltonian.frobenius_norm() < 1e-15);
        assert!(cs.mean_field.frobenius_norm() < 1e-15);
    }
}
