//! Seeded random instances: Hermitian operators, unitaries, spectra on the
//! simplex and states with prescribed marginals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::hermitian::{
    partial_trace, tensor, CMatrix, DensityOperator, HermitianOperator, Subsystem, Tolerances, C64,
};

pub type InstanceRng = ChaCha8Rng;

pub fn rng(seed: u64) -> InstanceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// GUE-like Hermitian matrix, spectrum of order `scale`.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> HermitianOperator {
    let g = gaussian_matrix(rng, dim, dim);
    let h = (&g + g.adjoint()).scale(0.5 * scale / (dim as f64).sqrt());
    HermitianOperator::from_hermitian_part(&h)
}

/// Haar-distributed unitary (QR of a Ginibre matrix with the R-phase fixed).
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let g = gaussian_matrix(rng, dim, dim);
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            { let mut c = q.column_mut(j); c *= phase; }
        }
    }
    q
}

/// Symmetric Dirichlet draw of length `n`, i.e. a point on the simplex.
pub fn dirichlet<R: Rng + ?Sized>(rng: &mut R, n: usize, alpha: f64) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha > 0");
    loop {
        let draws: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 {
            return draws.into_iter().map(|x| x / total).collect();
        }
    }
}

/// State with the given eigenvalues in a Haar-random eigenbasis.
pub fn density_with_spectrum<R: Rng + ?Sized>(
    rng: &mut R,
    eigenvalues: &[f64],
    tol: Tolerances,
) -> DensityOperator {
    let u = unitary(rng, eigenvalues.len());
    let d = HermitianOperator::from_diagonal(eigenvalues).into_matrix();
    let m = &u * d * u.adjoint();
    DensityOperator::new(crate::hermitian::hermitian_part(&m), tol)
        .expect("valid spectrum yields a valid state")
}

/// Full-rank random state with Dirichlet(1) spectrum.
pub fn density<R: Rng + ?Sized>(rng: &mut R, dim: usize, tol: Tolerances) -> DensityOperator {
    let spectrum = dirichlet(rng, dim, 1.0);
    density_with_spectrum(rng, &spectrum, tol)
}

/// `rho_S ⊗ rho_E + C` where `C` is a random Hermitian correlation with
/// vanishing partial traces, so both marginals are exactly the inputs. The
/// correlation is scaled to `strength` times the largest amplitude that keeps
/// the state positive. Both marginals must be full rank for `strength > 0`.
pub fn correlated_state<R: Rng + ?Sized>(
    rng: &mut R,
    rho_s: &DensityOperator,
    rho_e: &DensityOperator,
    strength: f64,
) -> DensityOperator {
    let (ds, de) = (rho_s.dim(), rho_e.dim());
    let tol = *rho_s.tolerances();
    let product = tensor(rho_s.matrix(), rho_e.matrix());
    let a = hermitian(rng, ds * de, 1.0).into_matrix();
    let a_s = partial_trace(&a, Subsystem::System, (ds, de)).unwrap();
    let a_e = partial_trace(&a, Subsystem::Environment, (ds, de)).unwrap();
    let tr = a.trace();
    let id_s = CMatrix::identity(ds, ds);
    let id_e = CMatrix::identity(de, de);
    let n = (ds * de) as f64;
    let corr = &a - tensor(&a_s, &id_e).unscale(de as f64) - tensor(&id_s, &a_e).unscale(ds as f64)
        + CMatrix::identity(ds * de, ds * de) * (tr / n);
    let lambda_min = rho_s.spectrum().eigenvalues().last().unwrap()
        * rho_e.spectrum().eigenvalues().last().unwrap();
    // operator norm bounded by the Frobenius norm
    let norm = corr.norm();
    let scale = if norm > 0.0 {
        strength * lambda_min / norm
    } else {
        0.0
    };
    let m = product + corr.scale(scale);
    DensityOperator::new(crate::hermitian::hermitian_part(&m), tol)
        .expect("correlation bounded by the smallest product eigenvalue")
}

/// Uniform phases in `[0, 2 pi)`.
pub fn phases<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect()
}
