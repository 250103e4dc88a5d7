//! Built-in Hamiltonians and initial states.

use std::sync::Arc;

use qsplit_core::hermitian::{pauli, tensor};
use qsplit_core::{
    eig_hermitian, random, BipartiteModel, CMatrix, CVector, DensityOperator, HermitianOperator,
    Tolerances, C64,
};

use crate::config::{InitialState, LoadedScenario, ModelSpec};
use crate::error::{CliError, Result};
use crate::matrix_io::read_matrix;

/// `(H_S, H_E, H_I)`.
pub type Bipartite = (HermitianOperator, HermitianOperator, HermitianOperator);

pub type SharedSchedule = Arc<dyn Fn(f64) -> HermitianOperator + Send + Sync>;

pub fn exchange(g: f64, omega_s: f64, omega_e: f64) -> Bipartite {
    let sp = pauli::raising();
    let sm = pauli::lowering();
    let h_i = (tensor(&sp, &sm) + tensor(&sm, &sp)).scale(g);
    (
        pauli::z().scaled(0.5 * omega_s),
        pauli::z().scaled(0.5 * omega_e),
        HermitianOperator::from_hermitian_part(&h_i),
    )
}

/// Cavity annihilation operator on `n_max + 1` Fock states.
pub fn annihilation(n_max: usize) -> CMatrix {
    let d = n_max + 1;
    let mut a = CMatrix::zeros(d, d);
    for k in 1..d {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// Atom (`|0>` excited, `|1>` ground) coupled to a truncated cavity mode:
/// `H_I = g (s+ ⊗ a + s- ⊗ a†)`.
pub fn jaynes_cummings(g: f64, n_max: usize, omega_atom: f64, omega_cavity: f64) -> Bipartite {
    let a = annihilation(n_max);
    let h_i = (tensor(&pauli::raising(), &a) + tensor(&pauli::lowering(), &a.adjoint())).scale(g);
    let number = a.adjoint() * &a;
    (
        pauli::z().scaled(0.5 * omega_atom),
        HermitianOperator::from_hermitian_part(&number.scale(omega_cavity)),
        HermitianOperator::from_hermitian_part(&h_i),
    )
}

pub fn random_hermitian(seed: u64, d_s: usize, d_e: usize, strength: f64) -> Bipartite {
    let mut rng = random::rng(seed);
    (
        random::hermitian(&mut rng, d_s, 1.0),
        random::hermitian(&mut rng, d_e, 1.0),
        random::hermitian(&mut rng, d_s * d_e, strength),
    )
}

pub fn driven_qubit(omega: f64, amplitude: f64, frequency: f64) -> SharedSchedule {
    let static_part = pauli::z().scaled(0.5 * omega);
    let drive = pauli::x().scaled(amplitude);
    Arc::new(move |t: f64| &static_part + &drive.scaled((frequency * t).cos()))
}

pub fn driven_explicit(h0: HermitianOperator, h1: HermitianOperator, frequency: f64, phase: f64) -> SharedSchedule {
    Arc::new(move |t: f64| &h0 + &h1.scaled((frequency * t + phase).cos()))
}

/// Gibbs state `exp(-beta H) / Z`.
pub fn thermal_state(h: &HermitianOperator, beta: f64, tol: Tolerances) -> Result<DensityOperator> {
    let spec = eig_hermitian(h, &tol)?;
    let lowest = *spec.eigenvalues().last().unwrap();
    let weights: Vec<f64> = spec
        .eigenvalues()
        .iter()
        .map(|l| (-beta * (l - lowest)).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let diag = HermitianOperator::from_diagonal(&weights.iter().map(|w| w / z).collect::<Vec<_>>());
    let m = spec.from_eigenbasis(diag.matrix());
    Ok(DensityOperator::new(qsplit_core::hermitian::hermitian_part(&m), tol)?)
}

/// Index of a basis label for factor dimensions `dims`.
pub fn basis_index(label: &str, dims: &[usize]) -> std::result::Result<usize, String> {
    let parts: Vec<usize> = if label.contains(',') {
        label
            .split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|_| format!("`{p}` is not an index")))
            .collect::<std::result::Result<_, _>>()?
    } else if dims.len() == 1 {
        vec![label
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("`{label}` is not an index"))?]
    } else {
        label
            .chars()
            .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(|| format!("`{c}` is not a digit")))
            .collect::<std::result::Result<_, _>>()?
    };
    if parts.len() != dims.len() {
        return Err(format!(
            "label `{label}` has {} indices, expected {}",
            parts.len(),
            dims.len()
        ));
    }
    let mut index = 0;
    for (p, d) in parts.iter().zip(dims) {
        if p >= d {
            return Err(format!("index {p} out of range for dimension {d}"));
        }
        index = index * d + p;
    }
    Ok(index)
}

fn basis_state(dim: usize, index: usize, tol: Tolerances) -> Result<DensityOperator> {
    let mut v = CVector::zeros(dim);
    v[index] = C64::new(1.0, 0.0);
    Ok(DensityOperator::from_pure(&v, tol)?)
}

/// What a scenario evolves.
#[derive(Clone)]
pub enum System {
    Bipartite(BipartiteModel),
    Driven {
        schedule: SharedSchedule,
        initial: DensityOperator,
    },
}

impl System {
    pub fn initial(&self) -> &DensityOperator {
        match self {
            System::Bipartite(m) => m.initial(),
            System::Driven { initial, .. } => initial,
        }
    }

    /// `(d_S, d_E)`; driven systems report `(d, 1)`.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            System::Bipartite(m) => m.dims(),
            System::Driven { initial, .. } => (initial.dim(), 1),
        }
    }

    /// Time-dependent Hamiltonian of the whole system.
    pub fn schedule(&self) -> SharedSchedule {
        match self {
            System::Bipartite(m) => {
                let h = m.total_hamiltonian().clone();
                Arc::new(move |_t: f64| h.clone())
            }
            System::Driven { schedule, .. } => schedule.clone(),
        }
    }
}

fn explicit_operator(scenario: &LoadedScenario, field: &str, path: &std::path::Path) -> Result<HermitianOperator> {
    let full = scenario.resolve(path);
    let m = read_matrix(&full)?;
    HermitianOperator::with_tolerance(m, scenario.config.tolerances.hermiticity)
        .map_err(|e| CliError::config(&scenario.path, field, format!("{}: {e}", full.display())))
}

fn check_dims(scenario: &LoadedScenario, field: &str, found: usize, expected: usize) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(CliError::config(
            &scenario.path,
            field,
            format!("dimension {found}, expected {expected}"),
        ))
    }
}

pub fn build(scenario: &LoadedScenario) -> Result<System> {
    let c = &scenario.config;
    let tol = c.tolerances;
    let bipartite = match &c.model {
        ModelSpec::TwoQubitExchange { g, omega_s, omega_e } => Some(exchange(*g, *omega_s, *omega_e)),
        ModelSpec::JaynesCummingsTruncated {
            g,
            n_max,
            omega_atom,
            omega_cavity,
        } => Some(jaynes_cummings(*g, *n_max, *omega_atom, *omega_cavity)),
        ModelSpec::RandomHermitian { seed, d_s, d_e, strength } => {
            Some(random_hermitian(*seed, *d_s, *d_e, *strength))
        }
        ModelSpec::ExplicitMatrices { h_s, h_e, h_i } => {
            let h_s = explicit_operator(scenario, "model.h_s", h_s)?;
            let h_e = explicit_operator(scenario, "model.h_e", h_e)?;
            let h_i = explicit_operator(scenario, "model.h_i", h_i)?;
            check_dims(scenario, "model.h_i", h_i.dim(), h_s.dim() * h_e.dim())?;
            Some((h_s, h_e, h_i))
        }
        ModelSpec::DrivenQubit { .. } | ModelSpec::DrivenExplicit { .. } => None,
    };

    match bipartite {
        Some((h_s, h_e, h_i)) => {
            let dims = (h_s.dim(), h_e.dim());
            let total = &(&h_s.tensor(&HermitianOperator::identity(dims.1))
                + &HermitianOperator::identity(dims.0).tensor(&h_e))
                + &h_i;
            let initial = bipartite_initial(scenario, dims, &h_s, &h_e, &total, tol)?;
            Ok(System::Bipartite(BipartiteModel::new(h_s, h_e, h_i, initial)?))
        }
        None => {
            let schedule = match &c.model {
                ModelSpec::DrivenQubit {
                    omega,
                    amplitude,
                    frequency,
                } => driven_qubit(*omega, *amplitude, *frequency),
                ModelSpec::DrivenExplicit { h0, h1, frequency, phase } => {
                    let h0 = explicit_operator(scenario, "model.h0", h0)?;
                    let h1 = explicit_operator(scenario, "model.h1", h1)?;
                    check_dims(scenario, "model.h1", h1.dim(), h0.dim())?;
                    driven_explicit(h0, h1, *frequency, *phase)
                }
                _ => unreachable!("bipartite models handled above"),
            };
            let h_start = schedule(c.grid.t0);
            let initial = driven_initial(scenario, &h_start, tol)?;
            Ok(System::Driven { schedule, initial })
        }
    }
}

fn bipartite_initial(
    scenario: &LoadedScenario,
    dims: (usize, usize),
    h_s: &HermitianOperator,
    h_e: &HermitianOperator,
    total: &HermitianOperator,
    tol: Tolerances,
) -> Result<DensityOperator> {
    let path = &scenario.path;
    match &scenario.config.initial_state {
        InitialState::Basis { label } => {
            let index = basis_index(label, &[dims.0, dims.1])
                .map_err(|m| CliError::config(path, "initial_state.label", m))?;
            basis_state(dims.0 * dims.1, index, tol)
        }
        InitialState::Bell => {
            if dims != (2, 2) {
                return Err(CliError::config(
                    path,
                    "initial_state.type",
                    format!("bell needs two qubits, model is {}x{}", dims.0, dims.1),
                ));
            }
            let mut v = CVector::zeros(4);
            v[1] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            v[2] = v[1];
            Ok(DensityOperator::from_pure(&v, tol)?)
        }
        InitialState::ProductOfThermal { beta_s, beta_e } => {
            let rs = thermal_state(h_s, *beta_s, tol)?;
            let re = thermal_state(h_e, *beta_e, tol)?;
            Ok(DensityOperator::new(tensor(rs.matrix(), re.matrix()), tol)?)
        }
        InitialState::Thermal { beta } => thermal_state(total, *beta, tol),
        InitialState::Random { seed, correlation } => {
            let mut rng = random::rng(*seed);
            let rs = random::density(&mut rng, dims.0, tol);
            let re = random::density(&mut rng, dims.1, tol);
            Ok(random::correlated_state(&mut rng, &rs, &re, *correlation))
        }
        InitialState::Explicit { file } => explicit_state(scenario, file, dims.0 * dims.1, tol),
    }
}

fn driven_initial(scenario: &LoadedScenario, h: &HermitianOperator, tol: Tolerances) -> Result<DensityOperator> {
    let path = &scenario.path;
    let d = h.dim();
    match &scenario.config.initial_state {
        InitialState::Basis { label } => {
            let index = basis_index(label, &[d]).map_err(|m| CliError::config(path, "initial_state.label", m))?;
            basis_state(d, index, tol)
        }
        InitialState::Thermal { beta } => thermal_state(h, *beta, tol),
        InitialState::Random { seed, .. } => {
            let mut rng = random::rng(*seed);
            Ok(random::density(&mut rng, d, tol))
        }
        InitialState::Explicit { file } => explicit_state(scenario, file, d, tol),
        InitialState::Bell | InitialState::ProductOfThermal { .. } => Err(CliError::config(
            path,
            "initial_state.type",
            "needs a bipartite model",
        )),
    }
}

fn explicit_state(scenario: &LoadedScenario, file: &std::path::Path, dim: usize, tol: Tolerances) -> Result<DensityOperator> {
    let full = scenario.resolve(file);
    let m = read_matrix(&full)?;
    check_dims(scenario, "initial_state.file", m.nrows(), dim)?;
    DensityOperator::new(m, tol)
        .map_err(|e| CliError::config(&scenario.path, "initial_state.file", format!("{}: {e}", full.display())))
}

/// One line per built-in model for `list-models`.
pub fn catalogue() -> Vec<(&'static str, &'static str, &'static str)> {
    vec![
        (
            "two-qubit-exchange",
            "open-subsystem",
            "g, omega_s = 1, omega_e = 1; H_I = g (s+ ⊗ s- + s- ⊗ s+)",
        ),
        (
            "jaynes-cummings-truncated",
            "open-subsystem",
            "g, n_max, omega_atom = 1, omega_cavity = 1; H_I = g (s+ ⊗ a + s- ⊗ a†)",
        ),
        (
            "random-hermitian",
            "open-subsystem",
            "seed, d_s, d_e, strength; seeded random H_S, H_E, H_I",
        ),
        (
            "explicit-matrices",
            "open-subsystem",
            "h_s, h_e, h_i: matrix files of `re im` pairs",
        ),
        (
            "driven-qubit",
            "closed-driven",
            "omega = 1, amplitude, frequency; H(t) = (omega/2) sz + amplitude cos(frequency t) sx",
        ),
        (
            "driven-explicit",
            "closed-driven",
            "h0, h1, frequency, phase = 0; H(t) = h0 + cos(frequency t + phase) h1",
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels() {
        assert_eq!(basis_index("01", &[2, 2]), Ok(1));
        assert_eq!(basis_index("10", &[2, 2]), Ok(2));
        assert_eq!(basis_index("0,3", &[2, 4]), Ok(3));
        assert_eq!(basis_index("1,2", &[2, 4]), Ok(6));
        assert_eq!(basis_index("2", &[3]), Ok(2));
        assert!(basis_index("2", &[2, 2]).is_err());
        assert!(basis_index("0,4", &[2, 4]).is_err());
        assert!(basis_index("0x", &[2, 2]).is_err());
    }

    #[test]
    fn jc_conserves_excitations() {
        let (h_s, h_e, h_i) = jaynes_cummings(0.7, 3, 1.0, 1.0);
        let n_atom = HermitianOperator::from_diagonal(&[1.0, 0.0]);
        let n_cav = HermitianOperator::from_hermitian_part(&(annihilation(3).adjoint() * annihilation(3)));
        let n = &n_atom.tensor(&HermitianOperator::identity(4)) + &HermitianOperator::identity(2).tensor(&n_cav);
        let total = &(&h_s.tensor(&HermitianOperator::identity(4)) + &HermitianOperator::identity(2).tensor(&h_e)) + &h_i;
        let c = total.matrix() * n.matrix() - n.matrix() * total.matrix();
        assert!(c.norm() < 1e-14);
    }

    #[test]
    fn thermal_qubit_populations() {
        let rho = thermal_state(&pauli::z().scaled(0.5), 2.0, Tolerances::default()).unwrap();
        let p_up = 1.0 / (1.0 + 2f64.exp());
        assert!((rho.matrix()[(0, 0)].re - p_up).abs() < 1e-14);
    }
}
