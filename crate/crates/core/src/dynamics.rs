//! Exact unitary propagation.

use crate::effective::BipartiteModel;
use crate::error::{Error, Result};
use crate::hermitian::{eig_named, CMatrix, DensityOperator, HermitianOperator, Subsystem, Tolerances, C64};

/// Uniform grid on `[t0, t1]` with step `dt`; the last step is shortened when
/// `dt` does not divide the interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidGrid(format!("dt must be > 0, got {dt}")));
        }
        if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::InvalidGrid(format!("need t1 > t0, got [{t0}, {t1}]")));
        }
        let ratio = (t1 - t0) / dt;
        let nearest = ratio.round();
        let steps = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as usize
        } else {
            ratio.ceil() as usize
        };
        Ok(TimeGrid {
            t0,
            t1,
            dt,
            steps: steps.max(1),
        })
    }

    /// Number of steps; there are `steps() + 1` grid points.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self, k: usize) -> f64 {
        if k >= self.steps {
            self.t1
        } else {
            self.t0 + k as f64 * self.dt
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    pub fn step_size(&self, k: usize) -> f64 {
        self.time(k + 1) - self.time(k)
    }

    /// Same interval with half the step.
    pub fn refined(&self) -> Self {
        TimeGrid::new(self.t0, self.t1, 0.5 * self.dt).expect("refining a valid grid")
    }
}

/// States at every grid point.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityOperator>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &DensityOperator {
        self.states.last().expect("trajectory has at least the initial state")
    }

    /// Reduced states on `keep` at every grid point.
    pub fn reduced(&self, keep: Subsystem, dims: (usize, usize)) -> Result<Vec<DensityOperator>> {
        self.states.iter().map(|s| s.reduce(keep, dims)).collect()
    }
}

/// `exp(-i H dt)` from the spectral decomposition of `H`.
pub fn propagator(h: &HermitianOperator, dt: f64) -> Result<CMatrix> {
    let spec = eig_named(h.matrix(), &Tolerances::default(), "step Hamiltonian")?;
    let phases: Vec<C64> = spec
        .eigenvalues()
        .iter()
        .map(|&l| C64::from_polar(1.0, -l * dt))
        .collect();
    let v = spec.eigenvectors();
    let mut scaled = v.clone();
    for (j, p) in phases.iter().enumerate() {
        { let mut c = scaled.column_mut(j); c *= *p; }
    }
    Ok(&scaled * v.adjoint())
}

fn conjugate(u: &CMatrix, rho: &CMatrix) -> CMatrix {
    u * rho * u.adjoint()
}

fn store(m: &CMatrix, tol: Tolerances, t: f64) -> Result<DensityOperator> {
    DensityOperator::new(crate::hermitian::hermitian_part(m), tol).map_err(|e| e.at_time(t))
}

/// Propagate `model.initial()` under the total Hamiltonian. One step
/// propagator is reused throughout (plus one for a shortened final step).
pub fn evolve_autonomous(model: &BipartiteModel, grid: &TimeGrid) -> Result<Trajectory> {
    let h = model.total_hamiltonian();
    let rho0 = model.initial();
    let tol = *rho0.tolerances();
    let u = propagator(h, grid.dt)?;
    let n = grid.steps();
    let last_h = grid.step_size(n - 1);
    let u_last = if (last_h - grid.dt).abs() > 1e-14 * grid.dt.max(1.0) {
        propagator(h, last_h)?
    } else {
        u.clone()
    };

    let times = grid.times();
    let mut states = Vec::with_capacity(n + 1);
    states.push(rho0.clone());
    let mut current = rho0.matrix().clone();
    for k in 0..n {
        let step = if k + 1 == n { &u_last } else { &u };
        current = conjugate(step, &current);
        states.push(store(&current, tol, times[k + 1])?);
    }
    Ok(Trajectory { times, states })
}

/// A time-dependent Hamiltonian.
pub trait Schedule {
    fn hamiltonian(&self, t: f64) -> HermitianOperator;
}

impl<F> Schedule for F
where
    F: Fn(f64) -> HermitianOperator + ?Sized,
{
    fn hamiltonian(&self, t: f64) -> HermitianOperator {
        self(t)
    }
}

/// Midpoint exponential stepping `U_k = exp(-i H(t_k + h_k/2) h_k)`.
pub fn evolve_driven<S: Schedule + ?Sized>(
    schedule: &S,
    rho0: &DensityOperator,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    let d = rho0.dim();
    let first = schedule.hamiltonian(grid.t0);
    if first.dim() != d {
        return Err(Error::DimensionMismatch {
            context: "driven schedule",
            expected: d,
            found: first.dim(),
        });
    }
    let tol = *rho0.tolerances();
    let times = grid.times();
    let mut states = Vec::with_capacity(times.len());
    states.push(rho0.clone());
    let mut current = rho0.matrix().clone();
    for k in 0..grid.steps() {
        let h = grid.step_size(k);
        let mid = schedule.hamiltonian(times[k] + 0.5 * h);
        if mid.dim() != d {
            return Err(Error::DimensionMismatch {
                context: "driven schedule",
                expected: d,
                found: mid.dim(),
            }
            .at_time(times[k] + 0.5 * h));
        }
        let u = propagator(&mid, h)?;
        current = conjugate(&u, &current);
        states.push(store(&current, tol, times[k + 1])?);
    }
    Ok(Trajectory { times, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::{pauli, tensor, CVector};

    #[test]
    fn grid_counts() {
        let g = TimeGrid::new(0.0, 10.0, 1e-3).unwrap();
        assert_eq!(g.steps(), 10_000);
        assert_eq!(g.times().len(), 10_001);
        assert_eq!(g.time(10_000), 10.0);
        let g = TimeGrid::new(0.0, 1.0, 0.3).unwrap();
        assert_eq!(g.steps(), 4);
        assert!((g.step_size(3) - 0.1).abs() < 1e-15);
        assert!(TimeGrid::new(0.0, 1.0, 0.0).is_err());
        assert!(TimeGrid::new(0.0, 1.0, -0.1).is_err());
        assert!(TimeGrid::new(1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn propagator_examples() {
        let u = propagator(&HermitianOperator::zeros(3), 0.7).unwrap();
        assert!((u - CMatrix::identity(3, 3)).norm() < 1e-15);
        let u = propagator(&pauli::z(), std::f64::consts::PI).unwrap();
        assert!((u + CMatrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn commuting_drive_leaves_state_fixed() {
        let tol = Tolerances::default();
        let rho0 = DensityOperator::from_probabilities(&[0.8, 0.2], tol).unwrap();
        let grid = TimeGrid::new(0.0, 2.0, 0.01).unwrap();
        let traj = evolve_driven(&|t: f64| pauli::z().scaled(t.sin()), &rho0, &grid).unwrap();
        for s in &traj.states {
            assert!((s.matrix() - rho0.matrix()).norm() < 1e-14);
        }
    }

    #[test]
    fn driven_rejects_wrong_dimension() {
        let tol = Tolerances::default();
        let rho0 = DensityOperator::maximally_mixed(2, tol).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 0.1).unwrap();
        let bad = |_t: f64| HermitianOperator::identity(3);
        assert!(matches!(
            evolve_driven(&bad, &rho0, &grid),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rabi_oscillation_of_exchange_pair() {
        let tol = Tolerances::default();
        let g = 0.8;
        let sp = pauli::raising();
        let sm = pauli::lowering();
        let h_i = HermitianOperator::from_hermitian_part(&(tensor(&sp, &sm) + tensor(&sm, &sp)).scale(g));
        let mut psi = CVector::zeros(4);
        psi[1] = C64::new(1.0, 0.0);
        let rho0 = DensityOperator::from_pure(&psi, tol).unwrap();
        let model = BipartiteModel::new(
            HermitianOperator::zeros(2),
            HermitianOperator::zeros(2),
            h_i,
            rho0,
        )
        .unwrap();
        let grid = TimeGrid::new(0.0, 3.0, 0.01).unwrap();
        let traj = evolve_autonomous(&model, &grid).unwrap();
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let p10 = s.matrix()[(2, 2)].re;
            assert!((p10 - (g * t).sin().powi(2)).abs() < 1e-12, "t={t}");
        }
    }
}
