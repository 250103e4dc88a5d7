//! Internal energy, heat and work time series.
//!
//! Two modes:
//!
//! * closed-driven: a single system under `H(t)`; `U = Tr(rho H_bar)` with
//!   `H_bar` the commuting part of `H(t)` relative to `rho(t)`,
//!   `dQ = Tr(d rho H_bar)`, `dW = Tr(rho d H_bar)`;
//! * open-subsystem: the system half of an autonomous bipartite pair;
//!   `U_S = Tr(rho_S H_eff_S)`, heat rate from the block-diagonal remainder of
//!   the reduced generator, work rate `Tr(rho_S dH'_S/dt)`.
//!
//! Rates are sampled on the trajectory grid, derivatives use second-order
//! three-point differences (one-sided at the ends) and cumulative heat and
//! work are trapezoidal. The work rate is never obtained as `dU - dQ`, so the
//! first-law residual is an independent check.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Schedule, Trajectory};
use crate::effective::{assemble_from_reduced, BipartiteModel};
use crate::error::{Error, Result};
use crate::hermitian::{trace_product, CMatrix, SpectralDecomposition, Subsystem};
use crate::split::pinch;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LedgerMode {
    ClosedDriven,
    OpenSubsystem,
}

/// One grid point of the ledger. In closed-driven mode `u_s` is
/// `Tr(rho H_bar)`, `u_se` is `Tr(rho H)`, `u_e` and `u_interaction` are zero,
/// `distance_d` is `||H_perp||` and `residual_total` is the cumulative drift
/// `|U(t) - U(t0) - Q(t) - W(t)|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermoSample {
    pub t: f64,
    pub u_s: f64,
    pub u_e: f64,
    pub u_se: f64,
    pub qdot_s: f64,
    pub wdot_s: f64,
    pub q_s: f64,
    pub w_s: f64,
    /// `|dU_S - (dQ_S + dW_S)|` over the step ending here (0 at the first sample).
    pub residual_first_law: f64,
    pub residual_conservation: f64,
    pub residual_total: f64,
    pub distance_d: f64,
    pub u_interaction: f64,
    /// `|Tr(H'_I rho_SE)|` (open mode).
    pub residual_constraint: f64,
    /// A degeneracy cluster of `rho_S` holds several eigenvalues.
    pub cluster_merge_flag: bool,
    pub rank_s: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThermoTrajectory {
    pub mode: LedgerMode,
    pub samples: Vec<ThermoSample>,
    /// Per-level heat rates `GEN~_ii <phi~_i|H_eff|phi~_i>` (open mode), columns
    /// following eigenbranches across steps by maximum overlap.
    pub level_heat: Vec<Vec<f64>>,
}

impl ThermoTrajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&ThermoSample> {
        self.samples.last()
    }
}

/// Weights `(index, w)` of a three-point derivative at `k` on a possibly
/// non-uniform grid.
pub(crate) fn derivative_weights(times: &[f64], k: usize) -> Vec<(usize, f64)> {
    let n = times.len();
    match n {
        0 | 1 => vec![],
        2 => {
            let h = times[1] - times[0];
            vec![(0, -1.0 / h), (1, 1.0 / h)]
        }
        _ if k == 0 => {
            let h1 = times[1] - times[0];
            let h2 = times[2] - times[1];
            vec![
                (0, -(2.0 * h1 + h2) / (h1 * (h1 + h2))),
                (1, (h1 + h2) / (h1 * h2)),
                (2, -h1 / (h2 * (h1 + h2))),
            ]
        }
        _ if k == n - 1 => {
            let h1 = times[n - 1] - times[n - 2];
            let h2 = times[n - 2] - times[n - 3];
            vec![
                (n - 1, (2.0 * h1 + h2) / (h1 * (h1 + h2))),
                (n - 2, -(h1 + h2) / (h1 * h2)),
                (n - 3, h1 / (h2 * (h1 + h2))),
            ]
        }
        _ => {
            let h1 = times[k] - times[k - 1];
            let h2 = times[k + 1] - times[k];
            vec![
                (k - 1, -h2 / (h1 * (h1 + h2))),
                (k, (h2 - h1) / (h1 * h2)),
                (k + 1, h1 / (h2 * (h1 + h2))),
            ]
        }
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::InvalidArgument(
            "ledger needs at least two samples".into(),
        ));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "trajectory times must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Trapezoidal accumulation and first-law residuals, shared by both modes.
fn accumulate(times: &[f64], u: &[f64], qdot: &[f64], wdot: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(times.len());
    let (mut q, mut w) = (0.0, 0.0);
    out.push((0.0, 0.0, 0.0));
    for k in 1..times.len() {
        let h = times[k] - times[k - 1];
        let dq = 0.5 * h * (qdot[k - 1] + qdot[k]);
        let dw = 0.5 * h * (wdot[k - 1] + wdot[k]);
        q += dq;
        w += dw;
        let residual = ((u[k] - u[k - 1]) - (dq + dw)).abs();
        out.push((q, w, residual));
    }
    out
}

/// Closed-system ledger for a trajectory of `schedule`.
pub fn closed_ledger<S: Schedule + ?Sized>(traj: &Trajectory, schedule: &S) -> Result<ThermoTrajectory> {
    let times = &traj.times;
    check_times(times)?;
    if times.len() != traj.states.len() {
        return Err(Error::InvalidArgument(
            "trajectory times and states are misaligned".into(),
        ));
    }
    let n = times.len();
    let mut h_bar: Vec<CMatrix> = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut u_full = Vec::with_capacity(n);
    let mut dist = Vec::with_capacity(n);
    for (k, rho) in traj.states.iter().enumerate() {
        let h = schedule.hamiltonian(times[k]);
        if h.dim() != rho.dim() {
            return Err(Error::DimensionMismatch {
                context: "closed ledger schedule",
                expected: rho.dim(),
                found: h.dim(),
            }
            .at_time(times[k]));
        }
        let bar = pinch(h.matrix(), rho.spectrum())?;
        u.push(trace_product(rho.matrix(), &bar).re);
        u_full.push(rho.expectation(&h));
        dist.push((h.matrix() - &bar).norm());
        h_bar.push(bar);
    }
    let mut qdot = vec![0.0; n];
    let mut wdot = vec![0.0; n];
    for k in 0..n {
        for (m, w) in derivative_weights(times, k) {
            qdot[k] += w * trace_product(traj.states[m].matrix(), &h_bar[k]).re;
            wdot[k] += w * trace_product(traj.states[k].matrix(), &h_bar[m]).re;
        }
    }
    let acc = accumulate(times, &u, &qdot, &wdot);
    let samples = (0..n)
        .map(|k| {
            let (q, w, res) = acc[k];
            let rho = &traj.states[k];
            ThermoSample {
                t: times[k],
                u_s: u[k],
                u_e: 0.0,
                u_se: u_full[k],
                qdot_s: qdot[k],
                wdot_s: wdot[k],
                q_s: q,
                w_s: w,
                residual_first_law: res,
                residual_conservation: (u[k] - u_full[k]).abs(),
                residual_total: (u[k] - u[0] - q - w).abs(),
                distance_d: dist[k],
                u_interaction: 0.0,
                residual_constraint: 0.0,
                cluster_merge_flag: rho.spectrum().has_degenerate_cluster(),
                rank_s: rho.spectrum().rank(),
            }
        })
        .collect();
    Ok(ThermoTrajectory {
        mode: LedgerMode::ClosedDriven,
        samples,
        level_heat: Vec::new(),
    })
}

/// Open-subsystem ledger for a trajectory produced by
/// [`evolve_autonomous`](crate::dynamics::evolve_autonomous) on `model`.
pub fn open_ledger(traj: &Trajectory, model: &BipartiteModel) -> Result<ThermoTrajectory> {
    open_ledger_with(traj, model, |_, _, spec| spec.clone())
}

/// As [`open_ledger`], with `rebasis(k, side, spectrum)` applied to the
/// eigendecomposition of each reduced state before assembly. Any valid
/// re-choice (rephasing, rotation inside clusters) must leave the outputs
/// unchanged.
pub fn open_ledger_with<F>(traj: &Trajectory, model: &BipartiteModel, rebasis: F) -> Result<ThermoTrajectory>
where
    F: Fn(usize, Subsystem, &SpectralDecomposition) -> SpectralDecomposition,
{
    let times = &traj.times;
    check_times(times)?;
    let n = times.len();
    let dims = model.dims();

    let mut h_prime: Vec<CMatrix> = Vec::with_capacity(n);
    let mut rho_s: Vec<CMatrix> = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    let mut level_heat = Vec::with_capacity(n);
    let mut branches: Option<(CMatrix, Vec<usize>)> = None;

    for (k, state) in traj.states.iter().enumerate() {
        let t = times[k];
        let with_time = |e: Error| e.at_time(t);
        let rs = state.reduce(Subsystem::System, dims).map_err(with_time)?;
        let re = state.reduce(Subsystem::Environment, dims).map_err(with_time)?;
        let rs = rs
            .with_spectrum(rebasis(k, Subsystem::System, rs.spectrum()))
            .map_err(with_time)?;
        let re = re
            .with_spectrum(rebasis(k, Subsystem::Environment, re.spectrum()))
            .map_err(with_time)?;
        let split = assemble_from_reduced(model, state, rs, re).map_err(with_time)?;

        let basis = split.coherence_s.basis.eigenvectors().clone();
        let order: Vec<usize> = match &branches {
            None => (0..basis.ncols()).collect(),
            Some((prev, order)) => {
                let matching = match_branches(prev, &basis);
                order.iter().map(|&i| matching[i]).collect()
            }
        };
        let rotated = split.coherence_s.basis.to_eigenbasis(split.h_eff_s.matrix());
        level_heat.push(
            order
                .iter()
                .map(|&i| split.coherence_s.remainder_diagonal[i] * rotated[(i, i)].re)
                .collect(),
        );
        branches = Some((basis, order));

        rows.push((
            split.u_s,
            split.u_e,
            split.u_se,
            split.heat_rate(Subsystem::System),
            split.distance,
            split.u_interaction,
            split.residual_constraint,
            split.coherence_s.merged,
            split.rho_s.spectrum().rank(),
        ));
        rho_s.push(split.rho_s.matrix().clone());
        h_prime.push(split.h_prime_s.matrix().clone());
    }

    let u: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let qdot: Vec<f64> = rows.iter().map(|r| r.3).collect();
    let wdot: Vec<f64> = (0..n)
        .map(|k| {
            derivative_weights(times, k)
                .into_iter()
                .map(|(m, w)| w * trace_product(&rho_s[k], &h_prime[m]).re)
                .sum()
        })
        .collect();
    let acc = accumulate(times, &u, &qdot, &wdot);
    let u_se0 = rows[0].2;
    let samples = (0..n)
        .map(|k| {
            let (u_s, u_e, u_se, qd, dist, u_i, constraint, merged, rank) = rows[k];
            let (q, w, res) = acc[k];
            ThermoSample {
                t: times[k],
                u_s,
                u_e,
                u_se,
                qdot_s: qd,
                wdot_s: wdot[k],
                q_s: q,
                w_s: w,
                residual_first_law: res,
                residual_conservation: (u_s + u_e - u_se).abs(),
                residual_total: (u_se - u_se0).abs(),
                distance_d: dist,
                u_interaction: u_i,
                residual_constraint: constraint,
                cluster_merge_flag: merged,
                rank_s: rank,
            }
        })
        .collect();
    Ok(ThermoTrajectory {
        mode: LedgerMode::OpenSubsystem,
        samples,
        level_heat,
    })
}

/// For each column of `prev`, the column of `next` with maximum overlap,
/// assigned greedily by decreasing `|<prev_i|next_j>|^2`.
pub fn match_branches(prev: &CMatrix, next: &CMatrix) -> Vec<usize> {
    let n = prev.ncols();
    let overlaps = prev.adjoint() * next;
    let mut pairs: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (overlaps[(i, j)].norm_sqr(), i, j))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut assigned = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (_, i, j) in pairs {
        if assigned[i] == usize::MAX && !taken[j] {
            assigned[i] = j;
            taken[j] = true;
        }
    }
    assigned
}

/// Summary of first-law closure and conservation for one ledger.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstLawReport {
    pub samples: usize,
    /// Largest per-step residual `|dU - dQ - dW|`.
    pub max_step_residual: f64,
    /// Largest per-step residual divided by the step length.
    pub max_rate_residual: f64,
    /// Sum of per-step residuals over the trajectory.
    pub integrated_residual: f64,
    pub max_conservation: f64,
    pub max_total: f64,
    pub max_constraint: f64,
    pub final_heat: f64,
    pub final_work: f64,
    pub merged_samples: usize,
}

pub fn first_law_report(thermo: &ThermoTrajectory) -> Result<FirstLawReport> {
    let s = &thermo.samples;
    if s.len() < 2 {
        return Err(Error::InvalidArgument(
            "first-law report needs at least two samples".into(),
        ));
    }
    let max = |f: &dyn Fn(&ThermoSample) -> f64| s.iter().map(f).fold(0.0f64, f64::max);
    let max_rate_residual = s
        .windows(2)
        .map(|w| w[1].residual_first_law / (w[1].t - w[0].t))
        .fold(0.0f64, f64::max);
    let last = s.last().unwrap();
    Ok(FirstLawReport {
        samples: s.len(),
        max_step_residual: max(&|x| x.residual_first_law),
        max_rate_residual,
        integrated_residual: s.iter().map(|x| x.residual_first_law).sum(),
        max_conservation: max(&|x| x.residual_conservation),
        max_total: max(&|x| x.residual_total),
        max_constraint: max(&|x| x.residual_constraint),
        final_heat: last.q_s,
        final_work: last.w_s,
        merged_samples: s.iter().filter(|x| x.cluster_merge_flag).count(),
    })
}

/// `log2(coarse / fine)` for a pair of positive error measures from grids
/// `dt` and `dt / 2`; `None` when either is not strictly positive.
pub fn convergence_order(coarse: f64, fine: f64) -> Option<f64> {
    (coarse > 0.0 && fine > 0.0).then(|| (coarse / fine).log2())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_weights_are_exact_for_quadratics() {
        let times = [0.0, 0.1, 0.25, 0.3, 0.45];
        let f = |t: f64| 3.0 * t * t - t + 2.0;
        let df = |t: f64| 6.0 * t - 1.0;
        for k in 0..times.len() {
            let est: f64 = derivative_weights(&times, k)
                .into_iter()
                .map(|(m, w)| w * f(times[m]))
                .sum();
            assert!((est - df(times[k])).abs() < 1e-12, "k={k}: {est}");
        }
    }

    #[test]
    fn branch_matching_follows_swaps() {
        let a = CMatrix::identity(3, 3);
        let mut b = CMatrix::zeros(3, 3);
        b[(0, 1)] = 1.0.into();
        b[(1, 0)] = 1.0.into();
        b[(2, 2)] = 1.0.into();
        assert_eq!(match_branches(&a, &b), vec![1, 0, 2]);
    }

    #[test]
    fn convergence_order_of_quartered_error() {
        assert!((convergence_order(4e-6, 1e-6).unwrap() - 2.0).abs() < 1e-12);
        assert!(convergence_order(0.0, 1.0).is_none());
    }
}
