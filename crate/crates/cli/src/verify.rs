//! `verify`: primary path against the independent oracles on seeded random
//! instances.

use qsplit_core::effective::{
    assemble_from_reduced, printed_closed_form, reduced_generator,
};
use qsplit_core::hermitian::Subsystem;
use qsplit_core::oracle::{
    brute_reduced_generator, generator_projection, kernel_variant_solve, kkt_solve, max_elementwise,
    numeric_diagonal_parts, InstanceDescriptor, OracleReport,
};
use qsplit_core::random::{self, InstanceRng};
use qsplit_core::split::project_commuting_in;
use qsplit_core::{
    assemble, build_generators, diagonal_parts, lie_split, pinch, BipartiteModel, DensityOperator,
    Tolerances,
};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    pub count: usize,
    /// Upper bounds on `(d_S, d_E)`; each instance draws dimensions in
    /// `2..=max` (or 1 when the bound is 1).
    pub max_dims: (usize, usize),
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            count: 100,
            max_dims: (4, 4),
            seed: 0,
        }
    }
}

pub fn parse_dims(text: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("`{text}` is not of the form dSxdE"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("`{a}` is not a dimension"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("`{b}` is not a dimension"))?;
    if a == 0 || b == 0 || a > 16 || b > 16 {
        return Err(format!("dimensions must be in 1..=16, got {a}x{b}"));
    }
    Ok((a, b))
}

/// Comparator line for `d_S = d_E = 2`, both reduced states maximally mixed:
/// primary is the printed closed form (`u/8`), oracle the exact minimizer
/// (`u/2`). Informational.
pub fn symmetric_comparator(u: f64) -> Result<OracleReport> {
    let lam = [0.5, 0.5];
    let printed = printed_closed_form(&lam, &lam, 2, 2, u)?;
    let exact = kkt_solve(&lam, &lam, 2, 2, u)?;
    Ok(OracleReport::compare(
        InstanceDescriptor {
            seed: None,
            dims: (2, 2),
            model: "symmetric-qubit-pair".into(),
        },
        "closed-form-vs-minimizer",
        printed,
        exact.a,
        1e-10,
        false,
    )
    .with_note(format!("U_I = {u}; printed closed form against the exact KKT optimum")))
}

fn draw_dim(rng: &mut InstanceRng, max: usize) -> usize {
    if max <= 2 {
        max
    } else {
        rng.random_range(2..=max)
    }
}

/// The random instance for one seed. Every fifth instance forces a
/// near-degenerate pair in the system spectrum when `d_S >= 3`; odd seeds
/// use a pure joint state so that reduced states can be rank deficient.
fn instance(seed: u64, max_dims: (usize, usize)) -> (BipartiteModel, DensityOperator, bool) {
    let tol = Tolerances::default();
    let mut rng = random::rng(seed);
    let ds = draw_dim(&mut rng, max_dims.0);
    let de = draw_dim(&mut rng, max_dims.1);
    let h_s = random::hermitian(&mut rng, ds, 1.0);
    let h_e = random::hermitian(&mut rng, de, 1.0);
    let h_i = random::hermitian(&mut rng, ds * de, 0.7);
    let near_degenerate = seed % 5 == 4 && ds >= 3;
    let rho = if near_degenerate {
        let mut spectrum = random::dirichlet(&mut rng, ds, 1.0);
        spectrum.sort_by(|a, b| b.total_cmp(a));
        let pair = 0.5 * (spectrum[0] + spectrum[1]);
        spectrum[0] = pair + 5e-13;
        spectrum[1] = pair - 5e-13;
        let rs = random::density_with_spectrum(&mut rng, &spectrum, tol);
        let re = random::density(&mut rng, de, tol);
        random::correlated_state(&mut rng, &rs, &re, 0.8)
    } else if seed % 2 == 1 {
        let mut spectrum = vec![0.0; ds * de];
        spectrum[0] = 1.0;
        random::density_with_spectrum(&mut rng, &spectrum, tol)
    } else {
        let rs = random::density(&mut rng, ds, tol);
        let re = random::density(&mut rng, de, tol);
        random::correlated_state(&mut rng, &rs, &re, 0.9)
    };
    let model = BipartiteModel::new(h_s, h_e, h_i, rho.clone()).expect("consistent dimensions");
    (model, rho, near_degenerate)
}

fn objective(a: &[f64], b: &[f64], ds: usize, de: usize) -> f64 {
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    de as f64 * a.iter().map(|x| x * x).sum::<f64>()
        + ds as f64 * b.iter().map(|x| x * x).sum::<f64>()
        + 2.0 * sa * sb
}

/// Every check for one seeded instance.
pub fn battery(seed: u64, max_dims: (usize, usize)) -> Result<Vec<OracleReport>> {
    let (model, rho, near_degenerate) = instance(seed, max_dims);
    let dims = model.dims();
    let (ds, de) = dims;
    let tag = if near_degenerate {
        "random-near-degenerate"
    } else if seed % 2 == 1 {
        "random-pure-joint"
    } else {
        "random-correlated"
    };
    let desc = || InstanceDescriptor {
        seed: Some(seed),
        dims,
        model: tag.into(),
    };
    let mut out = Vec::new();
    let rho_s = rho.reduce(Subsystem::System, dims)?;
    let rho_e = rho.reduce(Subsystem::Environment, dims)?;

    // operator split on the system side
    let h = model.h_s();
    let split = lie_split(h, &rho_s)?;
    let r = split.residuals(h);
    let worst = [r.reconstruction, r.commutator, r.state_overlap, r.mutual_overlap, r.intra_cluster]
        .into_iter()
        .fold(0.0f64, f64::max);
    out.push(OracleReport::from_deviation(desc(), "lie-split-residuals", vec![worst], vec![0.0], worst, 1e-10, true));

    if !rho_s.spectrum().has_degenerate_cluster() {
        let gens = build_generators(rho_s.spectrum());
        let oracle = generator_projection(h.matrix(), &gens.projective)?;
        let primary = pinch(h.matrix(), rho_s.spectrum())?;
        let dev = max_elementwise(&primary, &oracle);
        out.push(OracleReport::from_deviation(
            desc(),
            "pinching-vs-generator-projection",
            vec![primary.norm()],
            vec![oracle.norm()],
            dev,
            1e-10,
            true,
        ));
    }

    let mut rng = random::rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let rephased = rho_s.spectrum().rephased(&random::phases(&mut rng, ds));
    let a = project_commuting_in(h, rho_s.spectrum())?;
    let b = project_commuting_in(h, &rephased)?;
    out.push(OracleReport::from_deviation(
        desc(),
        "projection-gauge-invariance",
        vec![a.frobenius_norm()],
        vec![b.frobenius_norm()],
        max_elementwise(a.matrix(), b.matrix()),
        1e-12,
        true,
    ));

    for (side, name) in [(Subsystem::System, "reduced-generator-S"), (Subsystem::Environment, "reduced-generator-E")] {
        let primary = reduced_generator(model.h_i(), &rho, dims, side)?;
        let oracle = brute_reduced_generator(model.h_i().matrix(), rho.matrix(), dims, side);
        out.push(OracleReport::from_deviation(
            desc(),
            name,
            vec![primary.frobenius_norm()],
            vec![oracle.norm()],
            max_elementwise(primary.matrix(), &oracle),
            1e-12,
            true,
        ));
    }

    let eff = assemble(&model, &rho)?;
    let commutator = eff.residual_commutator_s.max(eff.residual_commutator_e);
    out.push(OracleReport::from_deviation(desc(), "commutator-matching", vec![commutator], vec![0.0], commutator, 1e-9, true));
    out.push(OracleReport::from_deviation(
        desc(),
        "interaction-constraint",
        vec![eff.residual_constraint],
        vec![0.0],
        eff.residual_constraint,
        1e-9,
        true,
    ));
    out.push(OracleReport::compare(desc(), "energy-additivity", vec![eff.u_s + eff.u_e], vec![eff.u_se], 1e-9, true));
    if near_degenerate {
        let flag = if eff.coherence_s.merged { 1.0 } else { 0.0 };
        out.push(
            OracleReport::compare(desc(), "near-degenerate-merge-flag", vec![flag], vec![1.0], 0.0, true)
                .with_note("system spectrum forced to a 1e-12 gap"),
        );
    }

    // gauge invariance of the effective Hamiltonians
    let rs2 = rho_s.with_spectrum(rho_s.spectrum().rephased(&random::phases(&mut rng, ds)))?;
    let re2 = rho_e.with_spectrum(rho_e.spectrum().rephased(&random::phases(&mut rng, de)))?;
    let eff2 = assemble_from_reduced(&model, &rho, rs2, re2)?;
    let dev = max_elementwise(eff.h_eff_s.matrix(), eff2.h_eff_s.matrix())
        .max(max_elementwise(eff.h_eff_e.matrix(), eff2.h_eff_e.matrix()));
    out.push(OracleReport::from_deviation(
        desc(),
        "effective-hamiltonian-gauge-invariance",
        vec![eff.h_eff_s.frobenius_norm()],
        vec![eff2.h_eff_s.frobenius_norm()],
        dev,
        1e-10,
        true,
    ));

    // diagonal minimization
    let ls = rho_s.spectrum().support_eigenvalues().to_vec();
    let le = rho_e.spectrum().support_eigenvalues().to_vec();
    let u = eff.u_interaction;
    let primary = diagonal_parts(&ls, &le, ds, de, u)?;
    let kkt = kkt_solve(&ls, &le, ds, de, u)?;
    let mut report = OracleReport::compare(desc(), "diagonal-parts-vs-kkt", primary.stacked(), kkt.stacked(), 1e-10, true);
    if kkt.min_norm_fallback {
        report = report.with_note("singular KKT system; minimum-norm solution");
    }
    out.push(report);
    let numeric = numeric_diagonal_parts(&ls, &le, ds, de, u);
    let mut report = OracleReport::compare(
        desc(),
        "diagonal-parts-vs-minimizer",
        primary.stacked(),
        numeric.x.clone(),
        1e-7,
        true,
    );
    if !numeric.converged {
        report.verdict = qsplit_core::oracle::Verdict::Disagree;
        report = report.with_note(format!(
            "minimizer did not converge; final projected gradient {:e}",
            numeric.gradient_norm
        ));
    }
    out.push(report);

    let c: Vec<f64> = ls.iter().chain(&le).copied().collect();
    let cc: f64 = c.iter().map(|x| x * x).sum();
    let x0 = primary.stacked();
    let mut worst_gain = f64::INFINITY;
    for _ in 0..1000 {
        let mut p: Vec<f64> = (0..c.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let along: f64 = p.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>() / cc;
        for (pi, ci) in p.iter_mut().zip(&c) {
            *pi -= along * ci;
        }
        let x: Vec<f64> = x0.iter().zip(&p).map(|(a, b)| a + b).collect();
        let (a, b) = x.split_at(ls.len());
        worst_gain = worst_gain.min(objective(a, b, ds, de) - primary.objective);
    }
    out.push(OracleReport::from_deviation(
        desc(),
        "objective-vs-feasible-sampling",
        vec![primary.objective],
        vec![primary.objective + worst_gain],
        (-worst_gain).max(0.0),
        1e-12,
        true,
    ));

    // informational comparisons
    if ls.len() < ds || le.len() < de {
        let full_s: Vec<f64> = rho_s.spectrum().eigenvalues().iter().map(|l| l.max(0.0)).collect();
        let full_e: Vec<f64> = rho_e.spectrum().eigenvalues().iter().map(|l| l.max(0.0)).collect();
        let mut r = kernel_variant_solve(&full_s, &full_e, ds, de, ls.len(), le.len(), u)?;
        r.instance = desc();
        out.push(r);
    }
    match printed_closed_form(&ls, &le, ds, de, u) {
        Ok(printed) => out.push(OracleReport::compare(
            desc(),
            "closed-form-vs-minimizer",
            printed,
            primary.a.clone(),
            1e-10,
            false,
        )),
        Err(e) => out.push(
            OracleReport::from_deviation(desc(), "closed-form-vs-minimizer", vec![], primary.a.clone(), f64::INFINITY, 1e-10, false)
                .with_note(e.to_string()),
        ),
    }
    Ok(out)
}

fn pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("QSPLIT_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Input(format!("QSPLIT_THREADS must be a positive integer, got `{v}`")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Input(format!("cannot start worker pool: {e}")))
}

/// All reports, in instance order; the symmetric comparator line comes
/// first whenever at least one instance runs.
pub fn run_battery(opts: &VerifyOptions) -> Result<Vec<OracleReport>> {
    if opts.count == 0 {
        return Ok(Vec::new());
    }
    let pool = pool()?;
    let per_instance: Vec<Result<Vec<OracleReport>>> = pool.install(|| {
        (0..opts.count as u64)
            .into_par_iter()
            .map(|i| battery(opts.seed.wrapping_add(i), opts.max_dims))
            .collect()
    });
    let mut out = vec![symmetric_comparator(1.0)?];
    for r in per_instance {
        out.extend(r?);
    }
    Ok(out)
}

pub fn to_json_lines(reports: &[OracleReport]) -> String {
    let mut s = String::new();
    for r in reports {
        s.push_str(&serde_json::to_string(r).expect("report serializes"));
        s.push('\n');
    }
    s
}

/// `Err` if any normative check disagreed.
pub fn verdict(reports: &[OracleReport]) -> Result<()> {
    let total = reports.iter().filter(|r| r.normative).count();
    let failed = reports.iter().filter(|r| !r.passes()).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Verification { failed, total })
    }
}
