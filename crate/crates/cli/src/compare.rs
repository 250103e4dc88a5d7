//! `compare-closed-form`: the printed closed form for the diagonal parts
//! against the exact constrained minimizer, under both readings of `d`.

use std::path::Path;

use qsplit_core::effective::{printed_closed_form, DimensionReading};
use qsplit_core::oracle::kkt_solve;
use qsplit_core::random;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::run::write_atomic;

pub const AGREEMENT: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_dims")]
    pub dims: Vec<[usize; 2]>,
    /// Random full-rank spectrum pairs drawn per entry of `dims`.
    #[serde(default = "default_spectra")]
    pub spectra_per_dims: usize,
    #[serde(default = "default_u")]
    pub u_values: Vec<f64>,
    /// Add the two maximally mixed qubits.
    #[serde(default = "yes")]
    pub include_symmetric: bool,
    /// Add one rank-deficient system spectrum per entry of `dims`.
    #[serde(default = "yes")]
    pub include_near_pure: bool,
}

fn default_dims() -> Vec<[usize; 2]> {
    vec![[2, 2], [2, 3], [3, 3], [4, 2]]
}

fn default_spectra() -> usize {
    5
}

fn default_u() -> Vec<f64> {
    vec![0.0, 1.0]
}

fn yes() -> bool {
    true
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            seed: 0,
            dims: default_dims(),
            spectra_per_dims: default_spectra(),
            u_values: default_u(),
            include_symmetric: true,
            include_near_pure: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonRow {
    pub case: String,
    pub dims: (usize, usize),
    pub ranks: (usize, usize),
    pub reading: DimensionReading,
    pub u_interaction: f64,
    pub lambda_s: Vec<f64>,
    pub lambda_e: Vec<f64>,
    /// `None` when the closed form is undefined for this input.
    pub closed_form: Option<Vec<f64>>,
    pub minimizer: Vec<f64>,
    pub max_deviation: Option<f64>,
    pub agrees: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ReadingSummary {
    pub rows: usize,
    pub agree: usize,
    pub disagree: usize,
    pub undefined: usize,
    pub max_deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonDocument {
    pub sweep: SweepConfig,
    pub tolerance: f64,
    pub dimension_reading: ReadingSummary,
    pub rank_reading: ReadingSummary,
    pub rows: Vec<ComparisonRow>,
}

struct Case {
    name: String,
    dims: (usize, usize),
    lambda_s: Vec<f64>,
    lambda_e: Vec<f64>,
}

fn cases(sweep: &SweepConfig) -> Vec<Case> {
    let mut out = Vec::new();
    if sweep.include_symmetric {
        out.push(Case {
            name: "symmetric-qubit-pair".into(),
            dims: (2, 2),
            lambda_s: vec![0.5, 0.5],
            lambda_e: vec![0.5, 0.5],
        });
    }
    let mut rng = random::rng(sweep.seed);
    for &[ds, de] in &sweep.dims {
        for k in 0..sweep.spectra_per_dims {
            out.push(Case {
                name: format!("random-{ds}x{de}-{k}"),
                dims: (ds, de),
                lambda_s: random::dirichlet(&mut rng, ds, 1.0),
                lambda_e: random::dirichlet(&mut rng, de, 1.0),
            });
        }
        if sweep.include_near_pure && ds >= 2 {
            let mut support = random::dirichlet(&mut rng, ds - 1, 1.0);
            support.sort_by(|a, b| b.total_cmp(a));
            out.push(Case {
                name: format!("rank-deficient-{ds}x{de}"),
                dims: (ds, de),
                lambda_s: support,
                lambda_e: random::dirichlet(&mut rng, de, 1.0),
            });
        }
    }
    out
}

fn row(case: &Case, reading: DimensionReading, u: f64) -> Result<ComparisonRow> {
    let (ds, de) = case.dims;
    let ranks = (case.lambda_s.len(), case.lambda_e.len());
    let exact = kkt_solve(&case.lambda_s, &case.lambda_e, ds, de, u)?;
    let (rs, re) = match reading {
        DimensionReading::Dimension => (ds, de),
        DimensionReading::Rank => ranks,
    };
    let mut note = exact
        .min_norm_fallback
        .then(|| "singular KKT system; minimum-norm minimizer".to_string());
    let (closed_form, max_deviation) = match printed_closed_form(&case.lambda_s, &case.lambda_e, rs, re, u) {
        Ok(c) => {
            let dev = c
                .iter()
                .zip(&exact.a)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0f64, f64::max);
            (Some(c), Some(dev))
        }
        Err(e) => {
            note = Some(format!("closed form undefined: {e}"));
            (None, None)
        }
    };
    Ok(ComparisonRow {
        case: case.name.clone(),
        dims: case.dims,
        ranks,
        reading,
        u_interaction: u,
        lambda_s: case.lambda_s.clone(),
        lambda_e: case.lambda_e.clone(),
        closed_form,
        minimizer: exact.a,
        agrees: max_deviation.is_some_and(|d| d <= AGREEMENT),
        max_deviation,
        note,
    })
}

fn summarize(rows: &[ComparisonRow], reading: DimensionReading) -> ReadingSummary {
    let mut s = ReadingSummary::default();
    for r in rows.iter().filter(|r| r.reading == reading) {
        s.rows += 1;
        match r.max_deviation {
            None => s.undefined += 1,
            Some(d) => {
                s.max_deviation = s.max_deviation.max(d);
                if r.agrees {
                    s.agree += 1;
                } else {
                    s.disagree += 1;
                }
            }
        }
    }
    s
}

pub fn compare(sweep: &SweepConfig) -> Result<ComparisonDocument> {
    for &[ds, de] in &sweep.dims {
        if ds == 0 || de == 0 || ds > 16 || de > 16 {
            return Err(CliError::Input(format!("sweep dims must be in 1..=16, got {ds}x{de}")));
        }
    }
    if let Some(u) = sweep.u_values.iter().find(|u| !u.is_finite()) {
        return Err(CliError::Input(format!("sweep u_values must be finite, got {u}")));
    }
    let mut rows = Vec::new();
    for case in cases(sweep) {
        for &u in &sweep.u_values {
            for reading in [DimensionReading::Dimension, DimensionReading::Rank] {
                rows.push(row(&case, reading, u)?);
            }
        }
    }
    Ok(ComparisonDocument {
        sweep: sweep.clone(),
        tolerance: AGREEMENT,
        dimension_reading: summarize(&rows, DimensionReading::Dimension),
        rank_reading: summarize(&rows, DimensionReading::Rank),
        rows,
    })
}

pub fn load_sweep(path: &Path) -> Result<SweepConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        CliError::config(path, field, e.into_inner().to_string())
    })
}

pub fn write_document(doc: &ComparisonDocument, out: &Path) -> Result<()> {
    let json = serde_json::to_vec_pretty(doc).expect("document serializes");
    write_atomic(out, &json)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_case_is_u_over_8_against_u_over_2() {
        let sweep = SweepConfig {
            dims: vec![],
            u_values: vec![2.0],
            ..SweepConfig::default()
        };
        let doc = compare(&sweep).unwrap();
        let r = doc
            .rows
            .iter()
            .find(|r| r.reading == DimensionReading::Dimension)
            .unwrap();
        for (c, m) in r.closed_form.as_ref().unwrap().iter().zip(&r.minimizer) {
            assert!((c - 0.25).abs() <= 1e-14 && (m - 1.0).abs() <= 1e-12);
        }
        assert!(!r.agrees);
    }

    #[test]
    fn zero_interaction_energy_rows_agree() {
        let doc = compare(&SweepConfig {
            u_values: vec![0.0],
            ..SweepConfig::default()
        })
        .unwrap();
        for r in doc.rows.iter().filter(|r| r.closed_form.is_some()) {
            assert_eq!(r.max_deviation, Some(0.0), "{}", r.case);
            assert!(r.minimizer.iter().all(|x| *x == 0.0));
        }
    }
}
