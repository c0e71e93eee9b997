//! CSV output files and their readers. Region numbers in files are
//! one-based.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{
    CurveTable, EmpiricalCovariance, OracleResult, RatioReport, ReplicationSummary,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub region: usize,
    pub p_true: f64,
    pub mean_phat: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub kappa: usize,
    pub beta: f64,
    pub rho_hat: f64,
    pub target: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityRow {
    pub coord: usize,
    pub skew: f64,
    pub kurtosis: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub region: usize,
    pub p_true: f64,
    pub std_err: f64,
}

/// Creates `path` and hands a buffered writer to `f`.
pub fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_rows<W: Write, T: Serialize>(w: W, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(r: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .collect::<Result<Vec<T>, csv::Error>>()
        .map_err(Error::from)
}

pub fn summary_rows(summaries: &[&ReplicationSummary]) -> Vec<SummaryRow> {
    summaries
        .iter()
        .flat_map(|s| {
            (0..s.mean.len()).map(move |i| SummaryRow {
                algorithm: s.label.clone(),
                region: i + 1,
                p_true: s.p_true[i],
                mean_phat: s.mean[i],
                std_err: s.std_err[i],
            })
        })
        .collect()
}

pub fn write_summary<W: Write>(w: W, summaries: &[&ReplicationSummary]) -> Result<()> {
    write_rows(w, summary_rows(summaries))
}

pub fn read_summary<R: Read>(r: R) -> Result<Vec<SummaryRow>> {
    read_rows(r)
}

pub fn write_mse_curve<W: Write>(w: W, table: &CurveTable) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["energy_evals".to_string()];
    header.extend(table.labels.iter().map(|l| format!("mse_{l}")));
    out.write_record(&header)?;
    for (k, evals) in table.energy_evals.iter().enumerate() {
        let mut rec = vec![evals.to_string()];
        rec.extend(table.columns.iter().map(|c| c[k].to_string()));
        out.write_record(&rec)?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn read_mse_curve<R: Read>(r: R) -> Result<CurveTable> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("energy_evals") {
        return Err(Error::input(
            "mse curve must start with an `energy_evals` column",
        ));
    }
    let labels: Vec<String> = header
        .iter()
        .skip(1)
        .map(|h| h.strip_prefix("mse_").unwrap_or(h).to_string())
        .collect();
    let mut table = CurveTable {
        energy_evals: Vec::new(),
        columns: vec![Vec::new(); labels.len()],
        labels,
    };
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<&str> {
            rec.get(i)
                .ok_or_else(|| Error::input(format!("row has {} fields", rec.len())))
        };
        table.energy_evals.push(
            num(0)?
                .parse()
                .map_err(|_| Error::input("bad energy_evals value"))?,
        );
        for (j, col) in table.columns.iter_mut().enumerate() {
            col.push(
                num(j + 1)?
                    .parse()
                    .map_err(|_| Error::input("bad MSE value"))?,
            );
        }
    }
    Ok(table)
}

pub fn write_ratio_report<W: Write>(w: W, reports: &[RatioReport]) -> Result<()> {
    write_rows(
        w,
        reports.iter().map(|r| RatioRow {
            kappa: r.kappa,
            beta: r.beta,
            rho_hat: r.rho_hat,
            target: r.target,
            ci_lo: r.ci_lo,
            ci_hi: r.ci_hi,
        }),
    )
}

pub fn read_ratio_report<R: Read>(r: R) -> Result<Vec<RatioRow>> {
    read_rows(r)
}

pub fn write_normality<W: Write>(w: W, diag: &EmpiricalCovariance) -> Result<()> {
    write_rows(
        w,
        (0..diag.coords.len()).map(|j| NormalityRow {
            coord: diag.coords[j] + 1,
            skew: diag.skew[j],
            kurtosis: diag.kurtosis[j],
            pass: diag.pass[j],
        }),
    )
}

pub fn read_normality<R: Read>(r: R) -> Result<Vec<NormalityRow>> {
    read_rows(r)
}

pub fn write_oracle<W: Write>(w: W, oracle: &OracleResult) -> Result<()> {
    write_rows(
        w,
        (0..oracle.p_true.len()).map(|i| OracleRow {
            region: i + 1,
            p_true: oracle.p_true[i],
            std_err: oracle.mc_std_err[i],
        }),
    )
}

/// Reads an oracle file written for `n` samples over `m` regions and checks
/// that it is complete and consistent.
pub fn read_oracle<R: Read>(r: R, m: usize, n: u64) -> Result<OracleResult> {
    let rows: Vec<OracleRow> = read_rows(r)?;
    if rows.len() != m || rows.iter().enumerate().any(|(i, row)| row.region != i + 1) {
        return Err(Error::input(format!(
            "oracle file must list regions 1..={m}"
        )));
    }
    let p_true: Vec<f64> = rows.iter().map(|r| r.p_true).collect();
    let total: f64 = p_true.iter().sum();
    if p_true.iter().any(|p| !(0.0..=1.0).contains(p)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::input(
            "oracle probabilities do not form a distribution",
        ));
    }
    Ok(OracleResult {
        mc_std_err: rows.iter().map(|r| r.std_err).collect(),
        p_true,
        n_samples: n,
    })
}

/// Per-checkpoint trajectories: `run_id,t,gamma,theta_*,phat_*,visits_*`.
pub fn write_trajectories<W: Write>(w: W, summary: &ReplicationSummary) -> Result<()> {
    let m = summary.p_true.len();
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["run_id".to_string(), "t".into(), "gamma".into()];
    for prefix in ["theta", "phat", "visits"] {
        header.extend((1..=m).map(|i| format!("{prefix}_{i}")));
    }
    out.write_record(&header)?;
    for (run, tr) in summary.trajectories.iter().enumerate() {
        for c in &tr.checkpoints {
            let mut rec = vec![run.to_string(), c.t.to_string(), c.gamma.to_string()];
            rec.extend(c.theta.iter().map(f64::to_string));
            rec.extend(c.phat.iter().map(f64::to_string));
            rec.extend(c.visits.iter().map(u64::to_string));
            out.write_record(&rec)?;
        }
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}
