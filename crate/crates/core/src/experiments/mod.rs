//! Batch sweeps over CR inputs and random CV starts.
//!
//! Every task gets its own seed derived from `(master_seed, task index)`, so
//! rows do not depend on scheduling. Tasks run on a rayon pool sized by the
//! `jobs` setting and are collected in task order.

mod fig2;
mod fig3;
mod report;

use std::fmt::Write as _;
use std::io;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

pub use fig2::{run_fig2, summarize_fig2, Fig2Config, Fig2SValue};
pub use fig3::{
    continuity_metric, grid_symmetry_residual, run_fig3, Continuity, EntropyGrid, Fig3Config, Fig3Rule, Fig3Run,
    REVISED_JUMP_BUDGET_MIXED, REVISED_JUMP_BUDGET_PURE,
};
pub use report::{
    counterexample_report, fmt_pops, write_bistability, BistabilityRow, CounterexampleReport, CycleSection,
    KrausSection, SelectionSection,
};

/// Column names of the sweep CSV output.
pub const CSV_HEADER: &str = "experiment,family,s,eps_a,eps_b,p,task,seed,status,entropy_bits,residual,steps";

/// SplitMix64 finalizer applied to `master ⊕ golden·(task + 1)`.
pub fn derive_seed(master_seed: u64, task: u64) -> u64 {
    let mut z = master_seed ^ task.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One output row. Fields that do not apply to an experiment are left empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub experiment: &'static str,
    pub family: &'static str,
    pub s: Option<f64>,
    pub eps_a: Option<f64>,
    pub eps_b: Option<f64>,
    pub p: f64,
    pub task: usize,
    pub seed: u64,
    pub status: &'static str,
    pub entropy_bits: f64,
    pub residual: f64,
    pub steps: usize,
}

/// `printf("%.12g")`.
pub fn format_g12(x: f64) -> String {
    const PREC: i32 = 12;
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (PREC - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PREC).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PREC - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_g12).unwrap_or_default()
}

impl CsvRow {
    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.family,
            opt(self.s),
            opt(self.eps_a),
            opt(self.eps_b),
            format_g12(self.p),
            self.task,
            self.seed,
            self.status,
            format_g12(self.entropy_bits),
            format_g12(self.residual),
            self.steps
        )
    }
}

/// Header plus rows, LF-terminated.
pub fn to_csv(rows: &[CsvRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.to_line());
    }
    out
}

pub fn write_csv(rows: &[CsvRow], mut w: impl io::Write) -> Result<()> {
    w.write_all(to_csv(rows).as_bytes())?;
    Ok(())
}

/// Run `f` over `0..n` on `jobs` threads (0 picks the rayon default) and
/// return results in index order.
pub(crate) fn run_tasks<T, F>(jobs: usize, n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if jobs == 1 {
        return (0..n).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Io(io::Error::other(e)))?;
    pool.install(|| (0..n).into_par_iter().map(f).collect())
}

fn check_unit_values(name: &'static str, values: &[f64]) -> Result<()> {
    for &v in values {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange {
                name,
                value: v,
                range: "[0, 1]",
            });
        }
    }
    Ok(())
}

/// `0, step, 2·step, …` up to 1; 1 is included when `step` divides it.
pub fn unit_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::OutOfRange {
            name: "step",
            value: step,
            range: "(0, 1]",
        });
    }
    let n = (1.0 / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| (k as f64 * step).min(1.0)).collect())
}
