//! The cycle, bistability and Kraus counterexamples in one structured report.

use std::fmt;

use serde::Serialize;

use crate::channels::{channel_distance, choi, kraus_commutator_residual, kraus_from_choi, KRAUS_TOL};
use crate::engines::{deutsch_cesaro, limit_superoperator, ralph_closed_form, ralph_iterate, EngineConfig};
use crate::error::Result;
use crate::gallery::{reference_kraus_set, u1_system, u2_system};
use crate::maxent::max_entropy_fixed_state;
use crate::qmat::{von_neumann_entropy, DensityMatrix};

#[derive(Debug, Clone, Serialize)]
pub struct CycleSection {
    pub status: String,
    pub period: Option<usize>,
    /// Populations of each cycle state.
    pub states: Vec<Vec<f64>>,
    pub cesaro_limit: Vec<f64>,
    pub cesaro_entropy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BistabilityRow {
    pub start: String,
    pub p: f64,
    pub status: String,
    pub steps: usize,
    pub populations: Vec<f64>,
    pub entropy_bits: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KrausSection {
    pub operators: usize,
    pub completeness_residual: f64,
    /// Choi distance between the extracted channel and the reference set.
    pub choi_distance: f64,
    /// `max_j ‖[E_j τ0, E_j†]‖_F` at `τ0 = I/4`.
    pub commutator_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionSection {
    pub max_entropy_state: Vec<f64>,
    pub max_entropy_bits: f64,
    /// `lim D^n(I/4)`, the small-noise limit of the noisy fixed point.
    pub decohered_state: Vec<f64>,
    pub decohered_bits: f64,
    pub closed_form_p: f64,
    pub closed_form_bits: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleReport {
    pub cycle: CycleSection,
    pub bistability: Vec<BistabilityRow>,
    pub kraus: KrausSection,
    pub selection: SelectionSection,
}

fn pops(s: &DensityMatrix) -> Vec<f64> {
    s.populations()
        .into_iter()
        .map(|x| if x.abs() < 1e-15 { 0.0 } else { x })
        .collect()
}

pub fn counterexample_report() -> Result<CounterexampleReport> {
    let cfg = EngineConfig::default();
    let ground = DensityMatrix::basis(2, 0);
    let mixed = DensityMatrix::maximally_mixed(4);
    let out2 = DensityMatrix::from_diag(&[1.0 / 3.0, 0.0, 1.0 / 3.0, 1.0 / 3.0])?;

    let u1 = u1_system(ground.clone(), 0.0)?;
    let orbit = ralph_iterate(&u1, &mixed, &cfg)?;
    let mean = deutsch_cesaro(&u1, &mixed, &cfg)?;
    let cycle = CycleSection {
        status: orbit.status.to_string(),
        period: orbit.period,
        states: orbit.cycle_states.iter().flatten().map(pops).collect(),
        cesaro_limit: pops(&mean.state),
        cesaro_entropy: von_neumann_entropy(&mean.state),
    };

    let u2 = u2_system(ground, 0.0)?;
    let mut bistability = Vec::new();
    for (label, start) in [("I/4", &mixed), ("diag(1/3,0,1/3,1/3)", &out2)] {
        for p in [0.0, 0.01] {
            let out = ralph_iterate(&u2.with_p(p)?, start, &cfg)?;
            bistability.push(BistabilityRow {
                start: label.to_string(),
                p,
                status: out.status.to_string(),
                steps: out.steps,
                populations: pops(&out.state),
                entropy_bits: von_neumann_entropy(&out.state),
            });
        }
    }

    let limit = limit_superoperator(&u2, &cfg)?;
    let extracted = kraus_from_choi(&choi(&limit), KRAUS_TOL)?;
    let reference = reference_kraus_set();
    let kraus = KrausSection {
        operators: extracted.len(),
        completeness_residual: extracted.completeness_residual(),
        choi_distance: channel_distance(&extracted.to_superoperator(), &reference.to_superoperator())?,
        commutator_residual: kraus_commutator_residual(&extracted, &mixed)?,
    };

    let best = max_entropy_fixed_state(&u2)?;
    let decohered = limit.apply_state(&mixed)?;
    let closed_form_p = 0.01;
    let closed = ralph_closed_form(&u2.with_p(closed_form_p)?)?;
    let selection = SelectionSection {
        max_entropy_state: pops(&best.state),
        max_entropy_bits: best.entropy_bits,
        decohered_state: pops(&decohered),
        decohered_bits: von_neumann_entropy(&decohered),
        closed_form_p,
        closed_form_bits: von_neumann_entropy(&closed),
    };

    Ok(CounterexampleReport {
        cycle,
        bistability,
        kraus,
        selection,
    })
}

pub fn fmt_pops(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|x| format!("{x:.6}")).collect();
    format!("diag({})", parts.join(", "))
}

impl CycleSection {
    pub fn write_text(&self, f: &mut impl fmt::Write) -> fmt::Result {
        writeln!(f, "U1 with CR |0>, CV start I/4")?;
        match self.period {
            Some(period) => writeln!(f, "  bare orbit: {} of period {period}", self.status)?,
            None => writeln!(f, "  bare orbit: {}", self.status)?,
        }
        for (k, s) in self.states.iter().enumerate() {
            writeln!(f, "    state {k}: {}", fmt_pops(s))?;
        }
        writeln!(
            f,
            "  Cesàro mean: {} ({:.6} bits)",
            fmt_pops(&self.cesaro_limit),
            self.cesaro_entropy
        )
    }
}

pub fn write_bistability(rows: &[BistabilityRow], f: &mut impl fmt::Write) -> fmt::Result {
    writeln!(f, "U2 with CR |0>: final CV state by start and noise")?;
    writeln!(
        f,
        "  {:<22} {:>6}  {:<10} {:>10}  state",
        "start", "p", "status", "entropy"
    )?;
    for r in rows {
        writeln!(
            f,
            "  {:<22} {:>6}  {:<10} {:>10.6}  {}",
            r.start,
            r.p,
            r.status,
            r.entropy_bits,
            fmt_pops(&r.populations)
        )?;
    }
    Ok(())
}

impl KrausSection {
    pub fn write_text(&self, f: &mut impl fmt::Write) -> fmt::Result {
        writeln!(f, "Limit channel of U2 with CR |0>")?;
        writeln!(f, "  Kraus operators extracted: {}", self.operators)?;
        writeln!(f, "  completeness residual: {:.3e}", self.completeness_residual)?;
        writeln!(f, "  Choi distance to reference set: {:.3e}", self.choi_distance)?;
        writeln!(
            f,
            "  commutator residual max_j ||[E_j tau0, E_j^dag]|| at tau0 = I/4: {:.6}",
            self.commutator_residual
        )
    }
}

impl SelectionSection {
    pub fn write_text(&self, f: &mut impl fmt::Write) -> fmt::Result {
        writeln!(f, "State selection for U2 with CR |0>")?;
        writeln!(
            f,
            "  maximum entropy rule: {} ({:.6} bits)",
            fmt_pops(&self.max_entropy_state),
            self.max_entropy_bits
        )?;
        writeln!(
            f,
            "  small-noise limit:    {} ({:.6} bits)",
            fmt_pops(&self.decohered_state),
            self.decohered_bits
        )?;
        writeln!(
            f,
            "  noisy fixed point at p = {}: {:.6} bits",
            self.closed_form_p, self.closed_form_bits
        )
    }
}

impl fmt::Display for CounterexampleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.cycle.write_text(f)?;
        writeln!(f)?;
        write_bistability(&self.bistability, f)?;
        writeln!(f)?;
        self.kraus.write_text(f)?;
        writeln!(f)?;
        self.selection.write_text(f)
    }
}
