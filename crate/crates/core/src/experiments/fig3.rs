//! Entropy surfaces over the two-qubit CR family of the discontinuity example.

use serde::Serialize;

use super::{derive_seed, run_tasks, unit_grid, CsvRow};
use crate::channels::noisy_d_map;
use crate::engines::{consistency_residual, ralph_closed_form};
use crate::error::{Error, Result};
use crate::gallery::{u3_system, EpsFamily, FamilySymmetry};
use crate::maxent::max_entropy_fixed_state;
use crate::qmat::{trace_distance, von_neumann_entropy};

/// Largest adjacent-cell entropy jump of the noisy (p = 0.1) surfaces on the
/// 11×11 grid, measured by summing `Σ p(1-p)^k D^k(I/2)` directly.
pub const REVISED_JUMP_BUDGET_MIXED: f64 = 0.2978418545268995;
pub const REVISED_JUMP_BUDGET_PURE: f64 = 0.29263531530397935;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Fig3Rule {
    /// Unique fixed point of the noisy map at the configured `p`.
    Revised,
    /// Maximum-entropy consistent state of the bare map.
    Deutsch,
}

impl Fig3Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Fig3Rule::Revised => "revised",
            Fig3Rule::Deutsch => "deutsch",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "revised" => Some(Fig3Rule::Revised),
            "deutsch" => Some(Fig3Rule::Deutsch),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig3Config {
    pub family: EpsFamily,
    pub step: f64,
    pub p: f64,
    pub rule: Fig3Rule,
    pub master_seed: u64,
    pub jobs: usize,
}

impl Default for Fig3Config {
    fn default() -> Self {
        Self {
            family: EpsFamily::Pure,
            step: 0.1,
            p: 0.1,
            rule: Fig3Rule::Revised,
            master_seed: 42,
            jobs: 1,
        }
    }
}

/// Entropies indexed `[i][j]` for `(ε_α, ε_β) = (eps[i], eps[j])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyGrid {
    pub eps: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl EntropyGrid {
    pub fn from_values(values: Vec<Vec<f64>>) -> Self {
        let n = values.len();
        let eps = if n > 1 {
            (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
        } else {
            vec![0.0; n]
        };
        Self { eps, values }
    }

    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn cols(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone)]
pub struct Fig3Run {
    pub grid: EntropyGrid,
    pub rows: Vec<CsvRow>,
}

pub fn run_fig3(cfg: &Fig3Config) -> Result<Fig3Run> {
    let eps = unit_grid(cfg.step)?;
    if cfg.rule == Fig3Rule::Revised && !(cfg.p > 0.0 && cfg.p < 1.0) {
        return Err(Error::OutOfRange {
            name: "p",
            value: cfg.p,
            range: "(0, 1)",
        });
    }
    let n = eps.len();
    let experiment = match cfg.rule {
        Fig3Rule::Revised => "fig3",
        Fig3Rule::Deutsch => "fig3-deutsch",
    };
    let rows = run_tasks(cfg.jobs, n * n, |task| {
        let (ea, eb) = (eps[task / n], eps[task % n]);
        let rho = cfg.family.state(ea, eb)?;
        let (p, entropy_bits, residual, steps) = match cfg.rule {
            Fig3Rule::Revised => {
                let sys = u3_system(rho, cfg.p)?;
                let tau = ralph_closed_form(&sys)?;
                let residual = trace_distance(&noisy_d_map(&sys, &tau)?, &tau)?;
                (cfg.p, von_neumann_entropy(&tau), residual, 0)
            }
            Fig3Rule::Deutsch => {
                let sys = u3_system(rho, 0.0)?;
                let res = max_entropy_fixed_state(&sys)?;
                let residual = consistency_residual(&sys, &res.state)?;
                (0.0, res.entropy_bits, residual, res.iterations)
            }
        };
        Ok(CsvRow {
            experiment,
            family: cfg.family.name(),
            s: None,
            eps_a: Some(ea),
            eps_b: Some(eb),
            p,
            task,
            seed: derive_seed(cfg.master_seed, task as u64),
            status: "converged",
            entropy_bits,
            residual,
            steps,
        })
    })?;
    let values = rows
        .chunks(n)
        .map(|chunk| chunk.iter().map(|r| r.entropy_bits).collect())
        .collect();
    Ok(Fig3Run {
        grid: EntropyGrid { eps, values },
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Continuity {
    pub max_jump: f64,
    /// The two 4-neighbor cells realizing the jump.
    pub location: ((usize, usize), (usize, usize)),
}

/// Largest absolute difference between 4-neighbor cells.
pub fn continuity_metric(grid: &EntropyGrid) -> Result<Continuity> {
    let (r, c) = (grid.rows(), grid.cols());
    if r < 2 || c < 2 || grid.values.iter().any(|row| row.len() != c) {
        return Err(Error::DegenerateGrid(r, c));
    }
    let v = &grid.values;
    let mut best = Continuity {
        max_jump: 0.0,
        location: ((0, 0), (0, 1)),
    };
    for i in 0..r {
        for j in 0..c {
            for (ni, nj) in [(i + 1, j), (i, j + 1)] {
                if ni < r && nj < c {
                    let jump = (v[i][j] - v[ni][nj]).abs();
                    if jump > best.max_jump {
                        best = Continuity {
                            max_jump: jump,
                            location: ((i, j), (ni, nj)),
                        };
                    }
                }
            }
        }
    }
    Ok(best)
}

/// `max |S(i, j) - S(g(i, j))|` for a grid symmetric about ½.
pub fn grid_symmetry_residual(grid: &EntropyGrid, sym: &FamilySymmetry) -> f64 {
    let n = grid.rows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (a, b) = sym.map_cell(i, j, n);
            worst = worst.max((grid.values[i][j] - grid.values[a][b]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{cr_eps, mixed_family_symmetries, u3};
    use num_complex::Complex64;

    #[test]
    fn continuity_examples() {
        let flat = EntropyGrid::from_values(vec![vec![0.7; 3]; 3]);
        assert_eq!(continuity_metric(&flat).unwrap().max_jump, 0.0);
        let step = EntropyGrid::from_values(vec![vec![0.0, 1.0], vec![0.0, 1.0]]);
        let c = continuity_metric(&step).unwrap();
        assert_eq!(c.max_jump, 1.0);
        assert_eq!(c.location, ((0, 0), (0, 1)));
        assert!(matches!(
            continuity_metric(&EntropyGrid::from_values(vec![vec![1.0, 2.0]])),
            Err(Error::DegenerateGrid(1, 2))
        ));
    }

    #[test]
    fn corner_matches_closed_form() {
        let run = run_fig3(&Fig3Config {
            step: 0.5,
            ..Fig3Config::default()
        })
        .unwrap();
        let rho = cr_eps(0.0, Complex64::new(0.0, 0.0), 0.0, Complex64::new(0.0, 0.0)).unwrap();
        let tau = ralph_closed_form(&u3_system(rho, 0.1).unwrap()).unwrap();
        assert!((run.grid.values[0][0] - von_neumann_entropy(&tau)).abs() < 1e-12);
        assert_eq!(run.rows.len(), 9);
        assert!(run.rows.iter().all(|r| r.residual < 1e-12));
    }

    #[test]
    fn mixed_surface_respects_detected_symmetry() {
        let run = run_fig3(&Fig3Config {
            family: EpsFamily::Mixed,
            ..Fig3Config::default()
        })
        .unwrap();
        let syms = mixed_family_symmetries(&u3());
        assert!(!syms.is_empty());
        for s in &syms {
            assert!(grid_symmetry_residual(&run.grid, s) < 1e-9);
        }
    }

    #[test]
    fn jobs_do_not_change_rows() {
        let base = Fig3Config {
            step: 0.25,
            ..Fig3Config::default()
        };
        let a = run_fig3(&base).unwrap();
        let b = run_fig3(&Fig3Config { jobs: 3, ..base }).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn revised_rule_needs_noise() {
        assert!(run_fig3(&Fig3Config {
            p: 0.0,
            ..Fig3Config::default()
        })
        .is_err());
    }
}
