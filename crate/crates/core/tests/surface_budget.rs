//! Recomputes the noisy entropy surfaces by direct series summation, without
//! the superoperator or the linear solve, and checks the pinned budgets.

use dctc_core::channels::d_map;
use dctc_core::experiments::{
    continuity_metric, run_fig3, EntropyGrid, Fig3Config, REVISED_JUMP_BUDGET_MIXED, REVISED_JUMP_BUDGET_PURE,
};
use dctc_core::gallery::{u3_system, EpsFamily};
use dctc_core::qmat::von_neumann_entropy;
use dctc_core::{CMatrix, DensityMatrix};

/// `Σ_{k<K} p(1-p)^k D^k(I/2)` with the tail below 1e-15.
fn series_fixed_point(family: EpsFamily, ea: f64, eb: f64, p: f64) -> DensityMatrix {
    let sys = u3_system(family.state(ea, eb).unwrap(), 0.0).unwrap();
    let terms = ((1e-15f64).ln() / (1.0 - p).ln()).ceil() as usize;
    let mut term = DensityMatrix::maximally_mixed(2);
    let mut sum = CMatrix::zeros(2, 2);
    let mut weight = p;
    for _ in 0..terms {
        sum += term.matrix().scale(weight);
        term = d_map(&sys, &term).unwrap();
        weight *= 1.0 - p;
    }
    let tr = sum.trace().re;
    DensityMatrix::new(sum.unscale(tr)).unwrap()
}

fn oracle_grid(family: EpsFamily, p: f64) -> EntropyGrid {
    let values = (0..=10)
        .map(|i| {
            (0..=10)
                .map(|j| von_neumann_entropy(&series_fixed_point(family, i as f64 / 10.0, j as f64 / 10.0, p)))
                .collect()
        })
        .collect();
    EntropyGrid::from_values(values)
}

#[test]
fn budgets_match_series_oracle() {
    for (family, budget) in [
        (EpsFamily::Mixed, REVISED_JUMP_BUDGET_MIXED),
        (EpsFamily::Pure, REVISED_JUMP_BUDGET_PURE),
    ] {
        let oracle = oracle_grid(family, 0.1);
        let jump = continuity_metric(&oracle).unwrap().max_jump;
        assert!((jump - budget).abs() < 1e-9, "{}: {jump} vs {budget}", family.name());

        let run = run_fig3(&Fig3Config {
            family,
            ..Fig3Config::default()
        })
        .unwrap();
        for (row_a, row_b) in run.grid.values.iter().zip(&oracle.values) {
            for (a, b) in row_a.iter().zip(row_b) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn surface_sharpens_as_noise_vanishes() {
    let coarse = continuity_metric(&oracle_grid(EpsFamily::Mixed, 0.1)).unwrap().max_jump;
    let fine = continuity_metric(
        &run_fig3(&Fig3Config {
            family: EpsFamily::Mixed,
            p: 0.001,
            ..Fig3Config::default()
        })
        .unwrap()
        .grid,
    )
    .unwrap()
    .max_jump;
    assert!(fine > coarse);
}
