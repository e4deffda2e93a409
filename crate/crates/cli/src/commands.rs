use std::fmt::Write as _;

use dctc_core::channels::{channel_distance, choi, kraus_commutator_residual, kraus_from_choi, KRAUS_TOL};
use dctc_core::engines::{fixed_subspace, limit_superoperator};
use dctc_core::experiments::{
    continuity_metric, counterexample_report, fmt_pops, format_g12, run_fig2, run_fig3, summarize_fig2, to_csv,
    write_bistability, Fig2Config, Fig3Config, Fig3Rule,
};
use dctc_core::gallery::{reference_kraus_set, resolve_u3_ordering, EpsFamily, GallerySystem};
use dctc_core::maxent::max_entropy_fixed_state;
use dctc_core::qmat::von_neumann_entropy;
use dctc_core::{CMatrix, CtcSystem, DensityMatrix, EngineConfig};
use serde_json::{json, Value};

use crate::output::Run;
use crate::{CliError, Demo};

const ZERO: f64 = 1e-9;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn engine_config(run: &Run) -> Result<EngineConfig, CliError> {
    let d = EngineConfig::default();
    let s = &run.settings;
    EngineConfig::new(
        s.max_iter.unwrap_or(d.max_iter),
        s.tol.unwrap_or(d.tol),
        s.cycle_window.unwrap_or(d.cycle_window),
    )
    .map_err(|e| usage(e.to_string()))
}

/// The bare system at the chosen CR input: `--s` for the qubit-CR systems,
/// `--eps-a/--eps-b` for u3, `|0⟩⟨0|` when neither is given.
fn chosen_system(run: &Run) -> Result<(GallerySystem, CtcSystem), CliError> {
    let s = &run.settings;
    let system = s.system.unwrap_or(GallerySystem::U2);
    let family = s.family.unwrap_or(EpsFamily::Mixed);
    let rho_cr = match system {
        GallerySystem::U3 => match (s.eps_a, s.eps_b) {
            (None, None) => system.ground_cr(),
            (a, b) => family
                .state(a.unwrap_or(0.0), b.unwrap_or(0.0))
                .map_err(|e| usage(e.to_string()))?,
        },
        _ => match s.s {
            Some(x) => family.qubit(x).map_err(|e| usage(e.to_string()))?,
            None => system.ground_cr(),
        },
    };
    Ok((system, system.system(rho_cr, 0.0)?))
}

fn is_diagonal(m: &CMatrix) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)].norm() < 1e-12))
}

fn fmt_num(x: f64) -> String {
    let x = if x.abs() < 5e-7 { 0.0 } else { x };
    format!("{x:.6}")
}

fn fmt_complex(re: f64, im: f64) -> String {
    if im.abs() < 5e-7 {
        fmt_num(re)
    } else {
        format!(
            "{}{}{}i",
            fmt_num(re),
            if im < 0.0 { "-" } else { "+" },
            fmt_num(im.abs())
        )
    }
}

fn fmt_matrix(m: &CMatrix, indent: &str) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| fmt_complex(m[(i, j)].re, m[(i, j)].im))
            .collect();
        let _ = writeln!(out, "{indent}[{}]", row.join(", "));
    }
    out
}

fn fmt_state(s: &DensityMatrix) -> String {
    if is_diagonal(s.matrix()) {
        let pops: Vec<f64> = s
            .populations()
            .iter()
            .map(|&x| if x.abs() < 5e-7 { 0.0 } else { x })
            .collect();
        fmt_pops(&pops)
    } else {
        format!("\n{}", fmt_matrix(s.matrix(), "  "))
    }
}

fn matrix_json(m: &CMatrix) -> Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect();
    json!(rows)
}

pub fn demo(run: &mut Run, which: Demo) -> Result<(), CliError> {
    if which == Demo::U3Ordering {
        let resolution = resolve_u3_ordering()?;
        let text = resolution.report();
        print!("{text}");
        run.write_text("u3-ordering.txt", &text)?;
        let mut csv = String::from("reading,exact,max_entropy_agreement,rejected,selected\n");
        for cand in &resolution.candidates {
            let _ = writeln!(
                csv,
                "\"{}\",{},{},{},{}",
                cand.ordering,
                cand.exact_count(),
                cand.lenient_count(),
                cand.rejected,
                cand.ordering == resolution.selected
            );
        }
        return run.write_text("demo-u3-ordering.csv", &csv);
    }

    let report = counterexample_report()?;
    let mut text = String::new();
    let mut csv = String::new();
    match which {
        Demo::U1Cycle => {
            let _ = report.cycle.write_text(&mut text);
            csv.push_str("state,p0,p1,p2,p3\n");
            let labelled = report
                .cycle
                .states
                .iter()
                .enumerate()
                .map(|(k, s)| (format!("cycle-{k}"), s))
                .chain([("cesaro-limit".to_string(), &report.cycle.cesaro_limit)]);
            for (label, pops) in labelled {
                let cells: Vec<String> = pops.iter().map(|&x| format_g12(x)).collect();
                let _ = writeln!(csv, "{label},{}", cells.join(","));
            }
        }
        Demo::U2Bistable => {
            let _ = write_bistability(&report.bistability, &mut text);
            let _ = writeln!(text);
            let _ = report.selection.write_text(&mut text);
            csv.push_str("start,p,status,steps,entropy_bits,p0,p1,p2,p3\n");
            for r in &report.bistability {
                let cells: Vec<String> = r.populations.iter().map(|&x| format_g12(x)).collect();
                let _ = writeln!(
                    csv,
                    "\"{}\",{},{},{},{},{}",
                    r.start,
                    format_g12(r.p),
                    r.status,
                    r.steps,
                    format_g12(r.entropy_bits),
                    cells.join(",")
                );
            }
        }
        Demo::KrausRefutation => {
            let _ = report.kraus.write_text(&mut text);
            let _ = writeln!(text);
            let _ = report.selection.write_text(&mut text);
            let k = &report.kraus;
            csv.push_str("quantity,value\n");
            for (name, value) in [
                ("operators", k.operators as f64),
                ("completeness_residual", k.completeness_residual),
                ("choi_distance", k.choi_distance),
                ("commutator_residual", k.commutator_residual),
                ("max_entropy_bits", report.selection.max_entropy_bits),
                ("decohered_bits", report.selection.decohered_bits),
            ] {
                let _ = writeln!(csv, "{name},{}", format_g12(value));
            }
        }
        Demo::U3Ordering => unreachable!("handled above"),
    }
    print!("{text}");
    run.write_text(&format!("demo-{}.csv", which.name()), &csv)?;
    run.write_text(&format!("demo-{}.txt", which.name()), &text)
}

pub fn sweep(run: &mut Run) -> Result<(), CliError> {
    let s = &run.settings;
    let base = if s.full_scale {
        Fig2Config::full_scale()
    } else {
        Fig2Config::default()
    };
    let system = s.system.unwrap_or(base.system);
    if system == GallerySystem::U3 {
        return Err(usage("sweep needs a qubit-CR system (u1 or u2)"));
    }
    if s.rule.is_some() || s.step.is_some() {
        eprintln!("dctc: note: --rule and --step only affect `surface`");
    }
    if s.p == Some(0.0) {
        return Err(usage("sweep compares p = 0 against a noisy run; --p must be positive"));
    }
    let cfg = Fig2Config {
        system,
        family: s.family.unwrap_or(base.family),
        s_values: s.s_values.clone().unwrap_or(base.s_values),
        n_random: s.n_random.unwrap_or(base.n_random),
        max_iter: s.max_iter.unwrap_or(base.max_iter),
        tol: s.tol.unwrap_or(base.tol),
        p_values: vec![0.0, s.p.unwrap_or(0.01)],
        master_seed: s.seed,
        jobs: s.jobs,
        injected: Vec::new(),
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    run.set_experiment(serde_json::to_value(&cfg).expect("config serializes"));

    let rows = run_fig2(&cfg)?;
    let name = format!("sweep-{}-{}.csv", cfg.system.name(), cfg.family.name());
    run.write_text(&name, &to_csv(&rows))?;

    let summary = summarize_fig2(&cfg, &rows)?;
    println!(
        "{} {} family, {} random starts per s, p = {}",
        cfg.system.name(),
        cfg.family.name(),
        cfg.n_random,
        cfg.p_values[1]
    );
    println!(
        "{:>5} {:>8} {:>12} {:>12} {:>12} {:>7} {:>7}",
        "s", "above", "noisy span", "closed form", "max S(p=0)", "cycles", "exhaust"
    );
    for v in &summary {
        println!(
            "{:>5} {:>8} {:>12.3e} {:>12.6} {:>12.6} {:>7} {:>7}",
            v.s,
            v.above_diagonal,
            v.noisy_spread,
            v.closed_form_entropy,
            v.max_noiseless_entropy,
            v.cycles,
            v.exhausted
        );
    }
    println!(
        "{} rows written to {}",
        rows.len(),
        run.settings.out_dir.join(&name).display()
    );
    Ok(())
}

pub fn surface(run: &mut Run) -> Result<(), CliError> {
    let s = &run.settings;
    if let Some(system) = s.system {
        if system != GallerySystem::U3 {
            return Err(usage(
                "surface is defined for the three-qubit system only (--system u3)",
            ));
        }
    }
    let base = Fig3Config::default();
    let cfg = Fig3Config {
        family: s.family.unwrap_or(base.family),
        step: s.step.unwrap_or(base.step),
        p: s.p.unwrap_or(base.p),
        rule: s.rule.unwrap_or(base.rule),
        master_seed: s.seed,
        jobs: s.jobs,
    };
    if cfg.rule == Fig3Rule::Revised && cfg.p <= 0.0 {
        return Err(usage("the revised rule needs p > 0"));
    }
    run.set_experiment(serde_json::to_value(&cfg).expect("config serializes"));

    let result = run_fig3(&cfg)?;
    let name = format!("surface-{}-{}.csv", cfg.family.name(), cfg.rule.name());
    run.write_text(&name, &to_csv(&result.rows))?;

    let cont = continuity_metric(&result.grid)?;
    let grid = &result.grid;
    println!("{} family, {} rule, p = {}", cfg.family.name(), cfg.rule.name(), cfg.p);
    print!("eps_a\\eps_b");
    for e in &grid.eps {
        print!(" {e:>6.2}");
    }
    println!();
    for (e, row) in grid.eps.iter().zip(&grid.values) {
        print!("{e:>11.2}");
        for v in row {
            print!(" {v:>6.3}");
        }
        println!();
    }
    let ((i0, j0), (i1, j1)) = cont.location;
    println!(
        "max neighbor jump: {:.6} between ({:.2}, {:.2}) and ({:.2}, {:.2})",
        cont.max_jump, grid.eps[i0], grid.eps[j0], grid.eps[i1], grid.eps[j1]
    );
    Ok(())
}

pub fn maxent(run: &mut Run) -> Result<(), CliError> {
    let (system, sys) = chosen_system(run)?;
    let best = max_entropy_fixed_state(&sys)?;
    println!("{}: maximum-entropy consistent CV state", system.name());
    println!("state: {}", fmt_state(&best.state));
    println!("entropy: {:.6} bits", best.entropy_bits);
    println!(
        "ascent iterations: {}, KKT residual {:.2e}",
        best.iterations, best.kkt_residual
    );
    let value = json!({
        "system": system.name(),
        "rho_cr": matrix_json(sys.rho_cr().matrix()),
        "state": matrix_json(best.state.matrix()),
        "entropy_bits": best.entropy_bits,
        "iterations": best.iterations,
        "kkt_residual": best.kkt_residual,
    });
    run.write_json(&format!("maxent-{}.json", system.name()), &value)
}

/// Diagonal pattern of the fixed subspace: forced zeros, tied entries and
/// the coherences any fixed operator can carry.
fn describe_subspace(basis: &[CMatrix]) -> (String, Vec<(usize, usize)>) {
    let d = basis.first().map_or(0, |b| b.nrows());
    let diag = |i: usize| basis.iter().map(move |b| b[(i, i)].re);
    let mut label: Vec<Option<usize>> = vec![None; d];
    let mut classes: Vec<usize> = Vec::new();
    for (i, slot) in label.iter_mut().enumerate() {
        if diag(i).all(|x| x.abs() < ZERO) {
            continue;
        }
        let tied = classes
            .iter()
            .position(|&rep| diag(i).zip(diag(rep)).all(|(x, y)| (x - y).abs() < ZERO));
        *slot = Some(tied.unwrap_or_else(|| {
            classes.push(i);
            classes.len() - 1
        }));
    }
    let letter = |k: usize| char::from(b'a' + (k % 26) as u8);
    let entries: Vec<String> = label
        .iter()
        .map(|l| l.map_or("0".to_string(), |k| letter(k).to_string()))
        .collect();
    let mut trace_terms = Vec::new();
    for k in 0..classes.len() {
        let mult = label.iter().filter(|&&l| l == Some(k)).count();
        trace_terms.push(if mult == 1 {
            letter(k).to_string()
        } else {
            format!("{mult}{}", letter(k))
        });
    }
    let mut pattern = format!("diag({})", entries.join(", "));
    if !trace_terms.is_empty() {
        let _ = write!(pattern, " with {} = 1", trace_terms.join(" + "));
    }
    let mut coherences = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            if basis.iter().any(|b| b[(i, j)].norm() > ZERO) {
                coherences.push((i, j));
            }
        }
    }
    (pattern, coherences)
}

pub fn fixedpoints(run: &mut Run) -> Result<(), CliError> {
    let (system, sys) = chosen_system(run)?;
    let sub = fixed_subspace(&sys);
    let (pattern, coherences) = describe_subspace(sub.basis());
    println!("{}: fixed subspace of the bare map", system.name());
    println!("real dimension: {}", sub.dim());
    println!("diagonal pattern: {pattern}");
    if coherences.is_empty() {
        println!("coherences: none");
    } else {
        let pairs: Vec<String> = coherences.iter().map(|(i, j)| format!("({i},{j})")).collect();
        println!("coherences allowed at: {}", pairs.join(" "));
    }
    for (k, b) in sub.basis().iter().enumerate() {
        println!("basis[{k}]:");
        print!("{}", fmt_matrix(b, "  "));
    }
    let value = json!({
        "system": system.name(),
        "rho_cr": matrix_json(sys.rho_cr().matrix()),
        "dimension": sub.dim(),
        "diagonal_pattern": pattern,
        "coherences": coherences,
        "basis": sub.basis().iter().map(matrix_json).collect::<Vec<_>>(),
    });
    run.write_json(&format!("fixedpoints-{}.json", system.name()), &value)
}

pub fn kraus(run: &mut Run) -> Result<(), CliError> {
    let cfg = engine_config(run)?;
    let (system, sys) = chosen_system(run)?;
    let limit = limit_superoperator(&sys, &cfg)?;
    let set = kraus_from_choi(&choi(&limit), KRAUS_TOL)?;
    let d = sys.d_cv();
    let residual = kraus_commutator_residual(&set, &DensityMatrix::maximally_mixed(d))?;
    println!("{}: Kraus operators of the limit channel", system.name());
    for (k, op) in set.ops().iter().enumerate() {
        println!("E[{k}]:");
        print!("{}", fmt_matrix(op, "  "));
    }
    println!("operators: {}", set.len());
    println!("completeness residual: {:.3e}", set.completeness_residual());
    println!("commutator residual at I/{d}: {residual:.6}");

    let reference = (system == GallerySystem::U2 && sys.rho_cr().matrix() == system.ground_cr().matrix())
        .then(|| channel_distance(&set.to_superoperator(), &reference_kraus_set().to_superoperator()))
        .transpose()?;
    if let Some(dist) = reference {
        println!("Choi distance to the reference set: {dist:.3e}");
    }
    let decohered = limit.apply_state(&DensityMatrix::maximally_mixed(d))?;
    println!(
        "limit of I/{d}: {} ({:.6} bits)",
        fmt_state(&decohered),
        von_neumann_entropy(&decohered)
    );
    let value = json!({
        "system": system.name(),
        "rho_cr": matrix_json(sys.rho_cr().matrix()),
        "operators": set.ops().iter().map(matrix_json).collect::<Vec<_>>(),
        "completeness_residual": set.completeness_residual(),
        "commutator_residual": residual,
        "reference_choi_distance": reference,
    });
    run.write_json(&format!("kraus-{}.json", system.name()), &value)
}
