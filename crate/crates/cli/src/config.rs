//! Flag and config-file resolution.
//!
//! The config file is flat `key = value` text; `#` starts a comment. Keys are
//! the long flag names with `-` or `_`. Flags (and `DCTC_OUT_DIR`) override
//! file values, which override built-in defaults.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use dctc_core::experiments::Fig3Rule;
use dctc_core::gallery::{EpsFamily, GallerySystem};
use serde_json::{json, Value};

use crate::CliError;

pub const DEFAULT_OUT_DIR: &str = "dctc-out";

#[derive(Debug, Clone, Default, Args)]
pub struct Opts {
    /// Gallery interaction: u1, u2 or u3.
    #[arg(long, global = true)]
    pub system: Option<String>,
    /// CR input family: mixed or pure.
    #[arg(long, global = true)]
    pub family: Option<String>,
    /// Master seed for per-task seeds.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for CSV, JSON and text artifacts.
    #[arg(long, global = true, env = "DCTC_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
    /// Flat `key = value` file with the same keys as the long flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for sweeps (0 uses all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// 1000 random starts and 10^4 iterations per sweep point.
    #[arg(long, global = true)]
    pub full_scale: bool,
    #[arg(long, global = true)]
    pub n_random: Option<usize>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub cycle_window: Option<usize>,
    /// Depolarizing strength.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Surface grid step.
    #[arg(long, global = true)]
    pub step: Option<f64>,
    /// Surface selection rule: revised or deutsch.
    #[arg(long, global = true)]
    pub rule: Option<String>,
    /// Qubit CR family parameter for u1/u2.
    #[arg(long, global = true)]
    pub s: Option<f64>,
    /// Comma-separated s values for sweeps.
    #[arg(long, global = true)]
    pub s_values: Option<String>,
    /// ε_α of the two-qubit CR input for u3.
    #[arg(long, global = true)]
    pub eps_a: Option<f64>,
    /// ε_β of the two-qubit CR input for u3.
    #[arg(long, global = true)]
    pub eps_b: Option<f64>,
}

const KEYS: [&str; 18] = [
    "system",
    "family",
    "seed",
    "out_dir",
    "jobs",
    "full_scale",
    "n_random",
    "max_iter",
    "tol",
    "cycle_window",
    "p",
    "step",
    "rule",
    "s",
    "s_values",
    "eps_a",
    "eps_b",
    "config",
];

/// Fully resolved settings. Options stay `None` where the command supplies
/// its own default.
#[derive(Debug, Clone)]
pub struct Settings {
    pub system: Option<GallerySystem>,
    pub family: Option<EpsFamily>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub jobs: usize,
    pub full_scale: bool,
    pub n_random: Option<usize>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub cycle_window: Option<usize>,
    pub p: Option<f64>,
    pub step: Option<f64>,
    pub rule: Option<Fig3Rule>,
    pub s: Option<f64>,
    pub s_values: Option<Vec<f64>>,
    pub eps_a: Option<f64>,
    pub eps_b: Option<f64>,
}

impl Settings {
    pub fn to_json(&self) -> Value {
        json!({
            "system": self.system.map(|s| s.name()),
            "family": self.family.map(|f| f.name()),
            "seed": self.seed,
            "out_dir": self.out_dir.display().to_string(),
            "jobs": self.jobs,
            "full_scale": self.full_scale,
            "n_random": self.n_random,
            "max_iter": self.max_iter,
            "tol": self.tol,
            "cycle_window": self.cycle_window,
            "p": self.p,
            "step": self.step,
            "rule": self.rule.map(|r| r.name()),
            "s": self.s,
            "s_values": self.s_values,
            "eps_a": self.eps_a,
            "eps_b": self.eps_b,
        })
    }
}

/// `key = value` pairs with their 1-based line numbers.
pub fn parse_config_text(text: &str, origin: &Path) -> Result<BTreeMap<String, (usize, String)>, CliError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |why: &str| CliError::Usage(format!("{}:{lineno}: {why}\n  {}", origin.display(), raw.trim_end()));
        let Some((key, value)) = line.split_once('=') else {
            return Err(bad("expected `key = value`"));
        };
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        if !KEYS.contains(&key.as_str()) || key == "config" {
            return Err(bad(&format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(bad(&format!("missing value for `{key}`")));
        }
        if out.insert(key.clone(), (lineno, value.to_string())).is_some() {
            return Err(bad(&format!("duplicate key `{key}`")));
        }
    }
    Ok(out)
}

struct FileValues {
    origin: PathBuf,
    values: BTreeMap<String, (usize, String)>,
}

impl FileValues {
    fn get<T>(&self, key: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, raw)) => parse(raw).map(Some).ok_or_else(|| {
                CliError::Usage(format!(
                    "{}:{line}: invalid value for `{key}`\n  {key} = {raw}",
                    self.origin.display()
                ))
            }),
        }
    }
}

fn parse_system(s: &str) -> Option<GallerySystem> {
    GallerySystem::parse(s)
}

fn parse_family(s: &str) -> Option<EpsFamily> {
    EpsFamily::parse(s)
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(|x| x.trim().parse().ok()).collect()
}

fn flag<T>(value: Option<String>, name: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Option<T>, CliError> {
    match value {
        None => Ok(None),
        Some(raw) => parse(&raw)
            .map(Some)
            .ok_or_else(|| CliError::Usage(format!("invalid value for --{name}: {raw}"))),
    }
}

fn check_unit(name: &str, v: Option<f64>, open_top: bool) -> Result<(), CliError> {
    if let Some(x) = v {
        let ok = if open_top {
            (0.0..1.0).contains(&x)
        } else {
            (0.0..=1.0).contains(&x)
        };
        if !ok {
            let range = if open_top { "[0, 1)" } else { "[0, 1]" };
            return Err(CliError::Usage(format!("{name} = {x} is outside {range}")));
        }
    }
    Ok(())
}

pub fn resolve(opts: Opts) -> Result<Settings, CliError> {
    let file = match &opts.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            FileValues {
                origin: path.clone(),
                values: parse_config_text(&text, path)?,
            }
        }
        None => FileValues {
            origin: PathBuf::new(),
            values: BTreeMap::new(),
        },
    };
    let num = |s: &str| s.parse::<f64>().ok().filter(|x| x.is_finite());
    let int = |s: &str| s.parse::<usize>().ok();

    let settings = Settings {
        system: flag(opts.system, "system", parse_system)?.or(file.get("system", parse_system)?),
        family: flag(opts.family, "family", parse_family)?.or(file.get("family", parse_family)?),
        seed: opts.seed.or(file.get("seed", |s| s.parse().ok())?).unwrap_or(42),
        out_dir: opts
            .out_dir
            .or(file.get("out_dir", |s| Some(PathBuf::from(s)))?)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
        jobs: opts.jobs.or(file.get("jobs", int)?).unwrap_or(1),
        full_scale: opts.full_scale || file.get("full_scale", parse_bool)?.unwrap_or(false),
        n_random: opts.n_random.or(file.get("n_random", int)?),
        max_iter: opts.max_iter.or(file.get("max_iter", int)?),
        tol: opts.tol.or(file.get("tol", num)?),
        cycle_window: opts.cycle_window.or(file.get("cycle_window", int)?),
        p: opts.p.or(file.get("p", num)?),
        step: opts.step.or(file.get("step", num)?),
        rule: flag(opts.rule, "rule", Fig3Rule::parse)?.or(file.get("rule", Fig3Rule::parse)?),
        s: opts.s.or(file.get("s", num)?),
        s_values: flag(opts.s_values, "s-values", parse_list)?.or(file.get("s_values", parse_list)?),
        eps_a: opts.eps_a.or(file.get("eps_a", num)?),
        eps_b: opts.eps_b.or(file.get("eps_b", num)?),
    };

    check_unit("p", settings.p, true)?;
    check_unit("s", settings.s, false)?;
    check_unit("eps_a", settings.eps_a, false)?;
    check_unit("eps_b", settings.eps_b, false)?;
    for &s in settings.s_values.iter().flatten() {
        check_unit("s_values entry", Some(s), false)?;
    }
    if let Some(step) = settings.step {
        if !(step > 0.0 && step <= 1.0) {
            return Err(CliError::Usage(format!("step = {step} is outside (0, 1]")));
        }
    }
    if let Some(tol) = settings.tol {
        if tol <= 0.0 {
            return Err(CliError::Usage(format!("tol = {tol} must be positive")));
        }
    }
    if settings.n_random == Some(0) || settings.max_iter == Some(0) {
        return Err(CliError::Usage("n_random and max_iter must be at least 1".into()));
    }
    Ok(settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_dashes() {
        let text = "# sweep settings\nsystem = u2\nn-random = 5  # small\n\nfamily=pure\n";
        let map = parse_config_text(text, Path::new("run.conf")).unwrap();
        assert_eq!(map["system"], (2, "u2".to_string()));
        assert_eq!(map["n_random"], (3, "5".to_string()));
        assert_eq!(map["family"].1, "pure");
    }

    #[test]
    fn rejects_unknown_keys_with_line() {
        let err = parse_config_text("seed = 1\ncolour = blue\n", Path::new("x.conf")).unwrap_err();
        let CliError::Usage(msg) = err else { panic!() };
        assert!(msg.contains("x.conf:2"));
        assert!(msg.contains("colour = blue"));
    }

    #[test]
    fn rejects_malformed_and_duplicate_lines() {
        assert!(parse_config_text("seed 1\n", Path::new("x")).is_err());
        assert!(parse_config_text("seed = 1\nseed = 2\n", Path::new("x")).is_err());
        assert!(parse_config_text("seed =\n", Path::new("x")).is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "seed = 9\np = 0.2\nfamily = pure\n").unwrap();
        let opts = Opts {
            config: Some(path),
            seed: Some(3),
            ..Opts::default()
        };
        let s = resolve(opts).unwrap();
        assert_eq!(s.seed, 3);
        assert_eq!(s.p, Some(0.2));
        assert_eq!(s.family, Some(EpsFamily::Pure));
        assert_eq!(s.jobs, 1);
    }

    #[test]
    fn out_of_range_values_are_usage_errors() {
        for opts in [
            Opts {
                p: Some(1.0),
                ..Opts::default()
            },
            Opts {
                step: Some(0.0),
                ..Opts::default()
            },
            Opts {
                system: Some("u9".into()),
                ..Opts::default()
            },
            Opts {
                s_values: Some("0,2".into()),
                ..Opts::default()
            },
        ] {
            assert!(matches!(resolve(opts), Err(CliError::Usage(_))));
        }
    }
}
