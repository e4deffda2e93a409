//! Fixed-point procedures for the induced CV map.
//!
//! * [`deutsch_cesaro`]: Cesàro mean of the bare orbit `D^k(τ0)`.
//! * [`allen_cesaro`]: Cesàro mean of the noisy orbit `(N∘D)^k(τ0)`.
//! * [`ralph_iterate`]: the orbit of `N∘D` itself (the bare orbit when
//!   `p = 0`), with [`ralph_closed_form`] solving for its limit directly.
//!
//! The orbit engine behind all three stops on convergence of the orbit,
//! on a detected cycle, or after `max_iter` steps. A convergent orbit and its
//! Cesàro mean share the same limit, and the mean of a cycle is the average
//! of its states, so the averaging engines return those limits directly
//! instead of waiting for the slow `O(1/n)` drift of the running mean.

use std::collections::VecDeque;
use std::fmt;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::channels::{depolarize_raw, superoperator, CtcSystem, Superoperator};
use crate::error::{Error, Result};
use crate::qmat::{frobenius_norm, hermitian_part, identity, trace_norm_half, CMatrix, DensityMatrix};

/// Singular values below this mark the kernel of `M - Id`.
pub const KERNEL_TOL: f64 = 1e-8;
/// Spectral proximity for [`exceptional_p`].
pub const EXCEPTIONAL_TOL: f64 = 1e-9;
/// Cap on repeated squarings in [`limit_superoperator`].
pub const MAX_SQUARINGS: usize = 60;
/// Steps between consistency checks of the running mean.
const MEAN_CHECK_EVERY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EngineConfig {
    pub max_iter: usize,
    pub tol: f64,
    pub cycle_window: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: 1e-10,
            cycle_window: 64,
        }
    }
}

impl EngineConfig {
    pub fn new(max_iter: usize, tol: f64, cycle_window: usize) -> Result<Self> {
        let cfg = Self {
            max_iter,
            tol,
            cycle_window,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return Err(Error::OutOfRange {
                name: "max_iter",
                value: self.max_iter as f64,
                range: ">= 1",
            });
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::OutOfRange {
                name: "tol",
                value: self.tol,
                range: "> 0",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Converged,
    Cycle,
    Exhausted,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::Cycle => "cycle",
            Status::Exhausted => "exhausted",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of an engine run.
///
/// `state` is the limit for `Converged`, the mean of the cycle for `Cycle`,
/// and the last iterate (orbit engines) or running mean (averaging engines)
/// for `Exhausted`. `residual` is the trace distance between the iterated
/// map applied to `state` and `state`, except for `Cycle`, where it is the
/// distance between the image of the last cycle state and the first.
#[derive(Debug, Clone)]
pub struct IterationOutcome {
    pub status: Status,
    pub state: DensityMatrix,
    pub steps: usize,
    pub cycle_states: Option<Vec<DensityMatrix>>,
    pub period: Option<usize>,
    pub residual: f64,
}

fn td(a: &CMatrix, b: &CMatrix) -> f64 {
    trace_norm_half(&(a - b))
}

/// `td(a, b) < tol`, skipping the eigensolve when Frobenius bounds decide it.
fn td_below(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    let diff = a - b;
    let lower = 0.5 * frobenius_norm(&diff);
    if lower >= tol {
        return false;
    }
    if lower * (diff.nrows() as f64).sqrt() < tol {
        return true;
    }
    trace_norm_half(&diff) < tol
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Report {
    LastIterate,
    RunningMean,
}

fn state_of(m: CMatrix) -> DensityMatrix {
    DensityMatrix::assume_valid(m)
}

fn run_orbit(m: &Superoperator, tau0: &CMatrix, cfg: &EngineConfig, report: Report) -> IterationOutcome {
    let tol = cfg.tol;
    let mut history: VecDeque<CMatrix> = VecDeque::with_capacity(cfg.cycle_window + 1);
    let mut current = hermitian_part(tau0);
    let mut mean = current.clone();
    history.push_back(current.clone());

    for n in 1..=cfg.max_iter {
        let next = hermitian_part(&m.apply(&current));
        mean += (&next - &mean).unscale((n + 1) as f64);

        if td_below(&next, &current, tol) {
            let residual = td(&m.apply(&next), &next);
            return IterationOutcome {
                status: Status::Converged,
                state: state_of(next),
                steps: n,
                cycle_states: None,
                period: None,
                residual,
            };
        }

        // history.back() is lag 1; lag L sits at index len - L
        let len = history.len();
        let moving = !td_below(&next, &current, 100.0 * tol);
        if moving {
            for lag in 2..=cfg.cycle_window.min(len) {
                let past = &history[len - lag];
                if td_below(&next, past, tol) {
                    let states: Vec<CMatrix> = history.range(len - lag..).cloned().collect();
                    let avg = states
                        .iter()
                        .fold(CMatrix::zeros(next.nrows(), next.ncols()), |acc, s| acc + s)
                        .unscale(lag as f64);
                    let residual = td(&m.apply(states.last().expect("lag >= 2")), &states[0]);
                    return IterationOutcome {
                        status: Status::Cycle,
                        state: state_of(avg),
                        steps: n,
                        cycle_states: Some(states.into_iter().map(state_of).collect()),
                        period: Some(lag),
                        residual,
                    };
                }
            }
        }

        if report == Report::RunningMean && n % MEAN_CHECK_EVERY == 0 && td_below(&m.apply(&mean), &mean, tol) {
            let residual = td(&m.apply(&mean), &mean);
            return IterationOutcome {
                status: Status::Converged,
                state: state_of(mean),
                steps: n,
                cycle_states: None,
                period: None,
                residual,
            };
        }

        if history.len() >= cfg.cycle_window.max(1) {
            history.pop_front();
        }
        history.push_back(next.clone());
        current = next;
    }

    let state = match report {
        Report::LastIterate => current,
        Report::RunningMean => mean,
    };
    let residual = td(&m.apply(&state), &state);
    IterationOutcome {
        status: Status::Exhausted,
        state: state_of(state),
        steps: cfg.max_iter,
        cycle_states: None,
        period: None,
        residual,
    }
}

fn check_start(sys: &CtcSystem, tau0: &DensityMatrix, cfg: &EngineConfig) -> Result<()> {
    cfg.validate()?;
    if tau0.dim() != sys.d_cv() {
        return Err(Error::DimensionMismatch {
            expected: sys.d_cv(),
            got: tau0.dim(),
        });
    }
    Ok(())
}

fn require_noise(sys: &CtcSystem) -> Result<()> {
    if sys.p() > 0.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "p",
            value: sys.p(),
            range: "(0, 1)",
        })
    }
}

/// Orbit of `N∘D` from `τ0` (of `D` when `p = 0`).
pub fn ralph_iterate(sys: &CtcSystem, tau0: &DensityMatrix, cfg: &EngineConfig) -> Result<IterationOutcome> {
    check_start(sys, tau0, cfg)?;
    let m = superoperator(sys, true);
    Ok(run_orbit(&m, tau0.matrix(), cfg, Report::LastIterate))
}

/// Cesàro mean of the bare orbit; `sys.p` is ignored.
pub fn deutsch_cesaro(sys: &CtcSystem, tau0: &DensityMatrix, cfg: &EngineConfig) -> Result<IterationOutcome> {
    check_start(sys, tau0, cfg)?;
    let m = superoperator(sys, false);
    Ok(run_orbit(&m, tau0.matrix(), cfg, Report::RunningMean))
}

/// Cesàro mean of the noisy orbit `(N∘D)^k(τ0)`, noise applied after every
/// interaction. Requires `p > 0`.
pub fn allen_cesaro(sys: &CtcSystem, tau0: &DensityMatrix, cfg: &EngineConfig) -> Result<IterationOutcome> {
    check_start(sys, tau0, cfg)?;
    require_noise(sys)?;
    let m = superoperator(sys, true);
    Ok(run_orbit(&m, tau0.matrix(), cfg, Report::RunningMean))
}

/// Depolarizing applied once to the Cesàro mean of the bare orbit, i.e. the
/// mean of `N(D^k(τ0))`. The residual is measured against `N∘D`.
pub fn allen_cesaro_terminal(sys: &CtcSystem, tau0: &DensityMatrix, cfg: &EngineConfig) -> Result<IterationOutcome> {
    require_noise(sys)?;
    let mut out = deutsch_cesaro(sys, tau0, cfg)?;
    let state = depolarize_raw(out.state.matrix(), sys.p());
    let noisy = superoperator(sys, true);
    out.residual = td(&noisy.apply(&state), &state);
    out.state = state_of(state);
    Ok(out)
}

/// Solve `(Id - (1-p)M) vec(τ) = p vec(I/d)` for the unique noisy fixed point.
pub fn ralph_closed_form(sys: &CtcSystem) -> Result<DensityMatrix> {
    require_noise(sys)?;
    let p = sys.p();
    let d = sys.d_cv();
    let m = superoperator(sys, false);
    let a = identity(d * d) - m.matrix().scale(1.0 - p);
    let rhs = DVector::from_column_slice(identity(d).unscale(d as f64).scale(p).as_slice());
    let x = a.lu().solve(&rhs).ok_or(Error::SingularSystem)?;
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularSystem);
    }
    let tau = CMatrix::from_column_slice(d, d, x.as_slice());
    DensityMatrix::new(hermitian_part(&tau))
}

/// `td(D(τ), τ)` under the bare map.
pub fn consistency_residual(sys: &CtcSystem, tau: &DensityMatrix) -> Result<f64> {
    let image = crate::channels::d_map(sys, tau)?;
    Ok(td(image.matrix(), tau.matrix()))
}

/// Real orthonormal (Hilbert–Schmidt) basis of Hermitian operators fixed by
/// a map.
#[derive(Debug, Clone)]
pub struct FixedSubspace {
    basis: Vec<CMatrix>,
}

impl FixedSubspace {
    pub fn from_basis(basis: Vec<CMatrix>) -> Self {
        Self { basis }
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Hilbert–Schmidt projection of `h` onto the real span of the basis.
    pub fn project(&self, h: &CMatrix) -> CMatrix {
        let d = h.nrows();
        self.basis.iter().fold(CMatrix::zeros(d, d), |acc, b| {
            let coeff = real_inner(b, h);
            acc + b.scale(coeff)
        })
    }
}

/// `Re tr(a† b)`.
pub(crate) fn real_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Gram–Schmidt under [`real_inner`], twice per vector, dropping anything
/// whose remainder falls below `drop_tol`.
pub(crate) fn orthonormalize(candidates: impl IntoIterator<Item = CMatrix>, drop_tol: f64) -> Vec<CMatrix> {
    let mut out: Vec<CMatrix> = Vec::new();
    for mut v in candidates {
        let start = frobenius_norm(&v);
        if start < drop_tol {
            continue;
        }
        v.unscale_mut(start);
        for _ in 0..2 {
            for b in &out {
                let c = real_inner(b, &v);
                v -= b.scale(c);
            }
        }
        let n = frobenius_norm(&v);
        if n > drop_tol {
            out.push(v.unscale(n));
        }
    }
    out
}

/// Kernel of `M - Id` restricted to Hermitian operators.
pub fn fixed_subspace_of(m: &Superoperator) -> FixedSubspace {
    let d = m.dim();
    let a = m.matrix() - identity(d * d);
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sv = &svd.singular_values;
    let mut kernel: Vec<usize> = (0..sv.len()).filter(|&k| sv[k] < KERNEL_TOL).collect();
    if kernel.is_empty() {
        let smallest = (0..sv.len()).min_by(|&x, &y| sv[x].total_cmp(&sv[y])).expect("d >= 1");
        kernel.push(smallest);
    }
    let i = Complex64::new(0.0, 1.0);
    let mut candidates = Vec::new();
    for k in kernel {
        let v: Vec<Complex64> = v_t.row(k).iter().map(|z| z.conj()).collect();
        let b = CMatrix::from_column_slice(d, d, &v);
        let bd = b.adjoint();
        candidates.push((&b + &bd).scale(0.5));
        candidates.push((&b - &bd) / (i * 2.0));
    }
    FixedSubspace::from_basis(orthonormalize(candidates, KERNEL_TOL))
}

/// Hermitian fixed operators of the bare map.
pub fn fixed_subspace(sys: &CtcSystem) -> FixedSubspace {
    fixed_subspace_of(&superoperator(sys, false))
}

/// `lim M^(2^k)` of the bare map by repeated squaring, stopping when
/// successive squares differ by less than `cfg.tol` in Frobenius norm.
pub fn limit_superoperator(sys: &CtcSystem, cfg: &EngineConfig) -> Result<Superoperator> {
    cfg.validate()?;
    let mut p = superoperator(sys, false);
    for _ in 0..MAX_SQUARINGS {
        let sq = p.compose(&p);
        if frobenius_norm(&(sq.matrix() - p.matrix())) < cfg.tol {
            return Ok(sq);
        }
        p = sq;
    }
    Err(Error::NonConvergent(MAX_SQUARINGS))
}

/// Cesàro projector `lim 1/n Σ_{k<n} M^k` via the doubling
/// `S_2n = (S_n + M^n S_n)/2`.
pub fn cesaro_projector(m: &Superoperator, cfg: &EngineConfig) -> Result<Superoperator> {
    cfg.validate()?;
    let d = m.dim();
    let mut s = identity(d * d);
    let mut power = m.matrix().clone();
    for _ in 0..MAX_SQUARINGS {
        let next = (&s + &power * &s).scale(0.5);
        let delta = frobenius_norm(&(&next - &s));
        power = &power * &power;
        s = next;
        if delta < cfg.tol {
            return Superoperator::from_matrix(d, s);
        }
    }
    Err(Error::NonConvergent(MAX_SQUARINGS))
}

#[derive(Debug, Clone, Serialize)]
pub struct ExceptionalP {
    pub exceptional: bool,
    /// `1/(1-p)`.
    pub target: f64,
    pub spectrum: Vec<(f64, f64)>,
    pub spectral_radius: f64,
    /// Smallest `|λ - 1/(1-p)|` over the spectrum.
    pub min_gap: f64,
    /// The spectrum lies inside the unit disc, so no `p` in `(0, 1)` can be
    /// exceptional for this map.
    pub vacuous: bool,
}

/// Whether `1/(1-p)` is (numerically) an eigenvalue of the bare map.
pub fn exceptional_p(sys: &CtcSystem) -> Result<ExceptionalP> {
    require_noise(sys)?;
    let target = 1.0 / (1.0 - sys.p());
    let spectrum = superoperator(sys, false).spectrum();
    let t = Complex64::new(target, 0.0);
    let min_gap = spectrum.iter().map(|z| (z - t).norm()).fold(f64::INFINITY, f64::min);
    let spectral_radius = spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(ExceptionalP {
        exceptional: min_gap < EXCEPTIONAL_TOL,
        target,
        spectrum: spectrum.iter().map(|z| (z.re, z.im)).collect(),
        spectral_radius,
        min_gap,
        vacuous: spectral_radius <= 1.0 + EXCEPTIONAL_TOL,
    })
}

pub(crate) fn maximally_mixed(d: usize) -> CMatrix {
    identity(d).unscale(d as f64)
}
