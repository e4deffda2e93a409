//! Maximum entropy selection among consistent CV states.
//!
//! The consistent states form the density-matrix slice of the fixed
//! subspace. Starting from a consistent anchor, the solver climbs the
//! entropy along trace-zero directions of that subspace, with an exact line
//! search on the directional derivative that never leaves the PSD cone.

use crate::channels::{superoperator, CtcSystem};
use crate::engines::{
    cesaro_projector, consistency_residual, deutsch_cesaro, fixed_subspace, maximally_mixed, orthonormalize,
    real_inner, EngineConfig, FixedSubspace,
};
use crate::error::{Error, Result};
use crate::qmat::{
    eig_unchecked, eigenvalues_unchecked, entropy_of_values, hermitian_part, identity, trace, CMatrix, DensityMatrix,
    ENTROPY_CLAMP,
};

/// Projected gradient norm at which the ascent stops.
pub const GRADIENT_TOL: f64 = 1e-8;
pub const MAX_ASCENT_ITER: usize = 10_000;
/// Largest consistency residual accepted for an anchor.
pub const ANCHOR_TOL: f64 = 1e-6;
/// Eigenvalues down to this are treated as inside the PSD cone.
const PSD_SLACK: f64 = 1e-12;
const LINE_SEARCH_TRIES: usize = 60;

#[derive(Debug, Clone)]
pub struct MaxEntProblem {
    pub subspace: FixedSubspace,
    pub anchor: DensityMatrix,
    /// Weight of `I/d` mixed in before evaluating the gradient.
    pub interior_eps: f64,
}

#[derive(Debug, Clone)]
pub struct MaxEntResult {
    pub state: DensityMatrix,
    pub entropy_bits: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
}

/// Orthonormal basis of the trace-zero part of the subspace span.
pub fn trace_zero_directions(subspace: &FixedSubspace) -> Vec<CMatrix> {
    let basis = subspace.basis();
    let Some(first) = basis.first() else {
        return Vec::new();
    };
    let d = first.nrows();
    let t: Vec<f64> = basis.iter().map(|b| trace(b).re).collect();
    let t2: f64 = t.iter().map(|x| x * x).sum();
    if t2 < 1e-24 {
        return basis.to_vec();
    }
    let carrier = basis
        .iter()
        .zip(&t)
        .fold(CMatrix::zeros(d, d), |acc, (b, &ti)| acc + b.scale(ti));
    let candidates = basis.iter().zip(&t).map(|(b, &ti)| b - carrier.scale(ti / t2));
    orthonormalize(candidates, 1e-8)
}

fn project_onto(h: &CMatrix, dirs: &[CMatrix]) -> CMatrix {
    let d = h.nrows();
    dirs.iter()
        .fold(CMatrix::zeros(d, d), |acc, b| acc + b.scale(real_inner(b, h)))
}

/// Hilbert–Schmidt projection of `h` onto the trace-zero part of the span.
pub fn project_affine(h: &CMatrix, subspace: &FixedSubspace) -> Result<CMatrix> {
    if let Some(b) = subspace.basis().first() {
        if h.nrows() != b.nrows() || h.ncols() != b.ncols() {
            return Err(Error::DimensionMismatch {
                expected: b.nrows(),
                got: h.nrows(),
            });
        }
    }
    Ok(project_onto(h, &trace_zero_directions(subspace)))
}

/// `∇S(ρ) = -(log₂ρ + I/ln 2)`. Fails unless `ρ` is strictly positive.
pub fn entropy_gradient(rho: &DensityMatrix) -> Result<CMatrix> {
    let min = rho.eigenvalues()[0];
    if min <= ENTROPY_CLAMP {
        return Err(Error::NotPositive(min));
    }
    Ok(gradient_raw(rho.matrix()))
}

fn gradient_raw(rho: &CMatrix) -> CMatrix {
    let inv_ln2 = std::f64::consts::LOG2_E;
    eig_unchecked(&hermitian_part(rho)).map_values(|l| -(l.log2() + inv_ln2))
}

fn entropy_raw(rho: &CMatrix) -> f64 {
    entropy_of_values(&eigenvalues_unchecked(&hermitian_part(rho)))
}

impl MaxEntProblem {
    pub fn new(subspace: FixedSubspace, anchor: DensityMatrix) -> Self {
        Self {
            subspace,
            anchor,
            interior_eps: 1e-9,
        }
    }

    /// Fixed subspace of the bare map plus an anchor from the Cesàro mean of
    /// the orbit of `I/d`, snapped into the subspace.
    pub fn for_system(sys: &CtcSystem) -> Result<Self> {
        let subspace = fixed_subspace(sys);
        let d = sys.d_cv();
        let cfg = EngineConfig::default();
        let start = DensityMatrix::maximally_mixed(d);
        let out = deutsch_cesaro(sys, &start, &cfg)?;
        let mut anchor = out.state.matrix().clone();
        if consistency_residual(sys, &out.state)? > ANCHOR_TOL {
            let proj = cesaro_projector(&superoperator(sys, false), &EngineConfig { tol: 1e-12, ..cfg })
                .map_err(|_| Error::AnchorFailed(out.residual))?;
            anchor = proj.apply(&maximally_mixed(d));
        }
        let snapped = hermitian_part(&subspace.project(&anchor));
        let tr = trace(&snapped).re;
        let anchor = DensityMatrix::new(snapped.unscale(tr)).map_err(|_| Error::AnchorFailed(tr))?;
        let residual = consistency_residual(sys, &anchor)?;
        if residual > ANCHOR_TOL {
            return Err(Error::AnchorFailed(residual));
        }
        Ok(Self::new(subspace, anchor))
    }

    fn regularize(&self, x: &CMatrix) -> CMatrix {
        let d = x.nrows();
        x.scale(1.0 - self.interior_eps) + identity(d).scale(self.interior_eps / d as f64)
    }

    fn projected_gradient(&self, x: &CMatrix, dirs: &[CMatrix]) -> CMatrix {
        project_onto(&gradient_raw(&self.regularize(x)), dirs)
    }

    /// Steepest ascent inside the subspace slice. Each step picks `t` with
    /// `0 ≤ φ'(t) ≤ φ'(0)/2` for `φ(t) = S(x + tG)`, so the entropy never
    /// decreases.
    pub fn solve(&self) -> Result<MaxEntResult> {
        let dirs = trace_zero_directions(&self.subspace);
        let mut x = self.anchor.matrix().clone();
        let mut step = 1.0;
        let mut iterations = 0;
        let mut g = self.projected_gradient(&x, &dirs);
        let mut g2 = real_inner(&g, &g);

        while iterations < MAX_ASCENT_ITER && g2.sqrt() >= GRADIENT_TOL {
            let mut lo = 0.0;
            let mut hi = f64::INFINITY;
            let mut t = step;
            let mut accepted = None;
            for _ in 0..LINE_SEARCH_TRIES {
                let y = &x + g.scale(t);
                if eigenvalues_unchecked(&hermitian_part(&y))[0] < -PSD_SLACK {
                    hi = t;
                } else {
                    let slope = real_inner(&g, &gradient_raw(&self.regularize(&y)));
                    if slope > 0.5 * g2 {
                        lo = t;
                    } else if slope < 0.0 {
                        hi = t;
                    } else {
                        accepted = Some(t);
                        break;
                    }
                }
                t = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * t };
            }
            let t = match accepted {
                Some(t) => t,
                None if lo > 0.0 => lo,
                None => break,
            };
            x = hermitian_part(&(&x + g.scale(t)));
            step = t;
            iterations += 1;
            g = self.projected_gradient(&x, &dirs);
            g2 = real_inner(&g, &g);
        }

        let tr = trace(&x).re;
        let state = DensityMatrix::new(x.unscale(tr))?;
        Ok(MaxEntResult {
            entropy_bits: entropy_raw(state.matrix()),
            state,
            iterations,
            kkt_residual: g2.sqrt(),
        })
    }
}

/// Maximum-entropy consistent CV state of a system (noise ignored).
pub fn max_entropy_fixed_state(sys: &CtcSystem) -> Result<MaxEntResult> {
    MaxEntProblem::for_system(sys)?.solve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::d_map;
    use crate::engines::IterationOutcome;
    use crate::gallery::{u1_system, u2_system};
    use crate::qmat::random_unitary;
    use crate::qmat::{diag, random_density, random_hermitian, von_neumann_entropy, DimSplit, UnitaryMatrix};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn ground() -> DensityMatrix {
        DensityMatrix::basis(2, 0)
    }

    fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn third() -> CMatrix {
        diag(&[1.0 / 3.0, 0.0, 1.0 / 3.0, 1.0 / 3.0])
    }

    fn trace_zero(h: &CMatrix) -> CMatrix {
        let d = h.nrows();
        h - identity(d).scale(trace(h).re / d as f64)
    }

    fn fd_slope(rho: &CMatrix, dir: &CMatrix, h: f64) -> f64 {
        (entropy_raw(&(rho + dir.scale(h))) - entropy_raw(&(rho - dir.scale(h)))) / (2.0 * h)
    }

    #[test]
    fn u2_max_entropy_state() {
        let sys = u2_system(ground(), 0.0).unwrap();
        let res = max_entropy_fixed_state(&sys).unwrap();
        assert!(max_abs_diff(res.state.matrix(), &third()) < 1e-6);
        assert_abs_diff_eq!(res.entropy_bits, 3f64.log2(), epsilon = 1e-9);
        assert!(res.kkt_residual < GRADIENT_TOL);
        assert!(consistency_residual(&sys, &res.state).unwrap() < 1e-6);
    }

    #[test]
    fn u1_unique_fixed_state() {
        let sys = u1_system(ground(), 0.0).unwrap();
        let res = max_entropy_fixed_state(&sys).unwrap();
        assert!(max_abs_diff(res.state.matrix(), &third()) < 1e-8);
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn identity_coupling_gives_maximally_mixed() {
        let sys = CtcSystem::new(UnitaryMatrix::identity(4), ground(), DimSplit::new(2, 2).unwrap(), 0.0).unwrap();
        let res = max_entropy_fixed_state(&sys).unwrap();
        assert!(max_abs_diff(res.state.matrix(), &identity(2).scale(0.5)) < 1e-9);
        assert_abs_diff_eq!(res.entropy_bits, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn maximally_mixed_is_critical() {
        let g = entropy_gradient(&DensityMatrix::maximally_mixed(2)).unwrap();
        let c = 1.0 - std::f64::consts::LOG2_E;
        assert!(max_abs_diff(&g, &identity(2).scale(c)) < 1e-12);
        assert!(frobenius(&trace_zero(&g)) < 1e-12);
    }

    fn frobenius(m: &CMatrix) -> f64 {
        crate::qmat::frobenius_norm(m)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let rho = diag(&[0.75, 0.25]);
        let g = entropy_gradient(&DensityMatrix::new(rho.clone()).unwrap()).unwrap();
        for seed in 0..5 {
            let dir = trace_zero(&random_hermitian(2, seed));
            let analytic = real_inner(&g, &dir);
            let numeric = fd_slope(&rho, &dir, 1e-5);
            assert!((analytic - numeric).abs() <= 1e-4 * numeric.abs().max(1e-12));
        }
    }

    #[test]
    fn gradient_rejects_rank_deficient_input() {
        assert!(entropy_gradient(&DensityMatrix::basis(2, 0)).is_err());
    }

    #[test]
    fn ascent_direction_points_to_uniform_population() {
        let rho = diag(&[0.5, 0.0, 0.25, 0.25]);
        let reg = rho.scale(1.0 - 1e-9) + identity(4).scale(1e-9 / 4.0);
        let dir = diag(&[-1.0, 0.0, 0.5, 0.5]);
        let slope = real_inner(&gradient_raw(&reg), &dir);
        assert!(slope > 0.0);
        assert!(entropy_raw(&(&rho + dir.scale(1e-3))) > entropy_raw(&rho));
    }

    #[test]
    fn projection_examples() {
        let sys = u2_system(ground(), 0.0).unwrap();
        let fs = fixed_subspace(&sys);
        let inside = diag(&[1.0, 0.0, -0.5, -0.5]);
        assert!(max_abs_diff(&project_affine(&inside, &fs).unwrap(), &inside) < 1e-12);
        let outside = diag(&[0.0, 1.0, 0.0, 0.0]);
        assert!(frobenius(&project_affine(&outside, &fs).unwrap()) < 1e-12);
        assert!(project_affine(&identity(2), &fs).is_err());
    }

    #[test]
    fn anchor_and_result_invariants_on_u2() {
        let sys = u2_system(ground(), 0.0).unwrap();
        let problem = MaxEntProblem::for_system(&sys).unwrap();
        assert!(consistency_residual(&sys, &problem.anchor).unwrap() < ANCHOR_TOL);
        let res = problem.solve().unwrap();
        assert!(res.entropy_bits >= von_neumann_entropy(&problem.anchor) - 1e-9);
        for seed in 0..10 {
            let out: IterationOutcome =
                deutsch_cesaro(&sys, &random_density(4, seed), &EngineConfig::default()).unwrap();
            assert!(res.entropy_bits >= von_neumann_entropy(&out.state) - 1e-6);
        }
        let again = max_entropy_fixed_state(&sys).unwrap();
        assert!(max_abs_diff(res.state.matrix(), again.state.matrix()) < 1e-8);
        let image = d_map(&sys, &res.state).unwrap();
        assert!(max_abs_diff(image.matrix(), res.state.matrix()) < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn prop_gradient_finite_difference(seed in 0u64..100_000) {
            let rho = random_density(3, seed);
            prop_assume!(rho.eigenvalues()[0] > 1e-3);
            let g = entropy_gradient(&rho).unwrap();
            let dir = trace_zero(&random_hermitian(3, seed + 1));
            let analytic = real_inner(&g, &dir);
            let numeric = fd_slope(rho.matrix(), &dir, 1e-5);
            prop_assert!((analytic - numeric).abs() <= 1e-4 * numeric.abs().max(1e-3));
        }

        #[test]
        fn prop_projection_is_idempotent(seed in 0u64..100_000) {
            let sys = u2_system(ground(), 0.0).unwrap();
            let fs = fixed_subspace(&sys);
            let h = random_hermitian(4, seed);
            let once = project_affine(&h, &fs).unwrap();
            let twice = project_affine(&once, &fs).unwrap();
            prop_assert!(max_abs_diff(&once, &twice) < 1e-12);
            prop_assert!(trace(&once).norm() < 1e-12);
        }

        #[test]
        fn prop_result_beats_cesaro_states(seed in 0u64..100_000) {
            let sys = CtcSystem::new(random_unitary(6, seed), random_density(2, seed + 1), DimSplit::new(2, 3).unwrap(), 0.0).unwrap();
            let res = max_entropy_fixed_state(&sys).unwrap();
            prop_assert!(consistency_residual(&sys, &res.state).unwrap() < 1e-6);
            let out = deutsch_cesaro(&sys, &random_density(3, seed + 2), &EngineConfig::default()).unwrap();
            if consistency_residual(&sys, &out.state).unwrap() < 1e-9 {
                prop_assert!(res.entropy_bits >= von_neumann_entropy(&out.state) - 1e-6);
            }
        }
    }
}
