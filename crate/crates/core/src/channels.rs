//! The D-CTC interaction map and its matrix representations.
//!
//! [`d_map`] is the CV-side channel `τ ↦ Tr_CR(U(ρ_CR ⊗ τ)U†)` and
//! [`noisy_d_map`] follows it with a depolarizing channel of strength `p`.
//! Both can be frozen into a [`Superoperator`], from which the Choi matrix and
//! a Kraus decomposition are derived.

use nalgebra::Schur;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qmat::{
    eig_unchecked, frobenius_norm, hermitian_part, identity, partial_trace, tensor, trace, CMatrix, DensityMatrix,
    DimSplit, Subsystem, UnitaryMatrix,
};

/// Default cutoff below which Choi eigenvalues are discarded.
pub const KRAUS_TOL: f64 = 1e-10;

/// A unitary coupling, the CR input, the dimension split and the
/// depolarizing strength applied on the CV register.
#[derive(Debug, Clone)]
pub struct CtcSystem {
    u: UnitaryMatrix,
    rho_cr: DensityMatrix,
    split: DimSplit,
    p: f64,
}

impl CtcSystem {
    pub fn new(u: UnitaryMatrix, rho_cr: DensityMatrix, split: DimSplit, p: f64) -> Result<Self> {
        if u.dim() != split.total() {
            return Err(Error::DimensionMismatch {
                expected: split.total(),
                got: u.dim(),
            });
        }
        if rho_cr.dim() != split.d_cr {
            return Err(Error::DimensionMismatch {
                expected: split.d_cr,
                got: rho_cr.dim(),
            });
        }
        check_p(p, false)?;
        Ok(Self { u, rho_cr, split, p })
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        check_p(p, false)?;
        Ok(Self { p, ..self.clone() })
    }

    pub fn with_rho_cr(&self, rho_cr: DensityMatrix) -> Result<Self> {
        Self::new(self.u.clone(), rho_cr, self.split, self.p)
    }

    pub fn unitary(&self) -> &UnitaryMatrix {
        &self.u
    }

    pub fn rho_cr(&self) -> &DensityMatrix {
        &self.rho_cr
    }

    pub fn split(&self) -> DimSplit {
        self.split
    }

    pub fn d_cv(&self) -> usize {
        self.split.d_cv
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    fn check_cv(&self, tau: &CMatrix) -> Result<()> {
        if tau.nrows() != self.split.d_cv || tau.ncols() != self.split.d_cv {
            return Err(Error::DimensionMismatch {
                expected: self.split.d_cv,
                got: tau.nrows(),
            });
        }
        Ok(())
    }

    fn evolve(&self, tau: &CMatrix) -> CMatrix {
        let u = self.u.matrix();
        u * tensor(self.rho_cr.matrix(), tau) * u.adjoint()
    }
}

fn check_p(p: f64, allow_one: bool) -> Result<()> {
    let ok = if allow_one {
        (0.0..=1.0).contains(&p)
    } else {
        (0.0..1.0).contains(&p)
    };
    if ok {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "p",
            value: p,
            range: if allow_one { "[0, 1]" } else { "[0, 1)" },
        })
    }
}

/// Linear action of the bare map on an arbitrary CV operator.
pub(crate) fn d_map_raw(sys: &CtcSystem, tau: &CMatrix) -> CMatrix {
    partial_trace(&sys.evolve(tau), sys.split, Subsystem::Cv).expect("dimensions checked")
}

pub fn d_map(sys: &CtcSystem, tau: &DensityMatrix) -> Result<DensityMatrix> {
    sys.check_cv(tau.matrix())?;
    Ok(DensityMatrix::assume_valid(d_map_raw(sys, tau.matrix())))
}

/// CR marginal after one interaction.
pub fn cr_output(sys: &CtcSystem, tau: &DensityMatrix) -> Result<DensityMatrix> {
    sys.check_cv(tau.matrix())?;
    let out = partial_trace(&sys.evolve(tau.matrix()), sys.split, Subsystem::Cr)?;
    Ok(DensityMatrix::assume_valid(out))
}

pub(crate) fn depolarize_raw(tau: &CMatrix, p: f64) -> CMatrix {
    let d = tau.nrows();
    tau.scale(1.0 - p) + identity(d).scale(p / d as f64) * trace(tau)
}

/// `(1 - p) τ + p I/d`.
pub fn depolarize(tau: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    check_p(p, true)?;
    Ok(DensityMatrix::assume_valid(depolarize_raw(tau.matrix(), p)))
}

pub fn noisy_d_map(sys: &CtcSystem, tau: &DensityMatrix) -> Result<DensityMatrix> {
    sys.check_cv(tau.matrix())?;
    Ok(DensityMatrix::assume_valid(depolarize_raw(
        &d_map_raw(sys, tau.matrix()),
        sys.p,
    )))
}

/// Matrix of a linear map on `d × d` operators, acting on column-stacked
/// vectorizations.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    d: usize,
    mat: CMatrix,
}

impl Superoperator {
    pub fn from_matrix(d: usize, mat: CMatrix) -> Result<Self> {
        if mat.nrows() != d * d || mat.ncols() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: mat.nrows(),
            });
        }
        Ok(Self { d, mat })
    }

    /// Build from the images of the `d²` matrix units.
    pub fn from_map(d: usize, mut map: impl FnMut(&CMatrix) -> CMatrix) -> Self {
        let mut mat = CMatrix::zeros(d * d, d * d);
        for j in 0..d {
            for i in 0..d {
                let mut unit = CMatrix::zeros(d, d);
                unit[(i, j)] = Complex64::new(1.0, 0.0);
                let image = map(&unit);
                mat.column_mut(j * d + i).copy_from_slice(image.as_slice());
            }
        }
        Self { d, mat }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            d,
            mat: identity(d * d),
        }
    }

    /// Fully depolarizing with strength `p`.
    pub fn depolarizing(d: usize, p: f64) -> Self {
        Self::from_map(d, |x| depolarize_raw(x, p))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let v = CMatrix::from_column_slice(self.d * self.d, 1, x.as_slice());
        let out = &self.mat * v;
        CMatrix::from_column_slice(self.d, self.d, out.as_slice())
    }

    pub fn apply_state(&self, tau: &DensityMatrix) -> Result<DensityMatrix> {
        if tau.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: tau.dim(),
            });
        }
        Ok(DensityMatrix::assume_valid(self.apply(tau.matrix())))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Superoperator) -> Self {
        Self {
            d: self.d,
            mat: &self.mat * &other.mat,
        }
    }

    /// All eigenvalues, from the diagonal of a complex Schur form.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let (_, t) = Schur::new(self.mat.clone()).unpack();
        t.diagonal().iter().copied().collect()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectrum().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn superoperator(sys: &CtcSystem, include_noise: bool) -> Superoperator {
    let d = sys.d_cv();
    if include_noise && sys.p > 0.0 {
        Superoperator::from_map(d, |x| depolarize_raw(&d_map_raw(sys, x), sys.p))
    } else {
        Superoperator::from_map(d, |x| d_map_raw(sys, x))
    }
}

/// `C = Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    d: usize,
    mat: CMatrix,
}

impl ChoiMatrix {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }
}

pub fn choi(m: &Superoperator) -> ChoiMatrix {
    let d = m.d;
    // C[(i d + k), (j d + l)] = Φ(E_ij)[k, l] = M[l d + k, j d + i]
    let mat = CMatrix::from_fn(d * d, d * d, |r, c| {
        let (i, k) = (r / d, r % d);
        let (j, l) = (c / d, c % d);
        m.mat[(l * d + k, j * d + i)]
    });
    ChoiMatrix { d, mat }
}

/// Operator-sum representation `τ ↦ Σ_j E_j τ E_j†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    ops: Vec<CMatrix>,
}

impl KrausSet {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = ops.first() else {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        };
        let d = first.nrows();
        for op in &ops {
            if op.nrows() != d || op.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: op.nrows(),
                });
            }
        }
        Ok(Self { ops })
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        self.ops.iter().fold(CMatrix::zeros(self.dim(), self.dim()), |acc, e| {
            acc + e * x * e.adjoint()
        })
    }

    pub fn to_superoperator(&self) -> Superoperator {
        Superoperator::from_map(self.dim(), |x| self.apply(x))
    }

    /// Frobenius norm of `Σ E_j† E_j - I`.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.dim();
        let sum = self
            .ops
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, e| acc + e.adjoint() * e);
        frobenius_norm(&(sum - identity(d)))
    }
}

/// Kraus operators from the eigenpairs of a Choi matrix. Eigenvalues at or
/// below `tol` are dropped; anything below `-tol` is an error.
pub fn kraus_from_choi(c: &ChoiMatrix, tol: f64) -> Result<KrausSet> {
    let d = c.d;
    let eig = eig_unchecked(&hermitian_part(&c.mat));
    if eig.values[0] < -tol {
        return Err(Error::NotPositive(eig.values[0]));
    }
    let mut ops = Vec::new();
    for (n, &lambda) in eig.values.iter().enumerate().rev() {
        if lambda <= tol {
            continue;
        }
        let s = lambda.sqrt();
        // eigenvector entry (i d + k) is E[k, i] / sqrt(λ)
        ops.push(CMatrix::from_fn(d, d, |k, i| eig.vectors[(i * d + k, n)] * s));
    }
    if ops.is_empty() {
        ops.push(CMatrix::zeros(d, d));
    }
    KrausSet::new(ops)
}

/// Frobenius distance between Choi matrices.
pub fn channel_distance(a: &Superoperator, b: &Superoperator) -> Result<f64> {
    if a.d != b.d {
        return Err(Error::DimensionMismatch {
            expected: a.d,
            got: b.d,
        });
    }
    Ok(frobenius_norm(&(choi(a).mat - choi(b).mat)))
}

/// `max_j ‖[E_j τ0, E_j†]‖_F`, the bracket being `E_j τ0 E_j† - E_j† E_j τ0`.
pub fn kraus_commutator_residual(e: &KrausSet, tau0: &DensityMatrix) -> Result<f64> {
    if tau0.dim() != e.dim() {
        return Err(Error::DimensionMismatch {
            expected: e.dim(),
            got: tau0.dim(),
        });
    }
    let t = tau0.matrix();
    Ok(e.ops
        .iter()
        .map(|op| {
            let et = op * t;
            frobenius_norm(&(&et * op.adjoint() - op.adjoint() * et))
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{self, reference_kraus_set};
    use crate::qmat::{diag, random_density, random_unitary, trace_distance};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn qubit_pair(u: UnitaryMatrix, rho: DensityMatrix) -> CtcSystem {
        CtcSystem::new(u, rho, DimSplit::new(2, 2).unwrap(), 0.0).unwrap()
    }

    fn swap2() -> UnitaryMatrix {
        let mut m = CMatrix::zeros(4, 4);
        for (a, b) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            m[(a, b)] = c(1.0);
        }
        UnitaryMatrix::new(m).unwrap()
    }

    fn third() -> f64 {
        1.0 / 3.0
    }

    #[test]
    fn system_rejects_bad_shapes_and_p() {
        let split = DimSplit::new(2, 4).unwrap();
        let u = UnitaryMatrix::identity(8);
        assert!(CtcSystem::new(u.clone(), DensityMatrix::basis(3, 0), split, 0.0).is_err());
        assert!(CtcSystem::new(UnitaryMatrix::identity(4), DensityMatrix::basis(2, 0), split, 0.0).is_err());
        assert!(CtcSystem::new(u.clone(), DensityMatrix::basis(2, 0), split, 1.0).is_err());
        assert!(CtcSystem::new(u, DensityMatrix::basis(2, 0), split, -0.1).is_err());
    }

    #[test]
    fn d_map_u1_rotates_populations() {
        let sys = gallery::u1_system(DensityMatrix::basis(2, 0), 0.0).unwrap();
        let tau = DensityMatrix::from_diag(&[0.5, 0.0, 0.25, 0.25]).unwrap();
        let out = d_map(&sys, &tau).unwrap();
        assert!(max_abs_diff(out.matrix(), &diag(&[0.25, 0.0, 0.25, 0.5])) < 1e-15);
    }

    #[test]
    fn d_map_u2_from_maximally_mixed() {
        let sys = gallery::u2_system(DensityMatrix::basis(2, 0), 0.0).unwrap();
        let out = d_map(&sys, &DensityMatrix::maximally_mixed(4)).unwrap();
        assert!(max_abs_diff(out.matrix(), &diag(&[0.5, 0.0, 0.25, 0.25])) < 1e-15);
    }

    #[test]
    fn d_map_identity_is_noop() {
        let split = DimSplit::new(2, 3).unwrap();
        let sys = CtcSystem::new(UnitaryMatrix::identity(6), random_density(2, 4), split, 0.0).unwrap();
        let tau = random_density(3, 8);
        assert!(max_abs_diff(d_map(&sys, &tau).unwrap().matrix(), tau.matrix()) < 1e-14);
        assert!(d_map(&sys, &random_density(2, 1)).is_err());
    }

    #[test]
    fn cr_output_examples() {
        let rho = random_density(2, 3);
        let tau = random_density(2, 5);
        let id = qubit_pair(UnitaryMatrix::identity(4), rho.clone());
        assert!(max_abs_diff(cr_output(&id, &tau).unwrap().matrix(), rho.matrix()) < 1e-14);
        let sw = qubit_pair(swap2(), rho);
        assert!(max_abs_diff(cr_output(&sw, &tau).unwrap().matrix(), tau.matrix()) < 1e-14);

        // U2: population of level 0 leaves in CR |1>, levels 2 and 3 split evenly
        let sys = gallery::u2_system(DensityMatrix::basis(2, 0), 0.0).unwrap();
        let tau = DensityMatrix::from_diag(&[third(), 0.0, third(), third()]).unwrap();
        let out = cr_output(&sys, &tau).unwrap();
        assert!(max_abs_diff(out.matrix(), &diag(&[third(), 2.0 * third()])) < 1e-15);
    }

    #[test]
    fn depolarize_examples() {
        let tau = random_density(3, 2);
        assert_eq!(depolarize(&tau, 0.0).unwrap().matrix(), tau.matrix());
        let full = depolarize(&tau, 1.0).unwrap();
        assert!(max_abs_diff(full.matrix(), DensityMatrix::maximally_mixed(3).matrix()) < 1e-15);
        let half = depolarize(&DensityMatrix::basis(2, 0), 0.5).unwrap();
        assert!(max_abs_diff(half.matrix(), &diag(&[0.75, 0.25])) < 1e-15);
        assert!(depolarize(&tau, 1.5).is_err());
        assert!(depolarize(&tau, -0.5).is_err());
    }

    #[test]
    fn noisy_d_map_examples() {
        let bare = gallery::u2_system(DensityMatrix::basis(2, 0), 0.0).unwrap();
        let tau = random_density(4, 1);
        assert_eq!(
            noisy_d_map(&bare, &tau).unwrap().matrix(),
            d_map(&bare, &tau).unwrap().matrix()
        );

        let p = 0.01;
        let noisy = bare.with_p(p).unwrap();
        let fixed = DensityMatrix::from_diag(&[(2.0 - p) / 4.0, p / 4.0, 0.25, 0.25]).unwrap();
        let out = noisy_d_map(&noisy, &fixed).unwrap();
        assert!(max_abs_diff(out.matrix(), fixed.matrix()) < 1e-12);

        // p = 1 is outside the system's range, so apply the channel directly
        let u1 = gallery::u1_system(DensityMatrix::basis(2, 0), 0.0).unwrap();
        let image = d_map(&u1, &random_density(4, 6)).unwrap();
        let out = depolarize(&image, 1.0).unwrap();
        assert!(max_abs_diff(out.matrix(), DensityMatrix::maximally_mixed(4).matrix()) < 1e-15);
    }

    #[test]
    fn superoperator_of_identity_unitary_is_identity() {
        let split = DimSplit::new(2, 3).unwrap();
        let sys = CtcSystem::new(UnitaryMatrix::identity(6), random_density(2, 0), split, 0.0).unwrap();
        let m = superoperator(&sys, false);
        assert!(max_abs_diff(m.matrix(), &identity(9)) < 1e-14);
    }

    #[test]
    fn superoperator_matches_direct_map() {
        for sys in [
            gallery::u1_system(DensityMatrix::basis(2, 0), 0.0).unwrap(),
            gallery::u2_system(gallery::cr_mixed(0.3).unwrap(), 0.05).unwrap(),
        ] {
            let bare = superoperator(&sys, false);
            let noisy = superoperator(&sys, true);
            for seed in 0..50 {
                let tau = random_density(4, seed);
                let direct = d_map(&sys, &tau).unwrap();
                let via = bare.apply_state(&tau).unwrap();
                assert!(trace_distance(&direct, &via).unwrap() < 1e-12);
                let direct = noisy_d_map(&sys, &tau).unwrap();
                let via = noisy.apply_state(&tau).unwrap();
                assert!(trace_distance(&direct, &via).unwrap() < 1e-12);
            }
        }
    }

    /// Power iteration on `M^period` starting from the maximally mixed state;
    /// returns the Rayleigh-style growth factor per application of `M`.
    fn power_iteration_radius(m: &Superoperator, period: u32) -> f64 {
        let mut block = Superoperator::identity(m.dim());
        for _ in 0..period {
            block = block.compose(m);
        }
        let mut x = identity(m.dim()).unscale(m.dim() as f64);
        let mut growth = 0.0;
        for _ in 0..200 {
            let y = block.apply(&x);
            growth = frobenius_norm(&y) / frobenius_norm(&x);
            x = y.unscale(frobenius_norm(&y));
        }
        growth.powf(1.0 / period as f64)
    }

    #[test]
    fn spectral_radius_is_one_for_gallery_maps() {
        let rho = DensityMatrix::basis(2, 0);
        let u1 = superoperator(&gallery::u1_system(rho.clone(), 0.0).unwrap(), false);
        let u2 = superoperator(&gallery::u2_system(rho, 0.0).unwrap(), false);
        assert_abs_diff_eq!(u1.spectral_radius(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(u2.spectral_radius(), 1.0, epsilon = 1e-9);
        // U1 cycles with period three, so iterate its cube
        assert_abs_diff_eq!(power_iteration_radius(&u1, 3), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(power_iteration_radius(&u2, 1), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn u1_spectrum_contains_cube_roots_of_unity() {
        let m = superoperator(&gallery::u1_system(DensityMatrix::basis(2, 0), 0.0).unwrap(), false);
        let spec = m.spectrum();
        for k in 0..3 {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            let root = Complex64::from_polar(1.0, angle);
            assert!(spec.iter().any(|z| (z - root).norm() < 1e-9), "missing {root}");
        }
    }

    #[test]
    fn choi_examples() {
        let id = choi(&Superoperator::identity(2));
        let mut expected = CMatrix::zeros(4, 4);
        for (r, col) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            expected[(r, col)] = c(1.0);
        }
        assert!(max_abs_diff(id.matrix(), &expected) < 1e-15);
        assert_abs_diff_eq!(trace(id.matrix()).re, 2.0);

        let dep = choi(&Superoperator::depolarizing(2, 1.0));
        assert!(max_abs_diff(dep.matrix(), &identity(4).unscale(2.0)) < 1e-15);

        let dephase = Superoperator::from_map(2, |x| {
            let mut y = CMatrix::zeros(2, 2);
            y[(0, 0)] = x[(0, 0)];
            y[(1, 1)] = x[(1, 1)];
            y
        });
        assert!(max_abs_diff(choi(&dephase).matrix(), &diag(&[1.0, 0.0, 0.0, 1.0])) < 1e-15);
    }

    #[test]
    fn kraus_of_identity_is_single_unitary_multiple() {
        let k = kraus_from_choi(&choi(&Superoperator::identity(3)), KRAUS_TOL).unwrap();
        assert_eq!(k.len(), 1);
        let op = &k.ops()[0];
        let phase = op[(0, 0)];
        assert_abs_diff_eq!(phase.norm(), 1.0, epsilon = 1e-12);
        assert!(max_abs_diff(&op.unscale(1.0).map(|z| z / phase), &identity(3)) < 1e-12);
    }

    #[test]
    fn kraus_round_trip_reproduces_channel() {
        let sys = gallery::u2_system(gallery::cr_pure(0.4).unwrap(), 0.02).unwrap();
        let m = superoperator(&sys, true);
        let k = kraus_from_choi(&choi(&m), KRAUS_TOL).unwrap();
        assert!(k.completeness_residual() < 1e-9);
        assert!(channel_distance(&m, &k.to_superoperator()).unwrap() < 1e-9);
        for seed in 0..20 {
            let tau = random_density(4, seed);
            let a = DensityMatrix::assume_valid(k.apply(tau.matrix()));
            let b = m.apply_state(&tau).unwrap();
            assert!(trace_distance(&a, &b).unwrap() < 1e-9);
        }
    }

    #[test]
    fn kraus_rejects_non_positive_choi() {
        let transpose = Superoperator::from_map(2, |x| x.transpose());
        assert!(matches!(
            kraus_from_choi(&choi(&transpose), KRAUS_TOL),
            Err(Error::NotPositive(_))
        ));
    }

    #[test]
    fn channel_distance_examples() {
        let m = Superoperator::depolarizing(3, 0.2);
        assert_eq!(channel_distance(&m, &m).unwrap(), 0.0);
        let d = channel_distance(&Superoperator::identity(2), &Superoperator::depolarizing(2, 1.0)).unwrap();
        assert_abs_diff_eq!(d, 3f64.sqrt(), epsilon = 1e-14);
        assert!(channel_distance(&m, &Superoperator::identity(2)).is_err());
    }

    #[test]
    fn channel_distance_ignores_kraus_gauge() {
        let k = reference_kraus_set();
        let w = random_unitary(k.len(), 19);
        let mixed: Vec<CMatrix> = (0..k.len())
            .map(|i| {
                (0..k.len()).fold(CMatrix::zeros(4, 4), |acc, j| {
                    acc + k.ops()[j].map(|z| z * w.matrix()[(i, j)])
                })
            })
            .collect();
        let mixed = KrausSet::new(mixed).unwrap();
        let d = channel_distance(&k.to_superoperator(), &mixed.to_superoperator()).unwrap();
        assert!(d < 1e-10);
    }

    #[test]
    fn commutator_residual_examples() {
        let tau = random_density(4, 3);
        let id = KrausSet::new(vec![identity(4)]).unwrap();
        assert_eq!(kraus_commutator_residual(&id, &tau).unwrap(), 0.0);

        let r = kraus_commutator_residual(&reference_kraus_set(), &DensityMatrix::maximally_mixed(4)).unwrap();
        assert_abs_diff_eq!(r, 2f64.sqrt() / 4.0, epsilon = 1e-12);

        let q: f64 = 0.3;
        let dephasing = KrausSet::new(vec![
            identity(2).scale(q.sqrt()),
            diag(&[1.0, -1.0]).scale((1.0 - q).sqrt()),
        ])
        .unwrap();
        let tau0 = DensityMatrix::from_diag(&[0.7, 0.3]).unwrap();
        assert!(kraus_commutator_residual(&dephasing, &tau0).unwrap() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn prop_maps_preserve_state_properties(s_u in any::<u64>(), s_rho in any::<u64>(), s_tau in any::<u64>(), p in 0.0f64..0.99) {
            let split = DimSplit::new(2, 3).unwrap();
            let sys = CtcSystem::new(random_unitary(6, s_u), random_density(2, s_rho), split, p).unwrap();
            let tau = random_density(3, s_tau);
            for out in [d_map(&sys, &tau).unwrap(), noisy_d_map(&sys, &tau).unwrap(), cr_output(&sys, &tau).unwrap()] {
                prop_assert!((trace(out.matrix()).re - 1.0).abs() < 1e-12);
                prop_assert!(crate::qmat::hermitian_asymmetry(out.matrix()) < 1e-12);
                prop_assert!(out.eigenvalues()[0] > -1e-10);
            }
            let m = superoperator(&sys, false);
            let via = m.apply(tau.matrix());
            prop_assert!(max_abs_diff(&via, d_map(&sys, &tau).unwrap().matrix()) < 1e-12);
            prop_assert!(m.spectrum().iter().all(|z| z.norm() <= 1.0 + 1e-9));
            let k = kraus_from_choi(&choi(&m), KRAUS_TOL).unwrap();
            prop_assert!(k.completeness_residual() < 1e-9);
            prop_assert!(channel_distance(&m, &k.to_superoperator()).unwrap() < 1e-9);
        }
    }
}
