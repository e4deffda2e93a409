//! Dense complex-matrix primitives for finite-dimensional quantum states.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};

/// Square complex matrix, stored column-major.
pub type CMatrix = DMatrix<Complex64>;

/// Tolerance on Hermiticity, trace and negativity for [`DensityMatrix`].
pub const STATE_TOL: f64 = 1e-10;
/// Eigenvalues at or below this are dropped from entropy sums.
pub const ENTROPY_CLAMP: f64 = 1e-12;
const EIG_HERMITIAN_TOL: f64 = 1e-8;

/// Which factor of a bipartite space to keep in a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    Cr,
    Cv,
}

/// Dimensions of the CR and CV factors of a joint space.
///
/// Joint indices are CR-major: `|cr⟩⊗|cv⟩` sits at `cr * d_cv + cv`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DimSplit {
    pub d_cr: usize,
    pub d_cv: usize,
}

impl DimSplit {
    pub fn new(d_cr: usize, d_cv: usize) -> Result<Self> {
        if d_cr == 0 || d_cv == 0 {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        Ok(Self { d_cr, d_cv })
    }

    pub fn total(&self) -> usize {
        self.d_cr * self.d_cv
    }

    pub fn joint_index(&self, cr: usize, cv: usize) -> usize {
        cr * self.d_cv + cv
    }
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn diag(values: &[f64]) -> CMatrix {
    let mut m = CMatrix::zeros(values.len(), values.len());
    for (i, &v) in values.iter().enumerate() {
        m[(i, i)] = Complex64::new(v, 0.0);
    }
    m
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hilbert–Schmidt inner product `tr(a† b)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `max |m[i][j] - conj(m[j][i])|`.
pub fn hermitian_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Kronecker product with entry `[(i*db + k), (j*db + l)] = a[i][j] * b[k][l]`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Partial trace of a joint operator, keeping one factor.
pub fn partial_trace(m: &CMatrix, split: DimSplit, keep: Subsystem) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare(m.nrows(), m.ncols()));
    }
    if m.nrows() != split.total() {
        return Err(Error::DimensionMismatch {
            expected: split.total(),
            got: m.nrows(),
        });
    }
    let DimSplit { d_cr, d_cv } = split;
    let out = match keep {
        Subsystem::Cv => CMatrix::from_fn(d_cv, d_cv, |k, l| {
            (0..d_cr)
                .map(|i| m[(split.joint_index(i, k), split.joint_index(i, l))])
                .sum()
        }),
        Subsystem::Cr => CMatrix::from_fn(d_cr, d_cr, |i, j| {
            (0..d_cv)
                .map(|k| m[(split.joint_index(i, k), split.joint_index(j, k))])
                .sum()
        }),
    };
    Ok(out)
}

/// Spectrum of a Hermitian matrix: ascending eigenvalues with matching
/// orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEig {
    /// Rebuild `V diag(f(λ)) V†`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let fv = f(v);
            for i in 0..n {
                scaled[(i, j)] *= fv;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

pub fn hermitian_eig(h: &CMatrix) -> Result<HermitianEig> {
    if h.nrows() != h.ncols() {
        return Err(Error::NotSquare(h.nrows(), h.ncols()));
    }
    let asym = hermitian_asymmetry(h);
    if asym > EIG_HERMITIAN_TOL {
        return Err(Error::NotHermitian(asym));
    }
    Ok(eig_unchecked(&hermitian_part(h)))
}

pub(crate) fn eig_unchecked(h: &CMatrix) -> HermitianEig {
    let n = h.nrows();
    let se = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| se.eigenvectors[(r, order[c])]);
    HermitianEig { values, vectors }
}

pub(crate) fn eigenvalues_unchecked(h: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = h.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `½ Σ|λ|` over the eigenvalues of a Hermitian difference.
pub(crate) fn trace_norm_half(diff: &CMatrix) -> f64 {
    0.5 * eigenvalues_unchecked(&hermitian_part(diff))
        .iter()
        .map(|v| v.abs())
        .sum::<f64>()
}

pub(crate) fn entropy_of_values(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|&&l| l > ENTROPY_CLAMP)
        .map(|&l| -l * l.log2())
        .sum()
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotSquare(mat.nrows(), mat.ncols()));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let asym = hermitian_asymmetry(&mat);
        if asym > STATE_TOL {
            return Err(Error::NotHermitian(asym));
        }
        let tr = trace(&mat).re;
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        let mat = hermitian_part(&mat);
        let min = eigenvalues_unchecked(&mat)[0];
        if min < -STATE_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self(mat))
    }

    /// Wrap a matrix produced by a trace-preserving, positive map of a valid
    /// state. Only the Hermitian part is kept.
    pub(crate) fn assume_valid(mat: CMatrix) -> Self {
        Self(hermitian_part(&mat))
    }

    pub fn from_diag(values: &[f64]) -> Result<Self> {
        Self::new(diag(values))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(identity(dim).unscale(dim as f64))
    }

    /// `|ψ⟩⟨ψ|` for a normalized copy of `psi`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if psi.is_empty() || norm < 1e-15 {
            return Err(Error::InvalidTrace(0.0));
        }
        let n = psi.len();
        Self::new(CMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj() / (norm * norm)))
    }

    /// `|k⟩⟨k|` in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = Complex64::new(1.0, 0.0);
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigenvalues_unchecked(&self.0)
    }

    pub fn purity(&self) -> f64 {
        hs_inner(&self.0, &self.0).re
    }

    /// Real parts of the diagonal.
    pub fn populations(&self) -> Vec<f64> {
        self.0.diagonal().iter().map(|z| z.re).collect()
    }
}

/// Square matrix with `U U† = I` to within `1e-10`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotSquare(mat.nrows(), mat.ncols()));
        }
        let dev = unitarity_residual(&mat);
        if dev > STATE_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self(mat))
    }

    pub fn identity(dim: usize) -> Self {
        Self(identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }
}

/// Max entry of `|U U† - I|`.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    let prod = m * m.adjoint() - identity(m.nrows());
    prod.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_values(&rho.eigenvalues())
}

pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(trace_norm_half(&(a.matrix() - b.matrix())))
}

fn ginibre(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

/// Hilbert–Schmidt random state `G G† / tr(G G†)` with `G` a seeded Ginibre
/// matrix.
pub fn random_density(dim: usize, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ginibre(dim, &mut rng);
    let gg = &g * g.adjoint();
    let tr = trace(&gg).re;
    DensityMatrix::assume_valid(gg.unscale(tr))
}

/// Haar random unitary from the QR decomposition of a Ginibre matrix, with
/// the phases of `R`'s diagonal folded back into `Q`.
pub fn random_unitary(dim: usize, seed: u64) -> UnitaryMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let qr = ginibre(dim, &mut rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    UnitaryMatrix(q)
}

/// Seeded random Hermitian matrix with standard normal entries.
pub fn random_hermitian(dim: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    hermitian_part(&ginibre(dim, &mut rng))
}
