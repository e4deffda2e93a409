//! Simulation and analysis of Deutsch closed-timelike-curve (D-CTC) circuits.
//!
//! A D-CTC couples a chronology-respecting register (CR) to a
//! chronology-violating register (CV) through a unitary `U`. Consistent CV
//! states are the fixed points of the induced channel
//! `τ ↦ Tr_CR(U(ρ_CR ⊗ τ)U†)`. This crate computes those fixed points under
//! three procedures (Cesàro averaging of the bare orbit, Cesàro averaging of
//! the noisy orbit, and iteration of the decohered equivalent circuit),
//! selects states by the maximum entropy rule, and runs the sweep experiments
//! built on top of them.
//!
//! Conventions used everywhere:
//!
//! * joint bases are CR-major: the joint index of `|cr⟩⊗|cv⟩` is
//!   `cr * d_cv + cv`;
//! * operators are vectorized by stacking columns, so `vec(τ)[j * d + i] = τ[i][j]`;
//! * entropies are in bits.

pub mod channels;
pub mod engines;
mod error;
pub mod experiments;
pub mod gallery;
pub mod maxent;
pub mod qmat;

pub use channels::{ChoiMatrix, CtcSystem, KrausSet, Superoperator};
pub use engines::{EngineConfig, FixedSubspace, IterationOutcome, Status};
pub use error::{Error, Result};
pub use maxent::{MaxEntProblem, MaxEntResult};
pub use qmat::{CMatrix, DensityMatrix, DimSplit, Subsystem, UnitaryMatrix};

pub use num_complex::Complex64;
