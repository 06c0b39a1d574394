//! Exact computational harmonic analysis on Grassmannians over finite fields.
//!
//! Everything here is exact: field arithmetic is carried out in `F_q`
//! (`q = p^e` a prime power), counts are big integers, and measures, weights
//! and polynomial values are big rationals. Floating point appears only in
//! convergence reports.
//!
//! The crate is organized bottom-up:
//!
//! - [`gf`] — the finite field `F_q` and its elements;
//! - [`linalg`] — dense matrices and canonical (reduced row echelon) subspaces;
//! - [`grassmann`] — finite Grassmannians `Gr(m, k)` over `F_q`: counting,
//!   enumeration, parabolic orbits, chart atlases, the Möbius action, uniform
//!   sampling and flags;
//! - [`semiinf`] — a computable model of the semi-infinite Grassmannian:
//!   finitely supported chart points, relative dimension, truncation,
//!   eventually-stable Fredholm operators with an index calculus, and the
//!   `h·s·r` factorization of shift-free stable group elements;
//! - [`qseries`] — q-Pochhammer symbols, terminating basic hypergeometric
//!   series, q-Hahn and Al-Salam–Carlitz II polynomials, orbit weights;
//! - [`spectral`] — the q-Hahn difference operator, the infinite averaging
//!   (Markov) kernel on orbit indices, brute-force jump-probability oracles,
//!   and Monte Carlo machinery;
//! - [`verify`] — the self-check suites behind `qgrass verify`.

// indexed loops are the readable form for the matrix kernels here
#![allow(clippy::needless_range_loop)]

pub mod gf;
pub mod grassmann;
pub mod linalg;
pub mod qseries;
pub mod semiinf;
pub mod spectral;
pub mod verify;

pub use gf::{FieldElement, FieldSpec};
pub use linalg::{MatrixFq, Subspace};
pub use qseries::QRat;
