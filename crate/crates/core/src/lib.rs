//! Polarization qutrits carried by single-mode biphotons.
//!
//! The crate covers the whole desk-scale pipeline: the three-level state
//! space spanned by `|2,0⟩`, `|1,1⟩`, `|0,2⟩` and its two-photon (Majorana)
//! factorization, a Jones-calculus model of the Brown–Twiss measurement arm,
//! nine-setting tomography with linear inversion and maximum-likelihood
//! estimation, and a parametric model of the preparation interferometer that
//! produces phase scans and Poissonian count records.
//!
//! Angles are radians everywhere inside the crate. Degrees only appear in
//! [`report`], which formats values for the command-line front end.

pub mod error;
pub mod experiment;
pub mod optics;
pub mod qutrit;
pub mod reference;
pub mod report;
pub mod rng;
pub mod tomography;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
