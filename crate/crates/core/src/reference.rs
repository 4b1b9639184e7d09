//! Reference measurement values used as regression targets.

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;

use crate::qutrit::{DensityMatrix3, ProtocolStateId};

const fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Raw tomographic reconstruction of `β″`, entries to 3 decimals.
pub fn measured_beta2_matrix() -> Matrix3<C64> {
    Matrix3::new(
        c(0.355, 0.0),
        c(-0.054, -0.210),
        c(0.315, -0.010),
        c(-0.054, 0.210),
        c(0.340, 0.0),
        c(-0.106, 0.262),
        c(0.315, 0.010),
        c(-0.106, -0.262),
        c(0.305, 0.0),
    )
}

/// The measured `β″` matrix as a (non-physical) density matrix.
pub fn measured_beta2() -> DensityMatrix3 {
    DensityMatrix3::from_unnormalized(measured_beta2_matrix()).expect("unit-trace fixture")
}

/// Reference eigenvalues of the measured `β″` matrix, descending.
pub const MEASURED_BETA2_EIGENVALUES: [f64; 3] = [0.877, 0.136, -0.013];

/// Reference eigenvectors `X`, `Y`, `Z` (same order as the eigenvalues).
pub const MEASURED_BETA2_EIGENVECTORS: [[C64; 3]; 3] = [
    [c(0.587, 0.0), c(-0.173, 0.521), c(0.594, -0.071)],
    [c(0.642, 0.0), c(0.379, -0.649), c(0.048, 0.143)],
    [c(0.493, 0.0), c(-0.287, 0.224), c(-0.769, -0.178)],
];

pub const MEASURED_PRINCIPAL_WEIGHT: f64 = 0.878;
pub const MEASURED_PRINCIPAL_FIDELITY: f64 = 0.9903;
/// Tolerance implied by 3-decimal matrix entries.
pub const PRINT_TOLERANCE: f64 = 0.005;

/// Range of principal-component fidelities over all states.
pub const PRINCIPAL_FIDELITY_RANGE: (f64, f64) = (0.983, 0.998);

/// Maximum-likelihood fidelities per state (bases 2 to 4).
pub const MLE_FIDELITIES: [(ProtocolStateId, f64); 9] = [
    (ProtocolStateId::Alpha1, 0.9989),
    (ProtocolStateId::Beta1, 0.9967),
    (ProtocolStateId::Gamma1, 0.9883),
    (ProtocolStateId::Alpha2, 0.9967),
    (ProtocolStateId::Beta2, 0.9989),
    (ProtocolStateId::Gamma2, 0.9883),
    (ProtocolStateId::Alpha3, 0.9883),
    (ProtocolStateId::Beta3, 0.9989),
    (ProtocolStateId::Gamma3, 0.9967),
];

pub fn mle_fidelity(id: ProtocolStateId) -> Option<f64> {
    MLE_FIDELITIES.iter().find(|(s, _)| *s == id).map(|(_, f)| *f)
}

pub const MLE_FIDELITY_TOLERANCE: f64 = 0.003;

/// Events per tomographic reconstruction.
pub const EVENTS_PER_RECONSTRUCTION: f64 = 500.0;

/// 5% and 95% quantiles of the fidelity distribution at that event count.
pub const FIDELITY_QUANTILES: (f64, f64) = (0.9842, 0.9991);

/// Reference filter angles `(χ1, θ1, χ2, θ2)` in degrees for the `α‴` set
/// state. They refer to a different waveplate convention and are kept for
/// display only.
pub const REFERENCE_ALPHA3_FILTERS_DEG: [f64; 4] = [28.3, -33.5, -24.0, -2.0];

/// Orthogonality fringe visibility for `α‴`, and the range over all bases.
pub const ORTHOGONALITY_VISIBILITY: f64 = 0.932;
pub const ORTHOGONALITY_VISIBILITY_RANGE: (f64, f64) = (0.92, 0.95);

/// Piezo calibration, degrees per volt.
pub const PHASE_PER_VOLT: f64 = 51.7;
