//! Nine-setting tomography of polarization qutrits.
//!
//! A density matrix is determined by six fourth-order moments of the field:
//!
//! ```text
//! 2ρ11 = ⟨a†²a²⟩    √2ρ21 = ⟨a†²ab⟩
//! 2ρ33 = ⟨b†²b²⟩    √2ρ32 = ⟨a†b†b²⟩
//!  ρ22 = ⟨a†b†ab⟩    2ρ31 = ⟨a†²b²⟩
//! ```
//!
//! Coincidence rates for nine filter pairs are linear in the nine real
//! parameters of ρ; inverting that map gives the moments, and the moments
//! give a raw (possibly non-positive) ρ. [`mle`] turns counts into a
//! physical estimate instead.

pub mod fit;
pub mod mle;

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::optics::{detection_vector, filter_accept_mode, solve_filter_settings, FilterSettings, PolarizationVector};
use crate::qutrit::{DensityMatrix3, PureQutrit};
use crate::{Error, Result};

pub use fit::{fit_phase_scan, fit_sinusoid, Channel, PhaseScanFit, SinusoidFit};
pub use mle::{
    fidelity_quantiles, fidelity_quantiles_with, log_likelihood, mle_reconstruct,
    mle_reconstruct_with, MleOptions, MleResult, QuantileTable, StateModel,
};

/// One filter pair of the Brown–Twiss scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub label: String,
    pub arm1: FilterSettings,
    pub arm2: FilterSettings,
}

impl MeasurementSetting {
    pub fn new(label: impl Into<String>, arm1: FilterSettings, arm2: FilterSettings) -> Self {
        Self {
            label: label.into(),
            arm1,
            arm2,
        }
    }

    /// Setting whose arms fully transmit `p1` and `p2` respectively.
    pub fn for_modes(label: impl Into<String>, p1: &PolarizationVector, p2: &PolarizationVector) -> Self {
        Self::new(label, solve_filter_settings(p1), solve_filter_settings(p2))
    }

    pub fn accept_modes(&self) -> (PolarizationVector, PolarizationVector) {
        (filter_accept_mode(&self.arm1), filter_accept_mode(&self.arm2))
    }

    pub fn detection_vector(&self) -> Vector3<C64> {
        let (p1, p2) = self.accept_modes();
        detection_vector(&p1, &p2)
    }

    /// Coincidence moment `w† ρ w` for this setting.
    pub fn expected_moment(&self, rho: &DensityMatrix3) -> f64 {
        rho.expectation(&self.detection_vector())
    }
}

/// The fixed nine-setting protocol.
///
/// Pairs are drawn from `{H, V, D, R}`. The `(D, R)` pair is what makes the
/// imaginary part of ρ31 visible; with `(R, R)` in its place the map has
/// rank 8.
pub fn protocol_settings() -> Vec<MeasurementSetting> {
    let h = PolarizationVector::horizontal();
    let v = PolarizationVector::vertical();
    let d = PolarizationVector::diagonal();
    let r = PolarizationVector::right_circular();
    [
        ("HH", h, h),
        ("VV", v, v),
        ("HV", h, v),
        ("DD", d, d),
        ("DH", d, h),
        ("DV", d, v),
        ("DR", d, r),
        ("RH", r, h),
        ("RV", r, v),
    ]
    .iter()
    .map(|(label, p1, p2)| MeasurementSetting::for_modes(*label, p1, p2))
    .collect()
}

/// Hermitian basis matching the parameter order
/// `(ρ11, ρ22, ρ33, Re ρ21, Im ρ21, Re ρ32, Im ρ32, Re ρ31, Im ρ31)`.
fn parameter_basis() -> [Matrix3<C64>; 9] {
    let e = |j: usize, k: usize| {
        let mut m = Matrix3::<C64>::zeros();
        m[(j, k)] = C64::new(1.0, 0.0);
        m
    };
    let i = C64::new(0.0, 1.0);
    let sym = |j, k| e(j, k) + e(k, j);
    let asym = |j, k| (e(j, k) - e(k, j)) * i;
    [
        e(0, 0),
        e(1, 1),
        e(2, 2),
        sym(1, 0),
        asym(1, 0),
        sym(2, 1),
        asym(2, 1),
        sym(2, 0),
        asym(2, 0),
    ]
}

fn params_to_matrix(x: &[f64]) -> Matrix3<C64> {
    parameter_basis()
        .iter()
        .zip(x)
        .fold(Matrix3::zeros(), |acc, (b, &xi)| acc + b * C64::from(xi))
}

/// Real linear map from the nine parameters of ρ to the expected moments of
/// each setting (one row per setting).
pub fn response_matrix(settings: &[MeasurementSetting]) -> DMatrix<f64> {
    let basis = parameter_basis();
    let mut a = DMatrix::zeros(settings.len(), 9);
    for (row, s) in settings.iter().enumerate() {
        let w = s.detection_vector();
        for (col, b) in basis.iter().enumerate() {
            a[(row, col)] = (w.adjoint() * b * w)[(0, 0)].re;
        }
    }
    a
}

pub fn condition_number(settings: &[MeasurementSetting]) -> f64 {
    let sv = response_matrix(settings).singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn response_rank(settings: &[MeasurementSetting]) -> usize {
    response_matrix(settings).rank(1e-10)
}

/// Raw coincidence data for one setting. Counts are not corrected for
/// accidentals; expectation-mode simulation may produce fractional counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting: String,
    pub count: f64,
    pub weight: f64,
}

impl CountRecord {
    pub fn new(setting: impl Into<String>, count: f64, weight: f64) -> Self {
        Self {
            setting: setting.into(),
            count,
            weight,
        }
    }
}

/// Counts and weights per setting, in settings order. Repeated labels are
/// summed.
pub(crate) fn aggregate_counts(
    counts: &[CountRecord],
    settings: &[MeasurementSetting],
) -> Result<Vec<(f64, f64)>> {
    let mut acc = vec![(0.0, 0.0); settings.len()];
    let mut seen = vec![false; settings.len()];
    for rec in counts {
        if !(rec.count >= 0.0) || !rec.count.is_finite() {
            return Err(Error::InvalidInput(format!(
                "setting {}: count must be non-negative, got {}",
                rec.setting, rec.count
            )));
        }
        if !(rec.weight > 0.0) || !rec.weight.is_finite() {
            return Err(Error::InvalidInput(format!(
                "setting {}: weight must be positive, got {}",
                rec.setting, rec.weight
            )));
        }
        let idx = settings
            .iter()
            .position(|s| s.label == rec.setting)
            .ok_or_else(|| Error::InvalidInput(format!("unknown setting '{}'", rec.setting)))?;
        acc[idx].0 += rec.count;
        acc[idx].1 += rec.weight;
        seen[idx] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidInput(format!(
            "no counts for setting '{}'",
            settings[missing].label
        )));
    }
    Ok(acc)
}

/// The six fourth-order moments. Real moments are stored as `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    /// `⟨a†²a²⟩`
    pub a2a2: f64,
    /// `⟨b†²b²⟩`
    pub b2b2: f64,
    /// `⟨a†b†ab⟩`
    pub abab: f64,
    /// `⟨a†²ab⟩`
    pub a2ab: C64,
    /// `⟨a†b†b²⟩`
    pub abb2: C64,
    /// `⟨a†²b²⟩`
    pub a2b2: C64,
}

impl MomentVector {
    /// Moments implied by a density matrix (the moment relations read
    /// backwards).
    pub fn from_density(rho: &DensityMatrix3) -> Self {
        Self::from_matrix(rho.matrix())
    }

    fn from_matrix(m: &Matrix3<C64>) -> Self {
        Self {
            a2a2: 2.0 * m[(0, 0)].re,
            b2b2: 2.0 * m[(2, 2)].re,
            abab: m[(1, 1)].re,
            a2ab: SQRT_2 * m[(1, 0)],
            abb2: SQRT_2 * m[(2, 1)],
            a2b2: 2.0 * m[(2, 0)],
        }
    }

    /// `½⟨a†²a²⟩ + ⟨a†b†ab⟩ + ½⟨b†²b²⟩`, the trace of the implied ρ.
    pub fn trace(&self) -> f64 {
        0.5 * self.a2a2 + self.abab + 0.5 * self.b2b2
    }

    pub fn rho11(&self) -> f64 {
        0.5 * self.a2a2
    }

    pub fn rho22(&self) -> f64 {
        self.abab
    }

    pub fn rho33(&self) -> f64 {
        0.5 * self.b2b2
    }

    pub fn rho21(&self) -> C64 {
        self.a2ab / SQRT_2
    }

    pub fn rho32(&self) -> C64 {
        self.abb2 / SQRT_2
    }

    pub fn rho31(&self) -> C64 {
        0.5 * self.a2b2
    }

    fn raw_matrix(&self) -> Matrix3<C64> {
        let mut m = Matrix3::zeros();
        m[(0, 0)] = C64::from(self.rho11());
        m[(1, 1)] = C64::from(self.rho22());
        m[(2, 2)] = C64::from(self.rho33());
        m[(1, 0)] = self.rho21();
        m[(0, 1)] = self.rho21().conj();
        m[(2, 1)] = self.rho32();
        m[(1, 2)] = self.rho32().conj();
        m[(2, 0)] = self.rho31();
        m[(0, 2)] = self.rho31().conj();
        m
    }
}

/// Applies the moment relations literally, completes ρ to a Hermitian matrix
/// and normalizes its trace. The result is not checked for positivity.
pub fn rho_from_moments(m: &MomentVector) -> Result<DensityMatrix3> {
    DensityMatrix3::from_unnormalized(m.raw_matrix())
}

pub fn moments_from_state(s: &PureQutrit) -> MomentVector {
    let [c1, c2, c3] = s.amplitudes();
    MomentVector {
        a2a2: 2.0 * c1.norm_sqr(),
        b2b2: 2.0 * c3.norm_sqr(),
        abab: c2.norm_sqr(),
        a2ab: SQRT_2 * c2 * c1.conj(),
        abb2: SQRT_2 * c3 * c2.conj(),
        a2b2: 2.0 * c3 * c1.conj(),
    }
}

/// Linear inversion of the setting rates `count / weight`, scaled to unit
/// trace.
pub fn moments_from_counts(
    counts: &[CountRecord],
    settings: &[MeasurementSetting],
) -> Result<MomentVector> {
    let agg = aggregate_counts(counts, settings)?;
    let rates: Vec<f64> = agg.iter().map(|(n, w)| n / w).collect();
    let m = invert_rates(&rates, settings)?;
    let tr = m.trace().re;
    if !(tr > 1e-300) {
        return Err(Error::DegenerateData(format!(
            "linear inversion gives total trace {tr}"
        )));
    }
    Ok(MomentVector::from_matrix(&(m / C64::from(tr))))
}

/// Least-squares solution of `A x = rates` as an (unnormalized) matrix.
pub(crate) fn invert_rates(rates: &[f64], settings: &[MeasurementSetting]) -> Result<Matrix3<C64>> {
    let a = response_matrix(settings);
    if a.rank(1e-10) < 9 {
        return Err(Error::InvalidInput(
            "measurement settings are not informationally complete".into(),
        ));
    }
    let b = DVector::from_column_slice(rates);
    let x = a
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::DegenerateData(e.to_string()))?;
    Ok(params_to_matrix(x.as_slice()))
}

/// Counts → moments → raw ρ.
pub fn raw_reconstruct(
    counts: &[CountRecord],
    settings: &[MeasurementSetting],
) -> Result<DensityMatrix3> {
    rho_from_moments(&moments_from_counts(counts, settings)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qutrit::{fidelity, protocol_state, ProtocolStateId};

    #[test]
    fn protocol_is_informationally_complete() {
        let s = protocol_settings();
        assert_eq!(s.len(), 9);
        assert_eq!(response_rank(&s), 9);
        let k = condition_number(&s);
        assert!(k < 100.0, "{k}");
        let mut labels: Vec<_> = s.iter().map(|x| x.label.clone()).collect();
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), 9);
    }

    #[test]
    fn rr_variant_is_rank_deficient() {
        let h = PolarizationVector::horizontal();
        let v = PolarizationVector::vertical();
        let d = PolarizationVector::diagonal();
        let r = PolarizationVector::right_circular();
        let pairs = [(h, h), (v, v), (h, v), (d, d), (d, h), (d, v), (r, r), (r, h), (r, v)];
        let s: Vec<_> = pairs
            .iter()
            .enumerate()
            .map(|(i, (a, b))| MeasurementSetting::for_modes(format!("s{i}"), a, b))
            .collect();
        assert_eq!(response_rank(&s), 8);
    }

    #[test]
    fn setting_expectations() {
        let s = protocol_settings();
        let hv = s.iter().find(|x| x.label == "HV").unwrap();
        let beta = protocol_state(ProtocolStateId::Beta).projector();
        assert!((hv.expected_moment(&beta) - 1.0).abs() < 1e-14);
        let hh = s.iter().find(|x| x.label == "HH").unwrap();
        let b2 = protocol_state(ProtocolStateId::Beta2).projector();
        assert!((hh.expected_moment(&b2) - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn rho_from_basis_moments() {
        let m = MomentVector {
            a2a2: 0.0,
            b2b2: 0.0,
            abab: 1.0,
            a2ab: C64::new(0.0, 0.0),
            abb2: C64::new(0.0, 0.0),
            a2b2: C64::new(0.0, 0.0),
        };
        let rho = rho_from_moments(&m).unwrap();
        assert!((rho.entry(2, 2).re - 1.0).abs() < 1e-15);
        assert!(rho.entry(1, 1).norm() < 1e-15 && rho.entry(3, 3).norm() < 1e-15);
        let zero = MomentVector { abab: 0.0, ..m };
        assert!(matches!(rho_from_moments(&zero), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn state_moments() {
        let m = moments_from_state(&protocol_state(ProtocolStateId::Alpha));
        assert!((m.a2a2 - 2.0).abs() < 1e-15);
        assert!(m.b2b2 == 0.0 && m.abab == 0.0 && m.a2ab.norm() == 0.0);

        let m = moments_from_state(&protocol_state(ProtocolStateId::Beta2));
        let w = C64::from_polar(1.0 / 3.0, 120f64.to_radians());
        assert!((m.rho21() - w).norm() < 1e-15);
        assert!((m.rho32() - w.conj()).norm() < 1e-15);

        let m = moments_from_state(&protocol_state(ProtocolStateId::Alpha1));
        for z in [m.rho21(), m.rho32(), m.rho31()] {
            assert!((z - C64::from(1.0 / 3.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn exact_inversion_for_beta2() {
        let s = protocol_state(ProtocolStateId::Beta2);
        let rho = rho_from_moments(&moments_from_state(&s)).unwrap();
        let diff = rho.matrix() - s.projector().matrix();
        assert!(diff.iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn linear_inversion_from_expected_counts() {
        let settings = protocol_settings();
        let s = protocol_state(ProtocolStateId::Gamma1);
        let rho = s.projector();
        let counts: Vec<_> = settings
            .iter()
            .map(|x| CountRecord::new(x.label.clone(), 250.0 * x.expected_moment(&rho), 1.0))
            .collect();
        let raw = raw_reconstruct(&counts, &settings).unwrap();
        assert!((fidelity(&raw, &s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weights_scale_rates() {
        let settings = protocol_settings();
        let rho = protocol_state(ProtocolStateId::Alpha2).projector();
        let counts: Vec<_> = settings
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let w = 1.0 + i as f64;
                CountRecord::new(x.label.clone(), 100.0 * w * x.expected_moment(&rho), w)
            })
            .collect();
        let raw = raw_reconstruct(&counts, &settings).unwrap();
        assert!((raw.matrix() - rho.matrix()).iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn count_validation() {
        let settings = protocol_settings();
        let mut counts: Vec<_> = settings
            .iter()
            .map(|x| CountRecord::new(x.label.clone(), 10.0, 1.0))
            .collect();
        counts.pop();
        assert!(matches!(
            moments_from_counts(&counts, &settings),
            Err(Error::InvalidInput(_))
        ));
        counts.push(CountRecord::new("XX", 1.0, 1.0));
        assert!(moments_from_counts(&counts, &settings).is_err());
        let zero: Vec<_> = settings
            .iter()
            .map(|x| CountRecord::new(x.label.clone(), 0.0, 1.0))
            .collect();
        assert!(matches!(
            moments_from_counts(&zero, &settings),
            Err(Error::DegenerateData(_))
        ));
    }
}
