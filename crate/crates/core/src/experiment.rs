//! Parametric model of the preparation interferometer and of the count
//! statistics it produces.
//!
//! HWP1 splits the pump between the arm driving the type-II crystal
//! (`|1,1⟩`) and the arm driving the two crossed type-I crystals; HWP2
//! balances `|2,0⟩` against `|0,2⟩`. Rotating quartz plates set `φ13` and the
//! piezo voltage sets `φ12` linearly. Imperfect wavepacket overlap is a
//! single `overlap` parameter that erodes the coherence between the type-I
//! pair and the type-II term.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::optics::{detection_vector, filter_accept_mode, filters_for_state, FilterSettings};
use crate::qutrit::{protocol_state, DensityMatrix3, ProtocolStateId, PureQutrit};
use crate::rng::{sample_poisson, stream_rng};
use crate::tomography::{
    fit_sinusoid, moments_from_counts, protocol_settings, CountRecord, MeasurementSetting,
    MomentVector, SinusoidFit,
};
use crate::{Error, Result};

/// Piezo calibration: degrees of `φ12` per volt.
pub const DEFAULT_PHASE_PER_VOLT: f64 = 51.7;

/// HWP1 angle giving `|c2|² = 1/3` when HWP2 sits at 22.5°.
pub fn equal_split_hwp1() -> f64 {
    0.5 * (1.0 / 3f64.sqrt()).asin()
}

/// Knob positions of the preparation setup. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApparatusConfig {
    pub hwp1_angle: f64,
    pub hwp2_angle: f64,
    pub phi13: f64,
    pub pzt_volts: f64,
    /// Degrees per volt.
    pub phase_per_volt: f64,
    /// Wavepacket overlap quality in `[0, 1]`.
    pub overlap: f64,
    /// Mean accidental coincidences added to every acquisition.
    pub accidental_rate: f64,
    pub mean_events: f64,
}

impl Default for ApparatusConfig {
    /// Equal amplitudes, all phases zero, ideal overlap, no accidentals.
    fn default() -> Self {
        Self {
            hwp1_angle: equal_split_hwp1(),
            hwp2_angle: FRAC_PI_4 / 2.0,
            phi13: 0.0,
            pzt_volts: 0.0,
            phase_per_volt: DEFAULT_PHASE_PER_VOLT,
            overlap: 1.0,
            accidental_rate: 0.0,
            mean_events: 500.0,
        }
    }
}

impl ApparatusConfig {
    /// Sets `φ12` (through the piezo voltage) and `φ13`.
    pub fn with_phases(mut self, phi12: f64, phi13: f64) -> Self {
        self.pzt_volts = volts_for_phase(phi12, self.phase_per_volt);
        self.phi13 = phi13;
        self
    }

    pub fn with_overlap(mut self, overlap: f64) -> Self {
        self.overlap = overlap;
        self
    }

    pub fn with_accidentals(mut self, rate: f64) -> Self {
        self.accidental_rate = rate;
        self
    }

    pub fn with_mean_events(mut self, mean_events: f64) -> Self {
        self.mean_events = mean_events;
        self
    }

    /// Knob positions that prepare a protocol state. The first basis uses
    /// single-crystal positions; the other nine states share the
    /// equal-amplitude waveplate angles and differ only in phase.
    pub fn for_state(id: ProtocolStateId) -> Self {
        let base = Self::default();
        match id {
            ProtocolStateId::Alpha => Self {
                hwp1_angle: 0.0,
                hwp2_angle: 0.0,
                ..base
            },
            ProtocolStateId::Beta => Self {
                hwp1_angle: FRAC_PI_4,
                hwp2_angle: 0.0,
                ..base
            },
            ProtocolStateId::Gamma => Self {
                hwp1_angle: 0.0,
                hwp2_angle: FRAC_PI_4,
                ..base
            },
            _ => {
                let s = protocol_state(id);
                base.with_phases(s.phi12(), s.phi13())
            }
        }
    }

    /// `φ12` in radians, linear in the piezo voltage.
    pub fn phi12(&self) -> f64 {
        (self.phase_per_volt * self.pzt_volts).to_radians()
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::InvalidInput(format!(
                "overlap must lie in [0, 1], got {}",
                self.overlap
            )));
        }
        if !(self.mean_events > 0.0) || !self.mean_events.is_finite() {
            return Err(Error::InvalidInput(format!(
                "mean_events must be positive, got {}",
                self.mean_events
            )));
        }
        if !(self.accidental_rate >= 0.0) {
            return Err(Error::InvalidInput("accidental_rate must be ≥ 0".into()));
        }
        if !(self.phase_per_volt > 0.0) {
            return Err(Error::InvalidInput("phase_per_volt must be positive".into()));
        }
        Ok(())
    }
}

/// Inverse of the piezo calibration.
pub fn volts_for_phase(phi12: f64, phase_per_volt: f64) -> f64 {
    phi12.to_degrees() / phase_per_volt
}

pub fn prepared_state(cfg: &ApparatusConfig) -> PureQutrit {
    let (s1, c1) = (2.0 * cfg.hwp1_angle).sin_cos();
    let (s2, c2) = (2.0 * cfg.hwp2_angle).sin_cos();
    PureQutrit::new(
        C64::new(c1 * c2, 0.0),
        C64::from_polar(s1, cfg.phi12()),
        C64::from_polar(c1 * s2, cfg.phi13),
    )
    .expect("waveplate amplitudes have unit norm")
}

/// `overlap·|ψ⟩⟨ψ| + (1 − overlap)·D(ψ)`, where `D` removes the coherences
/// between `|1,1⟩` and the type-I pair.
pub fn effective_density(cfg: &ApparatusConfig) -> DensityMatrix3 {
    let psi = prepared_state(cfg);
    let mut m = *psi.projector().matrix();
    let keep = C64::from(cfg.overlap.clamp(0.0, 1.0));
    for (j, k) in [(0, 1), (1, 0), (1, 2), (2, 1)] {
        m[(j, k)] *= keep;
    }
    DensityMatrix3::from_psd_unchecked(m)
}

/// How counts are produced from expected values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Acquisition {
    /// Report the expected counts themselves (fractional).
    Expectation,
    /// Poisson draws from random stream `stream` of `seed`.
    Poisson { seed: u64, stream: u64 },
}

impl Acquisition {
    pub fn poisson(seed: u64) -> Self {
        Self::Poisson { seed, stream: 0 }
    }

    /// The same mode moved to another stream of its seed.
    pub fn on_stream(self, stream: u64) -> Self {
        match self {
            Self::Expectation => Self::Expectation,
            Self::Poisson { seed, .. } => Self::Poisson { seed, stream },
        }
    }
}

/// Counts for each setting with mean
/// `mean_events · p_k(ρ) / Σ_j p_j(ρ) + accidental_rate`.
pub fn simulate_counts(
    rho: &DensityMatrix3,
    settings: &[MeasurementSetting],
    mean_events: f64,
    accidental_rate: f64,
    acquisition: Acquisition,
) -> Result<Vec<CountRecord>> {
    if !(mean_events > 0.0) || !mean_events.is_finite() {
        return Err(Error::InvalidInput(format!(
            "mean_events must be positive, got {mean_events}"
        )));
    }
    let p: Vec<f64> = settings
        .iter()
        .map(|s| s.expected_moment(rho).max(0.0))
        .collect();
    let total: f64 = p.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateData(
            "state is dark in every setting".into(),
        ));
    }
    let means = p
        .iter()
        .map(|pk| mean_events * pk / total + accidental_rate);
    let counts: Vec<f64> = match acquisition {
        Acquisition::Expectation => means.collect(),
        Acquisition::Poisson { seed, stream } => {
            let mut rng = stream_rng(seed, stream);
            means.map(|m| sample_poisson(&mut rng, m)).collect()
        }
    };
    Ok(settings
        .iter()
        .zip(counts)
        .map(|(s, n)| CountRecord::new(s.label.clone(), n, 1.0))
        .collect())
}

/// Fixed `φ13` and the `φ12` grid of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub phi13: f64,
    /// Strictly increasing, radians.
    pub phi12_grid: Vec<f64>,
    pub seed: u64,
    /// Use expected counts instead of Poisson draws.
    pub expectation: bool,
}

impl ScanSpec {
    pub fn new(phi13: f64, phi12_grid: Vec<f64>, seed: u64) -> Self {
        Self {
            phi13,
            phi12_grid,
            seed,
            expectation: false,
        }
    }

    pub fn expectation(mut self) -> Self {
        self.expectation = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        validate_grid(&self.phi12_grid)
    }

    fn acquisition(&self, point: usize) -> Acquisition {
        if self.expectation {
            Acquisition::Expectation
        } else {
            Acquisition::Poisson {
                seed: self.seed,
                stream: point as u64,
            }
        }
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("scan grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("scan grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `start, start + step, …` strictly below `stop`, all in degrees, returned
/// in radians.
pub fn degree_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step - 1e-9).ceil().max(0.0) as usize;
    (0..n).map(|i| (start + step * i as f64).to_radians()).collect()
}

/// Coincidence counts against a scanned knob with both filters fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalityScan {
    pub filters: (FilterSettings, FilterSettings),
    /// `(knob value in radians, counts)`.
    pub points: Vec<(f64, f64)>,
    pub fit: SinusoidFit,
    pub visibility: f64,
    /// Knob value of the fitted minimum.
    pub minimum_at: f64,
}

fn run_dip_scan(
    set_state: &PureQutrit,
    grid: &[f64],
    frequency: f64,
    cfg: &ApparatusConfig,
    seed: u64,
    expectation: bool,
    config_at: impl Fn(f64) -> ApparatusConfig + Sync,
) -> Result<OrthogonalityScan> {
    cfg.validate()?;
    validate_grid(grid)?;
    let filters = filters_for_state(set_state);
    let w = detection_vector(&filter_accept_mode(&filters.0), &filter_accept_mode(&filters.1));
    // normalized so that the set state itself gives mean_events
    let reference = set_state.projector().expectation(&w);
    let points: Vec<(f64, f64)> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let rho = effective_density(&config_at(x));
            let mean = cfg.mean_events * rho.expectation(&w).max(0.0) / reference
                + cfg.accidental_rate;
            let n = if expectation {
                mean
            } else {
                sample_poisson(&mut stream_rng(seed, i as u64), mean)
            };
            (x, n)
        })
        .collect();
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let fit = fit_sinusoid(&xs, &ys, frequency)?;
    Ok(OrthogonalityScan {
        filters,
        visibility: fit.visibility(),
        minimum_at: fit.minimum_at(),
        points,
        fit,
    })
}

/// Filters tuned to the photons of `set_state`, `φ12` scanned at fixed `φ13`.
/// Counts are normalized so that the set state itself would give
/// `cfg.mean_events` (plus accidentals).
pub fn orthogonality_scan(
    set_state: &PureQutrit,
    spec: &ScanSpec,
    cfg: &ApparatusConfig,
) -> Result<OrthogonalityScan> {
    spec.validate()?;
    run_dip_scan(
        set_state,
        &spec.phi12_grid,
        1.0,
        cfg,
        spec.seed,
        spec.expectation,
        |phi12| cfg.with_phases(phi12, spec.phi13),
    )
}

/// Orthogonality scan over the HWP2 angle with the type-II arm dark, for the
/// first basis whose states carry no relative phase to scan.
pub fn hwp2_orthogonality_scan(
    set_state: &PureQutrit,
    hwp2_grid: &[f64],
    cfg: &ApparatusConfig,
    seed: u64,
    expectation: bool,
) -> Result<OrthogonalityScan> {
    run_dip_scan(set_state, hwp2_grid, 4.0, cfg, seed, expectation, |h| ApparatusConfig {
        hwp1_angle: 0.0,
        hwp2_angle: h,
        ..*cfg
    })
}

/// Nine-setting tomography at every grid point.
pub fn tomography_scan(spec: &ScanSpec, cfg: &ApparatusConfig) -> Result<Vec<(f64, MomentVector)>> {
    spec.validate()?;
    cfg.validate()?;
    let settings = protocol_settings();
    spec.phi12_grid
        .par_iter()
        .enumerate()
        .map(|(i, &phi12)| {
            let rho = effective_density(&cfg.with_phases(phi12, spec.phi13));
            let counts = simulate_counts(
                &rho,
                &settings,
                cfg.mean_events,
                cfg.accidental_rate,
                spec.acquisition(i),
            )?;
            Ok((phi12, moments_from_counts(&counts, &settings)?))
        })
        .collect()
}

/// Scan axis used to show the orthogonality of one basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DipAxis {
    Phi12 { phi13: f64 },
    Hwp2,
}

/// A set state, the basis partner expected to go dark, and how to reach it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipConfig {
    pub basis: u8,
    pub set_state: ProtocolStateId,
    pub dark_state: ProtocolStateId,
    pub axis: DipAxis,
}

/// The orthogonality scan used for each of the four bases.
pub fn basis_dip(basis: u8) -> Result<DipConfig> {
    use ProtocolStateId::*;
    let phi = |deg: f64| DipAxis::Phi12 {
        phi13: deg.to_radians(),
    };
    let (set_state, dark_state, axis) = match basis {
        1 => (Alpha, Gamma, DipAxis::Hwp2),
        2 => (Alpha1, Beta1, phi(-120.0)),
        3 => (Alpha2, Beta2, phi(0.0)),
        4 => (Alpha3, Beta3, phi(0.0)),
        _ => return Err(Error::InvalidInput(format!("no basis {basis}"))),
    };
    Ok(DipConfig {
        basis,
        set_state,
        dark_state,
        axis,
    })
}

impl DipConfig {
    /// Default scan grid: one full period in 10° (φ12) or 2.5° (HWP2) steps.
    pub fn default_grid(&self) -> Vec<f64> {
        match self.axis {
            DipAxis::Phi12 { .. } => degree_grid(-180.0, 180.0, 10.0),
            DipAxis::Hwp2 => degree_grid(0.0, 90.0, 2.5),
        }
    }

    pub fn run(
        &self,
        grid: &[f64],
        cfg: &ApparatusConfig,
        seed: u64,
        expectation: bool,
    ) -> Result<OrthogonalityScan> {
        let set = protocol_state(self.set_state);
        match self.axis {
            DipAxis::Phi12 { phi13 } => {
                let spec = ScanSpec {
                    phi13,
                    phi12_grid: grid.to_vec(),
                    seed,
                    expectation,
                };
                orthogonality_scan(&set, &spec, cfg)
            }
            DipAxis::Hwp2 => hwp2_orthogonality_scan(&set, grid, cfg, seed, expectation),
        }
    }

    /// Knob value at which `dark_state` is prepared.
    pub fn dark_position(&self) -> f64 {
        match self.axis {
            DipAxis::Phi12 { .. } => protocol_state(self.dark_state).phi12(),
            DipAxis::Hwp2 => FRAC_PI_4,
        }
    }
}

/// Apparatus imperfection adjusted to reach a visibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VisibilityKnob {
    Overlap,
    AccidentalRate,
}

/// Finds the knob value whose expectation-mode scan has the requested
/// visibility, by bisection. Visibility decreases with lower overlap and
/// with more accidentals.
pub fn calibrate_visibility(
    dip: &DipConfig,
    cfg: &ApparatusConfig,
    knob: VisibilityKnob,
    target: f64,
) -> Result<ApparatusConfig> {
    let grid = dip.default_grid();
    let visibility = |c: &ApparatusConfig| dip.run(&grid, c, 0, true).map(|s| s.visibility);
    let set = |c: &ApparatusConfig, x: f64| match knob {
        VisibilityKnob::Overlap => c.with_overlap(x),
        VisibilityKnob::AccidentalRate => c.with_accidentals(x),
    };
    // (value with high visibility, value with low visibility)
    let (mut good, mut bad) = match knob {
        VisibilityKnob::Overlap => (1.0, 0.0),
        VisibilityKnob::AccidentalRate => (0.0, cfg.mean_events),
    };
    if visibility(&set(cfg, good))? < target {
        return Err(Error::InvalidInput(format!(
            "visibility {target} is above what this configuration reaches"
        )));
    }
    if knob == VisibilityKnob::AccidentalRate {
        while visibility(&set(cfg, bad))? > target {
            bad *= 2.0;
        }
    } else if visibility(&set(cfg, bad))? > target {
        return Err(Error::InvalidInput(format!(
            "visibility {target} cannot be reached by lowering the overlap"
        )));
    }
    for _ in 0..100 {
        let mid = 0.5 * (good + bad);
        if visibility(&set(cfg, mid))? >= target {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(set(cfg, 0.5 * (good + bad)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qutrit::{fidelity, inner_product};

    fn fid(a: &PureQutrit, b: &PureQutrit) -> f64 {
        inner_product(a, b).norm_sqr()
    }

    #[test]
    fn degenerate_knob_positions() {
        let base = ApparatusConfig::default();
        let s = prepared_state(&ApparatusConfig { hwp1_angle: 0.0, hwp2_angle: 0.0, ..base });
        assert!(fid(&s, &protocol_state(ProtocolStateId::Alpha)) > 1.0 - 1e-15);
        let s = prepared_state(&ApparatusConfig { hwp1_angle: 0.0, hwp2_angle: FRAC_PI_4, ..base });
        assert!(fid(&s, &protocol_state(ProtocolStateId::Gamma)) > 1.0 - 1e-15);
        let s = prepared_state(&ApparatusConfig { hwp1_angle: FRAC_PI_4, ..base });
        assert!(fid(&s, &protocol_state(ProtocolStateId::Beta)) > 1.0 - 1e-15);
    }

    #[test]
    fn beta1_from_phases() {
        let cfg = ApparatusConfig::default().with_phases(120f64.to_radians(), -120f64.to_radians());
        let s = prepared_state(&cfg);
        assert!(fid(&s, &protocol_state(ProtocolStateId::Beta1)) > 1.0 - 1e-12);
        for m in s.magnitudes() {
            assert!((m - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn piezo_calibration() {
        assert!((volts_for_phase(51.7f64.to_radians(), 51.7) - 1.0).abs() < 1e-12);
        assert_eq!(volts_for_phase(0.0, 51.7), 0.0);
        assert!((volts_for_phase(103.4f64.to_radians(), 51.7) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn overlap_zero_keeps_type_one_coherence() {
        let cfg = ApparatusConfig::for_state(ProtocolStateId::Alpha1).with_overlap(0.0);
        let rho = effective_density(&cfg);
        assert!(rho.entry(2, 1).norm() < 1e-15);
        assert!(rho.entry(3, 2).norm() < 1e-15);
        assert!((rho.entry(3, 1) - C64::from(1.0 / 3.0)).norm() < 1e-12);
        assert!(rho.min_eigenvalue() >= -1e-12);
    }

    #[test]
    fn overlap_one_is_pure() {
        let cfg = ApparatusConfig::for_state(ProtocolStateId::Gamma2);
        let rho = effective_density(&cfg);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        assert!((fidelity(&rho, &protocol_state(ProtocolStateId::Gamma2)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_counts_follow_moments() {
        let settings = protocol_settings();
        let rho = protocol_state(ProtocolStateId::Beta2).projector();
        let counts = simulate_counts(&rho, &settings, 900.0, 0.0, Acquisition::Expectation).unwrap();
        let p: Vec<f64> = settings.iter().map(|s| s.expected_moment(&rho)).collect();
        let total: f64 = p.iter().sum();
        for (c, pk) in counts.iter().zip(p) {
            assert!((c.count - 900.0 * pk / total).abs() < 1e-9);
        }
        let sum: f64 = counts.iter().map(|c| c.count).sum();
        assert!((sum - 900.0).abs() < 1e-9);
    }

    #[test]
    fn seeded_counts_repeat() {
        let settings = protocol_settings();
        let rho = protocol_state(ProtocolStateId::Beta2).projector();
        let a = simulate_counts(&rho, &settings, 500.0, 0.5, Acquisition::poisson(11)).unwrap();
        let b = simulate_counts(&rho, &settings, 500.0, 0.5, Acquisition::poisson(11)).unwrap();
        assert_eq!(a, b);
        let c = simulate_counts(&rho, &settings, 500.0, 0.5, Acquisition::poisson(12)).unwrap();
        assert_ne!(a, c);
        assert!(a.iter().all(|r| r.count.fract() == 0.0));
    }

    #[test]
    fn grid_validation() {
        assert!(ScanSpec::new(0.0, vec![], 0).validate().is_err());
        assert!(ScanSpec::new(0.0, vec![0.0, 0.0], 0).validate().is_err());
        assert!(ScanSpec::new(0.0, vec![0.0, 1.0], 0).validate().is_ok());
        let g = degree_grid(-180.0, 180.0, 10.0);
        assert_eq!(g.len(), 36);
        assert!((g[0] + std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn alpha3_dip_ideal() {
        let spec = ScanSpec::new(0.0, degree_grid(-180.0, 180.0, 10.0), 0).expectation();
        let set = protocol_state(ProtocolStateId::Alpha3);
        let scan = orthogonality_scan(&set, &spec, &ApparatusConfig::default()).unwrap();
        assert!((scan.visibility - 1.0).abs() < 1e-10);
        assert!((scan.minimum_at - (-120f64).to_radians()).abs() < 1e-10);
        let at = scan
            .points
            .iter()
            .find(|(x, _)| (x - (-120f64).to_radians()).abs() < 1e-12)
            .unwrap();
        assert!(at.1.abs() < 1e-10);
    }

    #[test]
    fn alpha1_dips_at_both_partners() {
        let set = protocol_state(ProtocolStateId::Alpha1);
        let grid = degree_grid(-180.0, 180.0, 10.0);
        for (phi13, expected) in [(-120.0, 120.0), (120.0, -120.0)] {
            let spec = ScanSpec::new(f64::to_radians(phi13), grid.clone(), 0).expectation();
            let scan = orthogonality_scan(&set, &spec, &ApparatusConfig::default()).unwrap();
            assert!((scan.minimum_at - f64::to_radians(expected)).abs() < 1e-10);
            assert!((scan.visibility - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn short_scan_is_rejected() {
        let set = protocol_state(ProtocolStateId::Alpha3);
        let spec = ScanSpec::new(0.0, degree_grid(0.0, 90.0, 10.0), 0).expectation();
        assert!(matches!(
            orthogonality_scan(&set, &spec, &ApparatusConfig::default()),
            Err(Error::Fit(_))
        ));
    }

    #[test]
    fn visibility_tracks_overlap() {
        let dip = basis_dip(4).unwrap();
        let grid = dip.default_grid();
        let cfg = ApparatusConfig::default().with_overlap(0.9);
        let v = dip.run(&grid, &cfg, 0, true).unwrap().visibility;
        assert!((v - 0.9).abs() < 1e-10, "{v}");
    }

    #[test]
    fn calibration_hits_target() {
        for basis in 1..=4 {
            let dip = basis_dip(basis).unwrap();
            let knob = if basis == 1 { VisibilityKnob::AccidentalRate } else { VisibilityKnob::Overlap };
            let cfg = calibrate_visibility(&dip, &ApparatusConfig::default(), knob, 0.932).unwrap();
            let v = dip.run(&dip.default_grid(), &cfg, 0, true).unwrap().visibility;
            assert!((v - 0.932).abs() < 1e-9, "basis {basis}: {v}");
        }
    }

    #[test]
    fn basis_dips_are_dark_at_partner() {
        for basis in 1..=4 {
            let dip = basis_dip(basis).unwrap();
            let scan = dip.run(&dip.default_grid(), &ApparatusConfig::default(), 0, true).unwrap();
            assert!((scan.visibility - 1.0).abs() < 1e-9, "basis {basis}");
            assert!((scan.minimum_at - dip.dark_position()).abs() < 1e-9, "basis {basis}");
        }
        assert!(basis_dip(5).is_err());
    }

    #[test]
    fn tomography_scan_is_parallel_safe() {
        let spec = ScanSpec::new(0.0, degree_grid(-180.0, 180.0, 30.0), 3);
        let cfg = ApparatusConfig::default();
        let a = tomography_scan(&spec, &cfg).unwrap();
        let b = tomography_scan(&spec, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
