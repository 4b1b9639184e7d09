//! Least-squares sinusoid fits of phase scans.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::MomentVector;
use crate::qutrit::DensityMatrix3;
use crate::{Error, Result};

/// `y(x) = constant + amplitude · cos(frequency·x + phase_offset)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidFit {
    pub amplitude: f64,
    pub phase_offset: f64,
    pub constant: f64,
    pub frequency: f64,
    /// Root-mean-square residual of the fit.
    pub residual_rms: f64,
    /// One-sigma standard error of `amplitude` from the residual scatter.
    pub amplitude_stderr: f64,
}

impl SinusoidFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.constant + self.amplitude * (self.frequency * x + self.phase_offset).cos()
    }

    /// Fringe visibility `(max − min)/(max + min)` of the fitted curve.
    pub fn visibility(&self) -> f64 {
        if self.constant <= 0.0 {
            return 0.0;
        }
        self.amplitude / self.constant
    }

    /// Location of the fitted minimum within one period, wrapped to `(−P/2, P/2]`.
    pub fn minimum_at(&self) -> f64 {
        let period = TAU / self.frequency;
        let x = (PI - self.phase_offset) / self.frequency;
        let y = x.rem_euclid(period);
        if y > 0.5 * period {
            y - period
        } else {
            y
        }
    }
}

/// Rejects grids that cannot pin a sinusoid of the given frequency: fewer
/// than five distinct abscissae, or a grid that (extended by one mean step)
/// covers less than a full period.
fn check_coverage(xs: &[f64], frequency: f64) -> Result<()> {
    let mut sorted: Vec<f64> = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let n = sorted.len();
    if n < 5 {
        return Err(Error::Fit(format!(
            "need at least 5 distinct scan points, got {n}"
        )));
    }
    let span = sorted[n - 1] - sorted[0];
    let covered = span * n as f64 / (n - 1) as f64;
    let period = TAU / frequency;
    if covered < period - 1e-9 {
        return Err(Error::Fit(format!(
            "scan covers {:.3} rad, shorter than one period ({:.3} rad)",
            covered, period
        )));
    }
    Ok(())
}

pub fn fit_sinusoid(xs: &[f64], ys: &[f64], frequency: f64) -> Result<SinusoidFit> {
    if xs.len() != ys.len() {
        return Err(Error::Fit("abscissa and ordinate lengths differ".into()));
    }
    if !(frequency > 0.0) {
        return Err(Error::Fit("frequency must be positive".into()));
    }
    check_coverage(xs, frequency)?;
    let mut xtx = Matrix3::<f64>::zeros();
    let mut xty = Vector3::<f64>::zeros();
    for (&x, &y) in xs.iter().zip(ys) {
        let row = Vector3::new((frequency * x).cos(), (frequency * x).sin(), 1.0);
        xtx += row * row.transpose();
        xty += row * y;
    }
    let inv = xtx
        .try_inverse()
        .ok_or_else(|| Error::Fit("singular normal equations".into()))?;
    let beta = inv * xty;
    let (a, b, c) = (beta[0], beta[1], beta[2]);
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - (a * (frequency * x).cos() + b * (frequency * x).sin() + c);
            r * r
        })
        .sum();
    let n = xs.len() as f64;
    let amplitude = a.hypot(b);
    // Below this the phase is set by rounding residue alone.
    let scale = ys.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let resolved = amplitude > 1e-12 * scale;
    let sigma2 = rss / (n - 3.0);
    let amplitude_stderr = if amplitude > 0.0 {
        let var = (a * a * inv[(0, 0)] + b * b * inv[(1, 1)] + 2.0 * a * b * inv[(0, 1)])
            * sigma2
            / (amplitude * amplitude);
        var.max(0.0).sqrt()
    } else {
        (sigma2 * inv[(0, 0)].max(inv[(1, 1)])).sqrt()
    };
    Ok(SinusoidFit {
        amplitude,
        // a cos + b sin = A cos(x + φ0) with a = A cos φ0, b = −A sin φ0
        phase_offset: if resolved { (-b).atan2(a) } else { 0.0 },
        constant: c,
        frequency,
        residual_rms: (rss / n).sqrt(),
        amplitude_stderr,
    })
}

/// Real channels of the implied density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    Rho11,
    Rho22,
    Rho33,
    ReRho21,
    ImRho21,
    ReRho32,
    ImRho32,
    ReRho31,
    ImRho31,
}

impl Channel {
    pub const ALL: [Channel; 9] = [
        Channel::Rho11,
        Channel::Rho22,
        Channel::Rho33,
        Channel::ReRho21,
        Channel::ImRho21,
        Channel::ReRho32,
        Channel::ImRho32,
        Channel::ReRho31,
        Channel::ImRho31,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Rho11 => "rho11",
            Channel::Rho22 => "rho22",
            Channel::Rho33 => "rho33",
            Channel::ReRho21 => "re_rho21",
            Channel::ImRho21 => "im_rho21",
            Channel::ReRho32 => "re_rho32",
            Channel::ImRho32 => "im_rho32",
            Channel::ReRho31 => "re_rho31",
            Channel::ImRho31 => "im_rho31",
        }
    }

    pub fn value(self, m: &MomentVector) -> f64 {
        match self {
            Channel::Rho11 => m.rho11(),
            Channel::Rho22 => m.rho22(),
            Channel::Rho33 => m.rho33(),
            Channel::ReRho21 => m.rho21().re,
            Channel::ImRho21 => m.rho21().im,
            Channel::ReRho32 => m.rho32().re,
            Channel::ImRho32 => m.rho32().im,
            Channel::ReRho31 => m.rho31().re,
            Channel::ImRho31 => m.rho31().im,
        }
    }
}

/// Sinusoid fits of every channel against φ12.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScanFit {
    fits: [SinusoidFit; 9],
}

impl PhaseScanFit {
    pub fn channel(&self, c: Channel) -> &SinusoidFit {
        &self.fits[c as usize]
    }

    /// Largest RMS residual over all channels.
    pub fn max_residual(&self) -> f64 {
        self.fits.iter().map(|f| f.residual_rms).fold(0.0, f64::max)
    }

    /// Moments read off the fitted curves at `phi12`.
    pub fn moments_at(&self, phi12: f64) -> MomentVector {
        let v = |c: Channel| self.channel(c).eval(phi12);
        let rho21 = C64::new(v(Channel::ReRho21), v(Channel::ImRho21));
        let rho32 = C64::new(v(Channel::ReRho32), v(Channel::ImRho32));
        let rho31 = C64::new(v(Channel::ReRho31), v(Channel::ImRho31));
        MomentVector {
            a2a2: 2.0 * v(Channel::Rho11),
            b2b2: 2.0 * v(Channel::Rho33),
            abab: v(Channel::Rho22),
            a2ab: std::f64::consts::SQRT_2 * rho21,
            abb2: std::f64::consts::SQRT_2 * rho32,
            a2b2: 2.0 * rho31,
        }
    }

    pub fn density_at(&self, phi12: f64) -> Result<DensityMatrix3> {
        super::rho_from_moments(&self.moments_at(phi12))
    }
}

/// Fits each channel of a φ12 scan to `C + A·cos(φ12 + φ0)`.
pub fn fit_phase_scan(records: &[(f64, MomentVector)]) -> Result<PhaseScanFit> {
    let xs: Vec<f64> = records.iter().map(|(x, _)| *x).collect();
    let mut fits = Vec::with_capacity(9);
    for c in Channel::ALL {
        let ys: Vec<f64> = records.iter().map(|(_, m)| c.value(m)).collect();
        fits.push(fit_sinusoid(&xs, &ys, 1.0)?);
    }
    Ok(PhaseScanFit {
        fits: fits.try_into().expect("nine channels"),
    })
}
