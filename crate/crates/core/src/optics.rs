//! Jones-calculus model of the Brown–Twiss measurement arms.
//!
//! Each arm holds a quarter-wave plate, then a half-wave plate, then an
//! analyzer transmitting V. A coincidence between the arms measures a
//! fourth-order field moment, which vanishes exactly when the input is
//! orthogonal to the state whose photons the two filters are tuned to.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

use nalgebra::{Matrix2, Vector2, Vector3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::qutrit::{majorana_decompose, MajoranaPoint, PureQutrit};
use crate::{Error, Result};

const CIRCULAR_TOL: f64 = 1e-14;
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Single-photon Jones vector on the `{H, V}` basis, unit norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationVector {
    pub h: C64,
    pub v: C64,
}

impl PolarizationVector {
    pub fn new(h: C64, v: C64) -> Result<Self> {
        let n = (h.norm_sqr() + v.norm_sqr()).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::ZeroState);
        }
        Ok(Self { h: h / n, v: v / n })
    }

    pub fn horizontal() -> Self {
        Self {
            h: C64::new(1.0, 0.0),
            v: C64::new(0.0, 0.0),
        }
    }

    pub fn vertical() -> Self {
        Self {
            h: C64::new(0.0, 0.0),
            v: C64::new(1.0, 0.0),
        }
    }

    /// `(H + V)/√2`.
    pub fn diagonal() -> Self {
        Self {
            h: C64::new(FRAC_1_SQRT_2, 0.0),
            v: C64::new(FRAC_1_SQRT_2, 0.0),
        }
    }

    /// `(H + iV)/√2`.
    pub fn right_circular() -> Self {
        Self {
            h: C64::new(FRAC_1_SQRT_2, 0.0),
            v: C64::new(0.0, FRAC_1_SQRT_2),
        }
    }

    /// Photon mode `cos(θ/2) H + e^{iφ} sin(θ/2) V`.
    pub fn from_point(p: &MajoranaPoint) -> Self {
        let [h, v] = p.mode_amplitudes();
        Self { h, v }
    }

    pub fn to_vector(&self) -> Vector2<C64> {
        Vector2::new(self.h, self.v)
    }

    fn from_vector(v: Vector2<C64>) -> Self {
        Self::new(v[0], v[1]).expect("unitary image of a unit vector")
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap(&self, other: &Self) -> f64 {
        (self.h.conj() * other.h + self.v.conj() * other.v).norm_sqr()
    }

    /// Stokes parameters `(S1, S2, S3)` of the normalized vector.
    pub fn stokes(&self) -> [f64; 3] {
        let hv = self.h.conj() * self.v;
        [
            self.h.norm_sqr() - self.v.norm_sqr(),
            2.0 * hv.re,
            2.0 * hv.im,
        ]
    }
}

/// Linear retarder with its fast axis at `angle` from H.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveplateSetting {
    pub retardance: f64,
    pub angle: f64,
}

impl WaveplateSetting {
    pub fn quarter(angle: f64) -> Self {
        Self {
            retardance: FRAC_PI_2,
            angle: wrap_half_turn(angle),
        }
    }

    pub fn half(angle: f64) -> Self {
        Self {
            retardance: PI,
            angle: wrap_half_turn(angle),
        }
    }
}

/// Maps an axis angle into `(−π/2, π/2]`; axes are defined modulo π.
pub fn wrap_half_turn(angle: f64) -> f64 {
    let a = angle.rem_euclid(PI);
    if a > FRAC_PI_2 {
        a - PI
    } else {
        a
    }
}

/// `R(angle) · diag(1, e^{iδ}) · R(−angle)`.
pub fn jones_waveplate(w: &WaveplateSetting) -> Matrix2<C64> {
    let (s, c) = w.angle.sin_cos();
    let rot = Matrix2::new(c, -s, s, c).map(C64::from);
    let ret = Matrix2::new(
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::from_polar(1.0, w.retardance),
    );
    rot * ret * rot.transpose()
}

/// Quarter-wave plate angle `chi` and half-wave plate angle `theta` of one
/// arm, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSettings {
    pub chi: f64,
    pub theta: f64,
}

impl FilterSettings {
    pub fn new(chi: f64, theta: f64) -> Self {
        Self {
            chi: wrap_half_turn(chi),
            theta: wrap_half_turn(theta),
        }
    }

    pub fn from_degrees(chi: f64, theta: f64) -> Self {
        Self::new(chi.to_radians(), theta.to_radians())
    }

    /// Jones matrix of the plates in light-propagation order: QWP, then HWP.
    pub fn jones(&self) -> Matrix2<C64> {
        jones_waveplate(&WaveplateSetting::half(self.theta))
            * jones_waveplate(&WaveplateSetting::quarter(self.chi))
    }
}

/// The input polarization that leaves the plates as V and is fully
/// transmitted by the analyzer.
pub fn filter_accept_mode(f: &FilterSettings) -> PolarizationVector {
    let v = Vector2::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    PolarizationVector::from_vector(f.jones().adjoint() * v)
}

/// Probability that a single photon in mode `p` passes the filter.
pub fn transmission_probability(p: &PolarizationVector, f: &FilterSettings) -> f64 {
    (f.jones() * p.to_vector())[1].norm_sqr()
}

/// Plate angles that fully transmit `p`.
///
/// The quarter-wave plate is aligned with an axis of the polarization
/// ellipse, picking the one in `(−π/4, π/4]`; the half-wave plate then turns
/// the resulting linear polarization onto V with `θ ∈ (−π/4, π/4]`. Circular
/// input leaves the quarter-wave axis free and uses `χ = π/4`.
pub fn solve_filter_settings(p: &PolarizationVector) -> FilterSettings {
    let [s1, s2, _] = p.stokes();
    let chi = if s1.hypot(s2) < CIRCULAR_TOL {
        FRAC_PI_4
    } else {
        let psi = 0.5 * s2.atan2(s1);
        reduce_quarter(psi)
    };
    let q = jones_waveplate(&WaveplateSetting::quarter(chi)) * p.to_vector();
    // q = e^{iγ}(cos β, sin β); strip γ using the dominant component
    let anchor = if q[0].norm() >= q[1].norm() { q[0] } else { q[1] };
    let unphase = anchor.conj() / anchor.norm();
    let beta = (q[1] * unphase).re.atan2((q[0] * unphase).re);
    let theta = reduce_quarter(0.5 * (beta + FRAC_PI_2));
    FilterSettings { chi, theta }
}

/// Reduces an angle modulo π/2 into `(−π/4, π/4]`.
fn reduce_quarter(x: f64) -> f64 {
    let r = x - FRAC_PI_2 * (x / FRAC_PI_2).round();
    if r <= -FRAC_PI_4 + 1e-15 {
        r + FRAC_PI_2
    } else {
        r
    }
}

/// `w` such that the coincidence amplitude for a state `c` is `w† c`.
///
/// This is the unnormalized two-photon state `a†(p1) a†(p2)|vac⟩` on the
/// `{|2,0⟩, |1,1⟩, |0,2⟩}` basis; its norm squared is `1 + |⟨p1*|p2⟩|²`.
pub fn detection_vector(p1: &PolarizationVector, p2: &PolarizationVector) -> Vector3<C64> {
    Vector3::new(
        SQRT_2 * p1.h * p2.h,
        p1.h * p2.v + p1.v * p2.h,
        SQRT_2 * p1.v * p2.v,
    )
}

/// Fourth-order moment seen by filters accepting `p1` and `p2`; in `[0, 2]`.
pub fn coincidence_moment(
    state: &PureQutrit,
    p1: &PolarizationVector,
    p2: &PolarizationVector,
) -> f64 {
    let w = detection_vector(p1, p2);
    w.iter()
        .zip(state.amplitudes().iter())
        .map(|(wi, ci)| wi.conj() * ci)
        .sum::<C64>()
        .norm_sqr()
}

/// The two single-photon modes a state factors into.
pub fn majorana_modes(state: &PureQutrit) -> (PolarizationVector, PolarizationVector) {
    let pair = majorana_decompose(state);
    (
        PolarizationVector::from_point(&pair.first()),
        PolarizationVector::from_point(&pair.second()),
    )
}

/// Filter settings for both arms tuned to the photons of `set_state`.
pub fn filters_for_state(set_state: &PureQutrit) -> (FilterSettings, FilterSettings) {
    let (p1, p2) = majorana_modes(set_state);
    (solve_filter_settings(&p1), solve_filter_settings(&p2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthogonalityCheck {
    pub orthogonal: bool,
    pub residual: f64,
}

/// Coincidence criterion: `state ⟂ set_state` iff no coincidences are seen
/// with both filters tuned to the photons of `set_state`.
pub fn is_orthogonal(state: &PureQutrit, set_state: &PureQutrit) -> OrthogonalityCheck {
    let (p1, p2) = majorana_modes(set_state);
    let residual = coincidence_moment(state, &p1, &p2);
    OrthogonalityCheck {
        orthogonal: residual <= ORTHOGONALITY_TOL,
        residual,
    }
}
