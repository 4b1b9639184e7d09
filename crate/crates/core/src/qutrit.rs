//! State space of a polarization qutrit.
//!
//! A single-mode biphoton has three polarization basis states, `|2,0⟩`
//! (two H photons), `|1,1⟩` (one H and one V photon) and `|0,2⟩` (two V
//! photons). A pure state is `c1|2,0⟩ + c2|1,1⟩ + c3|0,2⟩`; density matrices
//! use the convention `ρ_jk = c_j · conj(c_k)` so that `ρ21 = c2·conj(c1)`.
//!
//! Every pure state also factors into two single-photon polarization modes,
//! `a†(θ,φ) a†(θ′,φ′)|vac⟩` with `a†(θ,φ) = cos(θ/2) a† + e^{iφ} sin(θ/2) b†`,
//! which is how filter settings for a given state are found.

use std::cmp::Ordering;
use std::f64::consts::{PI, SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Amplitudes at or below this magnitude do not fix the global phase.
const PHASE_ANCHOR_MIN: f64 = 1e-12;
/// Polynomial coefficients below this magnitude are treated as vanishing.
const ROOT_DEGENERACY: f64 = 1e-14;
/// Polar angles this close to a pole get their azimuth pinned to zero.
const POLE_SNAP: f64 = 1e-12;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-9;
pub const PSD_TOL: f64 = 1e-9;

/// A normalized pure qutrit with canonical global phase: the first amplitude
/// of nonzero magnitude is real and non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureQutrit {
    amps: [C64; 3],
}

/// Scales `raw` to unit norm and removes the global phase.
pub fn normalize(raw: [C64; 3]) -> Result<PureQutrit> {
    let norm = raw.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroState);
    }
    let mut amps = raw.map(|c| c / norm);
    if let Some(anchor) = amps.iter().find(|c| c.norm() > PHASE_ANCHOR_MIN) {
        let rot = anchor.conj() / anchor.norm();
        for c in amps.iter_mut() {
            *c *= rot;
        }
    }
    // the anchor is real up to rounding; make it exactly so
    if let Some(anchor) = amps.iter_mut().find(|c| c.norm() > PHASE_ANCHOR_MIN) {
        *anchor = C64::new(anchor.norm(), 0.0);
    }
    Ok(PureQutrit { amps })
}

impl PureQutrit {
    pub fn new(c1: C64, c2: C64, c3: C64) -> Result<Self> {
        normalize([c1, c2, c3])
    }

    /// Builds a state from magnitudes and phases (radians).
    pub fn from_polar(magnitudes: [f64; 3], phases: [f64; 3]) -> Result<Self> {
        normalize([
            C64::from_polar(magnitudes[0], phases[0]),
            C64::from_polar(magnitudes[1], phases[1]),
            C64::from_polar(magnitudes[2], phases[2]),
        ])
    }

    pub fn amplitudes(&self) -> [C64; 3] {
        self.amps
    }

    pub fn c1(&self) -> C64 {
        self.amps[0]
    }

    pub fn c2(&self) -> C64 {
        self.amps[1]
    }

    pub fn c3(&self) -> C64 {
        self.amps[2]
    }

    pub fn magnitudes(&self) -> [f64; 3] {
        self.amps.map(|c| c.norm())
    }

    /// Arguments of the stored amplitudes in radians; zero for vanishing ones.
    pub fn phases(&self) -> [f64; 3] {
        self.amps
            .map(|c| if c.norm() > PHASE_ANCHOR_MIN { c.arg() } else { 0.0 })
    }

    /// `φ2 − φ1`, wrapped to `(−π, π]`.
    pub fn phi12(&self) -> f64 {
        let p = self.phases();
        wrap_pi(p[1] - p[0])
    }

    /// `φ3 − φ1`, wrapped to `(−π, π]`.
    pub fn phi13(&self) -> f64 {
        let p = self.phases();
        wrap_pi(p[2] - p[0])
    }

    pub fn to_vector(&self) -> Vector3<C64> {
        Vector3::from(self.amps)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn projector(&self) -> DensityMatrix3 {
        let v = self.to_vector();
        DensityMatrix3 {
            m: v * v.adjoint(),
            physical: true,
        }
    }
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_pi(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// `Σ conj(a_k) b_k`.
pub fn inner_product(a: &PureQutrit, b: &PureQutrit) -> C64 {
    a.amps
        .iter()
        .zip(b.amps.iter())
        .map(|(x, y)| x.conj() * y)
        .sum()
}

/// 3×3 Hermitian, unit-trace matrix on the `{|2,0⟩, |1,1⟩, |0,2⟩}` basis.
///
/// Raw tomographic reconstructions may have negative eigenvalues; `physical`
/// is set only where positivity has been checked or is guaranteed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix3 {
    m: Matrix3<C64>,
    physical: bool,
}

impl DensityMatrix3 {
    /// Validates hermiticity (1e-12) and unit trace (1e-9). The result is not
    /// flagged physical.
    pub fn new(m: Matrix3<C64>) -> Result<Self> {
        let dev = hermitian_deviation(&m);
        if dev > HERMITIAN_TOL {
            return Err(Error::Shape(format!(
                "matrix is not Hermitian (max deviation {dev:.3e})"
            )));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::Shape(format!("trace is {tr}, expected 1")));
        }
        Ok(Self {
            m: hermitian_part(&m),
            physical: false,
        })
    }

    /// Hermitian completion of `m` followed by trace normalization.
    pub fn from_unnormalized(m: Matrix3<C64>) -> Result<Self> {
        let h = hermitian_part(&m);
        let tr = h.trace().re;
        if !(tr > 1e-300) || !tr.is_finite() {
            return Err(Error::DegenerateData(format!("total trace is {tr}")));
        }
        Ok(Self {
            m: h / C64::from(tr),
            physical: false,
        })
    }

    /// Like [`DensityMatrix3::new`] but also checks positivity and sets the
    /// physical flag.
    pub fn physical(m: Matrix3<C64>) -> Result<Self> {
        let rho = Self::new(m)?;
        rho.into_checked_physical()
    }

    /// Sets the physical flag after verifying all eigenvalues ≥ −1e-9.
    pub fn into_checked_physical(mut self) -> Result<Self> {
        let min = self.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::Shape(format!(
                "matrix has negative eigenvalue {min:.3e}"
            )));
        }
        self.physical = true;
        Ok(self)
    }

    pub fn maximally_mixed() -> Self {
        Self {
            m: Matrix3::identity() / C64::from(3.0),
            physical: true,
        }
    }

    /// Internal constructor for matrices known to be Hermitian, PSD and
    /// trace-one up to rounding.
    pub(crate) fn from_psd_unchecked(m: Matrix3<C64>) -> Self {
        let h = hermitian_part(&m);
        let tr = h.trace().re;
        Self {
            m: h / C64::from(tr),
            physical: true,
        }
    }

    pub fn matrix(&self) -> &Matrix3<C64> {
        &self.m
    }

    /// One-based entry `ρ_jk`, matching the usual physics indexing.
    pub fn entry(&self, j: usize, k: usize) -> C64 {
        self.m[(j - 1, k - 1)]
    }

    pub fn is_physical(&self) -> bool {
        self.physical
    }

    /// True when all eigenvalues are ≥ −1e-9, whether or not the flag is set.
    pub fn is_positive(&self) -> bool {
        self.physical || self.min_eigenvalue() >= -PSD_TOL
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn eigen(&self) -> EigenDecomposition {
        decompose_hermitian(&self.m)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().eigenvalues[2]
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, v: &Vector3<C64>) -> f64 {
        (v.adjoint() * self.m * v)[(0, 0)].re
    }

    pub fn purity(&self) -> f64 {
        (self.m * self.m).trace().re
    }
}

fn hermitian_part(m: &Matrix3<C64>) -> Matrix3<C64> {
    (m + m.adjoint()) * C64::from(0.5)
}

fn hermitian_deviation(m: &Matrix3<C64>) -> f64 {
    (m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// `Tr(|t⟩⟨t| ρ)`. May exceed one slightly for raw, non-positive `ρ`.
pub fn fidelity(rho: &DensityMatrix3, target: &PureQutrit) -> f64 {
    rho.expectation(&target.to_vector())
}

/// Spectral decomposition with eigenvalues sorted in descending order.
///
/// Eigenvectors are unit columns with their largest-magnitude component made
/// real and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: [f64; 3],
    pub eigenvectors: [[C64; 3]; 3],
}

impl EigenDecomposition {
    pub fn vector(&self, i: usize) -> Vector3<C64> {
        Vector3::from(self.eigenvectors[i])
    }

    /// `Σ λ_i v_i v_i†`.
    pub fn reconstruct(&self) -> Matrix3<C64> {
        (0..3).fold(Matrix3::zeros(), |acc, i| {
            let v = self.vector(i);
            acc + v * v.adjoint() * C64::from(self.eigenvalues[i])
        })
    }

    /// Weight of the principal component relative to the trace.
    pub fn principal_weight(&self) -> f64 {
        self.eigenvalues[0] / self.eigenvalues.iter().sum::<f64>()
    }

    /// The normalized principal eigenvector as a state.
    pub fn principal_state(&self) -> PureQutrit {
        normalize(self.eigenvectors[0]).expect("eigenvectors have unit norm")
    }
}

/// Eigendecomposition of a Hermitian 3×3 matrix.
pub fn eigendecompose(m: &Matrix3<C64>) -> Result<EigenDecomposition> {
    let dev = hermitian_deviation(m);
    if dev > HERMITIAN_TOL {
        return Err(Error::Shape(format!(
            "matrix is not Hermitian (max deviation {dev:.3e})"
        )));
    }
    Ok(decompose_hermitian(&hermitian_part(m)))
}

fn decompose_hermitian(m: &Matrix3<C64>) -> EigenDecomposition {
    let eig = SymmetricEigen::new(*m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut eigenvalues = [0.0; 3];
    let mut eigenvectors = [[C64::new(0.0, 0.0); 3]; 3];
    for (slot, &i) in order.iter().enumerate() {
        eigenvalues[slot] = eig.eigenvalues[i];
        let col = eig.eigenvectors.column(i);
        let norm = col.norm();
        let mut v = [col[0] / norm, col[1] / norm, col[2] / norm];
        // ties go to the lowest index; 1e-12 guards against rounding flips
        let max = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let pivot = v.iter().position(|c| c.norm() >= max - 1e-12).unwrap_or(0);
        let rot = v[pivot].conj() / v[pivot].norm();
        for c in v.iter_mut() {
            *c *= rot;
        }
        v[pivot] = C64::new(v[pivot].norm(), 0.0);
        eigenvectors[slot] = v;
    }
    EigenDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

/// A point on the Poincaré sphere: polar angle `θ ∈ [0, π]`, azimuth
/// `φ ∈ [0, 2π)`. The azimuth is stored as 0 at the poles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajoranaPoint {
    theta: f64,
    phi: f64,
}

impl MajoranaPoint {
    pub fn new(theta: f64, phi: f64) -> Self {
        let theta = theta.clamp(0.0, PI);
        let phi = if theta < POLE_SNAP || PI - theta < POLE_SNAP {
            0.0
        } else {
            let p = phi.rem_euclid(TAU);
            // rem_euclid can round up to exactly TAU
            if p >= TAU {
                0.0
            } else {
                p
            }
        };
        Self { theta, phi }
    }

    /// Point for the root `z = num / den`, so that infinite roots
    /// (`den = 0`) land on the V pole.
    fn from_ratio(num: C64, den: C64) -> Self {
        let theta = 2.0 * num.norm().atan2(den.norm());
        Self::new(theta, num.arg() - den.arg())
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Jones amplitudes `(cos θ/2, e^{iφ} sin θ/2)` of the photon mode.
    pub fn mode_amplitudes(&self) -> [C64; 2] {
        let half = 0.5 * self.theta;
        [
            C64::new(half.cos(), 0.0),
            C64::from_polar(half.sin(), self.phi),
        ]
    }

    fn cmp_key(&self, other: &Self) -> Ordering {
        self.theta
            .total_cmp(&other.theta)
            .then(self.phi.total_cmp(&other.phi))
    }
}

/// Unordered pair of photon modes, stored sorted by `(θ, φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajoranaPair {
    p1: MajoranaPoint,
    p2: MajoranaPoint,
}

impl MajoranaPair {
    pub fn new(a: MajoranaPoint, b: MajoranaPoint) -> Self {
        if a.cmp_key(&b) == Ordering::Greater {
            Self { p1: b, p2: a }
        } else {
            Self { p1: a, p2: b }
        }
    }

    pub fn first(&self) -> MajoranaPoint {
        self.p1
    }

    pub fn second(&self) -> MajoranaPoint {
        self.p2
    }

    pub fn points(&self) -> [MajoranaPoint; 2] {
        [self.p1, self.p2]
    }
}

/// Factors a state into two photon modes from the roots of
/// `c1 z² − √2 c2 z + c3 = 0`, with `θ = 2·arctan|z|` and `φ = arg z`.
pub fn majorana_decompose(s: &PureQutrit) -> MajoranaPair {
    let a = s.c1();
    let b = -SQRT_2 * s.c2();
    let c = s.c3();
    if a.norm() < ROOT_DEGENERACY {
        let v_pole = MajoranaPoint::new(PI, 0.0);
        if b.norm() < ROOT_DEGENERACY {
            return MajoranaPair::new(v_pole, v_pole);
        }
        // linear equation b z + c = 0, the other root sits at infinity
        return MajoranaPair::new(MajoranaPoint::from_ratio(-c, b), v_pole);
    }
    let mut sq = (b * b - 4.0 * a * c).sqrt();
    if (b.conj() * sq).re < 0.0 {
        sq = -sq;
    }
    let q = -0.5 * (b + sq);
    if q.norm() < ROOT_DEGENERACY {
        // b and c both vanish: a double root at z = 0
        let h_pole = MajoranaPoint::new(0.0, 0.0);
        return MajoranaPair::new(h_pole, h_pole);
    }
    MajoranaPair::new(
        MajoranaPoint::from_ratio(q, a),
        MajoranaPoint::from_ratio(c, q),
    )
}

/// Expands the symmetrized product of the two photon modes.
pub fn majorana_compose(pair: &MajoranaPair) -> PureQutrit {
    let [h1, v1] = pair.p1.mode_amplitudes();
    let [h2, v2] = pair.p2.mode_amplitudes();
    normalize([SQRT_2 * h1 * h2, h1 * v2 + v1 * h2, SQRT_2 * v1 * v2])
        .expect("a product of two unit photon modes never vanishes")
}

/// The twelve states of the four mutually unbiased bases used by the qutrit
/// key-distribution protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProtocolStateId {
    Alpha,
    Beta,
    Gamma,
    Alpha1,
    Beta1,
    Gamma1,
    Alpha2,
    Beta2,
    Gamma2,
    Alpha3,
    Beta3,
    Gamma3,
}

impl ProtocolStateId {
    pub const ALL: [ProtocolStateId; 12] = [
        Self::Alpha,
        Self::Beta,
        Self::Gamma,
        Self::Alpha1,
        Self::Beta1,
        Self::Gamma1,
        Self::Alpha2,
        Self::Beta2,
        Self::Gamma2,
        Self::Alpha3,
        Self::Beta3,
        Self::Gamma3,
    ];

    fn index(self) -> usize {
        self as usize
    }

    /// Basis number, 1 to 4.
    pub fn basis(self) -> u8 {
        (self.index() / 3) as u8 + 1
    }

    /// ASCII name with apostrophe primes, e.g. `beta''`.
    pub fn name(self) -> String {
        let letter = ["alpha", "beta", "gamma"][self.index() % 3];
        format!("{letter}{}", "'".repeat(self.index() / 3))
    }

    /// Greek symbol with typographic primes, e.g. `β″`.
    pub fn symbol(self) -> String {
        let letter = ["α", "β", "γ"][self.index() % 3];
        let prime = ["", "′", "″", "‴"][self.index() / 3];
        format!("{letter}{prime}")
    }

    /// Magnitudes and phases (degrees) of the defining table row.
    pub fn table_row(self) -> ([f64; 3], [f64; 3]) {
        let e = 1.0 / 3f64.sqrt();
        let eq = [e, e, e];
        match self {
            Self::Alpha => ([1.0, 0.0, 0.0], [0.0, 0.0, 0.0]),
            Self::Beta => ([0.0, 1.0, 0.0], [0.0, 0.0, 0.0]),
            Self::Gamma => ([0.0, 0.0, 1.0], [0.0, 0.0, 0.0]),
            Self::Alpha1 => (eq, [0.0, 0.0, 0.0]),
            Self::Beta1 => (eq, [0.0, 120.0, -120.0]),
            Self::Gamma1 => (eq, [0.0, -120.0, 120.0]),
            Self::Alpha2 => (eq, [120.0, 0.0, 0.0]),
            Self::Beta2 => (eq, [0.0, 120.0, 0.0]),
            Self::Gamma2 => (eq, [0.0, 0.0, 120.0]),
            Self::Alpha3 => (eq, [-120.0, 0.0, 0.0]),
            Self::Beta3 => (eq, [0.0, -120.0, 0.0]),
            Self::Gamma3 => (eq, [0.0, 0.0, -120.0]),
        }
    }
}

impl fmt::Display for ProtocolStateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for ProtocolStateId {
    type Err = Error;

    /// Accepts `alpha`, `beta''`, `γ‴`, `beta2` style names.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_lowercase();
        let (letter, rest) = if let Some(r) = t.strip_prefix("alpha") {
            (0, r)
        } else if let Some(r) = t.strip_prefix("beta") {
            (1, r)
        } else if let Some(r) = t.strip_prefix("gamma") {
            (2, r)
        } else if let Some(r) = t.strip_prefix('α') {
            (0, r)
        } else if let Some(r) = t.strip_prefix('β') {
            (1, r)
        } else if let Some(r) = t.strip_prefix('γ') {
            (2, r)
        } else {
            return Err(Error::InvalidInput(format!("unknown state '{s}'")));
        };
        let primes = match rest {
            "" => Some(0),
            "'" | "′" | "1" => Some(1),
            "''" | "″" | "′′" | "2" => Some(2),
            "'''" | "‴" | "′′′" | "3" => Some(3),
            _ => None,
        };
        match primes {
            Some(p) => Ok(Self::ALL[p * 3 + letter]),
            None => Err(Error::InvalidInput(format!("unknown state '{s}'"))),
        }
    }
}

/// The table state for `id`, in canonical global phase.
pub fn protocol_state(id: ProtocolStateId) -> PureQutrit {
    let (mags, phases_deg) = id.table_row();
    PureQutrit::from_polar(mags, phases_deg.map(f64::to_radians))
        .expect("table rows are nonzero")
}

/// One overlap that misses its expected value.
#[derive(Debug, Clone, PartialEq)]
pub struct MubViolation {
    pub a: ProtocolStateId,
    pub b: ProtocolStateId,
    pub overlap: f64,
    pub expected: f64,
}

/// All pairwise `|⟨i|j⟩|²` among the protocol states, checked against the
/// mutually-unbiased structure.
#[derive(Debug, Clone)]
pub struct MubReport {
    pub ids: Vec<ProtocolStateId>,
    /// `overlaps[i][j] = |⟨ids[i]|ids[j]⟩|²`.
    pub overlaps: Vec<Vec<f64>>,
    pub violations: Vec<MubViolation>,
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl MubReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Number of distinct unordered pairs checked.
    pub fn pair_count(&self) -> usize {
        let n = self.ids.len();
        n * (n - 1) / 2
    }

    /// Checks arbitrary labelled states: identical labels must overlap to 1,
    /// distinct same-basis labels to 0, and cross-basis labels to 1/3.
    pub fn compute(states: &[(ProtocolStateId, PureQutrit)], tolerance: f64) -> Self {
        let n = states.len();
        let mut overlaps = vec![vec![0.0; n]; n];
        let mut violations = Vec::new();
        let mut max_deviation: f64 = 0.0;
        for (i, (ida, sa)) in states.iter().enumerate() {
            for (j, (idb, sb)) in states.iter().enumerate() {
                let ov = inner_product(sa, sb).norm_sqr();
                overlaps[i][j] = ov;
                let expected = if ida == idb {
                    1.0
                } else if ida.basis() == idb.basis() {
                    0.0
                } else {
                    1.0 / 3.0
                };
                let dev = (ov - expected).abs();
                max_deviation = max_deviation.max(dev);
                if j >= i && dev > tolerance {
                    violations.push(MubViolation {
                        a: *ida,
                        b: *idb,
                        overlap: ov,
                        expected,
                    });
                }
            }
        }
        Self {
            ids: states.iter().map(|(id, _)| *id).collect(),
            overlaps,
            violations,
            max_deviation,
            tolerance,
        }
    }
}

/// Checks the twelve protocol states at tolerance 1e-12.
pub fn verify_mub() -> MubReport {
    let states: Vec<_> = ProtocolStateId::ALL
        .iter()
        .map(|&id| (id, protocol_state(id)))
        .collect();
    MubReport::compute(&states, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;
    use std::f64::consts::FRAC_PI_4;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn approx_state(a: &PureQutrit, b: [C64; 3], tol: f64) {
        for (x, y) in a.amplitudes().iter().zip(b.iter()) {
            assert!((x - y).norm() < tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn normalize_scales_and_fixes_phase() {
        let s = normalize([c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        approx_state(&s, [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], 1e-15);
        let s = normalize([c(0.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        approx_state(&s, [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)], 1e-15);
    }

    #[test]
    fn normalize_beta1_row() {
        let w = C64::from_polar(1.0, 2.0 * PI / 3.0);
        let s = normalize([c(1.0, 0.0), w, w.conj()]).unwrap();
        let k = 1.0 / 3f64.sqrt();
        approx_state(&s, [c(k, 0.0), w * k, w.conj() * k], 1e-15);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_rejects_zero() {
        assert!(matches!(
            normalize([c(0.0, 0.0); 3]),
            Err(Error::ZeroState)
        ));
    }

    #[test]
    fn table_states() {
        let k = 1.0 / 3f64.sqrt();
        approx_state(
            &protocol_state(ProtocolStateId::Alpha),
            [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            1e-15,
        );
        let w = C64::from_polar(k, 120f64.to_radians());
        approx_state(
            &protocol_state(ProtocolStateId::Beta2),
            [c(k, 0.0), w, c(k, 0.0)],
            1e-15,
        );
        approx_state(
            &protocol_state(ProtocolStateId::Gamma3),
            [c(k, 0.0), c(k, 0.0), w.conj()],
            1e-15,
        );
    }

    #[test]
    fn names_round_trip() {
        for id in ProtocolStateId::ALL {
            assert_eq!(id.name().parse::<ProtocolStateId>().unwrap(), id);
            assert_eq!(id.symbol().parse::<ProtocolStateId>().unwrap(), id);
        }
        assert_eq!(
            "beta2".parse::<ProtocolStateId>().unwrap(),
            ProtocolStateId::Beta2
        );
        assert!("delta".parse::<ProtocolStateId>().is_err());
        assert!("alpha''''".parse::<ProtocolStateId>().is_err());
        let per_basis: Vec<_> = (1..=4)
            .map(|b| ProtocolStateId::ALL.iter().filter(|i| i.basis() == b).count())
            .collect();
        assert_eq!(per_basis, vec![3, 3, 3, 3]);
    }

    #[test]
    fn inner_products() {
        use ProtocolStateId::*;
        let ip = |a, b| inner_product(&protocol_state(a), &protocol_state(b));
        assert!(ip(Alpha1, Beta1).norm() < 1e-15);
        assert!((ip(Alpha, Alpha) - 1.0).norm() < 1e-15);
        assert!((ip(Alpha1, Alpha2).norm_sqr() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn fidelity_basics() {
        let b2 = protocol_state(ProtocolStateId::Beta2);
        assert!((fidelity(&b2.projector(), &b2) - 1.0).abs() < 1e-15);
        let mixed = DensityMatrix3::maximally_mixed();
        for id in ProtocolStateId::ALL {
            assert!((fidelity(&mixed, &protocol_state(id)) - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn density_validation() {
        let mut m = Matrix3::<C64>::identity() / C64::from(3.0);
        assert!(DensityMatrix3::new(m).is_ok());
        m[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(DensityMatrix3::new(m), Err(Error::Shape(_))));
        let m2 = Matrix3::<C64>::identity() / C64::from(2.0);
        assert!(matches!(DensityMatrix3::new(m2), Err(Error::Shape(_))));
        let neg = Matrix3::from_diagonal(&Vector3::new(c(1.2, 0.0), c(-0.2, 0.0), c(0.0, 0.0)));
        assert!(DensityMatrix3::new(neg).is_ok());
        assert!(DensityMatrix3::physical(neg).is_err());
        assert!(!DensityMatrix3::new(neg).unwrap().is_positive());
        let unflagged = DensityMatrix3::new(Matrix3::identity() / C64::from(3.0)).unwrap();
        assert!(!unflagged.is_physical() && unflagged.is_positive());
        assert!(matches!(
            DensityMatrix3::from_unnormalized(Matrix3::zeros()),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn eigen_of_simple_matrices() {
        let e = DensityMatrix3::maximally_mixed().eigen();
        for l in e.eigenvalues {
            assert!((l - 1.0 / 3.0).abs() < 1e-14);
        }
        let e = protocol_state(ProtocolStateId::Alpha).projector().eigen();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!(e.eigenvalues[1].abs() < 1e-14 && e.eigenvalues[2].abs() < 1e-14);
        let x = e.eigenvectors[0];
        assert!((x[0] - 1.0).norm() < 1e-14 && x[1].norm() < 1e-14 && x[2].norm() < 1e-14);
    }

    #[test]
    fn eigendecompose_rejects_non_hermitian() {
        let mut m = Matrix3::<C64>::identity() / C64::from(3.0);
        m[(2, 0)] = c(0.0, 0.3);
        assert!(matches!(eigendecompose(&m), Err(Error::Shape(_))));
    }

    #[test]
    fn eigenvector_phase_convention() {
        let b2 = protocol_state(ProtocolStateId::Beta2);
        let rho = DensityMatrix3::new(
            b2.projector().matrix() * C64::from(0.8)
                + Matrix3::identity() * C64::from(0.2 / 3.0),
        )
        .unwrap();
        let e = rho.eigen();
        for v in e.eigenvectors {
            let max = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let pivot = v.iter().find(|c| c.norm() >= max - 1e-12).unwrap();
            assert!(pivot.im == 0.0 && pivot.re > 0.0);
        }
    }

    #[test]
    fn majorana_special_states() {
        let beta = PureQutrit::new(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let p = majorana_decompose(&beta);
        assert_eq!(p.first(), MajoranaPoint::new(0.0, 0.0));
        assert_eq!(p.second(), MajoranaPoint::new(PI, 0.0));

        let alpha = protocol_state(ProtocolStateId::Alpha);
        let p = majorana_decompose(&alpha);
        assert_eq!(p.first().theta(), 0.0);
        assert_eq!(p.second().theta(), 0.0);

        let gamma = protocol_state(ProtocolStateId::Gamma);
        let p = majorana_decompose(&gamma);
        assert_eq!(p.first(), MajoranaPoint::new(PI, 0.0));
        assert_eq!(p.second(), MajoranaPoint::new(PI, 0.0));
    }

    #[test]
    fn majorana_equal_superposition() {
        // z² − √2 z + 1 = 0 has roots e^{±iπ/4}
        let p = majorana_decompose(&protocol_state(ProtocolStateId::Alpha1));
        assert!((p.first().theta() - FRAC_PI_2).abs() < 1e-12);
        assert!((p.first().phi() - FRAC_PI_4).abs() < 1e-12);
        assert!((p.second().theta() - FRAC_PI_2).abs() < 1e-12);
        assert!((p.second().phi() - 7.0 * FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn majorana_compose_poles() {
        let h = MajoranaPoint::new(0.0, 1.0);
        let v = MajoranaPoint::new(PI, 2.0);
        approx_state(
            &majorana_compose(&MajoranaPair::new(h, h)),
            [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            1e-15,
        );
        approx_state(
            &majorana_compose(&MajoranaPair::new(h, v)),
            [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            1e-15,
        );
    }

    #[test]
    fn majorana_round_trip_table_states() {
        for id in ProtocolStateId::ALL {
            let s = protocol_state(id);
            let back = majorana_compose(&majorana_decompose(&s));
            let f = inner_product(&s, &back).norm_sqr();
            assert!(f > 1.0 - 1e-12, "{id}: {f}");
        }
    }

    #[test]
    fn majorana_c1_zero_linear_branch() {
        let s = PureQutrit::new(c(0.0, 0.0), c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let pair = majorana_decompose(&s);
        assert_eq!(pair.second().theta(), PI);
        let back = majorana_compose(&pair);
        assert!(inner_product(&s, &back).norm_sqr() > 1.0 - 1e-12);
    }

    #[test]
    fn point_ranges() {
        let p = MajoranaPoint::new(1.0, -0.5);
        assert!(p.phi() >= 0.0 && p.phi() < TAU);
        let p = MajoranaPoint::new(0.0, 3.0);
        assert_eq!(p.phi(), 0.0);
        let p = MajoranaPoint::new(1.0, TAU);
        assert_eq!(p.phi(), 0.0);
    }

    #[test]
    fn mub_pairs() {
        use ProtocolStateId::*;
        let r = verify_mub();
        assert!(r.passed(), "{:?}", r.violations);
        assert_eq!(r.pair_count(), 66);
        let idx = |id| ProtocolStateId::ALL.iter().position(|&x| x == id).unwrap();
        assert!(r.overlaps[idx(Alpha1)][idx(Gamma1)] < 1e-15);
        assert!((r.overlaps[idx(Beta)][idx(Beta2)] - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.overlaps[idx(Alpha2)][idx(Beta3)] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mub_reports_violations() {
        use ProtocolStateId::*;
        let mut states: Vec<_> = ProtocolStateId::ALL
            .iter()
            .map(|&id| (id, protocol_state(id)))
            .collect();
        states[4].1 = protocol_state(Alpha1);
        let r = MubReport::compute(&states, 1e-12);
        assert!(!r.passed());
        assert!(r
            .violations
            .iter()
            .any(|v| v.a == Alpha1 && v.b == Beta1 && (v.overlap - 1.0).abs() < 1e-12));
    }

    #[test]
    fn derived_phases() {
        let b1 = protocol_state(ProtocolStateId::Beta1);
        assert!((b1.phi12() - 120f64.to_radians()).abs() < 1e-12);
        assert!((b1.phi13() + 120f64.to_radians()).abs() < 1e-12);
    }
}
