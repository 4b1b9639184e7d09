//! Maximum-likelihood density matrices from coincidence counts.
//!
//! Counts are modelled as independent Poisson variables with means
//! `λ·weight_k·p_k(ρ) + accidental·weight_k`, where `p_k(ρ) = w_k† ρ w_k`
//! and the intensity `λ` is profiled out. The nine detection operators do
//! not sum to the identity, so the iteration runs on the whitened state
//! `σ ∝ G^{1/2} ρ G^{1/2}` with `G = Σ_k weight_k w_k w_k†`; there the
//! operators form a complete measurement and the diluted fixed point
//!
//! ```text
//! σ ← N[(1−ε)I + εR(σ)] σ [(1−ε)I + εR(σ)],   R(σ) = Σ_k (f_k / q_k) Π̃_k
//! ```
//!
//! is the usual likelihood ascent. A step that would lower the likelihood
//! is retried with half the dilution; accepted steps double it, up to a cap.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{aggregate_counts, invert_rates, protocol_settings, CountRecord, MeasurementSetting};
use crate::experiment::{simulate_counts, Acquisition};
use crate::qutrit::{fidelity, DensityMatrix3, PureQutrit};
use crate::{Error, Result};

/// Eigenvalue floor applied to the starting point so that no direction is
/// frozen at exactly zero.
const INIT_FLOOR: f64 = 1e-13;
const MAX_DILUTION: f64 = 1e4;
const MIN_DILUTION: f64 = 1e-12;
/// Largest allowed excess of the top eigenvalue of R over one at convergence.
const STATIONARITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct MleOptions {
    /// Starting dilution ε.
    pub dilution: f64,
    /// Convergence threshold on the largest entry change of ρ.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Flat accidental coincidence rate per unit acquisition weight.
    pub accidental_rate: f64,
    /// Keep the log-likelihood of every accepted iterate.
    pub record_history: bool,
    pub model: StateModel,
}

/// Set of states the likelihood is maximized over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateModel {
    /// All density matrices.
    #[default]
    Mixed,
    /// Pure states only. The iteration preserves rank, so starting from the
    /// principal component of the linear estimate keeps every iterate pure.
    Pure,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            dilution: 0.5,
            tolerance: 1e-10,
            max_iterations: 10_000,
            accidental_rate: 0.0,
            record_history: false,
            model: StateModel::Mixed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MleResult {
    pub rho: DensityMatrix3,
    pub iterations: usize,
    pub log_likelihood: f64,
    pub converged: bool,
    /// Log-likelihood after each accepted iterate, starting point first.
    /// Empty unless requested.
    pub history: Vec<f64>,
}

pub fn mle_reconstruct(
    counts: &[CountRecord],
    settings: &[MeasurementSetting],
) -> Result<MleResult> {
    mle_reconstruct_with(counts, settings, &MleOptions::default())
}

/// Profiled Poisson log-likelihood (up to the `ln n!` constant) for signal
/// coefficients `c_k ∝ weight_k·p_k`. Returns `(ℓ, λ)`.
fn profile_likelihood(c: &[f64], n: &[f64], acc: &[f64]) -> (f64, f64) {
    let total_n: f64 = n.iter().sum();
    let total_c: f64 = c.iter().sum();
    let lambda = if acc.iter().all(|&a| a == 0.0) {
        total_n / total_c
    } else {
        // dℓ/dλ = Σ n c/(λc + a) − Σ c is decreasing in λ
        let score = |l: f64| {
            n.iter()
                .zip(c)
                .zip(acc)
                .map(|((&nk, &ck), &ak)| if nk > 0.0 { nk * ck / (l * ck + ak) } else { 0.0 })
                .sum::<f64>()
                - total_c
        };
        if score(0.0) <= 0.0 {
            0.0
        } else {
            let (mut lo, mut hi) = (0.0, total_n / total_c);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if score(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    };
    let ll = n
        .iter()
        .zip(c)
        .zip(acc)
        .map(|((&nk, &ck), &ak)| {
            let mu = lambda * ck + ak;
            if nk > 0.0 {
                if mu > 0.0 {
                    nk * mu.ln() - mu
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                -mu
            }
        })
        .sum();
    (ll, lambda)
}

/// Profiled Poisson log-likelihood of `rho` for the given counts.
pub fn log_likelihood(
    counts: &[CountRecord],
    settings: &[MeasurementSetting],
    rho: &DensityMatrix3,
    accidental_rate: f64,
) -> Result<f64> {
    let agg = aggregate_counts(counts, settings)?;
    let n: Vec<f64> = agg.iter().map(|(n, _)| *n).collect();
    let acc: Vec<f64> = agg.iter().map(|(_, w)| accidental_rate * w).collect();
    let c: Vec<f64> = settings
        .iter()
        .zip(&agg)
        .map(|(s, (_, w))| w * s.expected_moment(rho).max(0.0))
        .collect();
    Ok(profile_likelihood(&c, &n, &acc).0)
}

struct Whitened {
    /// `sqrt(weight_k) · G^{-1/2} w_k`
    vecs: Vec<Vector3<C64>>,
    g_sqrt: Matrix3<C64>,
    g_inv_sqrt: Matrix3<C64>,
}

fn hermitian_power(m: &Matrix3<C64>, power: f64) -> Matrix3<C64> {
    let e = nalgebra::SymmetricEigen::new(*m);
    let mut out = Matrix3::zeros();
    for i in 0..3 {
        let v = e.eigenvectors.column(i);
        out += v * v.adjoint() * C64::from(e.eigenvalues[i].powf(power));
    }
    out
}

fn whiten(settings: &[MeasurementSetting], weights: &[f64]) -> Result<Whitened> {
    let raw: Vec<Vector3<C64>> = settings
        .iter()
        .zip(weights)
        .map(|(s, w)| s.detection_vector() * C64::from(w.sqrt()))
        .collect();
    let g = raw.iter().fold(Matrix3::zeros(), |acc, w| acc + w * w.adjoint());
    let ev = nalgebra::SymmetricEigen::new(g).eigenvalues;
    let (min, max) = (ev.min(), ev.max());
    if !(min > 1e-12 * max) {
        return Err(Error::InvalidInput(
            "measurement settings are not informationally complete".into(),
        ));
    }
    let g_inv_sqrt = hermitian_power(&g, -0.5);
    Ok(Whitened {
        vecs: raw.iter().map(|w| g_inv_sqrt * w).collect(),
        g_sqrt: hermitian_power(&g, 0.5),
        g_inv_sqrt,
    })
}

fn normalized(m: Matrix3<C64>) -> Matrix3<C64> {
    let h = (m + m.adjoint()) * C64::from(0.5);
    let tr = h.trace().re;
    h / C64::from(tr)
}

/// Positive part of the linear-inversion estimate of accidental-corrected
/// rates, with every eigenvalue raised to at least `INIT_FLOOR`; for the
/// pure model, its principal component.
fn starting_point(
    rates: &[f64],
    settings: &[MeasurementSetting],
    model: StateModel,
) -> Matrix3<C64> {
    let fallback = Matrix3::identity() / C64::from(3.0);
    let Ok(lin) = invert_rates(rates, settings) else {
        return fallback;
    };
    let h = (lin + lin.adjoint()) * C64::from(0.5);
    let e = nalgebra::SymmetricEigen::new(h);
    if model == StateModel::Pure {
        let v = e.eigenvectors.column(e.eigenvalues.imax());
        return normalized(v * v.adjoint());
    }
    let clipped: Vec<f64> = e.eigenvalues.iter().map(|l| l.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return fallback;
    }
    let mut out = Matrix3::zeros();
    for (i, l) in clipped.iter().enumerate() {
        let v = e.eigenvectors.column(i);
        out += v * v.adjoint() * C64::from((l / total).max(INIT_FLOOR));
    }
    normalized(out)
}

/// Maximum-likelihood estimate over physical density matrices.
pub fn mle_reconstruct_with(
    counts: &[CountRecord],
    settings: &[MeasurementSetting],
    opts: &MleOptions,
) -> Result<MleResult> {
    let agg = aggregate_counts(counts, settings)?;
    let n: Vec<f64> = agg.iter().map(|(n, _)| *n).collect();
    let weights: Vec<f64> = agg.iter().map(|(_, w)| *w).collect();
    if !(n.iter().sum::<f64>() > 0.0) {
        return Err(Error::DegenerateData("all counts are zero".into()));
    }
    if !(opts.dilution > 0.0) || opts.accidental_rate < 0.0 {
        return Err(Error::InvalidInput("invalid MLE options".into()));
    }
    let acc: Vec<f64> = weights.iter().map(|w| opts.accidental_rate * w).collect();
    let wh = whiten(settings, &weights)?;
    let rates: Vec<f64> = n
        .iter()
        .zip(&weights)
        .map(|(n, w)| (n / w - opts.accidental_rate).max(0.0))
        .collect();

    let to_rho = |sigma: &Matrix3<C64>| normalized(wh.g_inv_sqrt * sigma * wh.g_inv_sqrt);
    let probs = |sigma: &Matrix3<C64>| -> Vec<f64> {
        wh.vecs
            .iter()
            .map(|v| (v.adjoint() * sigma * v)[(0, 0)].re.max(0.0))
            .collect()
    };

    let mut rho = starting_point(&rates, settings, opts.model);
    let mut sigma = normalized(wh.g_sqrt * rho * wh.g_sqrt);
    let mut q = probs(&sigma);
    let (mut ll, mut lambda) = profile_likelihood(&q, &n, &acc);
    let mut history = Vec::new();
    if opts.record_history {
        history.push(ll);
    }

    let mut eps = opts.dilution;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        // expected signal share of each count, then frequencies
        let signal: Vec<f64> = n
            .iter()
            .zip(&q)
            .zip(&acc)
            .map(|((&nk, &qk), &ak)| {
                let s = lambda * qk;
                if nk > 0.0 && s > 0.0 {
                    nk * s / (s + ak)
                } else {
                    0.0
                }
            })
            .collect();
        let total_signal: f64 = signal.iter().sum();
        if !(total_signal > 0.0) {
            converged = true;
            break;
        }
        let r = wh
            .vecs
            .iter()
            .zip(signal.iter().zip(&q))
            .filter(|(_, (&t, &qk))| t > 0.0 && qk > 0.0)
            .fold(Matrix3::zeros(), |acc, (v, (&t, &qk))| {
                acc + v * v.adjoint() * C64::from(t / (total_signal * qk))
            });
        let stationarity = match opts.model {
            StateModel::Mixed => {
                nalgebra::SymmetricEigen::new((r + r.adjoint()) * C64::from(0.5))
                    .eigenvalues
                    .max()
                    - 1.0
            }
            StateModel::Pure => ((r - Matrix3::identity()) * sigma).norm(),
        };

        let accepted = loop {
            let m = Matrix3::identity() * C64::from(1.0 - eps) + r * C64::from(eps);
            let next = normalized(m * sigma * m.adjoint());
            let next_q = probs(&next);
            let (next_ll, next_lambda) = profile_likelihood(&next_q, &n, &acc);
            if next_ll >= ll {
                break Some((next, next_q, next_ll, next_lambda));
            }
            eps *= 0.5;
            if eps < MIN_DILUTION {
                break None;
            }
        };
        let Some((next, next_q, next_ll, next_lambda)) = accepted else {
            // no ascent along the iteration direction: numerically stationary
            converged = true;
            break;
        };
        let next_rho = to_rho(&next);
        let change = (next_rho - rho).iter().map(|c| c.norm()).fold(0.0, f64::max);
        sigma = next;
        rho = next_rho;
        q = next_q;
        ll = next_ll;
        lambda = next_lambda;
        if opts.record_history {
            history.push(ll);
        }
        eps = (2.0 * eps).min(MAX_DILUTION);
        if change < opts.tolerance && stationarity <= STATIONARITY_TOL {
            converged = true;
            break;
        }
    }

    Ok(MleResult {
        rho: DensityMatrix3::from_psd_unchecked(rho),
        iterations,
        log_likelihood: ll,
        converged,
        history,
    })
}

/// Monte Carlo distribution of MLE fidelity for a given experiment size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable {
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
    pub mean: f64,
    pub trials: usize,
    pub mean_events: f64,
    pub seed: u64,
    pub non_converged: usize,
    /// All trial fidelities, ascending.
    pub fidelities: Vec<f64>,
}

/// Linear-interpolation quantile of ascending data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Simulates `trials` experiments of `mean_events` total coincidences over
/// the protocol settings with an ideal source, reconstructs each by MLE and
/// reports fidelity quantiles. Trial `i` uses random stream `i` of `seed`.
pub fn fidelity_quantiles(
    target: &PureQutrit,
    mean_events: f64,
    trials: usize,
    seed: u64,
) -> Result<QuantileTable> {
    fidelity_quantiles_with(target, mean_events, trials, seed, &MleOptions::default())
}

/// [`fidelity_quantiles`] with explicit reconstruction options.
pub fn fidelity_quantiles_with(
    target: &PureQutrit,
    mean_events: f64,
    trials: usize,
    seed: u64,
    opts: &MleOptions,
) -> Result<QuantileTable> {
    if !(mean_events >= 50.0) || trials < 200 {
        return Err(Error::InvalidInput(format!(
            "need mean_events ≥ 50 and trials ≥ 200, got {mean_events} and {trials}"
        )));
    }
    let settings = protocol_settings();
    let truth = target.projector();
    let results: Vec<(f64, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let counts = simulate_counts(
                &truth,
                &settings,
                mean_events,
                0.0,
                Acquisition::Poisson { seed, stream: trial },
            )?;
            let fit = mle_reconstruct_with(&counts, &settings, opts)?;
            Ok((fidelity(&fit.rho, target), fit.converged))
        })
        .collect::<Result<_>>()?;
    let non_converged = results.iter().filter(|(_, c)| !c).count();
    let mut fidelities: Vec<f64> = results.into_iter().map(|(f, _)| f).collect();
    fidelities.sort_by(f64::total_cmp);
    let mean = fidelities.iter().sum::<f64>() / fidelities.len() as f64;
    Ok(QuantileTable {
        q05: quantile(&fidelities, 0.05),
        q50: quantile(&fidelities, 0.5),
        q95: quantile(&fidelities, 0.95),
        mean,
        trials,
        mean_events,
        seed,
        non_converged,
        fidelities,
    })
}
