//! Convergence rates of periodic control sequences.
//!
//! For an `M`-periodic sequence the consensus error contracts by
//! `ρ_M = max_i |h(λ_i, M)|` per period on a known graph. Over an uncertainty
//! band the relevant quantity is the worst case `γ_M = max_{λ∈[α,β]} |h(λ, M)|`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::filter::{eval_filter, ControlSequence, Method};
use crate::spectrum::{group_sorted, LaplacianSpectrum, SpectralBand, DEFAULT_GROUP_TOL};

const PRESCAN_POINTS: usize = 4097;
const GOLDEN_TOL: f64 = 1e-12;

/// Exact (and optionally worst-case) rates of one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub exact_rate: f64,
    #[serde(rename = "argmax_lambda")]
    pub argmax_eigenvalue: f64,
    /// Position of the maximizing eigenvalue in the ascending spectrum.
    #[serde(skip)]
    pub argmax_index: usize,
    pub worst_case_rate: Option<f64>,
    pub per_step_rate: f64,
    pub method: Method,
    #[serde(rename = "M")]
    pub period: usize,
}

/// `ρ_M` over the nonzero eigenvalues of `s`; ties go to the smallest eigenvalue.
///
/// When the sequence carries a band, the report also includes its worst-case
/// rate over that band.
pub fn exact_rate(c: &ControlSequence, s: &LaplacianSpectrum) -> Result<RateReport> {
    let nonzero = s.nonzero(DEFAULT_GROUP_TOL)?;
    let mut report = exact_rate_on(c, nonzero);
    report.argmax_index += 1;
    Ok(report)
}

/// `ρ_M` over an explicit list of nonzero eigenvalues (ascending for the
/// tie-breaking rule to mean "smallest").
pub fn exact_rate_on(c: &ControlSequence, eigenvalues: &[f64]) -> RateReport {
    let m = c.period();
    let mut best = (f64::NEG_INFINITY, f64::NAN, 0);
    for (i, &lambda) in eigenvalues.iter().enumerate() {
        let v = eval_filter(c, lambda, m).abs();
        if v > best.0 {
            best = (v, lambda, i);
        }
    }
    let (rate, lambda, index) = best;
    RateReport {
        exact_rate: rate,
        argmax_eigenvalue: lambda,
        argmax_index: index,
        worst_case_rate: c.band().map(|b| worst_case_rate(c, b)),
        per_step_rate: rate.powf(1.0 / m as f64),
        method: c.method(),
        period: m,
    }
}

/// `γ_M = max_{λ∈[α,β]} |h(λ, M)|`.
///
/// Between consecutive real roots `|h|` has a single interior maximum, so the
/// band is split at the roots that fall inside it and each piece is maximized
/// by golden-section search. A uniform pre-scan adds its best cell as an extra
/// candidate for sequences supplied from outside the designers.
pub fn worst_case_rate(c: &ControlSequence, b: SpectralBand) -> f64 {
    let m = c.period();
    let f = |lambda: f64| eval_filter(c, lambda, m).abs();
    let (lo, hi) = (b.alpha(), b.beta());
    if lo == hi {
        return f(lo);
    }

    let mut breaks = vec![lo];
    breaks.extend(c.roots().sorted().into_iter().filter(|&r| r > lo && r < hi));
    breaks.push(hi);

    let mut best = f(lo).max(f(hi));
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            best = best.max(golden_max(&f, w[0], w[1]));
        }
    }

    let step = (hi - lo) / (PRESCAN_POINTS - 1) as f64;
    let (mut arg, mut top) = (0, f64::NEG_INFINITY);
    for i in 0..PRESCAN_POINTS {
        let v = f(lo + step * i as f64);
        if v > top {
            top = v;
            arg = i;
        }
    }
    let a = lo + step * arg.saturating_sub(1) as f64;
    let z = (lo + step * (arg + 1) as f64).min(hi);
    best.max(top).max(golden_max(&f, a, z))
}

/// Golden-section search for the maximum of a unimodal function on `[a, b]`.
fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > GOLDEN_TOL * b.abs().max(1.0) {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    f1.max(f2).max(f(0.5 * (a + b))).max(f(a)).max(f(b))
}

/// Best achievable asymptotic per-step rate over a band, `(√(β/α)−1)/(√(β/α)+1)`.
pub fn asymptotic_optimal_limit(b: SpectralBand) -> f64 {
    let q = (b.beta() / b.alpha()).sqrt();
    (q - 1.0) / (q + 1.0)
}

/// Outcome of a finite-time consensus check.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteTimeCheck {
    pub reached: bool,
    /// `(λ_i, |h(λ_i, T)|)` for each nonzero eigenvalue with multiplicity.
    pub residuals: Vec<(f64, f64)>,
}

impl FiniteTimeCheck {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

/// Whether `|h(λ_i, T)| ≤ tol` for every `i ≥ 2`.
pub fn check_finite_time(c: &ControlSequence, s: &LaplacianSpectrum, horizon: usize, tol: f64) -> FiniteTimeCheck {
    let residuals: Vec<(f64, f64)> =
        s.eigenvalues()[1..].iter().map(|&l| (l, eval_filter(c, l, horizon).abs())).collect();
    let reached = residuals.iter().all(|r| r.1 <= tol);
    FiniteTimeCheck { reached, residuals }
}

/// Vanishing gain schedules used to illustrate asymptotic consensus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceKind {
    /// `ε(k) = c/(k+2)`, non-summable.
    Harmonic,
    /// `ε(k) = c/(k+2)²`, summable.
    Summable,
}

impl DivergenceKind {
    /// Gain at time `k` for scale `c = 1/λ_N`.
    ///
    /// The offset of 2 keeps `c·λ_N·ε(0) < 1`, so no factor vanishes and the
    /// residuals reflect the asymptotic behaviour rather than finite-time
    /// annihilation of the top eigenvalue.
    pub fn gain(&self, scale: f64, k: usize) -> f64 {
        let d = k as f64 + 2.0;
        match self {
            DivergenceKind::Harmonic => scale / d,
            DivergenceKind::Summable => scale / (d * d),
        }
    }
}

/// Residual series `|h(λ, t)|`, `t = 0..=T`, under a vanishing gain schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceDemo {
    /// Distinct nonzero eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// `series[i][t] = |h(eigenvalues[i], t)|`.
    pub series: Vec<Vec<f64>>,
    /// Pointwise maximum over eigenvalues.
    pub envelope: Vec<f64>,
}

pub fn divergence_demo(kind: DivergenceKind, s: &LaplacianSpectrum, horizon: usize) -> Result<DivergenceDemo> {
    let tol = s.abs_tol(DEFAULT_GROUP_TOL);
    let eigenvalues = group_sorted(s.nonzero(DEFAULT_GROUP_TOL)?, tol);
    let scale = 1.0 / s.lambda_max();
    let series: Vec<Vec<f64>> = eigenvalues
        .iter()
        .map(|&lambda| {
            let mut acc = 1.0_f64;
            let mut out = Vec::with_capacity(horizon + 1);
            out.push(1.0);
            for k in 0..horizon {
                acc *= 1.0 - kind.gain(scale, k) * lambda;
                out.push(acc.abs());
            }
            out
        })
        .collect();
    let envelope = (0..=horizon).map(|t| series.iter().map(|s| s[t]).fold(0.0, f64::max)).collect();
    Ok(DivergenceDemo { eigenvalues, series, envelope })
}
