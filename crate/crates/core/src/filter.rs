//! Periodic control sequences and the graph spectrum filters they induce.
//!
//! A sequence of gains `ε(0..M)` repeated periodically defines the filter
//! `h(λ, T) = ∏_{k<T} (1 − ε(k mod M) λ)`. Filters are always evaluated in this
//! product form; expanding to monomial coefficients loses accuracy for large
//! `M`. The roots of one period are `r_k = 1/ε(k)`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result};
use crate::format;
use crate::spectrum::SpectralBand;

/// Provenance of a control sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FiniteTime,
    Constant,
    Lagrange,
    Chebyshev,
    UniformUnknown,
    Custom,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::FiniteTime => "finite_time",
            Method::Constant => "constant",
            Method::Lagrange => "lagrange",
            Method::Chebyshev => "chebyshev",
            Method::UniformUnknown => "uniform_unknown",
            Method::Custom => "custom",
        }
    }

    /// Short column label used in the tables (LP, WO, XS).
    pub fn label(&self) -> &'static str {
        match self {
            Method::Lagrange => "LP",
            Method::Chebyshev => "WO",
            Method::Constant => "XS",
            Method::FiniteTime => "FT",
            Method::UniformUnknown => "UU",
            Method::Custom => "CU",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "finite_time" | "ft" => Method::FiniteTime,
            "constant" | "xs" => Method::Constant,
            "lagrange" | "lp" => Method::Lagrange,
            "chebyshev" | "wo" => Method::Chebyshev,
            "uniform_unknown" | "uu" => Method::UniformUnknown,
            "custom" => Method::Custom,
            other => return param_err(format!("unknown method '{other}'")),
        })
    }
}

/// An `M`-periodic sequence of strictly positive control gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SequenceJson", into = "SequenceJson")]
pub struct ControlSequence {
    gains: Vec<f64>,
    method: Method,
    band: Option<SpectralBand>,
}

impl ControlSequence {
    pub fn new(gains: Vec<f64>, method: Method, band: Option<SpectralBand>) -> Result<Self> {
        if gains.is_empty() {
            return param_err("control sequence needs at least one gain");
        }
        if let Some((k, g)) = gains.iter().enumerate().find(|(_, g)| !(g.is_finite() && **g > 0.0)) {
            return param_err(format!("gain {k} = {g} is not strictly positive"));
        }
        Ok(Self { gains, method, band })
    }

    /// Builds the sequence whose filter has the given roots, `ε(k) = 1/r_{k+1}`.
    pub fn from_roots(roots: &FilterRoots, method: Method, band: Option<SpectralBand>) -> Result<Self> {
        Self::new(roots.roots.iter().map(|r| 1.0 / r).collect(), method, band)
    }

    pub fn period(&self) -> usize {
        self.gains.len()
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    /// Gain applied at time `k` (periodic extension).
    pub fn gain_at(&self, k: usize) -> f64 {
        self.gains[k % self.gains.len()]
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn band(&self) -> Option<SpectralBand> {
        self.band
    }

    pub fn roots(&self) -> FilterRoots {
        FilterRoots { roots: self.gains.iter().map(|g| 1.0 / g).collect() }
    }

    /// Concatenates `times` copies of one period into a longer period.
    pub fn repeated(&self, times: usize) -> Result<Self> {
        if times == 0 {
            return param_err("repetition count must be positive");
        }
        let gains = self.gains.iter().copied().cycle().take(self.gains.len() * times).collect();
        Self::new(gains, self.method, self.band)
    }

    /// Reorders the gains within the period; `order` must be a permutation.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.period()];
        for &i in order {
            if i >= seen.len() || std::mem::replace(&mut seen[i], true) {
                return param_err("order is not a permutation of the period");
            }
        }
        if order.len() != self.period() {
            return param_err("order is not a permutation of the period");
        }
        Self::new(order.iter().map(|&i| self.gains[i]).collect(), self.method, self.band)
    }

    /// `h(λ, T)` in product form.
    pub fn eval(&self, lambda: f64, steps: usize) -> f64 {
        eval_filter(self, lambda, steps)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Wire format: `{"period": M, "gains": [...], "method": "<tag>", "band": [a, b] | null}`.
#[derive(Serialize, Deserialize)]
struct SequenceJson {
    period: usize,
    gains: Vec<f64>,
    method: Method,
    #[serde(default)]
    band: Option<SpectralBand>,
}

impl TryFrom<SequenceJson> for ControlSequence {
    type Error = Error;

    fn try_from(j: SequenceJson) -> Result<Self> {
        if j.period != j.gains.len() {
            return param_err(format!("period {} does not match {} gains", j.period, j.gains.len()));
        }
        Self::new(j.gains, j.method, j.band)
    }
}

impl From<ControlSequence> for SequenceJson {
    fn from(c: ControlSequence) -> Self {
        SequenceJson { period: c.gains.len(), gains: c.gains, method: c.method, band: c.band }
    }
}

/// Roots `r_k = 1/ε(k−1)` of one period of the filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRoots {
    roots: Vec<f64>,
}

impl FilterRoots {
    pub fn new(roots: Vec<f64>) -> Result<Self> {
        if roots.is_empty() || roots.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return param_err("filter roots must be a non-empty list of positive numbers");
        }
        Ok(Self { roots })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.roots
    }

    /// Ascending copy of the roots.
    pub fn sorted(&self) -> Vec<f64> {
        let mut r = self.roots.clone();
        r.sort_by(f64::total_cmp);
        r
    }
}

/// Evaluates `h(λ, T) = ∏_{k=0}^{T−1} (1 − ε(k mod M) λ)` term by term.
pub fn eval_filter(c: &ControlSequence, lambda: f64, steps: usize) -> f64 {
    (0..steps).map(|k| 1.0 - c.gain_at(k) * lambda).product()
}

/// Finite-time design: one gain `1/λ` per distinct nonzero eigenvalue, in the
/// given order.
pub fn design_finite_time(distinct: &[f64]) -> Result<ControlSequence> {
    if distinct.is_empty() {
        return param_err("finite-time design needs at least one eigenvalue");
    }
    if let Some(v) = distinct.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return param_err(format!("eigenvalue {v} is not positive"));
    }
    ControlSequence::new(distinct.iter().map(|v| 1.0 / v).collect(), Method::FiniteTime, None)
}

/// Best constant gain `2/(α + β)`.
pub fn design_constant(b: SpectralBand) -> ControlSequence {
    ControlSequence::new(vec![2.0 / (b.alpha() + b.beta())], Method::Constant, Some(b))
        .expect("band bounds are positive")
}

/// Roots on the uniform interior grid `α + (β−α)(k+1)/(M+1)`, ascending.
pub fn lagrange_roots(b: SpectralBand, period: usize) -> Result<FilterRoots> {
    check_period(period)?;
    let step = b.width() / (period as f64 + 1.0);
    FilterRoots::new((0..period).map(|k| b.alpha() + step * (k as f64 + 1.0)).collect())
}

pub fn design_lagrange(b: SpectralBand, period: usize) -> Result<ControlSequence> {
    ControlSequence::from_roots(&lagrange_roots(b, period)?, Method::Lagrange, Some(b))
}

/// Chebyshev nodes mapped to `[α, β]`, `r_i = (β−α)/2·cos((2i−1)π/(2M)) + (β+α)/2`
/// for `i = 1..M` (descending).
pub fn chebyshev_roots(b: SpectralBand, period: usize) -> Result<FilterRoots> {
    check_period(period)?;
    if b.is_degenerate() {
        return param_err("Chebyshev design needs alpha < beta");
    }
    let half = 0.5 * b.width();
    let m = period as f64;
    FilterRoots::new(
        (1..=period).map(|i| half * ((2.0 * i as f64 - 1.0) * PI / (2.0 * m)).cos() + b.center()).collect(),
    )
}

pub fn design_chebyshev(b: SpectralBand, period: usize) -> Result<ControlSequence> {
    ControlSequence::from_roots(&chebyshev_roots(b, period)?, Method::Chebyshev, Some(b))
}

/// Design for graphs whose spectrum is only known to lie in `(0, β̄]`:
/// `ε(k) = (M+1)/(β̄ (k+1))` for `k = 0..M−1`.
pub fn design_uniform_unknown(beta_bar: f64, period: usize) -> Result<ControlSequence> {
    check_period(period)?;
    if !(beta_bar.is_finite() && beta_bar > 0.0) {
        return param_err(format!("beta_bar must be positive, got {beta_bar}"));
    }
    let m1 = period as f64 + 1.0;
    ControlSequence::new(
        (0..period).map(|k| m1 / (beta_bar * (k as f64 + 1.0))).collect(),
        Method::UniformUnknown,
        None,
    )
}

/// Designs an `M`-periodic sequence with one of the band-based methods. The
/// constant gain is repeated `M` times so that every method has period `M`.
pub fn design_periodic(method: Method, b: SpectralBand, period: usize) -> Result<ControlSequence> {
    match method {
        Method::Lagrange => design_lagrange(b, period),
        Method::Chebyshev => design_chebyshev(b, period),
        Method::Constant => {
            check_period(period)?;
            design_constant(b).repeated(period)
        }
        Method::UniformUnknown => design_uniform_unknown(b.beta(), period),
        Method::FiniteTime | Method::Custom => param_err(format!("method {method} is not designed from a band")),
    }
}

fn check_period(period: usize) -> Result<()> {
    if period == 0 {
        param_err("period M must be at least 1")
    } else {
        Ok(())
    }
}

/// Uniform grid of `samples` points on `[0, 1.05 β]`.
pub fn response_grid(beta: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 {
        return param_err("response needs at least 2 samples");
    }
    let hi = 1.05 * beta;
    let last = (samples - 1) as f64;
    Ok((0..samples).map(|i| hi * i as f64 / last).collect())
}

/// Writes the one-period responses `h(λ, M)` of several sequences as CSV with
/// header `lambda,h` (single sequence) or `lambda,h_<label>...`.
pub fn write_response_csv<W: Write>(out: W, grid: &[f64], columns: &[(String, &ControlSequence)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["lambda".to_string()];
    if columns.len() == 1 {
        header.push("h".into());
    } else {
        header.extend(columns.iter().map(|(name, _)| format!("h_{name}")));
    }
    w.write_record(&header)?;
    for &lambda in grid {
        let mut row = vec![format::sig(lambda, 6)];
        row.extend(columns.iter().map(|(_, c)| format::sig(c.eval(lambda, c.period()), 6)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
