//! Chebyshev polynomials of the first kind, the band-mapped polynomial
//! `g_M(λ) = T_M(2λ/(β−α) − (β+α)/(β−α))`, and the closed-form worst-case rates
//! of the three band-based designs.

use crate::error::{param_err, Result};
use crate::spectrum::SpectralBand;

/// `T_M(χ)` via the three-term recursion `T_M = 2χ T_{M−1} − T_{M−2}`.
///
/// Valid for any real `χ`; on `[−1, 1]` it equals `cos(M arccos χ)`.
pub fn cheby_t(m: usize, chi: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, chi);
    if m == 0 {
        return prev;
    }
    for _ in 1..m {
        let next = 2.0 * chi * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Affine map of `[α, β]` onto `[−1, 1]`.
pub fn band_to_unit(b: SpectralBand, lambda: f64) -> Result<f64> {
    if b.is_degenerate() {
        return param_err("affine map to [-1, 1] needs alpha < beta");
    }
    Ok((2.0 * lambda - (b.beta() + b.alpha())) / b.width())
}

/// `g_M(λ)`, defined for every real `λ` through the recursion.
pub fn cheby_g(b: SpectralBand, m: usize, lambda: f64) -> Result<f64> {
    Ok(cheby_t(m, band_to_unit(b, lambda)?))
}

/// Closed form of `g_M(0)`:
/// `½(−1)^M (ρ^M + ρ^{−M})` with `ρ = (√(β/α) − 1)/(√(β/α) + 1)`.
///
/// For large `M` or wide bands the value exceeds 1e15 and eventually
/// overflows to infinity; [`closed_rate_chebyshev`] then reports 0.
pub fn g_at_zero_closed(b: SpectralBand, m: usize) -> Result<f64> {
    if b.is_degenerate() {
        return param_err("g_M(0) needs alpha < beta");
    }
    let q = (b.beta() / b.alpha()).sqrt();
    let rho = (q - 1.0) / (q + 1.0);
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let m = i32::try_from(m).unwrap_or(i32::MAX);
    Ok(sign * 0.5 * (rho.powi(m) + rho.powi(-m)))
}

/// `g_M(0)` by the recursion `g_M(0) = −2(β+α)/(β−α)·g_{M−1}(0) − g_{M−2}(0)`.
pub fn g_at_zero_recursive(b: SpectralBand, m: usize) -> Result<f64> {
    if b.is_degenerate() {
        return param_err("g_M(0) needs alpha < beta");
    }
    let c = -(b.beta() + b.alpha()) / b.width();
    Ok(cheby_t(m, c))
}

/// Worst-case rate of the Lagrange design, `M! / ∏_{k=1}^{M} (k + (M+1)α/(β−α))`.
///
/// Evaluated as a product of ratios so that large `M` does not overflow. A
/// degenerate band returns 0: every root sits on the only admissible eigenvalue.
pub fn closed_rate_lagrange(b: SpectralBand, m: usize) -> Result<f64> {
    if m == 0 {
        return param_err("period M must be at least 1");
    }
    if b.is_degenerate() {
        return Ok(0.0);
    }
    let shift = (m as f64 + 1.0) * b.alpha() / b.width();
    Ok((1..=m).map(|k| k as f64 / (k as f64 + shift)).product())
}

/// Optimal worst-case rate `1/|g_M(0)|`, attained by the Chebyshev design.
pub fn closed_rate_chebyshev(b: SpectralBand, m: usize) -> Result<f64> {
    if m == 0 {
        return param_err("period M must be at least 1");
    }
    Ok(1.0 / g_at_zero_closed(b, m)?.abs())
}

/// Worst-case rate of the constant gain applied for `M` steps, `((β−α)/(β+α))^M`.
pub fn closed_rate_constant(b: SpectralBand, m: usize) -> Result<f64> {
    if m == 0 {
        return param_err("period M must be at least 1");
    }
    Ok((b.width() / (b.beta() + b.alpha())).powi(m as i32))
}

/// Alternation points `λ_i = (β−α)/2·cos(iπ/M) + (β+α)/2`, `i = 0..M`, at which the
/// optimal filter reaches `±γ*_M` with alternating sign.
pub fn alternation_points(b: SpectralBand, m: usize) -> Vec<f64> {
    (0..=m).map(|i| 0.5 * b.width() * (i as f64 * std::f64::consts::PI / m as f64).cos() + b.center()).collect()
}
