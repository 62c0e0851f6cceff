//! Closed-form background geometry generated by the Liouville solution.
//!
//! With `L(ξ) = ln[A / (G·T²(h, ξ+ξ₁))]` the metric exponents are
//! `γ = (A/4)L`, `β = (1 + 2/G)γ` and `α = (A/2)(3/2 + 2/G)L`, so that the
//! coordinate condition `α = 2β + γ` holds identically. All derivatives are
//! analytic.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Metric exponents, their first two ξ-derivatives and the diagonal metric at one ξ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricPoint {
    pub xi: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub d_alpha: f64,
    pub d_beta: f64,
    pub d_gamma: f64,
    pub d2_alpha: f64,
    pub d2_beta: f64,
    pub d2_gamma: f64,
    pub g00: f64,
    pub g11: f64,
    pub g22: f64,
    pub g33: f64,
}

/// Three-branch Liouville kernel: `sinh(hx)/h`, `x` or `sin(hx)/h`.
pub fn liouville_t(h: f64, x: f64) -> f64 {
    liouville_t_derivs(h, x).0
}

/// `(T, T', T'')` with respect to `x`.
pub fn liouville_t_derivs(h: f64, x: f64) -> (f64, f64, f64) {
    if h > 0.0 {
        let hx = h * x;
        (hx.sinh() / h, hx.cosh(), h * hx.sinh())
    } else if h < 0.0 {
        let hx = h * x;
        (hx.sin() / h, hx.cos(), -h * hx.sin())
    } else {
        (x, 1.0, 0.0)
    }
}

/// Coefficients `(c_α, c_β, c_γ)` with `α = c_α L`, `β = c_β L`, `γ = c_γ L`.
pub fn exponent_coefficients(params: &ModelParams) -> (f64, f64, f64) {
    let a = params.a_grav();
    let g = params.g;
    let c_gamma = a / 4.0;
    let c_beta = a / 4.0 * (1.0 + 2.0 / g);
    let c_alpha = a / 2.0 * (1.5 + 2.0 / g);
    (c_alpha, c_beta, c_gamma)
}

/// `L = ln[A/(G T²)]` together with `L'` and `L''`.
fn log_argument(xi: f64, params: &ModelParams) -> Result<(f64, f64, f64)> {
    let x = xi + params.xi1;
    let (t, t1, t2) = liouville_t_derivs(params.h, x);
    if t == 0.0 || !t.is_finite() {
        return Err(Error::SingularPoint { xi });
    }
    // Only T² enters, so the sign of T (negative near 0⁺ for h < 0 with the
    // literal 1/h prefactor) is immaterial.
    let arg = params.a_grav() / (params.g * t * t);
    if !(arg > 0.0) || !arg.is_finite() {
        return Err(Error::NegativeLogArgument { xi, value: arg });
    }
    let l = arg.ln();
    let l1 = -2.0 * t1 / t;
    let l2 = -2.0 * (t * t2 - t1 * t1) / (t * t);
    Ok((l, l1, l2))
}

pub fn alpha_beta_gamma(xi: f64, params: &ModelParams) -> Result<MetricPoint> {
    let (l, l1, l2) = log_argument(xi, params)?;
    let (ca, cb, cg) = exponent_coefficients(params);
    let alpha = ca * l;
    let beta = cb * l;
    let gamma = cg * l;
    let g22 = -(2.0 * beta).exp();
    let s = params.sin_theta();
    Ok(MetricPoint {
        xi,
        alpha,
        beta,
        gamma,
        d_alpha: ca * l1,
        d_beta: cb * l1,
        d_gamma: cg * l1,
        d2_alpha: ca * l2,
        d2_beta: cb * l2,
        d2_gamma: cg * l2,
        g00: (2.0 * gamma).exp(),
        g11: -(2.0 * alpha).exp(),
        g22,
        g33: g22 * s * s,
    })
}

/// `S(ξ) = C e^{-α(ξ)}`.
pub fn invariant_s(xi: f64, params: &ModelParams) -> Result<f64> {
    let mp = alpha_beta_gamma(xi, params)?;
    Ok(params.c * (-mp.alpha).exp())
}

/// Closed form of `dS/dξ` as a function of `S`, obtained from the (1,1)
/// Einstein equation:
/// `± (4+3G) S/√(3G²+8G+4) · (C/S) · √[(S/C)^a − κ(mS − L_N(S))]`.
pub fn ds_dxi_closed(s: f64, params: &ModelParams) -> Result<f64> {
    if s == 0.0 || (s > 0.0) != (params.c > 0.0) {
        return Err(Error::Domain(format!(
            "dS/dxi needs S with the sign of C (S = {s}, C = {})",
            params.c
        )));
    }
    let radicand = ds_radicand(s, params)?;
    if radicand < 0.0 {
        return Err(Error::NegativeRadicand { s, value: radicand });
    }
    let g = params.g;
    Ok(params.sign_ds.value() * (4.0 + 3.0 * g) / params.k3().sqrt() * params.c * radicand.sqrt())
}

/// `(S/C)^a − κ(mS − L_N(S))`.
pub fn ds_radicand(s: f64, params: &ModelParams) -> Result<f64> {
    let ln = params.nonlinearity.value(s)?;
    Ok((s / params.c).powf(params.effective_a()) - params.kappa * (params.m * s - ln))
}

/// ξ-values in `[lo, hi]` where `T(h, ξ+ξ₁) = 0`.
pub fn singular_points(params: &ModelParams, lo: f64, hi: f64) -> Vec<f64> {
    let xi1 = params.xi1;
    if params.h >= 0.0 {
        let xi = -xi1;
        return if xi >= lo && xi <= hi {
            vec![xi]
        } else {
            Vec::new()
        };
    }
    let period = PI / params.h.abs();
    let k_lo = ((lo + xi1) / period).ceil() as i64;
    let k_hi = ((hi + xi1) / period).floor() as i64;
    (k_lo..=k_hi).map(|k| k as f64 * period - xi1).collect()
}

/// Largest singularity-free interval `[ξ_min, ξ_c]` with the configured
/// guard band at both the lower end and any singularity.
pub fn valid_window(params: &ModelParams) -> Result<(f64, f64)> {
    let guard = params.singular_guard;
    let hi = params.xi_c;
    if !singular_points(params, hi - guard, hi + guard).is_empty() {
        return Err(Error::SingularPoint { xi: hi });
    }
    let lo = singular_points(params, 0.0, hi)
        .last()
        .map_or(guard, |&s| (s + guard).max(guard));
    if lo >= hi {
        return Err(Error::Domain(format!("no valid window below xi_c = {hi}")));
    }
    Ok((lo, hi))
}

/// `n` equally spaced points spanning `[lo, hi]` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![hi],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// `ξ_i = ξ_c·i/n` for `i = 1..=n`, minus points within the guard band of a
/// singularity.
pub fn evaluation_grid(params: &ModelParams, n: usize) -> Vec<f64> {
    let guard = params.singular_guard;
    let sing = singular_points(params, -guard, params.xi_c + guard);
    (1..=n)
        .map(|i| params.xi_c * i as f64 / n as f64)
        .filter(|xi| sing.iter().all(|s| (xi - s).abs() > guard))
        .collect()
}
