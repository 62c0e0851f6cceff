//! Spinor sector: the coefficients `B(S)`, `Q(S)`, the phase functions
//! `N₁,₂(S)` for every self-interaction regime, and the amplitudes
//! `U_ρ(S)`, `V_ρ(ξ) = U_ρ e^{-α/2}`.
//!
//! Phase functions are anchored at `S_ref = S(ξ_c)`:
//! `N₁(S_ref) = R₁`, `N₂(S_ref) = R₂`, with `dN₁/dS = +√ε Q` and
//! `dN₂/dS = −√ε Q`.

use std::cell::Cell;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::metric::{alpha_beta_gamma, ds_dxi_closed, invariant_s};
use crate::model::{ModelParams, Nonlinearity};
use crate::numerics::{adaptive_quad, finite_diff_try, incomplete_beta, DiffOrder};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Absolute tolerance of the quadratures behind `N_general` and `N_power`.
pub const PHASE_QUAD_TOL: f64 = 1e-13;

/// The four spinor amplitudes at one point, with their phases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinorAmplitudes {
    /// `U₁..U₄`.
    pub u: [Complex64; 4],
    pub n1: f64,
    pub n2: f64,
    pub at_xi: f64,
    /// `e^{-α/2}`; `V_ρ = v_scale · U_ρ`.
    pub v_scale: f64,
}

impl SpinorAmplitudes {
    pub fn v(&self) -> [Complex64; 4] {
        self.u.map(|u| u * self.v_scale)
    }

    /// `ψ̄ψ = |V₁|² + |V₂|² − |V₃|² − |V₄|²`.
    pub fn psibar_psi(&self) -> f64 {
        let v = self.v();
        v[0].norm_sqr() + v[1].norm_sqr() - v[2].norm_sqr() - v[3].norm_sqr()
    }

    /// `V̄₁V₄ + V̄₂V₃ − (V̄₃V₂ + V̄₄V₁)`; zero when the assumption used to
    /// simplify `T¹₁` holds.
    pub fn t11_condition_defect(&self) -> Complex64 {
        let v = self.v();
        v[0].conj() * v[3] + v[1].conj() * v[2] - (v[2].conj() * v[1] + v[3].conj() * v[0])
    }
}

/// Which form of the first-order system the residuals are taken against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiracMode {
    /// Unmodified equations; needs θ = π/2 and ε = 1.
    Equatorial,
    /// `B` replaced by `√(1−ε)·Q`, any ε.
    Reduced,
}

impl DiracMode {
    pub fn name(self) -> &'static str {
        match self {
            DiracMode::Equatorial => "equatorial",
            DiracMode::Reduced => "reduced",
        }
    }

    pub fn check(self, params: &ModelParams) -> Result<()> {
        if self == DiracMode::Equatorial
            && ((params.theta - std::f64::consts::FRAC_PI_2).abs() > 1e-12 || params.epsilon != 1.0)
        {
            return Err(Error::ModeParameterMismatch(format!(
                "equatorial mode requires theta = pi/2 and epsilon = 1 (theta = {}, epsilon = {})",
                params.theta, params.epsilon
            )));
        }
        Ok(())
    }
}

impl std::str::FromStr for DiracMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equatorial" => Ok(DiracMode::Equatorial),
            "reduced" => Ok(DiracMode::Reduced),
            other => Err(Error::Validation(format!("unknown mode `{other}`"))),
        }
    }
}

fn nonzero_derivative(s: f64, params: &ModelParams) -> Result<f64> {
    let d = ds_dxi_closed(s, params)?;
    if d == 0.0 {
        return Err(Error::DivisionByZeroDerivative { s });
    }
    Ok(d)
}

/// `B(S) = ½ (C/S)^{(2+2G)/(4+3G)} cot θ / (dS/dξ)`.
pub fn coeff_b(s: f64, params: &ModelParams) -> Result<f64> {
    let d = nonzero_derivative(s, params)?;
    let g = params.g;
    let expo = (2.0 + 2.0 * g) / (4.0 + 3.0 * g);
    Ok(0.5 * (params.c / s).powf(expo) * params.cot_theta() / d)
}

/// `Q(S) = (C/S)(−m + L_N'(S)) / (dS/dξ)`.
pub fn coeff_q(s: f64, params: &ModelParams) -> Result<f64> {
    let d = nonzero_derivative(s, params)?;
    let lp = params.nonlinearity.derivative(s)?;
    Ok(params.c / s * (-params.m + lp) / d)
}

/// `S_ref = S(ξ_c)`, the anchor of the phase functions.
pub fn reference_invariant(params: &ModelParams) -> Result<f64> {
    invariant_s(params.xi_c, params)
}

/// `√(C ε (3G²+8G+4)) / (4+3G)`, the prefactor of the `a = 1` closed forms.
fn closed_prefactor(params: &ModelParams) -> f64 {
    (params.c * params.epsilon * params.k3()).sqrt() / (4.0 + 3.0 * params.g)
}

fn anchored(params: &ModelParams, term: impl Fn(f64) -> Result<f64>, s: f64) -> Result<(f64, f64)> {
    let s_ref = reference_invariant(params)?;
    let delta = params.sign_ds.value() * (term(s)? - term(s_ref)?);
    Ok((params.r1 + delta, params.r2 - delta))
}

/// Phases by direct quadrature of `±√ε Q(S)` from `S_ref` to `S`.
pub fn n_general(s: f64, params: &ModelParams) -> Result<(f64, f64)> {
    let s_ref = reference_invariant(params)?;
    let failure: Cell<Option<Error>> = Cell::new(None);
    let sqrt_eps = params.epsilon.sqrt();
    let integrand = |t: f64| match coeff_q(t, params) {
        Ok(q) => sqrt_eps * q,
        Err(e) => {
            let prev = failure.take();
            failure.set(prev.or(Some(e)));
            f64::NAN
        }
    };
    let r = adaptive_quad(integrand, s_ref, s, PHASE_QUAD_TOL);
    if let Some(e) = failure.take() {
        return Err(Error::Domain(format!(
            "phase integrand undefined on [{s_ref}, {s}]: {e}"
        )));
    }
    let r = r.map_err(|e| match e {
        Error::MaxSubdivisions { partial } => Error::QuadratureFailure { partial },
        other => other,
    })?;
    Ok((params.r1 + r.value, params.r2 - r.value))
}

/// S-dependent term of the linear-case phase, `P · 2m / √((1−Cκm) S)`.
pub fn linear_term(s: f64, params: &ModelParams) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("linear phase needs S > 0, got {s}")));
    }
    let gap = params.mass_gap();
    if !(gap > 0.0) {
        return Err(Error::Domain(format!(
            "linear phase needs 1 − Cκm > 0, got {gap}"
        )));
    }
    Ok(closed_prefactor(params) * 2.0 * params.m / (gap * s).sqrt())
}

pub fn n_linear(s: f64, params: &ModelParams) -> Result<(f64, f64)> {
    anchored(params, |t| linear_term(t, params), s)
}

fn quadratic_constants(s: f64, lambda: f64, params: &ModelParams) -> Result<(f64, f64)> {
    let ck = params.c * params.kappa;
    let gap = params.mass_gap();
    if !(s > 0.0 && lambda > 0.0 && ck > 0.0 && gap > 0.0) {
        return Err(Error::Domain(format!(
            "closed-form phase needs S > 0, λ > 0, Cκ > 0, 1 − Cκm > 0 (S={s}, λ={lambda}, Cκ={ck}, 1−Cκm={gap})"
        )));
    }
    Ok((ck * lambda, gap))
}

/// S-dependent term of the quadratic-case phase:
/// `P · { 2m/(R − √c S) + 2√(λ/(Cκ)) ln[2cS/p + 1 + 2√c R/p] }` with
/// `c = Cκλ`, `p = 1 − Cκm`, `R = √(cS² + pS)`.
pub fn quadratic_term(s: f64, params: &ModelParams) -> Result<f64> {
    let lambda = params.nonlinearity.lambda();
    let (c, p) = quadratic_constants(s, lambda, params)?;
    let sc = c.sqrt();
    let r = (c * s * s + p * s).sqrt();
    let mass = 2.0 * params.m / (r - sc * s);
    let log = 2.0
        * (lambda / (params.c * params.kappa)).sqrt()
        * (2.0 * c * s / p + 1.0 + 2.0 * sc * r / p).ln();
    Ok(closed_prefactor(params) * (mass + log))
}

pub fn n_quadratic(s: f64, params: &ModelParams) -> Result<(f64, f64)> {
    anchored(params, |t| quadratic_term(t, params), s)
}

/// Substitution variable `y = p/(c S^{n−1} + p)` of the power-law phase.
pub fn power_substitution(s: f64, n: f64, params: &ModelParams) -> f64 {
    let c = params.c * params.kappa * params.nonlinearity.lambda();
    let p = params.mass_gap();
    p / (c * s.powf(n - 1.0) + p)
}

/// S-dependent term of the power-law phase (`n > 2`, integer), with the
/// incomplete beta integral `B(y(S); n/(2(n−1)), 1 − 1/(2(n−1)))` taken up
/// to the substitution variable `y(S)`.
pub fn power_term(s: f64, n: f64, params: &ModelParams) -> Result<f64> {
    if !(n > 2.0 && n.fract() == 0.0) {
        return Err(Error::Domain(format!(
            "power phase needs integer n > 2, got {n}"
        )));
    }
    let lambda = params.nonlinearity.lambda();
    let (c, p) = quadratic_constants(s, lambda, params)?;
    let ck = params.c * params.kappa;
    let nu = n - 1.0;
    let pb = n / (2.0 * nu);
    let qb = 1.0 - 1.0 / (2.0 * nu);
    let y = p / (c * s.powf(nu) + p);
    let beta = incomplete_beta(y, pb, qb, PHASE_QUAD_TOL)?;
    let algebraic = 2.0 * n / (ck * (n - 2.0)) * (c * s.powf(n - 2.0) + p / s).sqrt();
    let coeff = (c / p).powf(pb) / c.sqrt() * (n / (n - 2.0) * (1.0 / ck - params.m) - params.m);
    let bracket = beta - 2.0 * y.powf(pb) * (1.0 + p / (c * s.powf(nu))).powf(1.0 / (2.0 * nu));
    Ok(closed_prefactor(params) * (algebraic + coeff * bracket))
}

pub fn n_power(s: f64, n: f64, params: &ModelParams) -> Result<(f64, f64)> {
    anchored(params, |t| power_term(t, n, params), s)
}

/// Phases for the configured regime: the closed forms when `approx_a_one`
/// is set (they assume `a = 1`), quadrature otherwise.
pub fn phases(s: f64, params: &ModelParams) -> Result<(f64, f64)> {
    if !params.approx_a_one {
        return n_general(s, params);
    }
    match params.nonlinearity {
        Nonlinearity::Linear => n_linear(s, params),
        Nonlinearity::Quadratic { .. } => n_quadratic(s, params),
        Nonlinearity::Power { n, .. } if n.fract() == 0.0 => n_power(s, n, params),
        Nonlinearity::Power { .. } => n_general(s, params),
    }
}

/// `U₁..U₄` from the phases.
pub fn u_components(n1: f64, n2: f64, params: &ModelParams) -> [Complex64; 4] {
    let eps = params.epsilon;
    let r = (1.0 - eps).sqrt();
    let k1 = (1.0 + r) / eps.sqrt();
    let k2 = (-1.0 + r) / eps.sqrt();
    let (a1, a2) = (params.alpha1, params.alpha2);
    let (c1, s1) = (n1.cosh(), n1.sinh());
    let (c2, s2) = (n2.cosh(), n2.sinh());
    [
        a1 * (c1 - I * k1 * s1),
        a2 * (s2 - I * k2 * c2),
        a2 * (s2 + I * k2 * c2),
        a1 * (c1 + I * k1 * s1),
    ]
}

/// Amplitudes as functions of the invariant.
pub fn u_of_s(s: f64, params: &ModelParams) -> Result<[Complex64; 4]> {
    let (n1, n2) = phases(s, params)?;
    Ok(u_components(n1, n2, params))
}

/// `V_ρ(ξ)` by composing `S(ξ)`, the phases and `U_ρ`, scaled by `e^{-α/2}`.
pub fn v_components(xi: f64, params: &ModelParams) -> Result<SpinorAmplitudes> {
    let mp = alpha_beta_gamma(xi, params)?;
    let s = params.c * (-mp.alpha).exp();
    let (n1, n2) = phases(s, params)?;
    Ok(SpinorAmplitudes {
        u: u_components(n1, n2, params),
        n1,
        n2,
        at_xi: xi,
        v_scale: (-0.5 * mp.alpha).exp(),
    })
}

/// Choose `a = α₁ = α₂` so that `ψ̄ψ = S` at `ξ_c`.
///
/// For this family `|U₁| = |U₄|` and `|U₂| = |U₃|`, so `ψ̄ψ` vanishes for
/// every amplitude and the closure can only be met when it already holds.
pub fn calibrate_amplitude(params: &ModelParams) -> Result<f64> {
    let unit = ModelParams {
        alpha1: 1.0,
        alpha2: 1.0,
        ..params.clone()
    };
    let amps = v_components(params.xi_c, &unit)?;
    let closure = amps.psibar_psi();
    let norm: f64 = amps.v().iter().map(|v| v.norm_sqr()).sum();
    let target = reference_invariant(params)?;
    if closure.abs() <= 1e-13 * norm {
        return Err(Error::ClosureUnattainable(format!(
            "psibar psi vanishes identically (|psibar psi| = {:e} against sum |V|^2 = {norm:e}) while S(xi_c) = {target}",
            closure.abs()
        )));
    }
    let a2 = target / closure;
    if !(a2 > 0.0) {
        return Err(Error::ClosureUnattainable(format!(
            "closure needs a^2 = {a2} which is not positive"
        )));
    }
    Ok(a2.sqrt())
}

/// Step for differencing the amplitudes in `S`.
fn s_step(s: f64) -> f64 {
    2e-5 * s.abs()
}

fn complex_diff<F>(f: F, x: f64, step: f64) -> Result<[Complex64; 4]>
where
    F: Fn(f64) -> Result<[Complex64; 4]>,
{
    let up = f(x + step)?;
    let down = f(x - step)?;
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for k in 0..4 {
        out[k] = (up[k] - down[k]) / (2.0 * step);
    }
    Ok(out)
}

/// `B` as it enters the first-order system in the given mode.
pub fn mode_b(s: f64, params: &ModelParams, mode: DiracMode) -> Result<f64> {
    match mode {
        DiracMode::Equatorial => coeff_b(s, params),
        DiracMode::Reduced => Ok((1.0 - params.epsilon).sqrt() * coeff_q(s, params)?),
    }
}

/// Residuals of the first-order system in `S`, in the order
/// `dU₄ − iBU₄ − iQU₁`, `dU₃ + iBU₃ − iQU₂`, `dU₂ − iBU₂ + iQU₃`,
/// `dU₁ + iBU₁ + iQU₄`. Derivatives are central differences.
pub fn u_equation_residuals(
    s: f64,
    params: &ModelParams,
    mode: DiracMode,
) -> Result<[Complex64; 4]> {
    let u = u_of_s(s, params)?;
    let du = complex_diff(|t| u_of_s(t, params), s, s_step(s))?;
    let b = mode_b(s, params, mode)?;
    let q = coeff_q(s, params)?;
    Ok([
        du[3] - I * b * u[3] - I * q * u[0],
        du[2] + I * b * u[2] - I * q * u[1],
        du[1] - I * b * u[1] + I * q * u[2],
        du[0] + I * b * u[0] + I * q * u[3],
    ])
}

/// Residual of `Q U'' − Q' U' + (B² − Q²) Q U = 0` for `U = U₁ + U₄`
/// with the phase derivatives `N₁' = √ε Q`, `N₁'' = √ε Q'`.
pub fn second_order_residual(s: f64, params: &ModelParams, mode: DiracMode) -> Result<f64> {
    let (n1, _) = phases(s, params)?;
    let q = coeff_q(s, params)?;
    let dq = finite_diff_try(|t| coeff_q(t, params), s, DiffOrder::First, s_step(s))?;
    let b = mode_b(s, params, mode)?;
    let se = params.epsilon.sqrt();
    let a0 = 2.0 * params.alpha1;
    let n1p = se * q;
    let n1pp = se * dq;
    let u = a0 * n1.cosh();
    let up = a0 * n1.sinh() * n1p;
    let upp = a0 * (n1.cosh() * n1p * n1p + n1.sinh() * n1pp);
    Ok(q * upp - dq * up + (b * b - q * q) * q * u)
}

/// Residuals of the original ξ-equations for `V_ρ`, in the order
/// (V₄, V₃, V₂, V₁) equations. `V'` by central differences, `α'` analytic.
pub fn v_equation_residuals(xi: f64, params: &ModelParams) -> Result<[Complex64; 4]> {
    let mp = alpha_beta_gamma(xi, params)?;
    let v = v_components(xi, params)?.v();
    let step = 1e-5 * xi.abs().max(1e-3);
    let dv = complex_diff(|t| v_components(t, params).map(|a| a.v()), xi, step)?;
    let s = params.c * (-mp.alpha).exp();
    let lp = params.nonlinearity.derivative(s)?;
    let spin = 0.5 * (mp.alpha - mp.beta).exp() * params.cot_theta();
    let mass = mp.alpha.exp() * (lp - params.m);
    let half = 0.5 * mp.d_alpha;
    Ok([
        dv[3] + half * v[3] - I * spin * v[3] - I * mass * v[0],
        dv[2] + half * v[2] + I * spin * v[2] - I * mass * v[1],
        -dv[1] - half * v[1] + I * spin * v[1] - I * mass * v[2],
        -dv[0] - half * v[0] - I * spin * v[0] - I * mass * v[3],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DsSign;
    use crate::numerics::finite_diff;
    use std::f64::consts::FRAC_PI_2;

    fn base() -> ModelParams {
        ModelParams {
            g: 1.0,
            kappa: 0.1,
            m: 0.7,
            c: 1.0,
            h: 0.0,
            xi1: 1.0,
            xi_c: 1.0,
            nonlinearity: Nonlinearity::Quadratic { lambda: 0.5 },
            ..ModelParams::default()
        }
    }

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn b_vanishes_at_equator() {
        let p = ModelParams {
            theta: FRAC_PI_2,
            ..base()
        };
        for s in [0.1, 1.0, 3.0] {
            assert_eq!(coeff_b(s, &p).unwrap(), 0.0);
        }
        let off = ModelParams {
            theta: 1.0,
            ..base()
        };
        assert!(coeff_b(1.0, &off).unwrap() != 0.0);
    }

    #[test]
    fn q_vanishes_for_massless_linear() {
        let p = ModelParams {
            m: 0.0,
            nonlinearity: Nonlinearity::Linear,
            ..base()
        };
        for s in [0.1, 1.0, 3.0] {
            assert_eq!(coeff_q(s, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn q_recomposition() {
        // m = 0, a = 1, G = 1, C = 1, S = 1: dS/dξ = ±(7/√15)√(1 + κλ)
        let lambda = 0.8;
        let p = ModelParams {
            m: 0.0,
            nonlinearity: Nonlinearity::Quadratic { lambda },
            ..base()
        };
        let ds = 7.0 / 15f64.sqrt() * (1.0 + p.kappa * lambda).sqrt();
        let expected = 2.0 * lambda / ds;
        assert!((coeff_q(1.0, &p).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn massless_linear_phases_are_constants() {
        let p = ModelParams {
            m: 0.0,
            nonlinearity: Nonlinearity::Linear,
            r1: 0.3,
            r2: -0.2,
            ..base()
        };
        for s in [0.2, 0.9, 4.0] {
            assert_eq!(n_linear(s, &p).unwrap(), (0.3, -0.2));
            let (g1, g2) = n_general(s, &p).unwrap();
            assert_eq!((g1, g2), (0.3, -0.2));
        }
    }

    #[test]
    fn linear_term_scaling() {
        let p = ModelParams {
            nonlinearity: Nonlinearity::Linear,
            ..base()
        };
        let t1 = linear_term(0.3, &p).unwrap();
        let t4 = linear_term(1.2, &p).unwrap();
        assert!((t4 - 0.5 * t1).abs() < 1e-15);
        assert!(linear_term(0.0, &p).is_err());
    }

    #[test]
    fn epsilon_scaling_of_integral_term() {
        let p1 = ModelParams {
            epsilon: 0.2,
            ..base()
        };
        let p4 = ModelParams {
            epsilon: 0.8,
            ..base()
        };
        let (a, _) = n_general(0.4, &p1).unwrap();
        let (b, _) = n_general(0.4, &p4).unwrap();
        assert!(((b - p4.r1) - 2.0 * (a - p1.r1)).abs() < 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn phase_derivatives_follow_q() {
        for sign in [DsSign::Plus, DsSign::Minus] {
            let regimes = [
                Nonlinearity::Linear,
                Nonlinearity::Quadratic { lambda: 0.5 },
                Nonlinearity::Power {
                    lambda: 0.5,
                    n: 3.0,
                },
                Nonlinearity::Power {
                    lambda: 0.5,
                    n: 4.0,
                },
            ];
            for nl in regimes {
                let p = ModelParams {
                    nonlinearity: nl,
                    sign_ds: sign,
                    epsilon: 0.6,
                    ..base()
                };
                for s in log_grid(0.05, 5.0, 9) {
                    let expect = p.epsilon.sqrt() * coeff_q(s, &p).unwrap();
                    let h = 1e-4 * s;
                    let d1 =
                        finite_diff(|t| phases(t, &p).unwrap().0, s, DiffOrder::First, h).unwrap();
                    let d2 =
                        finite_diff(|t| phases(t, &p).unwrap().1, s, DiffOrder::First, h).unwrap();
                    let tol = 1e-6 * expect.abs().max(1e-3);
                    assert!(
                        (d1 - expect).abs() < tol,
                        "{nl:?} {sign:?} S={s}: {d1} vs {expect}"
                    );
                    assert!((d2 + expect).abs() < tol, "{nl:?} {sign:?} S={s}");
                }
            }
        }
    }

    #[test]
    fn quadratic_closed_form_agrees_with_quadrature() {
        let p = base();
        for s in log_grid(0.05, 5.0, 20) {
            let (c1, c2) = n_quadratic(s, &p).unwrap();
            let (g1, g2) = n_general(s, &p).unwrap();
            let scale = g1.abs().max(1e-12);
            assert!((c1 - g1).abs() < 1e-6 * scale, "S={s}: {c1} vs {g1}");
            assert!((c2 - g2).abs() < 1e-6 * g2.abs().max(1e-12));
        }
    }

    #[test]
    fn quadratic_tends_to_linear() {
        let lin = ModelParams {
            nonlinearity: Nonlinearity::Linear,
            ..base()
        };
        let quad = ModelParams {
            nonlinearity: Nonlinearity::Quadratic { lambda: 1e-10 },
            ..base()
        };
        for s in [0.1, 0.5, 2.0] {
            let a = linear_term(s, &lin).unwrap();
            let b = quadratic_term(s, &quad).unwrap();
            assert!(((a - b) / a).abs() < 1e-4, "S={s}: {a} vs {b}");
        }
    }

    #[test]
    fn power_substitution_limits() {
        let p = ModelParams {
            nonlinearity: Nonlinearity::Power {
                lambda: 0.5,
                n: 3.0,
            },
            ..base()
        };
        assert!((power_substitution(1e-12, 3.0, &p) - 1.0).abs() < 1e-12);
        assert!(power_substitution(1e12, 3.0, &p) < 1e-20);
        assert!(power_term(1.0, 2.5, &p).is_err());
    }

    #[test]
    fn power_closed_form_agrees_with_quadrature() {
        for n in [3.0, 4.0] {
            let p = ModelParams {
                nonlinearity: Nonlinearity::Power { lambda: 0.5, n },
                ..base()
            };
            for s in log_grid(0.05, 5.0, 10) {
                let (c1, _) = n_power(s, n, &p).unwrap();
                let (g1, _) = n_general(s, &p).unwrap();
                let scale = (g1 - p.r1).abs().max(1e-12);
                assert!(
                    ((c1 - p.r1) - (g1 - p.r1)).abs() < 1e-5 * scale,
                    "n={n} S={s}: {c1} vs {g1}"
                );
            }
        }
    }

    #[test]
    fn u_components_at_zero_phase() {
        let p = ModelParams {
            epsilon: 1.0,
            alpha1: 0.7,
            alpha2: 0.4,
            ..base()
        };
        let u = u_components(0.0, 0.0, &p);
        assert_eq!(u[0], Complex64::new(0.7, 0.0));
        assert_eq!(u[3], Complex64::new(0.7, 0.0));
        // U₂ = α₂[sinh 0 − i(−1)cosh 0] = iα₂
        assert_eq!(u[1], Complex64::new(0.0, 0.4));
        assert_eq!(u[2], Complex64::new(0.0, -0.4));
    }

    #[test]
    fn u_components_unit_epsilon() {
        let p = ModelParams {
            epsilon: 1.0,
            alpha1: 1.3,
            ..base()
        };
        let n = 0.37;
        let u = u_components(n, 0.1, &p);
        assert!((u[0] - 1.3 * Complex64::new(n.cosh(), -n.sinh())).norm() < 1e-15);
        assert!((u[3] - 1.3 * Complex64::new(n.cosh(), n.sinh())).norm() < 1e-15);
    }

    #[test]
    fn moduli_invariants() {
        let p = ModelParams {
            epsilon: 1.0,
            alpha1: 0.9,
            alpha2: 0.4,
            ..base()
        };
        for n in [-1.0, 0.0, 0.5, 2.0] {
            let u = u_components(n, 0.3 * n, &p);
            let expect = 0.9 * (n.cosh().powi(2) + n.sinh().powi(2)).sqrt();
            assert!((u[0].norm() - expect).abs() < 1e-14);
            assert!((u[3].norm() - expect).abs() < 1e-14);
            assert!((u[1].norm() - u[2].norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn v_is_scaled_u() {
        let p = base();
        let amps = v_components(0.4, &p).unwrap();
        let mp = alpha_beta_gamma(0.4, &p).unwrap();
        assert_eq!(amps.v_scale, (-0.5 * mp.alpha).exp());
        for (v, u) in amps.v().iter().zip(amps.u.iter()) {
            assert_eq!(*v, *u * amps.v_scale);
        }
    }

    #[test]
    fn v_equals_u_where_alpha_vanishes() {
        let p = ModelParams {
            xi1: 0.25,
            ..base()
        };
        let xi = (0.5f64).sqrt() - 0.25;
        let amps = v_components(xi, &p).unwrap();
        for (v, u) in amps.v().iter().zip(amps.u.iter()) {
            assert!((v - u).norm() < 1e-15);
        }
    }

    #[test]
    fn psibar_psi_vanishes_for_this_family() {
        let p = base();
        let amps = v_components(0.5, &p).unwrap();
        assert!(amps.psibar_psi().abs() < 1e-15);
        assert!(matches!(
            calibrate_amplitude(&p),
            Err(Error::ClosureUnattainable(_))
        ));
    }

    #[test]
    fn t11_condition_defect_in_static_gauge() {
        let a = 0.6;
        let p = ModelParams {
            epsilon: 1.0,
            alpha1: a,
            alpha2: a,
            r1: 0.2,
            r2: -0.2,
            ..base()
        };
        for xi in [0.1, 0.5, 0.9] {
            let amps = v_components(xi, &p).unwrap();
            let mp = alpha_beta_gamma(xi, &p).unwrap();
            let expect = Complex64::new(
                0.0,
                4.0 * a * a * (-mp.alpha).exp() * (2.0 * amps.n1).sinh(),
            );
            assert!((amps.t11_condition_defect() - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn equatorial_mode_rejects_off_equator() {
        let p = ModelParams {
            epsilon: 0.5,
            ..base()
        };
        assert!(DiracMode::Equatorial.check(&p).is_err());
        assert!(DiracMode::Reduced.check(&p).is_ok());
    }

    #[test]
    fn first_order_system_reduced_mode() {
        for eps in [0.25, 0.5, 1.0] {
            let p = ModelParams {
                epsilon: eps,
                theta: 1.1,
                ..base()
            };
            for s in log_grid(0.1, 3.0, 7) {
                let r = u_equation_residuals(s, &p, DiracMode::Reduced).unwrap();
                for z in r {
                    assert!(z.norm() < 1e-6, "eps={eps} S={s}: {z}");
                }
                assert!(
                    second_order_residual(s, &p, DiracMode::Reduced)
                        .unwrap()
                        .abs()
                        < 1e-6
                );
            }
        }
    }
}
