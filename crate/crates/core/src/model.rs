//! Model configuration: physical constants, integration constants and the
//! self-interaction `L_N(S)`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Self-interaction term `L_N = F(S)` of the spinor Lagrangian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nonlinearity {
    /// `L_N ≡ 0`, the linear Dirac equation.
    Linear,
    /// `L_N = λS²`.
    Quadratic { lambda: f64 },
    /// `L_N = λSⁿ` with `n > 2`.
    Power { lambda: f64, n: f64 },
}

impl Nonlinearity {
    pub fn lambda(&self) -> f64 {
        match *self {
            Nonlinearity::Linear => 0.0,
            Nonlinearity::Quadratic { lambda } | Nonlinearity::Power { lambda, .. } => lambda,
        }
    }

    /// Exponent of the power law (`2` for the quadratic case).
    pub fn exponent(&self) -> Option<f64> {
        match *self {
            Nonlinearity::Linear => None,
            Nonlinearity::Quadratic { .. } => Some(2.0),
            Nonlinearity::Power { n, .. } => Some(n),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Nonlinearity::Linear => "linear",
            Nonlinearity::Quadratic { .. } => "quadratic",
            Nonlinearity::Power { .. } => "power",
        }
    }

    /// `L_N(S)`.
    pub fn value(&self, s: f64) -> Result<f64> {
        match *self {
            Nonlinearity::Linear => Ok(0.0),
            Nonlinearity::Quadratic { lambda } => Ok(lambda * s * s),
            Nonlinearity::Power { lambda, n } => Ok(lambda * signed_pow(s, n)?),
        }
    }

    /// `dL_N/dS`.
    pub fn derivative(&self, s: f64) -> Result<f64> {
        match *self {
            Nonlinearity::Linear => Ok(0.0),
            Nonlinearity::Quadratic { lambda } => Ok(2.0 * lambda * s),
            Nonlinearity::Power { lambda, n } => Ok(n * lambda * signed_pow(s, n - 1.0)?),
        }
    }
}

/// `sⁿ`, defined for negative `s` only when `n` is an integer.
fn signed_pow(s: f64, n: f64) -> Result<f64> {
    if n.fract() == 0.0 && n.abs() < i32::MAX as f64 {
        Ok(s.powi(n as i32))
    } else if s < 0.0 {
        Err(Error::NonIntegerPowerOfNegative { s, n })
    } else {
        Ok(s.powf(n))
    }
}

/// Branch of the square root in the closed form of `dS/dξ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsSign {
    Plus,
    Minus,
}

impl DsSign {
    pub fn value(self) -> f64 {
        match self {
            DsSign::Plus => 1.0,
            DsSign::Minus => -1.0,
        }
    }
}

/// Every constant of the model. Field names follow the config-file keys.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Dimensionless gravitational coupling entering `A = G/(G+1)`.
    pub g: f64,
    /// Einstein constant κ.
    pub kappa: f64,
    /// Spinor mass parameter.
    pub m: f64,
    /// Amplitude of the invariant, `S = C e^{-α}`.
    pub c: f64,
    /// Liouville branch constant.
    pub h: f64,
    /// Liouville shift `ξ₁`.
    pub xi1: f64,
    /// Upper end of the ξ domain ("center of the field configuration").
    pub xi_c: f64,
    /// Polar angle used in `B(S)` and the densities.
    pub theta: f64,
    /// Reduction parameter ε ∈ (0, 1].
    pub epsilon: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub r1: f64,
    pub r2: f64,
    pub nonlinearity: Nonlinearity,
    pub sign_ds: DsSign,
    /// Replace the exponent `(4+2G)/(4+3G)` by 1 in `dS/dξ` and the phase integrals.
    pub approx_a_one: bool,
    /// Width of the excluded band around ξ = 0 and around coordinate singularities.
    pub singular_guard: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            g: 1.0,
            kappa: 0.1,
            m: 1.0,
            c: 1.0,
            h: 0.0,
            xi1: 1.0,
            xi_c: 1.0,
            theta: FRAC_PI_2,
            epsilon: 1.0,
            alpha1: 0.5,
            alpha2: 0.5,
            r1: 0.0,
            r2: 0.0,
            nonlinearity: Nonlinearity::Linear,
            sign_ds: DsSign::Plus,
            approx_a_one: true,
            singular_guard: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Outcome of [`ModelParams::validate`]. Warnings never block computation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationResult {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Violation>,
}

impl ValidationResult {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            let msg: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
            Err(Error::Validation(msg.join("; ")))
        }
    }
}

impl ModelParams {
    /// `A = G/(G+1)`.
    pub fn a_grav(&self) -> f64 {
        self.g / (self.g + 1.0)
    }

    /// Exact exponent `(4+2G)/(4+3G)` of `S/C` in `dS/dξ`.
    pub fn a_exp(&self) -> f64 {
        (4.0 + 2.0 * self.g) / (4.0 + 3.0 * self.g)
    }

    /// Exponent actually used, honouring `approx_a_one`.
    pub fn effective_a(&self) -> f64 {
        if self.approx_a_one {
            1.0
        } else {
            self.a_exp()
        }
    }

    /// `3G² + 8G + 4`.
    pub fn k3(&self) -> f64 {
        3.0 * self.g * self.g + 8.0 * self.g + 4.0
    }

    /// `1 - Cκm`.
    pub fn mass_gap(&self) -> f64 {
        1.0 - self.c * self.kappa * self.m
    }

    pub fn sin_theta(&self) -> f64 {
        exact_sin(self.theta)
    }

    pub fn cot_theta(&self) -> f64 {
        // tan(π/2 - θ) vanishes exactly at θ = π/2
        (FRAC_PI_2 - self.theta).tan()
    }

    pub fn validate(&self) -> ValidationResult {
        let mut out = ValidationResult::default();
        let mut bad = |field: &'static str, message: String| {
            out.violations.push(Violation { field, message });
        };
        let reals = [
            ("G", self.g),
            ("kappa", self.kappa),
            ("m", self.m),
            ("C", self.c),
            ("h", self.h),
            ("xi1", self.xi1),
            ("xi_c", self.xi_c),
            ("theta", self.theta),
            ("epsilon", self.epsilon),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("R1", self.r1),
            ("R2", self.r2),
            ("lambda", self.nonlinearity.lambda()),
            ("singular_guard", self.singular_guard),
        ];
        for (field, v) in reals {
            if !v.is_finite() {
                bad(field, format!("{field} must be finite, got {v}"));
            }
        }
        if !(self.g > 0.0) {
            bad("G", format!("G must be positive, got {}", self.g));
        }
        if !(self.m >= 0.0) {
            bad("m", format!("m must be non-negative, got {}", self.m));
        }
        if self.c == 0.0 {
            bad("C", "C must be nonzero".into());
        }
        if !(self.mass_gap() > 0.0) {
            bad(
                "C",
                format!(
                    "1−Cκm ≤ 0 (C={}, kappa={}, m={})",
                    self.c, self.kappa, self.m
                ),
            );
        }
        if self.xi1 == 0.0 {
            bad("xi1", "ξ₁ must be nonzero".into());
        }
        if !(self.xi_c > 0.0) {
            bad("xi_c", format!("xi_c must be positive, got {}", self.xi_c));
        }
        if !(self.theta > 0.0 && self.theta < std::f64::consts::PI) {
            bad(
                "theta",
                format!("theta must lie in (0, π), got {}", self.theta),
            );
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            bad(
                "epsilon",
                format!("epsilon must lie in (0, 1], got {}", self.epsilon),
            );
        }
        if !(self.singular_guard > 0.0) {
            bad("singular_guard", "singular_guard must be positive".into());
        }
        if let Nonlinearity::Power { n, .. } = self.nonlinearity {
            if !(n > 2.0) {
                bad("n", format!("power nonlinearity requires n > 2, got {n}"));
            }
        }
        if !matches!(self.nonlinearity, Nonlinearity::Linear) && self.nonlinearity.lambda() <= 0.0 {
            out.warnings.push(Violation {
                field: "lambda",
                message: format!(
                    "lambda = {} is not positive; localization is not expected",
                    self.nonlinearity.lambda()
                ),
            });
        }
        out
    }

    /// Parse the flat `name = value` format. Unset keys keep their defaults.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut p = ModelParams::default();
        let mut kind = String::from("linear");
        let mut lambda = 1.0;
        let mut n = 3.0;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Validation(format!("line {}: expected `name = value`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let num = || -> Result<f64> {
                value.parse::<f64>().map_err(|_| {
                    Error::Validation(format!("{key}: cannot parse `{value}` as a number"))
                })
            };
            match key {
                "G" => p.g = num()?,
                "kappa" => p.kappa = num()?,
                "m" => p.m = num()?,
                "C" => p.c = num()?,
                "h" => p.h = num()?,
                "xi1" => p.xi1 = num()?,
                "xi_c" => p.xi_c = num()?,
                "theta" => p.theta = num()?,
                "epsilon" => p.epsilon = num()?,
                "alpha1" => p.alpha1 = num()?,
                "alpha2" => p.alpha2 = num()?,
                "R1" => p.r1 = num()?,
                "R2" => p.r2 = num()?,
                "lambda" => lambda = num()?,
                "n" => n = num()?,
                "singular_guard" => p.singular_guard = num()?,
                "nonlinearity" => kind = value.to_ascii_lowercase(),
                "sign_dS" => {
                    p.sign_ds = match value {
                        "+1" | "1" | "+" => DsSign::Plus,
                        "-1" | "-" => DsSign::Minus,
                        _ => {
                            return Err(Error::Validation(format!(
                                "sign_dS: expected +1 or -1, got `{value}`"
                            )))
                        }
                    }
                }
                "approx_a_one" => {
                    p.approx_a_one = value.parse::<bool>().map_err(|_| {
                        Error::Validation(format!(
                            "approx_a_one: expected true/false, got `{value}`"
                        ))
                    })?
                }
                _ => return Err(Error::Validation(format!("unknown key `{key}`"))),
            }
        }
        p.nonlinearity = match kind.as_str() {
            "linear" => Nonlinearity::Linear,
            "quadratic" => Nonlinearity::Quadratic { lambda },
            "power" => Nonlinearity::Power { lambda, n },
            other => {
                return Err(Error::Validation(format!(
                    "nonlinearity: expected linear, quadratic or power, got `{other}`"
                )))
            }
        };
        Ok(p)
    }

    /// Fully resolved configuration in the same format `from_config_str` reads.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        put("G", fmt_real(self.g));
        put("kappa", fmt_real(self.kappa));
        put("m", fmt_real(self.m));
        put("C", fmt_real(self.c));
        put("h", fmt_real(self.h));
        put("xi1", fmt_real(self.xi1));
        put("xi_c", fmt_real(self.xi_c));
        put("theta", fmt_real(self.theta));
        put("epsilon", fmt_real(self.epsilon));
        put("alpha1", fmt_real(self.alpha1));
        put("alpha2", fmt_real(self.alpha2));
        put("R1", fmt_real(self.r1));
        put("R2", fmt_real(self.r2));
        put("nonlinearity", self.nonlinearity.name().into());
        match self.nonlinearity {
            Nonlinearity::Linear => {}
            Nonlinearity::Quadratic { lambda } => put("lambda", fmt_real(lambda)),
            Nonlinearity::Power { lambda, n } => {
                put("lambda", fmt_real(lambda));
                put("n", fmt_real(n));
            }
        }
        put(
            "sign_dS",
            if self.sign_ds == DsSign::Plus {
                "+1"
            } else {
                "-1"
            }
            .into(),
        );
        put("approx_a_one", self.approx_a_one.to_string());
        put("singular_guard", fmt_real(self.singular_guard));
        s
    }
}

impl FromStr for ModelParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelParams::from_config_str(s)
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:?}")
}

/// `sin θ` with exact zeros at 0 and π.
pub(crate) fn exact_sin(theta: f64) -> f64 {
    if theta > FRAC_PI_2 {
        (std::f64::consts::PI - theta).sin()
    } else {
        theta.sin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn valid() -> ModelParams {
        ModelParams {
            g: 1.0,
            kappa: 0.1,
            m: 1.0,
            c: 1.0,
            ..ModelParams::default()
        }
    }

    #[test]
    fn valid_params_pass() {
        let r = valid().validate();
        assert!(r.is_ok(), "{:?}", r.violations);
    }

    #[test]
    fn zero_xi1_is_rejected() {
        let r = ModelParams {
            xi1: 0.0,
            ..valid()
        }
        .validate();
        assert!(!r.is_ok());
        assert!(r
            .violations
            .iter()
            .any(|v| v.field == "xi1" && v.message.contains("nonzero")));
    }

    #[test]
    fn mass_gap_violation() {
        let r = ModelParams {
            c: 1.0,
            kappa: 1.0,
            m: 2.0,
            ..valid()
        }
        .validate();
        assert!(r.violations.iter().any(|v| v.message.contains("1−Cκm ≤ 0")));
    }

    #[test]
    fn validate_never_clamps() {
        let p = ModelParams {
            epsilon: 1.5,
            theta: 4.0,
            ..valid()
        };
        let r = p.validate();
        assert_eq!(r.violations.len(), 2);
        assert_eq!(p.epsilon, 1.5);
    }

    #[test]
    fn negative_lambda_warns_only() {
        let p = ModelParams {
            nonlinearity: Nonlinearity::Quadratic { lambda: -1.0 },
            ..valid()
        };
        let r = p.validate();
        assert!(r.is_ok());
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn power_needs_n_above_two() {
        let p = ModelParams {
            nonlinearity: Nonlinearity::Power {
                lambda: 1.0,
                n: 2.0,
            },
            ..valid()
        };
        assert!(!p.validate().is_ok());
    }

    #[test]
    fn nonlinearity_values() {
        let q = Nonlinearity::Quadratic { lambda: 2.0 };
        assert_eq!(q.value(3.0).unwrap(), 18.0);
        assert_eq!(q.derivative(3.0).unwrap(), 12.0);
        let l = Nonlinearity::Linear;
        assert_eq!(
            (l.value(7.3).unwrap(), l.derivative(7.3).unwrap()),
            (0.0, 0.0)
        );
        let p = Nonlinearity::Power {
            lambda: 1.0,
            n: 3.0,
        };
        assert_eq!(
            (p.value(2.0).unwrap(), p.derivative(2.0).unwrap()),
            (8.0, 12.0)
        );
    }

    #[test]
    fn integer_power_of_negative_keeps_sign() {
        let p = Nonlinearity::Power {
            lambda: 1.0,
            n: 3.0,
        };
        assert_eq!(p.value(-2.0).unwrap(), -8.0);
        let frac = Nonlinearity::Power {
            lambda: 1.0,
            n: 2.5,
        };
        assert!(matches!(
            frac.value(-2.0),
            Err(Error::NonIntegerPowerOfNegative { .. })
        ));
        assert!(frac.value(2.0).is_ok());
    }

    #[test]
    fn derived_constants_limits() {
        let small = ModelParams { g: 1e-9, ..valid() };
        let large = ModelParams { g: 1e9, ..valid() };
        assert!((small.a_exp() - 1.0).abs() < 1e-6);
        assert!((large.a_exp() - 2.0 / 3.0).abs() < 1e-6);
        for g in [1e-6, 0.3, 1.0, 7.0, 1e6] {
            let p = ModelParams { g, ..valid() };
            assert!(p.a_grav() > 0.0 && p.a_grav() < 1.0);
            assert!(p.a_exp() > 0.0 && p.a_exp() < 1.0);
        }
    }

    #[test]
    fn exact_trig_at_special_angles() {
        let p = ModelParams {
            theta: FRAC_PI_2,
            ..valid()
        };
        assert_eq!(p.cot_theta(), 0.0);
        assert_eq!(exact_sin(std::f64::consts::PI), 0.0);
    }

    #[test]
    fn config_round_trip() {
        let p = ModelParams {
            h: -0.123456789012345,
            nonlinearity: Nonlinearity::Power {
                lambda: 0.3,
                n: 4.0,
            },
            sign_ds: DsSign::Plus,
            approx_a_one: false,
            ..valid()
        };
        let back: ModelParams = p.to_config_string().parse().unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn config_errors() {
        assert!(ModelParams::from_config_str("bogus = 1").is_err());
        assert!(ModelParams::from_config_str("G = abc").is_err());
        assert!(ModelParams::from_config_str("G 1").is_err());
        let p = ModelParams::from_config_str(
            "# comment\nG = 3 # trailing\n\nnonlinearity = quadratic\nlambda = 2",
        )
        .unwrap();
        assert_eq!(p.g, 3.0);
        assert_eq!(p.nonlinearity, Nonlinearity::Quadratic { lambda: 2.0 });
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn fd(nl: &Nonlinearity, s: f64) -> f64 {
            let h = 1e-6 * s.abs().max(1.0);
            (nl.value(s + h).unwrap() - nl.value(s - h).unwrap()) / (2.0 * h)
        }

        proptest! {
            #[test]
            fn derivative_matches_finite_difference(
                lambda in 0.01f64..10.0,
                n in 2.1f64..6.0,
                s in 0.05f64..5.0,
                kind in 0usize..3,
            ) {
                let nl = match kind {
                    0 => Nonlinearity::Linear,
                    1 => Nonlinearity::Quadratic { lambda },
                    _ => Nonlinearity::Power { lambda, n },
                };
                let exact = nl.derivative(s).unwrap();
                let approx = fd(&nl, s);
                prop_assert!((exact - approx).abs() <= 1e-6 * exact.abs().max(1e-12) + 1e-9);
            }
        }
    }
}
