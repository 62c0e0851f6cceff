//! Energy-momentum components, energy density, current, charge density and
//! the total energy and charge.

use crate::error::{Error, Result};
use crate::metric::{alpha_beta_gamma, liouville_t, singular_points, MetricPoint};
use crate::model::{ModelParams, Nonlinearity};
use crate::numerics::{adaptive_quad, QuadResult};
use crate::spinor::{phases, v_components};

/// Everything observable at one ξ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableRecord {
    pub xi: f64,
    pub s: f64,
    pub t00: f64,
    pub t11: f64,
    /// Energy per unit invariant volume, including `sin θ`.
    pub f: f64,
    pub j0: f64,
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    /// Chronometric-invariant charge density; NaN outside the static gauge.
    pub q: f64,
}

/// `T⁰₀ = S L_N'(S) − L_N(S)`; also `T²₂` and `T³₃`.
pub fn t00_of_s(s: f64, nl: &Nonlinearity) -> Result<f64> {
    Ok(s * nl.derivative(s)? - nl.value(s)?)
}

/// `T¹₁ = mS − L_N(S)`.
pub fn t11_of_s(s: f64, nl: &Nonlinearity, m: f64) -> Result<f64> {
    Ok(m * s - nl.value(s)?)
}

/// `√(−³g) = e^{α+2β} sin θ`.
pub fn volume_factor(mp: &MetricPoint, params: &ModelParams) -> f64 {
    (mp.alpha + 2.0 * mp.beta).exp() * params.sin_theta()
}

/// `f(ξ) = T⁰₀(S(ξ)) e^{α+2β} sin θ`.
pub fn energy_density_invariant(xi: f64, params: &ModelParams) -> Result<f64> {
    let mp = alpha_beta_gamma(xi, params)?;
    let s = params.c * (-mp.alpha).exp();
    Ok(t00_of_s(s, &params.nonlinearity)? * volume_factor(&mp, params))
}

/// Coefficient `(A/4G)[−n(4+3G) + 5G + 8]` of `ln[A/(G T²)]` in the exponent
/// of `f` for `L_N = λSⁿ`; `None` for the linear case.
pub fn energy_exponent_coefficient(params: &ModelParams) -> Option<f64> {
    let n = params.nonlinearity.exponent()?;
    let g = params.g;
    let a = params.a_grav();
    Some(a / (4.0 * g) * (-n * (4.0 + 3.0 * g) + 5.0 * g + 8.0))
}

/// `f(ξ)` from its closed form
/// `λ(n−1) Cⁿ sin θ · exp{(A/4G)[−n(4+3G) + 5G + 8] ln[A/(G T²)]}`.
pub fn energy_density_closed(xi: f64, params: &ModelParams) -> Result<f64> {
    let Some(coeff) = energy_exponent_coefficient(params) else {
        return Ok(0.0);
    };
    let n = params.nonlinearity.exponent().unwrap_or(0.0);
    let lambda = params.nonlinearity.lambda();
    let t = liouville_t(params.h, xi + params.xi1);
    if t == 0.0 {
        return Err(Error::SingularPoint { xi });
    }
    let arg = params.a_grav() / (params.g * t * t);
    let amplitude = lambda * (n - 1.0) * params.c.powf(n) * params.sin_theta();
    Ok(amplitude * (coeff * arg.ln()).exp())
}

/// The four displayed components of `j^μ`.
pub fn current(xi: f64, params: &ModelParams) -> Result<[f64; 4]> {
    let mp = alpha_beta_gamma(xi, params)?;
    let s = params.c * (-mp.alpha).exp();
    let (n1, n2) = phases(s, params)?;
    let eps = params.epsilon;
    let r = (1.0 - eps).sqrt();
    let k1 = (1.0 + r) / eps.sqrt();
    let k2 = (-1.0 + r) / eps.sqrt();
    let a1 = params.alpha1 * params.alpha1;
    let a2 = params.alpha2 * params.alpha2;
    let (c1, s1) = (n1.cosh(), n1.sinh());
    let (c2, s2) = (n2.cosh(), n2.sinh());
    let j0 = 2.0
        * (-mp.gamma - mp.alpha).exp()
        * (a1 * (c1 * c1 + k1 * k1 * s1 * s1) + a2 * (s2 * s2 + k2 * k2 * c2 * c2));
    let j1 = 2.0
        * (-2.0 * mp.alpha).exp()
        * (a1 * (c1 * c1 - k1 * k1 * s1 * s1) + a2 * (s2 * s2 - k2 * k2 * c2 * c2));
    let j2 = 4.0 * (-mp.beta - mp.alpha).exp() * (a1 * k1 * c1 * s1 - a2 * k2 * s2 * c2);
    Ok([j0, j1, j2, 0.0])
}

/// True when `ε = 1`, `α₁ = α₂` and `R₂ = −R₁`, which makes `N₂ = −N₁`.
pub fn gauge_fixed(params: &ModelParams) -> bool {
    params.epsilon == 1.0 && params.alpha1 == params.alpha2 && params.r2 == -params.r1
}

fn require_gauge(params: &ModelParams) -> Result<()> {
    if gauge_fixed(params) {
        Ok(())
    } else {
        Err(Error::GaugeNotFixed(format!(
            "epsilon = {}, alpha1 = {}, alpha2 = {}, R1 = {}, R2 = {}",
            params.epsilon, params.alpha1, params.alpha2, params.r1, params.r2
        )))
    }
}

/// `q = 4a² e^{-α} cosh 2N`.
pub fn charge_density(xi: f64, params: &ModelParams) -> Result<f64> {
    require_gauge(params)?;
    let mp = alpha_beta_gamma(xi, params)?;
    let s = params.c * (-mp.alpha).exp();
    let (n, _) = phases(s, params)?;
    let a = params.alpha1;
    Ok(4.0 * a * a * (-mp.alpha).exp() * (2.0 * n).cosh())
}

/// `q = √(j₀ j⁰) = √g₀₀ · j⁰`, assembled from [`current`].
pub fn charge_density_from_current(xi: f64, params: &ModelParams) -> Result<f64> {
    require_gauge(params)?;
    let mp = alpha_beta_gamma(xi, params)?;
    let j = current(xi, params)?;
    Ok((mp.g00 * j[0] * j[0]).sqrt())
}

pub fn observable_record(xi: f64, params: &ModelParams) -> Result<ObservableRecord> {
    let mp = alpha_beta_gamma(xi, params)?;
    let s = params.c * (-mp.alpha).exp();
    let t00 = t00_of_s(s, &params.nonlinearity)?;
    let t11 = t11_of_s(s, &params.nonlinearity, params.m)?;
    let j = current(xi, params)?;
    let q = if gauge_fixed(params) {
        charge_density(xi, params)?
    } else {
        f64::NAN
    };
    Ok(ObservableRecord {
        xi,
        s,
        t00,
        t11,
        f: t00 * volume_factor(&mp, params),
        j0: j[0],
        j1: j[1],
        j2: j[2],
        j3: j[3],
        q,
    })
}

/// Subintervals of `(0, ξ_c]` between singular points, shrunk by `guard`
/// at ξ = 0 and at every singularity.
pub fn integration_segments(params: &ModelParams, guard: f64) -> Vec<(f64, f64)> {
    let hi = params.xi_c;
    let mut cuts = vec![0.0];
    cuts.extend(
        singular_points(params, 0.0, hi)
            .into_iter()
            .filter(|&s| s > 0.0),
    );
    let mut segs = Vec::new();
    for (k, &a) in cuts.iter().enumerate() {
        let b = cuts.get(k + 1).copied();
        let lo = a + guard;
        let up = b.map_or(hi, |b| b - guard);
        if up > lo {
            segs.push((lo, up));
        }
    }
    segs
}

fn integrate_guarded<F>(
    integrand: F,
    params: &ModelParams,
    guard: f64,
    tol: f64,
) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<f64>,
{
    let segs = integration_segments(params, guard);
    let per_seg = tol / segs.len().max(1) as f64;
    let failure = std::cell::Cell::new(None);
    let mut total = QuadResult {
        value: 0.0,
        error_bound: 0.0,
        evaluations: 0,
        converged: true,
    };
    for (a, b) in segs {
        let f = |x: f64| match integrand(x) {
            Ok(v) => v,
            Err(e) => {
                let prev: Option<Error> = failure.take();
                failure.set(prev.or(Some(e)));
                f64::NAN
            }
        };
        let r = adaptive_quad(f, a, b, per_seg);
        if let Some(e) = failure.take() {
            return Err(e);
        }
        let r = r.map_err(|e| match e {
            Error::MaxSubdivisions { partial } => Error::QuadratureFailure { partial },
            other => other,
        })?;
        total.value += r.value;
        total.error_bound += r.error_bound;
        total.evaluations += r.evaluations;
        total.converged &= r.converged;
    }
    Ok(total)
}

/// Integrate with the configured guard, then with guards shrunk tenfold
/// twice; increments that fail to shrink signal divergence at a boundary.
fn certified_total<F>(integrand: F, params: &ModelParams, tol: f64) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<f64>,
{
    let g = params.singular_guard;
    let base = integrate_guarded(&integrand, params, g, tol)?;
    let finer = integrate_guarded(&integrand, params, g / 10.0, tol)?;
    let finest = integrate_guarded(&integrand, params, g / 100.0, tol)?;
    let d1 = (finer.value - base.value).abs();
    let d2 = (finest.value - finer.value).abs();
    if d2 > 0.5 * d1 && d2 > tol.max(1e-12 * base.value.abs()) {
        return Err(Error::DivergentIntegral {
            estimates: vec![base.value, finer.value, finest.value],
        });
    }
    Ok(base)
}

/// `E = ∫ T⁰₀ √(−³g) dξ` over `(0, ξ_c]` minus guard bands.
pub fn total_energy(params: &ModelParams, tol: f64) -> Result<QuadResult> {
    if matches!(params.nonlinearity, Nonlinearity::Linear) {
        return Ok(QuadResult {
            value: 0.0,
            error_bound: 0.0,
            evaluations: 0,
            converged: true,
        });
    }
    certified_total(|xi| energy_density_invariant(xi, params), params, tol)
}

/// `Q = ∫ q √(−³g) dξ` over `(0, ξ_c]` minus guard bands.
pub fn total_charge(params: &ModelParams, tol: f64) -> Result<QuadResult> {
    require_gauge(params)?;
    certified_total(
        |xi| {
            let mp = alpha_beta_gamma(xi, params)?;
            Ok(charge_density(xi, params)? * volume_factor(&mp, params))
        },
        params,
        tol,
    )
}

/// Spinor bilinear `ψ̄ψ` at ξ, for comparison with `S(ξ)`.
pub fn spinor_invariant(xi: f64, params: &ModelParams) -> Result<f64> {
    Ok(v_components(xi, params)?.psibar_psi())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn quad() -> ModelParams {
        ModelParams {
            g: 1.0,
            kappa: 0.1,
            m: 0.5,
            h: -0.4,
            nonlinearity: Nonlinearity::Quadratic { lambda: 0.5 },
            r1: 0.1,
            r2: -0.1,
            ..ModelParams::default()
        }
    }

    #[test]
    fn t00_examples() {
        assert_eq!(t00_of_s(2.0, &Nonlinearity::Linear).unwrap(), 0.0);
        assert_eq!(
            t00_of_s(2.0, &Nonlinearity::Quadratic { lambda: 1.0 }).unwrap(),
            4.0
        );
        assert_eq!(
            t00_of_s(
                2.0,
                &Nonlinearity::Power {
                    lambda: 1.0,
                    n: 3.0
                }
            )
            .unwrap(),
            16.0
        );
    }

    #[test]
    fn t11_examples() {
        assert_eq!(t11_of_s(2.0, &Nonlinearity::Linear, 1.0).unwrap(), 2.0);
        assert_eq!(
            t11_of_s(3.0, &Nonlinearity::Quadratic { lambda: 1.0 }, 0.0).unwrap(),
            -9.0
        );
    }

    proptest! {
        #[test]
        fn t00_minus_t11(s in 0.01f64..5.0, m in -2.0f64..2.0, lambda in -2.0f64..2.0, n in 2u32..6) {
            let nl = Nonlinearity::Power { lambda, n: n as f64 };
            let lhs = t00_of_s(s, &nl).unwrap() - t11_of_s(s, &nl, m).unwrap();
            let rhs = s * nl.derivative(s).unwrap() - m * s;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn two_routes_for_f() {
        for nl in [
            Nonlinearity::Quadratic { lambda: 0.5 },
            Nonlinearity::Power {
                lambda: 0.3,
                n: 3.0,
            },
        ] {
            let p = ModelParams {
                nonlinearity: nl,
                ..quad()
            };
            for i in 1..=20 {
                let xi = i as f64 / 20.0;
                let a = energy_density_invariant(xi, &p).unwrap();
                let b = energy_density_closed(xi, &p).unwrap();
                assert!(((a - b) / b).abs() < 1e-10, "{nl:?} xi={xi}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn power_two_matches_quadratic_exponent() {
        let p = ModelParams {
            nonlinearity: Nonlinearity::Power {
                lambda: 0.5,
                n: 2.0,
            },
            g: 3.0,
            ..quad()
        };
        let coeff = energy_exponent_coefficient(&p).unwrap();
        assert!((coeff + p.a_grav() / 4.0).abs() < 1e-15);
        assert_eq!(
            energy_exponent_coefficient(&ModelParams {
                nonlinearity: Nonlinearity::Linear,
                ..quad()
            }),
            None
        );
    }

    #[test]
    fn f_vanishes_at_pole() {
        let p = ModelParams {
            theta: PI,
            ..quad()
        };
        assert_eq!(energy_density_invariant(0.5, &p).unwrap(), 0.0);
    }

    #[test]
    fn current_in_static_gauge() {
        let p = quad();
        for i in 1..=10 {
            let j = current(i as f64 / 10.0, &p).unwrap();
            assert!(j[1].abs() < 1e-10 && j[2].abs() < 1e-10);
            assert_eq!(j[3], 0.0);
            assert!(j[0] > 0.0);
        }
    }

    #[test]
    fn current_off_gauge_is_nonzero() {
        let p = ModelParams {
            alpha2: 0.2,
            ..quad()
        };
        let j = current(0.5, &p).unwrap();
        assert!(j[1].abs() > 1e-6);
        assert_eq!(j[3], 0.0);
    }

    #[test]
    fn charge_routes_agree() {
        let p = quad();
        for i in 1..=10 {
            let xi = i as f64 / 10.0;
            let a = charge_density(xi, &p).unwrap();
            let b = charge_density_from_current(xi, &p).unwrap();
            assert!(((a - b) / a).abs() < 1e-10);
        }
    }

    #[test]
    fn charge_scaling_and_zero_phase() {
        let p = ModelParams {
            nonlinearity: Nonlinearity::Linear,
            m: 0.0,
            r1: 0.0,
            r2: 0.0,
            ..quad()
        };
        let mp = alpha_beta_gamma(0.5, &p).unwrap();
        let q = charge_density(0.5, &p).unwrap();
        assert!((q - 4.0 * 0.25 * (-mp.alpha).exp()).abs() < 1e-15);
        let doubled = ModelParams {
            alpha1: 1.0,
            alpha2: 1.0,
            ..p.clone()
        };
        assert!((charge_density(0.5, &doubled).unwrap() - 4.0 * q).abs() < 1e-14);
    }

    #[test]
    fn gauge_is_required() {
        let p = ModelParams {
            epsilon: 0.5,
            ..quad()
        };
        assert!(matches!(
            charge_density(0.5, &p),
            Err(Error::GaugeNotFixed(_))
        ));
        let p = ModelParams {
            alpha2: 0.4,
            ..quad()
        };
        assert!(matches!(
            charge_density(0.5, &p),
            Err(Error::GaugeNotFixed(_))
        ));
        assert!(observable_record(0.5, &p).unwrap().q.is_nan());
    }

    #[test]
    fn record_composition() {
        let p = quad();
        let r = observable_record(0.3, &p).unwrap();
        let mp = alpha_beta_gamma(0.3, &p).unwrap();
        assert_eq!(
            r.f,
            r.t00 * (mp.alpha + 2.0 * mp.beta).exp() * p.sin_theta()
        );
        assert_eq!(r.j3, 0.0);
        assert!(r.q >= 0.0);
    }

    #[test]
    fn linear_energy_is_zero() {
        let p = ModelParams {
            nonlinearity: Nonlinearity::Linear,
            ..quad()
        };
        assert_eq!(total_energy(&p, 1e-10).unwrap().value, 0.0);
    }

    #[test]
    fn quadratic_energy_converges() {
        let p = quad();
        let coarse = total_energy(&p, 1e-8).unwrap();
        let fine = total_energy(&p, 5e-9).unwrap();
        assert!(coarse.value.is_finite() && coarse.value > 0.0);
        assert!((coarse.value - fine.value).abs() <= coarse.error_bound.max(1e-15));
    }

    #[test]
    fn charge_is_positive() {
        let q = total_charge(&quad(), 1e-8).unwrap();
        assert!(q.value > 0.0);
    }

    #[test]
    fn divergence_is_detected() {
        let p = quad();
        let r = certified_total(|x| Ok(1.0 / x), &p, 1e-10);
        assert!(matches!(r, Err(Error::DivergentIntegral { .. })));
        let ok = certified_total(|x| Ok(x.sqrt()), &p, 1e-10).unwrap();
        assert!((ok.value - 2.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn segments_skip_singularities() {
        let p = ModelParams {
            h: -1.0,
            xi1: 1.0,
            xi_c: 4.0,
            ..quad()
        };
        let segs = integration_segments(&p, 1e-3);
        assert_eq!(segs.len(), 2);
        assert!((segs[0].1 - (PI - 1.0 - 1e-3)).abs() < 1e-12);
        assert!((segs[1].0 - (PI - 1.0 + 1e-3)).abs() < 1e-12);
        assert_eq!(segs[1].1, 4.0);
    }
}
