//! Numerical kernels: central differences, adaptive Gauss–Kronrod quadrature,
//! the incomplete beta integral and brute-force reference integrators used as
//! oracles by the test suites.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Result of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Sum of `|K15 - G7|` over the final partition.
    pub error_bound: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadResult {
    fn zero() -> Self {
        QuadResult {
            value: 0.0,
            error_bound: 0.0,
            evaluations: 0,
            converged: true,
        }
    }
}

/// Derivative order for [`finite_diff`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffOrder {
    First,
    Second,
}

/// Step balancing truncation against rounding: `ε^{1/3}·max(1,|x|)` for the
/// first derivative, `ε^{1/4}·max(1,|x|)` for the second.
pub fn default_step(x: f64, order: DiffOrder) -> f64 {
    let scale = x.abs().max(1.0);
    match order {
        DiffOrder::First => f64::EPSILON.cbrt() * scale,
        DiffOrder::Second => f64::EPSILON.powf(0.25) * scale,
    }
}

/// Three-point central difference. Non-finite values of `f` at any stencil
/// point are reported as [`Error::StencilOutOfDomain`].
pub fn finite_diff<F>(f: F, x: f64, order: DiffOrder, step: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let eval = |t: f64| {
        let v = f(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::StencilOutOfDomain { x: t })
        }
    };
    let fp = eval(x + step)?;
    let fm = eval(x - step)?;
    match order {
        DiffOrder::First => Ok((fp - fm) / (2.0 * step)),
        DiffOrder::Second => {
            let f0 = eval(x)?;
            Ok((fp - 2.0 * f0 + fm) / (step * step))
        }
    }
}

/// Fallible variant of [`finite_diff`] for functions that can leave their domain.
pub fn finite_diff_try<F>(f: F, x: f64, order: DiffOrder, step: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let fp = f(x + step)?;
    let fm = f(x - step)?;
    match order {
        DiffOrder::First => Ok((fp - fm) / (2.0 * step)),
        DiffOrder::Second => Ok((fp - 2.0 * f(x)? + fm) / (step * step)),
    }
}

// Gauss–Kronrod 7/15 abscissae on [-1, 1] (non-negative half) and weights.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for the 7-point rule; its nodes are XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    // Largest error first; ties broken by position so the order is total.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Default cap on the number of panels.
pub const MAX_PANELS: usize = 4000;

/// Globally adaptive Gauss–Kronrod (7/15) quadrature of `f` over `[a, b]`.
///
/// The panel with the largest `|K15 - G7|` is bisected until the summed
/// estimate falls below `tol`. Endpoints are never evaluated, so integrable
/// endpoint singularities are handled by repeated shrinking of the end panel.
/// The partition order is fixed, so results are bit-reproducible.
pub fn adaptive_quad<F>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    adaptive_quad_limit(f, a, b, tol, MAX_PANELS)
}

pub fn adaptive_quad_limit<F>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!(
            "integration limits must be finite: [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(QuadResult::zero());
    }
    if b < a {
        return adaptive_quad_limit(f, b, a, tol, max_panels)
            .map(|r| QuadResult {
                value: -r.value,
                ..r
            })
            .map_err(|e| match e {
                Error::MaxSubdivisions { partial } => Error::MaxSubdivisions {
                    partial: QuadResult {
                        value: -partial.value,
                        ..partial
                    },
                },
                other => other,
            });
    }

    let mut heap = BinaryHeap::new();
    let (v, e) = gk15(&f, a, b);
    heap.push(Panel {
        a,
        b,
        value: v,
        error: e,
    });
    let mut evaluations = 15;
    let mut total_err = e;

    loop {
        if total_err <= tol {
            break;
        }
        if heap.len() >= max_panels {
            let partial = summarize(&heap, evaluations, false);
            return Err(Error::MaxSubdivisions { partial });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // Panel cannot be split any further in floating point.
            heap.push(worst);
            let partial = summarize(&heap, evaluations, false);
            return Err(Error::MaxSubdivisions { partial });
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        evaluations += 30;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
        // Recompute rather than update incrementally to avoid drift.
        total_err = heap.iter().map(|p| p.error).sum();
    }

    let result = summarize(&heap, evaluations, true);
    if !result.value.is_finite() {
        return Err(Error::Domain(format!("integrand not finite on [{a}, {b}]")));
    }
    Ok(result)
}

fn summarize(heap: &BinaryHeap<Panel>, evaluations: usize, converged: bool) -> QuadResult {
    // Sum in left-to-right order so the result does not depend on heap layout.
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = panels.iter().map(|p| p.value).sum();
    let error_bound = panels.iter().map(|p| p.error).sum();
    QuadResult {
        value,
        error_bound,
        evaluations,
        converged,
    }
}

/// Unnormalized lower incomplete beta integral
/// `∫₀^upper y^(p-1) (1-y)^(q-1) dy`.
///
/// The interval is split at ½; on each side the power singularity is removed
/// by the substitution `y = s^(1/p)` (resp. `1-y = t^(1/q)`), leaving smooth
/// integrands for the Gauss–Kronrod rule.
pub fn incomplete_beta(upper: f64, p: f64, q: f64, tol: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&upper) {
        return Err(Error::Domain(format!(
            "incomplete beta upper limit {upper} outside [0, 1]"
        )));
    }
    if !(p > 0.0 && q > 0.0) {
        return Err(Error::Domain(format!(
            "incomplete beta parameters must be positive: p={p}, q={q}"
        )));
    }
    if upper == 0.0 {
        return Ok(0.0);
    }
    let lower_end = upper.min(0.5);
    let left = adaptive_quad(
        |s| (1.0 - s.powf(1.0 / p)).powf(q - 1.0) / p,
        0.0,
        lower_end.powf(p),
        0.5 * tol,
    )?;
    let mut total = left.value;
    if upper > 0.5 {
        let right = adaptive_quad(
            |t| (1.0 - t.powf(1.0 / q)).powf(p - 1.0) / q,
            (1.0 - upper).powf(q),
            0.5f64.powf(q),
            0.5 * tol,
        )?;
        total += right.value;
    }
    Ok(total)
}

/// Composite midpoint rule with `panels` equal panels.
pub fn midpoint_rule<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for i in 0..panels {
        sum += f(a + (i as f64 + 0.5) * h);
    }
    sum * h
}

/// Brute-force reference for [`incomplete_beta`]: midpoint Riemann sums on
/// the raw variable with the leading power singularity at each endpoint
/// subtracted and integrated analytically.
pub fn incomplete_beta_riemann(upper: f64, p: f64, q: f64, panels: usize) -> f64 {
    if upper == 0.0 {
        return 0.0;
    }
    let lower_end = upper.min(0.5);
    // y^(p-1)[(1-y)^(q-1) - 1] + y^(p-1)
    let left = midpoint_rule(
        |y| y.powf(p - 1.0) * ((1.0 - y).powf(q - 1.0) - 1.0),
        0.0,
        lower_end,
        panels,
    ) + lower_end.powf(p) / p;
    if upper <= 0.5 {
        return left;
    }
    // substitute z = 1 - y on [1/2, upper] → z ∈ [1-upper, 1/2]
    let z0 = 1.0 - upper;
    let right = midpoint_rule(
        |z| z.powf(q - 1.0) * ((1.0 - z).powf(p - 1.0) - 1.0),
        z0,
        0.5,
        panels,
    ) + (0.5f64.powf(q) - z0.powf(q)) / q;
    left + right
}
