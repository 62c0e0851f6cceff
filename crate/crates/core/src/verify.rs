//! Residual suites, constraint calibration and localization certificates.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metric::{alpha_beta_gamma, invariant_s, uniform_grid, valid_window};
use crate::model::{fmt_real, ModelParams, Nonlinearity};
use crate::numerics::QuadResult;
use crate::observables::{
    charge_density, energy_density_invariant, energy_exponent_coefficient, gauge_fixed, t00_of_s,
    t11_of_s, total_charge, total_energy, volume_factor,
};
use crate::spinor::{second_order_residual, u_equation_residuals, v_equation_residuals, DiracMode};

/// Tolerance for identities between analytic derivatives.
pub const GEOMETRIC_TOL: f64 = 1e-9;
/// Tolerance for exact algebraic relations between the exponents.
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Tolerance for field-equation residuals.
pub const FIELD_TOL: f64 = 1e-6;
/// Tolerance for the calibrated constraint at the window center.
pub const CALIBRATION_TOL: f64 = 1e-8;
/// Default number of grid points of a suite.
pub const DEFAULT_GRID: usize = 200;

/// Residuals of one equation along a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationResiduals {
    pub name: String,
    pub xi: Vec<f64>,
    pub residuals: Vec<f64>,
    pub tolerance: f64,
    pub max_abs: f64,
    pub rms: f64,
    pub passed: bool,
}

impl EquationResiduals {
    pub fn new(name: &str, xi: Vec<f64>, residuals: Vec<f64>, tolerance: f64) -> Self {
        let (max_abs, rms) = if residuals.iter().any(|r| !r.is_finite()) {
            (f64::NAN, f64::NAN)
        } else if residuals.is_empty() {
            (0.0, 0.0)
        } else {
            let max = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
            let ms = residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64;
            (max, ms.sqrt())
        };
        EquationResiduals {
            name: name.to_string(),
            xi,
            residuals,
            tolerance,
            max_abs,
            rms,
            passed: max_abs <= tolerance,
        }
    }
}

/// Outcome of one suite.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub suite: String,
    pub equations: Vec<EquationResiduals>,
    /// Free-form key/value lines, e.g. errors met at individual points.
    pub notes: Vec<(String, String)>,
}

impl ResidualReport {
    pub fn passed(&self) -> bool {
        self.equations.iter().all(|e| e.passed)
    }

    pub fn equation(&self, name: &str) -> Option<&EquationResiduals> {
        self.equations.iter().find(|e| e.name == name)
    }

    /// Grid of the first equation.
    pub fn grid(&self) -> &[f64] {
        self.equations.first().map_or(&[], |e| &e.xi)
    }

    pub fn failed_equations(&self) -> Vec<&str> {
        self.equations
            .iter()
            .filter(|e| !e.passed)
            .map(|e| e.name.as_str())
            .collect()
    }

    /// Summary block (`#`-prefixed) followed by `xi,eq_name,residual` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# suite,{}", self.suite);
        let _ = writeln!(out, "# passed,{}", self.passed());
        for e in &self.equations {
            let _ = writeln!(
                out,
                "# equation,{},{},{},{},{}",
                e.name,
                fmt_real(e.tolerance),
                fmt_real(e.max_abs),
                fmt_real(e.rms),
                e.passed
            );
        }
        for (k, v) in &self.notes {
            let _ = writeln!(out, "# note,{},{}", k, v.replace(['\n', ','], " "));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let _ = w.write_record(["xi", "eq_name", "residual"]);
        for e in &self.equations {
            for (x, r) in e.xi.iter().zip(&e.residuals) {
                let _ = w.write_record([fmt_real(*x), e.name.clone(), fmt_real(*r)]);
            }
        }
        out.push_str(&String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default());
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Validation(format!("malformed report: {msg}"));
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(s));
        let mut suite = None;
        let mut specs: Vec<(String, f64)> = Vec::new();
        let mut notes = Vec::new();
        let mut body = String::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("# ") {
                let fields: Vec<&str> = rest.splitn(6, ',').collect();
                match fields[0] {
                    "suite" => suite = fields.get(1).map(|s| s.to_string()),
                    "equation" if fields.len() == 6 => {
                        specs.push((fields[1].to_string(), parse(fields[2])?));
                    }
                    "note" => {
                        let kv: Vec<&str> = rest.splitn(3, ',').collect();
                        if kv.len() == 3 {
                            notes.push((kv[1].to_string(), kv[2].to_string()));
                        }
                    }
                    _ => {}
                }
            } else {
                body.push_str(line);
                body.push('\n');
            }
        }
        let mut data: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); specs.len()];
        let mut rdr = csv::Reader::from_reader(body.as_bytes());
        for rec in rdr.records() {
            let rec = rec.map_err(|e| bad(&e.to_string()))?;
            let name = rec.get(1).ok_or_else(|| bad("missing eq_name"))?;
            let k = specs
                .iter()
                .position(|(n, _)| n == name)
                .ok_or_else(|| bad(name))?;
            data[k].0.push(parse(rec.get(0).unwrap_or(""))?);
            data[k].1.push(parse(rec.get(2).unwrap_or(""))?);
        }
        let equations = specs
            .into_iter()
            .zip(data)
            .map(|((name, tol), (xi, res))| EquationResiduals::new(&name, xi, res, tol))
            .collect();
        Ok(ResidualReport {
            suite: suite.ok_or_else(|| bad("no suite line"))?,
            equations,
            notes,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())
            .map_err(|e| Error::Domain(format!("cannot write {}: {e}", path.display())))
    }
}

/// Uniform grid of `n` points on the singularity-free window.
pub fn default_grid(params: &ModelParams, n: usize) -> Result<Vec<f64>> {
    let (lo, hi) = valid_window(params)?;
    Ok(uniform_grid(lo, hi, n))
}

/// Evaluate `K` residuals per grid point in parallel, turning point
/// failures into NaN entries and notes.
fn collect<const K: usize, F>(
    suite: &str,
    grid: &[f64],
    names: [&str; K],
    tols: [f64; K],
    point: F,
) -> ResidualReport
where
    F: Fn(f64) -> Result<[f64; K]> + Sync,
{
    let rows: Vec<Result<[f64; K]>> = grid.par_iter().map(|&xi| point(xi)).collect();
    let mut notes = Vec::new();
    let mut cols = vec![Vec::with_capacity(grid.len()); K];
    for (xi, row) in grid.iter().zip(rows) {
        match row {
            Ok(r) => {
                for k in 0..K {
                    cols[k].push(r[k]);
                }
            }
            Err(e) => {
                notes.push((format!("error at xi={}", fmt_real(*xi)), e.to_string()));
                for col in cols.iter_mut() {
                    col.push(f64::NAN);
                }
            }
        }
    }
    let equations = names
        .iter()
        .zip(tols)
        .zip(cols)
        .map(|((name, tol), col)| EquationResiduals::new(name, grid.to_vec(), col, tol))
        .collect();
    ResidualReport {
        suite: suite.to_string(),
        equations,
        notes,
    }
}

/// `β'' − γ'' = e^{2β+2γ}`, `α = 2β + γ` and the fixed ratios `β/α`, `γ/α`.
pub fn liouville_suite(params: &ModelParams, grid: &[f64]) -> ResidualReport {
    let g = params.g;
    let rb = (2.0 + g) / (4.0 + 3.0 * g);
    let rg = g / (4.0 + 3.0 * g);
    collect(
        "liouville",
        grid,
        ["liouville", "coordinate", "beta_ratio", "gamma_ratio"],
        [GEOMETRIC_TOL, ALGEBRAIC_TOL, ALGEBRAIC_TOL, ALGEBRAIC_TOL],
        |xi| {
            let mp = alpha_beta_gamma(xi, params)?;
            let e = (2.0 * mp.beta + 2.0 * mp.gamma).exp();
            Ok([
                (mp.d2_beta - mp.d2_gamma - e) / e.max(1.0),
                mp.alpha - 2.0 * mp.beta - mp.gamma,
                mp.beta - rb * mp.alpha,
                mp.gamma - rg * mp.alpha,
            ])
        },
    )
}

/// `G⁰₀`, `G¹₁`, `G²₂` from the analytic metric derivatives.
pub fn einstein_tensor(xi: f64, params: &ModelParams) -> Result<[f64; 3]> {
    let mp = alpha_beta_gamma(xi, params)?;
    let e2a = (-2.0 * mp.alpha).exp();
    let e2b = (-2.0 * mp.beta).exp();
    let (b1, c1) = (mp.d_beta, mp.d_gamma);
    let quad = b1 * b1 + 2.0 * b1 * c1;
    Ok([
        e2a * (2.0 * mp.d2_beta - quad) - e2b,
        e2a * quad - e2b,
        e2a * (mp.d2_beta + mp.d2_gamma - quad),
    ])
}

/// `α'² − k² e^{2α}[e^{-aα} − κ(mS − L_N)]`, `k² = (4+3G)²/(3G²+8G+4)`.
pub fn constraint_residual(xi: f64, params: &ModelParams) -> Result<f64> {
    let mp = alpha_beta_gamma(xi, params)?;
    let s = params.c * (-mp.alpha).exp();
    let g = params.g;
    let k2 = (4.0 + 3.0 * g).powi(2) / params.k3();
    let bracket = (-params.effective_a() * mp.alpha).exp()
        - params.kappa * t11_of_s(s, &params.nonlinearity, params.m)?;
    Ok(mp.d_alpha * mp.d_alpha - k2 * (2.0 * mp.alpha).exp() * bracket)
}

/// Field equations `Gᵘᵤ + κTᵘᵤ`, the `(0,0) − (2,2)` identity and the
/// constraint at the grid center.
pub fn einstein_suite(params: &ModelParams, grid: &[f64]) -> ResidualReport {
    let kappa = params.kappa;
    let mut report = collect(
        "einstein",
        grid,
        [
            "g00_plus_kT00",
            "g11_plus_kT11",
            "g22_plus_kT22",
            "difference_identity",
        ],
        [FIELD_TOL, FIELD_TOL, FIELD_TOL, GEOMETRIC_TOL],
        |xi| {
            let [g00, g11, g22] = einstein_tensor(xi, params)?;
            let mp = alpha_beta_gamma(xi, params)?;
            let s = invariant_s(xi, params)?;
            let t00 = t00_of_s(s, &params.nonlinearity)?;
            let t11 = t11_of_s(s, &params.nonlinearity, params.m)?;
            let liouville = mp.d2_beta - mp.d2_gamma - (2.0 * mp.beta + 2.0 * mp.gamma).exp();
            let diff = (g00 - g22) - (-2.0 * mp.alpha).exp() * liouville;
            let scale = (-2.0 * mp.beta).exp().max(1.0);
            Ok([
                g00 + kappa * t00,
                g11 + kappa * t11,
                g22 + kappa * t00,
                diff / scale,
            ])
        },
    );
    if let (Some(&lo), Some(&hi)) = (grid.first(), grid.last()) {
        let center = 0.5 * (lo + hi);
        let r = constraint_residual(center, params).unwrap_or_else(|e| {
            report
                .notes
                .push(("constraint at center".into(), e.to_string()));
            f64::NAN
        });
        report.equations.push(EquationResiduals::new(
            "constraint_at_center",
            vec![center],
            vec![r],
            CALIBRATION_TOL,
        ));
    }
    report
}

/// First-order system in `S` (four equations), the second-order equation,
/// and the four ξ-equations for `V_ρ`.
pub fn dirac_suite(params: &ModelParams, grid: &[f64], mode: DiracMode) -> Result<ResidualReport> {
    mode.check(params)?;
    let u_tol = match mode {
        DiracMode::Equatorial => 1e-7,
        DiracMode::Reduced => FIELD_TOL,
    };
    let mut report = collect(
        "dirac",
        grid,
        [
            "u_a",
            "u_b",
            "u_c",
            "u_d",
            "second_order",
            "v_a",
            "v_b",
            "v_c",
            "v_d",
        ],
        [
            u_tol, u_tol, u_tol, u_tol, FIELD_TOL, FIELD_TOL, FIELD_TOL, FIELD_TOL, FIELD_TOL,
        ],
        |xi| {
            let s = invariant_s(xi, params)?;
            let u = u_equation_residuals(s, params, mode)?;
            let second = second_order_residual(s, params, mode)?;
            let v = v_equation_residuals(xi, params)?;
            Ok([
                u[0].norm(),
                u[1].norm(),
                u[2].norm(),
                u[3].norm(),
                second,
                v[0].norm(),
                v[1].norm(),
                v[2].norm(),
                v[3].norm(),
            ])
        },
    );
    report.notes.push(("mode".into(), mode.name().into()));
    Ok(report)
}

/// Constant adjusted by [`calibrate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreeConstant {
    H,
    C,
}

impl FreeConstant {
    pub fn name(self) -> &'static str {
        match self {
            FreeConstant::H => "h",
            FreeConstant::C => "C",
        }
    }

    fn get(self, p: &ModelParams) -> f64 {
        match self {
            FreeConstant::H => p.h,
            FreeConstant::C => p.c,
        }
    }

    fn with(self, p: &ModelParams, v: f64) -> ModelParams {
        let mut q = p.clone();
        match self {
            FreeConstant::H => q.h = v,
            FreeConstant::C => q.c = v,
        }
        q
    }
}

impl std::str::FromStr for FreeConstant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "h" => Ok(FreeConstant::H),
            "C" | "c" => Ok(FreeConstant::C),
            other => Err(Error::Validation(format!(
                "free constant must be h or C, got `{other}`"
            ))),
        }
    }
}

/// Calibrated constant together with the residual profile it leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub free: FreeConstant,
    pub value: f64,
    pub center: f64,
    pub center_residual: f64,
    /// `(ξ, residual)` across the window.
    pub profile: Vec<(f64, f64)>,
    pub max_abs: f64,
}

const SCAN_POINTS: usize = 400;
const PROFILE_POINTS: usize = 51;

fn search_range(params: &ModelParams, free: FreeConstant, hi: f64) -> Vec<f64> {
    match free {
        FreeConstant::H => {
            let x_hi = (hi + params.xi1).abs().max(1e-3);
            let lo = -0.999 * std::f64::consts::PI / x_hi;
            let up = 4.0 / x_hi;
            uniform_grid(lo, up, SCAN_POINTS)
        }
        FreeConstant::C => {
            let sign = if params.c < 0.0 { -1.0 } else { 1.0 };
            (0..SCAN_POINTS)
                .map(|i| sign * 10f64.powf(-4.0 + 8.0 * i as f64 / (SCAN_POINTS - 1) as f64))
                .collect()
        }
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    if f(a).abs() <= f(b).abs() {
        a
    } else {
        b
    }
}

fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    for _ in 0..200 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
        if (b - a).abs() <= 1e-15 * (a.abs() + b.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

/// Adjust `h` or `C` so that the (1,1) constraint holds at the center of
/// `window`; the residual profile over the window is returned alongside.
///
/// The scan brackets sign changes of the center residual and bisects the
/// one closest to the configured value; without a sign change it falls
/// back to golden-section on `|residual|`.
pub fn calibrate(
    params: &ModelParams,
    free: FreeConstant,
    window: (f64, f64),
) -> Result<Calibration> {
    let (lo, hi) = window;
    if !(lo <= hi) {
        return Err(Error::Validation(format!(
            "empty calibration window [{lo}, {hi}]"
        )));
    }
    let center = 0.5 * (lo + hi);
    let residual = |v: f64| constraint_residual(center, &free.with(params, v)).unwrap_or(f64::NAN);
    let range = search_range(params, free, hi);
    let values: Vec<f64> = range.iter().map(|&v| residual(v)).collect();
    let current = free.get(params);

    let mut best_bracket: Option<(f64, f64)> = None;
    for k in 0..range.len() - 1 {
        let (ra, rb) = (values[k], values[k + 1]);
        if ra.is_finite() && rb.is_finite() && (ra == 0.0 || (ra > 0.0) != (rb > 0.0)) {
            let dist = |(a, b): (f64, f64)| (0.5 * (a + b) - current).abs();
            let cand = (range[k], range[k + 1]);
            if best_bracket.map_or(true, |b| dist(cand) < dist(b)) {
                best_bracket = Some(cand);
            }
        }
    }
    let value = match best_bracket {
        Some((a, b)) => bisect(&residual, a, b),
        None => {
            let k = values
                .iter()
                .enumerate()
                .filter(|(_, r)| r.is_finite())
                .min_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
                .map(|(k, _)| k)
                .ok_or_else(|| {
                    Error::Domain("constraint undefined over the whole search range".into())
                })?;
            let a = range[k.saturating_sub(1)];
            let b = range[(k + 1).min(range.len() - 1)];
            golden(|v| residual(v).abs(), a, b)
        }
    };
    let center_residual = residual(value);
    if !(center_residual.abs() <= CALIBRATION_TOL) {
        return Err(Error::NoImprovement {
            best: value,
            residual: center_residual,
        });
    }
    let calibrated = free.with(params, value);
    let profile: Vec<(f64, f64)> = uniform_grid(lo, hi, if lo == hi { 1 } else { PROFILE_POINTS })
        .into_iter()
        .map(|xi| (xi, constraint_residual(xi, &calibrated).unwrap_or(f64::NAN)))
        .collect();
    let max_abs = profile.iter().fold(
        0.0f64,
        |m, &(_, r)| if r.is_nan() { f64::NAN } else { m.max(r.abs()) },
    );
    Ok(Calibration {
        free,
        value,
        center,
        center_residual,
        profile,
        max_abs,
    })
}

/// Outcome of a total-integral certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Finite,
    Divergent,
    Failed,
    NotApplicable,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Finite => "finite",
            Verdict::Divergent => "divergent",
            Verdict::Failed => "failed",
            Verdict::NotApplicable => "n/a",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TotalCertificate {
    pub verdict: Verdict,
    pub result: Option<QuadResult>,
    pub detail: String,
}

impl TotalCertificate {
    fn from_result(r: Result<QuadResult>) -> Self {
        match r {
            Ok(q) => TotalCertificate {
                verdict: Verdict::Finite,
                result: Some(q),
                detail: String::new(),
            },
            Err(e @ Error::DivergentIntegral { .. }) => TotalCertificate {
                verdict: Verdict::Divergent,
                result: None,
                detail: e.to_string(),
            },
            Err(e @ Error::GaugeNotFixed(_)) => TotalCertificate {
                verdict: Verdict::NotApplicable,
                result: None,
                detail: e.to_string(),
            },
            Err(e) => TotalCertificate {
                verdict: Verdict::Failed,
                result: None,
                detail: e.to_string(),
            },
        }
    }

    pub fn acceptable(&self) -> bool {
        matches!(self.verdict, Verdict::Finite | Verdict::NotApplicable)
    }
}

/// One row of the decay table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow {
    pub xi: f64,
    pub f: f64,
    /// `q √(−³g)`; NaN outside the static gauge.
    pub q_weighted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationReport {
    pub decay: Vec<DecayRow>,
    pub exponent_coefficient: Option<f64>,
    /// Largest ξ on the decay grid from which `f` keeps decreasing toward ξ = 0.
    pub monotone_from: Option<f64>,
    pub tail_fraction: f64,
    pub localized: bool,
    pub energy: TotalCertificate,
    pub charge: TotalCertificate,
}

impl LocalizationReport {
    pub fn passed(&self) -> bool {
        self.localized && self.energy.acceptable() && self.charge.acceptable()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let total = |c: &TotalCertificate| {
            c.result
                .map_or(("NaN".to_string(), "NaN".to_string()), |q| {
                    (fmt_real(q.value), fmt_real(q.error_bound))
                })
        };
        let (ev, eb) = total(&self.energy);
        let (qv, qb) = total(&self.charge);
        let _ = writeln!(out, "# suite,localization");
        let _ = writeln!(out, "# passed,{}", self.passed());
        let _ = writeln!(
            out,
            "# exponent_coefficient,{}",
            self.exponent_coefficient.map_or("none".into(), fmt_real)
        );
        let _ = writeln!(
            out,
            "# monotone_from,{}",
            self.monotone_from.map_or("none".into(), fmt_real)
        );
        let _ = writeln!(out, "# tail_fraction,{}", fmt_real(self.tail_fraction));
        let _ = writeln!(out, "# localized,{}", self.localized);
        let _ = writeln!(
            out,
            "# total_energy,{ev},{eb},{}",
            self.energy.verdict.name()
        );
        let _ = writeln!(
            out,
            "# total_charge,{qv},{qb},{}",
            self.charge.verdict.name()
        );
        out.push_str("xi,f,q_weighted\n");
        for r in &self.decay {
            let _ = writeln!(
                out,
                "{},{},{}",
                fmt_real(r.xi),
                fmt_real(r.f),
                fmt_real(r.q_weighted)
            );
        }
        out
    }
}

const DECAY_POINTS: usize = 30;

/// Two-pass total: a rough estimate sets a tolerance relative to the value.
fn relative_total<F: Fn(&ModelParams, f64) -> Result<QuadResult>>(
    params: &ModelParams,
    total: F,
) -> Result<QuadResult> {
    let rough = total(params, 1e-6)?;
    let tol = (1e-10 * rough.value.abs()).max(1e-14);
    total(params, tol)
}

/// Decay table of `f` and `q √(−³g)` on `ξ_c 2^{-k}`, totals with
/// certificates and the sign of the energy-density exponent.
pub fn localization_report(params: &ModelParams) -> LocalizationReport {
    let gauge = gauge_fixed(params);
    let decay: Vec<DecayRow> = (0..DECAY_POINTS)
        .map(|k| params.xi_c * 0.5f64.powi(k as i32))
        .filter(|&xi| xi >= params.singular_guard)
        .map(|xi| {
            let f = energy_density_invariant(xi, params).unwrap_or(f64::NAN);
            let q_weighted = if gauge {
                alpha_beta_gamma(xi, params)
                    .and_then(|mp| Ok(charge_density(xi, params)? * volume_factor(&mp, params)))
                    .unwrap_or(f64::NAN)
            } else {
                f64::NAN
            };
            DecayRow { xi, f, q_weighted }
        })
        .collect();

    let mut monotone_from = None;
    if decay.iter().all(|r| r.f.is_finite()) {
        let mut start = decay.len().saturating_sub(1);
        while start > 0 && decay[start - 1].f.abs() >= decay[start].f.abs() {
            start -= 1;
        }
        monotone_from = decay.get(start).map(|r| r.xi);
    }

    let energy = TotalCertificate::from_result(relative_total(params, total_energy));
    let charge = TotalCertificate::from_result(relative_total(params, total_charge));

    let tail_fraction = match (&energy.result, params.nonlinearity) {
        (_, Nonlinearity::Linear) => 0.0,
        (Some(e), _) if e.value != 0.0 => {
            let tail_params = ModelParams {
                xi_c: params.xi_c / 100.0,
                ..params.clone()
            };
            total_energy(&tail_params, 1e-10 * e.value.abs())
                .map(|t| (t.value / e.value).abs())
                .unwrap_or(f64::NAN)
        }
        _ => f64::NAN,
    };
    let localized = monotone_from.is_some() && tail_fraction < 0.01;
    LocalizationReport {
        decay,
        exponent_coefficient: energy_exponent_coefficient(params),
        monotone_from,
        tail_fraction,
        localized,
        energy,
        charge,
    }
}
