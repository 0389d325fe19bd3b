//! Simonenko order `σ(r) = r·D⁻ω(r)/ω(r)`, the local modulus
//! `K(r) = 8ω(r)/r²` and the order barrier near zero.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::{ConvexGenerator, GeneratorInfo, GeneratorSpec};
use crate::interp::MonotoneCubic;
use crate::modulus::{closed_form_derivative, modulus_brute_force, modulus_closed_form, ModulusCurve, SearchConfig};
use crate::output::{fmt_f64, fmt_opt, to_json};
use crate::simplex::PNorm;
use crate::special::cosine_integral;

/// `ω` values at or below this make `σ` undefined.
pub const DEGENERATE_OMEGA: f64 = 1e-14;
/// Barrier threshold `2 − 0.05`.
pub const BARRIER_THRESHOLD: f64 = 1.95;
/// `κ` estimates below this count as `κ = 0`.
pub const C1_THRESHOLD: f64 = 1e-2;
/// Largest range of `K` over the smallest grid points that counts as converged.
pub const C2_RANGE: f64 = 1e-2;
/// Number of smallest grid points used for limits at zero.
pub const TAIL_POINTS: usize = 10;
/// Relative tolerance of the power sandwich.
pub const SANDWICH_TOL: f64 = 1e-6;

/// A modulus as a function of `r`, with an optional exact derivative.
pub trait ModulusFunction: Sync {
    fn omega(&self, r: f64) -> Result<f64>;

    /// Exact `ω′(r)` where one is registered.
    fn derivative(&self, _r: f64) -> Option<f64> {
        None
    }

    fn domain_max(&self) -> f64;
}

/// Closed-form modulus of a built-in generator.
#[derive(Debug, Clone, Copy)]
pub struct ClosedFormModulus {
    pub spec: GeneratorSpec,
    pub p: PNorm,
}

impl ClosedFormModulus {
    pub fn new(spec: GeneratorSpec, p: PNorm) -> Result<Self> {
        modulus_closed_form(&spec, p, 0.0)?;
        Ok(ClosedFormModulus { spec, p })
    }
}

impl ModulusFunction for ClosedFormModulus {
    fn omega(&self, r: f64) -> Result<f64> {
        modulus_closed_form(&self.spec, self.p, r)
    }

    fn derivative(&self, r: f64) -> Option<f64> {
        closed_form_derivative(&self.spec, self.p, r).ok()
    }

    fn domain_max(&self) -> f64 {
        self.p.diameter()
    }
}

/// Modulus evaluated by brute-force search at every requested `r`.
pub struct BruteForceModulus<'a, G: ?Sized> {
    pub generator: &'a G,
    pub p: PNorm,
    pub config: SearchConfig,
}

impl<G: ConvexGenerator + ?Sized> ModulusFunction for BruteForceModulus<'_, G> {
    fn omega(&self, r: f64) -> Result<f64> {
        Ok(modulus_brute_force(self.generator, self.p, r, &self.config)?.omega)
    }

    fn domain_max(&self) -> f64 {
        self.p.diameter()
    }
}

/// Interpolated sampled curve.
pub struct CurveModulus {
    interp: MonotoneCubic,
}

impl CurveModulus {
    pub fn new(curve: &ModulusCurve) -> Result<Self> {
        Ok(CurveModulus { interp: curve.interpolant()? })
    }
}

impl ModulusFunction for CurveModulus {
    fn omega(&self, r: f64) -> Result<f64> {
        if r < 0.0 || r > self.interp.x_max() {
            return Err(Error::Domain(format!("r = {r} outside the sampled curve")));
        }
        Ok(self.interp.eval(r))
    }

    fn domain_max(&self) -> f64 {
        self.interp.x_max()
    }
}

/// `ω(r) = c·r^a`.
#[derive(Debug, Clone, Copy)]
pub struct PowerModulus {
    pub c: f64,
    pub a: f64,
    pub max: f64,
}

impl ModulusFunction for PowerModulus {
    fn omega(&self, r: f64) -> Result<f64> {
        Ok(self.c * r.powf(self.a))
    }

    fn derivative(&self, r: f64) -> Option<f64> {
        Some(self.c * self.a * r.powf(self.a - 1.0))
    }

    fn domain_max(&self) -> f64 {
        self.max
    }
}

/// Any closure, without a derivative.
pub struct FnModulus<F> {
    pub f: F,
    pub max: f64,
}

impl<F: Fn(f64) -> f64 + Sync> ModulusFunction for FnModulus<F> {
    fn omega(&self, r: f64) -> Result<f64> {
        Ok((self.f)(r))
    }

    fn domain_max(&self) -> f64 {
        self.max
    }
}

/// `ω(r) = r·sin(1/r) − Ci(1/r) + r`, with `ω(0) = 0`.
///
/// Non-decreasing with `ω′(r) = 1 + sin(1/r)`, linear near zero on average,
/// yet its order keeps returning to 2.
#[derive(Debug, Clone, Copy, Default)]
pub struct CounterexampleOmega;

impl ModulusFunction for CounterexampleOmega {
    fn omega(&self, r: f64) -> Result<f64> {
        if r < 0.0 || !r.is_finite() {
            return Err(Error::Domain(format!("counterexample needs r >= 0, got {r}")));
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        let z = 1.0 / r;
        Ok(r * z.sin() - cosine_integral(z)? + r)
    }

    fn derivative(&self, r: f64) -> Option<f64> {
        (r > 0.0).then(|| 1.0 + (1.0 / r).sin())
    }

    fn domain_max(&self) -> f64 {
        1.0
    }
}

// ---------------------------------------------------------------------------
// Dini derivative and order
// ---------------------------------------------------------------------------

/// Backward step sizes `ε = factor·r` of the Dini estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiniConfig {
    pub factors: Vec<f64>,
    /// Use a registered exact derivative when there is one.
    pub use_analytic: bool,
}

impl Default for DiniConfig {
    fn default() -> Self {
        DiniConfig { factors: vec![1e-3, 3e-4, 1e-4, 3e-5, 1e-5], use_analytic: true }
    }
}

/// Upper left Dini derivative `limsup_{ε↓0} (ω(r) − ω(r − ε))/ε`, estimated
/// as the largest backward quotient over the last five steps.
pub fn dini_left_derivative<M: ModulusFunction + ?Sized>(m: &M, r: f64, cfg: &DiniConfig) -> Result<f64> {
    if !(r > 0.0) || r > m.domain_max() + 1e-12 {
        return Err(Error::Domain(format!("left derivative needs r in (0, {}], got {r}", m.domain_max())));
    }
    if cfg.use_analytic {
        if let Some(d) = m.derivative(r) {
            return Ok(d);
        }
    }
    if cfg.factors.is_empty() || cfg.factors.iter().any(|&f| !(f > 0.0 && f < 1.0)) {
        return Err(Error::Input("Dini factors must lie in (0, 1)".into()));
    }
    let w = m.omega(r)?;
    let tail = &cfg.factors[cfg.factors.len().saturating_sub(5)..];
    let mut best = f64::NEG_INFINITY;
    for &f in tail {
        let eps = f * r;
        best = best.max((w - m.omega(r - eps)?) / eps);
    }
    Ok(best)
}

/// `σ(r) = r·D⁻ω(r)/ω(r)`.
pub fn simonenko_order<M: ModulusFunction + ?Sized>(m: &M, r: f64, cfg: &DiniConfig) -> Result<f64> {
    let w = m.omega(r)?;
    if w <= DEGENERATE_OMEGA {
        return Err(Error::Degenerate(format!("omega({r}) = {w} is too small for the order")));
    }
    Ok(r * dini_left_derivative(m, r, cfg)? / w)
}

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderPoint {
    pub r: f64,
    pub omega: f64,
    /// `None` where `ω` is below the degeneracy threshold.
    pub sigma: Option<f64>,
    #[serde(rename = "K")]
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderProfile {
    pub label: String,
    pub points: Vec<OrderPoint>,
    pub kappa_estimate: f64,
    /// Max of `σ` over the smallest grid points.
    pub limsup_sigma: Option<f64>,
    /// Min of `σ` over the smallest grid points.
    pub liminf_sigma: Option<f64>,
    pub dini: DiniConfig,
    pub analytic_derivative: bool,
    pub diagnostics: Vec<String>,
}

impl OrderProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,omega,sigma,K\n");
        for pt in &self.points {
            out.push_str(&format!("{},{},{},{}\n", fmt_f64(pt.r), fmt_f64(pt.omega), fmt_opt(pt.sigma), fmt_f64(pt.k)));
        }
        out
    }

    pub fn min_r(&self) -> Option<f64> {
        self.points.first().map(|pt| pt.r)
    }

    // the smallest grid points, in increasing r
    fn tail(&self) -> &[OrderPoint] {
        &self.points[..self.points.len().min(TAIL_POINTS)]
    }
}

/// `σ` and `K` on an increasing grid in `(0, max]`.
pub fn order_profile<M: ModulusFunction + ?Sized>(
    m: &M,
    label: &str,
    r_grid: &[f64],
    cfg: &DiniConfig,
) -> Result<OrderProfile> {
    if r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input("r grid must be strictly increasing".into()));
    }
    if let Some(&r) = r_grid.iter().find(|&&r| !(r > 0.0) || r > m.domain_max() + 1e-12) {
        return Err(Error::Domain(format!("order grid point {r} outside (0, {}]", m.domain_max())));
    }
    let mut points = Vec::with_capacity(r_grid.len());
    let mut diagnostics = Vec::new();
    let mut analytic = cfg.use_analytic;
    for &r in r_grid {
        let omega = m.omega(r)?;
        let sigma = match simonenko_order(m, r, cfg) {
            Ok(s) => Some(s),
            Err(Error::Degenerate(msg)) => {
                diagnostics.push(msg);
                None
            }
            Err(e) => return Err(e),
        };
        if m.derivative(r).is_none() {
            analytic = false;
        }
        points.push(OrderPoint { r, omega, sigma, k: 8.0 * omega / (r * r) });
    }
    let kappa_estimate = points.iter().map(|pt| pt.k).fold(f64::INFINITY, f64::min);
    let mut profile = OrderProfile {
        label: label.to_string(),
        points,
        kappa_estimate,
        limsup_sigma: None,
        liminf_sigma: None,
        dini: cfg.clone(),
        analytic_derivative: analytic,
        diagnostics,
    };
    let tail: Vec<f64> = profile.tail().iter().filter_map(|pt| pt.sigma).collect();
    profile.limsup_sigma = tail.iter().copied().reduce(f64::max);
    profile.liminf_sigma = tail.iter().copied().reduce(f64::min);
    Ok(profile)
}

/// Profile of a generator: exact closed form and derivative where available,
/// brute force with finite differences otherwise.
pub fn generator_order_profile<G: ConvexGenerator + ?Sized>(
    g: &G,
    p: PNorm,
    r_grid: &[f64],
    dini: &DiniConfig,
    search: &SearchConfig,
) -> Result<OrderProfile> {
    let info = g.info();
    let label = info_label(&info, p);
    if let Some(spec) = g.as_spec() {
        if let Ok(cf) = ClosedFormModulus::new(*spec, p) {
            return order_profile(&cf, &label, r_grid, dini);
        }
    }
    let bf = BruteForceModulus { generator: g, p, config: *search };
    order_profile(&bf, &label, r_grid, dini)
}

fn info_label(info: &GeneratorInfo, p: PNorm) -> String {
    match info.alpha {
        Some(a) => format!("{} alpha={a} N={} p={p}", info.family, info.n),
        None => format!("{} N={} p={p}", info.family, info.n),
    }
}

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub r0: f64,
    pub s: Option<f64>,
    #[serde(rename = "S")]
    pub big_s: Option<f64>,
    /// Largest relative violation of either bound.
    pub worst_violation: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
    /// `ω(r)·r^{−s}` non-decreasing and `ω(r)·r^{−S}` non-increasing on the grid.
    pub monotone_holds: bool,
    pub inconclusive: bool,
    pub pass: bool,
}

/// Power sandwich `[ω(r₀)/r₀^S]·r^S ≤ ω(r) ≤ [ω(r₀)/r₀^s]·r^s` for grid
/// `r ≤ r₀`, with `s`, `S` the extreme orders on `(0, r₀]`.
pub fn power_sandwich_check(profile: &OrderProfile, r0: f64) -> Result<SandwichReport> {
    let pts: Vec<&OrderPoint> = profile.points.iter().filter(|pt| pt.r <= r0 * (1.0 + 1e-12)).collect();
    let anchor = pts
        .last()
        .copied()
        .filter(|pt| (pt.r - r0).abs() <= 1e-9 * r0.max(1.0))
        .ok_or_else(|| Error::Input(format!("r0 = {r0} is not a grid point of the profile")))?;
    let sigmas: Vec<f64> = pts.iter().filter_map(|pt| pt.sigma).collect();
    let s = sigmas.iter().copied().reduce(f64::min);
    let big_s = sigmas.iter().copied().reduce(f64::max);
    let mut report = SandwichReport {
        r0,
        s,
        big_s,
        worst_violation: 0.0,
        lower_holds: true,
        upper_holds: true,
        monotone_holds: true,
        inconclusive: false,
        pass: false,
    };
    let (Some(s), Some(big_s)) = (s, big_s) else {
        report.inconclusive = true;
        return Ok(report);
    };
    if !big_s.is_finite() || sigmas.len() != pts.len() {
        report.inconclusive = true;
        return Ok(report);
    }
    let w0 = anchor.omega;
    for pt in &pts {
        let ratio = pt.r / r0;
        let lower = w0 * ratio.powf(big_s);
        let upper = w0 * ratio.powf(s);
        let scale = pt.omega.abs().max(f64::MIN_POSITIVE);
        let lo_v = (lower - pt.omega) / scale;
        let up_v = (pt.omega - upper) / scale;
        report.worst_violation = report.worst_violation.max(lo_v).max(up_v);
        if lo_v > SANDWICH_TOL {
            report.lower_holds = false;
        }
        if up_v > SANDWICH_TOL {
            report.upper_holds = false;
        }
    }
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let inc = |e: f64| (b.omega * b.r.powf(-e), a.omega * a.r.powf(-e));
        let (hb, ha) = inc(s);
        if hb < ha * (1.0 - SANDWICH_TOL) {
            report.monotone_holds = false;
        }
        let (hb, ha) = inc(big_s);
        if hb > ha * (1.0 + SANDWICH_TOL) {
            report.monotone_holds = false;
        }
    }
    report.pass = report.lower_holds && report.upper_holds && report.monotone_holds;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierReport {
    pub kappa: f64,
    pub limsup_sigma: Option<f64>,
    pub liminf_sigma: Option<f64>,
    #[serde(rename = "C1")]
    pub c1: bool,
    #[serde(rename = "C2")]
    pub c2: bool,
    /// `liminf` when both conditions hold, `limsup` otherwise.
    pub statistic: &'static str,
    pub threshold: f64,
    pub r_min: Option<f64>,
    pub inconclusive: bool,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl BarrierReport {
    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }
}

/// Order barrier near zero: `limsup σ ≥ 2`, and `liminf σ ≥ 2` when `κ > 0`
/// and `K` converges.
pub fn order_barrier_check(profile: &OrderProfile) -> BarrierReport {
    let tail = profile.tail();
    let ks: Vec<f64> = tail.iter().map(|pt| pt.k).collect();
    let c1 = profile.kappa_estimate >= C1_THRESHOLD;
    let k_range = ks.iter().copied().fold(f64::NEG_INFINITY, f64::max) - ks.iter().copied().fold(f64::INFINITY, f64::min);
    let c2 = !ks.is_empty() && k_range.is_finite() && k_range < C2_RANGE;
    let (statistic, estimate) = if c1 && c2 { ("liminf", profile.liminf_sigma) } else { ("limsup", profile.limsup_sigma) };
    let mut notes = Vec::new();
    let mut inconclusive = false;
    let r_min = profile.min_r();
    if r_min.is_none_or(|r| r > 1e-3) {
        inconclusive = true;
        notes.push("grid does not reach r <= 1e-3".to_string());
    }
    if estimate.is_none() {
        inconclusive = true;
        notes.push("no order value near zero (omega below the degeneracy threshold)".to_string());
    }
    if tail.iter().any(|pt| pt.sigma.is_none()) {
        notes.push("some small-r points have degenerate omega".to_string());
    }
    let pass = !inconclusive && estimate.is_some_and(|e| e >= BARRIER_THRESHOLD);
    BarrierReport {
        kappa: profile.kappa_estimate,
        limsup_sigma: profile.limsup_sigma,
        liminf_sigma: profile.liminf_sigma,
        c1,
        c2,
        statistic,
        threshold: BARRIER_THRESHOLD,
        r_min,
        inconclusive,
        pass,
        notes,
    }
}

// ---------------------------------------------------------------------------
// Counterexample
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub nondecreasing: bool,
    pub min_derivative: f64,
    /// Max of `σ` over grid `r ≤ 0.1`.
    pub max_sigma_small_r: Option<f64>,
    pub max_omega_over_r: f64,
    pub pass: bool,
}

/// Samples the counterexample on `r_grid ⊂ (0, 1]`.
pub fn counterexample_curve(r_grid: &[f64]) -> Result<(ModulusCurve, OrderProfile, CounterexampleReport)> {
    let m = CounterexampleOmega;
    if r_grid.first().is_some_and(|&r| r < 1e-4) {
        return Err(Error::Domain("counterexample grid must stay above 1e-4".into()));
    }
    let profile = order_profile(&m, "counterexample", r_grid, &DiniConfig::default())?;
    let info = GeneratorInfo { family: "counterexample".to_string(), alpha: None, n: 0 };
    let omegas: Vec<f64> = profile.points.iter().map(|pt| pt.omega).collect();
    let curve = ModulusCurve::from_values(info, PNorm::ONE, true, r_grid, &omegas)?;
    let min_derivative = r_grid.iter().filter_map(|&r| m.derivative(r)).fold(f64::INFINITY, f64::min);
    let nondecreasing = omegas.windows(2).all(|w| w[1] >= w[0]) && min_derivative >= 0.0;
    let max_sigma_small_r = profile.points.iter().filter(|pt| pt.r <= 0.1).filter_map(|pt| pt.sigma).reduce(f64::max);
    let max_omega_over_r = profile.points.iter().map(|pt| pt.omega / pt.r).fold(0.0, f64::max);
    let pass = nondecreasing && max_sigma_small_r.is_some_and(|s| s >= BARRIER_THRESHOLD) && max_omega_over_r.is_finite();
    Ok((curve, profile, CounterexampleReport { nondecreasing, min_derivative, max_sigma_small_r, max_omega_over_r, pass }))
}
