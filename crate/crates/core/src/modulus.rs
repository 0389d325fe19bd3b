//! Modulus of convexity `ω(r) = inf { J(q, q̌) : ‖q − q̌‖_p = r }`.
//!
//! Closed forms exist for every built-in family on the binary simplex and for
//! Shannon entropy with `p = 2` in any dimension. Everything else goes through
//! the brute-force search: an exact one-dimensional scan for `N = 2` and a
//! multi-start pattern search for `N ≥ 3`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::{ConvexGenerator, Family, GeneratorInfo, GeneratorSpec};
use crate::interp::MonotoneCubic;
use crate::output::{fmt_f64, to_json};
use crate::proper_loss::{bregman, jensen_raw, Witness};
use crate::simplex::{diff_norm, lex_cmp, pair_at_distance, sample_point, stream_rng, PNorm, ProbVec, SimplexPair};

/// Slack allowed on `r` above the diameter before it is a domain error.
pub const DIAMETER_SLACK: f64 = 1e-12;
/// Bisection tolerance of [`inverse_modulus`].
pub const INVERSE_TOL: f64 = 1e-10;
/// Tolerance of the regret lower bound `ω(‖q − q̂‖) ≤ R/2`.
pub const REGRET_BOUND_TOL: f64 = 1e-9;
/// Objective values closer than this are treated as ties between minimizers.
const TIE_TOL: f64 = 1e-13;

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

/// Table form `h(t)` and its derivative, in the half-distance parameter
/// `t = |q₁ − q̌₁| ∈ [0, 1]`.
fn shannon_h(t: f64) -> (f64, f64) {
    let xlx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    let h = xlx((1.0 + t) / 2.0) + xlx((1.0 - t) / 2.0) + std::f64::consts::LN_2;
    let dh = if t < 1.0 { 0.5 * ((1.0 + t) / (1.0 - t)).ln() } else { f64::INFINITY };
    (h.max(0.0), dh)
}

// ‖(a, b)‖_α and its derivative for a, b ≥ 0 moving at rates da, db
fn norm2(a: f64, da: f64, b: f64, db: f64, alpha: f64) -> (f64, f64) {
    let n = (a.powf(alpha) + b.powf(alpha)).powf(1.0 / alpha);
    if n == 0.0 {
        return (0.0, 0.0);
    }
    let dn = (a.powf(alpha - 1.0) * da + b.powf(alpha - 1.0) * db) / n.powf(alpha - 1.0);
    (n, dn)
}

fn table_form(spec: &GeneratorSpec, t: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("half-distance {t} outside [0, 1]")));
    }
    let a = spec.alpha().unwrap_or(1.0);
    let out = match spec.family() {
        Family::Shannon => shannon_h(t),
        Family::SquaredAlphaNorm if a < 2.0 => {
            let (n, dn) = norm2(1.0 + t, 1.0, 1.0 - t, -1.0, a);
            (0.25 * n * n - 4f64.powf(1.0 / a - 1.0), 0.5 * n * dn)
        }
        Family::SquaredAlphaNorm => {
            let (na, dna) = norm2(t, 1.0, 1.0 - t, -1.0, a);
            let (nb, dnb) = norm2(t, 1.0, 2.0 - t, -1.0, a);
            (0.5 * na * na - 0.25 * nb * nb + 0.5, na * dna - 0.5 * nb * dnb)
        }
        Family::AlphaNorm if a < 2.0 => {
            return Err(Error::Unsupported(format!("alpha-norm with alpha = {a} < 2 has no closed form in general")));
        }
        Family::AlphaNorm => {
            let (na, dna) = norm2(t, 1.0, 1.0 - t, -1.0, a);
            let (nb, dnb) = norm2(t, 1.0, 2.0 - t, -1.0, a);
            (0.5 * na - 0.5 * nb + 0.5, 0.5 * dna - 0.5 * dnb)
        }
        Family::Tsallis if (2.0..=3.0).contains(&a) => {
            let h = 0.5 * (t.powf(a) + (1.0 - t).powf(a)) - 2f64.powf(-a) * (t.powf(a) + (2.0 - t).powf(a)) + 0.5;
            let dh = 0.5 * a * (t.powf(a - 1.0) - (1.0 - t).powf(a - 1.0))
                - 2f64.powf(-a) * a * (t.powf(a - 1.0) - (2.0 - t).powf(a - 1.0));
            (h, dh)
        }
        Family::Tsallis => {
            let h = 2f64.powf(-a) * ((1.0 + t).powf(a) + (1.0 - t).powf(a)) - 2f64.powf(1.0 - a);
            let dh = 2f64.powf(-a) * a * ((1.0 + t).powf(a - 1.0) - (1.0 - t).powf(a - 1.0));
            (h, dh)
        }
        Family::MaxPower if a < 2.0 => {
            let d = t - 0.5;
            let h = 0.5 * d.abs().powf(a) - 2f64.powf(-a) * (1.0 - t).powf(a) + 2f64.powf(-1.0 - a);
            let dh = 0.5 * a * d.abs().powf(a - 1.0) * d.signum() + 2f64.powf(-a) * a * (1.0 - t).powf(a - 1.0);
            (h, dh)
        }
        Family::MaxPower => ((t / 2.0).powf(a), 0.5 * a * (t / 2.0).powf(a - 1.0)),
    };
    Ok((out.0.max(0.0), out.1))
}

/// The binary-simplex table expression evaluated at the half-distance
/// `t = |q₁ − q̌₁|`, without the conversion to p-norm distance.
pub fn table1_expression(spec: &GeneratorSpec, t: f64) -> Result<f64> {
    Ok(table_form(spec, t)?.0)
}

// r ↦ t for the supported combinations
fn closed_form_scale(spec: &GeneratorSpec, p: PNorm) -> Result<f64> {
    if spec.dim() == 2 {
        // on the binary simplex ‖q − q̌‖_p = 2^{1/p} |q₁ − q̌₁| for every p
        if spec.family() == Family::AlphaNorm && spec.alpha().unwrap_or(0.0) < 2.0 {
            table_form(spec, 0.0)?;
        }
        return Ok(p.diameter());
    }
    if spec.family() == Family::Shannon && p == PNorm::TWO {
        return Ok(std::f64::consts::SQRT_2);
    }
    Err(Error::Unsupported(format!(
        "no closed form for {} with N = {} and p = {p}",
        spec.family(),
        spec.dim()
    )))
}

fn check_r(r: f64, p: PNorm) -> Result<f64> {
    let d = p.diameter();
    if !r.is_finite() || r < 0.0 || r > d + DIAMETER_SLACK {
        return Err(Error::Domain(format!("r = {r} outside [0, {d}]")));
    }
    Ok(r.min(d))
}

/// Closed-form `ω(r)` in p-norm distance.
pub fn modulus_closed_form(spec: &GeneratorSpec, p: PNorm, r: f64) -> Result<f64> {
    let s = closed_form_scale(spec, p)?;
    let r = check_r(r, p)?;
    Ok(table_form(spec, (r / s).min(1.0))?.0)
}

/// Closed-form `ω′(r)`.
pub fn closed_form_derivative(spec: &GeneratorSpec, p: PNorm, r: f64) -> Result<f64> {
    let s = closed_form_scale(spec, p)?;
    let r = check_r(r, p)?;
    Ok(table_form(spec, (r / s).min(1.0))?.1 / s)
}

pub fn has_closed_form(spec: &GeneratorSpec, p: PNorm) -> bool {
    closed_form_scale(spec, p).is_ok()
}

// ---------------------------------------------------------------------------
// Brute force
// ---------------------------------------------------------------------------

/// Budget of the brute-force search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Midpoints of the `N = 2` scan.
    pub scan_points: usize,
    /// Golden-section tolerance on the midpoint.
    pub tol: f64,
    /// Random restarts for `N ≥ 3`.
    pub restarts: usize,
    pub seed: u64,
    pub step_max: f64,
    pub step_min: f64,
    /// Objective evaluations per restart.
    pub max_evals: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            scan_points: 2001,
            tol: 1e-10,
            restarts: 64,
            seed: 0,
            step_max: 1e-1,
            step_min: 1e-7,
            max_evals: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceResult {
    pub omega: f64,
    pub minimizer: SimplexPair,
    /// True when the search is not exhaustive (`N ≥ 3`).
    pub heuristic: bool,
}

/// Minimizes `J` over pairs at exact distance `r`.
pub fn modulus_brute_force<G: ConvexGenerator + ?Sized>(g: &G, p: PNorm, r: f64, cfg: &SearchConfig) -> Result<BruteForceResult> {
    brute_force_indexed(g, p, r, cfg, 0)
}

fn brute_force_indexed<G: ConvexGenerator + ?Sized>(
    g: &G,
    p: PNorm,
    r: f64,
    cfg: &SearchConfig,
    r_index: u64,
) -> Result<BruteForceResult> {
    let r = check_r(r, p)?;
    let n = g.dim();
    if r == 0.0 {
        let u = ProbVec::uniform(n)?;
        return Ok(BruteForceResult { omega: 0.0, minimizer: SimplexPair::new(u.clone(), u, p)?, heuristic: false });
    }
    if n == 2 {
        scan_binary(g, p, r, cfg)
    } else {
        pattern_search(g, p, r, cfg, r_index)
    }
}

fn binary_pair(m: f64, t: f64) -> ([f64; 2], [f64; 2]) {
    let hi = (m + 0.5 * t).clamp(0.0, 1.0);
    let lo = (m - 0.5 * t).clamp(0.0, 1.0);
    ([hi, 1.0 - hi], [lo, 1.0 - lo])
}

fn scan_binary<G: ConvexGenerator + ?Sized>(g: &G, p: PNorm, r: f64, cfg: &SearchConfig) -> Result<BruteForceResult> {
    let t = (r / p.diameter()).min(1.0);
    let objective = |m: f64| {
        let (a, b) = binary_pair(m, t);
        jensen_raw(g, &a, &b)
    };
    let (lo, hi) = (0.5 * t, 1.0 - 0.5 * t);
    let m = if hi - lo <= 0.0 {
        0.5
    } else {
        let k = cfg.scan_points.max(3);
        let step = (hi - lo) / (k - 1) as f64;
        let mut best = (0usize, f64::INFINITY);
        for i in 0..k {
            let v = objective(lo + step * i as f64);
            if v < best.1 {
                best = (i, v);
            }
        }
        let a = lo + step * best.0.saturating_sub(1) as f64;
        let b = (lo + step * (best.0 + 1) as f64).min(hi);
        let (m, v) = golden_section(&objective, a, b, cfg.tol);
        if v < best.1 {
            m
        } else {
            lo + step * best.0 as f64
        }
    };
    let (a, b) = binary_pair(m, t);
    let omega = objective(m).max(0.0);
    let pair = SimplexPair::new(ProbVec::new(a.to_vec())?, ProbVec::new(b.to_vec())?, p)?.oriented();
    Ok(BruteForceResult { omega, minimizer: pair, heuristic: false })
}

/// Golden-section minimization on `[a, b]`; returns the abscissa and value.
pub fn golden_section<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

struct Candidate {
    value: f64,
    pair: SimplexPair,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    if a.value < b.value - TIE_TOL {
        return true;
    }
    if a.value > b.value + TIE_TOL {
        return false;
    }
    let ord = lex_cmp(a.pair.q.as_slice(), b.pair.q.as_slice())
        .then_with(|| lex_cmp(a.pair.q_check.as_slice(), b.pair.q_check.as_slice()));
    ord == std::cmp::Ordering::Less
}

fn eval_pair<G: ConvexGenerator + ?Sized>(g: &G, centre: &[f64], dir: &[f64], r: f64, p: PNorm) -> Option<Candidate> {
    let base = ProbVec::new(centre.to_vec()).ok()?;
    let pair = pair_at_distance(&base, dir, r, p).ok()?;
    let value = jensen_raw(g, pair.q.as_slice(), pair.q_check.as_slice());
    value.is_finite().then_some(Candidate { value, pair })
}

fn centre_dir(pair: &SimplexPair) -> (Vec<f64>, Vec<f64>) {
    let (a, b) = (pair.q.as_slice(), pair.q_check.as_slice());
    let c = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
    let d = a.iter().zip(b).map(|(x, y)| x - y).collect();
    (c, d)
}

// pattern search over midpoint moves and single-endpoint moves along e_i − e_j
fn local_search<G: ConvexGenerator + ?Sized>(g: &G, start: Candidate, r: f64, p: PNorm, cfg: &SearchConfig) -> Candidate {
    let n = g.dim();
    let mut cur = start;
    let mut step = cfg.step_max;
    let mut evals = 0usize;
    while step >= cfg.step_min && evals < cfg.max_evals {
        let mut improved = false;
        for kind in 0..3 {
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let (mut c, mut d) = centre_dir(&cur.pair);
                    match kind {
                        0 => {
                            c[i] += step;
                            c[j] -= step;
                        }
                        _ => {
                            // move one endpoint, keep the other
                            let sign = if kind == 1 { 1.0 } else { -1.0 };
                            c[i] += 0.5 * step;
                            c[j] -= 0.5 * step;
                            d[i] += sign * step;
                            d[j] -= sign * step;
                        }
                    }
                    if c[j] < 0.0 {
                        continue;
                    }
                    evals += 1;
                    if let Some(cand) = eval_pair(g, &c, &d, r, p) {
                        if cand.value < cur.value - 1e-16 {
                            cur = cand;
                            improved = true;
                        }
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    cur
}

fn pattern_search<G: ConvexGenerator + ?Sized>(
    g: &G,
    p: PNorm,
    r: f64,
    cfg: &SearchConfig,
    r_index: u64,
) -> Result<BruteForceResult> {
    let n = g.dim();
    let mut starts: Vec<Candidate> = Vec::new();
    // edge starts
    for i in 0..n {
        for j in i + 1..n {
            let mut c = vec![0.0; n];
            c[i] = 0.5;
            c[j] = 0.5;
            let mut d = vec![0.0; n];
            d[i] = 1.0;
            d[j] = -1.0;
            if let Some(s) = eval_pair(g, &c, &d, r, p) {
                starts.push(s);
            }
            let u = vec![1.0 / n as f64; n];
            if let Some(s) = eval_pair(g, &u, &d, r, p) {
                starts.push(s);
            }
        }
    }
    // random starts, one RNG stream per restart
    for k in 0..cfg.restarts {
        let mut rng = stream_rng(cfg.seed, (r_index << 24) | k as u64);
        for _ in 0..100 {
            let c = sample_point(n, &mut rng);
            let z: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let mean = z.iter().sum::<f64>() / n as f64;
            let d: Vec<f64> = z.iter().map(|x| x - mean).collect();
            if let Some(s) = eval_pair(g, c.as_slice(), &d, r, p) {
                starts.push(s);
                break;
            }
        }
    }
    if starts.is_empty() {
        return Err(Error::InfeasiblePair(format!("no feasible pair at distance {r} found")));
    }
    let results: Vec<Candidate> = starts.into_iter().map(|s| local_search(g, s, r, p, cfg)).collect();
    let mut best: Option<Candidate> = None;
    for mut c in results {
        c.pair = c.pair.oriented();
        if best.as_ref().is_none_or(|b| better(&c, b)) {
            best = Some(c);
        }
    }
    let best = best.expect("non-empty");
    Ok(BruteForceResult { omega: best.value.max(0.0), minimizer: best.pair, heuristic: true })
}

// ---------------------------------------------------------------------------
// Curves
// ---------------------------------------------------------------------------

/// Where a modulus value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusMethod {
    ClosedForm,
    BruteForce,
}

impl ModulusMethod {
    pub fn name(self) -> &'static str {
        match self {
            ModulusMethod::ClosedForm => "closed_form",
            ModulusMethod::BruteForce => "brute_force",
        }
    }
}

/// Which evaluations a curve sweep performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveMethod {
    Closed,
    Brute,
    /// Brute force, with the closed form alongside for comparison.
    Both,
}

impl FromStr for CurveMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed" | "closed_form" => Ok(CurveMethod::Closed),
            "brute" | "brute_force" => Ok(CurveMethod::Brute),
            "both" => Ok(CurveMethod::Both),
            _ => Err(Error::Input(format!("unknown method '{s}' (closed, brute, both)"))),
        }
    }
}

impl fmt::Display for CurveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveMethod::Closed => "closed",
            CurveMethod::Brute => "brute",
            CurveMethod::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusPoint {
    pub r: f64,
    pub omega: f64,
    pub method: ModulusMethod,
    pub heuristic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minimizer: Option<SimplexPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusCurve {
    pub generator: GeneratorInfo,
    pub p: PNorm,
    pub strict: bool,
    pub points: Vec<ModulusPoint>,
    pub diagnostics: Vec<String>,
}

impl ModulusCurve {
    /// Builds a curve from precomputed values (closed-form provenance).
    pub fn from_values(generator: GeneratorInfo, p: PNorm, strict: bool, rs: &[f64], omegas: &[f64]) -> Result<Self> {
        if rs.len() != omegas.len() {
            return Err(Error::Input("r and omega lists differ in length".into()));
        }
        check_grid(rs, p)?;
        let points = rs
            .iter()
            .zip(omegas)
            .map(|(&r, &omega)| ModulusPoint {
                r,
                omega,
                method: ModulusMethod::ClosedForm,
                heuristic: false,
                closed_form: None,
                minimizer: None,
            })
            .collect();
        let mut curve = ModulusCurve { generator, p, strict, points, diagnostics: Vec::new() };
        curve.diagnose();
        Ok(curve)
    }

    pub fn rs(&self) -> Vec<f64> {
        self.points.iter().map(|pt| pt.r).collect()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.points.iter().map(|pt| pt.omega).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest `|brute force − closed form|` over the points that carry both.
    pub fn max_discrepancy(&self) -> Option<f64> {
        self.points.iter().filter_map(|pt| pt.closed_form.map(|c| (c - pt.omega).abs())).reduce(f64::max)
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].omega > w[0].omega)
    }

    fn diagnose(&mut self) {
        self.diagnostics.clear();
        if let Some(first) = self.points.first() {
            if first.r == 0.0 && first.omega != 0.0 {
                self.diagnostics.push(format!("omega(0) = {} is not 0", first.omega));
            }
        }
        for w in self.points.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if b.omega < a.omega {
                self.diagnostics.push(format!(
                    "non-monotone: omega({}) = {} < omega({}) = {}",
                    b.r, b.omega, a.r, a.omega
                ));
            } else if b.omega == a.omega {
                self.diagnostics.push(format!("flat segment on [{}, {}] at omega = {}", a.r, b.r, a.omega));
            }
        }
    }

    // nodes with (0, 0) prepended when the grid starts above zero
    fn nodes(&self) -> (Vec<f64>, Vec<f64>) {
        let mut xs = self.rs();
        let mut ys = self.omegas();
        if xs.first().is_none_or(|&r| r > 0.0) {
            xs.insert(0, 0.0);
            ys.insert(0, 0.0);
        }
        (xs, ys)
    }

    /// Monotone cubic interpolant of the sampled curve.
    pub fn interpolant(&self) -> Result<MonotoneCubic> {
        let (xs, ys) = self.nodes();
        MonotoneCubic::new(xs, ys)
    }

    pub fn to_csv(&self) -> String {
        let both = self.points.iter().any(|pt| pt.closed_form.is_some());
        let mut out = String::from(if both { "r,omega,method,heuristic,closed_form,abs_diff\n" } else { "r,omega,method,heuristic\n" });
        for pt in &self.points {
            out.push_str(&format!("{},{},{},{}", fmt_f64(pt.r), fmt_f64(pt.omega), pt.method.name(), pt.heuristic));
            if both {
                match pt.closed_form {
                    Some(c) => out.push_str(&format!(",{},{}", fmt_f64(c), fmt_f64((c - pt.omega).abs()))),
                    None => out.push_str(",,"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }
}

fn check_grid(rs: &[f64], p: PNorm) -> Result<()> {
    for &r in rs {
        check_r(r, p)?;
    }
    if rs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input("r grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Evaluates `ω` on an increasing grid, in parallel over `r`.
///
/// Monotonicity is checked after the fact; violations and flat segments are
/// listed in `diagnostics`, never repaired.
pub fn modulus_curve<G: ConvexGenerator + ?Sized>(
    g: &G,
    p: PNorm,
    r_grid: &[f64],
    method: CurveMethod,
    cfg: &SearchConfig,
) -> Result<ModulusCurve> {
    check_grid(r_grid, p)?;
    let spec = g.as_spec();
    let closed = |r: f64| -> Result<f64> {
        match spec {
            Some(s) => modulus_closed_form(s, p, r),
            None => Err(Error::Unsupported(format!("{} is not a built-in family", g.info().family))),
        }
    };
    if method != CurveMethod::Brute {
        // fail fast on unsupported combinations
        closed(0.0)?;
    }
    let points: Vec<Result<ModulusPoint>> = r_grid
        .par_iter()
        .enumerate()
        .map(|(i, &r)| -> Result<ModulusPoint> {
            match method {
                CurveMethod::Closed => Ok(ModulusPoint {
                    r,
                    omega: closed(r)?,
                    method: ModulusMethod::ClosedForm,
                    heuristic: false,
                    closed_form: None,
                    minimizer: None,
                }),
                CurveMethod::Brute | CurveMethod::Both => {
                    let bf = brute_force_indexed(g, p, r, cfg, i as u64)?;
                    let cf = if method == CurveMethod::Both { Some(closed(r)?) } else { None };
                    Ok(ModulusPoint {
                        r,
                        omega: bf.omega,
                        method: ModulusMethod::BruteForce,
                        heuristic: bf.heuristic,
                        closed_form: cf,
                        minimizer: Some(bf.minimizer),
                    })
                }
            }
        })
        .collect();
    let points = points.into_iter().collect::<Result<Vec<_>>>()?;
    let mut curve = ModulusCurve { generator: g.info(), p, strict: g.is_strict(), points, diagnostics: Vec::new() };
    curve.diagnose();
    Ok(curve)
}

/// `ω⁻¹(ρ)`: the distance at which the interpolated curve reaches `ρ`,
/// saturating at the diameter.
pub fn inverse_modulus(curve: &ModulusCurve, rho: f64) -> Result<f64> {
    if rho.is_nan() || rho < 0.0 {
        return Err(Error::Input(format!("rho must be >= 0, got {rho}")));
    }
    let diameter = curve.p.diameter();
    let (xs, ys) = curve.nodes();
    if xs.len() < 2 {
        return Err(Error::NonInvertible("curve has no positive r".into()));
    }
    if let Some(w) = ys.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::NonInvertible(format!(
            "omega is not strictly increasing between r = {} and r = {}",
            xs[w],
            xs[w + 1]
        )));
    }
    let last = *ys.last().unwrap();
    if rho > last {
        // beyond the sampled range the diameter is the only safe answer
        return Ok(diameter);
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    let interp = MonotoneCubic::new(xs, ys)?;
    Ok(interp.invert(rho, INVERSE_TOL))
}

// ---------------------------------------------------------------------------
// Regret lower bound
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretBoundReport {
    pub family: String,
    pub alpha: Option<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    pub p: PNorm,
    pub samples: usize,
    pub violations: usize,
    /// Smallest `R/2 − ω(‖q − q̂‖_p)`.
    pub worst_margin: f64,
    pub worst_witness: Option<Witness>,
    pub pass: bool,
}

/// Checks `ω(‖q − q̂‖_p) ≤ R(q, q̂)/2` on random pairs, with `ω` read off the
/// curve interpolant. The curve must extend to the diameter.
pub fn regret_bound_sweep<G: ConvexGenerator + ?Sized>(
    g: &G,
    curve: &ModulusCurve,
    samples: usize,
    seed: u64,
) -> Result<RegretBoundReport> {
    let p = curve.p;
    if curve.points.last().is_none_or(|pt| pt.r < p.diameter() - DIAMETER_SLACK) {
        return Err(Error::Input("the curve must reach the simplex diameter".into()));
    }
    let interp = curve.interpolant()?;
    let n = g.dim();
    let rows: Vec<(f64, ProbVec, ProbVec)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let q = sample_point(n, &mut rng);
            let q_hat = sample_point(n, &mut rng);
            let reg = bregman(g, q.as_slice(), &q_hat);
            let d = diff_norm(q.as_slice(), q_hat.as_slice(), p);
            let margin = if reg.is_infinite() { f64::INFINITY } else { 0.5 * reg - interp.eval(d) };
            (margin, q, q_hat)
        })
        .collect();
    let mut violations = 0;
    let mut worst: Option<(f64, ProbVec, ProbVec)> = None;
    for (m, q, q_hat) in rows {
        if m < -REGRET_BOUND_TOL {
            violations += 1;
        }
        if worst.as_ref().is_none_or(|w| m < w.0) {
            worst = Some((m, q, q_hat));
        }
    }
    let info = g.info();
    Ok(RegretBoundReport {
        family: info.family,
        alpha: info.alpha,
        n: info.n,
        p,
        samples,
        violations,
        worst_margin: worst.as_ref().map_or(f64::INFINITY, |w| w.0),
        worst_witness: worst.map(|(value, q, q_hat)| Witness { q: q.into_vec(), q_hat: q_hat.into_vec(), value }),
        pass: violations == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proper_loss::jensen_gap;

    fn spec(f: Family, a: Option<f64>, n: usize) -> GeneratorSpec {
        GeneratorSpec::new(f, a, n).unwrap()
    }

    fn all_binary() -> Vec<GeneratorSpec> {
        let mut v = vec![GeneratorSpec::shannon(2).unwrap()];
        for a in [1.3, 1.5, 2.0, 2.5, 3.0, 4.0] {
            v.push(spec(Family::SquaredAlphaNorm, Some(a), 2));
            v.push(spec(Family::Tsallis, Some(a), 2));
            v.push(spec(Family::MaxPower, Some(a), 2));
            if a >= 2.0 {
                v.push(spec(Family::AlphaNorm, Some(a), 2));
            }
        }
        v
    }

    #[test]
    fn shannon_examples() {
        let g = GeneratorSpec::shannon(2).unwrap();
        let cfg = SearchConfig::default();
        let bf = modulus_brute_force(&g, PNorm::ONE, 1.0, &cfg).unwrap();
        assert!((bf.omega - 0.130812).abs() < 1e-6, "{}", bf.omega);
        assert!((bf.minimizer.q.as_slice()[0] - 0.75).abs() < 1e-6);
        assert!((bf.minimizer.q_check.as_slice()[0] - 0.25).abs() < 1e-6);
        let bf = modulus_brute_force(&g, PNorm::ONE, 2.0, &cfg).unwrap();
        assert!((bf.omega - std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(bf.minimizer.q.as_slice(), &[1.0, 0.0]);
        assert_eq!(modulus_brute_force(&g, PNorm::ONE, 0.0, &cfg).unwrap().omega, 0.0);
        assert!(matches!(modulus_brute_force(&g, PNorm::ONE, 2.1, &cfg), Err(Error::Domain(_))));
        assert!((modulus_closed_form(&g, PNorm::ONE, 2.0).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        let g3 = GeneratorSpec::shannon(3).unwrap();
        let v = modulus_closed_form(&g3, PNorm::TWO, std::f64::consts::SQRT_2).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn power_examples() {
        let brier = GeneratorSpec::brier(2).unwrap();
        assert!((modulus_closed_form(&brier, PNorm::ONE, 1.0).unwrap() - 0.125).abs() < 1e-15);
        for r in [0.1, 0.7, 1.9] {
            let bf = modulus_brute_force(&brier, PNorm::ONE, r, &SearchConfig::default()).unwrap();
            assert!((bf.omega - r * r / 8.0).abs() < 1e-12);
        }
        let mp = spec(Family::MaxPower, Some(3.0), 2);
        for r in [0.2, 1.0, 2.0] {
            assert!((modulus_closed_form(&mp, PNorm::ONE, r).unwrap() - (r / 4.0).powi(3)).abs() < 1e-15);
        }
    }

    #[test]
    fn unsupported_combinations() {
        let an = spec(Family::AlphaNorm, Some(1.5), 2);
        assert!(matches!(modulus_closed_form(&an, PNorm::ONE, 0.5), Err(Error::Unsupported(_))));
        let t3 = spec(Family::Tsallis, Some(2.5), 3);
        assert!(matches!(modulus_closed_form(&t3, PNorm::TWO, 0.5), Err(Error::Unsupported(_))));
        let s3 = GeneratorSpec::shannon(3).unwrap();
        assert!(matches!(modulus_closed_form(&s3, PNorm::ONE, 0.5), Err(Error::Unsupported(_))));
    }

    #[test]
    fn closed_forms_match_scan_on_binary_simplex() {
        let cfg = SearchConfig::default();
        for g in all_binary() {
            for k in 1..=40 {
                let r = 2.0 * k as f64 / 40.0;
                let cf = modulus_closed_form(&g, PNorm::ONE, r).unwrap();
                let bf = modulus_brute_force(&g, PNorm::ONE, r, &cfg).unwrap().omega;
                assert!((cf - bf).abs() < 1e-9, "{:?} r={r}: closed {cf} brute {bf}", g.info());
            }
        }
    }

    #[test]
    fn unscaled_table_disagrees() {
        // evaluating at r instead of r/2 is far off
        let g = GeneratorSpec::shannon(2).unwrap();
        let bf = modulus_brute_force(&g, PNorm::ONE, 1.0, &SearchConfig::default()).unwrap().omega;
        assert!((table1_expression(&g, 1.0).unwrap() - bf).abs() > 0.5);
        assert!((table1_expression(&g, 0.5).unwrap() - bf).abs() < 1e-9);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for g in all_binary() {
            for r in [0.05, 0.4, 1.0, 1.7] {
                let h = 1e-6;
                let fd = (modulus_closed_form(&g, PNorm::ONE, r + h).unwrap() - modulus_closed_form(&g, PNorm::ONE, r - h).unwrap()) / (2.0 * h);
                let an = closed_form_derivative(&g, PNorm::ONE, r).unwrap();
                assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "{:?} r={r}: {fd} vs {an}", g.info());
            }
        }
    }

    #[test]
    fn two_coordinate_minimizers_for_three_outcomes() {
        let g = GeneratorSpec::shannon(3).unwrap();
        let cfg = SearchConfig { restarts: 8, ..SearchConfig::default() };
        for r in [0.1, 0.6, 1.2] {
            let bf = modulus_brute_force(&g, PNorm::TWO, r, &cfg).unwrap();
            let cf = modulus_closed_form(&g, PNorm::TWO, r).unwrap();
            assert!(bf.heuristic);
            assert!((bf.omega - cf).abs() < 1e-6, "r={r}: {} vs {cf}", bf.omega);
            let t = r / std::f64::consts::SQRT_2;
            let mut q = bf.minimizer.q.as_slice().to_vec();
            q.sort_by(|a, b| b.partial_cmp(a).unwrap());
            assert!((q[0] - (1.0 + t) / 2.0).abs() < 1e-3 && q[2] < 1e-3, "{q:?}");
        }
    }

    #[test]
    fn random_restarts_alone_find_the_minimum() {
        let g = GeneratorSpec::shannon(3).unwrap();
        let cfg = SearchConfig { restarts: 16, ..SearchConfig::default() };
        let r = 0.8;
        let n = 3;
        let mut best = f64::INFINITY;
        for k in 0..cfg.restarts {
            let mut rng = stream_rng(7, k as u64);
            let c = sample_point(n, &mut rng);
            let d = [1.0, -0.5, -0.5];
            if let Some(s) = eval_pair(&g, c.as_slice(), &d, r, PNorm::TWO) {
                best = best.min(local_search(&g, s, r, PNorm::TWO, &cfg).value);
            }
        }
        let cf = modulus_closed_form(&g, PNorm::TWO, r).unwrap();
        assert!((best - cf).abs() < 1e-4, "{best} vs {cf}");
    }

    #[test]
    fn chord_shrinking_does_not_lower_j() {
        let cfg = SearchConfig::default();
        for g in all_binary().into_iter().take(6) {
            for r in [0.5, 1.0, 1.5] {
                let bf = modulus_brute_force(&g, PNorm::ONE, r, &cfg).unwrap();
                for tau in [0.1, 0.25] {
                    let a = bf.minimizer.q.lerp(&bf.minimizer.q_check, tau).unwrap();
                    let b = bf.minimizer.q.lerp(&bf.minimizer.q_check, 1.0 - tau).unwrap();
                    let j = jensen_gap(&g, &a, &b).unwrap();
                    let w = modulus_brute_force(&g, PNorm::ONE, (1.0 - 2.0 * tau) * r, &cfg).unwrap().omega;
                    assert!(j >= w - 1e-12);
                }
            }
        }
    }

    #[test]
    fn curve_diagnostics_and_inverse() {
        let brier = GeneratorSpec::brier(2).unwrap();
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.05).collect();
        let curve = modulus_curve(&brier, PNorm::ONE, &grid, CurveMethod::Both, &SearchConfig::default()).unwrap();
        assert!(curve.diagnostics.is_empty(), "{:?}", curve.diagnostics);
        assert!(curve.max_discrepancy().unwrap() < 1e-12);
        assert!((inverse_modulus(&curve, 0.125).unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(inverse_modulus(&curve, 0.0).unwrap(), 0.0);
        let sh = modulus_curve(&GeneratorSpec::shannon(2).unwrap(), PNorm::ONE, &grid, CurveMethod::Closed, &SearchConfig::default()).unwrap();
        assert_eq!(inverse_modulus(&sh, 1.0).unwrap(), 2.0);
        let csv = curve.to_csv();
        assert!(csv.starts_with("r,omega,method,heuristic,closed_form,abs_diff\n"));
        assert_eq!(csv.lines().count(), 42);

        let empty = modulus_curve(&brier, PNorm::ONE, &[], CurveMethod::Brute, &SearchConfig::default()).unwrap();
        assert!(empty.is_empty());
        assert!(modulus_curve(&brier, PNorm::ONE, &[0.5, 0.2], CurveMethod::Brute, &SearchConfig::default()).is_err());
    }

    #[test]
    fn flat_segments_are_reported() {
        // max-power on three outcomes is not strict but ω is still positive
        // for r > 0; a hand-made flat curve exercises the diagnostic path
        let info = GeneratorSpec::brier(2).unwrap().info();
        let c = ModulusCurve::from_values(info, PNorm::ONE, false, &[0.0, 1.0, 2.0], &[0.0, 0.5, 0.5]).unwrap();
        assert!(c.diagnostics.iter().any(|d| d.starts_with("flat segment")));
        assert!(matches!(inverse_modulus(&c, 0.2), Err(Error::NonInvertible(_))));
    }

    #[test]
    fn regret_bound_holds_for_brier() {
        let g = GeneratorSpec::brier(2).unwrap();
        let grid: Vec<f64> = (0..=200).map(|k| k as f64 * 0.01).collect();
        let curve = modulus_curve(&g, PNorm::ONE, &grid, CurveMethod::Brute, &SearchConfig::default()).unwrap();
        let rep = regret_bound_sweep(&g, &curve, 2000, 3).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}
