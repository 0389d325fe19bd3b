//! Savage construction of proper losses and the resulting regrets.
//!
//! For a generator `f` with selector `v̂ = ∇f(q̂)` the loss is
//! `ℓ_y(q̂) = −f(q̂) − v̂_y + ⟨v̂, q̂⟩`, the conditional risk is
//! `L(q, q̂) = Σ_y q_y ℓ_y(q̂)`, and the surrogate regret
//! `R(q, q̂) = L(q, q̂) + f(q)` equals the Bregman divergence
//! `f(q) − f(q̂) − ⟨v̂, q − q̂⟩`.
//!
//! Extended arithmetic follows `0·(±∞) = 0`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::{subgradient_check_with, AffineShift, ConvexGenerator, ExtendedVec, GeneratorInfo};
use crate::simplex::{check_dims, simplex_grid, stream_rng, sample_point, PNorm, ProbVec};

/// Tolerance for the properness inequality on grids.
pub const PROPERNESS_TOL: f64 = 1e-9;
/// Tolerance for the strong-properness inequality.
pub const STRONG_TOL: f64 = 1e-9;
/// Jensen gaps above `-JENSEN_CLAMP` are clamped to zero.
pub const JENSEN_CLAMP: f64 = 1e-12;

/// Per-label loss values in `(−∞, +∞]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossEval {
    values: Vec<f64>,
    support_of_estimate: Vec<usize>,
}

impl LossEval {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn support_of_estimate(&self) -> &[usize] {
        &self.support_of_estimate
    }

    /// Regularity: `+∞` only at labels outside the estimate's support.
    pub fn is_regular(&self) -> bool {
        self.values
            .iter()
            .enumerate()
            .all(|(y, &v)| v < f64::INFINITY || self.support_of_estimate.binary_search(&y).is_err())
    }

    /// `Σ_y q_y ℓ_y` with `0·∞ = 0`.
    pub fn expected(&self, q: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (&w, &l) in q.iter().zip(&self.values) {
            if w == 0.0 {
                continue;
            }
            if l == f64::INFINITY {
                return f64::INFINITY;
            }
            acc += w * l;
        }
        acc
    }
}

/// A surrogate regret value in `[0, +∞]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct RegretValue(f64);

impl RegretValue {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

/// Savage loss `ℓ(q̂)` built from the generator's selector at `q̂`.
pub fn savage_loss<G: ConvexGenerator + ?Sized>(g: &G, q_hat: &ProbVec) -> Result<LossEval> {
    check_dims(g.dim(), q_hat.dim())?;
    let v = g.subgradient(q_hat);
    let f_hat = g.value(q_hat.as_slice());
    // v̂ is −∞ only where q̂ is zero, so the inner product stays finite
    let inner = v.dot(q_hat.as_slice());
    let values = v.as_slice().iter().map(|&vy| if vy == f64::NEG_INFINITY { f64::INFINITY } else { -f_hat - vy + inner }).collect();
    Ok(LossEval { values, support_of_estimate: q_hat.support().to_vec() })
}

/// `L(q, q̂) = Σ_y q_y ℓ_y(q̂)`; may be `+∞`.
pub fn conditional_risk<G: ConvexGenerator + ?Sized>(g: &G, q: &ProbVec, q_hat: &ProbVec) -> Result<f64> {
    check_dims(g.dim(), q.dim())?;
    Ok(savage_loss(g, q_hat)?.expected(q.as_slice()))
}

/// `L̲(q) = −f(q)`.
pub fn bayes_risk<G: ConvexGenerator + ?Sized>(g: &G, q: &ProbVec) -> Result<f64> {
    check_dims(g.dim(), q.dim())?;
    Ok(-g.value(q.as_slice()))
}

/// Bregman form `f(q) − f(q̂) − ⟨v̂, q − q̂⟩`, clamped at zero from below.
pub fn surrogate_regret<G: ConvexGenerator + ?Sized>(g: &G, q: &ProbVec, q_hat: &ProbVec) -> Result<RegretValue> {
    check_dims(g.dim(), q.dim())?;
    check_dims(g.dim(), q_hat.dim())?;
    Ok(RegretValue(bregman(g, q.as_slice(), q_hat)))
}

pub(crate) fn bregman<G: ConvexGenerator + ?Sized>(g: &G, q: &[f64], q_hat: &ProbVec) -> f64 {
    if let Some(d) = g.divergence(q, q_hat) {
        return d;
    }
    let v = g.subgradient(q_hat);
    let delta: Vec<f64> = q.iter().zip(q_hat.as_slice()).map(|(a, b)| a - b).collect();
    let lin = v.dot(&delta);
    if lin == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    (g.value(q) - g.value(q_hat.as_slice()) - lin).max(0.0)
}

/// Midpoint Jensen gap `(f(q) + f(q̌))/2 − f((q + q̌)/2)`.
pub fn jensen_gap<G: ConvexGenerator + ?Sized>(g: &G, q: &ProbVec, q_check: &ProbVec) -> Result<f64> {
    check_dims(g.dim(), q.dim())?;
    check_dims(g.dim(), q_check.dim())?;
    Ok(jensen_raw(g, q.as_slice(), q_check.as_slice()))
}

pub(crate) fn jensen_raw<G: ConvexGenerator + ?Sized>(g: &G, a: &[f64], b: &[f64]) -> f64 {
    let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
    let gap = 0.5 * (g.value(a) + g.value(b)) - g.value(&mid);
    if (-JENSEN_CLAMP..0.0).contains(&gap) {
        0.0
    } else {
        gap
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Witness {
    pub q: Vec<f64>,
    pub q_hat: Vec<f64>,
    pub value: f64,
}

/// Common report shape: `{family, alpha, N, p, pass, worst_witness, margin}`.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub family: String,
    pub alpha: Option<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    pub p: Option<PNorm>,
    pub pass: bool,
    pub worst_witness: Option<Witness>,
    pub margin: f64,
    /// Only for properness certificates: whether every grid point had a
    /// unique minimizer (positive margin).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strict_on_grid: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

impl CertificateReport {
    fn new(info: GeneratorInfo, p: Option<PNorm>) -> Self {
        CertificateReport {
            family: info.family,
            alpha: info.alpha,
            n: info.n,
            p,
            pass: true,
            worst_witness: None,
            margin: f64::INFINITY,
            strict_on_grid: None,
            min_ratio: None,
            samples: None,
        }
    }
}

/// Grid certificate of properness.
///
/// For every grid point `q` the conditional risk over all grid estimates must
/// be minimized at `q̂ = q` within `1e-9`. `margin` is the smallest gap between
/// the runner-up and `L(q, q)` over the grid; it is reported, not thresholded.
/// The witness is the worst violation, or the tightest runner-up when the
/// certificate passes.
pub fn properness_certificate<G: ConvexGenerator + ?Sized>(g: &G, resolution: usize) -> Result<CertificateReport> {
    if resolution < 10 {
        return Err(Error::Input(format!("certificate resolution must be >= 10, got {resolution}")));
    }
    let grid = simplex_grid(g.dim(), resolution)?;
    let losses: Vec<LossEval> = grid.par_iter().map(|qh| savage_loss(g, qh)).collect::<Result<_>>()?;

    struct Row {
        violation: f64,
        violator: usize,
        margin: f64,
        runner_up: usize,
    }
    let rows: Vec<Row> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let q = grid[i].as_slice();
            let own = losses[i].expected(q);
            let mut row = Row { violation: f64::NEG_INFINITY, violator: i, margin: f64::INFINITY, runner_up: i };
            for (j, l) in losses.iter().enumerate() {
                if j == i {
                    continue;
                }
                let other = l.expected(q);
                let gap = other - own;
                if -gap > row.violation {
                    row.violation = -gap;
                    row.violator = j;
                }
                if gap < row.margin {
                    row.margin = gap;
                    row.runner_up = j;
                }
            }
            row
        })
        .collect();

    let mut report = CertificateReport::new(g.info(), None);
    let mut worst = (f64::NEG_INFINITY, 0usize, 0usize);
    let mut tight = (f64::INFINITY, 0usize, 0usize);
    for (i, row) in rows.iter().enumerate() {
        if row.violation > worst.0 {
            worst = (row.violation, i, row.violator);
        }
        if row.margin < tight.0 {
            tight = (row.margin, i, row.runner_up);
        }
    }
    report.pass = worst.0 <= PROPERNESS_TOL;
    report.margin = tight.0;
    report.strict_on_grid = Some(tight.0 > 0.0);
    let (value, i, j) = if report.pass { tight } else { worst };
    report.worst_witness = Some(Witness { q: grid[i].as_slice().to_vec(), q_hat: grid[j].as_slice().to_vec(), value });
    Ok(report)
}

/// Samples `samples` random pairs and tests `R ≥ (κ/2)‖q − q̂‖₂² − 1e-9`.
///
/// `min_ratio` is the smallest `R / (½‖q − q̂‖₂²)`; pairs with infinite
/// regret or coincident points are skipped.
pub fn strong_properness_test<G: ConvexGenerator + ?Sized>(
    g: &G,
    kappa: f64,
    samples: usize,
    seed: u64,
) -> Result<CertificateReport> {
    if samples < 1 {
        return Err(Error::Input("strong properness test needs at least one sample".into()));
    }
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::Input(format!("kappa must be positive, got {kappa}")));
    }
    let n = g.dim();
    let rows: Vec<Option<(f64, f64, ProbVec, ProbVec)>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let q = sample_point(n, &mut rng);
            let q_hat = sample_point(n, &mut rng);
            let r = bregman(g, q.as_slice(), &q_hat);
            let d2: f64 = q.as_slice().iter().zip(q_hat.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
            if r.is_infinite() || d2 == 0.0 {
                return None;
            }
            Some((r / (0.5 * d2), r - 0.5 * kappa * d2, q, q_hat))
        })
        .collect();

    let mut report = CertificateReport::new(g.info(), Some(PNorm::TWO));
    report.samples = Some(samples);
    let mut min_ratio = f64::INFINITY;
    for (ratio, slack, q, q_hat) in rows.into_iter().flatten() {
        if ratio < min_ratio {
            min_ratio = ratio;
            report.worst_witness = Some(Witness { q: q.into_vec(), q_hat: q_hat.into_vec(), value: ratio });
        }
        report.margin = report.margin.min(slack);
    }
    report.min_ratio = Some(min_ratio);
    report.pass = report.margin >= -STRONG_TOL;
    Ok(report)
}

/// Tolerance of the Savage identities on random pairs.
pub const SAVAGE_TOL: f64 = 1e-9;
/// Tolerance of Jensen-gap and regret agreement under affine shifts.
pub const AFFINE_TOL: f64 = 1e-10;

/// Savage identities on random pairs: `L(q̂, q̂) = −f(q̂)`,
/// `L(q, q̂) − L(q, q) = R(q, q̂) ≥ 0`, and `−ℓ(q̂) ∈ ∂f(q̂)` against a fixed
/// set of probes. `margin` is the largest deviation seen.
pub fn savage_consistency<G: ConvexGenerator + ?Sized>(g: &G, samples: usize, seed: u64) -> Result<CertificateReport> {
    let n = g.dim();
    let mut probes: Vec<ProbVec> = (0..n).map(|i| ProbVec::vertex(n, i)).collect::<Result<_>>()?;
    probes.push(ProbVec::uniform(n)?);
    let mut rng = stream_rng(seed, u64::MAX);
    probes.extend((0..16).map(|_| sample_point(n, &mut rng)));

    let rows: Vec<Result<(f64, ProbVec, ProbVec)>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let q = sample_point(n, &mut rng);
            let q_hat = sample_point(n, &mut rng);
            let loss = savage_loss(g, &q_hat)?;
            let f_hat = g.value(q_hat.as_slice());
            let mut dev = (loss.expected(q_hat.as_slice()) + f_hat).abs() / (1.0 + f_hat.abs());
            let lq = conditional_risk(g, &q, &q)?;
            let lqh = loss.expected(q.as_slice());
            let reg = bregman(g, q.as_slice(), &q_hat);
            if lqh.is_finite() {
                dev = dev.max((lqh - lq - reg).abs() / (1.0 + lqh.abs()));
            } else if reg.is_finite() {
                dev = f64::INFINITY;
            }
            if reg < 0.0 {
                dev = dev.max(-reg);
            }
            let neg: Vec<f64> = loss.values().iter().map(|x| -x).collect();
            let v = ExtendedVec::new(neg, &q_hat)?;
            let sub = subgradient_check_with(g, &q_hat, &v, &probes)?;
            dev = dev.max(sub.worst_violation);
            Ok((dev, q, q_hat))
        })
        .collect();
    let mut report = CertificateReport::new(g.info(), None);
    report.samples = Some(samples);
    report.margin = 0.0;
    for row in rows {
        let (dev, q, q_hat) = row?;
        if dev > report.margin || report.worst_witness.is_none() {
            report.margin = report.margin.max(dev);
            report.worst_witness = Some(Witness { q: q.into_vec(), q_hat: q_hat.into_vec(), value: dev });
        }
    }
    report.pass = report.margin <= SAVAGE_TOL;
    Ok(report)
}

/// Jensen gaps and regrets of `f` and `f + ⟨u, ·⟩ + λ` on random pairs and
/// random shifts. `margin` is the largest disagreement.
pub fn affine_invariance_check<G: ConvexGenerator + Clone>(g: &G, samples: usize, seed: u64) -> Result<CertificateReport> {
    let n = g.dim();
    let rows: Vec<Result<(f64, ProbVec, ProbVec)>> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let slope: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let offset = rng.random_range(-5.0..5.0);
            let shifted = AffineShift::new(g.clone(), slope, offset)?;
            let q = sample_point(n, &mut rng);
            let q_check = sample_point(n, &mut rng);
            let mut dev = (jensen_raw(g, q.as_slice(), q_check.as_slice()) - jensen_raw(&shifted, q.as_slice(), q_check.as_slice())).abs();
            let (a, b) = (bregman(g, q.as_slice(), &q_check), bregman(&shifted, q.as_slice(), &q_check));
            if a.is_finite() || b.is_finite() {
                dev = dev.max((a - b).abs());
            }
            Ok((dev, q, q_check))
        })
        .collect();
    let mut report = CertificateReport::new(g.info(), None);
    report.samples = Some(samples);
    report.margin = 0.0;
    for row in rows {
        let (dev, q, q_check) = row?;
        if dev > report.margin || report.worst_witness.is_none() {
            report.margin = report.margin.max(dev);
            report.worst_witness = Some(Witness { q: q.into_vec(), q_hat: q_check.into_vec(), value: dev });
        }
    }
    report.pass = report.margin <= AFFINE_TOL;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{Family, GeneratorSpec};
    use approx::assert_relative_eq;
    use std::f64::consts::LN_2;

    fn b(x: f64) -> ProbVec {
        ProbVec::binary(x).unwrap()
    }

    #[test]
    fn savage_examples() {
        let sh = GeneratorSpec::shannon(2).unwrap();
        let l = savage_loss(&sh, &b(0.5)).unwrap();
        assert_relative_eq!(l.values()[0], LN_2, epsilon = 1e-15);
        assert_relative_eq!(l.values()[1], LN_2, epsilon = 1e-15);
        let l = savage_loss(&sh, &b(1.0)).unwrap();
        assert_eq!(l.values()[0], 0.0);
        assert_eq!(l.values()[1], f64::INFINITY);
        assert!(l.is_regular());
        let brier = GeneratorSpec::brier(2).unwrap();
        // ‖q̂‖² − 2q̂_y; the Brier score itself is this plus one, i.e. the
        // loss of the shifted generator ‖q‖² − 1
        let l = savage_loss(&brier, &b(0.8)).unwrap();
        assert_relative_eq!(l.values()[0], -0.92, epsilon = 1e-14);
        assert_relative_eq!(l.values()[1], 0.28, epsilon = 1e-14);
        let shifted = crate::generators::AffineShift::new(brier, vec![0.0, 0.0], -1.0).unwrap();
        let l = savage_loss(&shifted, &b(0.8)).unwrap();
        assert_relative_eq!(l.values()[0], 0.08, epsilon = 1e-14);
        assert_relative_eq!(l.values()[1], 1.28, epsilon = 1e-14);
    }

    #[test]
    fn risks() {
        let sh = GeneratorSpec::shannon(2).unwrap();
        assert_relative_eq!(conditional_risk(&sh, &b(0.7), &b(0.5)).unwrap(), LN_2, epsilon = 1e-15);
        assert_eq!(conditional_risk(&sh, &b(1.0), &b(1.0)).unwrap(), 0.0);
        let q = ProbVec::new(vec![0.2, 0.3, 0.5]).unwrap();
        let sh3 = GeneratorSpec::shannon(3).unwrap();
        assert_relative_eq!(conditional_risk(&sh3, &q, &q).unwrap(), -sh3.value(q.as_slice()), epsilon = 1e-15);
        assert_relative_eq!(bayes_risk(&sh, &b(0.5)).unwrap(), LN_2, epsilon = 1e-15);
        assert_relative_eq!(bayes_risk(&GeneratorSpec::brier(2).unwrap(), &b(1.0)).unwrap(), -1.0, epsilon = 1e-15);
        assert_eq!(bayes_risk(&sh, &b(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn regret_examples() {
        let sh = GeneratorSpec::shannon(2).unwrap();
        assert_relative_eq!(surrogate_regret(&sh, &b(1.0), &b(0.5)).unwrap().value(), LN_2, epsilon = 1e-15);
        assert!(surrogate_regret(&sh, &b(0.5), &b(1.0)).unwrap().is_infinite());
        let brier = GeneratorSpec::brier(2).unwrap();
        assert_relative_eq!(surrogate_regret(&brier, &b(0.8), &b(0.6)).unwrap().value(), 0.08, epsilon = 1e-14);
        let q = ProbVec::new(vec![0.1, 0.6, 0.3]).unwrap();
        assert_eq!(surrogate_regret(&GeneratorSpec::shannon(3).unwrap(), &q, &q).unwrap().value(), 0.0);
    }

    #[test]
    fn kl_identity() {
        let sh = GeneratorSpec::shannon(3).unwrap();
        for (q, qh) in crate::simplex::sample_simplex(3, 200, 9).unwrap().chunks(2).map(|c| (&c[0], &c[1])) {
            let kl: f64 = q.as_slice().iter().zip(qh.as_slice()).map(|(a, b)| a * (a / b).ln()).sum();
            assert_relative_eq!(surrogate_regret(&sh, q, qh).unwrap().value(), kl, epsilon = 1e-12);
        }
    }

    #[test]
    fn jensen_examples() {
        let sh = GeneratorSpec::shannon(2).unwrap();
        assert_eq!(jensen_gap(&sh, &b(0.3), &b(0.3)).unwrap(), 0.0);
        assert_relative_eq!(jensen_gap(&sh, &b(1.0), &b(0.0)).unwrap(), LN_2, epsilon = 1e-15);
        // quadratic identity J = ‖q − q̌‖₂² / 4 for the Brier generator
        let brier = GeneratorSpec::brier(2).unwrap();
        assert_relative_eq!(jensen_gap(&brier, &b(0.7), &b(0.3)).unwrap(), 0.08, epsilon = 1e-14);
        assert_eq!(jensen_gap(&brier, &b(0.7), &b(0.3)).unwrap(), jensen_gap(&brier, &b(0.3), &b(0.7)).unwrap());
    }

    #[test]
    fn certificates() {
        let sh = GeneratorSpec::shannon(2).unwrap();
        let rep = properness_certificate(&sh, 100).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.strict_on_grid, Some(true));
        let brier = GeneratorSpec::brier(3).unwrap();
        let rep = properness_certificate(&brier, 30).unwrap();
        assert!(rep.pass && rep.margin > 0.0);
        assert!(properness_certificate(&sh, 5).is_err());
    }

    #[test]
    fn strong_properness_examples() {
        let sh = GeneratorSpec::shannon(3).unwrap();
        assert!(strong_properness_test(&sh, 1.0, 2000, 1).unwrap().pass);
        let brier = GeneratorSpec::brier(3).unwrap();
        let rep = strong_properness_test(&brier, 2.0, 2000, 1).unwrap();
        assert!(rep.pass);
        assert_relative_eq!(rep.min_ratio.unwrap(), 2.0, epsilon = 1e-9);
        let an4 = GeneratorSpec::new(Family::AlphaNorm, Some(4.0), 2).unwrap();
        let rep = strong_properness_test(&an4, 1.0, 2000, 1).unwrap();
        assert!(!rep.pass);
        assert!(rep.worst_witness.is_some());
    }

    #[test]
    fn savage_and_affine_sweeps() {
        for g in [GeneratorSpec::shannon(3).unwrap(), GeneratorSpec::brier(2).unwrap(), GeneratorSpec::new(Family::Tsallis, Some(1.5), 3).unwrap()] {
            let rep = savage_consistency(&g, 300, 5).unwrap();
            assert!(rep.pass, "{rep:?}");
            let rep = affine_invariance_check(&g, 300, 5).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
    }

    #[test]
    fn stable_divergences_match_generic_bregman() {
        for g in [GeneratorSpec::shannon(3).unwrap(), GeneratorSpec::brier(3).unwrap()] {
            for i in 0..200u64 {
                let mut rng = stream_rng(11, i);
                let q = sample_point(3, &mut rng);
                let q_hat = sample_point(3, &mut rng);
                let fast = g.divergence(q.as_slice(), &q_hat).unwrap();
                let v = g.subgradient(&q_hat);
                let delta: Vec<f64> = q.as_slice().iter().zip(q_hat.as_slice()).map(|(a, b)| a - b).collect();
                let slow = g.value(q.as_slice()) - g.value(q_hat.as_slice()) - v.dot(&delta);
                assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
            }
        }
        let sh = GeneratorSpec::shannon(2).unwrap();
        assert!(sh.divergence(&[0.5, 0.5], &b(1.0)).unwrap().is_infinite());
        assert_relative_eq!(sh.divergence(&[1.0, 0.0], &b(0.5)).unwrap(), LN_2, epsilon = 1e-15);
    }
}
