//! Convex generators `f = −L̲` on the simplex and their subgradient selectors.
//!
//! Each generator exposes its value and one fixed element of the boundary
//! subdifferential: the gradient where it exists, `−∞` off the support where
//! the slope is infinite (Shannon), and a fixed piece of the max at the kinks
//! of the max-power family.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::simplex::{check_dims, norm, simplex_grid, PNorm, ProbVec};

/// Tolerance of the subgradient inequality check.
pub const SUBGRADIENT_TOL: f64 = 1e-9;
/// Grid resolution used to vet custom generators on registration.
pub const REGISTRATION_RESOLUTION: usize = 20;

/// Identity of a generator in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorInfo {
    pub family: String,
    pub alpha: Option<f64>,
    #[serde(rename = "N")]
    pub n: usize,
}

/// A convex function on `Δ^N` together with a subgradient selector.
pub trait ConvexGenerator: Send + Sync {
    fn info(&self) -> GeneratorInfo;

    fn dim(&self) -> usize {
        self.info().n
    }

    /// `f(q)` for a point of the simplex given as a raw slice.
    fn value(&self, q: &[f64]) -> f64;

    /// Selector `∇f(q) ∈ ∂f(q)`.
    fn subgradient(&self, q: &ProbVec) -> ExtendedVec;

    fn is_strict(&self) -> bool;

    /// The built-in description, when this is one of the named families.
    fn as_spec(&self) -> Option<&GeneratorSpec> {
        None
    }

    /// Bregman divergence in a form without cancellation, when one is known.
    fn divergence(&self, _q: &[f64], _q_hat: &ProbVec) -> Option<f64> {
        None
    }
}

// ---------------------------------------------------------------------------
// Extended vectors
// ---------------------------------------------------------------------------

/// A vector in `[−∞, ∞)^N` where `−∞` may only sit off a declared support.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedVec {
    components: Vec<f64>,
}

impl ExtendedVec {
    /// Checks that every `−∞` entry is outside `support_of` and that no entry
    /// is NaN or `+∞`.
    pub fn new(components: Vec<f64>, support_of: &ProbVec) -> Result<Self> {
        check_dims(support_of.dim(), components.len())?;
        for (i, &v) in components.iter().enumerate() {
            if v.is_nan() || v == f64::INFINITY {
                return Err(Error::Input(format!("subgradient component {i} is {v}")));
            }
            if v == f64::NEG_INFINITY && support_of.in_support(i) {
                return Err(Error::Input(format!("subgradient component {i} is -inf on the support")));
            }
        }
        Ok(ExtendedVec { components })
    }

    pub(crate) fn from_raw(components: Vec<f64>) -> Self {
        ExtendedVec { components }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.components
    }

    pub fn has_neg_infinity(&self) -> bool {
        self.components.contains(&f64::NEG_INFINITY)
    }

    /// `⟨v, δ⟩` with `0·(−∞) = 0`. A `−∞` entry paired with a positive
    /// increment makes the product `−∞`.
    pub fn dot(&self, delta: &[f64]) -> f64 {
        let mut acc = 0.0;
        let mut neg_inf = false;
        let mut pos_inf = false;
        for (&v, &d) in self.components.iter().zip(delta) {
            if d == 0.0 {
                continue;
            }
            if v.is_infinite() {
                if (v < 0.0) == (d > 0.0) {
                    neg_inf = true;
                } else {
                    pos_inf = true;
                }
            } else {
                acc += v * d;
            }
        }
        match (neg_inf, pos_inf) {
            (true, false) => f64::NEG_INFINITY,
            (false, true) => f64::INFINITY,
            (true, true) => f64::NAN,
            (false, false) => acc,
        }
    }
}

impl Serialize for ExtendedVec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<Option<f64>> = self.components.iter().map(|x| x.is_finite().then_some(*x)).collect();
        v.serialize(s)
    }
}

// ---------------------------------------------------------------------------
// Built-in families
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Family {
    Shannon,
    SquaredAlphaNorm,
    AlphaNorm,
    Tsallis,
    MaxPower,
}

impl Family {
    pub const ALL: [Family; 5] =
        [Family::Shannon, Family::SquaredAlphaNorm, Family::AlphaNorm, Family::Tsallis, Family::MaxPower];

    pub fn name(self) -> &'static str {
        match self {
            Family::Shannon => "shannon",
            Family::SquaredAlphaNorm => "sq-alpha-norm",
            Family::AlphaNorm => "alpha-norm",
            Family::Tsallis => "tsallis",
            Family::MaxPower => "max-power",
        }
    }

    pub fn takes_alpha(self) -> bool {
        !matches!(self, Family::Shannon)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|fam| fam.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown generator family '{s}'")))
    }
}

/// A built-in generator: family, exponent and dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    family: Family,
    alpha: Option<f64>,
    dim: usize,
}

impl GeneratorSpec {
    pub fn new(family: Family, alpha: Option<f64>, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Input(format!("N must be >= 2, got {dim}")));
        }
        let alpha = match (family.takes_alpha(), alpha) {
            (false, None) => None,
            (false, Some(a)) => {
                return Err(Error::Input(format!("{family} takes no alpha (got {a})")));
            }
            (true, None) => return Err(Error::Input(format!("{family} requires alpha > 1"))),
            (true, Some(a)) if !(a.is_finite() && a > 1.0) => {
                return Err(Error::Input(format!("{family} requires finite alpha > 1, got {a}")));
            }
            (true, Some(a)) => Some(a),
        };
        Ok(GeneratorSpec { family, alpha, dim })
    }

    pub fn shannon(dim: usize) -> Result<Self> {
        GeneratorSpec::new(Family::Shannon, None, dim)
    }

    /// Squared 2-norm; its Savage loss is the Brier score minus one.
    pub fn brier(dim: usize) -> Result<Self> {
        GeneratorSpec::new(Family::SquaredAlphaNorm, Some(2.0), dim)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    fn a(&self) -> f64 {
        self.alpha.unwrap_or(1.0)
    }
}

fn alpha_norm(q: &[f64], a: f64) -> f64 {
    norm(q, PNorm::Finite(a))
}

impl ConvexGenerator for GeneratorSpec {
    fn info(&self) -> GeneratorInfo {
        GeneratorInfo { family: self.family.name().to_string(), alpha: self.alpha, n: self.dim }
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, q: &[f64]) -> f64 {
        let a = self.a();
        match self.family {
            Family::Shannon => q.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum(),
            Family::SquaredAlphaNorm => alpha_norm(q, a).powi(2),
            Family::AlphaNorm => alpha_norm(q, a),
            Family::Tsallis => q.iter().map(|&x| x.powf(a)).sum(),
            Family::MaxPower => {
                let c = 1.0 / q.len() as f64;
                q.iter().map(|&x| (x - c).abs().powf(a)).fold(0.0, f64::max)
            }
        }
    }

    fn subgradient(&self, q: &ProbVec) -> ExtendedVec {
        let a = self.a();
        let x = q.as_slice();
        let v = match self.family {
            Family::Shannon => {
                x.iter().map(|&xi| if xi > 0.0 { 1.0 + xi.ln() } else { f64::NEG_INFINITY }).collect()
            }
            Family::SquaredAlphaNorm => {
                let nrm = alpha_norm(x, a);
                x.iter().map(|&xi| 2.0 * nrm.powf(2.0 - a) * xi.powf(a - 1.0)).collect()
            }
            Family::AlphaNorm => {
                let nrm = alpha_norm(x, a);
                x.iter().map(|&xi| (xi / nrm).powf(a - 1.0)).collect()
            }
            Family::Tsallis => x.iter().map(|&xi| a * xi.powf(a - 1.0)).collect(),
            Family::MaxPower => {
                let c = 1.0 / x.len() as f64;
                let dev: Vec<f64> = x.iter().map(|&xi| (xi - c).abs()).collect();
                let k = crate::simplex::argmax(&dev);
                let mut g = vec![0.0; x.len()];
                let d = x[k] - c;
                if d != 0.0 {
                    g[k] = a * d.abs().powf(a - 1.0) * d.signum();
                }
                g
            }
        };
        ExtendedVec::from_raw(v)
    }

    fn as_spec(&self) -> Option<&GeneratorSpec> {
        Some(self)
    }

    fn divergence(&self, q: &[f64], q_hat: &ProbVec) -> Option<f64> {
        let y = q_hat.as_slice();
        match self.family {
            Family::SquaredAlphaNorm if self.alpha == Some(2.0) => {
                Some(q.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum())
            }
            Family::Shannon => {
                let mut total = 0.0;
                for (&a, &b) in q.iter().zip(y) {
                    if a > 0.0 && b == 0.0 {
                        return Some(f64::INFINITY);
                    }
                    // per-coordinate x ln(x/y) - x + y, nonnegative term by term
                    let term = if a > 0.0 { a * ((a - b) / b).ln_1p() - (a - b) } else { b };
                    total += term.max(0.0);
                }
                Some(total)
            }
            _ => None,
        }
    }

    fn is_strict(&self) -> bool {
        // max-power is strictly convex only in the binary case, where it
        // reduces to |q1 − 1/2|^α
        !matches!(self.family, Family::MaxPower) || self.dim == 2
    }
}

// ---------------------------------------------------------------------------
// Custom generators and affine shifts
// ---------------------------------------------------------------------------

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&ProbVec) -> Vec<f64> + Send + Sync;

/// A user-supplied `(f, ∇f)` pair, accepted only after it passes
/// [`subgradient_check`] on a resolution-20 grid.
#[derive(Clone)]
pub struct CustomGenerator {
    name: String,
    dim: usize,
    strict: bool,
    value: Arc<ValueFn>,
    grad: Arc<GradFn>,
}

impl fmt::Debug for CustomGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomGenerator").field("name", &self.name).field("dim", &self.dim).finish()
    }
}

impl CustomGenerator {
    pub fn register<F, G>(name: &str, dim: usize, strict: bool, value: F, grad: G) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&ProbVec) -> Vec<f64> + Send + Sync + 'static,
    {
        if dim < 2 {
            return Err(Error::Input(format!("N must be >= 2, got {dim}")));
        }
        let g = CustomGenerator { name: name.to_string(), dim, strict, value: Arc::new(value), grad: Arc::new(grad) };
        let grid = simplex_grid(dim, REGISTRATION_RESOLUTION)?;
        for q0 in &grid {
            let v = (g.grad)(q0);
            if v.len() != dim {
                return Err(Error::Rejected(format!("selector returned {} components, expected {dim}", v.len())));
            }
            if ExtendedVec::new(v, q0).is_err() {
                return Err(Error::Rejected(format!("selector at {:?} has -inf on the support", q0.as_slice())));
            }
            let report = subgradient_check(&g, q0, &grid)?;
            if !report.pass {
                return Err(Error::Rejected(format!(
                    "subgradient inequality fails at q0 = {:?} (violation {:.3e})",
                    q0.as_slice(),
                    report.worst_violation
                )));
            }
        }
        Ok(g)
    }
}

impl ConvexGenerator for CustomGenerator {
    fn info(&self) -> GeneratorInfo {
        GeneratorInfo { family: self.name.clone(), alpha: None, n: self.dim }
    }

    fn value(&self, q: &[f64]) -> f64 {
        (self.value)(q)
    }

    fn subgradient(&self, q: &ProbVec) -> ExtendedVec {
        ExtendedVec::from_raw((self.grad)(q))
    }

    fn is_strict(&self) -> bool {
        self.strict
    }
}

/// `f + ⟨u, ·⟩ + λ`, which shares Jensen gaps and Bregman divergences with `f`.
#[derive(Debug, Clone)]
pub struct AffineShift<G> {
    pub base: G,
    pub slope: Vec<f64>,
    pub offset: f64,
}

impl<G: ConvexGenerator> AffineShift<G> {
    pub fn new(base: G, slope: Vec<f64>, offset: f64) -> Result<Self> {
        check_dims(base.dim(), slope.len())?;
        Ok(AffineShift { base, slope, offset })
    }
}

impl<G: ConvexGenerator> ConvexGenerator for AffineShift<G> {
    fn info(&self) -> GeneratorInfo {
        let mut info = self.base.info();
        info.family = format!("{}+affine", info.family);
        info
    }

    fn value(&self, q: &[f64]) -> f64 {
        self.base.value(q) + q.iter().zip(&self.slope).map(|(a, b)| a * b).sum::<f64>() + self.offset
    }

    fn subgradient(&self, q: &ProbVec) -> ExtendedVec {
        let v = self.base.subgradient(q);
        ExtendedVec::from_raw(v.as_slice().iter().zip(&self.slope).map(|(a, b)| a + b).collect())
    }

    fn is_strict(&self) -> bool {
        self.base.is_strict()
    }

    fn divergence(&self, q: &[f64], q_hat: &ProbVec) -> Option<f64> {
        self.base.divergence(q, q_hat)
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// `f(q)` with a dimension check.
pub fn eval_f<G: ConvexGenerator + ?Sized>(g: &G, q: &ProbVec) -> Result<f64> {
    check_dims(g.dim(), q.dim())?;
    Ok(g.value(q.as_slice()))
}

pub fn subgradient<G: ConvexGenerator + ?Sized>(g: &G, q: &ProbVec) -> Result<ExtendedVec> {
    check_dims(g.dim(), q.dim())?;
    Ok(g.subgradient(q))
}

/// Outcome of [`subgradient_check`].
#[derive(Debug, Clone, Serialize)]
pub struct SubgradientReport {
    pub pass: bool,
    /// Largest `f(q0) + ⟨v, q − q0⟩ − f(q)` seen (positive means violated).
    pub worst_violation: f64,
    pub worst_probe: Option<ProbVec>,
}

/// Checks `f(q) ≥ f(q0) + ⟨v, q − q0⟩ − 1e-9` for every probe, with `v` the
/// generator's own selector at `q0`.
pub fn subgradient_check<G: ConvexGenerator + ?Sized>(g: &G, q0: &ProbVec, probes: &[ProbVec]) -> Result<SubgradientReport> {
    let v = subgradient(g, q0)?;
    subgradient_check_with(g, q0, &v, probes)
}

/// [`subgradient_check`] against an explicitly supplied candidate `v`.
pub fn subgradient_check_with<G: ConvexGenerator + ?Sized>(
    g: &G,
    q0: &ProbVec,
    v: &ExtendedVec,
    probes: &[ProbVec],
) -> Result<SubgradientReport> {
    check_dims(g.dim(), q0.dim())?;
    check_dims(g.dim(), v.as_slice().len())?;
    let f0 = g.value(q0.as_slice());
    let mut worst = f64::NEG_INFINITY;
    let mut worst_probe = None;
    for q in probes {
        check_dims(g.dim(), q.dim())?;
        let delta: Vec<f64> = q.as_slice().iter().zip(q0.as_slice()).map(|(a, b)| a - b).collect();
        let lin = v.dot(&delta);
        let violation = if lin == f64::NEG_INFINITY { f64::NEG_INFINITY } else { f0 + lin - g.value(q.as_slice()) };
        let violation = if violation.is_nan() { f64::INFINITY } else { violation };
        if violation > worst {
            worst = violation;
            worst_probe = Some(q.clone());
        }
    }
    Ok(SubgradientReport { pass: worst <= SUBGRADIENT_TOL, worst_violation: worst, worst_probe })
}
