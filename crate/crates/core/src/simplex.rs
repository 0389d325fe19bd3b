//! Probability-simplex primitives.
//!
//! [`ProbVec`] is a validated point of the simplex with cached support,
//! [`PNorm`] is a p-norm index in `[1, ∞]` with infinity as its own variant,
//! and [`SimplexPair`] is a pair of points together with their p-norm
//! distance. Grids and samplers feed the brute-force oracles and the
//! verification sweeps.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Slack accepted on the sum of an input vector before it is renormalized.
pub const SUM_SLACK: f64 = 1e-9;
/// Negative components within this magnitude are treated as float drift and zeroed.
pub const NEG_SLACK: f64 = 1e-12;
/// Default cap on the number of grid points a single enumeration may produce.
pub const DEFAULT_BUDGET_CAP: u128 = 5_000_000;
/// Environment variable overriding [`DEFAULT_BUDGET_CAP`].
pub const BUDGET_ENV: &str = "PROPER_REGRET_BUDGET_CAP";

/// Grid-size cap: `PROPER_REGRET_BUDGET_CAP` if set and parseable, else the default.
pub fn budget_cap() -> u128 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<u128>().ok())
        .unwrap_or(DEFAULT_BUDGET_CAP)
}

// ---------------------------------------------------------------------------
// p-norms
// ---------------------------------------------------------------------------

/// Index of a p-norm, `p ∈ [1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PNorm {
    Finite(f64),
    Infinity,
}

impl PNorm {
    pub const ONE: PNorm = PNorm::Finite(1.0);
    pub const TWO: PNorm = PNorm::Finite(2.0);

    /// Validates `p ≥ 1`. `f64::INFINITY` maps onto [`PNorm::Infinity`].
    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::Input(format!("p-norm index must be >= 1, got {p}")));
        }
        if p.is_infinite() {
            return Ok(PNorm::Infinity);
        }
        Ok(PNorm::Finite(p))
    }

    /// `1/p`, with `1/∞ = 0`.
    pub fn reciprocal(self) -> f64 {
        match self {
            PNorm::Finite(p) => 1.0 / p,
            PNorm::Infinity => 0.0,
        }
    }

    /// Diameter of the simplex in this norm, `2^{1/p}`.
    pub fn diameter(self) -> f64 {
        2f64.powf(self.reciprocal())
    }

    /// Hölder conjugate `p*` with `1/p + 1/p* = 1`.
    pub fn conjugate(self) -> PNorm {
        match self {
            PNorm::Infinity => PNorm::ONE,
            PNorm::Finite(1.0) => PNorm::Infinity,
            PNorm::Finite(p) => PNorm::Finite(p / (p - 1.0)),
        }
    }

    /// Label used in file names and reports: `1`, `2`, `inf`, or the decimal value.
    pub fn label(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PNorm::Infinity => write!(f, "inf"),
            PNorm::Finite(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for PNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        if matches!(t.as_str(), "inf" | "infinity" | "∞") {
            return Ok(PNorm::Infinity);
        }
        let p: f64 = t
            .parse()
            .map_err(|_| Error::Input(format!("cannot parse p-norm index '{s}'")))?;
        PNorm::new(p)
    }
}

impl Serialize for PNorm {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

/// Hölder conjugate of `p`.
pub fn holder_conjugate(p: PNorm) -> PNorm {
    p.conjugate()
}

/// p-norm of a finite vector.
pub fn p_norm(v: &[f64], p: PNorm) -> Result<f64> {
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::Input(format!("non-finite component {x} in p-norm")));
    }
    Ok(norm(v, p))
}

/// p-norm without the finiteness check. Used on hot paths where inputs are
/// already known to be finite.
pub(crate) fn norm(v: &[f64], p: PNorm) -> f64 {
    match p {
        PNorm::Infinity => v.iter().fold(0.0f64, |m, x| m.max(x.abs())),
        PNorm::Finite(1.0) => v.iter().map(|x| x.abs()).sum(),
        PNorm::Finite(2.0) => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        PNorm::Finite(q) => {
            // scale by the max component so large exponents do not underflow
            let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if m == 0.0 {
                return 0.0;
            }
            m * v.iter().map(|x| (x.abs() / m).powf(q)).sum::<f64>().powf(1.0 / q)
        }
    }
}

pub(crate) fn diff_norm(a: &[f64], b: &[f64], p: PNorm) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d, p)
}

// ---------------------------------------------------------------------------
// ProbVec
// ---------------------------------------------------------------------------

/// A point of the probability simplex `Δ^N`, `N ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVec {
    components: Vec<f64>,
    support: Vec<usize>,
}

impl ProbVec {
    /// Validates and normalizes `components`.
    ///
    /// Entries in `[-1e-12, 0)` are zeroed; anything more negative is an
    /// error. The sum must be within `1e-9` of one, and the residual is then
    /// moved onto the largest component.
    pub fn new(mut components: Vec<f64>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::Input(format!(
                "a simplex point needs N >= 2 components, got {}",
                components.len()
            )));
        }
        for x in components.iter_mut() {
            if !x.is_finite() {
                return Err(Error::Input(format!("non-finite simplex component {x}")));
            }
            if *x < 0.0 {
                if *x < -NEG_SLACK {
                    return Err(Error::Input(format!("negative simplex component {x}")));
                }
                *x = 0.0;
            }
        }
        let sum: f64 = components.iter().sum();
        if (sum - 1.0).abs() > SUM_SLACK {
            return Err(Error::Input(format!(
                "simplex components sum to {sum}, not 1 within {SUM_SLACK}"
            )));
        }
        let largest = argmax(&components);
        components[largest] += 1.0 - sum;
        let support = components
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > 0.0)
            .map(|(i, _)| i)
            .collect();
        Ok(ProbVec { components, support })
    }

    /// Binary point `(q1, 1 − q1)`.
    pub fn binary(q1: f64) -> Result<Self> {
        ProbVec::new(vec![q1, 1.0 - q1])
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Input(format!("N must be >= 2, got {n}")));
        }
        ProbVec::new(vec![1.0 / n as f64; n])
    }

    /// The `i`-th vertex `e_i` (0-based).
    pub fn vertex(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::Input(format!("vertex index {i} out of range for N = {n}")));
        }
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        ProbVec::new(v)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.components
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.components
    }

    /// Indices with strictly positive mass, ascending.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn in_support(&self, i: usize) -> bool {
        self.components.get(i).is_some_and(|&x| x > 0.0)
    }

    /// True when every component is positive.
    pub fn is_interior(&self) -> bool {
        self.support.len() == self.components.len()
    }

    /// `(1 − t)·self + t·other`.
    pub fn lerp(&self, other: &ProbVec, t: f64) -> Result<ProbVec> {
        check_dims(self.dim(), other.dim())?;
        ProbVec::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect(),
        )
    }

    pub fn midpoint(&self, other: &ProbVec) -> Result<ProbVec> {
        self.lerp(other, 0.5)
    }
}

impl Serialize for ProbVec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.components.serialize(serializer)
    }
}

pub(crate) fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension { expected, got });
    }
    Ok(())
}

/// Lowest index attaining the maximum.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Pairs
// ---------------------------------------------------------------------------

/// Two simplex points and their p-norm distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexPair {
    pub q: ProbVec,
    pub q_check: ProbVec,
    pub distance: f64,
    pub p: PNorm,
}

impl SimplexPair {
    pub fn new(q: ProbVec, q_check: ProbVec, p: PNorm) -> Result<Self> {
        check_dims(q.dim(), q_check.dim())?;
        let distance = diff_norm(q.as_slice(), q_check.as_slice(), p);
        Ok(SimplexPair { q, q_check, distance, p })
    }

    /// The same pair with the endpoints swapped so that `q` is lexicographically
    /// the larger one.
    pub fn oriented(self) -> Self {
        if lex_cmp(self.q.as_slice(), self.q_check.as_slice()) == std::cmp::Ordering::Less {
            SimplexPair { q: self.q_check, q_check: self.q, ..self }
        } else {
            self
        }
    }
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Builds a pair at exact p-norm distance `r` along `direction`.
///
/// The chord is centred on `base` when it fits; otherwise it slides along the
/// line through `base` until both endpoints are on the simplex. The endpoint
/// on the positive side of `direction` is `q`.
pub fn pair_at_distance(base: &ProbVec, direction: &[f64], r: f64, p: PNorm) -> Result<SimplexPair> {
    let n = base.dim();
    check_dims(n, direction.len())?;
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Input(format!("distance must be finite and >= 0, got {r}")));
    }
    if r > p.diameter() + 1e-12 {
        return Err(Error::InfeasiblePair(format!(
            "distance {r} exceeds the simplex diameter {}",
            p.diameter()
        )));
    }
    if r == 0.0 {
        return SimplexPair::new(base.clone(), base.clone(), p);
    }
    let dn = p_norm(direction, p)?;
    if dn == 0.0 {
        return Err(Error::InfeasiblePair("zero direction with positive distance".into()));
    }
    let scale = direction.iter().map(|x| x.abs()).fold(0.0f64, f64::max);
    let sum: f64 = direction.iter().sum();
    if sum.abs() > 1e-9 * scale.max(1.0) {
        return Err(Error::Input(format!("direction must sum to 0, sums to {sum}")));
    }
    let unit: Vec<f64> = direction.iter().map(|x| x / dn).collect();
    let b = base.as_slice();

    // feasible offsets s with base + s·unit >= 0
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (bi, ui) in b.iter().zip(&unit) {
        if *ui > 0.0 {
            lo = lo.max(-bi / ui);
        } else if *ui < 0.0 {
            hi = hi.min(-bi / ui);
        }
    }
    let half = 0.5 * r;
    if hi - lo < r * (1.0 - 1e-12) {
        return Err(Error::InfeasiblePair(format!(
            "chord through base has length {} < {r}",
            hi - lo
        )));
    }
    let centre = if hi - lo <= r { 0.5 * (lo + hi) } else { 0.0f64.clamp(lo + half, hi - half) };
    let (s_plus, s_minus) = ((centre + half).min(hi), (centre - half).max(lo));
    let q = ProbVec::new(b.iter().zip(&unit).map(|(bi, ui)| bi + s_plus * ui).collect())?;
    let q_check = ProbVec::new(b.iter().zip(&unit).map(|(bi, ui)| bi + s_minus * ui).collect())?;
    SimplexPair::new(q, q_check, p)
}

// ---------------------------------------------------------------------------
// Grids and sampling
// ---------------------------------------------------------------------------

/// `C(n, k)` in u128, saturating.
pub(crate) fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of lattice points `{k / resolution}` on `Δ^N`.
pub fn grid_size(n: usize, resolution: usize) -> u128 {
    binomial((resolution + n - 1) as u128, (n - 1) as u128)
}

/// All lattice points with coordinates in `{k / resolution}`, ascending in
/// lexicographic order, with the cap taken from [`budget_cap`].
pub fn simplex_grid(n: usize, resolution: usize) -> Result<Vec<ProbVec>> {
    simplex_grid_capped(n, resolution, budget_cap())
}

pub fn simplex_grid_capped(n: usize, resolution: usize, cap: u128) -> Result<Vec<ProbVec>> {
    if n < 2 {
        return Err(Error::Input(format!("N must be >= 2, got {n}")));
    }
    if resolution < 1 {
        return Err(Error::Input("grid resolution must be >= 1".into()));
    }
    let needed = grid_size(n, resolution);
    if needed > cap {
        return Err(Error::Budget { what: format!("simplex grid (N={n}, res={resolution})"), needed, cap });
    }
    let mut out = Vec::with_capacity(needed as usize);
    let mut counts = vec![0usize; n];
    fill_compositions(&mut counts, 0, resolution, resolution, &mut out)?;
    Ok(out)
}

fn fill_compositions(
    counts: &mut [usize],
    idx: usize,
    remaining: usize,
    resolution: usize,
    out: &mut Vec<ProbVec>,
) -> Result<()> {
    let n = counts.len();
    if idx == n - 1 {
        counts[idx] = remaining;
        let v = counts.iter().map(|&k| k as f64 / resolution as f64).collect();
        out.push(ProbVec::new(v)?);
        return Ok(());
    }
    for k in 0..=remaining {
        counts[idx] = k;
        fill_compositions(counts, idx + 1, remaining - k, resolution, out)?;
    }
    Ok(())
}

/// RNG for one item of a seeded sweep. Each `stream` is an independent
/// ChaCha stream, so results do not depend on how items are scheduled.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One flat-Dirichlet draw.
pub fn sample_point<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ProbVec {
    loop {
        let e: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let s: f64 = e.iter().sum();
        if s > 0.0 && s.is_finite() {
            if let Ok(p) = ProbVec::new(e.iter().map(|x| x / s).collect()) {
                return p;
            }
        }
    }
}

/// `count` i.i.d. uniform points on `Δ^N`; sample `i` uses stream `i`.
pub fn sample_simplex(n: usize, count: usize, seed: u64) -> Result<Vec<ProbVec>> {
    if n < 2 {
        return Err(Error::Input(format!("N must be >= 2, got {n}")));
    }
    if count < 1 {
        return Err(Error::Input("sample count must be >= 1".into()));
    }
    Ok((0..count as u64)
        .into_par_iter()
        .map(|i| sample_point(n, &mut stream_rng(seed, i)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn p_norm_examples() {
        assert_eq!(p_norm(&[1.0, -1.0], PNorm::ONE).unwrap(), 2.0);
        assert_relative_eq!(p_norm(&[0.3, -0.3], PNorm::TWO).unwrap(), 0.3 * 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(p_norm(&[0.3, -0.3], PNorm::Infinity).unwrap(), 0.3);
        assert_relative_eq!(p_norm(&[3.0, 4.0], PNorm::Finite(3.0)).unwrap(), 91f64.cbrt(), epsilon = 1e-14);
        assert!(p_norm(&[f64::NAN, 0.0], PNorm::ONE).is_err());
        assert!(p_norm(&[f64::INFINITY, 0.0], PNorm::TWO).is_err());
    }

    #[test]
    fn conjugates() {
        assert_eq!(holder_conjugate(PNorm::TWO), PNorm::TWO);
        assert_eq!(holder_conjugate(PNorm::ONE), PNorm::Infinity);
        assert_eq!(holder_conjugate(PNorm::Infinity), PNorm::ONE);
        match holder_conjugate(PNorm::Finite(4.0)) {
            PNorm::Finite(q) => assert_relative_eq!(q, 4.0 / 3.0, epsilon = 1e-15),
            PNorm::Infinity => panic!("4 is not conjugate to inf"),
        }
        assert!(PNorm::new(0.5).is_err());
        assert!(PNorm::new(f64::NAN).is_err());
        assert_eq!(PNorm::new(f64::INFINITY).unwrap(), PNorm::Infinity);
        assert_eq!("inf".parse::<PNorm>().unwrap(), PNorm::Infinity);
        assert_eq!("1.5".parse::<PNorm>().unwrap(), PNorm::Finite(1.5));
    }

    #[test]
    fn probvec_validation() {
        let q = ProbVec::new(vec![0.5, 0.5 + 5e-10]).unwrap();
        assert!((q.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(ProbVec::new(vec![0.5, 0.6]).is_err());
        assert!(ProbVec::new(vec![1.0]).is_err());
        assert!(ProbVec::new(vec![1.1, -0.1]).is_err());
        let z = ProbVec::new(vec![1.0 + 1e-13, -1e-13]).unwrap();
        assert_eq!(z.support(), &[0]);
        assert_eq!(z.as_slice()[1], 0.0);
        let v = ProbVec::vertex(3, 1).unwrap();
        assert_eq!(v.support(), &[1]);
        assert!(!v.is_interior());
    }

    #[test]
    fn pair_examples() {
        let base = ProbVec::binary(0.5).unwrap();
        let pair = pair_at_distance(&base, &[1.0, -1.0], 1.0, PNorm::ONE).unwrap();
        assert_relative_eq!(pair.q.as_slice()[0], 0.75, epsilon = 1e-15);
        assert_relative_eq!(pair.q_check.as_slice()[0], 0.25, epsilon = 1e-15);
        assert_relative_eq!(pair.distance, 1.0, epsilon = 1e-12);

        let zero = pair_at_distance(&base, &[1.0, -1.0], 0.0, PNorm::ONE).unwrap();
        assert_eq!(zero.q, base);
        assert_eq!(zero.q_check, base);

        let third = ProbVec::uniform(3).unwrap();
        let r = 2f64.sqrt() * 0.2;
        let pair = pair_at_distance(&third, &[1.0, -1.0, 0.0], r, PNorm::TWO).unwrap();
        let d: Vec<f64> = pair.q.as_slice().iter().zip(pair.q_check.as_slice()).map(|(a, b)| a - b).collect();
        assert_relative_eq!(d[0], 0.2, epsilon = 1e-12);
        assert_relative_eq!(d[1], -0.2, epsilon = 1e-12);
        assert_eq!(d[2], 0.0);
        assert_relative_eq!(pair.distance, r, epsilon = 1e-12);
    }

    #[test]
    fn pair_slides_and_rejects() {
        // near a vertex the chord cannot be centred on the base
        let base = ProbVec::binary(0.9).unwrap();
        let pair = pair_at_distance(&base, &[1.0, -1.0], 1.0, PNorm::ONE).unwrap();
        assert_relative_eq!(pair.distance, 1.0, epsilon = 1e-12);
        assert_relative_eq!(pair.q.as_slice()[0], 1.0, epsilon = 1e-12);
        // diameter is reachable, beyond it is not
        assert!(pair_at_distance(&base, &[1.0, -1.0], 2.0, PNorm::ONE).is_ok());
        assert!(matches!(
            pair_at_distance(&base, &[1.0, -1.0], 2.1, PNorm::ONE),
            Err(Error::InfeasiblePair(_))
        ));
        // a direction that leaves the simplex immediately from a vertex
        let v = ProbVec::vertex(3, 0).unwrap();
        assert!(matches!(
            pair_at_distance(&v, &[0.0, 1.0, -1.0], 0.1, PNorm::TWO),
            Err(Error::InfeasiblePair(_))
        ));
        assert!(pair_at_distance(&base, &[1.0, 1.0], 0.1, PNorm::ONE).is_err());
    }

    #[test]
    fn grid_examples() {
        let g = simplex_grid(2, 2).unwrap();
        let pts: Vec<Vec<f64>> = g.iter().map(|q| q.as_slice().to_vec()).collect();
        assert_eq!(pts, vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]]);
        assert_eq!(simplex_grid(2, 4).unwrap().len(), 5);
        assert_eq!(simplex_grid(3, 3).unwrap().len(), 10);
        assert_eq!(grid_size(3, 30), 496);
        assert!(matches!(simplex_grid_capped(5, 100, 1000), Err(Error::Budget { .. })));
        // lattice counts increase lexicographically
        let counts: Vec<Vec<u32>> =
            simplex_grid(3, 7).unwrap().iter().map(|q| q.as_slice().iter().map(|x| (x * 7.0).round() as u32).collect()).collect();
        assert!(counts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn sampling_examples() {
        let a = sample_simplex(2, 3, 7).unwrap();
        let b = sample_simplex(2, 3, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(sample_simplex(2, 1, 11).unwrap().len(), 1);
        let big = sample_simplex(3, 10_000, 3).unwrap();
        for i in 0..3 {
            let mean = big.iter().map(|q| q.as_slice()[i]).sum::<f64>() / big.len() as f64;
            assert!((mean - 1.0 / 3.0).abs() < 0.02, "component {i} mean {mean}");
        }
        assert!(sample_simplex(1, 3, 0).is_err());
        assert!(sample_simplex(3, 0, 0).is_err());
    }

    #[test]
    fn diameter_on_grid() {
        for p in [PNorm::ONE, PNorm::TWO, PNorm::Infinity, PNorm::Finite(3.0)] {
            let g = simplex_grid(3, 6).unwrap();
            let mut best = 0.0f64;
            for a in &g {
                for b in &g {
                    best = best.max(diff_norm(a.as_slice(), b.as_slice(), p));
                }
            }
            assert!((best - p.diameter()).abs() < 1e-9, "p={p}: {best}");
        }
    }
}
