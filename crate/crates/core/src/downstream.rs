//! Plug-in decisions built on a probability estimate and the bounds that tie
//! their regret to `‖q − q̂‖_p` and, through the inverse modulus, to the
//! surrogate regret: 0-1 classification, classification under label noise,
//! and bipartite ranking.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::ConvexGenerator;
use crate::modulus::{inverse_modulus, ModulusCurve};
use crate::proper_loss::bregman;
use crate::simplex::{argmax, check_dims, norm, sample_point, stream_rng, PNorm, ProbVec};

/// Slack of every downstream inequality.
pub const BOUND_TOL: f64 = 1e-12;
/// Row sums of a noise matrix must be within this of one.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Condition number below which the inversion round trip is asserted.
pub const WELL_CONDITIONED: f64 = 1e3;

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

/// Row-stochastic, invertible label-noise matrix `C`, with `C_ij` the
/// probability of observing `j` when the clean label is `i`.
#[derive(Debug, Clone)]
pub struct NoiseMatrix {
    c: DMatrix<f64>,
    c_inv: DMatrix<f64>,
    condition: f64,
}

impl NoiseMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::Input("noise matrix needs at least two rows".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            check_dims(n, row.len())?;
            if row.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(Error::Input(format!("noise matrix row {i} has entries outside [0, 1]")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Input(format!("noise matrix row {i} sums to {s}")));
            }
        }
        let c = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let sv = c.clone().svd(false, false).singular_values;
        let (smax, smin) = (sv.max(), sv.min());
        if smin <= f64::EPSILON * smax {
            return Err(Error::Singular(format!("smallest singular value {smin}")));
        }
        let c_inv = c.clone().try_inverse().ok_or_else(|| Error::Singular("matrix is not invertible".into()))?;
        Ok(NoiseMatrix { c, c_inv, condition: smax / smin })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        NoiseMatrix::new(&rows)
    }

    /// Symmetric noise: keep the label with probability `1 − eps`, otherwise
    /// flip uniformly to one of the others.
    pub fn symmetric(n: usize, eps: f64) -> Result<Self> {
        let off = eps / (n - 1) as f64;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 - eps } else { off }).collect()).collect();
        NoiseMatrix::new(&rows)
    }

    pub fn dim(&self) -> usize {
        self.c.nrows()
    }

    /// Spectral condition number.
    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|i| self.c.row(i).iter().copied().collect()).collect()
    }

    /// Noisy class probabilities `q̃ = Cᵀq`.
    pub fn noisy(&self, q: &ProbVec) -> Result<ProbVec> {
        check_dims(self.dim(), q.dim())?;
        let v = self.c.tr_mul(&DMatrix::from_column_slice(q.dim(), 1, q.as_slice()));
        ProbVec::new(v.iter().copied().collect())
    }

    fn inv_times(&self, v: &[f64]) -> Vec<f64> {
        (&self.c_inv * DMatrix::from_column_slice(v.len(), 1, v)).iter().copied().collect()
    }

    fn inv_transpose_times(&self, v: &[f64]) -> Vec<f64> {
        self.c_inv.tr_mul(&DMatrix::from_column_slice(v.len(), 1, v)).iter().copied().collect()
    }
}

/// The 0-1 loss matrix `L_ij = 1 − δ_ij`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroOneLossMatrix {
    pub n: usize,
}

impl ZeroOneLossMatrix {
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            1.0
        }
    }

    /// Column `L_y`: the loss of predicting `y` under each true label.
    pub fn column(&self, y: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.entry(i, y)).collect()
    }
}

// ---------------------------------------------------------------------------
// Task 1: 0-1 classification
// ---------------------------------------------------------------------------

/// Plug-in label `argmax_y q̂_y`, lowest index on ties (0-based).
pub fn plugin_label(q_hat: &[f64]) -> usize {
    argmax(q_hat)
}

/// Regret of predicting `label` under `q`: `max_y q_y − q_label`.
pub fn zero_one_regret_of(q: &ProbVec, label: usize) -> f64 {
    let s = q.as_slice();
    (s[argmax(s)] - s[label]).max(0.0)
}

/// 0-1 regret of the plug-in label of `q̂`.
pub fn zero_one_regret(q: &ProbVec, q_hat: &ProbVec) -> Result<f64> {
    check_dims(q.dim(), q_hat.dim())?;
    Ok(zero_one_regret_of(q, plugin_label(q_hat.as_slice())))
}

/// Both sides of an inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl BoundCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        BoundCheck { lhs, rhs, pass: lhs <= rhs + BOUND_TOL }
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// `Reg₀₁(q, q̂) ≤ 2^{1−1/p}‖q − q̂‖_p`.
pub fn zero_one_bound_check(q: &ProbVec, q_hat: &ProbVec, p: PNorm) -> Result<BoundCheck> {
    let lhs = zero_one_regret(q, q_hat)?;
    Ok(BoundCheck::new(lhs, zero_one_constant(p) * diff(q.as_slice(), q_hat.as_slice(), p)))
}

fn zero_one_constant(p: PNorm) -> f64 {
    2f64.powf(1.0 - p.reciprocal())
}

fn diff(a: &[f64], b: &[f64], p: PNorm) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d, p)
}

// ---------------------------------------------------------------------------
// Task 2: label noise
// ---------------------------------------------------------------------------

/// `(Cᵀ)⁻¹q̂`. The result may leave the simplex; only its argmax is used.
pub fn noise_correct(q_hat_noisy: &ProbVec, c: &NoiseMatrix) -> Result<Vec<f64>> {
    check_dims(c.dim(), q_hat_noisy.dim())?;
    Ok(c.inv_transpose_times(q_hat_noisy.as_slice()))
}

/// `max_y ‖C⁻¹(L_č − L_y)‖_{p*}` for the corrected label `č`.
pub fn noise_constant(c: &NoiseMatrix, label: usize, p: PNorm) -> f64 {
    let n = c.dim();
    let pstar = p.conjugate();
    (0..n)
        .map(|y| {
            // L_č − L_y = e_y − e_č
            let mut v = vec![0.0; n];
            v[y] += 1.0;
            v[label] -= 1.0;
            norm(&c.inv_times(&v), pstar)
        })
        .fold(0.0, f64::max)
}

/// `Reg₀₁(q, č) ≤ ‖Cᵀq − q̂‖_p · max_y ‖C⁻¹(L_č − L_y)‖_{p*}` with
/// `č = argmax (Cᵀ)⁻¹q̂`.
pub fn noisy_label_bound_check(q: &ProbVec, q_hat_noisy: &ProbVec, c: &NoiseMatrix, p: PNorm) -> Result<BoundCheck> {
    check_dims(q.dim(), q_hat_noisy.dim())?;
    let label = plugin_label(&noise_correct(q_hat_noisy, c)?);
    let q_tilde = c.noisy(q)?;
    let lhs = zero_one_regret_of(q, label);
    let rhs = diff(q_tilde.as_slice(), q_hat_noisy.as_slice(), p) * noise_constant(c, label, p);
    Ok(BoundCheck::new(lhs, rhs))
}

// ---------------------------------------------------------------------------
// Task 3: bipartite ranking
// ---------------------------------------------------------------------------

fn check_unit(x: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Input(format!("{what} = {x} outside [0, 1]")));
    }
    Ok(())
}

/// Ranking regret of scoring two instances by `q̂`, `q̂′` when their positive
/// probabilities are `q`, `q′`.
pub fn ranking_regret(q: f64, q_prime: f64, q_hat: f64, q_hat_prime: f64) -> Result<f64> {
    for (x, w) in [(q, "q"), (q_prime, "q'"), (q_hat, "q_hat"), (q_hat_prime, "q_hat'")] {
        check_unit(x, w)?;
    }
    let gap = (q - q_prime).abs();
    let s = (q_hat - q_hat_prime) * (q - q_prime);
    let wrong = if s < 0.0 { 1.0 } else { 0.0 };
    let tie = if q_hat == q_hat_prime { 0.5 } else { 0.0 };
    Ok(gap * (wrong + tie))
}

/// Ranking regret `≤ |q − q̂| + |q′ − q̂′|`.
pub fn ranking_bound_check(q: f64, q_prime: f64, q_hat: f64, q_hat_prime: f64) -> Result<BoundCheck> {
    let lhs = ranking_regret(q, q_prime, q_hat, q_hat_prime)?;
    Ok(BoundCheck::new(lhs, (q - q_hat).abs() + (q_prime - q_hat_prime).abs()))
}

// ---------------------------------------------------------------------------
// Composition with the surrogate regret
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    ZeroOne,
    Noisy,
    Ranking,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::ZeroOne, Task::Noisy, Task::Ranking];

    pub fn name(self) -> &'static str {
        match self {
            Task::ZeroOne => "zero-one",
            Task::Noisy => "noisy",
            Task::Ranking => "ranking",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero-one" | "01" | "classification" => Ok(Task::ZeroOne),
            "noisy" => Ok(Task::Noisy),
            "ranking" => Ok(Task::Ranking),
            _ => Err(Error::Input(format!("unknown task '{s}' (zero-one, noisy, ranking)"))),
        }
    }
}

/// One downstream instance.
#[derive(Debug, Clone)]
pub enum Instance<'a> {
    ZeroOne { q: ProbVec, q_hat: ProbVec },
    /// `q_hat` estimates the noisy distribution `Cᵀq`.
    Noisy { q: ProbVec, q_hat: ProbVec, c: &'a NoiseMatrix },
    /// Two binary instances.
    Ranking { q: ProbVec, q_hat: ProbVec, q_prime: ProbVec, q_hat_prime: ProbVec },
}

impl Instance<'_> {
    pub fn task(&self) -> Task {
        match self {
            Instance::ZeroOne { .. } => Task::ZeroOne,
            Instance::Noisy { .. } => Task::Noisy,
            Instance::Ranking { .. } => Task::Ranking,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    /// The curve cannot be inverted (non-strict generator); no bound follows.
    Vacuous,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndToEndReport {
    pub task: Task,
    pub task_regret: f64,
    /// One surrogate regret per estimate involved.
    pub surrogate_regret: Vec<f64>,
    /// `ω⁻¹(R/2)` per estimate.
    pub distance_bound: Vec<f64>,
    pub chained_bound: Option<f64>,
    pub verdict: Verdict,
}

/// Task regret against `constant · ω⁻¹(R/2)`.
pub fn end_to_end_bound<G: ConvexGenerator + ?Sized>(g: &G, curve: &ModulusCurve, instance: &Instance) -> Result<EndToEndReport> {
    let p = curve.p;
    // pairs (truth, estimate) entering the surrogate regret
    let (task_regret, pairs, constant): (f64, Vec<(ProbVec, &ProbVec)>, f64) = match instance {
        Instance::ZeroOne { q, q_hat } => (zero_one_regret(q, q_hat)?, vec![(q.clone(), q_hat)], zero_one_constant(p)),
        Instance::Noisy { q, q_hat, c } => {
            let label = plugin_label(&noise_correct(q_hat, c)?);
            (zero_one_regret_of(q, label), vec![(c.noisy(q)?, q_hat)], noise_constant(c, label, p))
        }
        Instance::Ranking { q, q_hat, q_prime, q_hat_prime } => {
            for v in [q, q_hat, q_prime, q_hat_prime] {
                check_dims(2, v.dim())?;
            }
            let reg = ranking_regret(q.as_slice()[0], q_prime.as_slice()[0], q_hat.as_slice()[0], q_hat_prime.as_slice()[0])?;
            // |q₁ − q̂₁| = ‖q − q̂‖_p / 2^{1/p}
            (reg, vec![(q.clone(), q_hat), (q_prime.clone(), q_hat_prime)], 1.0 / p.diameter())
        }
    };
    let mut surrogate = Vec::new();
    let mut dist = Vec::new();
    for (truth, est) in &pairs {
        check_dims(g.dim(), truth.dim())?;
        let reg = bregman(g, truth.as_slice(), est);
        surrogate.push(reg);
        let d = if reg.is_infinite() {
            Ok(p.diameter())
        } else {
            inverse_modulus(curve, 0.5 * reg)
        };
        match d {
            Ok(d) => dist.push(d),
            Err(Error::NonInvertible(_)) => {
                return Ok(EndToEndReport {
                    task: instance.task(),
                    task_regret,
                    surrogate_regret: surrogate,
                    distance_bound: Vec::new(),
                    chained_bound: None,
                    verdict: Verdict::Vacuous,
                });
            }
            Err(e) => return Err(e),
        }
    }
    let bound = constant * dist.iter().sum::<f64>();
    let verdict = if task_regret <= bound + BOUND_TOL { Verdict::Holds } else { Verdict::Violated };
    Ok(EndToEndReport {
        task: instance.task(),
        task_regret,
        surrogate_regret: surrogate,
        distance_bound: dist,
        chained_bound: Some(bound),
        verdict,
    })
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DownstreamWitness {
    pub q: Vec<Vec<f64>>,
    pub q_hat: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<Vec<Vec<f64>>>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub task: Task,
    pub p: PNorm,
    pub family: Option<String>,
    #[serde(rename = "N")]
    pub n: usize,
    pub samples: usize,
    pub violations: usize,
    /// Smallest `rhs − lhs` over every inequality checked.
    pub worst_margin: f64,
    /// Worst noise round trip `‖(Cᵀ)⁻¹Cᵀq − q‖_∞` over well-conditioned draws.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_round_trip: Option<f64>,
    pub vacuous: usize,
    pub example_witness: Option<DownstreamWitness>,
    pub pass: bool,
}

/// Random row-stochastic matrix with diagonal in `[0.6, 1)`.
pub fn random_noise_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<NoiseMatrix> {
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let d = 0.6 + 0.4 * rng.random::<f64>();
        let rest = if n == 2 { vec![1.0] } else { sample_point(n - 1, rng).into_vec() };
        let mut row = Vec::with_capacity(n);
        let mut k = 0;
        for j in 0..n {
            if j == i {
                row.push(d);
            } else {
                row.push((1.0 - d) * rest[k]);
                k += 1;
            }
        }
        // absorb rounding so the row sums to one
        let s: f64 = row.iter().sum();
        row[i] += 1.0 - s;
        rows.push(row);
    }
    NoiseMatrix::new(&rows)
}

struct SampleOutcome {
    margin: f64,
    violated: bool,
    vacuous: bool,
    round_trip: Option<f64>,
    witness: DownstreamWitness,
}

fn binary_from<R: Rng + ?Sized>(rng: &mut R, ties: bool) -> f64 {
    if ties {
        // coarse values so that ties actually occur
        rng.random_range(0..=10) as f64 / 10.0
    } else {
        rng.random::<f64>()
    }
}

fn sample_once<G: ConvexGenerator + ?Sized>(
    task: Task,
    p: PNorm,
    n: usize,
    chain: Option<(&G, &ModulusCurve)>,
    seed: u64,
    i: u64,
) -> Result<SampleOutcome> {
    let mut rng = stream_rng(seed, i);
    let mut checks: Vec<BoundCheck> = Vec::new();
    let mut vacuous = false;
    let mut round_trip = None;
    let (qs, qhs, noise): (Vec<ProbVec>, Vec<ProbVec>, Option<NoiseMatrix>) = match task {
        Task::ZeroOne => {
            let q = sample_point(n, &mut rng);
            let q_hat = if rng.random::<f64>() < 0.1 { q.clone() } else { sample_point(n, &mut rng) };
            checks.push(zero_one_bound_check(&q, &q_hat, p)?);
            (vec![q], vec![q_hat], None)
        }
        Task::Noisy => {
            let c = random_noise_matrix(n, &mut rng)?;
            let q = sample_point(n, &mut rng);
            let q_tilde = c.noisy(&q)?;
            if c.condition_number() < WELL_CONDITIONED {
                let back = noise_correct(&q_tilde, &c)?;
                round_trip = Some(back.iter().zip(q.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
            }
            let lambda = rng.random::<f64>();
            let other = sample_point(n, &mut rng);
            let mix: Vec<f64> = q_tilde.as_slice().iter().zip(other.as_slice()).map(|(a, b)| (1.0 - lambda) * a + lambda * b).collect();
            let q_hat = ProbVec::new(mix)?;
            checks.push(noisy_label_bound_check(&q, &q_hat, &c, p)?);
            (vec![q], vec![q_hat], Some(c))
        }
        Task::Ranking => {
            if n != 2 {
                return Err(Error::Input("ranking works on binary instances (N = 2)".into()));
            }
            let ties = rng.random::<f64>() < 0.25;
            let v: Vec<f64> = (0..4).map(|_| binary_from(&mut rng, ties)).collect();
            checks.push(ranking_bound_check(v[0], v[1], v[2], v[3])?);
            let b = |x: f64| ProbVec::binary(x);
            (vec![b(v[0])?, b(v[1])?], vec![b(v[2])?, b(v[3])?], None)
        }
    };
    if let Some((g, curve)) = chain {
        let instance = match task {
            Task::ZeroOne => Instance::ZeroOne { q: qs[0].clone(), q_hat: qhs[0].clone() },
            Task::Noisy => Instance::Noisy { q: qs[0].clone(), q_hat: qhs[0].clone(), c: noise.as_ref().expect("noise matrix") },
            Task::Ranking => Instance::Ranking {
                q: qs[0].clone(),
                q_hat: qhs[0].clone(),
                q_prime: qs[1].clone(),
                q_hat_prime: qhs[1].clone(),
            },
        };
        let rep = end_to_end_bound(g, curve, &instance)?;
        match rep.chained_bound {
            Some(b) => checks.push(BoundCheck::new(rep.task_regret, b)),
            None => vacuous = true,
        }
    }
    let worst = checks.iter().min_by(|a, b| a.margin().total_cmp(&b.margin())).copied().expect("at least one check");
    Ok(SampleOutcome {
        margin: worst.margin(),
        violated: checks.iter().any(|c| !c.pass),
        vacuous,
        round_trip,
        witness: DownstreamWitness {
            q: qs.iter().map(|v| v.as_slice().to_vec()).collect(),
            q_hat: qhs.iter().map(|v| v.as_slice().to_vec()).collect(),
            noise: noise.map(|c| c.rows()),
            lhs: worst.lhs,
            rhs: worst.rhs,
        },
    })
}

/// Seeded sweep of the task-level bound and, when `chain` is given, of the
/// composed bound through the generator's modulus curve.
pub fn downstream_sweep<G: ConvexGenerator + ?Sized>(
    task: Task,
    p: PNorm,
    n: usize,
    chain: Option<(&G, &ModulusCurve)>,
    samples: usize,
    seed: u64,
) -> Result<SweepReport> {
    if n < 2 {
        return Err(Error::Input(format!("N must be >= 2, got {n}")));
    }
    if let Some((g, curve)) = chain {
        check_dims(n, g.dim())?;
        if curve.p != p {
            return Err(Error::Input(format!("curve is for p = {}, sweep for p = {p}", curve.p)));
        }
    }
    let outcomes: Vec<Result<SampleOutcome>> =
        (0..samples as u64).into_par_iter().map(|i| sample_once(task, p, n, chain, seed, i)).collect();
    let mut report = SweepReport {
        task,
        p,
        family: chain.map(|(g, _)| g.info().family),
        n,
        samples,
        violations: 0,
        worst_margin: f64::INFINITY,
        worst_round_trip: None,
        vacuous: 0,
        example_witness: None,
        pass: true,
    };
    for o in outcomes {
        let o = o?;
        if o.violated {
            report.violations += 1;
        }
        if o.vacuous {
            report.vacuous += 1;
        }
        if let Some(rt) = o.round_trip {
            report.worst_round_trip = Some(report.worst_round_trip.map_or(rt, |w: f64| w.max(rt)));
        }
        if o.margin < report.worst_margin {
            report.worst_margin = o.margin;
            report.example_witness = Some(o.witness);
        }
    }
    report.pass = report.violations == 0 && report.worst_round_trip.is_none_or(|w| w <= 1e-10);
    Ok(report)
}

/// `‖q − q̂‖₂ ≤ √(2R/κ)` for a `κ`-strongly proper loss.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrongChainReport {
    pub kappa: f64,
    pub samples: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub pass: bool,
}

pub fn strong_chain_check<G: ConvexGenerator + ?Sized>(g: &G, kappa: f64, samples: usize, seed: u64) -> Result<StrongChainReport> {
    if !(kappa > 0.0) {
        return Err(Error::Input(format!("kappa must be positive, got {kappa}")));
    }
    let n = g.dim();
    let margins: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i);
            let q = sample_point(n, &mut rng);
            let q_hat = sample_point(n, &mut rng);
            let reg = bregman(g, q.as_slice(), &q_hat);
            (2.0 * reg / kappa).sqrt() - diff(q.as_slice(), q_hat.as_slice(), PNorm::TWO)
        })
        .collect();
    let violations = margins.iter().filter(|&&m| m < -1e-9).count();
    let worst_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(StrongChainReport { kappa, samples, violations, worst_margin, pass: violations == 0 })
}
