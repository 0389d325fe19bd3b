//! Command-line front end.
//!
//! Exit codes: 0 when everything checked passes, 1 on a verified violation,
//! 2 on usage or configuration errors.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::downstream::{downstream_sweep, strong_chain_check, SweepReport, Task};
use crate::error::{Error, Result};
use crate::generators::{ConvexGenerator, Family, GeneratorSpec};
use crate::modulus::{
    has_closed_form, modulus_brute_force, modulus_closed_form, modulus_curve, regret_bound_sweep, CurveMethod, ModulusCurve,
    SearchConfig,
};
use crate::order::{counterexample_curve, generator_order_profile, order_barrier_check, DiniConfig};
use crate::output::{fmt_f64, to_json};
use crate::proper_loss::{affine_invariance_check, properness_certificate, savage_consistency, savage_loss, strong_properness_test};
use crate::simplex::{PNorm, ProbVec};

#[derive(Debug, Parser)]
#[command(name = "proper-regret", version, about = "Moduli of convexity and surrogate regret bounds for proper losses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample the modulus of convexity on a grid of distances.
    Modulus(ModulusArgs),
    /// Order function, local modulus and the order barrier near zero.
    Order(OrderArgs),
    /// Run a verification sweep; exit 1 on a violation.
    Verify(VerifyArgs),
    /// Closed forms of the binary-simplex table against brute force.
    Table1(Table1Args),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// shannon (log), sq-alpha-norm (brier), alpha-norm, tsallis, max-power
    #[arg(long, default_value = "shannon")]
    family: String,
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of outcomes.
    #[arg(long = "N", default_value_t = 2)]
    n: usize,
    /// Norm index: 1, 2, inf or any decimal >= 1.
    #[arg(long, default_value = "1")]
    p: String,
}

#[derive(Debug, Args)]
struct SearchArgs {
    /// Random restarts of the search for N >= 3.
    #[arg(long, default_value_t = 64)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct OutArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ModulusArgs {
    #[command(flatten)]
    generator: GenArgs,
    /// Grid: start:stop:step, start:stop:logK, or a comma list. `diam` names
    /// the simplex diameter.
    #[arg(long)]
    r: Option<String>,
    /// closed, brute or both
    #[arg(long, default_value = "closed")]
    method: String,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    output: OutArgs,
}

#[derive(Debug, Args)]
struct OrderArgs {
    /// As for `modulus`, plus `counterexample`.
    #[command(flatten)]
    generator: GenArgs,
    #[arg(long)]
    r: Option<String>,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    output: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Properness,
    RegretBound,
    Strong,
    Savage,
    Affine,
    Downstream,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: Suite,
    #[command(flatten)]
    generator: GenArgs,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Strong-properness parameter.
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    /// zero-one, noisy or ranking; all three when absent.
    #[arg(long)]
    task: Option<String>,
    /// Grid resolution of the properness certificate.
    #[arg(long = "grid-res")]
    grid_res: Option<usize>,
    #[arg(long, default_value_t = 64)]
    restarts: usize,
    /// Report file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Table1Args {
    #[command(flatten)]
    output: OutArgs,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.command {
        Command::Modulus(a) => cmd_modulus(&a),
        Command::Order(a) => cmd_order(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Table1(a) => cmd_table1(&a),
    };
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing helpers
// ---------------------------------------------------------------------------

fn parse_family(name: &str, alpha: Option<f64>) -> Result<(Family, Option<f64>)> {
    match name {
        "log" => Ok((Family::Shannon, alpha)),
        "brier" => match alpha {
            None | Some(2.0) => Ok((Family::SquaredAlphaNorm, Some(2.0))),
            Some(a) => Err(Error::Input(format!("brier is sq-alpha-norm with alpha = 2, got alpha = {a}"))),
        },
        other => Ok((other.parse()?, alpha)),
    }
}

fn build_spec(a: &GenArgs) -> Result<GeneratorSpec> {
    let (family, alpha) = parse_family(&a.family, a.alpha)?;
    GeneratorSpec::new(family, alpha, a.n)
}

fn grid_value(s: &str, diam: f64) -> Result<f64> {
    let t = s.trim();
    if t == "diam" {
        return Ok(diam);
    }
    t.parse::<f64>().map_err(|_| Error::Input(format!("cannot parse grid value '{s}'")))
}

/// `start:stop:step`, `start:stop:logK` or `a,b,c`.
pub fn parse_grid(spec: &str, diam: f64) -> Result<Vec<f64>> {
    let snap = |x: f64| if (x - diam).abs() <= 1e-9 { diam } else { x };
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [single] => single.split(',').map(|v| grid_value(v, diam)).collect::<Result<Vec<_>>>()?,
        [a, b, step] => {
            let (a, b) = (grid_value(a, diam)?, grid_value(b, diam)?);
            if !(a.is_finite() && b.is_finite() && b >= a) {
                return Err(Error::Input(format!("bad grid range {a}:{b}")));
            }
            if let Some(k) = step.trim().strip_prefix("log") {
                let k: usize = k.parse().map_err(|_| Error::Input(format!("bad log grid size '{k}'")))?;
                if k < 2 || !(a > 0.0) {
                    return Err(Error::Input("log grids need at least 2 points and start > 0".into()));
                }
                let mut g: Vec<f64> = (0..k).map(|i| a * (b / a).powf(i as f64 / (k - 1) as f64)).collect();
                g[0] = a;
                g[k - 1] = b;
                g
            } else {
                let h = grid_value(step, diam)?;
                if !(h > 0.0) {
                    return Err(Error::Input(format!("grid step must be positive, got {h}")));
                }
                let k = ((b - a) / h + 1e-9).floor() as usize;
                if k > 10_000_000 {
                    return Err(Error::Budget { what: "r grid".into(), needed: k as u128, cap: 10_000_000 });
                }
                (0..=k)
                    .map(|i| {
                        let x = a + i as f64 * h;
                        if (x - b).abs() <= 1e-9 * b.abs().max(1.0) {
                            b
                        } else {
                            x
                        }
                    })
                    .collect()
            }
        }
        _ => return Err(Error::Input(format!("cannot parse grid '{spec}'"))),
    };
    Ok(grid.into_iter().map(snap).collect())
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn search_config(a: &SearchArgs) -> SearchConfig {
    SearchConfig { restarts: a.restarts, seed: a.seed, ..SearchConfig::default() }
}

fn cmd_modulus(a: &ModulusArgs) -> Result<bool> {
    let spec = build_spec(&a.generator)?;
    let p: PNorm = a.generator.p.parse()?;
    let method: CurveMethod = a.method.parse()?;
    let diam = p.diameter();
    let grid = match &a.r {
        Some(s) => parse_grid(s, diam)?,
        None => (0..=40).map(|k| if k == 40 { diam } else { diam * k as f64 / 40.0 }).collect(),
    };
    let curve = modulus_curve(&spec, p, &grid, method, &search_config(&a.search))?;
    for d in &curve.diagnostics {
        eprintln!("warning: {d}");
    }
    let text = match a.output.format {
        Format::Csv => curve.to_csv(),
        Format::Json => curve.to_json()?,
    };
    write_output(&a.output.out, &text)?;
    Ok(true)
}

fn default_order_grid(diam: f64) -> Vec<f64> {
    let k = 200;
    (0..k).map(|i| if i == k - 1 { diam } else { 1e-3 * (diam / 1e-3).powf(i as f64 / (k - 1) as f64) }).collect()
}

fn cmd_order(a: &OrderArgs) -> Result<bool> {
    if a.generator.family == "counterexample" {
        let grid = match &a.r {
            Some(s) => parse_grid(s, 1.0)?,
            None => default_order_grid(1.0),
        };
        let (_curve, profile, report) = counterexample_curve(&grid)?;
        let summary = json!({
            "kappa": profile.kappa_estimate,
            "limsup_sigma": profile.limsup_sigma,
            "liminf_sigma": profile.liminf_sigma,
            "max_sigma_small_r": report.max_sigma_small_r,
            "nondecreasing": report.nondecreasing,
            "min_derivative": report.min_derivative,
            "pass": report.pass,
        });
        emit_order(&a.output, &profile.to_csv(), &summary, &profile)?;
        return Ok(report.pass);
    }
    let spec = build_spec(&a.generator)?;
    let p: PNorm = a.generator.p.parse()?;
    let grid = match &a.r {
        Some(s) => parse_grid(s, p.diameter())?,
        None => default_order_grid(p.diameter()),
    };
    let profile = generator_order_profile(&spec, p, &grid, &DiniConfig::default(), &search_config(&a.search))?;
    let barrier = order_barrier_check(&profile);
    for n in &barrier.notes {
        eprintln!("note: {n}");
    }
    let summary = json!({
        "kappa": barrier.kappa,
        "limsup_sigma": barrier.limsup_sigma,
        "liminf_sigma": barrier.liminf_sigma,
        "C1": barrier.c1,
        "C2": barrier.c2,
        "statistic": barrier.statistic,
        "inconclusive": barrier.inconclusive,
        "pass": barrier.pass,
    });
    emit_order(&a.output, &profile.to_csv(), &summary, &profile)?;
    Ok(barrier.pass || !(barrier.c1 || barrier.c2))
}

fn emit_order<T: Serialize>(out: &OutArgs, csv: &str, summary: &serde_json::Value, profile: &T) -> Result<()> {
    match out.format {
        Format::Csv => {
            write_output(&out.out, csv)?;
            let s = to_json(summary)?;
            match &out.out {
                Some(path) => std::fs::write(path.with_extension("summary.json"), s)?,
                None => eprint!("{s}"),
            }
        }
        Format::Json => {
            let all = json!({ "summary": summary, "profile": profile });
            write_output(&out.out, &to_json(&all)?)?;
        }
    }
    Ok(())
}

// curve used for inverse-modulus lookups: closed form when available
fn lookup_curve(spec: &GeneratorSpec, p: PNorm, restarts: usize, seed: u64) -> Result<ModulusCurve> {
    let diam = p.diameter();
    let cfg = SearchConfig { restarts, seed, ..SearchConfig::default() };
    if has_closed_form(spec, p) {
        let grid: Vec<f64> = (0..=400).map(|k| if k == 400 { diam } else { diam * k as f64 / 400.0 }).collect();
        modulus_curve(spec, p, &grid, CurveMethod::Closed, &cfg)
    } else {
        brute_curve(spec, p, &cfg)
    }
}

fn brute_curve(spec: &GeneratorSpec, p: PNorm, cfg: &SearchConfig) -> Result<ModulusCurve> {
    let diam = p.diameter();
    let k = if spec.dim() == 2 { 400 } else { 40 };
    let grid: Vec<f64> = (0..=k).map(|i| if i == k { diam } else { diam * i as f64 / k as f64 }).collect();
    modulus_curve(spec, p, &grid, CurveMethod::Brute, cfg)
}

fn cmd_verify(a: &VerifyArgs) -> Result<bool> {
    let spec = build_spec(&a.generator)?;
    let p: PNorm = a.generator.p.parse()?;
    if a.samples == 0 {
        return Err(Error::Input("--samples must be positive".into()));
    }
    let (report, pass) = match a.suite {
        Suite::Properness => {
            let res = a.grid_res.unwrap_or(match spec.dim() {
                2 => 100,
                3 => 30,
                _ => 10,
            });
            let r = properness_certificate(&spec, res)?;
            let pass = r.pass;
            (json!({ "suite": "properness", "resolution": res, "report": r }), pass)
        }
        Suite::RegretBound => {
            let cfg = SearchConfig { restarts: a.restarts, seed: a.seed, ..SearchConfig::default() };
            let curve = brute_curve(&spec, p, &cfg)?;
            let r = regret_bound_sweep(&spec, &curve, a.samples, a.seed)?;
            let pass = r.pass;
            (json!({ "suite": "regret-bound", "report": r }), pass)
        }
        Suite::Strong => {
            let r = strong_properness_test(&spec, a.kappa, a.samples, a.seed)?;
            let chain = strong_chain_check(&spec, a.kappa, a.samples, a.seed)?;
            let pass = r.pass && chain.pass;
            (json!({ "suite": "strong", "kappa": a.kappa, "report": r, "chain": chain }), pass)
        }
        Suite::Savage => {
            let r = savage_consistency(&spec, a.samples, a.seed)?;
            let pass = r.pass;
            (json!({ "suite": "savage", "report": r }), pass)
        }
        Suite::Affine => {
            let r = affine_invariance_check(&spec, a.samples, a.seed)?;
            let pass = r.pass;
            (json!({ "suite": "affine", "report": r }), pass)
        }
        Suite::Downstream => {
            let tasks: Vec<Task> = match &a.task {
                Some(t) => vec![t.parse()?],
                None => Task::ALL.to_vec(),
            };
            let mut reports: Vec<SweepReport> = Vec::new();
            for task in tasks {
                let task_spec = if task == Task::Ranking {
                    GeneratorSpec::new(spec.family(), spec.alpha(), 2)?
                } else {
                    spec
                };
                let curve = lookup_curve(&task_spec, p, a.restarts, a.seed)?;
                reports.push(downstream_sweep(task, p, task_spec.dim(), Some((&task_spec, &curve)), a.samples, a.seed)?);
            }
            let pass = reports.iter().all(|r| r.pass);
            (json!({ "suite": "downstream", "pass": pass, "reports": reports }), pass)
        }
    };
    write_output(&a.out, &to_json(&report)?)?;
    Ok(pass)
}

#[derive(Debug, Clone, Serialize)]
struct Table1Row {
    family: String,
    alpha: Option<f64>,
    branch: &'static str,
    points: usize,
    max_abs_diff: Option<f64>,
    status: &'static str,
}

fn table1_rows() -> Vec<(Family, Option<f64>, &'static str)> {
    vec![
        (Family::Shannon, None, ""),
        (Family::SquaredAlphaNorm, Some(1.5), "alpha<2"),
        (Family::SquaredAlphaNorm, Some(2.0), "alpha>=2"),
        (Family::SquaredAlphaNorm, Some(3.0), "alpha>=2"),
        (Family::AlphaNorm, Some(1.5), "alpha<2"),
        (Family::AlphaNorm, Some(2.0), "alpha>=2"),
        (Family::AlphaNorm, Some(4.0), "alpha>=2"),
        (Family::Tsallis, Some(1.5), "alpha<2 or alpha>3"),
        (Family::Tsallis, Some(2.5), "2<=alpha<=3"),
        (Family::Tsallis, Some(4.0), "alpha<2 or alpha>3"),
        (Family::MaxPower, Some(1.5), "alpha<2"),
        (Family::MaxPower, Some(2.0), "alpha>=2"),
        (Family::MaxPower, Some(3.0), "alpha>=2"),
    ]
}

/// Tolerance of the table reproduction.
pub const TABLE1_TOL: f64 = 1e-6;

fn cmd_table1(a: &Table1Args) -> Result<bool> {
    let p = PNorm::ONE;
    let grid: Vec<f64> = (1..=40).map(|k| 2.0 * k as f64 / 40.0).collect();
    let cfg = SearchConfig::default();
    let mut rows = Vec::new();
    for (family, alpha, branch) in table1_rows() {
        let spec = GeneratorSpec::new(family, alpha, 2)?;
        let row = if has_closed_form(&spec, p) {
            let mut worst = 0.0f64;
            for &r in &grid {
                let cf = modulus_closed_form(&spec, p, r)?;
                let bf = modulus_brute_force(&spec, p, r, &cfg)?.omega;
                worst = worst.max((cf - bf).abs());
            }
            Table1Row {
                family: family.name().into(),
                alpha,
                branch,
                points: grid.len(),
                max_abs_diff: Some(worst),
                status: if worst < TABLE1_TOL { "pass" } else { "fail" },
            }
        } else {
            Table1Row { family: family.name().into(), alpha, branch, points: grid.len(), max_abs_diff: None, status: "brute_force_only" }
        };
        rows.push(row);
    }
    // Shannon's Savage loss is the log loss
    let sh = GeneratorSpec::shannon(2)?;
    let mut worst = 0.0f64;
    for i in 1..=10 {
        let q_hat = ProbVec::binary(i as f64 / 11.0)?;
        let l = savage_loss(&sh, &q_hat)?;
        for y in 0..2 {
            worst = worst.max((l.values()[y] + q_hat.as_slice()[y].ln()).abs());
        }
    }
    let log_ok = worst < 1e-12;
    rows.push(Table1Row {
        family: "shannon-log-loss".into(),
        alpha: None,
        branch: "",
        points: 10,
        max_abs_diff: Some(worst),
        status: if log_ok { "pass" } else { "fail" },
    });
    let pass = rows.iter().all(|r| r.status != "fail");
    let text = match a.output.format {
        Format::Csv => {
            let mut s = String::from("family,alpha,branch,points,max_abs_diff,status\n");
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.family,
                    r.alpha.map(|x| x.to_string()).unwrap_or_default(),
                    r.branch,
                    r.points,
                    r.max_abs_diff.map(fmt_f64).unwrap_or_default(),
                    r.status
                ));
            }
            s
        }
        Format::Json => to_json(&json!({ "rows": rows, "pass": pass }))?,
    };
    write_output(&a.output.out, &text)?;
    Ok(pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:2:0.05", 2.0).unwrap().len(), 41);
        assert_eq!(*parse_grid("0:2:0.05", 2.0).unwrap().last().unwrap(), 2.0);
        let g = parse_grid("1e-3:1:log200", 2.0).unwrap();
        assert_eq!(g.len(), 200);
        assert_eq!((g[0], g[199]), (1e-3, 1.0));
        assert_eq!(parse_grid("0.1,0.5,diam", std::f64::consts::SQRT_2).unwrap()[2], std::f64::consts::SQRT_2);
        assert!(parse_grid("0:1:0", 2.0).is_err());
        assert!(parse_grid("0:1:log5", 2.0).is_err());
        assert!(parse_grid("a:b", 2.0).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["proper-regret", "modulus", "--family", "alpha-norm", "--alpha", "1.5", "--method", "closed"]), 2);
        assert_eq!(run(["proper-regret", "modulus", "--family", "nope"]), 2);
        assert_eq!(run(["proper-regret", "modulus", "--p", "0.5"]), 2);
        assert_eq!(run(["proper-regret", "bogus"]), 2);
        assert_eq!(run(["proper-regret", "verify", "savage", "--family", "brier", "--alpha", "3"]), 2);
    }
}
