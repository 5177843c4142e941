//! Argument parsing and the subcommands.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polybell_core::analysis::{evaluate_counts, violation_sigmas, visibility_threshold, white_noise_correlations, Orientation};
use polybell_core::bell::BellExpression;
use polybell_core::model::{correlations_of, SeesawOptions, SeesawResult};
use polybell_core::nc::{Level, RestrictedBound};
use polybell_core::polytope::{
    dedup_restrictions, enumerate_restrictions, local_bound, nonsignaling_bound, nonsignaling_bound_family,
};
use polybell_core::sdp::{default_tolerance, SdpProblem, SdpSolver};
use polybell_core::Direction;
use serde_json::{json, Value};

use crate::io::{read_counts_file, read_json, write_json, SolveReport};
use crate::report::{sig6, RunReport};
use crate::solver::{solver_from_env, SOLVER_ENV};
use crate::{expressions, fit_level, parallel, Error, Result, MAX_DENSE_DIM};

#[derive(Debug, Parser)]
#[command(name = "polybell", version, about = "Bounds on bipartite Bell expressions under restricted measurements")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print the full report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for restriction sweeps and restarts.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Local, non-signaling, quantum or outcome-restricted bound.
    Bound(BoundArgs),
    /// Explicit quantum model by see-saw search.
    Seesaw(SeesawArgs),
    /// White-noise visibility needed to beat an n-outcome bound.
    Visibility(VisibilityArgs),
    /// Value and significance of count data against a bound.
    Evaluate(EvaluateArgs),
    /// Write a built-in expression as JSON.
    Expr(ExprArgs),
    /// Solve an SDP problem file with the built-in solver.
    Sdp(SdpArgs),
}

#[derive(Debug, Clone, Args)]
struct ExprSource {
    /// Built-in expression: I3, I4, CH, VB, VBprime or AN.
    #[arg(long, conflicts_with = "expr_file")]
    expr: Option<String>,
    /// Expression JSON file.
    #[arg(long)]
    expr_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundClass {
    Local,
    Ns,
    Quantum,
    Restricted,
}

impl BoundClass {
    fn as_str(self) -> &'static str {
        match self {
            BoundClass::Local => "local",
            BoundClass::Ns => "ns",
            BoundClass::Quantum => "quantum",
            BoundClass::Restricted => "restricted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DirectionArg {
    Max,
    Min,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Max => Direction::Max,
            DirectionArg::Min => Direction::Min,
        }
    }
}

fn parse_level(s: &str) -> std::result::Result<Level, String> {
    s.parse().map_err(|e: polybell_core::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
struct RelaxationArgs {
    /// At most this many non-trivial outcomes per setting.
    #[arg(long)]
    n: Option<usize>,
    /// Hierarchy level: 1, 2, 3, … or 1+AB.
    #[arg(long, value_parser = parse_level)]
    level: Option<Level>,
    /// Solver tolerance in [1e-10, 1e-4]; default depends on matrix size.
    #[arg(long)]
    tol: Option<f64>,
    /// Keep the requested level even when the matrices are very large.
    #[arg(long)]
    heavy: bool,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[command(flatten)]
    source: ExprSource,
    #[arg(long, value_enum, default_value = "restricted")]
    class: BoundClass,
    #[arg(long, value_enum, default_value = "max")]
    direction: DirectionArg,
    #[command(flatten)]
    relax: RelaxationArgs,
}

#[derive(Debug, Clone, Args)]
struct SearchArgs {
    /// Local dimension of both parties; defaults to the largest outcome count.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SeesawArgs {
    #[command(flatten)]
    source: ExprSource,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, value_enum, default_value = "max")]
    direction: DirectionArg,
    /// Write the best model as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VisibilityArgs {
    #[command(flatten)]
    source: ExprSource,
    #[command(flatten)]
    relax: RelaxationArgs,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    source: ExprSource,
    /// Counts CSV with header a_setting,b_setting,a_outcome,b_outcome,count.
    #[arg(long)]
    counts: PathBuf,
    #[arg(long, value_enum, default_value = "restricted")]
    bound_class: BoundClass,
    /// Compare against this value instead of computing a bound.
    #[arg(long)]
    bound_value: Option<f64>,
    #[arg(long, value_enum, default_value = "max")]
    direction: DirectionArg,
    #[command(flatten)]
    relax: RelaxationArgs,
}

#[derive(Debug, Args)]
struct ExprArgs {
    /// Built-in expression name.
    #[arg(long, alias = "expr")]
    name: String,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SdpArgs {
    /// Problem JSON file.
    #[arg(long)]
    problem: PathBuf,
    /// Result JSON file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tol: Option<f64>,
}

/// Exit code and captured output of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Loaded {
    expr: BellExpression,
    id: String,
}

fn load(source: &ExprSource) -> Result<Loaded> {
    match (&source.expr, &source.expr_file) {
        (Some(name), None) => Ok(Loaded {
            expr: expressions::by_name(name)?,
            id: expressions::canonical_name(name).unwrap_or(name).to_string(),
        }),
        (None, Some(path)) => Ok(Loaded { expr: expressions::from_file(path)?, id: path.display().to_string() }),
        _ => Err(Error::Usage("give exactly one of --expr or --expr-file".into())),
    }
}

/// Text and JSON halves of a command's output.
struct Done {
    config: Value,
    results: Value,
    text: String,
}

struct Ctx {
    jobs: Option<usize>,
    solver: Box<dyn SdpSolver + Send>,
}

impl Ctx {
    fn pool(&self) -> Result<rayon::ThreadPool> {
        parallel::pool(self.jobs)
    }
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code: 2, stdout: String::new(), stderr: text }
            };
        }
    };
    let started = Instant::now();
    let name = match &cli.command {
        Command::Bound(_) => "bound",
        Command::Seesaw(_) => "seesaw",
        Command::Visibility(_) => "visibility",
        Command::Evaluate(_) => "evaluate",
        Command::Expr(_) => "expr",
        Command::Sdp(_) => "sdp",
    };
    let result = solver_from_env().and_then(|solver| {
        let ctx = Ctx { jobs: cli.jobs, solver };
        match &cli.command {
            Command::Bound(a) => bound(&ctx, a),
            Command::Seesaw(a) => seesaw(&ctx, a),
            Command::Visibility(a) => visibility(&ctx, a),
            Command::Evaluate(a) => evaluate(&ctx, a),
            Command::Expr(a) => expr(a),
            Command::Sdp(a) => sdp(&ctx, a),
        }
    });
    let timing_seconds = started.elapsed().as_secs_f64();
    match result {
        Ok(done) => {
            let stdout = if cli.json {
                let report = RunReport {
                    command: name.into(),
                    config: done.config,
                    results: done.results,
                    ok: true,
                    error: None,
                    timing_seconds,
                };
                serde_json::to_string_pretty(&report).expect("reports serialize") + "\n"
            } else {
                done.text
            };
            Outcome { code: 0, stdout, stderr: String::new() }
        }
        Err(Error::Usage(msg)) => Outcome { code: 2, stdout: String::new(), stderr: format!("error: {msg}\n") },
        Err(e) => {
            let report = RunReport {
                command: name.into(),
                config: Value::Null,
                results: Value::Null,
                ok: false,
                error: Some(e.to_string()),
                timing_seconds,
            };
            Outcome {
                code: 1,
                stdout: serde_json::to_string_pretty(&report).expect("reports serialize") + "\n",
                stderr: format!("error: {e}\n"),
            }
        }
    }
}

struct Relaxed {
    bound: RestrictedBound,
    requested: Level,
    note: Option<String>,
}

fn relax_config(r: &Relaxed) -> Value {
    json!({"requested_level": r.requested, "level": r.bound.level, "level_note": r.note})
}

/// Restricted relaxation bound with the level fallback applied.
fn run_relaxation(ctx: &Ctx, e: &Loaded, n: usize, relax: &RelaxationArgs, direction: Direction) -> Result<Relaxed> {
    let requested = relax.level.unwrap_or_else(|| expressions::default_level(&e.id));
    let (level, dim) = if relax.heavy {
        (requested, crate::relaxation_dim(&e.expr, n, requested)?)
    } else {
        fit_level(&e.expr, n, requested, MAX_DENSE_DIM)?
    };
    let note = (level != requested).then(|| {
        format!("level {requested} exceeds {MAX_DENSE_DIM} rows; used level {level} ({dim} rows); pass --heavy to force")
    });
    let pool = ctx.pool()?;
    let bound = parallel::restricted_bound(&pool, &e.expr, n, level, direction, ctx.solver.as_ref(), relax.tol)?;
    Ok(Relaxed { bound, requested, note })
}

fn breakdown_json(b: &RestrictedBound) -> Value {
    json!(b
        .breakdown
        .iter()
        .map(|r| json!({
            "a_supports": r.restriction.supports(polybell_core::bell::Party::A),
            "b_supports": r.restriction.supports(polybell_core::bell::Party::B),
            "members": r.members,
            "value": r.value,
            "bound": r.bound,
            "status": r.status,
            "dim": r.dim,
            "iterations": r.iterations,
        }))
        .collect::<Vec<_>>())
}

/// Value of a bound class, with its JSON results and a text summary.
fn compute_bound(ctx: &Ctx, e: &Loaded, class: BoundClass, direction: Direction, relax: &RelaxationArgs) -> Result<(f64, Value, Value, String)> {
    let mut text = String::new();
    match class {
        BoundClass::Local => {
            let lb = local_bound(&e.expr, direction);
            let _ = writeln!(text, "local {} bound of {}: {}", dir_str(direction), e.id, sig6(lb.value));
            let _ = writeln!(text, "witness: A = {:?}, B = {:?}", lb.witness.a, lb.witness.b);
            Ok((lb.value, json!({}), json!({"value": lb.value, "witness": lb.witness}), text))
        }
        BoundClass::Ns => {
            let nb = match relax.n {
                Some(n) => {
                    let rs = enumerate_restrictions(e.expr.scenario(), n)?;
                    let reps: Vec<_> = dedup_restrictions(&e.expr, &rs).into_iter().map(|c| c.representative).collect();
                    let mut b = nonsignaling_bound_family(&e.expr, &reps, direction)?;
                    let idx = b.restriction_index.take();
                    let _ = writeln!(text, "non-signaling {} bound of {} with n={n}: {}", dir_str(direction), e.id, sig6(b.value));
                    let results = json!({
                        "value": b.value,
                        "restrictions": rs.len(),
                        "classes": reps.len(),
                        "restriction": idx.map(|i| &reps[i]),
                        "table": b.table,
                    });
                    return Ok((b.value, json!({"n": n}), results, text));
                }
                None => nonsignaling_bound(&e.expr, None, direction)?,
            };
            let _ = writeln!(text, "non-signaling {} bound of {}: {}", dir_str(direction), e.id, sig6(nb.value));
            Ok((nb.value, json!({}), json!({"value": nb.value, "table": nb.table}), text))
        }
        BoundClass::Quantum | BoundClass::Restricted => {
            let n = match (class, relax.n) {
                (BoundClass::Quantum, _) => e.expr.scenario().max_outcomes(),
                (_, Some(n)) => n,
                _ => return Err(Error::Usage("--class restricted needs --n".into())),
            };
            let r = run_relaxation(ctx, e, n, relax, direction)?;
            let b = &r.bound;
            let _ = writeln!(
                text,
                "{} {} bound of {} with n={n} at level {}: {} (certified {})",
                class.as_str(),
                dir_str(direction),
                e.id,
                b.level,
                sig6(b.value),
                sig6(b.bound)
            );
            let _ = writeln!(text, "{} restrictions in {} symmetry classes", b.restrictions, b.breakdown.len());
            if let Some(note) = &r.note {
                let _ = writeln!(text, "note: {note}");
            }
            let mut cfg = relax_config(&r);
            cfg["n"] = json!(n);
            cfg["tol"] = json!(relax.tol);
            let results = json!({
                "value": b.value,
                "certified": b.bound,
                "restrictions": b.restrictions,
                "best": b.best,
                "breakdown": breakdown_json(b),
            });
            Ok((b.value, cfg, results, text))
        }
    }
}

fn dir_str(d: Direction) -> &'static str {
    match d {
        Direction::Max => "max",
        Direction::Min => "min",
    }
}

fn solver_name(ctx: &Ctx) -> String {
    ctx.solver.name().to_string()
}

fn bound(ctx: &Ctx, a: &BoundArgs) -> Result<Done> {
    let e = load(&a.source)?;
    let direction = a.direction.into();
    let (_, extra, results, text) = compute_bound(ctx, &e, a.class, direction, &a.relax)?;
    let mut config = json!({
        "expression": e.id,
        "class": a.class.as_str(),
        "direction": direction,
        "solver": solver_name(ctx),
    });
    merge(&mut config, extra);
    Ok(Done { config, results, text })
}

fn merge(into: &mut Value, extra: Value) {
    if let (Some(m), Value::Object(x)) = (into.as_object_mut(), extra) {
        m.extend(x);
    }
}

fn seesaw_options(e: &Loaded, s: &SearchArgs, direction: Direction) -> SeesawOptions {
    let mut opts = SeesawOptions::for_expression(&e.expr);
    if let Some(d) = s.dim {
        opts.d_a = d;
        opts.d_b = d;
    }
    opts.restarts = s.restarts;
    opts.seed = s.seed;
    opts.direction = direction;
    opts
}

fn run_seesaw(ctx: &Ctx, e: &Loaded, opts: &SeesawOptions) -> Result<SeesawResult> {
    let pool = ctx.pool()?;
    parallel::seesaw(&pool, &e.expr, opts, ctx.solver.as_ref())
}

fn seesaw(ctx: &Ctx, a: &SeesawArgs) -> Result<Done> {
    let e = load(&a.source)?;
    let opts = seesaw_options(&e, &a.search, a.direction.into());
    let r = run_seesaw(ctx, &e, &opts)?;
    if let Some(path) = &a.out {
        write_json(path, &r.best.model)?;
    }
    let mut text = String::new();
    let _ = writeln!(
        text,
        "see-saw {} of {} (d={}x{}, {} restarts, seed {}): {}",
        dir_str(opts.direction),
        e.id,
        opts.d_a,
        opts.d_b,
        opts.restarts,
        opts.seed,
        sig6(r.best.value)
    );
    let _ = writeln!(text, "best restart {} after {} iterations", r.restart, r.best.iterations);
    for f in &r.failures {
        let _ = writeln!(text, "warning: {f}");
    }
    let config = json!({"expression": e.id, "options": opts, "solver": solver_name(ctx)});
    let results = json!({
        "value": r.best.value,
        "restart": r.restart,
        "iterations": r.best.iterations,
        "values": r.values,
        "failures": r.failures,
        "model": r.best.model,
    });
    Ok(Done { config, results, text })
}

fn visibility(ctx: &Ctx, a: &VisibilityArgs) -> Result<Done> {
    let e = load(&a.source)?;
    let n = a.relax.n.ok_or_else(|| Error::Usage("visibility needs --n".into()))?;
    let r = run_relaxation(ctx, &e, n, &a.relax, Direction::Max)?;
    let opts = seesaw_options(&e, &a.search, Direction::Max);
    let target = run_seesaw(ctx, &e, &opts)?;
    let target_table = correlations_of(&target.best.model)?;
    let white = white_noise_correlations(&target.best.model)?;
    let bound_name = format!("{n}-outcome");
    let rep = visibility_threshold(&e.expr, &target_table, &white, r.bound.value, &e.id, &bound_name)?;
    let mut text = String::new();
    let _ = writeln!(text, "{} {bound_name} bound (level {}): {}", e.id, r.bound.level, sig6(r.bound.value));
    let _ = writeln!(text, "target value: {}", sig6(rep.target));
    let _ = writeln!(text, "white-noise value: {}", sig6(rep.white));
    let _ = writeln!(text, "visibility threshold: {} ({}%)", sig6(rep.threshold), sig6(100.0 * rep.threshold));
    if let Some(note) = &r.note {
        let _ = writeln!(text, "note: {note}");
    }
    let mut config = json!({"expression": e.id, "n": n, "tol": a.relax.tol, "seesaw": opts, "solver": solver_name(ctx)});
    merge(&mut config, relax_config(&r));
    let results = json!({
        "visibility": rep,
        "bound": {"value": r.bound.value, "certified": r.bound.bound, "breakdown": breakdown_json(&r.bound)},
        "target_model": target.best.model,
    });
    Ok(Done { config, results, text })
}

fn evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Result<Done> {
    let e = load(&a.source)?;
    let direction: Direction = a.direction.into();
    let data = read_counts_file(&a.counts, e.expr.scenario())?;
    let eval = evaluate_counts(&e.expr, &data)?;
    let mut config = json!({
        "expression": e.id,
        "counts": a.counts.display().to_string(),
        "direction": direction,
        "solver": solver_name(ctx),
    });
    let (bound, bound_results) = match a.bound_value {
        Some(v) => {
            config["bound_value"] = json!(v);
            (v, json!({"value": v}))
        }
        None => {
            let (v, extra, res, _) = compute_bound(ctx, &e, a.bound_class, direction, &a.relax)?;
            config["bound_class"] = json!(a.bound_class.as_str());
            merge(&mut config, extra);
            (v, res)
        }
    };
    let orientation = match direction {
        Direction::Max => Orientation::Exceeds,
        Direction::Min => Orientation::FallsBelow,
    };
    let sigmas = violation_sigmas(&eval, bound, orientation);
    let mut text = String::new();
    let _ = writeln!(text, "{} on counts: {} ± {}", e.id, sig6(eval.value), sig6(eval.sigma));
    let _ = writeln!(text, "bound: {}", sig6(bound));
    let _ = writeln!(text, "violation: {} standard deviations", sig6(sigmas));
    let results = json!({
        "value": eval.value,
        "sigma": eval.sigma,
        "bound": bound_results,
        "violation_sigmas": if sigmas.is_finite() { json!(sigmas) } else { json!(sigmas.to_string()) },
    });
    Ok(Done { config, results, text })
}

fn expr(a: &ExprArgs) -> Result<Done> {
    let e = expressions::by_name(&a.name)?;
    let id = expressions::canonical_name(&a.name).unwrap_or(&a.name).to_string();
    let text = match &a.out {
        Some(path) => {
            write_json(path, &e)?;
            format!("wrote {id} to {}\n", path.display())
        }
        None => serde_json::to_string_pretty(&e)? + "\n",
    };
    Ok(Done {
        config: json!({"expression": id, "out": a.out.as_ref().map(|p| p.display().to_string())}),
        results: json!({"expression": e}),
        text,
    })
}

fn sdp(ctx: &Ctx, a: &SdpArgs) -> Result<Done> {
    let problem: SdpProblem = read_json(&a.problem)?;
    let tol = a.tol.unwrap_or_else(|| default_tolerance(problem.dim));
    let res = ctx.solver.solve(&problem, tol)?;
    let report = SolveReport::from(&res);
    let text = match &a.out {
        Some(path) => {
            write_json(path, &report)?;
            format!("{:?}: {} (gap {})\n", report.status, sig6(report.value), sig6(report.gap))
        }
        None => serde_json::to_string_pretty(&report)? + "\n",
    };
    Ok(Done {
        config: json!({"problem": a.problem.display().to_string(), "tol": tol, "solver": solver_name(ctx), "solver_env": SOLVER_ENV}),
        results: json!(report),
        text,
    })
}
