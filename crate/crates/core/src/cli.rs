//! Scenario-driven front end: `eval`, `minimize`, `criteria` and `verify`.
//!
//! Every command reads a scenario file, writes deterministic JSON (and CSV
//! where it makes sense) to `--out` when given, and prints a short summary
//! to stdout. Reports carry the seeds and tolerances they were run with.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::actions::drift_constant;
use crate::criteria::{summarize, verdicts_to_csv, Classifier, CriteriaVerdict, CycleInfo, RejectedManifold, VerdictSummary};
use crate::curves::{concat, reverse, Curve};
use crate::error::{Error, Result};
use crate::fields::{
    find_equilibria, flow, flowline_of_length, trace_invariant_manifolds_2d, BranchKind, EquilibriumKind, FlowField,
    IntegratorOptions,
};
use crate::functional::{drift_lower_bound_check, geometric_action};
use crate::manifolds::{check_admissible, key_estimate_bound, tracing_from_manifold, TracingOptions};
use crate::minimizer::{hitting_report, minimize, polyline_distance, tail_action, MinimizeResult};
use crate::scenario::{parse_scenario, Overrides, Scenario};
use crate::space::{gaussian, BoundingBox, GridSpec, Vector};

#[derive(Debug, Parser)]
#[command(name = "geoaction", version, about = "Geometric actions, minimum action curves and existence checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads; all cores when unset.
    #[arg(long, global = true, env = "GEOACTION_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Geometric action of a curve given as CSV.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        curve: PathBuf,
    },
    /// Minimum action curve of the scenario's problem.
    Minimize {
        #[command(flatten)]
        common: Common,
    },
    /// Existence verdicts over the scenario's grid and points.
    Criteria {
        #[command(flatten)]
        common: Common,
    },
    /// Property suites configured in the scenario.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Directory for the output files; created when missing.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Relative action decrease at which the minimizer stops.
    #[arg(long)]
    pub tol: Option<f64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            nodes: self.nodes,
            seed: self.seed,
            tol: self.tol,
        }
    }
}

fn seed_of(s: &Scenario, o: &Overrides) -> u64 {
    o.seed.unwrap_or(s.spec.seed)
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    Ok(text)
}

fn write_out(dir: Option<&Path>, name: &str, text: &str) -> Result<()> {
    if let Some(d) = dir {
        fs::create_dir_all(d)?;
        fs::write(d.join(name), text)?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct EvalReport {
    pub scenario: String,
    pub action: &'static str,
    pub value: f64,
    pub nodes: usize,
    pub length: f64,
}

pub fn run_eval(s: &Scenario, curve: &Path) -> Result<EvalReport> {
    let c = Curve::from_csv(BufReader::new(fs::File::open(curve)?))?;
    if c.dim() != s.dim() {
        return Err(Error::Config(format!(
            "curve has dimension {}, the scenario has {}",
            c.dim(),
            s.dim()
        )));
    }
    Ok(EvalReport {
        scenario: s.name.clone(),
        action: s.action.variant(),
        value: geometric_action(&s.action, &c)?,
        nodes: c.len(),
        length: c.length(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimizeReport {
    pub scenario: String,
    pub action: f64,
    pub parameters: Value,
    #[serde(flatten)]
    pub result: MinimizeResult,
    /// Distances of the curve ends to their sets.
    pub endpoint_gaps: [f64; 2],
}

pub fn run_minimize(s: &Scenario, o: &Overrides) -> Result<MinimizeReport> {
    let p = s
        .problem(Some(o))?
        .ok_or_else(|| Error::Config("the scenario has no [problem] section".into()))?;
    let through_saddle = s.spec.problem.as_ref().is_some_and(|p| p.seed_through_saddle);
    let field: Option<&dyn FlowField> = through_saddle.then_some(s.field.as_ref());
    let r = minimize(&p, field)?;
    let nodes = r.curve.nodes();
    let gaps = [p.start.distance(&nodes[0]), p.end.distance(&nodes[nodes.len() - 1])];
    let mut parameters = serde_json::to_value(&p.opts)?;
    parameters["bbox"] = serde_json::to_value(&p.bbox)?;
    parameters["seed_through_saddle"] = json!(through_saddle);
    parameters["start"] = serde_json::to_value(s.spec.problem.as_ref().map(|q| &q.start))?;
    parameters["end"] = serde_json::to_value(s.spec.problem.as_ref().map(|q| &q.end))?;
    Ok(MinimizeReport {
        scenario: s.name.clone(),
        action: r.action_value,
        parameters,
        result: r,
        endpoint_gaps: gaps,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EquilibriumVerdict {
    pub location: Vec<f64>,
    pub kind: EquilibriumKind,
    pub verdict: Option<CriteriaVerdict>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriteriaReport {
    pub scenario: String,
    pub seed: u64,
    pub options: crate::criteria::ClassifyOptions,
    pub grid: Option<GridSpec>,
    pub manifolds: Vec<(String, f64)>,
    pub rejected: Vec<RejectedManifold>,
    pub equilibria: Vec<EquilibriumVerdict>,
    pub cycles: Vec<CycleInfo>,
    pub summary: VerdictSummary,
    /// Grid points first, then explicit points, then cycle samples.
    pub verdicts: Vec<CriteriaVerdict>,
    pub cycle_verdicts: Vec<CriteriaVerdict>,
}

/// Points spread over one period of a detected cycle.
fn cycle_points(field: &dyn FlowField, c: &CycleInfo, count: usize) -> Result<Vec<Vector>> {
    let p = Vector::from_column_slice(&c.point);
    let opts = IntegratorOptions::with_tol(1e-12);
    (0..count)
        .map(|k| flow(field, &p, c.period * k as f64 / count as f64, &opts))
        .collect()
}

pub fn run_criteria(s: &Scenario, o: &Overrides) -> Result<CriteriaReport> {
    let spec = s.spec.criteria.clone().unwrap_or(crate::scenario::CriteriaSpec {
        grid: None,
        grid_box: None,
        points: Vec::new(),
        cycle_samples: 0,
        options: Default::default(),
    });
    let mut opts = spec.options.clone();
    opts.seed = seed_of(s, o);
    let classifier = Classifier::new(s.field.clone(), s.action.clone(), &s.manifolds, &s.domain, opts.clone())?;
    let grid_box = spec.grid_box.clone().unwrap_or_else(|| s.domain.clone());
    let grid = match (&spec.grid, spec.points.is_empty()) {
        (Some(g), _) => Some(GridSpec::new(&grid_box, g.clone())),
        (None, true) => Some(GridSpec::uniform(&grid_box, 21)),
        (None, false) => None,
    };
    let mut verdicts = match &grid {
        Some(g) => classifier.classify_grid(g)?,
        None => Vec::new(),
    };
    for p in &spec.points {
        verdicts.push(classifier.classify_point(&Vector::from_column_slice(p))?);
    }
    let mut cycle_verdicts = Vec::new();
    for c in &classifier.cycles {
        for p in cycle_points(s.field.as_ref(), c, spec.cycle_samples)? {
            cycle_verdicts.push(classifier.classify_point(&p)?);
        }
    }
    let mut all = verdicts.clone();
    all.extend(cycle_verdicts.iter().cloned());
    Ok(CriteriaReport {
        scenario: s.name.clone(),
        seed: opts.seed,
        options: opts,
        grid,
        manifolds: classifier.manifolds.iter().map(|m| (m.name.clone(), m.orientation)).collect(),
        rejected: classifier.rejected.clone(),
        equilibria: classifier
            .equilibria
            .iter()
            .map(|(e, v)| EquilibriumVerdict {
                location: e.location.iter().copied().collect(),
                kind: e.kind,
                verdict: v.clone(),
            })
            .collect(),
        cycles: classifier.cycles.clone(),
        summary: summarize(&all),
        verdicts,
        cycle_verdicts,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub pass: bool,
    pub details: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub scenario: String,
    pub seed: u64,
    pub pass: bool,
    pub suites: Vec<SuiteReport>,
}

fn suite(name: &'static str, pass: bool, details: Value) -> SuiteReport {
    SuiteReport { name, pass, details }
}

fn random_walk<R: Rng>(region: &BoundingBox, nodes: usize, rng: &mut R) -> Result<Curve> {
    let step = region.diameter() / (2.0 * nodes as f64);
    let mut x = region.sample(rng);
    let mut pts = vec![x.clone()];
    while pts.len() < nodes {
        let d = Vector::from_fn(x.len(), |_, _| gaussian(rng) * step);
        let (y, _) = region.clamp(&(&x + d));
        if (&y - &x).norm() > 0.0 {
            x = y;
            pts.push(x.clone());
        }
    }
    Curve::new(pts)
}

/// Runs every suite present in the scenario's `[verify]` section.
pub fn run_verify(s: &Scenario, o: &Overrides) -> Result<VerifyReport> {
    let seed = seed_of(s, o);
    let v = s.spec.verify.clone().unwrap_or_default();
    let field = s.field.as_ref();
    let mut suites = Vec::new();

    if let Some(cfg) = &v.flowline {
        let opts = IntegratorOptions::with_tol(1e-12);
        let run = flowline_of_length(field, &Vector::from_column_slice(&cfg.start), cfg.length, 1e3, &opts)?;
        let c = Curve::new(run.path)?;
        let action = geometric_action(&s.action, &c)?;
        let long_enough = run.arclength >= cfg.length * (1.0 - 1e-9);
        suites.push(suite(
            "flowline_zero_cost",
            long_enough && action < cfg.tolerance,
            json!({ "length": run.arclength, "nodes": c.len(), "action": action,
                    "tolerance": cfg.tolerance, "integrator_tol": 1e-12 }),
        ));
    }

    if let Some(cfg) = &v.drift_bound {
        let k = cfg.bbox.clone().unwrap_or_else(|| s.domain.clone());
        let h = s.action.hamiltonian();
        let a_const = drift_constant(h.as_ref(), &k, &GridSpec::uniform(&k, cfg.grid))?;
        let r = drift_lower_bound_check(&s.action, field, a_const, &k, cfg.samples, seed)?;
        suites.push(suite("drift_lower_bound", r.violations == 0, serde_json::to_value(&r)?));
    }

    if let Some(cfg) = &v.key_estimate {
        let m = s
            .manifolds
            .iter()
            .find(|m| m.name == cfg.manifold)
            .ok_or_else(|| Error::Config(format!("no manifold named '{}'", cfg.manifold)))?;
        let topts = TracingOptions {
            samples: cfg.tracing_samples,
            seed,
            ..TracingOptions::default()
        };
        let t = tracing_from_manifold(m, s.field.clone(), cfg.eps, &topts)?;
        let region = cfg.region.clone().unwrap_or_else(|| s.domain.clone());
        let h = s.action.hamiltonian();
        let a_const = drift_constant(h.as_ref(), &region, &GridSpec::uniform(&region, 11))?;
        let mut rng = crate::rng(seed);
        let mut failures = 0;
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..cfg.polylines {
            let c = random_walk(&region, cfg.nodes, &mut rng)?;
            let e = key_estimate_bound(&t, &s.action, a_const, &c)?;
            failures += usize::from(!e.holds);
            worst = worst.max(e.lhs - e.rhs - e.slack);
        }
        suites.push(suite(
            "key_estimate",
            failures == 0,
            json!({ "polylines": cfg.polylines, "failures": failures, "worst_excess": worst,
                    "eps": cfg.eps, "drift_constant": a_const, "grad_bound": t.grad_bound,
                    "min_drift": t.min_drift, "tracing_residual": t.tracing_residual }),
        ));
    }

    if let Some(cfg) = &v.descent {
        let k = cfg.bbox.clone().unwrap_or_else(|| s.domain.clone());
        let mut rng = crate::rng(seed);
        let mut values = Vec::new();
        while values.len() < cfg.segments {
            let a = k.sample(&mut rng);
            let e = k.sample(&mut rng);
            let b = field.drift(&e);
            let d = &e - &a;
            if b.norm() < cfg.min_drift || d.norm() < 1e-3 * k.diameter() {
                continue;
            }
            // Skip ends that nearly follow the flow.
            if d.dot(&b) / (d.norm() * b.norm()) > 0.99 {
                continue;
            }
            let c = Curve::segment(&a, &e, 21)?;
            values.push(crate::minimizer::descent_derivative(&c, &s.action, field, cfg.alpha0)?);
        }
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        suites.push(suite(
            "descent_direction",
            values.iter().all(|&d| d < 0.0),
            json!({ "segments": cfg.segments, "max_derivative": max, "alpha0": cfg.alpha0, "values": values }),
        ));
    }

    if let Some(cfg) = &v.hitting {
        suites.push(hitting_suite(s, o, cfg)?);
    }

    if let Some(cfg) = &v.admissibility {
        let mut reports = Vec::new();
        let mut rejected = Vec::new();
        for m in &s.manifolds {
            match check_admissible(m, field, cfg.samples, seed) {
                Ok(r) => {
                    if !r.pass {
                        rejected.push(m.name.clone());
                    }
                    reports.push(json!({ "name": m.name, "report": r }));
                }
                Err(Error::EmptyManifold) => {
                    rejected.push(m.name.clone());
                    reports.push(json!({ "name": m.name, "report": null, "reason": "empty zero set" }));
                }
                Err(e) => return Err(e),
            }
        }
        let mut expected = cfg.expect_reject.clone();
        expected.sort();
        let mut got = rejected.clone();
        got.sort();
        suites.push(suite(
            "admissibility",
            expected == got,
            json!({ "rejected": rejected, "expected_rejections": cfg.expect_reject,
                    "samples": cfg.samples, "manifolds": reports }),
        ));
    }

    Ok(VerifyReport {
        scenario: s.name.clone(),
        seed,
        pass: suites.iter().all(|r| r.pass),
        suites,
    })
}

fn hitting_suite(s: &Scenario, o: &Overrides, cfg: &crate::scenario::HittingSuite) -> Result<SuiteReport> {
    let m = run_minimize(s, o)?;
    let curve = m.result.curve.to_curve();
    let field = s.field.as_ref();
    let scale = s.domain.diameter();
    let eqs = find_equilibria(field, &s.domain, &GridSpec::uniform(&s.domain, 21))?;
    let critical: Vec<Vector> = eqs.iter().map(|e| e.location.clone()).collect();
    let saddle = eqs
        .iter()
        .filter(|e| e.kind == EquilibriumKind::Saddle)
        .min_by(|a, b| polyline_distance(&a.location, &curve).total_cmp(&polyline_distance(&b.location, &curve)));
    let Some(saddle) = saddle else {
        return Ok(suite("hitting_report", false, json!({ "note": "no saddle in the domain" })));
    };
    let branches = trace_invariant_manifolds_2d(field, saddle, cfg.arc_budget, scale, 1e3, &IntegratorOptions::default())?;
    let stable: Vec<&Curve> = branches.iter().filter(|b| b.kind == BranchKind::Stable).map(|b| &b.curve).collect();
    if stable.len() != 2 {
        return Err(Error::DegenerateSaddle("expected two stable branches".into()));
    }
    let separatrix = concat(&reverse(stable[0]), stable[1])?;
    let dist_tol = cfg.dist_tol.unwrap_or(2.0 * m.result.curve.spacing());
    let r = hitting_report(&curve, &separatrix, &critical, dist_tol, cfg.pass_tol);
    let downhill = match r.last_index {
        Some(i) => tail_action(&s.action, &curve, i)?,
        None => f64::NAN,
    };
    let ratio = downhill / m.action;
    let pass = r.pass && ratio <= cfg.downhill_ratio;
    Ok(suite(
        "hitting_report",
        pass,
        json!({ "minimizer_action": m.action, "converged": m.result.converged, "iterations": m.result.iterations,
                "saddle": saddle.location.as_slice(), "report": r, "downhill_action": downhill,
                "downhill_ratio": ratio, "downhill_limit": cfg.downhill_ratio, "seed": m.result.seed }),
    ))
}

fn execute(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Eval { common, curve } => {
            let s = parse_scenario(&common.scenario)?;
            let r = run_eval(&s, curve)?;
            let text = to_json(&r)?;
            write_out(common.out.as_deref(), "eval.json", &text)?;
            print!("{text}");
            Ok(true)
        }
        Command::Minimize { common } => {
            let s = parse_scenario(&common.scenario)?;
            let r = run_minimize(&s, &common.overrides())?;
            write_out(common.out.as_deref(), "curve.csv", &r.result.curve.to_curve().to_csv())?;
            write_out(common.out.as_deref(), "minimize.json", &to_json(&r)?)?;
            println!(
                "action {:.10} after {} iterations ({}, {:?})",
                r.action,
                r.result.iterations,
                if r.result.converged { "converged" } else { "not converged" },
                r.result.stop
            );
            for n in &r.result.notes {
                println!("note: {n}");
            }
            Ok(true)
        }
        Command::Criteria { common } => {
            let s = parse_scenario(&common.scenario)?;
            let r = run_criteria(&s, &common.overrides())?;
            write_out(common.out.as_deref(), "verdicts.json", &to_json(&r)?)?;
            let mut all = r.verdicts.clone();
            all.extend(r.cycle_verdicts.iter().cloned());
            write_out(common.out.as_deref(), "verdicts.csv", &verdicts_to_csv(&all))?;
            println!(
                "strong {} weak {} none-applicable {} non-existence {}",
                r.summary.strong, r.summary.weak, r.summary.none_applicable, r.summary.non_existence
            );
            for m in &r.rejected {
                println!("rejected manifold {}: {}", m.name, m.reason);
            }
            Ok(true)
        }
        Command::Verify { common } => {
            let s = parse_scenario(&common.scenario)?;
            let r = run_verify(&s, &common.overrides())?;
            write_out(common.out.as_deref(), "verify.json", &to_json(&r)?)?;
            for suite in &r.suites {
                println!("{} {}", if suite.pass { "PASS" } else { "FAIL" }, suite.name);
            }
            if r.suites.is_empty() {
                println!("no suites configured");
            }
            Ok(r.pass)
        }
    }
}

/// Parses arguments, runs the command and maps the outcome to an exit
/// code: 0 on success, 1 on a failed suite, 2 on an error.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        // Only the first call in a process can size the global pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
