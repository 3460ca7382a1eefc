//! Command-line runner for the built-in scenarios: simulation tables,
//! integrator comparisons, and verification suites, all written as
//! deterministic CSV plus a JSON summary.
//!
//! Exit codes: 0 success, 1 verification assertion failure, 2 configuration
//! error, 3 numerical failure (divergence, non-convergence, or a degenerate
//! system).

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use vint::discretize;
use vint::error::Error;
use vint::exec;
use vint::hj::{self, TrajectoryActionFamily};
use vint::report;
use vint::scenarios::{self, Method, MethodRun, RunConfig, ScenarioInstance};
use vint::symmetry;
use vint::{Result, SolverConfig};

#[derive(Parser)]
#[command(
    name = "vint",
    version,
    about = "Variational integrators for mechanical systems with external forces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write a per-step CSV plus a JSON summary.
    Simulate(RunArgs),
    /// Run several integrators and write an error-comparison table.
    Compare(RunArgs),
    /// Run a verification suite (noether, hj, or rayleigh) and write its
    /// report.
    Verify(VerifyArgs),
    /// List the built-in scenarios.
    ListScenarios,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario name; see list-scenarios. Optional when --config names one.
    scenario: Option<String>,
    /// JSON run configuration; other flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Step size.
    #[arg(long = "h")]
    h: Option<f64>,
    /// Number of steps.
    #[arg(long = "N")]
    steps: Option<usize>,
    /// Integration method (repeat the flag or comma-separate values).
    #[arg(long = "method", value_delimiter = ',')]
    methods: Vec<String>,
    /// Scenario parameter override as key=value (repeatable).
    #[arg(long = "param")]
    params: Vec<String>,
    /// Seed recorded in the summary and used by sampled checks.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path. Defaults to a scenario-named file in $VINT_OUT_DIR,
    /// or the working directory when the variable is unset.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Which suite to run: noether, hj, or rayleigh.
    kind: String,
    /// Scenario name; see list-scenarios.
    scenario: String,
    /// Step size override.
    #[arg(long = "h")]
    h: Option<f64>,
    /// Number of steps override.
    #[arg(long = "N")]
    steps: Option<usize>,
    /// Scenario parameter override as key=value (repeatable).
    #[arg(long = "param")]
    params: Vec<String>,
    /// Sampled pairs for the rayleigh probe (each one solves boundary
    /// problems, so this dominates the runtime).
    #[arg(long, default_value_t = 6)]
    samples: usize,
    /// Seed for sampled checks.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; same defaulting as simulate.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Compare(args) => compare(args),
        Command::Verify(args) => verify(args),
        Command::ListScenarios => list_scenarios(),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn parse_params(pairs: &[String]) -> Result<Vec<(String, f64)>> {
    pairs
        .iter()
        .map(|kv| {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| Error::contract(format!("--param '{kv}' is not key=value")))?;
            let x: f64 = value
                .parse()
                .map_err(|_| Error::contract(format!("--param '{kv}': '{value}' is not a number")))?;
            Ok((key.to_string(), x))
        })
        .collect()
}

fn build_config(args: &RunArgs) -> Result<RunConfig> {
    let mut config = match (&args.config, &args.scenario) {
        (Some(path), name) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.display().to_string(),
                source,
            })?;
            let mut c: RunConfig = serde_json::from_str(&text)
                .map_err(|e| Error::contract(format!("config parse failed: {e}")))?;
            if let Some(name) = name {
                c.scenario = name.clone();
            }
            c
        }
        (None, Some(name)) => scenarios::default_config(name)?,
        (None, None) => {
            return Err(Error::contract("give a scenario name or --config <file>"));
        }
    };
    if let Some(h) = args.h {
        config.h = h;
    }
    if let Some(n) = args.steps {
        config.steps = n;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if !args.methods.is_empty() {
        config.methods = args
            .methods
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Method>>>()?;
    }
    for (key, value) in parse_params(&args.params)? {
        config.params.insert(key, value);
    }
    Ok(config)
}

fn resolve_out(flag: &Option<PathBuf>, default_name: &str) -> PathBuf {
    match flag {
        Some(p) => p.clone(),
        None => match std::env::var_os("VINT_OUT_DIR") {
            Some(dir) => PathBuf::from(dir).join(default_name),
            None => PathBuf::from(default_name),
        },
    }
}

/// Run every configured method, printing wall-clock timings to stdout only
/// so the written files stay byte-identical across runs.
fn run_methods(inst: &ScenarioInstance, solver: &SolverConfig) -> Result<Vec<(Method, MethodRun)>> {
    let mut runs = Vec::new();
    for m in inst.config().methods.clone() {
        let t0 = Instant::now();
        let run = inst.run_method(m, solver)?;
        println!(
            "{m}: {} steps in {:.3} s",
            inst.config().steps,
            t0.elapsed().as_secs_f64()
        );
        runs.push((m, run));
    }
    Ok(runs)
}

fn simulate(args: RunArgs) -> Result<i32> {
    let config = build_config(&args)?;
    let inst = ScenarioInstance::build(config)?;
    let solver = SolverConfig::default();
    let runs = run_methods(&inst, &solver)?;

    let csv_path = resolve_out(
        &args.out,
        &format!("simulate-{}.csv", inst.config().scenario),
    );
    report::simulate_table(&inst, &runs, &solver)?.save(&csv_path)?;
    let summary_path = csv_path.with_extension("summary.json");
    report::run_summary(&inst, &runs, &solver)?.save(&summary_path)?;
    println!("wrote {}", csv_path.display());
    println!("wrote {}", summary_path.display());
    Ok(0)
}

fn compare(args: RunArgs) -> Result<i32> {
    let config = build_config(&args)?;
    let inst = ScenarioInstance::build(config)?;
    let solver = SolverConfig::default();
    let runs = run_methods(&inst, &solver)?;

    // Errors are measured against the highly substepped reference; reuse it
    // when it is among the requested methods.
    let reference = match runs.iter().find(|(m, _)| matches!(m, Method::Benchmark)) {
        Some((_, run)) => run.clone(),
        None => {
            let t0 = Instant::now();
            let run = inst.run_method(Method::Benchmark, &solver)?;
            println!(
                "benchmark (reference): {} steps in {:.3} s",
                inst.config().steps,
                t0.elapsed().as_secs_f64()
            );
            run
        }
    };
    let table = report::compare_table(&inst, &runs, &reference, &solver)?;
    for row in table.rows() {
        println!("{}", row.join("  "));
    }
    let csv_path = resolve_out(
        &args.out,
        &format!("compare-{}.csv", inst.config().scenario),
    );
    table.save(&csv_path)?;
    println!("wrote {}", csv_path.display());
    Ok(0)
}

fn verify(args: VerifyArgs) -> Result<i32> {
    let mut config = scenarios::default_config(&args.scenario)?;
    if let Some(h) = args.h {
        config.h = h;
    }
    if let Some(n) = args.steps {
        config.steps = n;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    for (key, value) in parse_params(&args.params)? {
        config.params.insert(key, value);
    }
    config.methods = vec![Method::Midpoint];
    let inst = ScenarioInstance::build(config)?;
    let solver = SolverConfig::default();
    let csv_path = resolve_out(
        &args.out,
        &format!("verify-{}-{}.csv", args.kind, args.scenario),
    );

    match args.kind.as_str() {
        "noether" => {
            if inst.generators().is_empty() {
                return Err(Error::contract(format!(
                    "scenario '{}' declares no symmetry generators",
                    args.scenario
                )));
            }
            let MethodRun::Discrete(traj) = inst.run_method(Method::Midpoint, &solver)? else {
                unreachable!("midpoint is discrete");
            };
            report::noether_table(&inst, &traj)?.save(&csv_path)?;
            println!("wrote {}", csv_path.display());
            let mut code = 0;
            for gen in inst.generators() {
                let drift = symmetry::momentum_drift(&traj, gen);
                let ok = drift < 1e-9;
                println!(
                    "momentum map J_{}: drift {drift:.3e} over {} steps — {}",
                    gen.label(),
                    inst.config().steps,
                    if ok { "ok" } else { "FAIL (tolerance 1e-9)" }
                );
                if !ok {
                    code = 1;
                }
            }
            Ok(code)
        }
        "hj" => {
            let sys = inst.discrete(Method::Midpoint)?;
            let MethodRun::Discrete(traj) = inst.run_method(Method::Midpoint, &solver)? else {
                unreachable!("midpoint is discrete");
            };
            let tfam = TrajectoryActionFamily::new(sys.clone(), traj)?;
            let tolerance = 1e-9;
            let rep = hj::hj_verify(&sys, &tfam, tolerance, &solver)?;
            report::hj_table(tfam.reference(), &rep)?.save(&csv_path)?;
            println!("wrote {}", csv_path.display());
            println!(
                "residual maxima: action {:.3e}, phase-space {:.3e}, configuration {:.3e} \
                 (tolerance {tolerance:.1e})",
                rep.max_hj_residual, rep.max_hamilton_residual, rep.max_del_residual
            );
            if rep.failures.is_empty() {
                Ok(0)
            } else {
                let first = rep.rows.iter().find(|row| {
                    row.hj_plus.abs().max(row.hj_minus.abs()) > tolerance
                        || row.hamilton > tolerance
                        || row.del > tolerance
                });
                if let Some(row) = first {
                    println!("first failing pair: k = {}", row.k);
                }
                Ok(1)
            }
        }
        "rayleigh" => {
            // Informational probe of the ideal force legs near the
            // configured initial state; never turns into a failing exit.
            let q0 = &inst.config().q0;
            let lo: Vec<f64> = q0.iter().map(|x| x - 0.4).collect();
            let hi: Vec<f64> = q0.iter().map(|x| x + 0.4).collect();
            let rep = discretize::rayleigh_conjecture_probe(
                inst.continuous(),
                inst.config().h,
                &lo,
                &hi,
                args.samples,
                inst.config().seed,
                exec::ExecMode::default(),
            );
            report::rayleigh_table(q0.len(), &rep)?.save(&csv_path)?;
            println!("wrote {}", csv_path.display());
            println!(
                "ideal-leg gradient-structure residual: max {:.3e} over {} pairs, {} oracle \
                 failures (informational)",
                rep.max_residual,
                rep.rows.len(),
                rep.failures
            );
            Ok(0)
        }
        other => Err(Error::contract(format!(
            "unknown verification suite '{other}' (expected noether, hj, or rayleigh)"
        ))),
    }
}

fn list_scenarios() -> Result<i32> {
    for name in scenarios::scenario_names() {
        let info = scenarios::describe(name)?;
        println!("{name}");
        println!("  {}", info.summary);
        println!("  degrees of freedom: {}", info.dim);
        let params = info
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(", ");
        println!("  parameters: {params}");
        let methods = info
            .methods
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        println!("  methods: {methods}");
        if !info.generators.is_empty() {
            println!("  generators: {}", info.generators.join(", "));
        }
        if info.has_closed_form {
            println!("  closed-form solution: yes");
        }
        let d = scenarios::default_config(name)?;
        println!("  defaults: h={}, N={}", d.h, d.steps);
    }
    Ok(0)
}
