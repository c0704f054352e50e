use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use penaltyguard::analysis::{
    compute_f, theorem_limit_check, toy_model, transition_probability, BoundInputs, ToyModelParams,
};
use penaltyguard::harness::{
    emit_csv, fit_report, named_plan, resolve_workers, run_experiment, ExperimentPlan, PlanOptions, RunRecord,
    DEFAULT_POINT_MEMORY, PLAN_NAMES,
};
use penaltyguard::model::{assemble, ModelConfig};
use penaltyguard::{build_jfs_code, verify_detection, Error, Result};

#[derive(Parser)]
#[command(name = "penaltyguard", version, about = "Energy-penalty protection experiments on encoded qubits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct RunArgs {
    /// Built-in plan name or path to a plan JSON file.
    #[arg(long)]
    plan: String,
    /// Fraction of grid and time points kept, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Paper horizons instead of the reduced defaults.
    #[arg(long)]
    full_scale: bool,
    #[arg(long, env = "PENALTYGUARD_WORKERS")]
    workers: Option<usize>,
    /// Memory budget in GiB that caps concurrent grid points.
    #[arg(long, default_value_t = 4.0)]
    memory_gb: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Check error detection and logical operators of the 4-qubit code.
    VerifyCode,
    /// Run a plan and write CSV files.
    Run(RunArgs),
    /// Run a protection-time plan and fit t_prot against E_P / lambda^2.
    Sweep(RunArgs),
    /// Deviation |(U(T) - U_0(T)) P| for a list of penalties.
    TheoremLimit {
        #[arg(long)]
        t: f64,
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
        ep_list: Vec<f64>,
        /// Model config; defaults to the paper instance.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Operator bound on |F(T)| next to its measured value.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        t: f64,
    },
    /// Three-level model: perturbative energies and transition ceiling.
    ToyModel {
        #[arg(long, allow_negative_numbers = true)]
        omega: f64,
        #[arg(long, allow_negative_numbers = true)]
        lp: f64,
        #[arg(long, allow_negative_numbers = true)]
        lm: f64,
        #[arg(long, allow_negative_numbers = true)]
        ep: f64,
        /// Largest time of the 100-point transition-probability sample.
        #[arg(long, default_value_t = 1000.0)]
        t_max: f64,
    },
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn load_plan(args: &RunArgs) -> Result<ExperimentPlan> {
    if PLAN_NAMES.contains(&args.plan.as_str()) {
        let opts = PlanOptions {
            scale: args.scale,
            full_scale: args.full_scale,
            seed: args.seed,
        };
        named_plan(&args.plan, &opts)
    } else {
        let path = Path::new(&args.plan);
        if !path.exists() {
            return Err(Error::validation(format!(
                "'{}' is neither a plan name ({}) nor a file",
                args.plan,
                PLAN_NAMES.join(", ")
            )));
        }
        ExperimentPlan::from_json(&read_text(path)?)
    }
}

fn execute(args: &RunArgs) -> Result<(ExperimentPlan, Vec<RunRecord>, Vec<PathBuf>)> {
    if !(args.memory_gb > 0.0) {
        return Err(Error::validation("memory budget must be positive"));
    }
    let plan = load_plan(args)?;
    let budget = (args.memory_gb * (1u64 << 30) as f64) as u64;
    let workers = resolve_workers(args.workers, budget, DEFAULT_POINT_MEMORY);
    log::info!("plan {} ({} points) on {workers} worker(s)", plan.name, plan.grid.len());
    let records = run_experiment(&plan, workers)?;
    let files = emit_csv(&records, &args.out)?;
    Ok((plan, records, files))
}

fn summary(plan: &ExperimentPlan, records: &[RunRecord], files: &[PathBuf]) -> serde_json::Value {
    let failures: Vec<_> = records
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| json!({"index": r.index, "error": e})))
        .collect();
    json!({
        "plan": plan.name,
        "plan_hash": plan.hash(),
        "points": records.len(),
        "failures": failures,
        "files": files,
    })
}

fn partial_failure(records: &[RunRecord]) -> Result<()> {
    let n = records.iter().filter(|r| !r.is_ok()).count();
    if n > 0 {
        return Err(Error::numerical(format!("{n} of {} grid points failed", records.len())));
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::VerifyCode => {
            let report = verify_detection(&build_jfs_code())?;
            print_json(&serde_json::to_value(&report)?)?;
            if !report.passed {
                return Err(Error::contract(format!(
                    "code verification failed on {} (residual {:e})",
                    report.worst_string, report.max_residual
                )));
            }
        }
        Command::Run(args) => {
            let (plan, records, files) = execute(&args)?;
            print_json(&summary(&plan, &records, &files))?;
            partial_failure(&records)?;
        }
        Command::Sweep(args) => {
            let (plan, records, files) = execute(&args)?;
            let fit = fit_report(&records)?;
            let path = args.out.join(format!("{}-{}-fit.json", plan.name, plan.short_hash()));
            let fit_json = serde_json::to_value(&fit)?;
            std::fs::write(&path, serde_json::to_string_pretty(&fit_json)? + "\n").map_err(|e| Error::io(&path, e))?;
            let mut out = summary(&plan, &records, &files);
            out["fit"] = fit_json;
            out["fit_file"] = json!(path);
            print_json(&out)?;
            partial_failure(&records)?;
        }
        Command::TheoremLimit { t, ep_list, config, seed } => {
            let cfg = match config {
                Some(p) => ModelConfig::from_json(&read_text(&p)?)?,
                None => ModelConfig::paper_default(seed),
            };
            let report = theorem_limit_check(&cfg, t, &ep_list)?;
            print_json(&serde_json::to_value(&report)?)?;
        }
        Command::Bounds { config, t } => {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::validation("T must be finite and nonnegative"));
            }
            let cfg = ModelConfig::from_json(&read_text(&config)?)?;
            let inst = assemble(&cfg)?;
            let inputs = BoundInputs::for_instance(&inst)?;
            let measured = compute_f(&inst, &[t])?[0].norm;
            print_json(&json!({
                "t": t,
                "e_penalty": inst.e_penalty,
                "inputs": inputs,
                "bound": inputs.bound(inst.e_penalty, t),
                "measured_norm": measured,
            }))?;
        }
        Command::ToyModel { omega, lp, lm, ep, t_max } => {
            let params = ToyModelParams {
                omega,
                lambda_plus: lp,
                lambda_minus: lm,
                e_penalty: ep,
            };
            if !(t_max > 0.0) || !t_max.is_finite() {
                return Err(Error::validation("t_max must be positive"));
            }
            let report = toy_model(&params)?;
            let times: Vec<f64> = (1..=100).map(|k| t_max * k as f64 / 100.0).collect();
            let probs = transition_probability(&params, &times)?;
            let max = probs.iter().cloned().fold(0.0, f64::max);
            let mut out = serde_json::to_value(&report)?;
            out["max_sampled_transition"] = json!(max);
            out["sample_t_max"] = json!(t_max);
            print_json(&out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("penaltyguard: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
