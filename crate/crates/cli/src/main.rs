use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use qgbf::cases::{compare_methods, run_case, CaseOutcome, CaseSpec, RunOptions, DEFAULT_SHOTS};
use qgbf::diffusion::{Method, DEFAULT_ALIAS_THRESHOLD};
use qgbf::filter::{run_scenario, Backend, ScenarioConfig};
use qgbf::grid::format_sig12;
use qgbf::QftOptions;

const EXIT_ORACLE: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "qgbf", version, about = "Quantum diffusion for grid-based Bayesian filters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run benchmark cases and write densities, histograms and resources.
    Run(RunArgs),
    /// Tabulate gate counts and depths of the adder and walk circuits.
    Compare(CommonArgs),
    /// Run a filtering scenario from a JSON file.
    Filter(FilterArgs),
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Benchmark id 1-4 or a case JSON file; repeatable. Defaults to all four benchmarks.
    #[arg(long = "case", value_name = "ID|FILE")]
    cases: Vec<String>,
    /// Walk repeats, overriding each case's own count.
    #[arg(long)]
    repeats: Option<usize>,
    /// Drop the swap network of every QFT and relabel qubits instead.
    #[arg(long)]
    elide_swaps: bool,
    /// Drop controlled-phase rotations with |angle| below this.
    #[arg(long, value_name = "EPS")]
    prune_angle: Option<f64>,
    /// Wraparound mass above which a run is flagged as aliased.
    #[arg(long, value_name = "EPS", default_value_t = DEFAULT_ALIAS_THRESHOLD)]
    alias_threshold: f64,
    /// Output directory.
    #[arg(long, env = "QGBF_OUT", default_value = "qgbf-out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::All)]
    method: MethodArg,
    #[arg(long, default_value_t = DEFAULT_SHOTS)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write zero-probability rows in density CSVs.
    #[arg(long)]
    dense: bool,
    /// Run independent case/method pairs on separate threads.
    #[arg(long)]
    parallel: bool,
}

#[derive(Args, Debug)]
struct FilterArgs {
    #[arg(long, value_name = "FILE")]
    scenario: PathBuf,
    /// Backend override: classical, qft or qrw:R.
    #[arg(long, value_parser = parse_backend)]
    backend: Option<Backend>,
    #[arg(long, env = "QGBF_OUT", default_value = "qgbf-out")]
    out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum MethodArg {
    Qft,
    Qrw,
    Classical,
    All,
}

impl MethodArg {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::Qft => vec![Method::Qft],
            MethodArg::Qrw => vec![Method::Qrw],
            MethodArg::Classical => vec![Method::Classical],
            MethodArg::All => vec![Method::Qft, Method::Qrw, Method::Classical],
        }
    }
}

fn parse_backend(s: &str) -> Result<Backend, String> {
    match s {
        "classical" => Ok(Backend::Classical),
        "qft" => Ok(Backend::Qft),
        _ => match s.strip_prefix("qrw:").map(str::parse::<usize>) {
            Some(Ok(r)) if r >= 1 => Ok(Backend::Qrw(r)),
            _ => Err(format!("unknown backend `{s}`; expected classical, qft or qrw:R with R >= 1")),
        },
    }
}

/// Errors in user-supplied input; reported with the usage exit code.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn load_cases(specs: &[String]) -> anyhow::Result<Vec<CaseSpec>> {
    if specs.is_empty() {
        return Ok(CaseSpec::all_benchmarks());
    }
    specs
        .iter()
        .map(|s| match s.parse::<u8>() {
            Ok(id) => CaseSpec::benchmark(id).map_err(|e| usage(e.to_string())),
            Err(_) => {
                let path = Path::new(s);
                if !path.is_file() {
                    return Err(usage(format!("unknown case `{s}`; expected 1-4 or a JSON file")));
                }
                let text = fs::read_to_string(path).with_context(|| format!("reading {s}"))?;
                CaseSpec::from_json(&text).map_err(|e| usage(format!("{s}: {e}")))
            }
        })
        .collect()
}

fn run_options(common: &CommonArgs) -> anyhow::Result<RunOptions> {
    if let Some(eps) = common.prune_angle {
        if !(eps >= 0.0) {
            return Err(usage("--prune-angle must be nonnegative"));
        }
    }
    if !(common.alias_threshold >= 0.0) {
        return Err(usage("--alias-threshold must be nonnegative"));
    }
    if common.repeats == Some(0) {
        return Err(usage("--repeats must be at least 1"));
    }
    Ok(RunOptions {
        repeats: common.repeats,
        qft: QftOptions { elide_swaps: common.elide_swaps, prune_angle: common.prune_angle },
        alias_threshold: common.alias_threshold,
        ..RunOptions::default()
    })
}

fn report(o: &CaseOutcome) {
    let sampled = o
        .histogram
        .as_ref()
        .map(|h| format!(" sampled_tv={:.4}", h.tv_distance(&o.exact_marginal)))
        .unwrap_or_default();
    let res = o
        .resources
        .map(|r| format!(" 1q={} 2q={} depth={}", r.total.one_qubit_gates, r.total.two_qubit_gates, r.total.depth))
        .unwrap_or_default();
    println!(
        "case {} {:<9} oracle_tv={:.3e}{sampled}{res} wrap={:.3e} {}",
        o.case,
        o.method,
        o.oracle_tv,
        o.wraparound_mass,
        if o.oracle_ok() { "ok" } else { "ORACLE FAILURE" }
    );
}

fn cmd_run(args: &RunArgs) -> anyhow::Result<bool> {
    let cases = load_cases(&args.common.cases)?;
    let opts =
        RunOptions { shots: Some(args.shots), seed: Some(args.seed), dense: args.dense, ..run_options(&args.common)? };
    let jobs: Vec<(&CaseSpec, Method)> =
        cases.iter().flat_map(|c| args.method.methods().into_iter().map(move |m| (c, m))).collect();
    let out = &args.common.out;
    let results: Vec<_> = if args.parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = jobs.iter().map(|&(c, m)| s.spawn(move || run_case(c, m, out, &opts))).collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        })
    } else {
        jobs.iter().map(|&(c, m)| run_case(c, m, out, &opts)).collect()
    };
    let mut ok = true;
    for r in results {
        let (outcome, _) = r?;
        report(&outcome);
        ok &= outcome.oracle_ok();
    }
    Ok(ok)
}

fn cmd_compare(args: &CommonArgs) -> anyhow::Result<bool> {
    let cases = load_cases(&args.cases)?;
    let table = compare_methods(&cases, &run_options(args)?)?;
    fs::create_dir_all(&args.out)?;
    let text = table.to_text();
    fs::write(args.out.join("resources.txt"), &text)?;
    fs::write(args.out.join("resources.csv"), table.to_csv())?;
    print!("{text}");
    Ok(true)
}

fn cmd_filter(args: &FilterArgs) -> anyhow::Result<bool> {
    let text = fs::read_to_string(&args.scenario).map_err(|e| usage(format!("{}: {e}", args.scenario.display())))?;
    let config = ScenarioConfig::from_json(&text).map_err(|e| usage(format!("{}: {e}", args.scenario.display())))?;
    let steps = run_scenario(&config, args.backend)?;
    fs::create_dir_all(&args.out)?;
    let d = config.axes.len();
    let mut csv = String::from("step,flat_index,");
    for k in 0..d {
        csv.push_str(&format!("coord_dim{k},"));
    }
    csv.push_str("prior,posterior\n");
    let mut diagnostics = Vec::new();
    for (k, step) in steps.iter().enumerate() {
        for i in 0..step.prior.len() {
            let coords = step.prior.coordinates(i).iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
            csv.push_str(&format!(
                "{},{i},{coords},{},{}\n",
                k + 1,
                format_sig12(step.prior.weights()[i]),
                format_sig12(step.posterior.weights()[i])
            ));
        }
        let tv = step.diagnostics.tv_to_classical.map(|t| format!(" tv_to_classical={t:.3e}")).unwrap_or_default();
        println!(
            "step {} backend={} mean={:?} var={:?}{tv}",
            k + 1,
            step.diagnostics.backend,
            step.posterior.mean(),
            step.posterior.variance()
        );
        diagnostics.push(&step.diagnostics);
    }
    fs::write(args.out.join("filter_densities.csv"), csv)?;
    fs::write(args.out.join("filter_diagnostics.json"), serde_json::to_string_pretty(&diagnostics)? + "\n")?;
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Filter(a) => cmd_filter(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: oracle check failed");
            ExitCode::from(EXIT_ORACLE)
        }
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ORACLE)
        }
    }
}
