//! `bavne`: generate substrates, run simulations and sweeps, compare reports.
//!
//! Exit codes: 0 on success, 2 on usage or configuration errors (including
//! unreadable or malformed input files), 3 on generation or internal failure.
//! Errors are printed to stderr as one JSON object.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bavne_core::simulation::{experiment_tables, sweep, SweepEntry};
use bavne_core::topology::TopologyError;
use bavne_core::{generate_substrate, run, Algorithm, SimulationConfig, SimulationReport, ThresholdBasis};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bavne", version, about = "Multi-domain virtual network embedding simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a substrate network and write it as JSON.
    Generate(Common),
    /// Run one simulation and write its report.
    Run(RunArgs),
    /// Run the configured grid and write one CSV per experiment.
    Sweep(RunArgs),
    /// Print a side-by-side table of two or more reports.
    Compare {
        #[arg(required = true, num_args = 2..)]
        reports: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON document mirroring the simulation config; missing fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (generate, run) or directory (sweep).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    /// Report format for `run` (json by default). For `sweep`, json adds
    /// every report as sweep.json next to the CSVs.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Also write the per-request global-best fitness series as CSV.
    #[arg(long)]
    trace_fitness: bool,
    /// Average link bandwidth over count + 1 instead of count.
    #[arg(long)]
    plus_one_denominator: bool,
    /// Which bandwidth the domain threshold is computed from and compared with.
    #[arg(long, value_enum)]
    qualified_links: Option<Basis>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Basis {
    Residual,
    Capacity,
}

struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, kind: "usage", message: message.into() }
}

fn internal(message: impl Into<String>) -> Failure {
    Failure { code: 3, kind: "internal", message: message.into() }
}

fn topology_failure(e: &TopologyError) -> Failure {
    match e {
        TopologyError::InvalidConfig(_) | TopologyError::InvalidRequest { .. } => usage(e.to_string()),
        _ => Failure { code: 3, kind: "generation", message: e.to_string() },
    }
}

fn simulation_failure(e: bavne_core::simulation::SimulationError) -> Failure {
    match e {
        bavne_core::simulation::SimulationError::Topology(t) => topology_failure(&t),
        other => usage(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => return report(usage(e.to_string().trim_end())),
    };
    let result = match cli.command {
        Command::Generate(c) => cmd_generate(&c),
        Command::Run(a) => cmd_run(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Compare { reports } => cmd_compare(&reports),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> ExitCode {
    let body = serde_json::json!({ "error": f.kind, "message": f.message, "exit_code": f.code });
    eprintln!("{body}");
    ExitCode::from(f.code)
}

fn load_config(c: &Common) -> Result<SimulationConfig, Failure> {
    let mut config = match &c.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| usage(format!("bad config {}: {e}", path.display())))?
        }
        None => SimulationConfig::default(),
    };
    if let Some(seed) = c.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn apply_run_flags(config: &mut SimulationConfig, a: &RunArgs) {
    if let Some(alg) = a.algorithm {
        config.algorithm = alg;
    }
    if a.trace_fitness {
        config.trace_fitness = true;
    }
    if a.plus_one_denominator {
        config.abstraction.plus_one = true;
    }
    match a.qualified_links {
        Some(Basis::Residual) => config.abstraction.basis = ThresholdBasis::Residual,
        Some(Basis::Capacity) => config.abstraction.basis = ThresholdBasis::Capacity,
        None => {}
    }
}

/// Writes next to the target and renames into place, so readers never see a
/// partial file.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))?;
    let name = path.file_name().ok_or_else(|| usage(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        usage(format!("cannot write {}: {e}", path.display()))
    })
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| internal(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn cmd_generate(c: &Common) -> Result<(), Failure> {
    let config = load_config(c)?;
    let network = generate_substrate(&config.substrate, config.seed).map_err(|e| topology_failure(&e))?;
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from("substrate.json"));
    write_atomic(&out, &to_json(&network)?)?;
    println!("{} -> {}", network.summary(), out.display());
    Ok(())
}

fn fitness_csv(report: &SimulationReport) -> String {
    let mut s = String::from("vnr_id,iteration,best_fitness\n");
    for t in report.fitness_traces.iter().flatten() {
        for (i, f) in t.best_fitness.iter().enumerate() {
            s.push_str(&format!("{},{i},{f}\n", t.vnr_id));
        }
    }
    s
}

fn cmd_run(a: &RunArgs) -> Result<(), Failure> {
    let mut config = load_config(&a.common)?;
    apply_run_flags(&mut config, a);
    let report = run(&config).map_err(simulation_failure)?;
    let format = a.format.unwrap_or(Format::Json);
    let default = match format {
        Format::Json => "report.json",
        Format::Csv => "report.csv",
    };
    let out = a.common.out.clone().unwrap_or_else(|| PathBuf::from(default));
    match format {
        Format::Json => write_atomic(&out, &to_json(&report)?)?,
        Format::Csv => write_atomic(&out, report.metrics_csv().as_bytes())?,
    }
    if config.trace_fitness {
        let trace = out.with_extension("fitness.csv");
        write_atomic(&trace, fitness_csv(&report).as_bytes())?;
    }
    println!(
        "{} seed {}: {} arrivals, acceptance {}, threshold violations {} -> {}",
        report.algorithm_label,
        report.seed,
        report.arrivals,
        report.acceptance_rate,
        report.threshold_audit.violations,
        out.display()
    );
    Ok(())
}

fn cmd_sweep(a: &RunArgs) -> Result<(), Failure> {
    let mut config = load_config(&a.common)?;
    apply_run_flags(&mut config, a);
    let mut grid = config.sweep.clone().unwrap_or_default();
    if let Some(alg) = a.algorithm {
        grid.algorithms = vec![alg];
    }
    if let Some(seed) = a.common.seed {
        grid.seeds = vec![seed];
    }
    config.sweep = Some(grid);
    let entries: Vec<SweepEntry> = sweep(&config).map_err(simulation_failure)?;
    let dir = a.common.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    for (name, contents) in experiment_tables(&entries, config.vnr.nodes) {
        write_atomic(&dir.join(name), contents.as_bytes())?;
    }
    if a.format == Some(Format::Json) {
        write_atomic(&dir.join("sweep.json"), &to_json(&entries)?)?;
    }
    if config.trace_fitness {
        let mut s = String::from("vnr_nodes,algorithm,seed,vnr_id,iteration,best_fitness\n");
        for e in &entries {
            for line in fitness_csv(&e.report).lines().skip(1) {
                s.push_str(&format!("{},{},{},{line}\n", e.vnr_nodes, e.algorithm, e.seed));
            }
        }
        write_atomic(&dir.join("fitness.csv"), s.as_bytes())?;
    }
    println!("{} runs -> {}", entries.len(), dir.display());
    Ok(())
}

#[derive(Clone, Copy)]
enum Better {
    Higher,
    Lower,
}

const INDICES: [(&str, Better); 5] = [
    ("acceptance", Better::Higher),
    ("cost", Better::Lower),
    ("delay", Better::Lower),
    ("utilization", Better::Lower),
    ("selected_bw", Better::Higher),
];

fn indices(r: &SimulationReport) -> [Option<f64>; 5] {
    [r.acceptance_rate.value(), r.average_cost, r.average_delay, r.link_utilization.value(), r.mean_selected_bandwidth()]
}

/// `+` for the best value of a column, `-` for the others, `=` for every
/// row when all defined values tie.
fn marks(column: &[Option<f64>], better: Better) -> Vec<char> {
    let defined: Vec<f64> = column.iter().flatten().copied().collect();
    let best = match better {
        Better::Higher => defined.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Better::Lower => defined.iter().copied().fold(f64::INFINITY, f64::min),
    };
    let all_tie = defined.iter().all(|&v| v == best);
    column
        .iter()
        .map(|&v| match v {
            None => ' ',
            Some(_) if all_tie => '=',
            Some(v) if v == best => '+',
            Some(_) => '-',
        })
        .collect()
}

fn cmd_compare(paths: &[PathBuf]) -> Result<(), Failure> {
    let mut rows = Vec::new();
    for p in paths {
        let text = fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))?;
        let report: SimulationReport =
            serde_json::from_str(&text).map_err(|e| usage(format!("malformed report {}: {e}", p.display())))?;
        let name = format!("{} (seed {})", report.algorithm_label, report.seed);
        rows.push((name, indices(&report)));
    }
    let mut cells: Vec<Vec<String>> = rows.iter().map(|(name, _)| vec![name.clone()]).collect();
    for (k, &(_, better)) in INDICES.iter().enumerate() {
        let column: Vec<Option<f64>> = rows.iter().map(|(_, v)| v[k]).collect();
        for (i, m) in marks(&column, better).into_iter().enumerate() {
            let value = column[i].map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"));
            cells[i].push(format!("{value} {m}").trim_end().to_string());
        }
    }
    let header: Vec<String> =
        std::iter::once("report".to_string()).chain(INDICES.iter().map(|(n, _)| n.to_string())).collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| cells.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |row: &[String]| {
        row.iter()
            .enumerate()
            .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
            .collect::<Vec<_>>()
            .join("  ")
    };
    println!("{}", line(&header));
    for row in &cells {
        println!("{}", line(row));
    }
    Ok(())
}
