//! `mpsqvm`: run kernels, sweep VQE energies and benchmark random circuits.

mod range;

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mpsqvm::random_circuit::{self, Budget, GridSpec, SingleQubitPool};
use mpsqvm::vqe::{self, EnergyMode};
use mpsqvm::{
    bind_parameters, execute, flatten, parse, BackendConfig, BackendKind, CompositeInstruction, CutoffMode, GateKind,
    PauliHamiltonian, QubitBuffer, SourceUnit, TruncationPolicy,
};

const RANGE_HELP: &str = "\
Ranges are written start:stop:third, both ends inclusive. For --qubits and
--rounds the third field is a step (5:85:5 is 5, 10, ..., 85). For --grid it
is a point count (-3.14159265:3.14159265:100 is 100 evenly spaced angles).
A single number is a one-element range.

Exit status: 0 on success, 1 for usage or parse errors, 2 if execution fails.";

#[derive(Debug, Parser)]
#[command(name = "mpsqvm", version, about = "Matrix-product-state quantum virtual machine", after_help = RANGE_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute one kernel and print its measurement counts as JSON.
    Run(RunArgs),
    /// Sweep the single parameter of an ansatz and write `theta,energy` CSV.
    Vqe(VqeArgs),
    /// Measure MPS memory over a grid of random round circuits.
    #[command(after_help = RANGE_HELP)]
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
struct TruncationArgs {
    /// Singular-value cutoff ε.
    #[arg(long, env = "MPSQVM_CUTOFF", default_value_t = TruncationPolicy::DEFAULT_CUTOFF)]
    cutoff: f64,
    /// Whether ε is scaled by the largest singular value.
    #[arg(long, value_parser = parse_cutoff_mode, default_value = "relative")]
    cutoff_mode: CutoffMode,
    /// Hard cap on the bond dimension (unlimited by default).
    #[arg(long, env = "MPSQVM_MAX_BOND")]
    max_bond: Option<usize>,
    /// Largest register the dense backend accepts.
    #[arg(long, env = "MPSQVM_ORACLE_QUBIT_CAP", default_value_t = mpsqvm::dense::DEFAULT_QUBIT_CAP)]
    oracle_qubit_cap: usize,
}

impl TruncationArgs {
    fn policy(&self) -> Result<TruncationPolicy> {
        if !(self.cutoff >= 0.0 && self.cutoff.is_finite()) {
            bail!("--cutoff must be a finite non-negative number, got {}", self.cutoff);
        }
        if self.max_bond == Some(0) {
            bail!("--max-bond must be at least 1");
        }
        Ok(TruncationPolicy { cutoff: self.cutoff, mode: self.cutoff_mode, max_bond: self.max_bond })
    }

    fn backend(&self, kind: BackendKind) -> Result<BackendConfig> {
        let mut config = BackendConfig::new(kind);
        config.truncation = self.policy()?;
        config.oracle_qubit_cap = self.oracle_qubit_cap;
        Ok(config)
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Kernel source file, or `-` for stdin.
    source: PathBuf,
    /// Kernel to execute; may be omitted when the file defines only one.
    #[arg(long)]
    kernel: Option<String>,
    /// Values for the kernel's `double` parameters, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    args: Vec<f64>,
    #[arg(long, value_parser = parse_backend, default_value = "mps")]
    backend: BackendKind,
    #[arg(long, default_value_t = 1024)]
    shots: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Register width; defaults to one past the highest qubit used.
    #[arg(long)]
    qubits: Option<usize>,
    #[command(flatten)]
    truncation: TruncationArgs,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall-clock time in the output (makes it non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct VqeArgs {
    /// Kernel source holding the ansatz.
    #[arg(long)]
    ansatz: PathBuf,
    #[arg(long, default_value = "ansatz")]
    kernel: String,
    /// Hamiltonian file: one `<coeff> <pauli>` term per line.
    #[arg(long)]
    ham: PathBuf,
    #[arg(long, value_parser = parse_backend, default_value = "mps")]
    backend: BackendKind,
    /// start:stop:count, inclusive.
    #[arg(long, default_value = "-3.141592653589793:3.141592653589793:100", allow_hyphen_values = true)]
    grid: String,
    /// Estimate each term from this many samples instead of analytically.
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    truncation: TruncationArgs,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value = "5:85:5")]
    qubits: String,
    #[arg(long, default_value = "2:10:2")]
    rounds: String,
    /// Random circuits per cell.
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    /// First circuit seed of every cell.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = parse_pool, default_value = "pauli-rotation")]
    pool: SingleQubitPool,
    #[command(flatten)]
    truncation: TruncationArgs,
    /// Skip a cell once any bond exceeds this dimension.
    #[arg(long, default_value_t = Budget::default().max_chi)]
    chi_cap: usize,
    /// Skip a cell once one circuit runs longer than this many seconds.
    #[arg(long, default_value_t = Budget::default().time.as_secs_f64())]
    time_budget: f64,
    /// Summary CSV path. Also writes `<stem>.dat` (surface data) and
    /// `<stem>.seeds.csv` (per-seed values) next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_backend(s: &str) -> Result<BackendKind, String> {
    s.parse()
}

fn parse_cutoff_mode(s: &str) -> Result<CutoffMode, String> {
    s.parse()
}

fn parse_pool(s: &str) -> Result<SingleQubitPool, String> {
    match s {
        "pauli-rotation" => Ok(SingleQubitPool::PauliRotation),
        "mixed" => Ok(SingleQubitPool::Mixed),
        other => Err(format!("unknown pool `{other}` (expected pauli-rotation or mixed)")),
    }
}

/// Splits failures into the two non-zero exit codes.
enum Failure {
    Input(anyhow::Error),
    Execution(anyhow::Error),
}

trait Classify<T> {
    fn input(self) -> Result<T, Failure>;
    fn execution(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(e.into()))
    }
    fn execution(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Execution(e.into()))
    }
}

fn read_source(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut text = String::new();
        io::stdin().read_to_string(&mut text).context("reading stdin")?;
        Ok(text)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn load_unit(path: &Path) -> Result<SourceUnit> {
    let text = read_source(path)?;
    parse(&text).with_context(|| format!("{}", path.display()))
}

fn pick_kernel<'a>(unit: &'a SourceUnit, name: Option<&str>) -> Result<&'a CompositeInstruction> {
    match name {
        Some(name) => unit.get(name).ok_or_else(|| {
            anyhow!("no kernel `{name}`; defined: {}", unit.names().collect::<Vec<_>>().join(", "))
        }),
        None => match unit.kernels.as_slice() {
            [only] => Ok(only),
            [] => bail!("source defines no kernels"),
            _ => bail!(
                "source defines several kernels ({}); pick one with --kernel",
                unit.names().collect::<Vec<_>>().join(", ")
            ),
        },
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => io::stdout().write_all(text.as_bytes()).context("writing stdout"),
    }
}

#[derive(Serialize)]
struct RunOutput<'a> {
    kernel: &'a str,
    backend: BackendKind,
    qubits: usize,
    gates: usize,
    measurements: usize,
    shots: usize,
    seed: u64,
    counts: &'a std::collections::BTreeMap<String, u64>,
    max_bond_seen: usize,
    memory_estimate_bytes: u64,
    trunc_error_sq: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time: Option<f64>,
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut config = args.truncation.backend(args.backend).input()?;
    config.shots = args.shots;
    config.seed = args.seed;
    let unit = load_unit(&args.source).input()?;
    let kernel = pick_kernel(&unit, args.kernel.as_deref()).input()?;
    let program = bind_parameters(kernel, &args.args)
        .and_then(|k| flatten(&k))
        .with_context(|| format!("binding kernel `{}`", kernel.name))
        .input()?;
    let used = program.iter().flat_map(|i| i.qubits.iter().copied()).max().map_or(1, |q| q + 1);
    let n = args.qubits.unwrap_or(used);

    let mut buffer = QubitBuffer::new("b", n);
    let record = execute(&program, &mut buffer, &config).execution()?;
    let measurements = program.iter().filter(|i| i.kind == GateKind::Measure).count();
    let out = RunOutput {
        kernel: &kernel.name,
        backend: args.backend,
        qubits: n,
        gates: program.len() - measurements,
        measurements,
        shots: config.shots,
        seed: config.seed,
        counts: &record.counts,
        max_bond_seen: record.max_bond_seen,
        memory_estimate_bytes: record.memory_estimate_bytes,
        trunc_error_sq: record.trunc_error_sq,
        wall_time: args.timing.then_some(record.wall_time.as_secs_f64()),
    };
    let mut text = serde_json::to_string_pretty(&out).execution()?;
    text.push('\n');
    emit(args.out.as_deref(), &text).execution()
}

fn cmd_vqe(args: VqeArgs) -> Result<(), Failure> {
    let config = args.truncation.backend(args.backend).input()?;
    let grid = range::theta_grid(&args.grid).context("--grid").input()?;
    let unit = load_unit(&args.ansatz).input()?;
    let ansatz = pick_kernel(&unit, Some(&args.kernel)).input()?;
    let h = PauliHamiltonian::load(&args.ham).input()?;
    let mode = match args.shots {
        Some(0) => return Err(Failure::Input(anyhow!("--shots must be at least 1"))),
        Some(shots) => EnergyMode::Sampled { shots, seed: args.seed },
        None => EnergyMode::Analytic,
    };
    let result = vqe::sweep(ansatz, &h, &grid, &config, mode).execution()?;
    emit(args.out.as_deref(), &result.to_csv()).execution()?;
    eprintln!("min_energy={} argmin_theta={}", result.min_energy, result.argmin_theta);
    Ok(())
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}{suffix}"))
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let policy = args.truncation.policy().input()?;
    let grid = GridSpec {
        qubits: range::int_range(&args.qubits).context("--qubits").input()?,
        rounds: range::int_range(&args.rounds).context("--rounds").input()?,
        seeds_per_cell: args.seeds,
        base_seed: args.seed,
        pool: args.pool,
    };
    if grid.seeds_per_cell == 0 {
        return Err(Failure::Input(anyhow!("--seeds must be at least 1")));
    }
    if let Some(&n) = grid.qubits.iter().find(|&&n| n < 2) {
        return Err(Failure::Input(anyhow!("--qubits: circuits need at least 2 qubits, got {n}")));
    }
    if grid.rounds.contains(&0) {
        return Err(Failure::Input(anyhow!("--rounds: need at least 1 round")));
    }
    if !(args.time_budget > 0.0 && args.time_budget.is_finite()) {
        return Err(Failure::Input(anyhow!("--time-budget must be a positive number of seconds")));
    }
    let budget = Budget { max_chi: args.chi_cap, time: std::time::Duration::from_secs_f64(args.time_budget) };

    let records = random_circuit::run_grid(&grid, policy, budget);
    for r in records.iter().filter(|r| r.is_skipped()) {
        eprintln!("skipped n={} rounds={}: {}", r.n, r.rounds, r.skipped.as_deref().unwrap_or(""));
    }
    match &args.out {
        Some(out) => {
            let mut csv = Vec::new();
            let mut surface = Vec::new();
            random_circuit::emit_report(&records, &mut csv, &mut surface).execution()?;
            emit(Some(out), &String::from_utf8_lossy(&csv)).execution()?;
            emit(Some(&sidecar(out, ".dat")), &String::from_utf8_lossy(&surface)).execution()?;
            emit(Some(&sidecar(out, ".seeds.csv")), &random_circuit::report_seeds(&records)).execution()
        }
        None => emit(None, &random_circuit::report_csv(&records)).execution(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Vqe(a) => cmd_vqe(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Execution(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
