mod report;
mod spec;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use ncl_core::suites::{run_suite, SuiteName};
use ncl_core::witness::{evaluate, evaluate_grid, lookup, registry, CorrelationGrid, EvalOptions, Params, Table};

use report::{Input, RunReport, Settings, SuiteDocument, Summary, EXIT_OK, EXIT_SUITE_FAILED, EXIT_USAGE, TOOL, VERSION};

#[derive(Parser)]
#[command(name = "ncl", version, about = "Nonclassicality and NPT-entanglement witnesses from moment-matrix determinants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate witnesses on a state spec.
    Run {
        #[arg(long)]
        spec: PathBuf,
        /// Comma-separated ids, or `all`, `table1`, `table2`.
        #[arg(long, default_value = "all")]
        witness: String,
        /// Partially transposed mode (1-based) for witnesses that accept an override.
        #[arg(long)]
        pt_mode: Option<usize>,
        #[arg(long, default_value_t = ncl_core::moments::DEFAULT_TOL_REL)]
        tol: f64,
        #[arg(long)]
        embed_matrices: bool,
        /// Phase of the phase-dependent operators.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        phase: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seeded property suite.
    Suite {
        /// classical-closure, separable-closure, identities or oracle-equivalence.
        name: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a two-time witness on a correlation grid.
    Grid {
        #[arg(long)]
        grid: PathBuf,
        /// antibunching or hyperbunching (full ids also accepted).
        #[arg(long, default_value = "antibunching")]
        witness: String,
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, allow_negative_numbers = true)]
        tau: f64,
        #[arg(long, default_value_t = ncl_core::moments::DEFAULT_TOL_REL)]
        tol: f64,
        #[arg(long)]
        embed_matrices: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the witness catalog.
    List,
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<i32, Failure>;

fn read(path: &Path, what: &str) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure(format!("cannot read {what} `{}`: {e}", path.display())))
}

fn check_tol(tol: f64) -> Result<(), Failure> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Failure(format!("--tol must be positive and finite, got {tol}")))
    }
}

fn valid_ids() -> String {
    registry().iter().map(|e| e.id).collect::<Vec<_>>().join(", ")
}

/// Expands the `--witness` list for a state with `modes` modes, sorted by id.
fn select(list: &str, modes: usize) -> Result<Vec<&'static str>, Failure> {
    let state_based = |table: Option<Table>| {
        registry()
            .iter()
            .filter(move |e| !e.needs_grid() && e.modes <= modes && table.is_none_or(|t| e.table == t))
            .map(|e| e.id)
    };
    let mut ids = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item {
            "all" => ids.extend(state_based(None)),
            "table1" => ids.extend(state_based(Some(Table::Table1))),
            "table2" => ids.extend(state_based(Some(Table::Table2))),
            id => {
                let e = lookup(id).map_err(|_| Failure(format!("unknown witness id `{id}`; valid ids: {}", valid_ids())))?;
                if e.needs_grid() {
                    return Err(Failure(format!("witness `{id}` takes a correlation grid; use `ncl grid`")));
                }
                if e.modes > modes {
                    return Err(Failure(format!("witness `{id}` needs {} modes, the state has {modes}", e.modes)));
                }
                ids.push(e.id);
            }
        }
    }
    if ids.is_empty() {
        return Err(Failure("no witnesses selected".into()));
    }
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}

#[allow(clippy::too_many_arguments)]
fn run(
    spec_path: &Path,
    witness: &str,
    pt_mode: Option<usize>,
    tol: f64,
    embed_matrices: bool,
    phase: f64,
    out: Option<&Path>,
) -> Outcome {
    check_tol(tol)?;
    if !phase.is_finite() {
        return Err(Failure(format!("--phase must be finite, got {phase}")));
    }
    let bytes = read(spec_path, "state spec")?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Failure("state spec is not valid UTF-8".into()))?;
    let spec = spec::parse(text)?;
    let (state, summary) = spec.build()?;
    if let Some(m) = pt_mode {
        if m == 0 || m > state.num_modes() {
            return Err(Failure(format!("--pt-mode must be between 1 and {}, got {m}", state.num_modes())));
        }
    }
    let ids = select(witness, state.num_modes())?;
    let opts = EvalOptions { tol_rel: tol, embed_matrices, pt_mode: pt_mode.map(|m| m - 1) };
    let params = Params { phase, ..Params::default() };
    let verdicts = ids
        .iter()
        .map(|id| evaluate(id, &state, &params, &opts).map_err(|e| Failure(format!("{id}: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let summary_counts = Summary::of(&verdicts);
    let code = summary_counts.exit_code;
    let doc = RunReport {
        tool: TOOL,
        version: VERSION,
        command: "run",
        input: Input { kind: "state-spec", sha256: report::sha256_hex(&bytes) },
        state: Some(summary),
        settings: Settings { tol_rel: tol, pt_mode, embed_matrices, phase, t: None, tau: None },
        verdicts,
        summary: summary_counts,
    };
    report::emit(&report::render(&doc), out)?;
    Ok(code)
}

fn suite(name: &str, seed: u64, count: usize, out: Option<&Path>) -> Outcome {
    let which = SuiteName::parse(name)?;
    if count == 0 {
        return Err(Failure("--count must be at least 1".into()));
    }
    let rep = run_suite(which, seed, count)?;
    let code = if rep.passed { EXIT_OK } else { EXIT_SUITE_FAILED };
    let canonical = format!("suite={} seed={seed} count={count}", which.as_str());
    let doc = SuiteDocument {
        tool: TOOL,
        version: VERSION,
        command: "suite",
        input: Input { kind: "suite-parameters", sha256: report::sha256_hex(canonical.as_bytes()) },
        report: rep,
    };
    report::emit(&report::render(&doc), out)?;
    Ok(code)
}

fn grid_id(name: &str) -> Result<&'static str, Failure> {
    let id = match name {
        "antibunching" => "table1.antibunching",
        "hyperbunching" => "table1.hyperbunching",
        other => other,
    };
    let e = lookup(id).map_err(|_| Failure(format!("unknown grid witness `{name}`; expected antibunching or hyperbunching")))?;
    if !e.needs_grid() {
        return Err(Failure(format!("witness `{name}` takes a state; use `ncl run`")));
    }
    Ok(e.id)
}

#[allow(clippy::too_many_arguments)]
fn grid(path: &Path, witness: &str, t: f64, tau: f64, tol: f64, embed_matrices: bool, out: Option<&Path>) -> Outcome {
    check_tol(tol)?;
    let id = grid_id(witness)?;
    let bytes = read(path, "grid")?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Failure("grid file is not valid UTF-8".into()))?;
    let g: CorrelationGrid = toml::from_str(text).map_err(|e| Failure(format!("malformed grid: {e}")))?;
    let opts = EvalOptions { tol_rel: tol, embed_matrices, pt_mode: None };
    let verdicts = vec![evaluate_grid(id, &g, t, tau, &opts)?];
    let summary = Summary::of(&verdicts);
    let code = summary.exit_code;
    let doc = RunReport {
        tool: TOOL,
        version: VERSION,
        command: "grid",
        input: Input { kind: "correlation-grid", sha256: report::sha256_hex(&bytes) },
        state: None,
        settings: Settings { tol_rel: tol, pt_mode: None, embed_matrices, phase: 0.0, t: Some(t), tau: Some(tau) },
        verdicts,
        summary,
    };
    report::emit(&report::render(&doc), out)?;
    Ok(code)
}

fn list() -> Outcome {
    for e in registry() {
        let modes = if e.needs_grid() { "grid".to_string() } else { format!("{} modes", e.modes) };
        println!("{:<36} {:<8} {}", e.id, modes, e.title);
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let start = Instant::now();
    let outcome = match &cli.command {
        Command::Run { spec, witness, pt_mode, tol, embed_matrices, phase, out } => {
            run(spec, witness, *pt_mode, *tol, *embed_matrices, *phase, out.as_deref())
        }
        Command::Suite { name, seed, count, out } => suite(name, *seed, *count, out.as_deref()),
        Command::Grid { grid: path, witness, t, tau, tol, embed_matrices, out } => {
            grid(path, witness, *t, *tau, *tol, *embed_matrices, out.as_deref())
        }
        Command::List => list(),
    };
    match outcome {
        Ok(code) => {
            if !matches!(cli.command, Command::List) {
                eprintln!("wall-clock: {:.3} s", start.elapsed().as_secs_f64());
            }
            ExitCode::from(code as u8)
        }
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}
