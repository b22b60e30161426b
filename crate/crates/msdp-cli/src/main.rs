use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use msdp_cli::bench::run_bench;
use msdp_cli::format::{load_instance, to_json_string};
use msdp_cli::gen::{generate, GenKind, GenRequest};
use msdp_cli::report::{json_document, render_csv, render_text, InstanceReport};
use msdp_cli::run::{instance_report, policy_from_flags, RunOptions, SolverKind};
use msdp_cli::CliError;

#[derive(Parser)]
#[command(
    name = "msdp",
    version,
    about = "Trellis solvers for stage-separable objectives under arbitrary constraints"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
enum OutFormat {
    Json,
    Csv,
    Text,
}

#[derive(Args, Clone)]
struct SolverFlags {
    /// Solvers to run, in order (msdp, es, sa).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    solver: Option<Vec<SolverKind>>,
    /// Survivor cap per stage; omitting it keeps every feasible survivor
    /// and certifies the optimum.
    #[arg(long)]
    ne_cap: Option<usize>,
    /// Merge survivors whose oracle state digests coincide.
    #[arg(long)]
    merge_dominated: bool,
    /// Proposal count for the annealing baseline.
    #[arg(long)]
    sa_iters: Option<u64>,
    #[arg(long, default_value_t = 42)]
    sa_seed: u64,
    #[arg(long, value_enum, default_value_t = OutFormat::Text)]
    format: OutFormat,
    /// Worker threads for exhaustive enumeration (identical results for
    /// any value).
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one instance file.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        flags: SolverFlags,
    },
    /// Generate an instance file.
    Gen {
        #[arg(long, value_enum)]
        kind: GenKind,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Stage count (random-table, adc, dfa-random).
        #[arg(long)]
        n: Option<usize>,
        /// Alphabet size (random-table).
        #[arg(long)]
        m: Option<usize>,
        /// Power budget (adc).
        #[arg(long)]
        pt: Option<f64>,
        /// Fragment length (dfa-random).
        #[arg(long)]
        frag_len: Option<usize>,
        #[arg(long)]
        states: Option<usize>,
        #[arg(long)]
        actions: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
        /// Attempt cap for the witness search.
        #[arg(long, default_value_t = 10_000)]
        attempts: u64,
        /// Write the instance here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the two bundled benchmark instances with every selected solver.
    Bench {
        #[command(flatten)]
        flags: SolverFlags,
    },
}

fn write_out(output: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn options_from_flags(flags: &SolverFlags) -> Result<RunOptions, CliError> {
    Ok(RunOptions {
        policy: policy_from_flags(flags.ne_cap, flags.merge_dominated)?,
        sa_iters: flags.sa_iters,
        sa_seed: flags.sa_seed,
        threads: flags.threads.max(1),
        ..RunOptions::default()
    })
}

fn render(sections: &[InstanceReport], flags: &SolverFlags) -> Result<String, CliError> {
    Ok(match flags.format {
        OutFormat::Json => {
            if sections.len() == 1
                && sections[0].rows.len() == 1
                && sections[0].rows[0].report.is_some()
                && sections[0].assembly.is_none()
            {
                // Single solver, single instance: emit the bare report
                // document rather than a comparison wrapper.
                json_document(sections[0].rows[0].report.as_ref().unwrap())
            } else {
                msdp_cli::report::bench_document(sections)
            }
        }
        OutFormat::Csv => render_csv(sections),
        OutFormat::Text => render_text(sections),
    })
}

fn cmd_solve(instance: &PathBuf, flags: &SolverFlags) -> Result<(), CliError> {
    let loaded = load_instance(instance)?;
    let solvers = flags.solver.clone().unwrap_or_else(|| vec![SolverKind::Msdp]);
    let opts = options_from_flags(flags)?;
    let name = instance
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| String::from("instance"));
    if let [solver] = solvers[..] {
        // A lone solver's failure is the process outcome; with several,
        // failures become rows and the comparison still renders.
        let (report, built, wall_ms) = msdp_cli::run::execute(&loaded, solver, &opts)?;
        let dto = msdp_cli::report::report_dto(&report, &built.domain);
        if flags.format == OutFormat::Json {
            return write_out(&flags.output, &json_document(&dto));
        }
        let assembly = match &built.fragments {
            Some(fragments) => {
                Some(msdp_cli::run::oriented_assembly(&report.best.values, fragments)?)
            }
            None => None,
        };
        let section = InstanceReport {
            instance: name,
            rows: vec![msdp_cli::report::row_ok(solver.name(), wall_ms, dto)],
            assembly,
        };
        return write_out(&flags.output, &render(&[section], flags)?);
    }
    let section = instance_report(&name, &loaded, &solvers, &opts)?;
    write_out(&flags.output, &render(&[section], flags)?)
}

fn cmd_gen(req: &GenRequest, output: &Option<PathBuf>) -> Result<(), CliError> {
    let (file, summary) = generate(req)?;
    if let Some(s) = summary {
        let single = match s.single_value {
            Some(v) => format!("{v}"),
            None => String::from("starved (no survivor completed)"),
        };
        eprintln!(
            "witness found after {} attempts: single-survivor {} vs oracle {}",
            s.attempts_used, single, s.oracle_value
        );
    }
    write_out(output, &to_json_string(&file))
}

fn cmd_bench(flags: &SolverFlags) -> Result<(), CliError> {
    let solvers = flags
        .solver
        .clone()
        .unwrap_or_else(|| vec![SolverKind::Msdp, SolverKind::Es, SolverKind::Sa]);
    let opts = options_from_flags(flags)?;
    let sections = run_bench(&solvers, &opts)?;
    write_out(&flags.output, &render(&sections, flags)?)
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.cmd {
        Cmd::Solve { instance, flags } => cmd_solve(instance, flags),
        Cmd::Gen {
            kind,
            seed,
            n,
            m,
            pt,
            frag_len,
            states,
            actions,
            horizon,
            attempts,
            output,
        } => {
            let req = GenRequest {
                kind: *kind,
                seed: *seed,
                n: *n,
                m: *m,
                pt: *pt,
                frag_len: *frag_len,
                states: *states,
                actions: *actions,
                horizon: *horizon,
                attempts: *attempts,
            };
            cmd_gen(&req, output)
        }
        Cmd::Bench { flags } => cmd_bench(flags),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
