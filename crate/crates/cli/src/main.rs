//! `hanfq` — maintain a fixed query over a bounded-degree database under
//! single-tuple updates, with constant-cost answering.
//!
//! ```text
//! hanfq --schema s.sexp --query q.sexp --stream updates.txt --mode count
//! hanfq --mode bench --sizes 1000,10000 --churn 200 --seed 7
//! ```
//!
//! Exit codes: 0 success, 1 usage error (bad flags or unreadable files),
//! 2 parse or configuration error, 3 failed consistency check.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use hanfq_cli::session::{Session, SessionError};
use hanfq_cli::workload;
use hanfq_core::parse::{parse_query, parse_schema, parse_stream, StreamCmd};
use hanfq_core::Tuple;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Replay the stream; print a final Boolean verdict.
    Answer,
    /// Replay the stream; print a final result count.
    Count,
    /// Replay the stream; print the final answers, sorted.
    Enum,
    /// Replay the stream; print membership of each --tuple.
    Test,
    /// Replay the stream with a full consistency check after every update.
    Check,
    /// Ignore the stream; measure costs on growing synthetic workloads.
    Bench,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Gen {
    Path,
    Random,
    Grid,
}

#[derive(Debug, Parser)]
#[command(name = "hanfq", about = "dynamic query evaluation under updates")]
struct Args {
    /// Schema file: (schema (NAME ARITY) ...).
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Query file: (query (vars ...) TREE).
    #[arg(long)]
    query: Option<PathBuf>,
    /// Update/command stream file; omit to only report on the empty state.
    #[arg(long)]
    stream: Option<PathBuf>,
    /// Gaifman-degree bound enforced on every insert.
    #[arg(long, default_value_t = 3)]
    degree: usize,
    #[arg(long, value_enum, default_value_t = Mode::Answer)]
    mode: Mode,
    /// Evaluate by brute force instead of incremental maintenance.
    #[arg(long)]
    oracle_only: bool,
    /// Tuple to test in --mode test, e.g. --tuple "1 2" (repeatable).
    #[arg(long)]
    tuple: Vec<String>,
    /// Cap on enumerated output in --mode enum.
    #[arg(long)]
    limit: Option<usize>,
    /// Candidate-space cap for consistency checks.
    #[arg(long, default_value_t = 100_000)]
    brute_cap: u64,
    /// Workload shape for --mode bench.
    #[arg(long, value_enum, default_value_t = Gen::Path)]
    gen: Gen,
    /// Comma-separated sizes for --mode bench.
    #[arg(long, default_value = "1000,10000,100000")]
    sizes: String,
    /// Churn steps measured at each bench size.
    #[arg(long, default_value_t = 200)]
    churn: usize,
    /// Seed for generated workloads.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn fail(code: u8, message: String) -> ExitCode {
    eprintln!("hanfq: {message}");
    ExitCode::from(code)
}

fn read(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            // clap would exit 2; usage problems are exit 1 here.
            let _ = e.print();
            return ExitCode::from(u8::from(e.use_stderr()));
        }
    };
    if args.mode == Mode::Bench {
        return bench(&args);
    }

    let (Some(schema_path), Some(query_path)) = (&args.schema, &args.query) else {
        return fail(1, "--schema and --query are required outside --mode bench".into());
    };
    let schema_text = match read(schema_path) {
        Ok(t) => t,
        Err(e) => return fail(1, e),
    };
    let query_text = match read(query_path) {
        Ok(t) => t,
        Err(e) => return fail(1, e),
    };
    let schema = match parse_schema(&schema_text) {
        Ok(s) => s,
        Err(e) => return fail(2, format!("{}: {e}", schema_path.display())),
    };
    let query = match parse_query(&query_text, &schema) {
        Ok(q) => q,
        Err(e) => return fail(2, format!("{}: {e}", query_path.display())),
    };
    let mut cmds: Vec<StreamCmd> = Vec::new();
    if let Some(stream_path) = &args.stream {
        let text = match read(stream_path) {
            Ok(t) => t,
            Err(e) => return fail(1, e),
        };
        cmds = match parse_stream(&text, &schema) {
            Ok(c) => c,
            Err(e) => return fail(2, format!("{}: {e}", stream_path.display())),
        };
    }
    let mut tuples: Vec<Tuple> = Vec::new();
    for raw in &args.tuple {
        let mut tuple = Tuple::new();
        for word in raw.split_whitespace() {
            match word.parse() {
                Ok(c) => tuple.push(c),
                Err(_) => return fail(1, format!("--tuple {raw:?}: bad constant {word:?}")),
            }
        }
        tuples.push(tuple);
    }
    if args.mode == Mode::Test && tuples.is_empty() {
        return fail(1, "--mode test needs at least one --tuple".into());
    }
    if args.oracle_only && args.mode == Mode::Check {
        return fail(1, "--mode check exercises the incremental engine; drop --oracle-only".into());
    }

    let mut session = match Session::new(schema, args.degree, query, args.oracle_only) {
        Ok(s) => s,
        Err(e) => return fail(2, e.to_string()),
    };
    if args.mode == Mode::Check {
        session.check_each = Some(args.brute_cap);
    }

    // The final report reuses the stream-command printer, so `--mode count`
    // and an inline `? count` emit identical text.
    match args.mode {
        Mode::Answer => cmds.push(StreamCmd::Answer),
        Mode::Count => cmds.push(StreamCmd::Count),
        Mode::Enum => cmds.push(StreamCmd::Enumerate(args.limit)),
        Mode::Test => cmds.extend(tuples.into_iter().map(StreamCmd::Test)),
        Mode::Check => cmds.push(StreamCmd::Check(Some(args.brute_cap))),
        Mode::Bench => unreachable!(),
    }

    let mut out = Vec::new();
    match session.run(&cmds, &mut out) {
        Ok(()) => {
            for line in &out {
                println!("{line}");
            }
            if args.mode == Mode::Check {
                println!("checked {} applied updates", session.applied);
            }
            ExitCode::SUCCESS
        }
        Err(SessionError::Engine(e)) => fail(2, e.to_string()),
        Err(SessionError::Inconsistent(m)) => {
            for line in &out {
                println!("{line}");
            }
            fail(3, format!("inconsistent state: {m}"))
        }
    }
}

fn bench(args: &Args) -> ExitCode {
    let sizes: Result<Vec<u32>, _> = args
        .sizes
        .split(',')
        .map(|s| s.trim().parse::<u32>())
        .collect();
    let sizes = match sizes {
        Ok(s) if !s.is_empty() => s,
        _ => return fail(1, format!("--sizes {:?}: expected comma-separated numbers", args.sizes)),
    };
    if args.gen != Gen::Path {
        // The measurement story is about growing a structure of fixed local
        // shape; only the line does that for every size.
        return fail(1, "--mode bench supports --gen path".into());
    }
    println!(
        "measuring line workloads, {} churn steps, seed {}",
        args.churn, args.seed
    );
    match workload::run_bench(&sizes, args.churn, args.seed) {
        Ok(reports) => {
            for report in &reports {
                println!("{}", report.render());
            }
            if let (Some(first), Some(last)) = (reports.first(), reports.last()) {
                let ratio = |a: u64, b: u64| -> f64 {
                    if a == 0 && b == 0 {
                        1.0
                    } else {
                        b.max(1) as f64 / a.max(1) as f64
                    }
                };
                println!(
                    "growth {}x data -> update ops x{:.2}, enum gap x{:.2}",
                    last.size / first.size.max(1),
                    ratio(first.churn_ops_max, last.churn_ops_max),
                    ratio(first.enum_gap_max, last.enum_gap_max),
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(2, e.to_string()),
    }
}
