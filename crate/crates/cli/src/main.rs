//! `simtol`: approximate extraction, similarity joins and threshold search over text files.

mod input;
mod report;

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use simtol::faerie::{extract_all, ExtractError, Pruning};
use simtol::oracle;
use simtol::passjoin::{join_ed_rs, join_ed_self, join_eds, JoinOptions, Strategy};
use simtol::pivotal::{PivotMode, SearchError, SearchIndex, SearchOptions};
use simtol::setjoin::{join_set_rs, join_set_self, FnvScheme, Selection, SetJoinError, SetJoinOptions};
use simtol::{SimFn, SimValue, SimilaritySpec};

use input::{at_line, read_document, read_lines, read_sets, CliError};
use report::RunReport;

#[derive(Parser)]
#[command(name = "simtol", version, about = "Error-tolerant extraction, joins and search")]
struct Cli {
    /// Worker threads for probe and query phases.
    #[arg(long, global = true, env = "SIMTOL_THREADS", default_value_t = 1)]
    threads: usize,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use the brute-force reference instead of the engine.
    #[arg(long, global = true)]
    oracle: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimArg {
    Jac,
    Cos,
    Dice,
    Ed,
    Eds,
}

#[derive(Clone, Copy, ValueEnum)]
enum SetSimArg {
    Jac,
    Cos,
    Dice,
}

#[derive(Clone, Copy, ValueEnum)]
enum PruningArg {
    Lazy,
    Bucket,
    Batch,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Length,
    Shift,
    Position,
    Multimatch,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectionArg {
    Ones,
    Optimal,
    Greedy,
}

#[derive(Clone, Copy, ValueEnum)]
enum PivotArg {
    Random,
    Optimal,
}

#[derive(Subcommand)]
enum Command {
    /// Find dictionary entities approximately occurring in a document.
    Extract {
        #[arg(long)]
        dict: PathBuf,
        #[arg(long)]
        doc: PathBuf,
        #[arg(long, value_enum)]
        sim: SimArg,
        #[arg(long)]
        tau: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(short, default_value_t = 2)]
        q: usize,
        #[arg(long, value_enum, default_value = "batch")]
        pruning: PruningArg,
    },
    /// Pairs within edit distance tau.
    JoinEd {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        input2: Option<PathBuf>,
        #[arg(long)]
        tau: usize,
        #[arg(long, value_enum, default_value = "multimatch")]
        strategy: StrategyArg,
    },
    /// Pairs with edit similarity at least delta.
    JoinEds {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        delta: f64,
    },
    /// Set pairs with similarity at least delta.
    JoinSet {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        input2: Option<PathBuf>,
        #[arg(long, value_enum)]
        sim: SetSimArg,
        #[arg(long)]
        delta: f64,
        #[arg(long, value_enum, default_value = "greedy")]
        selection: SelectionArg,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
    /// Records within edit distance tau of each query.
    Search {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        tau_max: usize,
        #[arg(long)]
        tau: usize,
        #[arg(short, default_value_t = 2)]
        q: usize,
        #[arg(long, value_enum, default_value = "optimal")]
        pivots: PivotArg,
        #[arg(long)]
        no_align_filter: bool,
    },
}

type Rows = Vec<String>;

fn ratio(name: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 && x <= 1.0 {
        Ok(x)
    } else {
        Err(CliError::Param(format!("--{name} must lie in (0, 1], got {x}")))
    }
}

fn pair_rows<V: std::fmt::Display>(mut pairs: Vec<(usize, usize, V)>) -> Rows {
    pairs.sort_by_key(|p| (p.0, p.1));
    pairs.into_iter().map(|(a, b, v)| format!("{a}\t{b}\t{v}")).collect()
}

fn score(v: f64) -> SimValue {
    SimValue::Score(v)
}

fn extract(cli: &Cli, r: &mut RunReport) -> Result<Rows, CliError> {
    let Command::Extract { dict, doc, sim, tau, delta, q, pruning } = &cli.command else { unreachable!() };
    let func = match sim {
        SimArg::Jac => SimFn::Jac,
        SimArg::Cos => SimFn::Cos,
        SimArg::Dice => SimFn::Dice,
        SimArg::Ed => SimFn::Ed,
        SimArg::Eds => SimFn::Eds,
    };
    let threshold = match (func, tau, delta) {
        (SimFn::Ed, Some(t), None) => *t as f64,
        (SimFn::Ed, _, _) => return Err(CliError::Param("--sim ed takes --tau and no --delta".into())),
        (_, None, Some(d)) => ratio("delta", *d)?,
        _ => return Err(CliError::Param(format!("--sim {} takes --delta and no --tau", func.name()))),
    };
    let spec = SimilaritySpec::new(func, threshold, *q).map_err(|e| CliError::Param(e.to_string()))?;
    let (pruning, pruning_name) = match pruning {
        PruningArg::Lazy => (Pruning::Lazy, "lazy"),
        PruningArg::Bucket => (Pruning::Bucket, "bucket"),
        PruningArg::Batch => (Pruning::BatchBinary, "batch"),
    };
    r.param("sim", func);
    r.param("threshold", threshold);
    r.param("q", q);
    r.param("pruning", pruning_name);
    let entities = read_lines(dict)?;
    let document = read_document(doc)?;
    let mut matches = if cli.oracle {
        if let Err(ExtractError::EntityTooShort { id, reason }) = simtol::faerie::EntityIndex::build(&entities, spec) {
            return Err(at_line(dict, id, reason));
        }
        let m = oracle::brute_extract(&entities, &document, &spec);
        r.candidates = m.len();
        m
    } else {
        let out = extract_all(&entities, &document, spec, pruning).map_err(|e| match e {
            ExtractError::EntityTooShort { id, reason } => at_line(dict, id, reason),
        })?;
        r.candidates = out.counters.candidates;
        r.probed = out.counters.list_reads as u64;
        out.matches
    };
    matches.sort_by_key(|m| (m.entity, m.start, m.end));
    Ok(matches.into_iter().map(|m| format!("{}\t{}\t{}\t{}", m.entity, m.start, m.end, m.value)).collect())
}

fn join_ed(cli: &Cli, r: &mut RunReport) -> Result<Rows, CliError> {
    let Command::JoinEd { input, input2, tau, strategy } = &cli.command else { unreachable!() };
    let strategy = match strategy {
        StrategyArg::Length => Strategy::Length,
        StrategyArg::Shift => Strategy::Shift,
        StrategyArg::Position => Strategy::Position,
        StrategyArg::Multimatch => Strategy::MultiMatch,
    };
    r.param("tau", tau);
    r.param("strategy", format!("{strategy:?}").to_lowercase());
    let left = read_lines(input)?;
    let right = input2.as_deref().map(read_lines).transpose()?;
    if cli.oracle {
        let pairs = oracle::brute_join_ed(&left, right.as_deref(), *tau);
        r.candidates = match &right {
            Some(s) => left.len() * s.len(),
            None => left.len() * left.len().saturating_sub(1) / 2,
        };
        return Ok(pair_rows(pairs));
    }
    let opts = JoinOptions { strategy, shared_prefix: true };
    let out = match &right {
        Some(s) => join_ed_rs(&left, s, *tau, opts),
        None => join_ed_self(&left, *tau, opts),
    };
    r.candidates = out.counters.candidates;
    r.probed = out.counters.list_entries as u64;
    Ok(pair_rows(out.pairs.into_iter().map(|p| (p.a, p.b, p.value)).collect()))
}

fn join_eds_cmd(cli: &Cli, r: &mut RunReport) -> Result<Rows, CliError> {
    let Command::JoinEds { input, delta } = &cli.command else { unreachable!() };
    let delta = ratio("delta", *delta)?;
    r.param("delta", delta);
    let records = read_lines(input)?;
    if let Some(k) = records.iter().position(String::is_empty) {
        return Err(at_line(input, k + 1, "empty record"));
    }
    if cli.oracle {
        r.candidates = records.len() * records.len().saturating_sub(1) / 2;
        let pairs = oracle::brute_join_eds(&records, delta);
        return Ok(pair_rows(pairs.into_iter().map(|(a, b, v)| (a, b, score(v))).collect()));
    }
    let out = join_eds(&records, delta, JoinOptions::default()).map_err(|e| at_line(input, e.id, "empty record"))?;
    r.candidates = out.counters.candidates;
    r.probed = out.counters.list_entries as u64;
    Ok(pair_rows(out.pairs.into_iter().map(|p| (p.a, p.b, p.value)).collect()))
}

fn join_set(cli: &Cli, r: &mut RunReport) -> Result<Rows, CliError> {
    let Command::JoinSet { input, input2, sim, delta, selection, alpha } = &cli.command else { unreachable!() };
    let func = match sim {
        SetSimArg::Jac => SimFn::Jac,
        SetSimArg::Cos => SimFn::Cos,
        SetSimArg::Dice => SimFn::Dice,
    };
    let delta = ratio("delta", *delta)?;
    let selection = match selection {
        SelectionArg::Ones => Selection::AllOnes,
        SelectionArg::Optimal => Selection::Optimal,
        SelectionArg::Greedy => Selection::Greedy,
    };
    let opts = SetJoinOptions { selection, alpha: *alpha };
    r.param("sim", func);
    r.param("delta", delta);
    r.param("selection", format!("{selection:?}").to_lowercase());
    r.param("alpha", alpha);
    let left = read_sets(input)?;
    let right = input2.as_deref().map(read_sets).transpose()?;
    let spec = SimilaritySpec::new(func, delta, 1).map_err(|e| CliError::Param(e.to_string()))?;
    let run = |l: &[Vec<String>], s: Option<&[Vec<String>]>| match s {
        Some(s) => join_set_rs(l, s, spec, opts, &FnvScheme),
        None => join_set_self(l, spec, opts, &FnvScheme),
    };
    // parameter errors surface even for oracle runs
    let out = run(&left[..left.len().min(1)], right.as_deref().map(|s| &s[..s.len().min(1)]));
    if let Err(e) = out {
        return Err(set_error(e, input, input2.as_deref()));
    }
    if cli.oracle {
        r.candidates = match &right {
            Some(s) => left.len() * s.len(),
            None => left.len() * left.len().saturating_sub(1) / 2,
        };
        let pairs = oracle::brute_join_set(&left, right.as_deref(), func, delta);
        return Ok(pair_rows(pairs.into_iter().map(|(a, b, v)| (a, b, score(v))).collect()));
    }
    let out = run(&left, right.as_deref()).map_err(|e| set_error(e, input, input2.as_deref()))?;
    r.candidates = out.counters.candidates;
    r.probed = out.counters.probed;
    Ok(pair_rows(out.pairs.into_iter().map(|p| (p.a, p.b, p.value)).collect()))
}

fn set_error(e: SetJoinError, input: &Path, input2: Option<&Path>) -> CliError {
    match e {
        SetJoinError::EmptySet { id } => at_line(input2.unwrap_or(input), id, "empty set"),
        other => CliError::Param(other.to_string()),
    }
}

fn search(cli: &Cli, r: &mut RunReport) -> Result<Rows, CliError> {
    let Command::Search { data, queries, tau_max, tau, q, pivots, no_align_filter } = &cli.command else { unreachable!() };
    if tau > tau_max {
        return Err(CliError::Param(format!("--tau {tau} exceeds --tau-max {tau_max}")));
    }
    if *q == 0 {
        return Err(CliError::Param("-q must be at least 1".into()));
    }
    let mode = match pivots {
        PivotArg::Random => PivotMode::Random,
        PivotArg::Optimal => PivotMode::Optimal,
    };
    r.param("tau", tau);
    r.param("tau_max", tau_max);
    r.param("q", q);
    r.param("pivots", format!("{mode:?}").to_lowercase());
    r.param("align", !no_align_filter);
    let records = read_lines(data)?;
    let qs = read_lines(queries)?;
    if let Some(k) = records.iter().position(|x| x.chars().count() < *q) {
        return Err(at_line(data, k + 1, format!("record shorter than q = {q}")));
    }
    let mut rows: Vec<(usize, usize, usize)> = Vec::new();
    if cli.oracle {
        let found: Vec<Vec<(usize, usize)>> = qs.par_iter().map(|s| oracle::brute_search(&records, s, *tau)).collect();
        r.candidates = records.len() * qs.len();
        for (k, f) in found.into_iter().enumerate() {
            rows.extend(f.into_iter().map(|(id, d)| (k + 1, id, d)));
        }
    } else {
        let index = SearchIndex::build(&records, *q, *tau_max, mode).map_err(|e| match e {
            SearchError::ShortRecord { id, q } => at_line(data, id, format!("record shorter than q = {q}")),
            other => CliError::Param(other.to_string()),
        })?;
        let opts = SearchOptions { pivots: mode, align: !no_align_filter };
        let outs = index.search_many(&qs, *tau, opts).map_err(|e| CliError::Param(e.to_string()))?;
        for (k, o) in outs.into_iter().enumerate() {
            r.candidates += o.counters.candidates;
            r.probed += o.counters.probed as u64;
            rows.extend(o.results.into_iter().map(|(id, d)| (k + 1, id, d)));
        }
    }
    Ok(pair_rows(rows))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if cli.threads == 0 {
        return Err(CliError::Param("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| CliError::Param(e.to_string()))?;
    let name = match cli.command {
        Command::Extract { .. } => "extract",
        Command::JoinEd { .. } => "join-ed",
        Command::JoinEds { .. } => "join-eds",
        Command::JoinSet { .. } => "join-set",
        Command::Search { .. } => "search",
    };
    let mut report = RunReport::new(name);
    let start = Instant::now();
    let rows = match cli.command {
        Command::Extract { .. } => extract(cli, &mut report),
        Command::JoinEd { .. } => join_ed(cli, &mut report),
        Command::JoinEds { .. } => join_eds_cmd(cli, &mut report),
        Command::JoinSet { .. } => join_set(cli, &mut report),
        Command::Search { .. } => search(cli, &mut report),
    }?;
    report.elapsed = start.elapsed();
    report.results = rows.len();
    report.param("oracle", cli.oracle);
    report.param("threads", cli.threads);

    let sink: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(std::fs::File::create(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    for row in &rows {
        writeln!(w, "{row}").map_err(|e| CliError::Input(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Input(e.to_string()))?;
    eprintln!("{report}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
