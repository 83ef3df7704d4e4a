use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use locent::entropy::{global_entropy, m_local_entropy, next_symbol_entropy, LogBase, DEFAULT_CONTEXT_BUDGET};
use locent::experiment::{
    paired_columns, read_records, run_grid, run_table1, summarize, write_records, ColumnSpec, GridProtocol,
    Table1Protocol,
};
use locent::generate::{random_dpfsa, GenConfig};
use locent::matrices::TransitionMatrices;
use locent::ngram::{heldout_cross_entropy, plugin_m_local_entropy, Smoothing, SmoothedModel};
use locent::perturb::{Family, Perturbation, PerturbationSpec};
use locent::sample::{sample_corpus, split_corpus, Corpus, CorpusMetadata};
use locent::Pfsa;

const SIDECAR_VERSION: u32 = 1;

/// Exact and estimated local entropy of probabilistic automata and corpora.
#[derive(Debug, Parser)]
#[command(name = "locent", version)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "LOCENT_THREADS")]
    threads: Option<usize>,

    /// Where to write the run's resolved configuration. Defaults to
    /// `<output>.run.json`, or `./<subcommand>.run.json` for stdout output.
    #[arg(long, global = true)]
    sidecar: Option<PathBuf>,

    /// Do not write a configuration sidecar.
    #[arg(long, global = true)]
    no_sidecar: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
enum Command {
    /// Generate a random deterministic PFSA.
    GenPfsa(GenPfsaArgs),
    /// Check an automaton's normalization; exits 2 on violations.
    Validate(ValidateArgs),
    /// Sample a corpus from an automaton.
    Sample(SampleArgs),
    /// Apply a perturbation to every line of a corpus.
    Perturb(PerturbArgs),
    /// Exact entropies of an automaton or plug-in estimates from a corpus.
    Entropy(EntropyArgs),
    /// Plug-in m-local entropy of a corpus.
    EntropyEst(EntropyEstArgs),
    /// Train a smoothed n-gram model.
    Learn(LearnArgs),
    /// Per-symbol held-out cross-entropy of a corpus under a model.
    Score(ScoreArgs),
    /// Experiments.
    #[command(subcommand)]
    Exp(ExpCommand),
    /// Re-run a command from its sidecar.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
enum ExpCommand {
    /// Validate the plug-in estimator against exact m-local entropy.
    Table1(Table1Args),
    /// Relate exact m-local entropy to learner KL over generated automata.
    Grid(GridArgs),
    /// Correlation and line fit between two record columns.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct GenPfsaArgs {
    #[arg(long, default_value_t = 8)]
    states: usize,
    #[arg(long, default_value_t = 32)]
    alphabet: usize,
    #[arg(long, default_value_t = 20.0)]
    mean_length: f64,
    #[arg(long, default_value_t = 0)]
    topology_seed: u64,
    #[arg(long, default_value_t = 0)]
    weight_seed: u64,
    #[arg(long, default_value_t = 2)]
    min_symbols: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct ValidateArgs {
    input: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct SampleArgs {
    #[arg(long)]
    pfsa: PathBuf,
    #[arg(short, long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated split sizes; writes one file per split next to the
    /// output, e.g. `out.train.txt`.
    #[arg(long, value_delimiter = ',')]
    splits: Option<Vec<usize>>,
    /// Rescale near-normalized weights before use.
    #[arg(long)]
    renormalize: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct PerturbArgs {
    #[arg(long)]
    family: Family,
    /// Window size for `klocal`.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct EntropyArgs {
    /// Closed-form value from an automaton file.
    #[arg(long, conflicts_with = "plugin", required_unless_present = "plugin")]
    exact: bool,
    /// Plug-in estimate from a corpus file.
    #[arg(long)]
    plugin: bool,
    /// Context order; the context has m - 1 symbols.
    #[arg(long)]
    m: Option<usize>,
    /// Next-symbol entropy (exact only).
    #[arg(long, conflicts_with_all = ["m", "global"])]
    next: bool,
    /// Entropy of whole strings (exact only).
    #[arg(long, conflicts_with = "m")]
    global: bool,
    #[arg(long)]
    base: LogBase,
    #[arg(long, default_value_t = DEFAULT_CONTEXT_BUDGET as u64)]
    budget: u64,
    #[arg(long)]
    renormalize: bool,
    input: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct EntropyEstArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    base: LogBase,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct LearnArgs {
    #[arg(long)]
    m: usize,
    /// `absdisc[:d]`, `addk[:k]` or `mle`.
    #[arg(long, default_value = "absdisc:0.75")]
    smoothing: Smoothing,
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long)]
    base: LogBase,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct Table1Args {
    /// Protocol JSON; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for `table1.csv` and `table1_measurements.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct GridArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct StatsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// e.g. `mlocal:3`, `estimated:3`.
    #[arg(long)]
    x: String,
    /// e.g. `kl`, `ce`, `next`.
    #[arg(long)]
    y: String,
    /// Also report each grid cell separately.
    #[arg(long)]
    by_cell: bool,
    #[arg(long, default_value_t = 1000)]
    shuffles: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct ReplayArgs {
    sidecar: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    version: u32,
    locent_version: String,
    cwd: PathBuf,
    threads: Option<usize>,
    command: Command,
    /// Resolved experiment protocol, for reference; replay re-reads the
    /// command only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    protocol: Option<serde_json::Value>,
}

enum Failure {
    Usage(String),
    Data(locent::Error),
}

impl From<locent::Error> for Failure {
    fn from(e: locent::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.into())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> CliResult {
    if let Command::Replay(args) = &cli.command {
        let text = std::fs::read_to_string(&args.sidecar)?;
        let sidecar: Sidecar = serde_json::from_str(&text).map_err(locent::Error::from)?;
        if sidecar.version != SIDECAR_VERSION {
            return Err(locent::Error::UnsupportedVersion {
                found: sidecar.version,
                expected: SIDECAR_VERSION,
            }
            .into());
        }
        set_threads(cli.threads.or(sidecar.threads))?;
        std::env::set_current_dir(&sidecar.cwd)?;
        return run(&sidecar.command);
    }
    set_threads(cli.threads)?;
    if !cli.no_sidecar {
        let path = cli
            .sidecar
            .clone()
            .unwrap_or_else(|| default_sidecar_path(&cli.command));
        let sidecar = Sidecar {
            version: SIDECAR_VERSION,
            locent_version: env!("CARGO_PKG_VERSION").to_string(),
            cwd: std::env::current_dir()?,
            threads: cli.threads,
            protocol: resolved_protocol(&cli.command)?,
            command: cli.command.clone(),
        };
        let json = serde_json::to_string_pretty(&sidecar).map_err(locent::Error::from)?;
        std::fs::write(path, json + "\n")?;
    }
    run(&cli.command)
}

fn set_threads(threads: Option<usize>) -> CliResult {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn default_sidecar_path(command: &Command) -> PathBuf {
    let output = match command {
        Command::GenPfsa(a) => a.output.clone(),
        Command::Sample(a) => a.output.clone(),
        Command::Perturb(a) => a.output.clone(),
        Command::Learn(a) => Some(a.output.clone()),
        Command::Exp(ExpCommand::Table1(a)) => return a.out.join("table1.run.json"),
        Command::Exp(ExpCommand::Grid(a)) => a.out.clone(),
        _ => None,
    };
    match output {
        Some(path) => with_suffix(&path, ".run.json"),
        None => PathBuf::from(format!("{}.run.json", command_name(command))),
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::GenPfsa(_) => "gen-pfsa",
        Command::Validate(_) => "validate",
        Command::Sample(_) => "sample",
        Command::Perturb(_) => "perturb",
        Command::Entropy(_) => "entropy",
        Command::EntropyEst(_) => "entropy-est",
        Command::Learn(_) => "learn",
        Command::Score(_) => "score",
        Command::Exp(ExpCommand::Table1(_)) => "exp-table1",
        Command::Exp(ExpCommand::Grid(_)) => "exp-grid",
        Command::Exp(ExpCommand::Stats(_)) => "exp-stats",
        Command::Replay(_) => "replay",
    }
}

fn resolved_protocol(command: &Command) -> CliResult<Option<serde_json::Value>> {
    let value = match command {
        Command::Exp(ExpCommand::Table1(a)) => serde_json::to_value(table1_protocol(a)?),
        Command::Exp(ExpCommand::Grid(a)) => serde_json::to_value(grid_protocol(a)?),
        _ => return Ok(None),
    };
    Ok(Some(value.map_err(locent::Error::from)?))
}

fn table1_protocol(args: &Table1Args) -> CliResult<Table1Protocol> {
    Ok(match &args.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?).map_err(locent::Error::from)?,
        None => Table1Protocol::default(),
    })
}

fn grid_protocol(args: &GridArgs) -> CliResult<GridProtocol> {
    Ok(match &args.config {
        Some(path) => GridProtocol::from_json(&std::fs::read_to_string(path)?)?,
        None => GridProtocol::default(),
    })
}

/// Writes to the path, or to stdout when there is none.
fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn number(x: f64) -> String {
    format!("{x:.8e}")
}

fn run(command: &Command) -> CliResult {
    match command {
        Command::GenPfsa(a) => {
            let pfsa = random_dpfsa(&GenConfig {
                num_states: a.states,
                alphabet_size: a.alphabet,
                target_mean_length: a.mean_length,
                topology_seed: a.topology_seed,
                weight_seed: a.weight_seed,
                min_symbols_per_state: a.min_symbols,
            })?;
            let mut out = output(a.output.as_deref())?;
            writeln!(out, "{}", pfsa.to_json())?;
            out.flush()?;
        }
        Command::Validate(a) => {
            let text = std::fs::read_to_string(&a.input)?;
            let doc = serde_json::from_str(&text).map_err(locent::Error::from)?;
            let pfsa = Pfsa::from_document(doc)?;
            let violations = pfsa.validate();
            if violations.is_empty() {
                println!("valid");
            } else {
                for v in &violations {
                    println!("{v}");
                }
                return Err(locent::Error::InvalidAutomaton(format!(
                    "{} violation(s)",
                    violations.len()
                ))
                .into());
            }
        }
        Command::Sample(a) => {
            let pfsa = Pfsa::load(&a.pfsa, a.renormalize)?;
            let corpus = sample_corpus(&pfsa, a.n, a.seed)?;
            match (&a.splits, &a.output) {
                (Some(sizes), Some(path)) => {
                    let parts = split_corpus(&corpus, sizes)?;
                    corpus.save(path)?;
                    for part in &parts {
                        let label = part.metadata.split.as_deref().unwrap_or("part");
                        part.save(&split_path(path, label))?;
                    }
                }
                (Some(_), None) => return Err(Failure::Usage("--splits needs -o".into())),
                (None, Some(path)) => corpus.save(path)?,
                (None, None) => {
                    let mut out = output(None)?;
                    out.write_all(corpus.to_text().as_bytes())?;
                    out.flush()?;
                }
            }
        }
        Command::Perturb(a) => perturb(a)?,
        Command::Entropy(a) => entropy(a)?,
        Command::EntropyEst(a) => {
            let corpus = Corpus::load(&a.input)?;
            println!("{}", number(plugin_m_local_entropy(&corpus, a.m, a.base)?.value));
        }
        Command::Learn(a) => {
            let corpus = Corpus::load(&a.input)?;
            SmoothedModel::train(&corpus, a.m, a.smoothing)?.save(&a.output)?;
        }
        Command::Score(a) => {
            let model = SmoothedModel::load(&a.model)?;
            let corpus = Corpus::load(&a.input)?;
            println!("{}", number(heldout_cross_entropy(&model, &corpus, a.base)?));
        }
        Command::Exp(ExpCommand::Table1(a)) => {
            let protocol = table1_protocol(a)?;
            std::fs::create_dir_all(&a.out)?;
            let result = run_table1(&protocol)?;
            let mut rows = output(Some(&a.out.join("table1.csv")))?;
            result.write_rows(&mut rows)?;
            rows.flush()?;
            let mut all = output(Some(&a.out.join("table1_measurements.csv")))?;
            result.write_measurements(&mut all)?;
            all.flush()?;
        }
        Command::Exp(ExpCommand::Grid(a)) => {
            let records = run_grid(&grid_protocol(a)?)?;
            let mut out = output(a.out.as_deref())?;
            write_records(&records, &mut out)?;
            out.flush()?;
        }
        Command::Exp(ExpCommand::Stats(a)) => stats(a)?,
        Command::Replay(_) => return Err(Failure::Usage("replay cannot be replayed".into())),
    }
    Ok(())
}

fn split_path(path: &Path, label: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{label}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{label}"),
    };
    path.with_file_name(name)
}

/// Works on whitespace-separated tokens, so natural-language corpora are
/// handled as well as integer ones.
fn perturb(a: &PerturbArgs) -> CliResult {
    let spec = PerturbationSpec {
        family: a.family,
        seed: a.seed,
        k: a.k,
    };
    let p = Perturbation::new(spec.clone())?;
    let text = std::fs::read_to_string(&a.input)?;
    let mut out = output(a.output.as_deref())?;
    for line in text.lines() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        writeln!(out, "{}", p.apply(&tokens).join(" "))?;
    }
    out.flush()?;
    let meta_in = Corpus::metadata_path(&a.input);
    if let (Some(path), true) = (&a.output, meta_in.exists()) {
        let mut meta: CorpusMetadata =
            serde_json::from_str(&std::fs::read_to_string(meta_in)?).map_err(locent::Error::from)?;
        meta.perturbations.push(spec.to_string());
        let json = serde_json::to_string_pretty(&meta).map_err(locent::Error::from)?;
        std::fs::write(Corpus::metadata_path(path), json + "\n")?;
    }
    Ok(())
}

fn entropy(a: &EntropyArgs) -> CliResult {
    if a.plugin {
        if a.next || a.global {
            return Err(Failure::Usage("--next and --global need --exact".into()));
        }
        let m = a.m.ok_or_else(|| Failure::Usage("--plugin needs --m".into()))?;
        let corpus = Corpus::load(&a.input)?;
        println!("{}", number(plugin_m_local_entropy(&corpus, m, a.base)?.value));
        return Ok(());
    }
    let pfsa = Pfsa::load(&a.input, a.renormalize)?;
    let mats = TransitionMatrices::new(&pfsa)?;
    let report = match (a.m, a.next, a.global) {
        (Some(m), false, false) => m_local_entropy(&pfsa, &mats, m, a.budget.into())?,
        (None, true, false) => next_symbol_entropy(&pfsa, &mats)?,
        (None, false, true) => global_entropy(&pfsa, &mats)?,
        _ => return Err(Failure::Usage("choose one of --m, --next or --global".into())),
    };
    println!("{}", number(report.in_base(a.base).value));
    Ok(())
}

fn stats(a: &StatsArgs) -> CliResult {
    let x: ColumnSpec = a.x.parse().map_err(|e: locent::Error| Failure::Usage(e.to_string()))?;
    let y: ColumnSpec = a.y.parse().map_err(|e: locent::Error| Failure::Usage(e.to_string()))?;
    let records = read_records(&mut File::open(&a.input)?)?;
    let pairs = paired_columns(&records, x, y);
    let mut groups: Vec<(String, Vec<(f64, f64)>)> = vec![(
        "all".into(),
        pairs.iter().map(|p| (p.1, p.2)).collect(),
    )];
    if a.by_cell {
        for (cell, xv, yv) in &pairs {
            match groups.iter_mut().skip(1).find(|g| &g.0 == cell) {
                Some(g) => g.1.push((*xv, *yv)),
                None => groups.push((cell.clone(), vec![(*xv, *yv)])),
            }
        }
    }
    println!("group\tn\tr\tslope\tintercept\tr_squared\tp_value");
    for (name, points) in &groups {
        let s = summarize(name, points, a.shuffles, a.seed)?;
        let p = s.permutation.map_or("nan".to_string(), |t| number(t.p_value));
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            s.group,
            s.points,
            number(s.r),
            number(s.fit.slope),
            number(s.fit.intercept),
            number(s.fit.r_squared),
            p
        );
    }
    Ok(())
}
