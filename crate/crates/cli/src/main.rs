use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, LevelFilter};
use tagtopic::corpus::{DEFAULT_MAX_TAG_FREQ, DEFAULT_MIN_TAG_FREQ};
use tagtopic::eval::{parse_labels, write_report};
use tagtopic::{
    count_relevant_topk, effort_to_n, ingest_triples, rank_by_seed, read_ranking, sample_corpus,
    write_ranking, Corpus, LabelSet, Model, ModelKind, PlantedSpec, TrainConfig, Vocab,
};

/// Discover related web resources from social annotations.
#[derive(Parser)]
#[command(name = "tagtopic", version)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read raw triples, filter tags by frequency and write a corpus file.
    Ingest(IngestArgs),
    /// Fit a model to a corpus with EM.
    Train(TrainArgs),
    /// Rank resources by topic similarity to a seed resource.
    Rank(RankArgs),
    /// Score a ranking against relevance labels.
    Eval(EvalArgs),
    /// Draw a synthetic corpus from a planted model.
    Sample(SampleArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Tab-separated resource, user, tag[, count] lines.
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MIN_TAG_FREQ)]
    min_tag_freq: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_TAG_FREQ)]
    max_tag_freq: u64,
}

#[derive(Args)]
struct TrainArgs {
    corpus: PathBuf,
    /// plsa, mwa or itm.
    #[arg(long, default_value = "itm")]
    model: ModelKind,
    #[arg(long, default_value_t = 100)]
    topics: usize,
    /// User interests (itm only).
    #[arg(long, default_value_t = 20)]
    interests: usize,
    /// Relative log-likelihood change that counts as converged.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 2048)]
    memory_budget_mb: u64,
    #[arg(short, long)]
    output: PathBuf,
    /// Also write the per-iteration log-likelihood as TSV.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    model_file: PathBuf,
    /// The corpus the model was trained on.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    seed_resource: String,
    #[arg(short, long, default_value_t = 100)]
    k: usize,
    /// Defaults to standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    ranking: PathBuf,
    /// Tab-separated resource and label (same, link-to, unrelated).
    labels: PathBuf,
    #[arg(short, long, default_value_t = 100)]
    k: usize,
    #[arg(short, long, default_value_t = 10)]
    n: usize,
    /// Resolve names against this corpus instead of the ranking itself.
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    spec: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

/// Bad flag values discovered after parsing.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();

    let result = match cli.command {
        Command::Ingest(args) => ingest(args),
        Command::Train(args) => train(args),
        Command::Rank(args) => rank(args),
        Command::Eval(args) => eval(args),
        Command::Sample(args) => sample(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match e.chain().find_map(|c| c.downcast_ref::<tagtopic::Error>()) {
        Some(err) if err.is_numeric() => 3,
        _ => 2,
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    ingest_triples(open(path)?).with_context(|| format!("reading corpus {}", path.display()))
}

fn write_corpus(corpus: &Corpus, path: &Path) -> Result<()> {
    corpus.write_tsv(create(path)?)?;
    print!("{}", corpus.stats());
    Ok(())
}

fn ingest(args: IngestArgs) -> Result<()> {
    if args.min_tag_freq < 1 || args.min_tag_freq > args.max_tag_freq {
        return Err(UsageError("need 1 <= --min-tag-freq <= --max-tag-freq".into()).into());
    }
    let raw = load_corpus(&args.input)?;
    let corpus = raw.filter_tags(args.min_tag_freq, args.max_tag_freq)?;
    info!(
        "kept {} of {} tags, {} of {} annotations",
        corpus.num_tags(),
        raw.num_tags(),
        corpus.total(),
        raw.total()
    );
    write_corpus(&corpus, &args.output)
}

fn train(args: TrainArgs) -> Result<()> {
    let cfg = TrainConfig {
        topics: args.topics,
        interests: args.interests,
        tol: args.tol,
        max_iters: args.max_iters,
        seed: args.seed,
        workers: args.workers,
        memory_budget: args.memory_budget_mb.saturating_mul(1 << 20),
    };
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    let corpus = load_corpus(&args.corpus)?;
    let (model, report) = Model::train(args.model, &corpus, &cfg)?;
    for (iter, ll) in report.log_likelihoods.iter().enumerate() {
        info!("iteration {iter}: log-likelihood {ll}");
    }
    model.write_to(create(&args.output)?)?;
    if let Some(path) = &args.log {
        let mut w = create(path)?;
        writeln!(w, "# iteration\tlog_likelihood")?;
        for (iter, ll) in report.log_likelihoods.iter().enumerate() {
            writeln!(w, "{iter}\t{ll}")?;
        }
        w.flush()?;
    }
    println!(
        "{} iterations, {}, final log-likelihood {}",
        report.iterations(),
        if report.converged {
            "converged"
        } else {
            "not converged"
        },
        report.final_log_likelihood()
    );
    Ok(())
}

fn nearest_names<'a>(vocab: &'a Vocab, name: &str, count: usize) -> Vec<&'a str> {
    let mut scored: Vec<(f64, &str)> = vocab
        .iter()
        .map(|candidate| (strsim::normalized_levenshtein(name, candidate), candidate))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
    scored.into_iter().take(count).map(|(_, n)| n).collect()
}

fn rank(args: RankArgs) -> Result<()> {
    let text = fs::read_to_string(&args.model_file)
        .with_context(|| format!("cannot read {}", args.model_file.display()))?;
    let model = Model::from_text(&text)
        .with_context(|| format!("reading model {}", args.model_file.display()))?;
    let corpus = load_corpus(&args.corpus)?;
    model.check_dims(&corpus)?;
    let resources = corpus.resources();
    let Some(seed) = resources.get(&args.seed_resource) else {
        let near = nearest_names(resources, &args.seed_resource, 5);
        bail!(
            "unknown seed resource {:?}; closest matches: {}",
            args.seed_resource,
            near.join(", ")
        );
    };
    let list = rank_by_seed(&model.topic_distributions()?, seed)?;
    let name = |r: usize| resources.name(r).expect("ranked ids come from the corpus");
    let kind = model.kind().to_string();
    match &args.output {
        Some(path) => write_ranking(
            create(path)?,
            &list,
            &kind,
            model.topics(),
            &args.seed_resource,
            args.k,
            name,
        )?,
        None => write_ranking(
            io::stdout().lock(),
            &list,
            &kind,
            model.topics(),
            &args.seed_resource,
            args.k,
            name,
        )?,
    }
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let ranking = read_ranking(open(&args.ranking)?)
        .with_context(|| format!("reading ranking {}", args.ranking.display()))?;
    let named = parse_labels(open(&args.labels)?)
        .with_context(|| format!("reading labels {}", args.labels.display()))?;
    let vocab: Vocab = match &args.corpus {
        Some(path) => load_corpus(path)?.resources().clone(),
        None => ranking
            .header_value("seed")
            .into_iter()
            .chain(ranking.rows.iter().map(|(name, _)| name.as_str()))
            .chain(named.iter().map(|(name, _)| name.as_str()))
            .collect(),
    };
    let list = ranking.to_ranked_list(&vocab)?;
    let labels = LabelSet::resolve(&named, &vocab)?;
    let counts = count_relevant_topk(&list, &labels, args.k);
    let effort = effort_to_n(&list, &labels, args.n);
    let model = ranking.header_value("model").unwrap_or("unknown");
    write_report(io::stdout().lock(), model, args.k, counts, args.n, effort)?;
    Ok(())
}

fn sample(args: SampleArgs) -> Result<()> {
    let text = fs::read_to_string(&args.spec)
        .with_context(|| format!("cannot read {}", args.spec.display()))?;
    let spec = PlantedSpec::from_text(&text)
        .with_context(|| format!("reading spec {}", args.spec.display()))?;
    let corpus = sample_corpus(&spec)?;
    write_corpus(&corpus, &args.output)
}
