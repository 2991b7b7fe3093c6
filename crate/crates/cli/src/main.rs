//! `ctxbandit`: generate the synthetic article dataset, ingest MovieLens-100K,
//! and run or compare the reward predictors under the prequential protocol.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
//! failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ctxbandit::datagen::{self, GeneratorConfig};
use ctxbandit::eval::{
    self, compare_protocol, run_algorithm, summarize, AccuracyRule, Algorithm, Dataset,
    ProtocolConfig, DEFAULT_ROUNDS, DEFAULT_ROUND_SIZE, DEFAULT_WINDOW,
};
use ctxbandit::learners::{SgdParams, DEFAULT_L2_STRENGTH, DEFAULT_LEARNING_RATE};
use ctxbandit::movielens::{self, ContextField};
use ctxbandit::schema::ContextSchema;
use ctxbandit::{Error, ErrorClass, Result};
use log::info;

const SYNTHETIC_TRAIN: usize = 500;
const MOVIELENS_TRAIN: usize = 1000;
const MOVIELENS_WARMUP: usize = 500;
const MOVIELENS_LIMIT: usize = 2500;

#[derive(Parser)]
#[command(
    name = "ctxbandit",
    version,
    about = "Contextual-bandit reward prediction experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the seeded article-click dataset as CSV.
    Gen(GenArgs),
    /// Run one algorithm on an article CSV.
    Run(RunArgs),
    /// Run one algorithm on the genre-exploded MovieLens-100K stream.
    Movielens(MovielensArgs),
    /// Run all algorithms on the same data and tabulate them side by side.
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Row count [default: 5000, or the config file's `rows`].
    #[arg(long)]
    rows: Option<usize>,
    /// Seed [default: 7, or the config file's `seed`].
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Regime table file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ProtocolArgs {
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// SGD learning rate.
    #[arg(long, default_value_t = DEFAULT_LEARNING_RATE)]
    eta: f64,
    /// SGD L2 strength.
    #[arg(long, default_value_t = DEFAULT_L2_STRENGTH)]
    alpha: f64,
    /// A rating counts as correct when the rounded prediction is within this many stars.
    #[arg(long, default_value_t = 0.0)]
    rating_tolerance: f64,
    #[arg(long, default_value_t = DEFAULT_ROUND_SIZE)]
    round_size: usize,
    #[arg(long, default_value_t = DEFAULT_ROUNDS)]
    rounds: usize,
}

impl ProtocolArgs {
    fn config(&self, train_n: usize) -> Result<ProtocolConfig> {
        let sgd = SgdParams {
            learning_rate: self.eta,
            l2_strength: self.alpha,
        };
        sgd.validate()?;
        if self.window == 0 {
            return Err(Error::Config("--window must be at least 1".into()));
        }
        if !(self.rating_tolerance.is_finite() && self.rating_tolerance >= 0.0) {
            return Err(Error::Config(
                "--rating-tolerance must be a non-negative number".into(),
            ));
        }
        if self.round_size == 0 || self.rounds == 0 {
            return Err(Error::Config(
                "--round-size and --rounds must be at least 1".into(),
            ));
        }
        Ok(ProtocolConfig {
            train_n,
            window_size: self.window,
            rule: AccuracyRule {
                rating_tolerance: self.rating_tolerance,
            },
            round_size: self.round_size,
            rounds: self.rounds,
            sgd,
            ..ProtocolConfig::default()
        })
    }
}

#[derive(Args)]
struct RunArgs {
    /// static-tree, static-ols, online-sgd or bandit-array.
    #[arg(long)]
    algo: String,
    #[arg(long)]
    data: PathBuf,
    /// Records used for training before prediction starts (warmup for the
    /// online learners, fit set for the static ones).
    #[arg(long, visible_alias = "train", default_value_t = SYNTHETIC_TRAIN)]
    warmup: usize,
    /// Evaluate at most this many records after the warmup.
    #[arg(long)]
    limit: Option<usize>,
    /// Context schema file replacing the built-in `age`/`gender` schema.
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[command(flatten)]
    protocol: ProtocolArgs,
}

#[derive(Args)]
struct MovielensFiles {
    /// Directory holding `u.user`, `u.item` and `u.data`.
    #[arg(long)]
    dir: Option<PathBuf>,
    #[arg(long)]
    users: Option<PathBuf>,
    #[arg(long)]
    items: Option<PathBuf>,
    #[arg(long)]
    ratings: Option<PathBuf>,
    /// Comma-separated user fields forming the context: age, sex, zip, occupation.
    #[arg(long, value_delimiter = ',', default_value = "age,sex,zip")]
    context_fields: Vec<String>,
    /// Also write the exploded stream as `age,sex,zip,genre,rating` CSV.
    #[arg(long)]
    export: Option<PathBuf>,
}

impl MovielensFiles {
    fn paths(&self) -> Result<[PathBuf; 3]> {
        let base = self.dir.as_deref().map(movielens::dataset_paths);
        let pick = |given: &Option<PathBuf>, i: usize, name: &str| {
            given
                .clone()
                .or_else(|| base.as_ref().map(|b| b[i].clone()))
                .ok_or_else(|| Error::Config(format!("pass --dir or --{name}")))
        };
        Ok([
            pick(&self.users, 0, "users")?,
            pick(&self.items, 1, "items")?,
            pick(&self.ratings, 2, "ratings")?,
        ])
    }

    fn fields(&self) -> Result<Vec<ContextField>> {
        if self.context_fields.is_empty() {
            return Err(Error::Config(
                "--context-fields needs at least one field".into(),
            ));
        }
        self.context_fields
            .iter()
            .map(|f| f.trim().parse())
            .collect()
    }

    fn load(&self) -> Result<Dataset> {
        let fields = self.fields()?;
        let [users, items, ratings] = self.paths()?;
        let table = movielens::load(&users, &items, &ratings)?;
        println!(
            "joined {} ratings ({} dropped)",
            table.rows.len(),
            table.dropped
        );
        if let Some(path) = &self.export {
            write_file(path, &movielens::exploded_csv(&table))?;
        }
        movielens::build_dataset(&table, &fields)
    }
}

#[derive(Args)]
struct MovielensArgs {
    #[command(flatten)]
    files: MovielensFiles,
    #[arg(long, default_value = "bandit-array")]
    algo: String,
    #[arg(long, visible_alias = "train", default_value_t = MOVIELENS_WARMUP)]
    warmup: usize,
    /// Exploded records evaluated after the warmup.
    #[arg(long, default_value_t = MOVIELENS_LIMIT, conflicts_with = "all")]
    limit: usize,
    /// Evaluate the whole stream instead of `--limit` records.
    #[arg(long)]
    all: bool,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[command(flatten)]
    protocol: ProtocolArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// Article CSV. Mutually exclusive with the MovieLens inputs.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Compare on MovieLens using the `--dir`/`--users`/... inputs.
    #[arg(long)]
    movielens: bool,
    #[command(flatten)]
    files: MovielensFiles,
    /// Training prefix [default: 500 for article data, 1000 for MovieLens].
    #[arg(long)]
    train: Option<usize>,
    /// Comma-separated algorithms [default: all four].
    #[arg(long, value_delimiter = ',')]
    algos: Vec<String>,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[command(flatten)]
    protocol: ProtocolArgs,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })
}

fn article_data(path: &Path, schema: Option<&Path>) -> Result<Dataset> {
    let mut ds = datagen::article_dataset(datagen::read_csv(path)?);
    if let Some(schema_path) = schema {
        let text = fs::read_to_string(schema_path).map_err(|e| Error::Io {
            path: schema_path.to_owned(),
            source: e,
        })?;
        ds.schema = ContextSchema::from_text(&text, schema_path)?;
    }
    Ok(ds)
}

fn limit_records(ds: &mut Dataset, warmup: usize, limit: Option<usize>) {
    if let Some(limit) = limit {
        ds.records.truncate(warmup.saturating_add(limit));
    }
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            GeneratorConfig::from_text(&text, path)?
        }
        None => GeneratorConfig::default(),
    };
    if let Some(rows) = args.rows {
        config.n_rows = rows;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate()?;
    let records = datagen::generate(&config)?;
    datagen::write_csv(&records, &args.out)?;
    println!("wrote {} rows to {}", records.len(), args.out.display());
    Ok(())
}

fn run_single(ds: &Dataset, algo: &str, config: &ProtocolConfig, out: &Path) -> Result<()> {
    let algorithm: Algorithm = algo.parse()?;
    let log = run_algorithm(ds, algorithm, config)?;
    let result = summarize(algorithm, log, config)?;
    for path in eval::emit_report(&result, out)? {
        info!("wrote {}", path.display());
    }
    print!("{}", eval::report::summary_text(&[&result]));
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let config = args.protocol.config(args.warmup)?;
    let _: Algorithm = args.algo.parse()?;
    let mut ds = article_data(&args.data, args.schema.as_deref())?;
    limit_records(&mut ds, args.warmup, args.limit);
    run_single(&ds, &args.algo, &config, &args.out)
}

fn cmd_movielens(args: MovielensArgs) -> Result<()> {
    let config = args.protocol.config(args.warmup)?;
    let _: Algorithm = args.algo.parse()?;
    args.files.fields()?;
    let mut ds = args.files.load()?;
    limit_records(&mut ds, args.warmup, (!args.all).then_some(args.limit));
    run_single(&ds, &args.algo, &config, &args.out)
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let algorithms: Vec<Algorithm> = if args.algos.is_empty() {
        Algorithm::ALL.to_vec()
    } else {
        args.algos
            .iter()
            .map(|a| a.trim().parse())
            .collect::<Result<_>>()?
    };
    let (ds, config) = match (&args.data, args.movielens) {
        (Some(_), true) => {
            return Err(Error::Config(
                "--data and --movielens are mutually exclusive".into(),
            ))
        }
        (None, false) => return Err(Error::Config("pass --data or --movielens".into())),
        (Some(path), false) => {
            let config = args
                .protocol
                .config(args.train.unwrap_or(SYNTHETIC_TRAIN))?;
            (article_data(path, args.schema.as_deref())?, config)
        }
        (None, true) => {
            let config = args
                .protocol
                .config(args.train.unwrap_or(MOVIELENS_TRAIN))?;
            args.files.fields()?;
            (args.files.load()?, config)
        }
    };
    let cmp = compare_protocol(&ds, &algorithms, &config)?;
    for path in eval::emit_comparison(&cmp, &args.out)? {
        info!("wrote {}", path.display());
    }
    print!("{}", eval::report::comparison_csv(&cmp));
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numeric => 4,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a),
        Command::Movielens(a) => cmd_movielens(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
