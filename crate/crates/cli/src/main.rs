use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};
use tweetguard::biaser::{load_bias_corpus, train_bias_model, BiasConfig, BiasModel};
use tweetguard::classifiers::write_training_log;
use tweetguard::corpus::{convert_csv, load_dataset, preprocess_text, SCHEMA_V1};
use tweetguard::embeddings::{load_embeddings, EmbeddingStore};
use tweetguard::factver::{factver_score, TrustedIndex, DEFAULT_K};
use tweetguard::features::{feature_label_correlation, write_feature_rows};
use tweetguard::harness::{
    dataset_features, evaluate_bundle, read_reports, render_table, run_experiment, seed_sweep, write_reports,
    ExperimentConfig,
};
use tweetguard::pipeline::{ClassifyRequest, PipelineBundle, Resources};
use tweetguard::{synthetic, Family, Lang, UserProfile};
use tweetguard_server::{serve, AppState, ProviderConfig, ServerConfig};

#[derive(Parser)]
#[command(name = "tweetguard", version, about = "Multilingual fake-tweet detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert or validate datasets.
    #[command(subcommand)]
    Ingest(Ingest),
    /// Write the synthetic trilingual fixtures.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Export the feature matrix of a dataset.
    Features(FeaturesArgs),
    /// Fact-verification score of a text or of every record of a dataset.
    Factver {
        #[arg(long, env = "TWEETGUARD_TRUSTED_INDEX")]
        index: PathBuf,
        #[arg(long, env = "TWEETGUARD_ALLOWLIST")]
        allowlist: PathBuf,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        #[arg(long, conflicts_with = "data", required_unless_present = "data")]
        text: Option<String>,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Train or apply the offensive-language bias model.
    #[command(subcommand)]
    Bias(Bias),
    /// Run one experiment and save the trained bundle.
    Train(TrainArgs),
    /// Score a saved bundle on a dataset.
    Evaluate {
        #[arg(long, env = "TWEETGUARD_BUNDLE")]
        bundle: PathBuf,
        #[arg(long, env = "TWEETGUARD_DATA")]
        data: PathBuf,
        #[command(flatten)]
        resources: ResourceArgs,
    },
    /// Repeat an experiment over several seeds.
    Sweep {
        #[arg(long, env = "TWEETGUARD_CONFIG")]
        config: PathBuf,
        #[arg(long, env = "TWEETGUARD_DATA")]
        data: PathBuf,
        #[command(flatten)]
        resources: ResourceArgs,
        /// Overrides `sweep_seeds` from the config.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long)]
        reports: Option<PathBuf>,
    },
    /// Render saved reports as a table.
    Report {
        #[arg(long)]
        reports: PathBuf,
        /// Append the published reference rows.
        #[arg(long)]
        reference: bool,
    },
    /// Classify one text with a saved bundle.
    Predict {
        #[command(flatten)]
        service: ServiceArgs,
        #[arg(long)]
        text: String,
        /// JSON file holding the author's profile.
        #[arg(long)]
        user: Option<PathBuf>,
        #[arg(long)]
        lang: Option<Lang>,
        #[arg(long)]
        retweet_count: Option<u64>,
        #[arg(long)]
        favourite_count: Option<u64>,
    },
    /// Run the prediction service.
    Serve {
        #[command(flatten)]
        service: ServiceArgs,
        #[arg(long, env = "TWEETGUARD_BIND")]
        bind: Option<String>,
        #[arg(long, env = "TWEETGUARD_STATIC_DIR")]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Ingest {
    /// Convert the released CSV layout to a dataset file.
    Convert {
        #[arg(long)]
        csv: PathBuf,
        /// Language for rows without a `lang` column.
        #[arg(long)]
        lang: Option<Lang>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a dataset file and print its language/label counts.
    Validate {
        #[arg(long, env = "TWEETGUARD_DATA")]
        data: PathBuf,
    },
}

#[derive(Subcommand)]
enum Bias {
    Train {
        /// Line-delimited `{text, offensive}` examples.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Score {
        #[arg(long, env = "TWEETGUARD_BIAS_MODEL")]
        model: PathBuf,
        #[arg(long, conflicts_with = "data", required_unless_present = "data")]
        text: Option<String>,
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long, env = "TWEETGUARD_DATA")]
    data: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    families: Vec<Family>,
    #[command(flatten)]
    resources: ResourceArgs,
    #[arg(long, default_value = "2021-01-01T00:00:00Z")]
    as_of: DateTime<Utc>,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Line-delimited `{id, layout_hash, values}` rows.
    #[arg(long)]
    out: PathBuf,
    /// Feature/label correlation table; printed when no path is given.
    #[arg(long)]
    correlation: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, env = "TWEETGUARD_CONFIG")]
    config: PathBuf,
    #[arg(long, env = "TWEETGUARD_DATA")]
    data: PathBuf,
    #[command(flatten)]
    resources: ResourceArgs,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Per-epoch training loss, line-delimited.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args, Default)]
struct ResourceArgs {
    #[arg(long, env = "TWEETGUARD_EMBEDDINGS")]
    embeddings: Option<PathBuf>,
    #[arg(long = "index", env = "TWEETGUARD_TRUSTED_INDEX")]
    trusted_index: Option<PathBuf>,
    #[arg(long, env = "TWEETGUARD_ALLOWLIST")]
    allowlist: Option<PathBuf>,
    #[arg(long, env = "TWEETGUARD_BIAS_MODEL")]
    bias_model: Option<PathBuf>,
}

struct Loaded {
    embeddings: Option<EmbeddingStore>,
    trusted: Option<TrustedIndex>,
    bias: Option<BiasModel>,
}

impl Loaded {
    fn resources(&self) -> Resources<'_> {
        Resources { embeddings: self.embeddings.as_ref(), trusted: self.trusted.as_ref(), bias: self.bias.as_ref() }
    }
}

impl ResourceArgs {
    fn load(&self) -> Result<Loaded> {
        let embeddings = self.embeddings.as_ref().map(load_embeddings).transpose()?;
        let trusted = match (&self.trusted_index, &self.allowlist) {
            (Some(i), Some(a)) => {
                let (idx, stats) = TrustedIndex::load(i, a)?;
                tracing::info!(
                    kept = stats.kept,
                    off_allowlist = stats.off_allowlist,
                    empty_title = stats.empty_title,
                    "trusted index loaded"
                );
                Some(idx)
            }
            (None, None) => None,
            _ => bail!("--index and --allowlist go together"),
        };
        let bias = self.bias_model.as_ref().map(BiasModel::load).transpose()?;
        Ok(Loaded { embeddings, trusted, bias })
    }
}

/// Service settings: a TOML file overridden by flags and environment.
#[derive(Args)]
struct ServiceArgs {
    #[arg(long, env = "TWEETGUARD_SERVE_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, env = "TWEETGUARD_BUNDLE")]
    bundle: Option<PathBuf>,
    #[command(flatten)]
    resources: ResourceArgs,
    /// Dataset whose texts become lookup keys into the embeddings.
    #[arg(long, env = "TWEETGUARD_DATASET")]
    dataset: Option<PathBuf>,
    /// Embedding provider base address.
    #[arg(long, env = "TWEETGUARD_PROVIDER_URL")]
    provider: Option<String>,
}

impl ServiceArgs {
    fn to_config(&self) -> Result<ServerConfig> {
        let mut cfg = match &self.config {
            Some(p) => ServerConfig::load(p)?,
            None => ServerConfig::default(),
        };
        let r = &self.resources;
        override_with(&mut cfg.bundle, &self.bundle);
        override_with(&mut cfg.embeddings, &r.embeddings);
        override_with(&mut cfg.dataset, &self.dataset);
        override_with(&mut cfg.trusted_index, &r.trusted_index);
        override_with(&mut cfg.allowlist, &r.allowlist);
        override_with(&mut cfg.bias_model, &r.bias_model);
        if let Some(url) = &self.provider {
            cfg.provider = Some(ProviderConfig {
                url: url.clone(),
                ..cfg.provider.take().unwrap_or_else(|| ProviderConfig::new(url))
            });
        }
        Ok(cfg)
    }
}

fn override_with<T: Clone>(slot: &mut Option<T>, value: &Option<T>) {
    if value.is_some() {
        slot.clone_from(value);
    }
}

fn parent_dir(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    parent_dir(path)?;
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("TWEETGUARD_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info,tower_http=info")),
        )
        .with_writer(io::stderr)
        .json()
        .init();
    match Cli::parse().command {
        Command::Ingest(Ingest::Convert { csv, lang, out }) => {
            let file = File::open(&csv).with_context(|| format!("opening {}", csv.display()))?;
            let ds = convert_csv(BufReader::new(file), lang)?;
            parent_dir(&out)?;
            ds.save(&out)?;
            print!("{}", ds.stats_table());
        }
        Command::Ingest(Ingest::Validate { data }) => {
            let ds = load_dataset(&data, SCHEMA_V1)?;
            print!("{}", ds.stats_table());
        }
        Command::Synth { out, seed } => {
            synthetic::write_fixtures(&out, seed)?;
            for f in synthetic::FIXTURE_FILES {
                println!("{}", out.join(f).display());
            }
        }
        Command::Features(a) => {
            let ds = load_dataset(&a.data, SCHEMA_V1)?;
            let loaded = a.resources.load()?;
            let (layout, m) = dataset_features(&ds, &a.families, a.as_of, a.k, &loaded.resources())?;
            let ids: Vec<String> = ds.records().iter().map(|r| r.id.clone()).collect();
            let mut out = create(&a.out)?;
            write_feature_rows(&mut out, &ids, &layout, &m)?;
            out.flush()?;
            let labels: Vec<_> = ds.records().iter().map(|r| r.label).collect();
            let table = feature_label_correlation(layout.names(), &m, &labels)?.to_table();
            match a.correlation {
                Some(p) => fs::write(&p, table).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{table}"),
            }
        }
        Command::Factver { index, allowlist, k, text, data } => {
            let (idx, _) = TrustedIndex::load(&index, &allowlist)?;
            match (text, data) {
                (Some(t), _) => print_json(&factver_score(&preprocess_text(&t), &idx, k))?,
                (None, Some(d)) => {
                    let ds = load_dataset(&d, SCHEMA_V1)?;
                    let mut out = io::stdout().lock();
                    for r in ds.records() {
                        let s = factver_score(&preprocess_text(&r.text), &idx, k);
                        writeln!(out, "{}", serde_json::json!({"id": r.id, "factver": s.score, "k_used": s.k_used}))?;
                    }
                }
                (None, None) => unreachable!("clap requires one of --text and --data"),
            }
        }
        Command::Bias(Bias::Train { corpus, out, seed }) => {
            let examples = load_bias_corpus(&corpus)?;
            let model = train_bias_model(&examples, &BiasConfig::default(), seed)?;
            parent_dir(&out)?;
            model.save(&out)?;
            println!("{}", model.fingerprint());
        }
        Command::Bias(Bias::Score { model, text, data }) => {
            let model = BiasModel::load(&model)?;
            match (text, data) {
                (Some(t), _) => println!("{}", model.bias_score(&t)),
                (None, Some(d)) => {
                    let ds = load_dataset(&d, SCHEMA_V1)?;
                    let mut out = io::stdout().lock();
                    for r in ds.records() {
                        writeln!(out, "{}", serde_json::json!({"id": r.id, "bias": model.bias_score(&r.text)}))?;
                    }
                }
                (None, None) => unreachable!("clap requires one of --text and --data"),
            }
        }
        Command::Train(a) => {
            let mut cfg = ExperimentConfig::load(&a.config)?;
            if let Some(seed) = a.seed {
                cfg = cfg.with_seed(seed);
            }
            let ds = load_dataset(&a.data, SCHEMA_V1)?;
            let loaded = a.resources.load()?;
            let outcome = run_experiment(&cfg, &ds, &loaded.resources())?;
            parent_dir(&a.bundle)?;
            outcome.bundle.save(&a.bundle)?;
            if let Some(p) = &a.report {
                let mut out = create(p)?;
                write_reports(&mut out, std::slice::from_ref(&outcome.report))?;
                out.flush()?;
            }
            if let Some(p) = &a.log {
                let mut out = create(p)?;
                write_training_log(&mut out, &outcome.training_log)?;
                out.flush()?;
            }
            print!("{}", render_table(std::slice::from_ref(&outcome.report), false));
        }
        Command::Evaluate { bundle, data, resources } => {
            let bundle = PipelineBundle::load(&bundle)?;
            let ds = load_dataset(&data, SCHEMA_V1)?;
            let loaded = resources.load()?;
            print_json(&evaluate_bundle(&bundle, &ds, &loaded.resources())?)?;
        }
        Command::Sweep { config, data, resources, seeds, reports } => {
            let cfg = ExperimentConfig::load(&config)?;
            let seeds = if seeds.is_empty() { cfg.sweep_seeds.clone() } else { seeds };
            if seeds.is_empty() {
                bail!("no seeds: pass --seeds or set sweep_seeds in the config");
            }
            let ds = load_dataset(&data, SCHEMA_V1)?;
            let loaded = resources.load()?;
            let outcome = seed_sweep(&cfg, &seeds, &ds, &loaded.resources())?;
            if let Some(p) = &reports {
                let mut out = create(p)?;
                write_reports(&mut out, &outcome.reports)?;
                out.flush()?;
            }
            for f in &outcome.failures {
                eprintln!("seed {} failed: {}", f.seed, f.error);
            }
            print_json(&outcome.summary)?;
        }
        Command::Report { reports, reference } => {
            let file = File::open(&reports).with_context(|| format!("opening {}", reports.display()))?;
            print!("{}", render_table(&read_reports(BufReader::new(file))?, reference));
        }
        Command::Predict { service, text, user, lang, retweet_count, favourite_count } => {
            let cfg = service.to_config()?;
            let state = AppState::from_config(&cfg)?;
            let user: Option<UserProfile> = match user {
                Some(p) => {
                    Some(serde_json::from_slice(&fs::read(&p).with_context(|| format!("reading {}", p.display()))?)?)
                }
                None => None,
            };
            let req = ClassifyRequest { text, user, lang, retweet_count, favourite_count };
            let rt = tokio::runtime::Runtime::new()?;
            print_json(&rt.block_on(state.classify(&req))?)?;
        }
        Command::Serve { service, bind, static_dir } => {
            let mut cfg = service.to_config()?;
            if let Some(b) = bind {
                cfg.bind = b;
            }
            override_with(&mut cfg.static_dir, &static_dir);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(&cfg, async {
                let _ = tokio::signal::ctrl_c().await;
            }))?;
        }
    }
    Ok(())
}
