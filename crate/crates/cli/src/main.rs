use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use elicit_core::catalog::Catalog;
use elicit_core::dialogue::{Engine, EngineConfig, MAX_QUESTIONS_LIMIT};
use elicit_core::embedding::HashingEmbedder;
use elicit_core::evalsim::{load_personas, run_suite, synth, Ablation, SuiteConfig};
use elicit_core::exec::Execution;
use elicit_core::parsing::RuleParser;
use elicit_core::ranking::Strategy;
use elicit_service::ServiceConfig;

#[derive(Parser)]
#[command(name = "elicit", version, about = "Conversational car recommender")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AblateArg {
    None,
    Mmr,
    Entropyq,
    Both,
    /// Every configuration, as in the ablation table.
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Es,
    Cr,
}

#[derive(Subcommand)]
enum Command {
    /// Run simulated users against the engine and write a metrics report.
    Simulate {
        /// Directory of persona JSON files.
        #[arg(long, default_value = "data/personas")]
        personas: PathBuf,
        #[arg(long, default_value = "data/catalog.csv")]
        catalog: PathBuf,
        /// Defaults to schema.json next to the catalog.
        #[arg(long)]
        schema: Option<PathBuf>,
        /// Ranking strategies; repeat or comma-separate for several.
        #[arg(long, value_enum, value_delimiter = ',', default_values = ["es", "cr"])]
        strategy: Vec<StrategyArg>,
        /// Question budget per session.
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, value_enum, default_value = "all")]
        ablate: AblateArg,
        /// Number of seeds, run as 0..n.
        #[arg(long, default_value_t = 3)]
        seeds: u64,
        /// Chance a patient persona answers with its fallback.
        #[arg(long, default_value_t = 0.2)]
        noise: f64,
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
        /// Also write the markdown tables here; printed to stdout otherwise.
        #[arg(long)]
        markdown: Option<PathBuf>,
        /// Run without worker threads.
        #[arg(long)]
        sequential: bool,
    },
    /// Start the HTTP API.
    Serve {
        /// TOML config; ELICIT_* environment variables override it.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Write the synthetic catalog, schema and personas.
    Generate {
        #[arg(long, default_value = "data")]
        out: PathBuf,
        #[arg(long, default_value_t = synth::DEFAULT_ITEMS)]
        items: usize,
        #[arg(long, default_value_t = synth::DEFAULT_PERSONAS)]
        personas: usize,
        #[arg(long, default_value_t = synth::DEFAULT_SEED)]
        seed: u64,
    },
}

fn schema_next_to(catalog: &Path) -> PathBuf {
    catalog.parent().unwrap_or(Path::new(".")).join("schema.json")
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    personas: &Path,
    catalog: &Path,
    schema: Option<PathBuf>,
    strategy: &[StrategyArg],
    k: usize,
    ablate: AblateArg,
    seeds: u64,
    noise: f64,
    out: &Path,
    markdown: Option<PathBuf>,
    sequential: bool,
) -> Result<()> {
    if k > MAX_QUESTIONS_LIMIT {
        bail!("--k must be at most {MAX_QUESTIONS_LIMIT}");
    }
    if seeds == 0 {
        bail!("--seeds must be positive");
    }
    if !(0.0..=1.0).contains(&noise) {
        bail!("--noise must lie in [0, 1]");
    }
    let schema = schema.unwrap_or_else(|| schema_next_to(catalog));
    let catalog = Catalog::load_files(catalog, &schema)
        .with_context(|| format!("loading {} with {}", catalog.display(), schema.display()))?;
    let people = load_personas(personas).with_context(|| format!("loading personas from {}", personas.display()))?;
    for p in &people {
        p.validate(catalog.schema())
            .with_context(|| format!("persona {}", p.persona_id))?;
    }
    let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
    let engine = Engine::new(Arc::new(catalog), Arc::new(HashingEmbedder::default()), Arc::new(RuleParser), exec);
    let ablations = match ablate {
        AblateArg::None => vec![Ablation::Full],
        AblateArg::Mmr => vec![Ablation::NoMmr],
        AblateArg::Entropyq => vec![Ablation::NoEntropyQ],
        AblateArg::Both => vec![Ablation::NoMmrNoEntropyQ],
        AblateArg::All => Ablation::ALL.to_vec(),
    };
    let mut strategies: Vec<Strategy> = strategy
        .iter()
        .map(|s| match s {
            StrategyArg::Es => Strategy::Es,
            StrategyArg::Cr => Strategy::Cr,
        })
        .collect();
    strategies.dedup();
    let suite = SuiteConfig {
        strategies,
        ablations,
        seeds: (0..seeds).collect(),
        engine: EngineConfig {
            max_questions: k,
            ..EngineConfig::default()
        },
        answer_noise: noise,
        exec,
        ..SuiteConfig::default()
    };
    let report = run_suite(&engine, &people, &suite);
    std::fs::write(out, report.to_json()).with_context(|| format!("writing {}", out.display()))?;
    let md = report.to_markdown();
    match markdown {
        Some(path) => std::fs::write(&path, md).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{md}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            personas,
            catalog,
            schema,
            strategy,
            k,
            ablate,
            seeds,
            noise,
            out,
            markdown,
            sequential,
        } => simulate(&personas, &catalog, schema, &strategy, k, ablate, seeds, noise, &out, markdown, sequential),
        Command::Serve { config } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .init();
            let cfg = ServiceConfig::load(config.as_deref())?;
            tokio::runtime::Runtime::new()?.block_on(elicit_service::serve(cfg))?;
            Ok(())
        }
        Command::Generate {
            out,
            items,
            personas,
            seed,
        } => {
            synth::write_dataset(&out, items, personas, seed)?;
            println!("wrote {items} items and {personas} personas to {}", out.display());
            Ok(())
        }
    }
}
