//! `linkrisk` command-line tool.
//!
//! Exit status: 0 on success, 1 when `--strict` escalates warnings, 2 on error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use linkrisk::app::{load_quads, serve, AppState, Config, Pipeline};
use linkrisk::graphstore::{serialize_canonical, Dataset, GraphName, Iri};
use linkrisk::query::{evaluate_query_with, parse_query_with, render_tsv, EvalOptions, Prefixes};
use linkrisk::risk::Probability;

#[derive(Parser)]
#[command(name = "linkrisk", version, about = "Linked-data risk monitoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an N-Quads file into a graph and print it in canonical form.
    Load {
        /// Target graph IRI, or `default`.
        graph: String,
        file: PathBuf,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a SELECT query and print tab-separated solutions.
    Query {
        file: PathBuf,
        /// Data files (N-Quads); may repeat.
        #[arg(long = "data")]
        data: Vec<PathBuf>,
        /// Query the stores of a config file instead.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Estimate one patient's risk and print it as JSON.
    Estimate {
        patient: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Run the monitor over every patient and print the JSON report.
    Monitor {
        #[arg(long)]
        config: PathBuf,
        /// Override the alarm threshold, in (0, 1).
        #[arg(long)]
        threshold: Option<f64>,
        /// Exit with status 1 when the run produced warnings.
        #[arg(long)]
        strict: bool,
        /// Write the report to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve resources, queries, risk scores and alarms over HTTP.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn graph_name(s: &str) -> Result<GraphName> {
    if s == "default" {
        Ok(GraphName::Default)
    } else {
        Ok(GraphName::Named(Iri::new(s).context("graph name")?))
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn warnings_status(warnings: &[String], strict: bool) -> ExitCode {
    for w in warnings {
        eprintln!("warning: {w}");
    }
    if strict && !warnings.is_empty() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Load { graph, file, out } => {
            let quads = load_quads(&file, &graph_name(&graph)?)?;
            let ds: Dataset = quads.into_iter().collect();
            eprintln!("loaded {} quads from {}", ds.len(), file.display());
            emit(&serialize_canonical(&ds), out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Query { file, data, config } => {
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let (dataset, prefixes) = match config {
                Some(c) => {
                    let p = Pipeline::from_path(&c)?;
                    let prefixes = p.prefixes();
                    (p.store, prefixes)
                }
                None => {
                    if data.is_empty() {
                        bail!("give --data files or --config");
                    }
                    let mut ds = Dataset::new();
                    for d in &data {
                        ds.extend(load_quads(d, &GraphName::Default)?);
                    }
                    (ds, Prefixes::new())
                }
            };
            let query = parse_query_with(&text, &prefixes).with_context(|| file.display().to_string())?;
            let opts = EvalOptions {
                union_default_graph: true,
            };
            let solutions = evaluate_query_with(&query, &dataset, opts)?;
            print!("{}", render_tsv(&query, &solutions));
            Ok(ExitCode::SUCCESS)
        }
        Command::Estimate { patient, config, strict } => {
            let pipeline = Pipeline::from_path(&config)?;
            let patient = Iri::new(&patient).context("patient IRI")?;
            let run = pipeline.run_for(std::slice::from_ref(&patient))?;
            let Some(estimate) = run.report.estimates.iter().find(|e| e.patient == patient) else {
                for w in &run.report.warnings {
                    eprintln!("warning: {w}");
                }
                bail!("no estimate for <{patient}>");
            };
            println!("{}", serde_json::to_string_pretty(estimate)?);
            Ok(warnings_status(&run.report.warnings, strict))
        }
        Command::Monitor {
            config,
            threshold,
            strict,
            out,
        } => {
            let mut cfg = Config::load(&config)?;
            if let Some(t) = threshold {
                if !(t > 0.0 && t < 1.0) {
                    bail!("--threshold must lie strictly between 0 and 1");
                }
                cfg.threshold = Some(Probability::new(t)?);
            }
            let run = Pipeline::load(cfg)?.run()?;
            emit(&run.report.to_json(), out.as_ref())?;
            Ok(warnings_status(&run.report.warnings, strict))
        }
        Command::Serve { config, port, host } => {
            let pipeline = Pipeline::from_path(&config)?;
            let state = Arc::new(AppState::start(pipeline)?);
            let runtime = tokio::runtime::Runtime::new().context("starting runtime")?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port))
                    .await
                    .with_context(|| format!("binding {host}:{port}"))?;
                log::info!("listening on {}", listener.local_addr()?);
                eprintln!("listening on {}", listener.local_addr()?);
                serve(state, listener).await.context("server")
            })?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
