use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use eac_bench::{emit_report, run_protocol, DatasetSpec, ProtocolConfig};
use eac_core::consensus::{run_consensus, Algorithm, ConsensusRequest};
use eac_core::density::partition_score;
use eac_core::graph::{partition_graph, WeightedGraph, DEFAULT_BALANCE_FACTOR};
use eac_core::io::{format_labels, read_ensemble, read_labels, write_ensemble, write_labels};
use eac_core::kmeans::generate_base_clusterings;
use eac_core::metrics::nmi;
use eac_core::IncidenceMatrix;
use serde_json::json;

#[derive(Parser)]
#[command(name = "bench", about = "Consensus clustering benchmark and utilities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the protocol described by a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Build an ensemble of base clusterings for a dataset spec.
    Ensemble {
        spec: PathBuf,
        #[arg(long, default_value_t = 20)]
        p: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one consensus algorithm on an ensemble directory.
    Consensus {
        ensemble: PathBuf,
        #[arg(long)]
        algo: Algorithm,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Label file to write; a `.json` sidecar is written next to it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-cluster density report of a labelling against an ensemble.
    Density { ensemble: PathBuf, labels: PathBuf },
    /// NMI of two label files.
    Nmi { a: PathBuf, b: PathBuf },
    /// Balanced k-way partition of an edge-list graph.
    PartitionGraph {
        edgelist: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_BALANCE_FACTOR)]
        balance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            seed,
            repetitions,
            output,
        } => {
            let mut cfg = ProtocolConfig::from_file(&config)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(r) = repetitions {
                cfg.repetitions = r;
            }
            if let Some(o) = output {
                cfg.output_dir = o;
            }
            let out = run_protocol(&cfg)?;
            emit_report(&out, &cfg.output_dir)?;
            println!("{}", std::fs::read_to_string(cfg.output_dir.join("density_table.md"))?);
            println!("{}", std::fs::read_to_string(cfg.output_dir.join("nmi_table.md"))?);
            if out.has_failures() {
                log::warn!("some runs failed; see records.csv");
                return Ok(ExitCode::from(2));
            }
        }
        Command::Ensemble { spec, p, seed, out } => {
            let data = DatasetSpec::from_file(&spec)?.load()?;
            let e = generate_base_clusterings(&data, p, seed)?;
            write_ensemble(&out, &e)?;
        }
        Command::Consensus {
            ensemble,
            algo,
            k,
            seed,
            out,
        } => {
            let e = read_ensemble(&ensemble)?;
            let fit = run_consensus(&ConsensusRequest::new(&e, k, algo, seed))?;
            match out {
                Some(path) => {
                    write_labels(&path, &fit.partitioning)?;
                    let sidecar = json!({
                        "algorithm": algo.to_string(),
                        "clusters": fit.partitioning.k(),
                        "loss": fit.loss,
                        "iterations": fit.iterations,
                        "converged": fit.converged,
                        "seed": seed,
                    });
                    let side = path.with_extension("json");
                    std::fs::write(&side, serde_json::to_string_pretty(&sidecar)?)
                        .with_context(|| side.display().to_string())?;
                }
                None => print!("{}", format_labels(&fit.partitioning)),
            }
        }
        Command::Density { ensemble, labels } => {
            let e = read_ensemble(&ensemble)?;
            let pi = read_labels(&labels)?;
            print!(
                "{}",
                partition_score(&IncidenceMatrix::from_ensemble(&e), &pi)?.to_csv()
            );
        }
        Command::Nmi { a, b } => {
            println!("{}", nmi(&read_labels(&a)?, &read_labels(&b)?)?);
        }
        Command::PartitionGraph {
            edgelist,
            k,
            balance,
            seed,
        } => {
            let text = std::fs::read_to_string(&edgelist).with_context(|| edgelist.display().to_string())?;
            let g = WeightedGraph::parse_edge_list(&text)?;
            let r = partition_graph(&g, k, balance, seed)?;
            eprintln!("edge_cut {} balance {}", r.edge_cut, r.balance);
            for l in r.labels {
                println!("{l}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
