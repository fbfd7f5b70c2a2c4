//! The repeated ensemble/consensus experiment and its aggregation.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use eac_core::consensus::{run_consensus, Algorithm, ConsensusRequest};
use eac_core::density::density_score;
use eac_core::kmeans::generate_base_clusterings;
use eac_core::metrics::{baselines, density_baselines, ensemble_nmi};
use eac_core::numeric::mix_seed;
use eac_core::{Dataset, IncidenceMatrix};
use log::{info, warn};
use serde::Serialize;

use crate::config::ProtocolConfig;
use crate::error::Result;

pub const MEAN_BASELINE: &str = "mean";
pub const BEST_BASELINE: &str = "best";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
    /// Not attempted, e.g. a hierarchical method above the oracle cap.
    Skipped,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub dataset: String,
    pub repetition: usize,
    /// Algorithm name, or one of the baseline names.
    pub method: String,
    pub seed: u64,
    pub status: RunStatus,
    pub ensemble_nmi: Option<f64>,
    pub density: Option<f64>,
    /// Clusters in the produced partitioning.
    pub clusters: Option<usize>,
    pub wall_time: Duration,
    pub message: String,
}

impl RunRecord {
    fn new(dataset: &str, repetition: usize, method: &str, seed: u64) -> Self {
        Self {
            dataset: dataset.to_string(),
            repetition,
            method: method.to_string(),
            seed,
            status: RunStatus::Ok,
            ensemble_nmi: None,
            density: None,
            clusters: None,
            wall_time: Duration::ZERO,
            message: String::new(),
        }
    }

    fn failed(mut self, message: impl ToString) -> Self {
        self.status = RunStatus::Failed;
        self.message = message.to_string();
        self
    }
}

/// Mean over the successful runs of one (dataset, method) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub dataset: String,
    pub method: String,
    pub ensemble_nmi: Option<f64>,
    pub density: Option<f64>,
    pub successes: usize,
    pub runs: usize,
}

#[derive(Clone, Debug)]
pub struct ProtocolOutput {
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
    /// Column order for reports: baselines, then the configured algorithms.
    pub methods: Vec<String>,
    pub datasets: Vec<String>,
}

impl ProtocolOutput {
    pub fn has_failures(&self) -> bool {
        self.records.iter().any(|r| r.status == RunStatus::Failed)
    }

    pub fn summary_for(&self, dataset: &str, method: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.dataset == dataset && r.method == method)
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Seed of one (dataset, repetition) cell; independent of every other cell.
pub fn cell_seed(master_seed: u64, dataset: &str, repetition: usize) -> u64 {
    mix_seed(mix_seed(master_seed, fnv1a(dataset)), repetition as u64)
}

pub fn algorithm_seed(cell_seed: u64, algorithm: &Algorithm) -> u64 {
    mix_seed(cell_seed, fnv1a(&algorithm.to_string()))
}

fn run_cell(cfg: &ProtocolConfig, data: &Dataset, repetition: usize) -> Vec<RunRecord> {
    let seed = cell_seed(cfg.master_seed, &data.name, repetition);
    let name = data.name.as_str();
    let mut out = Vec::with_capacity(cfg.algorithms.len() + 2);
    let ensemble = match generate_base_clusterings(data, cfg.ensemble_size, seed) {
        Ok(e) => e,
        Err(err) => {
            warn!("{name} #{repetition}: base clusterings failed: {err}");
            for m in [MEAN_BASELINE, BEST_BASELINE] {
                out.push(RunRecord::new(name, repetition, m, seed).failed(&err));
            }
            for alg in &cfg.algorithms {
                let s = algorithm_seed(seed, alg);
                out.push(RunRecord::new(name, repetition, &alg.to_string(), s).failed(&err));
            }
            return out;
        }
    };
    let h = IncidenceMatrix::from_ensemble(&ensemble);
    match (baselines(&ensemble), density_baselines(&ensemble)) {
        (Ok(b), Ok(d)) => {
            for (m, nmi, dens) in [(MEAN_BASELINE, b.mean, d.mean), (BEST_BASELINE, b.best, d.best)] {
                let mut r = RunRecord::new(name, repetition, m, seed);
                r.ensemble_nmi = Some(nmi);
                r.density = Some(dens);
                out.push(r);
            }
        }
        (Err(err), _) | (_, Err(err)) => {
            for m in [MEAN_BASELINE, BEST_BASELINE] {
                out.push(RunRecord::new(name, repetition, m, seed).failed(&err));
            }
        }
    }
    for alg in &cfg.algorithms {
        let s = algorithm_seed(seed, alg);
        let mut rec = RunRecord::new(name, repetition, &alg.to_string(), s);
        if alg.is_hierarchical() && data.n() > cfg.options.oracle_cap {
            rec.status = RunStatus::Skipped;
            rec.message = format!("n = {} above oracle cap {}", data.n(), cfg.options.oracle_cap);
            out.push(rec);
            continue;
        }
        let req = ConsensusRequest {
            ensemble: &ensemble,
            k_out: cfg.k_out,
            algorithm: *alg,
            seed: s,
            options: cfg.options.clone(),
        };
        let start = Instant::now();
        let result = run_consensus(&req).and_then(|fit| {
            let nmi = ensemble_nmi(&fit.partitioning, &ensemble)?;
            let dens = density_score(&h, &fit.partitioning)?;
            Ok((fit.partitioning.k(), nmi, dens))
        });
        rec.wall_time = start.elapsed();
        match result {
            Ok((k, nmi, dens)) => {
                rec.clusters = Some(k);
                rec.ensemble_nmi = Some(nmi);
                rec.density = Some(dens);
            }
            Err(err) => {
                warn!("{name} #{repetition} {alg}: {err}");
                rec = rec.failed(err);
            }
        }
        out.push(rec);
    }
    out
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn summarize(records: &[RunRecord], datasets: &[String], methods: &[String]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(&str, &str), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((&r.dataset, &r.method)).or_default().push(r);
    }
    let mut rows = Vec::new();
    for d in datasets {
        for m in methods {
            let Some(rs) = groups.get(&(d.as_str(), m.as_str())) else {
                continue;
            };
            let ok: Vec<&&RunRecord> = rs.iter().filter(|r| r.status == RunStatus::Ok).collect();
            rows.push(SummaryRow {
                dataset: d.clone(),
                method: m.clone(),
                ensemble_nmi: mean(ok.iter().filter_map(|r| r.ensemble_nmi)),
                density: mean(ok.iter().filter_map(|r| r.density)),
                successes: ok.len(),
                runs: rs.len(),
            });
        }
    }
    rows
}

/// Runs every (dataset, repetition) cell on already loaded datasets.
pub fn run_protocol_on(cfg: &ProtocolConfig, datasets: &[Dataset]) -> Result<ProtocolOutput> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = (0..datasets.len())
        .flat_map(|d| (0..cfg.repetitions).map(move |r| (d, r)))
        .collect();
    let results: Mutex<Vec<Option<Vec<RunRecord>>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    let workers = cfg.effective_workers().min(jobs.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(d, r)) = jobs.get(j) else { break };
                info!("{} repetition {}", datasets[d].name, r);
                let recs = run_cell(cfg, &datasets[d], r);
                results.lock().unwrap()[j] = Some(recs);
            });
        }
    });
    let methods: Vec<String> = [MEAN_BASELINE.to_string(), BEST_BASELINE.to_string()]
        .into_iter()
        .chain(cfg.algorithms.iter().map(|a| a.to_string()))
        .collect();
    let mut records: Vec<RunRecord> = results
        .into_inner()
        .unwrap()
        .into_iter()
        .flat_map(|r| r.expect("every job ran"))
        .collect();
    let rank = |m: &str| methods.iter().position(|x| x == m).unwrap_or(usize::MAX);
    records
        .sort_by(|a, b| (&a.dataset, a.repetition, rank(&a.method)).cmp(&(&b.dataset, b.repetition, rank(&b.method))));
    let mut names: Vec<String> = datasets.iter().map(|d| d.name.clone()).collect();
    names.sort();
    let summary = summarize(&records, &names, &methods);
    Ok(ProtocolOutput {
        records,
        summary,
        methods,
        datasets: names,
    })
}

/// Loads the configured datasets and runs the protocol.
pub fn run_protocol(cfg: &ProtocolConfig) -> Result<ProtocolOutput> {
    cfg.validate()?;
    let datasets = cfg
        .dataset_specs()?
        .iter()
        .map(|s| s.load())
        .collect::<Result<Vec<_>>>()?;
    run_protocol_on(cfg, &datasets)
}
