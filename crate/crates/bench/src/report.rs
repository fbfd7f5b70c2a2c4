//! records.csv, timings.csv and the NMI / density tables.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{BenchError, Result};
use crate::protocol::{ProtocolOutput, RunRecord, RunStatus, SummaryRow, BEST_BASELINE, MEAN_BASELINE};

pub const RECORDS_HEADER: &str = "dataset,repetition,method,seed,status,ensemble_nmi,density,clusters,message";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn csv_string(rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 input")
}

/// One line per run. Wall time is left out so identical runs give identical bytes.
pub fn records_csv(records: &[RunRecord]) -> String {
    let header = RECORDS_HEADER.split(',').map(String::from).collect();
    let rows = records.iter().map(|r| {
        let status = match r.status {
            RunStatus::Ok => "ok",
            RunStatus::Failed => "failed",
            RunStatus::Skipped => "skipped",
        };
        vec![
            r.dataset.clone(),
            r.repetition.to_string(),
            r.method.clone(),
            r.seed.to_string(),
            status.to_string(),
            opt(r.ensemble_nmi),
            opt(r.density),
            opt(r.clusters),
            r.message.clone(),
        ]
    });
    csv_string(std::iter::once(header).chain(rows))
}

pub fn timings_csv(records: &[RunRecord]) -> String {
    let header = vec![
        "dataset".into(),
        "repetition".into(),
        "method".into(),
        "wall_seconds".into(),
    ];
    let rows = records.iter().filter(|r| r.status == RunStatus::Ok).map(|r| {
        vec![
            r.dataset.clone(),
            r.repetition.to_string(),
            r.method.clone(),
            format!("{:.6}", r.wall_time.as_secs_f64()),
        ]
    });
    csv_string(std::iter::once(header).chain(rows))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Nmi,
    Density,
}

/// Datasets as rows, methods as columns, values as percentages.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub methods: Vec<String>,
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

impl Table {
    pub fn from_summary(summary: &[SummaryRow], datasets: &[String], methods: &[String], metric: Metric) -> Self {
        let rows = datasets
            .iter()
            .map(|d| {
                let vals = methods
                    .iter()
                    .map(|m| {
                        summary
                            .iter()
                            .find(|r| &r.dataset == d && &r.method == m)
                            .and_then(|r| match metric {
                                Metric::Nmi => r.ensemble_nmi,
                                Metric::Density => r.density,
                            })
                            .map(|v| 100.0 * v)
                    })
                    .collect();
                (d.clone(), vals)
            })
            .collect();
        Self {
            methods: methods.to_vec(),
            rows,
        }
    }

    /// Column of the best consensus value in a row; baselines never win.
    /// Compares the rendered two-decimal values, ties to the leftmost column.
    pub fn best_column(&self, row: usize) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (c, v) in self.rows[row].1.iter().enumerate() {
            if self.methods[c] == MEAN_BASELINE || self.methods[c] == BEST_BASELINE {
                continue;
            }
            if let Some(v) = v {
                let v: f64 = format!("{v:.2}").parse().unwrap();
                if best.map_or(true, |(b, _)| v > b) {
                    best = Some((v, c));
                }
            }
        }
        best.map(|b| b.1)
    }

    pub fn to_csv(&self) -> String {
        let mut header = vec!["dataset".to_string()];
        header.extend(self.methods.iter().cloned());
        header.push("best".into());
        let rows = self.rows.iter().enumerate().map(|(i, (d, vals))| {
            let mut r = vec![d.clone()];
            r.extend(
                vals.iter()
                    .map(|v| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.2}"))),
            );
            r.push(
                self.best_column(i)
                    .map_or_else(|| "NA".to_string(), |c| self.methods[c].clone()),
            );
            r
        });
        csv_string(std::iter::once(header).chain(rows))
    }

    /// Markdown with the best value of each row in bold.
    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| dataset |");
        for m in &self.methods {
            write!(s, " {m} |").unwrap();
        }
        s.push_str("\n|---|");
        for _ in &self.methods {
            s.push_str("---:|");
        }
        s.push('\n');
        for (i, (d, vals)) in self.rows.iter().enumerate() {
            let best = self.best_column(i);
            write!(s, "| {d} |").unwrap();
            for (c, v) in vals.iter().enumerate() {
                match v {
                    None => s.push_str(" NA |"),
                    Some(x) if Some(c) == best => write!(s, " **{x:.2}** |").unwrap(),
                    Some(x) => write!(s, " {x:.2} |").unwrap(),
                }
            }
            s.push('\n');
        }
        s
    }

    /// Reads back the output of `to_csv`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: &str| BenchError::Config(format!("malformed table: {m}"));
        let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| bad(&e.to_string()))?.clone();
        if header.len() < 2 {
            return Err(bad("too few columns"));
        }
        let methods: Vec<String> = header.iter().skip(1).take(header.len() - 2).map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| bad(&e.to_string()))?;
            let vals = (1..=methods.len())
                .map(|i| match &rec[i] {
                    "NA" => Ok(None),
                    x => x.parse().map(Some).map_err(|_| bad(x)),
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push((rec[0].to_string(), vals));
        }
        Ok(Self { methods, rows })
    }

    /// Reads back the output of `to_markdown`.
    pub fn from_markdown(text: &str) -> Result<Self> {
        let bad = |m: &str| BenchError::Config(format!("malformed markdown table: {m}"));
        let cells = |line: &str| -> Vec<String> {
            line.trim()
                .trim_matches('|')
                .split('|')
                .map(|c| c.trim().trim_matches('*').to_string())
                .collect()
        };
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = cells(lines.next().ok_or_else(|| bad("empty"))?);
        lines.next();
        let methods = header[1..].to_vec();
        let mut rows = Vec::new();
        for line in lines {
            let c = cells(line);
            let vals = c[1..]
                .iter()
                .map(|x| match x.as_str() {
                    "NA" => Ok(None),
                    x => x.parse().map(Some).map_err(|_| bad(x)),
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push((c[0].clone(), vals));
        }
        Ok(Self { methods, rows })
    }
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| BenchError::io(path, e))
}

/// Writes records.csv, timings.csv, nmi_table.{csv,md} and density_table.{csv,md}.
pub fn emit_report(out: &ProtocolOutput, dir: &Path) -> Result<()> {
    if out.records.is_empty() {
        return Err(BenchError::EmptyReport);
    }
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    write(dir, "records.csv", &records_csv(&out.records))?;
    write(dir, "timings.csv", &timings_csv(&out.records))?;
    for (metric, stem) in [(Metric::Nmi, "nmi_table"), (Metric::Density, "density_table")] {
        let t = Table::from_summary(&out.summary, &out.datasets, &out.methods, metric);
        write(dir, &format!("{stem}.csv"), &t.to_csv())?;
        write(dir, &format!("{stem}.md"), &t.to_markdown())?;
    }
    Ok(())
}
