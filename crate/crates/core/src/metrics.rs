//! NMI, ensemble NMI, zero-effort baselines and density baselines.

use crate::density::density_score;
use crate::error::{Error, Result};
use crate::model::{ClusterEnsemble, IncidenceMatrix, Partitioning};

/// Co-membership counts of two partitionings over the same items.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    n: u64,
}

impl ContingencyTable {
    pub fn new(a: &Partitioning, b: &Partitioning) -> Result<Self> {
        if a.n() != b.n() {
            return Err(Error::validation(format!(
                "partitionings cover {} and {} items",
                a.n(),
                b.n()
            )));
        }
        let mut counts = vec![vec![0u64; b.k()]; a.k()];
        for (&la, &lb) in a.labels().iter().zip(b.labels()) {
            counts[la][lb] += 1;
        }
        Ok(Self {
            counts,
            n: a.n() as u64,
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        let mut out = vec![0; self.counts.first().map_or(0, Vec::len)];
        for r in &self.counts {
            for (o, c) in out.iter_mut().zip(r) {
                *o += c;
            }
        }
        out
    }

    /// True when the two partitionings coincide up to relabeling.
    pub fn is_matching(&self) -> bool {
        let nonzero_rows = self.counts.iter().all(|r| r.iter().filter(|&&c| c > 0).count() == 1);
        let cols = self.counts.first().map_or(0, Vec::len);
        nonzero_rows && self.counts.len() == cols
    }

    /// Mutual information in bits.
    pub fn mutual_information(&self) -> f64 {
        let n = self.n as f64;
        let rows = self.row_sums();
        let cols = self.col_sums();
        let mut terms = Vec::new();
        for (i, r) in self.counts.iter().enumerate() {
            for (j, &c) in r.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let pij = c as f64 / n;
                // log2(p_ij / (p_i p_j)) = log2(c n / (r_i c_j)), integer products kept exact
                let ratio = (c as f64 * n) / (rows[i] as f64 * cols[j] as f64);
                terms.push(pij * ratio.log2());
            }
        }
        // summing in sorted order makes the result independent of argument order
        terms.sort_by(f64::total_cmp);
        terms.iter().sum()
    }
}

/// Shannon entropy (bits) of the cluster-size proportions.
pub fn entropy(sizes: &[u64], n: u64) -> f64 {
    let n = n as f64;
    sizes
        .iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// `2 I(a, b) / (H(a) + H(b))`.
///
/// Two single-cluster partitionings score 1; if exactly one of them has a
/// single cluster the score is 0.
pub fn nmi(a: &Partitioning, b: &Partitioning) -> Result<f64> {
    let table = ContingencyTable::new(a, b)?;
    let ha = entropy(&table.row_sums(), table.n());
    let hb = entropy(&table.col_sums(), table.n());
    if a.k() == 1 && b.k() == 1 {
        return Ok(1.0);
    }
    if a.k() == 1 || b.k() == 1 {
        return Ok(0.0);
    }
    if table.is_matching() {
        return Ok(1.0);
    }
    let v = 2.0 * table.mutual_information() / (ha + hb);
    Ok(v.clamp(0.0, 1.0))
}

/// Mean NMI between `star` and every member of the ensemble.
pub fn ensemble_nmi(star: &Partitioning, ensemble: &ClusterEnsemble) -> Result<f64> {
    let mut acc = 0.0;
    for pi in ensemble.partitionings() {
        acc += nmi(star, pi)?;
    }
    Ok(acc / ensemble.p() as f64)
}

/// Zero-effort reference scores from picking an ensemble member as the consensus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Baselines {
    pub mean: f64,
    pub best: f64,
}

/// Mean and best leave-one-out ensemble NMI of the members themselves.
pub fn baselines(ensemble: &ClusterEnsemble) -> Result<Baselines> {
    let p = ensemble.p();
    if p < 2 {
        return Err(Error::validation("baselines need at least 2 partitionings"));
    }
    let parts = ensemble.partitionings();
    let mut row_sums = vec![0.0; p];
    for i in 0..p {
        for j in (i + 1)..p {
            let v = nmi(&parts[i], &parts[j])?;
            row_sums[i] += v;
            row_sums[j] += v;
        }
    }
    let mean = row_sums.iter().sum::<f64>() / (p * (p - 1)) as f64;
    let best = row_sums
        .iter()
        .map(|s| s / (p - 1) as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Baselines {
        mean,
        best: best.max(mean),
    })
}

/// Mean and best `S(π_i)` of the members, scored against the whole ensemble.
pub fn density_baselines(ensemble: &ClusterEnsemble) -> Result<Baselines> {
    let h = IncidenceMatrix::from_ensemble(ensemble);
    let scores = ensemble
        .partitionings()
        .iter()
        .map(|pi| density_score(&h, pi))
        .collect::<Result<Vec<_>>>()?;
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(Baselines {
        mean,
        best: best.max(mean),
    })
}
