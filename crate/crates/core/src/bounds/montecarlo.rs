use serde::Serialize;

use super::{BoundReport, Target};
use crate::error::Result;
use crate::linalg::{partition_svd, DenseMatrix};
use crate::recovery::{assemble_design, Bases};
use crate::sampling::{sample_columns, sample_entries, RngStream};

/// Entrywise sample mean and standard error of a random matrix.
#[derive(Debug, Clone)]
pub struct MatrixMean {
    pub mean: DenseMatrix,
    pub std_err: DenseMatrix,
    pub draws: usize,
}

struct Accumulator {
    sum: DenseMatrix,
    sum_sq: DenseMatrix,
    draws: usize,
}

impl Accumulator {
    fn new(rows: usize, cols: usize) -> Self {
        Accumulator {
            sum: DenseMatrix::zeros(rows, cols),
            sum_sq: DenseMatrix::zeros(rows, cols),
            draws: 0,
        }
    }

    fn push(&mut self, x: &DenseMatrix) {
        self.sum += x;
        self.sum_sq += x.component_mul(x);
        self.draws += 1;
    }

    fn finish(self) -> MatrixMean {
        let k = self.draws as f64;
        let mean = &self.sum / k;
        let var = (&self.sum_sq / k - mean.component_mul(&mean)).map(|v| v.max(0.0));
        let std_err = var.map(|v| (v * k / (k - 1.0).max(1.0)).sqrt() / k.sqrt());
        MatrixMean {
            mean,
            std_err,
            draws: self.draws,
        }
    }
}

/// Average of `Omega_1 Omega_1^T = V_1^T S S^T V_1` over `draws` uniform
/// selections of `d` columns; the expectation is `(d/m) I_r`.
pub fn omega1_gram_mean(
    target: &Target,
    r: usize,
    d: usize,
    draws: usize,
    rng: &RngStream,
) -> Result<MatrixMean> {
    let part = partition_svd(&target.svd, r)?;
    let mut acc = Accumulator::new(r, r);
    for k in 0..draws {
        let cols = sample_columns(&target.matrix, d, &rng.child(k as u64))?;
        let omega1 = part.v1.select_rows(cols.set.indices().iter()).transpose();
        acc.push(&(&omega1 * omega1.transpose()));
    }
    Ok(acc.finish())
}

/// Average of `K^T K` over `draws` uniform entry sets of size `omega_len`;
/// the expectation is `(|Omega|/(nm)) I`.
pub fn ktk_mean(
    bases: &Bases,
    omega_len: usize,
    draws: usize,
    rng: &RngStream,
) -> Result<MatrixMean> {
    let (n, m) = (bases.u_hat.nrows(), bases.v_hat.nrows());
    let r = bases.rank();
    let grid = DenseMatrix::zeros(n, m);
    let mut acc = Accumulator::new(r * r, r * r);
    for k in 0..draws {
        let omega = sample_entries(&grid, omega_len, &rng.child(k as u64))?;
        let sys = assemble_design(bases, &omega)?;
        acc.push(sys.normal_matrix());
    }
    Ok(acc.finish())
}

/// Per-check tally over a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoldsSummary {
    pub name: String,
    pub trials: usize,
    pub premise_trials: usize,
    pub holds: usize,
    pub holds_with_premises: usize,
    /// Fraction of premise-satisfying trials on which the bound held;
    /// `None` when no trial met the premises.
    pub rate: Option<f64>,
    /// Fraction over all trials.
    pub rate_all: f64,
}

/// Groups reports by name, in order of first appearance.
pub fn summarize(reports: &[BoundReport]) -> Vec<HoldsSummary> {
    let mut out: Vec<HoldsSummary> = Vec::new();
    for rep in reports {
        let idx = match out.iter().position(|s| s.name == rep.name) {
            Some(i) => i,
            None => {
                out.push(HoldsSummary {
                    name: rep.name.clone(),
                    trials: 0,
                    premise_trials: 0,
                    holds: 0,
                    holds_with_premises: 0,
                    rate: None,
                    rate_all: 0.0,
                });
                out.len() - 1
            }
        };
        let s = &mut out[idx];
        s.trials += 1;
        s.holds += rep.holds as usize;
        if rep.premises_met {
            s.premise_trials += 1;
            s.holds_with_premises += rep.holds as usize;
        }
    }
    for s in &mut out {
        s.rate_all = s.holds as f64 / s.trials as f64;
        s.rate =
            (s.premise_trials > 0).then(|| s.holds_with_premises as f64 / s.premise_trials as f64);
    }
    out
}
