//! Uniform sampling without replacement of columns, rows and entries, and
//! the restriction operator that keeps only observed entries.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ensure_finite, DenseMatrix};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A reproducible random stream: ChaCha20 keyed by `seed`, using the
/// cipher's native 64-bit stream id.
///
/// The value is the whole state; every sampling call starts a fresh
/// generator from it, so callers derive a distinct [`RngStream::child`] for
/// each independent draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub const ALGORITHM: &'static str = "chacha20";

    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Stream for a labelled sub-task (a trial, or one purpose within a trial).
    pub fn child(&self, label: u64) -> Self {
        Self {
            seed: self.seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(label.wrapping_add(1))),
        }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexKind {
    RowIndices,
    ColIndices,
}

/// Strictly increasing indices into a dimension of size `bound`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSet {
    kind: IndexKind,
    indices: Vec<usize>,
    bound: usize,
}

impl IndexSet {
    /// Sorts `indices`; fails on duplicates or entries `>= bound`.
    pub fn new(kind: IndexKind, mut indices: Vec<usize>, bound: usize) -> Result<Self> {
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("duplicate index {}", w[0])));
        }
        if let Some(&last) = indices.last() {
            if last >= bound {
                return Err(Error::invalid(format!(
                    "index {last} out of range 0..{bound}"
                )));
            }
        }
        Ok(Self {
            kind,
            indices,
            bound,
        })
    }

    pub fn kind(&self) -> IndexKind {
        self.kind
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// The `bound x len` matrix of canonical basis vectors `e_i` for the
    /// selected indices.
    pub fn selection_matrix(&self) -> DenseMatrix {
        let mut s = DenseMatrix::zeros(self.bound, self.indices.len());
        for (j, &i) in self.indices.iter().enumerate() {
            s[(i, j)] = 1.0;
        }
        s
    }
}

/// Sampled columns (or transposed rows) of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub set: IndexSet,
    /// Indices in the order they were drawn; column `j` of `matrix` comes
    /// from `draw_order[j]`.
    pub draw_order: Vec<usize>,
    pub matrix: DenseMatrix,
}

fn draw(len: usize, amount: usize, rng: &RngStream) -> Vec<usize> {
    index::sample(&mut rng.rng(), len, amount).into_vec()
}

/// Draws `d` distinct columns uniformly; returns them as the `n x d` matrix `A`.
pub fn sample_columns(m: &DenseMatrix, d: usize, rng: &RngStream) -> Result<Sample> {
    ensure_finite(m, "matrix")?;
    if d == 0 || d > m.ncols() {
        return Err(Error::invalid(format!(
            "cannot sample {d} columns from a matrix with {} columns",
            m.ncols()
        )));
    }
    let draw_order = draw(m.ncols(), d, rng);
    let matrix = m.select_columns(draw_order.iter());
    let set = IndexSet::new(IndexKind::ColIndices, draw_order.clone(), m.ncols())?;
    Ok(Sample {
        set,
        draw_order,
        matrix,
    })
}

/// Draws `d` distinct rows uniformly; returns their transposes as the
/// `m x d` matrix `B`.
pub fn sample_rows(m: &DenseMatrix, d: usize, rng: &RngStream) -> Result<Sample> {
    ensure_finite(m, "matrix")?;
    if d == 0 || d > m.nrows() {
        return Err(Error::invalid(format!(
            "cannot sample {d} rows from a matrix with {} rows",
            m.nrows()
        )));
    }
    let draw_order = draw(m.nrows(), d, rng);
    let matrix = m.select_rows(draw_order.iter()).transpose();
    let set = IndexSet::new(IndexKind::RowIndices, draw_order.clone(), m.nrows())?;
    Ok(Sample {
        set,
        draw_order,
        matrix,
    })
}

/// Observed entries: distinct `(row, col)` pairs kept sorted, with values.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaSet {
    rows: usize,
    cols: usize,
    pairs: Vec<(usize, usize)>,
    values: Vec<f64>,
}

impl OmegaSet {
    /// Validates and sorts the pairs (with their values) by `(row, col)`.
    pub fn new(
        shape: (usize, usize),
        pairs: Vec<(usize, usize)>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if pairs.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} pairs but {} values",
                pairs.len(),
                values.len()
            )));
        }
        let (rows, cols) = shape;
        let mut items: Vec<_> = pairs.into_iter().zip(values).collect();
        items.sort_unstable_by_key(|&(p, _)| p);
        for w in items.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::invalid(format!("duplicate entry {:?}", w[0].0)));
            }
        }
        for &((i, j), v) in &items {
            if i >= rows || j >= cols {
                return Err(Error::invalid(format!(
                    "entry ({i}, {j}) outside {rows}x{cols}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::invalid(format!("entry ({i}, {j}) is not finite")));
            }
        }
        let (pairs, values) = items.into_iter().unzip();
        Ok(Self {
            rows,
            cols,
            pairs,
            values,
        })
    }

    /// Every entry of `m`.
    pub fn full_grid(m: &DenseMatrix) -> Self {
        let (rows, cols) = m.shape();
        let pairs: Vec<_> = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .collect();
        let values = pairs.iter().map(|&(i, j)| m[(i, j)]).collect();
        Self {
            rows,
            cols,
            pairs,
            values,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.pairs.iter().copied().zip(self.values.iter().copied())
    }
}

/// Draws `s` distinct entries uniformly from the full `n x m` grid.
pub fn sample_entries(m: &DenseMatrix, s: usize, rng: &RngStream) -> Result<OmegaSet> {
    ensure_finite(m, "matrix")?;
    let (rows, cols) = m.shape();
    let total = rows * cols;
    if s == 0 || s > total {
        return Err(Error::invalid(format!(
            "cannot sample {s} entries from a {rows}x{cols} matrix"
        )));
    }
    let mut flat = draw(total, s, rng);
    flat.sort_unstable();
    let pairs: Vec<_> = flat.into_iter().map(|k| (k / cols, k % cols)).collect();
    let values = pairs.iter().map(|&(i, j)| m[(i, j)]).collect();
    Ok(OmegaSet {
        rows,
        cols,
        pairs,
        values,
    })
}

/// Refreshes the observed values of `omega` from `m`.
pub fn restrict(m: &DenseMatrix, omega: &OmegaSet) -> Result<OmegaSet> {
    if m.shape() != omega.shape() {
        return Err(Error::invalid(format!(
            "omega has shape {:?} but the matrix is {:?}",
            omega.shape(),
            m.shape()
        )));
    }
    let values = omega.pairs.iter().map(|&(i, j)| m[(i, j)]).collect();
    Ok(OmegaSet {
        values,
        ..omega.clone()
    })
}

/// The dense matrix holding the observed values and zeros elsewhere.
pub fn densify(omega: &OmegaSet) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(omega.rows, omega.cols);
    for ((i, j), v) in omega.iter() {
        out[(i, j)] = v;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn grid(rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |i, j| (i * cols + j) as f64 + 0.5)
    }

    #[test]
    fn full_column_sample_is_permutation() {
        let m = grid(3, 5);
        let s = sample_columns(&m, 5, &RngStream::new(1, 0)).unwrap();
        assert_eq!(s.set.indices(), &[0, 1, 2, 3, 4]);
        for (j, &c) in s.draw_order.iter().enumerate() {
            assert_eq!(s.matrix.column(j), m.column(c));
        }
    }

    #[test]
    fn single_column_draw_is_deterministic() {
        let m = grid(3, 6);
        let rng = RngStream::new(42, 7);
        let a = sample_columns(&m, 1, &rng).unwrap();
        let b = sample_columns(&m, 1, &rng).unwrap();
        assert_eq!(a, b);
        assert!(sample_columns(&m, 7, &rng).is_err());
        assert!(sample_columns(&m, 0, &rng).is_err());
    }

    #[test]
    fn column_frequencies_are_uniform() {
        let m = grid(2, 4);
        let mut counts = [0usize; 4];
        for trial in 0..10_000 {
            let s = sample_columns(&m, 1, &RngStream::new(3, trial)).unwrap();
            counts[s.draw_order[0]] += 1;
        }
        let sd = (10_000.0f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - 2500.0).abs() <= 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn row_sampling_mirrors_columns() {
        let m = grid(5, 3);
        let s = sample_rows(&m, 5, &RngStream::new(1, 0)).unwrap();
        assert_eq!(s.matrix.shape(), (3, 5));
        for (j, &r) in s.draw_order.iter().enumerate() {
            assert_eq!(s.matrix.column(j).transpose(), m.row(r));
        }
        let rng = RngStream::new(9, 9);
        assert_eq!(
            sample_rows(&m, 1, &rng).unwrap(),
            sample_rows(&m, 1, &rng).unwrap()
        );
        assert!(sample_rows(&m, 6, &rng).is_err());

        let mut counts = [0usize; 4];
        let m = grid(4, 2);
        for trial in 0..10_000 {
            counts[sample_rows(&m, 1, &RngStream::new(5, trial))
                .unwrap()
                .draw_order[0]] += 1;
        }
        let sd = (10_000.0f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - 2500.0).abs() <= 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn entry_sampling_edges() {
        let m = grid(3, 4);
        let all = sample_entries(&m, 12, &RngStream::new(0, 0)).unwrap();
        assert_eq!(all, OmegaSet::full_grid(&m));
        assert!(sample_entries(&m, 0, &RngStream::new(0, 0)).is_err());
        assert!(sample_entries(&m, 13, &RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn entry_inclusion_is_half_at_half_budget() {
        let m = grid(4, 4);
        let mut counts = DenseMatrix::zeros(4, 4);
        let reps = 5_000;
        for trial in 0..reps {
            let omega = sample_entries(&m, 8, &RngStream::new(11, trial)).unwrap();
            for &(i, j) in omega.pairs() {
                counts[(i, j)] += 1.0;
            }
        }
        let sd = (reps as f64 * 0.25).sqrt();
        for c in counts.iter() {
            assert!((c - reps as f64 / 2.0).abs() <= 3.0 * sd, "{counts}");
        }
    }

    #[test]
    fn disjoint_streams_are_uncorrelated() {
        let m = grid(4, 4);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for trial in 0..1_000 {
            let base = RngStream::new(trial, 0);
            let a = densify(&sample_entries(&m, 8, &base.child(1)).unwrap());
            let b = densify(&sample_entries(&m, 8, &base.child(2)).unwrap());
            xs.extend(a.iter().map(|&v| (v != 0.0) as u8 as f64));
            ys.extend(b.iter().map(|&v| (v != 0.0) as u8 as f64));
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / n;
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / n;
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / n;
        let corr = cov / (vx * vy).sqrt();
        assert!(corr.abs() < 0.05, "correlation {corr}");
    }

    #[test]
    fn restrict_and_densify() {
        let m = dmatrix![1.0, 2.0; 3.0, 4.0];
        let full = OmegaSet::full_grid(&m);
        assert_eq!(densify(&restrict(&m, &full).unwrap()), m);

        let planted = dmatrix![5.0, -1.0; 0.25, 8.0];
        let omega = OmegaSet::new((2, 2), vec![(1, 1), (0, 1)], vec![0.0, 0.0]).unwrap();
        let refreshed = restrict(&planted, &omega).unwrap();
        assert_eq!(refreshed.values(), &[-1.0, 8.0]);
        assert_eq!(refreshed.pairs(), &[(0, 1), (1, 1)]);

        let big = grid(5, 6);
        let omega = sample_entries(&big, 13, &RngStream::new(2, 3)).unwrap();
        let sum: f64 = omega.values().iter().map(|v| v * v).sum();
        let dense = densify(&restrict(&big, &omega).unwrap());
        assert!((dense.norm_squared() - sum).abs() < 1e-9);
        for i in 0..5 {
            for j in 0..6 {
                let observed = omega.pairs().contains(&(i, j));
                assert_eq!(dense[(i, j)], if observed { big[(i, j)] } else { 0.0 });
            }
        }

        assert!(restrict(&grid(3, 3), &omega).is_err());
    }

    #[test]
    fn restrict_densify_idempotent() {
        let m = grid(4, 5);
        let omega = sample_entries(&m, 9, &RngStream::new(4, 4)).unwrap();
        let once = densify(&omega);
        let twice = densify(&restrict(&once, &omega).unwrap());
        assert_eq!(once, twice);
    }

    #[test]
    fn omega_validation() {
        assert!(OmegaSet::new((2, 2), vec![(0, 0), (0, 0)], vec![1.0, 2.0]).is_err());
        assert!(OmegaSet::new((2, 2), vec![(2, 0)], vec![1.0]).is_err());
        assert!(OmegaSet::new((2, 2), vec![(0, 0)], vec![]).is_err());
        assert!(IndexSet::new(IndexKind::RowIndices, vec![1, 1], 3).is_err());
        assert!(IndexSet::new(IndexKind::RowIndices, vec![3], 3).is_err());
        let s = IndexSet::new(IndexKind::ColIndices, vec![2, 0], 3).unwrap();
        assert_eq!(s.indices(), &[0, 2]);
        assert_eq!(s.selection_matrix(), dmatrix![1.0, 0.0; 0.0, 0.0; 0.0, 1.0]);
    }

    #[test]
    fn children_differ() {
        let base = RngStream::new(1, 0);
        assert_ne!(base.child(0), base.child(1));
        assert_ne!(base.child(0).child(1), base.child(1).child(0));
    }
}
