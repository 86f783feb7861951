//! Empirical measures `μ^N = (1/N) Σ δ_{xᵢ}` and W₂ distances between them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Largest ensemble accepted by [`wasserstein2_exact`].
pub const EXACT_W2_LIMIT: usize = 512;

/// Default number of random directions for [`wasserstein2_sliced`].
pub const DEFAULT_PROJECTIONS: usize = 64;

/// `N` equally weighted samples in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    samples: Vec<f64>,
    dim: usize,
}

impl EmpiricalMeasure {
    pub fn new(samples: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be positive".into()));
        }
        if samples.is_empty() {
            return Err(Error::InvalidMeasure("at least one sample required".into()));
        }
        if !samples.len().is_multiple_of(dim) {
            return Err(Error::InvalidMeasure(format!(
                "{} values do not form rows of length {dim}",
                samples.len()
            )));
        }
        if let Some(pos) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMeasure(format!(
                "non-finite entry in sample {}",
                pos / dim
            )));
        }
        Ok(Self { samples, dim })
    }

    /// One-dimensional measure from scalar samples.
    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        Self::new(xs.to_vec(), 1)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut samples = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::InvalidMeasure(format!(
                    "row {i} has length {}, expected {dim}",
                    row.len()
                )));
            }
            samples.extend_from_slice(row);
        }
        Self::new(samples, dim)
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.samples.chunks_exact(self.dim)
    }

    /// Arithmetic mean of the rows, summed in ascending sample order.
    pub fn mean(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        for row in self.rows() {
            for (a, x) in acc.iter_mut().zip(row) {
                *a += x;
            }
        }
        let n = self.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    /// `(1/N) Σ |xᵢ|^p`.
    pub fn raw_moment(&self, p: u32) -> Result<f64> {
        if p < 2 {
            return Err(Error::InvalidArgument(format!("moment order {p} < 2")));
        }
        let sum: f64 = self.rows().map(|row| norm_pow(sq_norm(row), p)).sum();
        Ok(sum / self.len() as f64)
    }

    pub fn summary(&self) -> MeasureSummary {
        let raw2 = self.rows().map(sq_norm).sum::<f64>() / self.len() as f64;
        MeasureSummary {
            mean: self.mean(),
            raw2,
            n: self.len(),
        }
    }
}

/// The mean-field functionals coefficient models consume: `∫ z μ(dz)` and
/// `∫ |z|² μ(dz)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSummary {
    pub mean: Vec<f64>,
    pub raw2: f64,
    pub n: usize,
}

impl MeasureSummary {
    /// Summary of the Dirac mass at the origin.
    pub fn dirac_zero(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            raw2: 0.0,
            n: 1,
        }
    }

    /// Summary of a law known only through its first two moments, e.g. an
    /// oracle path standing in for the true distribution.
    pub fn from_moments(mean: Vec<f64>, raw2: f64) -> Self {
        Self { mean, raw2, n: 0 }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

pub(crate) fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `|x|^p` given `|x|²`.
pub(crate) fn norm_pow(sq: f64, p: u32) -> f64 {
    if p.is_multiple_of(2) {
        sq.powi((p / 2) as i32)
    } else {
        sq.sqrt().powi(p as i32)
    }
}

fn check_same_size(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    if a.len() != b.len() {
        return Err(Error::SizeMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

fn sorted_sq_distance(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    let sum: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
    sum / a.len() as f64
}

/// Exact W₂ on the line by matching order statistics.
pub fn wasserstein2_1d(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    if a.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            actual: a.dim(),
        });
    }
    check_same_size(a, b)?;
    Ok(sorted_sq_distance(a.samples(), b.samples()).sqrt())
}

/// Exact W₂ in any dimension via a minimum-cost perfect matching on squared
/// Euclidean costs.
pub fn wasserstein2_exact(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    check_same_size(a, b)?;
    let n = a.len();
    if n > EXACT_W2_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: EXACT_W2_LIMIT,
        });
    }
    let cost: Vec<f64> = a
        .rows()
        .flat_map(|x| {
            b.rows()
                .map(move |y| x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum())
        })
        .collect();
    let assignment = min_cost_assignment(&cost, n);
    let total: f64 = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .sum();
    Ok((total / n as f64).max(0.0).sqrt())
}

/// Shortest-augmenting-path Hungarian method on a dense `n × n` cost matrix.
/// Returns `assignment[row] = column`.
fn min_cost_assignment(cost: &[f64], n: usize) -> Vec<usize> {
    // 1-based potentials; column 0 is the virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for row in 1..=n {
        matched_row[0] = row;
        let mut j0 = 0;
        let mut min_v = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if reduced < min_v[j] {
                    min_v[j] = reduced;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        while j0 != 0 {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
        }
    }

    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[matched_row[j] - 1] = j - 1;
    }
    assignment
}

/// Sliced W₂: root of the average squared 1D W₂ between projections onto
/// random unit directions. Lower-bounds the exact W₂.
pub fn wasserstein2_sliced(
    a: &EmpiricalMeasure,
    b: &EmpiricalMeasure,
    num_projections: usize,
    seed: u64,
) -> Result<f64> {
    check_same_size(a, b)?;
    if num_projections == 0 {
        return Err(Error::InvalidArgument(
            "num_projections must be >= 1".into(),
        ));
    }
    let d = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dir = vec![0.0; d];
    let mut total = 0.0;
    for _ in 0..num_projections {
        loop {
            dir.iter_mut()
                .for_each(|c| *c = StandardNormal.sample(&mut rng));
            let norm = sq_norm(&dir).sqrt();
            if norm > 1e-12 {
                dir.iter_mut().for_each(|c| *c /= norm);
                break;
            }
        }
        let project = |m: &EmpiricalMeasure| -> Vec<f64> {
            m.rows()
                .map(|r| r.iter().zip(&dir).map(|(x, w)| x * w).sum())
                .collect()
        };
        total += sorted_sq_distance(&project(a), &project(b));
    }
    Ok((total / num_projections as f64).sqrt())
}

/// W₂ upper bound from the identity coupling of index-aligned ensembles:
/// `sqrt((1/N) Σ |aᵢ − bᵢ|²)`.
pub fn coupling_w2_bound(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    check_same_size(a, b)?;
    let sum: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok((sum / a.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn m1(xs: &[f64]) -> EmpiricalMeasure {
        EmpiricalMeasure::from_scalars(xs).unwrap()
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(EmpiricalMeasure::from_scalars(&[]).is_err());
        assert!(EmpiricalMeasure::from_scalars(&[1.0, f64::NAN]).is_err());
        assert!(EmpiricalMeasure::new(vec![1.0, 2.0, 3.0], 2).is_err());
        assert!(EmpiricalMeasure::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn mean_examples() {
        assert_eq!(m1(&[0.0, 2.0]).mean(), vec![1.0]);
        let zeros = EmpiricalMeasure::new(vec![0.0; 12], 3).unwrap();
        assert_eq!(zeros.mean(), vec![0.0; 3]);
    }

    #[test]
    fn mean_matches_sequential_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xs: Vec<f64> = (0..1000).map(|_| rng.random_range(-5.0..5.0)).collect();
        let mut reference = 0.0;
        for x in &xs {
            reference += x;
        }
        reference /= 1000.0;
        assert!((m1(&xs).mean()[0] - reference).abs() <= 1e-15);
    }

    #[test]
    fn raw_moment_examples() {
        assert_eq!(m1(&[1.0, -1.0]).raw_moment(2).unwrap(), 1.0);
        assert_eq!(m1(&[0.0]).raw_moment(4).unwrap(), 0.0);
        assert_eq!(m1(&[1.0, 2.0]).raw_moment(6).unwrap(), 32.5);
        assert!(m1(&[1.0]).raw_moment(1).is_err());
    }

    #[test]
    fn summary_consistent_with_measure() {
        let m = EmpiricalMeasure::from_rows(&[[1.0, 2.0], [3.0, -1.0], [0.5, 0.0]]).unwrap();
        let s = m.summary();
        assert_eq!(s.mean, m.mean());
        assert!((s.raw2 - m.raw_moment(2).unwrap()).abs() < 1e-15);
        assert!(s.raw2 >= sq_norm(&s.mean));
        assert_eq!(s.n, 3);
    }

    #[test]
    fn w2_1d_examples() {
        let a = m1(&[0.3, -1.2, 4.0]);
        assert_eq!(wasserstein2_1d(&a, &a).unwrap(), 0.0);
        assert_eq!(
            wasserstein2_1d(&m1(&[0.0, 0.0]), &m1(&[1.0, 1.0])).unwrap(),
            1.0
        );
        assert_eq!(
            wasserstein2_1d(&m1(&[0.0, 2.0]), &m1(&[1.0, 3.0])).unwrap(),
            1.0
        );
    }

    #[test]
    fn w2_1d_errors() {
        let a2 = EmpiricalMeasure::new(vec![0.0, 1.0], 2).unwrap();
        assert!(matches!(
            wasserstein2_1d(&a2, &a2),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            wasserstein2_1d(&m1(&[0.0]), &m1(&[0.0, 1.0])),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn exact_examples() {
        let a = EmpiricalMeasure::from_rows(&[[0.0, 0.0]]).unwrap();
        let b = EmpiricalMeasure::from_rows(&[[3.0, 4.0]]).unwrap();
        assert!((wasserstein2_exact(&a, &b).unwrap() - 5.0).abs() < 1e-15);
        let c = EmpiricalMeasure::from_rows(&[[0.0, 1.0], [2.0, -3.0], [5.0, 5.0]]).unwrap();
        assert!(wasserstein2_exact(&c, &c).unwrap() < 1e-12);
        let big = EmpiricalMeasure::new(vec![0.0; 513], 1).unwrap();
        assert!(matches!(
            wasserstein2_exact(&big, &big),
            Err(Error::TooLarge { .. })
        ));
    }

    /// Brute force over all permutations.
    fn brute_force_w2(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> f64 {
        fn permute(
            k: usize,
            perm: &mut Vec<usize>,
            best: &mut f64,
            cost: &dyn Fn(&[usize]) -> f64,
        ) {
            if k == perm.len() {
                *best = best.min(cost(perm));
                return;
            }
            for i in k..perm.len() {
                perm.swap(k, i);
                permute(k + 1, perm, best, cost);
                perm.swap(k, i);
            }
        }
        let n = a.len();
        let cost = |p: &[usize]| -> f64 {
            (0..n)
                .map(|i| {
                    a.row(i)
                        .iter()
                        .zip(b.row(p[i]))
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                })
                .sum::<f64>()
        };
        let mut best = f64::INFINITY;
        permute(0, &mut (0..n).collect(), &mut best, &cost);
        (best / n as f64).sqrt()
    }

    #[test]
    fn exact_matches_permutation_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..30 {
            let n = 1 + trial % 6;
            let d = 1 + trial % 3;
            let gen = |rng: &mut ChaCha8Rng| -> EmpiricalMeasure {
                EmpiricalMeasure::new((0..n * d).map(|_| rng.random_range(-3.0..3.0)).collect(), d)
                    .unwrap()
            };
            let (a, b) = (gen(&mut rng), gen(&mut rng));
            let exact = wasserstein2_exact(&a, &b).unwrap();
            assert!(
                (exact - brute_force_w2(&a, &b)).abs() < 1e-12,
                "trial {trial}"
            );
        }
    }

    #[test]
    fn sliced_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..40).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ys: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..3.0)).collect();
        let (a, b) = (m1(&xs), m1(&ys));
        assert_eq!(wasserstein2_sliced(&a, &a, 16, 1).unwrap(), 0.0);
        let w1d = wasserstein2_1d(&a, &b).unwrap();
        for k in [1, 5, 64] {
            assert!((wasserstein2_sliced(&a, &b, k, 9).unwrap() - w1d).abs() < 1e-12);
        }
        assert!(wasserstein2_sliced(&a, &b, 0, 1).is_err());
    }

    #[test]
    fn sliced_lower_bounds_exact_for_shifted_gaussians() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200;
        let mut gauss = |shift: [f64; 2]| -> EmpiricalMeasure {
            let v: Vec<f64> = (0..n)
                .flat_map(|_| {
                    let x: f64 = StandardNormal.sample(&mut rng);
                    let y: f64 = StandardNormal.sample(&mut rng);
                    [x + shift[0], y + shift[1]]
                })
                .collect();
            EmpiricalMeasure::new(v, 2).unwrap()
        };
        let a = gauss([0.0, 0.0]);
        let b = gauss([1.5, -0.5]);
        let exact = wasserstein2_exact(&a, &b).unwrap();
        let sliced = wasserstein2_sliced(&a, &b, DEFAULT_PROJECTIONS, 17).unwrap();
        assert!(sliced <= exact, "sliced {sliced} exact {exact}");
        assert!(sliced > 0.0);
        // deterministic for a fixed seed
        assert_eq!(
            sliced,
            wasserstein2_sliced(&a, &b, DEFAULT_PROJECTIONS, 17).unwrap()
        );
    }

    #[test]
    fn coupling_examples() {
        let a = m1(&[0.0, 2.0]);
        assert_eq!(coupling_w2_bound(&a, &a).unwrap(), 0.0);
        assert_eq!(coupling_w2_bound(&a, &m1(&[1.0, 3.0])).unwrap(), 1.0);
        let crossed = coupling_w2_bound(&a, &m1(&[3.0, 1.0])).unwrap();
        assert!((crossed - 5f64.sqrt()).abs() < 1e-15);
        assert!(crossed >= wasserstein2_exact(&a, &m1(&[3.0, 1.0])).unwrap());
        let b2 = EmpiricalMeasure::new(vec![0.0, 0.0], 2).unwrap();
        assert!(coupling_w2_bound(&a, &b2).is_err());
    }
}
