use rayon::prelude::*;

use super::{stats, trial_rng};
use crate::error::{Error, Result};
use crate::group::{ToyElement, ToyGroup};
use crate::protocol::setup;

/// Significance level for every test in [`IndependenceReport`].
pub const SIGNIFICANCE: f64 = 0.001;

const CHUNK: u64 = 1 << 16;
const MAX_CELLS: u64 = 1 << 24;

/// Empirical joint distribution of the key `r` and the merged bases `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceReport {
    pub q: u64,
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    /// `table[r][t]`, with `T` flattened as `Σ T_i q^i`.
    pub table: Vec<Vec<u64>>,
    /// Pearson contingency statistic for independence of `r` and `T`.
    pub chi_squared: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
    /// Goodness of fit of the `T` marginal to uniform on `G^n`.
    pub marginal_chi_squared: f64,
    pub marginal_p_value: f64,
    /// Smallest p-value of `r` given `T = t` against uniform, over all `t`.
    pub min_conditional_p_value: f64,
    /// Largest standardized deviation of a cell from `samples / (q·q^n)`.
    pub max_cell_z: f64,
    pub pass: bool,
}

impl IndependenceReport {
    pub fn summary(&self) -> String {
        format!(
            "q={} n={} samples={} chi2={:.3} df={} p={:.6} marginal_p={:.6} min_conditional_p={:.6} max_cell_z={:.3} pass={}",
            self.q,
            self.n,
            self.samples,
            self.chi_squared,
            self.degrees_of_freedom,
            self.p_value,
            self.marginal_p_value,
            self.min_conditional_p_value,
            self.max_cell_z,
            self.pass
        )
    }
}

/// Runs `samples` setups over fixed non-identity bases and tabulates `(r, T)`.
/// `n` is limited to 1 or 2 so the table stays enumerable.
pub fn test_independence(q: u64, n: usize, samples: u64, seed: u64) -> Result<IndependenceReport> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if n > 2 {
        return Err(Error::InvalidArgument(format!("n={n} is too large to enumerate; use 1 or 2")));
    }
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    let group = ToyGroup::new(q)?;
    if q < 3 {
        return Err(Error::InvalidArgument("q must be at least 3".into()));
    }
    let cols = q.pow(n as u32);
    if q * cols > MAX_CELLS {
        return Err(Error::InvalidArgument(format!("{} cells exceed the table limit", q * cols)));
    }
    let bases: Vec<_> = (0..n as u64).map(|i| ToyElement(i % (q - 1) + 1)).collect();
    let width = (q * cols) as usize;

    let chunks = samples.div_ceil(CHUNK);
    let flat = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Vec<u64>> {
            let mut rng = trial_rng(seed, c);
            let mut local = vec![0u64; width];
            let count = CHUNK.min(samples - c * CHUNK);
            for _ in 0..count {
                let (key, state) = setup(&group, bases.clone(), &mut rng)?;
                let t = state.merged.iter().rev().fold(0u64, |acc, e| acc * q + e.0);
                local[(key.r().0 * cols + t) as usize] += 1;
            }
            Ok(local)
        })
        .try_reduce(
            || vec![0u64; width],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;

    let table: Vec<Vec<u64>> = flat.chunks(cols as usize).map(<[u64]>::to_vec).collect();
    let total = samples as f64;
    let row_sums: Vec<f64> = table.iter().map(|row| row.iter().sum::<u64>() as f64).collect();
    let col_counts: Vec<u64> = (0..cols as usize).map(|t| table.iter().map(|row| row[t]).sum()).collect();

    let mut chi_squared = 0.0;
    for (row, &rs) in table.iter().zip(&row_sums) {
        for (&obs, &cs) in row.iter().zip(&col_counts) {
            let expected = rs * cs as f64 / total;
            if expected > 0.0 {
                chi_squared += (obs as f64 - expected).powi(2) / expected;
            }
        }
    }
    let degrees_of_freedom = ((q - 1) * (cols - 1)) as f64;
    let p_value = stats::chi_squared_p_value(chi_squared, degrees_of_freedom);

    let marginal_chi_squared = stats::uniform_chi_squared(&col_counts);
    let marginal_p_value = stats::chi_squared_p_value(marginal_chi_squared, (cols - 1) as f64);

    let min_conditional_p_value = (0..cols as usize)
        .map(|t| {
            let slice: Vec<u64> = table.iter().map(|row| row[t]).collect();
            if slice.iter().all(|&c| c == 0) {
                return 1.0;
            }
            stats::chi_squared_p_value(stats::uniform_chi_squared(&slice), (q - 1) as f64)
        })
        .fold(1.0, f64::min);

    let cell_p = 1.0 / (q * cols) as f64;
    let cell_mean = total * cell_p;
    let cell_sigma = (total * cell_p * (1.0 - cell_p)).sqrt();
    let max_cell_z = flat.iter().map(|&c| (c as f64 - cell_mean).abs() / cell_sigma).fold(0.0, f64::max);

    let pass = p_value >= SIGNIFICANCE
        && marginal_p_value >= SIGNIFICANCE
        && min_conditional_p_value >= SIGNIFICANCE / cols as f64
        && max_cell_z <= 5.0;

    Ok(IndependenceReport {
        q,
        n,
        samples,
        seed,
        table,
        chi_squared,
        degrees_of_freedom,
        p_value,
        marginal_chi_squared,
        marginal_p_value,
        min_conditional_p_value,
        max_cell_z,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_input() {
        assert_eq!(test_independence(11, 0, 100, 0), Err(Error::EmptyInput));
        assert!(test_independence(11, 3, 100, 0).is_err());
        assert!(test_independence(12, 1, 100, 0).is_err());
        assert!(test_independence(11, 1, 0, 0).is_err());
    }

    #[test]
    fn small_run_is_consistent() {
        let report = test_independence(7, 1, 70_000, 3).unwrap();
        assert_eq!(report.table.len(), 7);
        assert_eq!(report.table.iter().flatten().sum::<u64>(), 70_000);
        assert_eq!(report.degrees_of_freedom, 36.0);
        assert!(report.pass, "{}", report.summary());
    }

    #[test]
    fn two_bases() {
        let report = test_independence(5, 2, 100_000, 4).unwrap();
        assert_eq!(report.table[0].len(), 25);
        assert_eq!(report.degrees_of_freedom, 96.0);
        assert!(report.pass, "{}", report.summary());
    }

    #[test]
    fn chunking_does_not_change_totals() {
        let a = test_independence(5, 1, CHUNK + 17, 9).unwrap();
        assert_eq!(a.table.iter().flatten().sum::<u64>(), CHUNK + 17);
        assert_eq!(a, test_independence(5, 1, CHUNK + 17, 9).unwrap());
    }
}
