//! Row/column sum vectors, their falling-factorial moments, and the
//! Gale–Ryser test.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `(x)_k = x (x-1) ... (x-k+1)`; zero whenever `k > x`.
pub fn falling_factorial(x: u64, k: u32) -> BigUint {
    if u64::from(k) > x {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    for i in 0..u64::from(k) {
        acc *= x - i;
    }
    acc
}

/// Machine-word variant of [`falling_factorial`], `None` on overflow.
pub fn falling_factorial_u128(x: u64, k: u32) -> Option<u128> {
    if u64::from(k) > x {
        return Some(0);
    }
    let mut acc: u128 = 1;
    for i in 0..u64::from(k) {
        acc = acc.checked_mul(u128::from(x - i))?;
    }
    Some(acc)
}

/// Validated marginals with zero components stripped.
///
/// The stripped vectors are what every algorithm works on; the index maps
/// let output matrices be re-inflated to the caller's original shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marginals {
    rows: Vec<u32>,
    cols: Vec<u32>,
    row_index: Vec<usize>,
    col_index: Vec<usize>,
    raw_m: usize,
    raw_n: usize,
    total: u64,
    max_degree: u32,
}

impl Marginals {
    pub fn validate(raw_rows: &[u32], raw_cols: &[u32]) -> Result<Self> {
        let rs: u64 = raw_rows.iter().map(|&x| u64::from(x)).sum();
        let cs: u64 = raw_cols.iter().map(|&x| u64::from(x)).sum();
        if rs != cs {
            return Err(Error::UnequalSums { rows: rs, cols: cs });
        }
        if rs == 0 {
            return Err(Error::Empty);
        }
        let (rows, row_index) = strip(raw_rows);
        let (cols, col_index) = strip(raw_cols);
        let max_degree = rows.iter().chain(cols.iter()).copied().max().unwrap_or(0);
        Ok(Self {
            rows,
            cols,
            row_index,
            col_index,
            raw_m: raw_rows.len(),
            raw_n: raw_cols.len(),
            total: rs,
            max_degree,
        })
    }

    pub fn rows(&self) -> &[u32] {
        &self.rows
    }

    pub fn cols(&self) -> &[u32] {
        &self.cols
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.cols.len()
    }

    /// Total sum `M`.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Largest component `Δ`.
    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// Shape of the caller's original (unstripped) matrix.
    pub fn raw_shape(&self) -> (usize, usize) {
        (self.raw_m, self.raw_n)
    }

    /// Original position of stripped row `i`.
    pub fn row_origin(&self, i: usize) -> usize {
        self.row_index[i]
    }

    pub fn col_origin(&self, j: usize) -> usize {
        self.col_index[j]
    }

    /// Re-inflates a stripped `m x n` matrix to the original shape.
    pub fn inflate(&self, stripped: &[Vec<u32>]) -> Vec<Vec<u32>> {
        let mut out = vec![vec![0; self.raw_n]; self.raw_m];
        for (i, row) in stripped.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                out[self.row_index[i]][self.col_index[j]] = v;
            }
        }
        out
    }

    pub fn moments(&self) -> MomentTable {
        MomentTable::new(&self.rows, &self.cols, self.max_degree)
    }

    /// Gale–Ryser: a simple bipartite realization exists iff for every `k`
    /// the `k` largest row sums fit into `sum_j min(t_j, k)`.
    pub fn is_bigraphical(&self) -> bool {
        let mut rows = self.rows.clone();
        rows.sort_unstable_by(|a, b| b.cmp(a));
        let mut lhs: u64 = 0;
        for (k, &r) in rows.iter().enumerate() {
            lhs += u64::from(r);
            let kk = (k + 1) as u64;
            let rhs: u64 = self.cols.iter().map(|&c| u64::from(c).min(kk)).sum();
            if lhs > rhs {
                return false;
            }
        }
        true
    }
}

fn strip(raw: &[u32]) -> (Vec<u32>, Vec<usize>) {
    raw.iter()
        .enumerate()
        .filter(|(_, &x)| x > 0)
        .map(|(i, &x)| (x, i))
        .unzip()
}

/// `S_k = sum_i (s_i)_k` and `T_k = sum_j (t_j)_k` for `k = 0..=Δ`
/// (entries below 2 are stored but unused).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentTable {
    s: Vec<BigUint>,
    t: Vec<BigUint>,
}

impl MomentTable {
    pub fn new(rows: &[u32], cols: &[u32], max_degree: u32) -> Self {
        let moment = |side: &[u32]| -> Vec<BigUint> {
            (0..=max_degree)
                .map(|k| {
                    side.iter()
                        .map(|&d| falling_factorial(u64::from(d), k))
                        .sum()
                })
                .collect()
        };
        Self {
            s: moment(rows),
            t: moment(cols),
        }
    }

    /// `S_k`; zero for `k` above the maximum degree.
    pub fn row(&self, k: u32) -> BigUint {
        self.s.get(k as usize).cloned().unwrap_or_default()
    }

    /// `T_k`; zero for `k` above the maximum degree.
    pub fn col(&self, k: u32) -> BigUint {
        self.t.get(k as usize).cloned().unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn strips_zero_components() {
        let mg = Marginals::validate(&[1, 0, 1], &[2]).unwrap();
        assert_eq!(mg.rows(), &[1, 1]);
        assert_eq!(mg.cols(), &[2]);
        assert_eq!(mg.total(), 2);
        assert_eq!(mg.max_degree(), 2);
        assert_eq!(mg.row_origin(1), 2);
    }

    #[test]
    fn rejects_unequal_sums_and_empty() {
        assert_eq!(
            Marginals::validate(&[2, 1], &[2, 2]),
            Err(Error::UnequalSums { rows: 3, cols: 4 })
        );
        assert_eq!(Marginals::validate(&[0, 0], &[0]), Err(Error::Empty));
    }

    #[test]
    fn totals_and_max() {
        let mg = Marginals::validate(&[3, 2], &[2, 2, 1]).unwrap();
        assert_eq!(mg.total(), 5);
        assert_eq!(mg.max_degree(), 3);
    }

    #[test]
    fn moments_match_direct_evaluation() {
        let mg = Marginals::validate(&[3, 2], &[5]).unwrap();
        assert_eq!(mg.moments().row(2), big(8));
        let mg = Marginals::validate(&[1, 1, 1], &[3]).unwrap();
        assert_eq!(mg.moments().row(2), big(0));
        let mg = Marginals::validate(&[3], &[1, 1, 1]).unwrap();
        let mt = mg.moments();
        assert_eq!(mt.row(3), big(6));
        assert_eq!(mt.row(2), big(6));
        assert_eq!(mt.col(2), big(0));
        assert_eq!(mt.row(7), big(0));
    }

    #[test]
    fn gale_ryser_examples() {
        let yes = Marginals::validate(&[1, 1], &[1, 1]).unwrap();
        assert!(yes.is_bigraphical());
        let no = Marginals::validate(&[3, 1], &[2, 2]).unwrap();
        assert!(!no.is_bigraphical());
        let k22 = Marginals::validate(&[2, 2], &[2, 2]).unwrap();
        assert!(k22.is_bigraphical());
    }

    #[test]
    fn inflate_restores_zero_rows() {
        let mg = Marginals::validate(&[1, 0, 1], &[0, 2]).unwrap();
        let out = mg.inflate(&[vec![1], vec![1]]);
        assert_eq!(out, vec![vec![0, 1], vec![0, 0], vec![0, 1]]);
    }
}
