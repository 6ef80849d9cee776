//! `Brute`: exact counting of bipartite multigraphs by degree sequence and
//! total multiplicity, exact sampling from the resulting counts, and the
//! acceptance step that mixes the high-multiplicity tail into MATRIXGEN.
//!
//! Two independent counting routes live here. [`count_tables`] is the
//! divide-and-conquer recursion over multipartition matrices; the
//! [`profile`] submodule peels one row at a time over column-capacity
//! profiles. The sampler used by the driver runs on the second route; the
//! first backs `compute_r`, the literal [`sub_brute`], and the `count`
//! command. Tests hold the two against each other and against enumeration.

pub mod profile;

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exactprob::{BitSource, Boundary, Rational};
use crate::marginals::Marginals;
use crate::multigraph::MultiGraph;
use crate::params::ParameterSet;

pub use profile::{layered_top, row_options, ProfileSampler, RowOption};

/// Counts indexed by total multiplicity `t`.
pub type Poly = Vec<BigUint>;

/// `dst[i + shift] += w * src[i]`.
pub fn add_shifted(dst: &mut Poly, src: &[BigUint], shift: usize, w: &BigUint) {
    if src.iter().all(Zero::is_zero) {
        return;
    }
    if dst.len() < src.len() + shift {
        dst.resize(src.len() + shift, BigUint::zero());
    }
    for (i, x) in src.iter().enumerate() {
        if !x.is_zero() {
            dst[i + shift] += w * x;
        }
    }
}

fn convolve_into(dst: &mut Poly, a: &[BigUint], b: &[BigUint], w: &BigUint) {
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        add_shifted(dst, b, i, &(w * x));
    }
}

/// `C(n, k)`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `n! / ((n - Σk)! Π k_i!)`: ways to give disjoint labelled groups of the
/// listed sizes to `n` objects, leaving the rest unassigned.
pub fn multinomial_part(n: u64, parts: &[u64]) -> BigUint {
    let mut left = n;
    let mut acc = BigUint::one();
    for &k in parts {
        if k > left {
            return BigUint::zero();
        }
        acc *= binomial(left, k);
        left -= k;
    }
    acc
}

/// `(g, h; t)`: row degrees, column degrees and total multiplicity, both
/// degree vectors sorted nondecreasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CountKey {
    pub g: Vec<u32>,
    pub h: Vec<u32>,
    pub t: u64,
}

impl CountKey {
    pub fn new(g: &[u32], h: &[u32], t: u64) -> Result<Self> {
        let rows: u64 = g.iter().map(|&x| u64::from(x)).sum();
        let cols: u64 = h.iter().map(|&x| u64::from(x)).sum();
        if rows != cols {
            return Err(Error::UnequalSums { rows, cols });
        }
        let mut g = g.to_vec();
        let mut h = h.to_vec();
        g.sort_unstable();
        h.sort_unstable();
        Ok(Self { g, h, t })
    }
}

/// Degree-frequency vector: `f[i]` = number of entries equal to `i >= 1`
/// (`f[0]` is always 0), with no trailing zeros.
pub fn frequencies(h: &[u32]) -> Vec<u32> {
    let top = h.iter().copied().max().unwrap_or(0) as usize;
    let mut f = vec![0u32; top + 1];
    for &x in h {
        if x > 0 {
            f[x as usize] += 1;
        }
    }
    trim(&mut f);
    f
}

fn trim(f: &mut Vec<u32>) {
    if !f.is_empty() {
        f[0] = 0;
    }
    while f.len() > 1 && *f.last().unwrap() == 0 {
        f.pop();
    }
    if f.len() == 1 {
        f.clear();
    }
}

/// Optional memo for [`count_tables`], keyed by the canonical
/// `(g, frequencies(h))` pair. Inserts stop once `capacity` entries are held.
#[derive(Debug, Default)]
pub struct CountCache {
    map: HashMap<(Vec<u32>, Vec<u32>), Arc<Poly>>,
    capacity: usize,
    pub hits: u64,
    pub misses: u64,
}

impl CountCache {
    pub fn disabled() -> Self {
        Self::default()
    }

    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            capacity,
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// `N(g, h; t)` for every `t` at once.
pub fn split_profile(g: &[u32], h: &[u32], cache: &mut CountCache) -> Arc<Poly> {
    let mut g: Vec<u32> = g.iter().copied().filter(|&x| x > 0).collect();
    g.sort_unstable();
    split_freq(&g, &frequencies(h), cache)
}

fn split_freq(g: &[u32], hf: &[u32], cache: &mut CountCache) -> Arc<Poly> {
    let key = (g.to_vec(), hf.to_vec());
    if let Some(p) = cache.map.get(&key) {
        cache.hits += 1;
        return p.clone();
    }
    cache.misses += 1;
    let p = Arc::new(split_uncached(g, hf, cache));
    if cache.map.len() < cache.capacity {
        cache.map.insert(key, p.clone());
    }
    p
}

fn split_uncached(g: &[u32], hf: &[u32], cache: &mut CountCache) -> Poly {
    let row_sum: u64 = g.iter().map(|&x| u64::from(x)).sum();
    let col_sum: u64 = hf.iter().enumerate().map(|(i, &c)| i as u64 * u64::from(c)).sum();
    if row_sum != col_sum {
        return Poly::new();
    }
    match g.len() {
        0 => return vec![BigUint::one()],
        1 => {
            let t: usize = hf
                .iter()
                .enumerate()
                .skip(2)
                .map(|(i, &c)| i * c as usize)
                .sum();
            let mut p = vec![BigUint::zero(); t + 1];
            p[t] = BigUint::one();
            return p;
        }
        _ => {}
    }
    let (g1, g2) = g.split_at(g.len() / 2);
    let target: u64 = g1.iter().map(|&x| u64::from(x)).sum();
    // suffix capacity: most degree that classes i.. can send to the left
    let mut reach = vec![0u64; hf.len() + 1];
    for i in (0..hf.len()).rev() {
        reach[i] = reach[i + 1] + i as u64 * u64::from(hf[i]);
    }
    let mut out = Poly::new();
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); hf.len()];
    enumerate_partitions(hf, &reach, 1, target, &mut rows, &mut |rows| {
        let mut weight = BigUint::one();
        let mut left = vec![0u32; hf.len()];
        let mut right = vec![0u32; hf.len()];
        for (i, row) in rows.iter().enumerate().skip(1) {
            let parts: Vec<u64> = row.iter().map(|&k| u64::from(k)).collect();
            weight *= multinomial_part(u64::from(hf[i]), &parts);
            for (j, &k) in row.iter().enumerate() {
                left[j] += k;
                right[i - j] += k;
            }
        }
        trim(&mut left);
        trim(&mut right);
        let a = split_freq(g1, &left, cache);
        if a.is_empty() {
            return;
        }
        let b = split_freq(g2, &right, cache);
        convolve_into(&mut out, &a, &b, &weight);
    });
    out
}

/// Walks all multipartition matrices: row `i` of `rows` holds
/// `(n_{i0}, …, n_{ii})` with `Σ_j n_{ij} = hf[i]`, and the total
/// `Σ j n_{ij}` equals `target`.
fn enumerate_partitions(
    hf: &[u32],
    reach: &[u64],
    i: usize,
    target: u64,
    rows: &mut Vec<Vec<u32>>,
    visit: &mut dyn FnMut(&[Vec<u32>]),
) {
    if i >= hf.len() {
        if target == 0 {
            visit(rows);
        }
        return;
    }
    if target > reach[i] {
        return;
    }
    rows[i] = vec![0; i + 1];
    compositions(hf, reach, i, i, hf[i], target, rows, visit);
}

/// Fills `rows[i][j..=0]` downward from `j`, with `left` columns of class
/// `i` still unassigned.
#[allow(clippy::too_many_arguments)]
fn compositions(
    hf: &[u32],
    reach: &[u64],
    i: usize,
    j: usize,
    left: u32,
    target: u64,
    rows: &mut Vec<Vec<u32>>,
    visit: &mut dyn FnMut(&[Vec<u32>]),
) {
    if j == 0 {
        rows[i][0] = left;
        enumerate_partitions(hf, reach, i + 1, target, rows, visit);
        return;
    }
    let max_k = u64::from(left).min(target / j as u64) as u32;
    for k in 0..=max_k {
        rows[i][j] = k;
        compositions(hf, reach, i, j - 1, left - k, target - k as u64 * j as u64, rows, visit);
    }
    rows[i][j] = 0;
}

/// `N(g, h; t)`: number of bipartite multigraphs (equivalently tables with
/// labelled rows and columns) with these degrees and total multiplicity `t`.
pub fn count_tables(key: &CountKey, cache: &mut CountCache) -> BigUint {
    let p = split_profile(&key.g, &key.h, cache);
    p.get(key.t as usize).cloned().unwrap_or_default()
}

/// `R = Σ_{t' >= t0} N(s, t; t')`.
pub fn compute_r(marginals: &Marginals, t0: u64, cache: &mut CountCache) -> BigUint {
    let p = split_profile(marginals.rows(), marginals.cols(), cache);
    p.iter().skip(t0 as usize).sum()
}

/// `τ(a)`: multiplicity contributed by the cells `a_i >= 2`.
fn tau(a: &[u32]) -> u64 {
    a.iter().filter(|&&x| x >= 2).map(|&x| u64::from(x)).sum()
}

/// Uniform member of `M(s, t; t_target)`: rows are filled in order, each by
/// a vector `a` over the columns chosen with weight equal to the number of
/// completions `N(rest, t − a; t_target − τ(a))`.
pub fn sub_brute(
    rows: &[u32],
    cols: &[u32],
    t_target: u64,
    cache: &mut CountCache,
    src: &mut BitSource,
) -> Result<MultiGraph> {
    let top = split_profile(rows, cols, cache);
    if top.get(t_target as usize).map_or(true, Zero::is_zero) {
        return Err(Error::Infeasible);
    }
    let mut g = MultiGraph::bipartite(rows, cols);
    let mut caps = cols.to_vec();
    let mut left = t_target;
    for (r, &x) in rows.iter().enumerate() {
        let rest = &rows[r + 1..];
        let mut choices: Vec<Vec<u32>> = Vec::new();
        let mut weights: Vec<BigUint> = Vec::new();
        let mut a = vec![0u32; caps.len()];
        fill_row(&caps, 0, x, &mut a, &mut |a| {
            let tau_a = tau(a);
            if tau_a > left {
                return;
            }
            let next: Vec<u32> = caps.iter().zip(a).map(|(c, x)| c - x).collect();
            let p = split_profile(rest, &next, cache);
            let w = p.get((left - tau_a) as usize).cloned().unwrap_or_default();
            if !w.is_zero() {
                choices.push(a.to_vec());
                weights.push(w);
            }
        });
        let pick = src.choose_weighted(&weights)?;
        let a = &choices[pick];
        for (j, &k) in a.iter().enumerate() {
            if k > 0 {
                g.insert(r as u32, g.col_id(j), k);
                caps[j] -= k;
            }
        }
        left -= tau(a);
    }
    Ok(g)
}

/// All `a` with `a_j <= caps[j]` and `Σ a = x`, in lexicographic order.
fn fill_row(caps: &[u32], j: usize, x: u32, a: &mut Vec<u32>, visit: &mut dyn FnMut(&[u32])) {
    if x == 0 {
        visit(a);
        return;
    }
    if j == caps.len() {
        return;
    }
    let room: u32 = caps[j..].iter().sum();
    if room < x {
        return;
    }
    for k in (0..=caps[j].min(x)).rev() {
        a[j] = k;
        fill_row(caps, j + 1, x - k, a, visit);
    }
    a[j] = 0;
}

/// Everything `Brute` needs for one instance.
#[derive(Debug, Clone)]
pub struct BruteContext {
    t0: u64,
    /// `N(t)` for every total multiplicity `t`.
    top: Poly,
    r: BigUint,
    accept: Option<Boundary>,
    sampler: ProfileSampler,
}

impl BruteContext {
    /// Counts by the profile route and prepares the acceptance
    /// probability `R / (|H_0| B̂)`. Fails with `InvariantViolation` if that
    /// exceeds 1, i.e. if `B̂` does not bound the tail.
    pub fn bipartite(marginals: &Marginals, params: &ParameterSet) -> Result<Self> {
        let top = layered_top(marginals.rows(), marginals.cols());
        let sampler = ProfileSampler::bipartite(marginals.rows(), marginals.cols());
        Self::from_top(params, top, sampler)
    }

    /// The same for loopless multigraphs with degrees `degrees`.
    pub fn loopless(degrees: &[u32], params: &ParameterSet) -> Result<Self> {
        let mut sampler = ProfileSampler::loopless(degrees);
        let top = sampler.top().as_ref().clone();
        Self::from_top(params, top, sampler)
    }

    /// From precomputed counts `top` (indexed by `t`) and a sampler over
    /// the same instance.
    pub fn from_top(params: &ParameterSet, top: Poly, sampler: ProfileSampler) -> Result<Self> {
        let t0 = params.t0();
        let r: BigUint = top.iter().skip(t0 as usize).sum();
        let accept = if t0 == 0 {
            None
        } else {
            let h0 = top.first().cloned().unwrap_or_default();
            let b_hat = params
                .b_hat()
                .ok_or_else(|| Error::InvariantViolation("missing B̂ with t0 > 0".into()))?;
            if h0.is_zero() {
                return Err(Error::InvariantViolation("no simple realization".into()));
            }
            if b_hat.is_zero() {
                if !r.is_zero() {
                    return Err(Error::InvariantViolation("B̂ = 0 with a nonempty tail".into()));
                }
                Some(Boundary::from_rational(&Rational::zero()))
            } else {
                let p = Rational::new(r.clone().into(), h0.into()) / b_hat;
                if p > Rational::one() {
                    return Err(Error::InvariantViolation(format!(
                        "Brute acceptance R/(|H0| B̂) = {p} exceeds 1"
                    )));
                }
                Some(Boundary::from_rational(&p))
            }
        };
        Ok(Self {
            t0,
            top,
            r,
            accept,
            sampler,
        })
    }

    /// `R`, the number of multigraphs of total multiplicity at least `t0`.
    pub fn r(&self) -> &BigUint {
        &self.r
    }

    /// `|H_0|`, the number of simple realizations.
    pub fn simple_count(&self) -> BigUint {
        self.top.first().cloned().unwrap_or_default()
    }

    /// `N(t)` indexed by `t`.
    pub fn counts(&self) -> &[BigUint] {
        &self.top
    }

    /// Acceptance probability of a completed Brute draw, `None` when the
    /// draw is always accepted (`t0 = 0`).
    pub fn acceptance(&self) -> Option<&Boundary> {
        self.accept.as_ref()
    }

    /// Picks `t >= t0` with probability `N(t) / R`, draws a uniform
    /// multigraph of total multiplicity `t`, and accepts it with probability
    /// `R / (|H_0| B̂)`. Returns `None` on rejection.
    pub fn run(&mut self, src: &mut BitSource) -> Result<Option<MultiGraph>> {
        if self.r.is_zero() {
            return Err(Error::Infeasible);
        }
        let weights = &self.top[(self.t0 as usize).min(self.top.len())..];
        let t = self.t0 + src.choose_weighted(weights)? as u64;
        let g = self.sampler.sample(t, src)?;
        match &self.accept {
            Some(p) if !src.bernoulli_prepared(p) => Ok(None),
            _ => Ok(Some(g)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(g: &[u32], h: &[u32], t: u64) -> BigUint {
        count_tables(&CountKey::new(g, h, t).unwrap(), &mut CountCache::disabled())
    }

    #[test]
    fn small_counts() {
        assert_eq!(n(&[1, 1], &[1, 1], 0), 2u32.into());
        assert_eq!(n(&[2], &[2], 2), 1u32.into());
        assert_eq!(n(&[2], &[2], 0), 0u32.into());
        assert_eq!(n(&[2, 2], &[2, 2], 0), 1u32.into());
        assert_eq!(n(&[2, 2], &[2, 2], 4), 2u32.into());
        assert_eq!(n(&[2, 2], &[2, 2], 2), 0u32.into());
    }

    #[test]
    fn r_examples() {
        let mg = Marginals::validate(&[2, 2], &[2, 2]).unwrap();
        let mut c = CountCache::disabled();
        assert_eq!(compute_r(&mg, 1, &mut c), 2u32.into());
        assert_eq!(compute_r(&mg, 0, &mut c), 3u32.into());
        let mg = Marginals::validate(&[1, 1], &[1, 1]).unwrap();
        assert_eq!(compute_r(&mg, 1, &mut c), 0u32.into());
    }

    #[test]
    fn cache_does_not_change_counts() {
        let g = [3, 2, 2, 1, 1];
        let h = [2, 2, 2, 2, 1];
        let plain = split_profile(&g, &h, &mut CountCache::disabled());
        let mut cache = CountCache::with_capacity(10_000);
        let memo = split_profile(&g, &h, &mut cache);
        assert_eq!(plain, memo);
        let again = split_profile(&g, &h, &mut cache);
        assert_eq!(plain, again);
        assert!(cache.hits > 0);
        let mut tiny = CountCache::with_capacity(3);
        assert_eq!(split_profile(&g, &h, &mut tiny), plain);
        assert_eq!(tiny.len(), 3);
    }

    #[test]
    fn helpers() {
        assert_eq!(binomial(5, 2), 10u32.into());
        assert_eq!(binomial(2, 5), 0u32.into());
        assert_eq!(multinomial_part(5, &[2, 1]), 30u32.into());
        assert_eq!(frequencies(&[0, 2, 2, 1]), vec![0, 1, 2]);
        assert!(frequencies(&[0, 0]).is_empty());
    }

    #[test]
    fn sub_brute_forced_and_exact_multiplicity() {
        let mut src = BitSource::new(1);
        let mut cache = CountCache::with_capacity(1000);
        let g = sub_brute(&[2], &[2], 2, &mut cache, &mut src).unwrap();
        assert_eq!(g.to_matrix(), vec![vec![2]]);
        for t in [0, 4] {
            for _ in 0..20 {
                let g = sub_brute(&[2, 2, 1], &[2, 2, 1], t, &mut cache, &mut src).unwrap();
                assert_eq!(g.multiple_total(), t);
                g.audit().unwrap();
            }
        }
        assert!(matches!(
            sub_brute(&[2, 2], &[2, 2], 2, &mut cache, &mut src),
            Err(Error::Infeasible)
        ));
    }
}
