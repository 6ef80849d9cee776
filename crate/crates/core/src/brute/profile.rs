//! Counting and sampling by peeling one vertex at a time.
//!
//! The state is the multiset of remaining capacities on the far side,
//! stored as a frequency vector. Peeling a row of degree `x` distributes
//! `x` units over the capacity classes; a [`RowOption`] records how many
//! columns of each class receive each amount, and its weight is the number
//! of ways to pick those columns. Counts depend only on the multiset, so
//! the sampler can choose an option with weight `weight × N(next)` and then
//! pick the actual columns uniformly inside each class.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::{add_shifted, frequencies, multinomial_part, trim, Poly};
use crate::error::{Error, Result};
use crate::exactprob::BitSource;
use crate::multigraph::MultiGraph;

/// One way to spread a row's degree over capacity classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowOption {
    /// `(class c, amount a, number of columns k)`, each `k >= 1`.
    pub take: Vec<(u32, u32, u32)>,
    /// Multiplicity added by cells of value at least 2.
    pub tau: u64,
    /// Number of column choices realizing `take`.
    pub weight: BigUint,
    /// Frequency vector after the row is placed.
    pub next: Vec<u32>,
}

/// Every way to place `x` units on the classes of `freq`, at most `c`
/// units on a column of class `c`.
pub fn row_options(freq: &[u32], x: u32) -> Vec<RowOption> {
    let mut reach = vec![0u64; freq.len() + 1];
    for c in (0..freq.len()).rev() {
        reach[c] = reach[c + 1] + c as u64 * u64::from(freq[c]);
    }
    let mut out = Vec::new();
    let mut take = Vec::new();
    options_dfs(freq, &reach, 1, 1, x, 0, &mut take, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn options_dfs(
    freq: &[u32],
    reach: &[u64],
    c: usize,
    a: u32,
    left: u32,
    used: u32,
    take: &mut Vec<(u32, u32, u32)>,
    out: &mut Vec<RowOption>,
) {
    if left == 0 {
        out.push(finish(freq, take));
        return;
    }
    if c >= freq.len() {
        return;
    }
    if a == 1 && u64::from(left) > reach[c] {
        return;
    }
    if a > left.min(c as u32) {
        options_dfs(freq, reach, c + 1, 1, left, 0, take, out);
        return;
    }
    let max_k = (freq[c] - used).min(left / a);
    for k in 0..=max_k {
        if k > 0 {
            take.push((c as u32, a, k));
        }
        options_dfs(freq, reach, c, a + 1, left - k * a, used + k, take, out);
        if k > 0 {
            take.pop();
        }
    }
}

fn finish(freq: &[u32], take: &[(u32, u32, u32)]) -> RowOption {
    let mut next = freq.to_vec();
    let mut weight = BigUint::one();
    let mut tau = 0u64;
    let mut i = 0;
    while i < take.len() {
        let c = take[i].0;
        let mut parts = Vec::new();
        while i < take.len() && take[i].0 == c {
            let (_, a, k) = take[i];
            parts.push(u64::from(k));
            next[c as usize] -= k;
            next[(c - a) as usize] += k;
            if a >= 2 {
                tau += u64::from(a) * u64::from(k);
            }
            i += 1;
        }
        weight *= multinomial_part(u64::from(freq[c as usize]), &parts);
    }
    trim(&mut next);
    RowOption {
        take: take.to_vec(),
        tau,
        weight,
        next,
    }
}

/// `N(rows, cols; t)` for every `t`, computed row by row from the last
/// layer up while holding only two layers of counts.
pub fn layered_top(rows: &[u32], cols: &[u32]) -> Poly {
    let mut rows: Vec<u32> = rows.iter().copied().filter(|&x| x > 0).collect();
    rows.sort_unstable_by(|a, b| b.cmp(a));
    let start = frequencies(cols);
    let mut layers: Vec<HashSet<Vec<u32>>> = vec![HashSet::from([start.clone()])];
    for &x in &rows {
        let mut next = HashSet::new();
        for f in layers.last().unwrap() {
            for opt in row_options(f, x) {
                next.insert(opt.next);
            }
        }
        layers.push(next);
    }
    let mut below: HashMap<Vec<u32>, Poly> = HashMap::new();
    if layers.last().unwrap().contains(&Vec::new()) {
        below.insert(Vec::new(), vec![BigUint::one()]);
    }
    for (r, &x) in rows.iter().enumerate().rev() {
        let mut here = HashMap::new();
        for f in &layers[r] {
            let mut p = Poly::new();
            for opt in row_options(f, x) {
                if let Some(q) = below.get(&opt.next) {
                    add_shifted(&mut p, q, opt.tau as usize, &opt.weight);
                }
            }
            if !p.is_empty() {
                here.insert(f.clone(), p);
            }
        }
        below = here;
    }
    below.remove(&start).unwrap_or_default()
}

#[derive(Debug, Clone)]
enum Shape {
    Bipartite { rows: Vec<u32>, cols: Vec<u32> },
    Loopless { degrees: Vec<u32> },
}

/// Exact uniform sampler over multigraphs with a given total multiplicity,
/// memoizing the counts of every state it visits.
#[derive(Debug, Clone)]
pub struct ProfileSampler {
    shape: Shape,
    memo: HashMap<(usize, Vec<u32>), Arc<Poly>>,
}

impl ProfileSampler {
    pub fn bipartite(rows: &[u32], cols: &[u32]) -> Self {
        Self {
            shape: Shape::Bipartite {
                rows: rows.to_vec(),
                cols: cols.to_vec(),
            },
            memo: HashMap::new(),
        }
    }

    pub fn loopless(degrees: &[u32]) -> Self {
        Self {
            shape: Shape::Loopless {
                degrees: degrees.to_vec(),
            },
            memo: HashMap::new(),
        }
    }

    /// Number of memoized states.
    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    /// Counts by total multiplicity for the whole instance.
    pub fn top(&mut self) -> Arc<Poly> {
        match &self.shape {
            Shape::Bipartite { cols, .. } => {
                let f = frequencies(cols);
                self.bipartite_counts(0, f)
            }
            Shape::Loopless { degrees } => {
                let f = frequencies(degrees);
                self.loopless_counts(f)
            }
        }
    }

    fn bipartite_counts(&mut self, r: usize, f: Vec<u32>) -> Arc<Poly> {
        let Shape::Bipartite { rows, .. } = &self.shape else {
            unreachable!()
        };
        if r == rows.len() {
            return Arc::new(if f.is_empty() { vec![BigUint::one()] } else { Poly::new() });
        }
        let x = rows[r];
        let key = (r, f);
        if let Some(p) = self.memo.get(&key) {
            return p.clone();
        }
        let mut p = Poly::new();
        for opt in row_options(&key.1, x) {
            let q = self.bipartite_counts(r + 1, opt.next);
            add_shifted(&mut p, &q, opt.tau as usize, &opt.weight);
        }
        let p = Arc::new(p);
        self.memo.insert(key, p.clone());
        p
    }

    fn loopless_counts(&mut self, f: Vec<u32>) -> Arc<Poly> {
        if f.is_empty() {
            return Arc::new(vec![BigUint::one()]);
        }
        let key = (0, f);
        if let Some(p) = self.memo.get(&key) {
            return p.clone();
        }
        let c = key.1.len() - 1;
        let mut rest = key.1.clone();
        rest[c] -= 1;
        trim(&mut rest);
        let mut p = Poly::new();
        for opt in row_options(&rest, c as u32) {
            let q = self.loopless_counts(opt.next);
            add_shifted(&mut p, &q, opt.tau as usize, &opt.weight);
        }
        let p = Arc::new(p);
        self.memo.insert(key, p.clone());
        p
    }

    /// A uniform multigraph of total multiplicity exactly `t`.
    pub fn sample(&mut self, t: u64, src: &mut BitSource) -> Result<MultiGraph> {
        if self.top().get(t as usize).map_or(true, Zero::is_zero) {
            return Err(Error::Infeasible);
        }
        match self.shape.clone() {
            Shape::Bipartite { rows, cols } => {
                let mut g = MultiGraph::bipartite(&rows, &cols);
                let mut caps = cols.clone();
                let mut left = t;
                for (r, &x) in rows.iter().enumerate() {
                    let ids: Vec<usize> = (0..caps.len()).collect();
                    let opt = self.pick(&caps, &ids, x, left, src, |s, next| {
                        s.bipartite_counts(r + 1, next)
                    })?;
                    left -= opt.tau;
                    for (j, a) in place(&opt, &caps, &ids, src) {
                        g.insert(r as u32, g.col_id(j), a);
                        caps[j] -= a;
                    }
                }
                Ok(g)
            }
            Shape::Loopless { degrees } => {
                let mut g = MultiGraph::loopless(&degrees);
                let mut caps = degrees.clone();
                let mut left = t;
                // peel a vertex of largest remaining capacity, lowest id first
                while let Some(v) = (0..caps.len())
                    .filter(|&v| caps[v] > 0)
                    .max_by_key(|&v| (caps[v], std::cmp::Reverse(v)))
                {
                    let x = caps[v];
                    caps[v] = 0;
                    let ids: Vec<usize> = (0..caps.len()).filter(|&u| u != v).collect();
                    let opt = self.pick(&caps, &ids, x, left, src, |s, next| s.loopless_counts(next))?;
                    left -= opt.tau;
                    for (u, a) in place(&opt, &caps, &ids, src) {
                        g.insert(v as u32, u as u32, a);
                        caps[u] -= a;
                    }
                }
                Ok(g)
            }
        }
    }

    fn pick(
        &mut self,
        caps: &[u32],
        ids: &[usize],
        x: u32,
        left: u64,
        src: &mut BitSource,
        mut counts: impl FnMut(&mut Self, Vec<u32>) -> Arc<Poly>,
    ) -> Result<RowOption> {
        let f = frequencies(&ids.iter().map(|&j| caps[j]).collect::<Vec<_>>());
        let mut opts = Vec::new();
        let mut weights = Vec::new();
        for opt in row_options(&f, x) {
            if opt.tau > left {
                continue;
            }
            let q = counts(self, opt.next.clone());
            let n = q.get((left - opt.tau) as usize).cloned().unwrap_or_default();
            if !n.is_zero() {
                weights.push(&opt.weight * n);
                opts.push(opt);
            }
        }
        let i = src.choose_weighted(&weights)?;
        Ok(opts.swap_remove(i))
    }
}

/// Chooses concrete columns for `opt`: within each class, a uniformly
/// random ordered selection, cut into consecutive groups per amount.
fn place(opt: &RowOption, caps: &[u32], ids: &[usize], src: &mut BitSource) -> Vec<(usize, u32)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < opt.take.len() {
        let c = opt.take[i].0;
        let mut pool: Vec<usize> = ids.iter().copied().filter(|&j| caps[j] == c).collect();
        let mut drawn = 0usize;
        while i < opt.take.len() && opt.take[i].0 == c {
            let (_, a, k) = opt.take[i];
            for _ in 0..k {
                let r = drawn + src.below_usize(pool.len() - drawn);
                pool.swap(drawn, r);
                out.push((pool[drawn], a));
                drawn += 1;
            }
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brute::{split_profile, CountCache};

    #[test]
    fn options_for_a_degree_two_row() {
        // two columns of capacity 2: place 2 on either, or 1 on both
        let opts = row_options(&[0, 0, 2], 2);
        let mut summary: Vec<_> = opts.iter().map(|o| (o.take.clone(), o.tau, o.weight.clone())).collect();
        summary.sort();
        assert_eq!(
            summary,
            vec![
                (vec![(2, 1, 2)], 0, BigUint::from(1u32)),
                (vec![(2, 2, 1)], 2, BigUint::from(2u32)),
            ]
        );
    }

    #[test]
    fn layered_and_memo_agree_with_split_route() {
        let cases: &[(&[u32], &[u32])] = &[
            (&[2, 2], &[2, 2]),
            (&[3, 2, 1], &[2, 2, 1, 1]),
            (&[2; 6], &[2; 6]),
            (&[4, 3, 3, 2], &[3, 3, 3, 2, 1]),
        ];
        for (rows, cols) in cases {
            let split = split_profile(rows, cols, &mut CountCache::disabled());
            let layered = layered_top(rows, cols);
            let memo = ProfileSampler::bipartite(rows, cols).top();
            let strip = |p: &[BigUint]| {
                let mut v = p.to_vec();
                while v.last().is_some_and(Zero::is_zero) {
                    v.pop();
                }
                v
            };
            assert_eq!(strip(&split), strip(&layered), "{rows:?} {cols:?}");
            assert_eq!(strip(&split), strip(&memo), "{rows:?} {cols:?}");
        }
    }

    #[test]
    fn loopless_small_counts() {
        // d = (2,2): the double edge only
        assert_eq!(*ProfileSampler::loopless(&[2, 2]).top(), vec![0u32.into(), 0u32.into(), 1u32.into()]);
        // d = (1,1,1,1): three matchings
        assert_eq!(*ProfileSampler::loopless(&[1, 1, 1, 1]).top(), vec![BigUint::from(3u32)]);
        // d = (2,2,2): the triangle only
        let p = ProfileSampler::loopless(&[2, 2, 2]).top();
        assert_eq!(p[0], 1u32.into());
        assert!(p.iter().skip(1).all(Zero::is_zero));
    }

    #[test]
    fn sampler_hits_requested_multiplicity() {
        let mut s = ProfileSampler::bipartite(&[3, 2, 2, 1], &[2, 2, 2, 2]);
        let mut src = BitSource::new(9);
        let top = s.top();
        for (t, n) in top.iter().enumerate() {
            if n.is_zero() {
                assert!(s.sample(t as u64, &mut src).is_err());
                continue;
            }
            for _ in 0..10 {
                let g = s.sample(t as u64, &mut src).unwrap();
                assert_eq!(g.multiple_total(), t as u64);
                assert!(g.is_complete());
                g.audit().unwrap();
            }
        }
        let mut l = ProfileSampler::loopless(&[3, 3, 2, 2, 2]);
        let top = l.top();
        for (t, n) in top.iter().enumerate() {
            if !n.is_zero() {
                let g = l.sample(t as u64, &mut src).unwrap();
                assert_eq!(g.multiple_total(), t as u64);
                g.audit().unwrap();
            }
        }
    }
}
