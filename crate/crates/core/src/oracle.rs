//! Ground truth by exhaustive enumeration, for tests and the `verify`
//! command: all tables (or loopless multigraphs) of a tiny instance, exact
//! stratum censuses, chi-square goodness of fit, and parameter fixtures
//! whose bound inequalities are checked against every graph.
//!
//! Nothing here reuses the sampler's graph structure or counting code.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::exactprob::{ratio, Rational};
use crate::params::{default_eps_min, Beta, ParameterSet, Profile, Stratum, TableBounds, Variant};

/// A table (bipartite) or a symmetric adjacency matrix (loopless).
pub type Table = Vec<Vec<u32>>;

/// All nonnegative integer matrices with row sums `rows` and column sums
/// `cols`, in lexicographic order of their rows. Fails with `TooLarge`
/// once more than `cap` tables have been found.
pub fn enumerate_tables(rows: &[u32], cols: &[u32], cap: usize) -> Result<Vec<Table>> {
    let rs: u64 = rows.iter().map(|&x| u64::from(x)).sum();
    let cs: u64 = cols.iter().map(|&x| u64::from(x)).sum();
    if rs != cs {
        return Err(Error::UnequalSums { rows: rs, cols: cs });
    }
    let mut out = Vec::new();
    let mut current = vec![vec![0u32; cols.len()]; rows.len()];
    let mut caps = cols.to_vec();
    fill_table(rows, &mut caps, 0, 0, rows.first().copied().unwrap_or(0), &mut current, &mut out, cap)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn fill_table(
    rows: &[u32],
    caps: &mut Vec<u32>,
    r: usize,
    j: usize,
    left: u32,
    current: &mut Table,
    out: &mut Vec<Table>,
    cap: usize,
) -> Result<()> {
    if r == rows.len() {
        if caps.iter().all(|&c| c == 0) {
            if out.len() == cap {
                return Err(Error::TooLarge(format!("more than {cap} tables")));
            }
            out.push(current.clone());
        }
        return Ok(());
    }
    if j == caps.len() {
        if left == 0 {
            let next = rows.get(r + 1).copied().unwrap_or(0);
            fill_table(rows, caps, r + 1, 0, next, current, out, cap)?;
        }
        return Ok(());
    }
    let room: u32 = caps[j..].iter().sum();
    if room < left {
        return Ok(());
    }
    for v in 0..=left.min(caps[j]) {
        current[r][j] = v;
        caps[j] -= v;
        fill_table(rows, caps, r, j + 1, left - v, current, out, cap)?;
        caps[j] += v;
    }
    current[r][j] = 0;
    Ok(())
}

/// All loopless multigraphs with the given degrees, as symmetric adjacency
/// matrices with zero diagonal.
pub fn enumerate_loopless(degrees: &[u32], cap: usize) -> Result<Vec<Table>> {
    let n = degrees.len();
    let mut out = Vec::new();
    let mut adj = vec![vec![0u32; n]; n];
    let mut left = degrees.to_vec();
    fill_loopless(&mut left, 0, 1, &mut adj, &mut out, cap)?;
    Ok(out)
}

fn fill_loopless(
    left: &mut Vec<u32>,
    a: usize,
    b: usize,
    adj: &mut Table,
    out: &mut Vec<Table>,
    cap: usize,
) -> Result<()> {
    let n = left.len();
    if a + 1 >= n {
        if left.iter().all(|&x| x == 0) {
            if out.len() == cap {
                return Err(Error::TooLarge(format!("more than {cap} multigraphs")));
            }
            out.push(adj.clone());
        }
        return Ok(());
    }
    if b == n {
        if left[a] == 0 {
            fill_loopless(left, a + 1, a + 2, adj, out, cap)?;
        }
        return Ok(());
    }
    for v in 0..=left[a].min(left[b]) {
        adj[a][b] = v;
        adj[b][a] = v;
        left[a] -= v;
        left[b] -= v;
        fill_loopless(left, a, b + 1, adj, out, cap)?;
        left[a] += v;
        left[b] += v;
    }
    adj[a][b] = 0;
    adj[b][a] = 0;
    Ok(())
}

/// Stratum vector `m[k]` = number of entries equal to `k`, for
/// `k = 0..=delta` with `m[0] = m[1] = 0`.
pub fn table_stratum(t: &Table, delta: u32) -> Vec<u32> {
    let mut m = vec![0u32; delta.max(2) as usize + 1];
    for row in t {
        for &v in row {
            if v >= 2 {
                m[v as usize] += 1;
            }
        }
    }
    m
}

/// Stratum vector of a symmetric adjacency matrix (each edge once).
pub fn loopless_stratum(adj: &Table, delta: u32) -> Vec<u32> {
    let mut m = vec![0u32; delta.max(2) as usize + 1];
    for (a, row) in adj.iter().enumerate() {
        for &v in &row[a + 1..] {
            if v >= 2 {
                m[v as usize] += 1;
            }
        }
    }
    m
}

fn s_of(m: &[u32]) -> u64 {
    m.iter().enumerate().map(|(k, &c)| k as u64 * u64::from(c)).sum()
}

fn level_of(m: &[u32]) -> usize {
    (2..m.len()).rev().find(|&k| m[k] > 0).unwrap_or(2)
}

/// `|H_m|` for every stratum that occurs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Census {
    pub delta: u32,
    pub strata: BTreeMap<Vec<u32>, u64>,
}

impl Census {
    pub fn of_tables(tables: &[Table], delta: u32) -> Self {
        Self::collect(tables.iter().map(|t| table_stratum(t, delta)), delta)
    }

    pub fn of_loopless(graphs: &[Table], delta: u32) -> Self {
        Self::collect(graphs.iter().map(|g| loopless_stratum(g, delta)), delta)
    }

    fn collect(it: impl Iterator<Item = Vec<u32>>, delta: u32) -> Self {
        let mut strata = BTreeMap::new();
        for m in it {
            *strata.entry(m).or_insert(0) += 1;
        }
        Self { delta, strata }
    }

    pub fn total(&self) -> u64 {
        self.strata.values().sum()
    }

    /// `|H_m|`.
    pub fn count(&self, m: &[u32]) -> u64 {
        self.strata.get(m).copied().unwrap_or(0)
    }

    /// Number of graphs with total multiplicity at least `t0`.
    pub fn tail(&self, t0: u64) -> u64 {
        self.strata
            .iter()
            .filter(|(m, _)| s_of(m) >= t0)
            .map(|(_, &c)| c)
            .sum()
    }

    /// `|H⁺_m|`: graphs in strata `m' ≠ m` below `t0` that agree with `m`
    /// below `ℓ(m)` and dominate it from `ℓ(m)` on.
    pub fn h_plus(&self, m: &[u32], t0: u64) -> u64 {
        let l = level_of(m);
        self.strata
            .iter()
            .filter(|(mp, _)| {
                mp.as_slice() != m
                    && s_of(mp) < t0
                    && mp[..l] == m[..l]
                    && mp[l..].iter().zip(&m[l..]).all(|(a, b)| a >= b)
            })
            .map(|(_, &c)| c)
            .sum()
    }
}

/// `|H_m|` for every stratum of the tables in `tables`.
pub fn stratum_census(tables: &[Table], delta: u32) -> Census {
    Census::of_tables(tables, delta)
}

/// Result of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Total variation distance between the empirical and exact laws.
    pub tv_distance: f64,
    /// `3 √(k / (2N))`, three times the typical TV sampling noise.
    pub tv_alarm: f64,
}

/// Chi-square test of `observed` against `expected` probabilities.
/// Every expected count must be at least 5.
pub fn chi_square_uniform(observed: &[u64], expected: &[f64]) -> Result<ChiSquare> {
    if observed.len() != expected.len() || observed.is_empty() {
        return Err(Error::InsufficientSamples("outcome lists differ in length".into()));
    }
    let n: u64 = observed.iter().sum();
    let nf = n as f64;
    let mut stat = 0.0;
    let mut tv = 0.0;
    for (&o, &p) in observed.iter().zip(expected) {
        let e = p * nf;
        if e < 5.0 {
            return Err(Error::InsufficientSamples(format!("{e:.2}")));
        }
        stat += (o as f64 - e).powi(2) / e;
        tv += (o as f64 / nf - p).abs();
    }
    let dof = observed.len() - 1;
    let p_value = if dof == 0 {
        1.0
    } else {
        ChiSquared::new(dof as f64)
            .map_err(|e| Error::InsufficientSamples(e.to_string()))?
            .sf(stat)
    };
    Ok(ChiSquare {
        statistic: stat,
        dof,
        p_value,
        tv_distance: tv / 2.0,
        tv_alarm: 3.0 * (observed.len() as f64 / (2.0 * nf)).sqrt(),
    })
}

/// Uniform expectation helper: counts per outcome in a fixed order.
pub fn tally<T: Ord + Clone>(outcomes: &[T], samples: impl IntoIterator<Item = T>) -> Result<Vec<u64>> {
    let index: BTreeMap<T, usize> = outcomes.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
    let mut counts = vec![0u64; outcomes.len()];
    for s in samples {
        let i = index
            .get(&s)
            .ok_or_else(|| Error::InvariantViolation("sample outside the enumerated set".into()))?;
        counts[*i] += 1;
    }
    Ok(counts)
}

/// Which instance a fixture describes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instance {
    Bipartite { rows: Vec<u32>, cols: Vec<u32> },
    Loopless { degrees: Vec<u32> },
}

impl Instance {
    fn profile(&self) -> Result<Profile> {
        Ok(match self {
            Instance::Bipartite { rows, cols } => {
                Profile::bipartite(&crate::marginals::Marginals::validate(rows, cols)?)
            }
            Instance::Loopless { degrees } => Profile::loopless(degrees),
        })
    }

    fn delta(&self) -> u32 {
        match self {
            Instance::Bipartite { rows, cols } => rows.iter().chain(cols).copied().max().unwrap_or(0),
            Instance::Loopless { degrees } => degrees.iter().copied().max().unwrap_or(0),
        }
    }

    fn total(&self) -> u64 {
        match self {
            Instance::Bipartite { rows, .. } => rows.iter().map(|&x| u64::from(x)).sum(),
            Instance::Loopless { degrees } => degrees.iter().map(|&x| u64::from(x)).sum(),
        }
    }

    /// Every graph, in the symmetric whole-vertex-set form.
    fn graphs(&self, cap: usize) -> Result<Vec<Adj>> {
        Ok(match self {
            Instance::Bipartite { rows, cols } => enumerate_tables(rows, cols, cap)?
                .iter()
                .map(|t| Adj::from_table(t))
                .collect(),
            Instance::Loopless { degrees } => enumerate_loopless(degrees, cap)?
                .into_iter()
                .map(Adj::from_symmetric)
                .collect(),
        })
    }
}

/// Whole-vertex-set adjacency for the anchor checks; bipartite rows come
/// first, then columns.
#[derive(Debug, Clone)]
struct Adj {
    n: usize,
    rows: Option<usize>,
    a: Vec<u32>,
}

impl Adj {
    fn from_table(t: &Table) -> Self {
        let (m, n) = (t.len(), t.first().map_or(0, Vec::len));
        let mut a = vec![0; (m + n) * (m + n)];
        for (i, row) in t.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                a[i * (m + n) + m + j] = v;
                a[(m + j) * (m + n) + i] = v;
            }
        }
        Self {
            n: m + n,
            rows: Some(m),
            a,
        }
    }

    fn from_symmetric(t: Table) -> Self {
        let n = t.len();
        Self {
            n,
            rows: None,
            a: t.into_iter().flatten().collect(),
        }
    }

    fn mult(&self, x: usize, y: usize) -> u32 {
        self.a[x * self.n + y]
    }

    fn is_row(&self, x: usize) -> bool {
        self.rows.map_or(true, |m| x < m)
    }

    fn stratum(&self, delta: u32) -> Vec<u32> {
        let mut m = vec![0u32; delta.max(2) as usize + 1];
        for x in 0..self.n {
            for y in x + 1..self.n {
                let v = self.mult(x, y);
                if v >= 2 {
                    m[v as usize] += 1;
                }
            }
        }
        m
    }

    /// Oriented multiplicity-`k` edges `(u1, v1)`: row first when
    /// bipartite, both orientations when loopless.
    fn anchors(&self, k: u32) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for x in 0..self.n {
            for y in 0..self.n {
                if self.mult(x, y) != k {
                    continue;
                }
                match self.rows {
                    Some(_) if self.is_row(x) => out.push((x, y)),
                    Some(_) => {}
                    None => out.push((x, y)),
                }
            }
        }
        out
    }

    /// Pairs `(u, v)` that can extend a reverse anchor: a single edge with
    /// `u` on `v1`'s side, `u1 u` and `v1 v` non-edges, and neither vertex
    /// used yet.
    fn extensions(&self, u1: usize, v1: usize, used: &[usize]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in 0..self.n {
                if self.rows.is_some() && (self.is_row(u) || !self.is_row(v)) {
                    continue;
                }
                if self.mult(u, v) == 1
                    && !used.contains(&u)
                    && !used.contains(&v)
                    && self.mult(u1, u) == 0
                    && self.mult(v1, v) == 0
                {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Forward `k`-switchings out of this graph: `u1` a row (any vertex
    /// when loopless) with `k` distinct single-edge neighbours in order,
    /// `v1` likewise on the other side, all `2(k+1)` vertices distinct,
    /// `u1 v1` and each `u_i v_i` non-edges.
    fn forward_switchings(&self, k: usize) -> u64 {
        let singles = |c: usize| -> Vec<usize> { (0..self.n).filter(|&w| self.mult(c, w) == 1).collect() };
        let mut total = 0u64;
        for u1 in 0..self.n {
            if self.rows.is_some() && !self.is_row(u1) {
                continue;
            }
            for v1 in 0..self.n {
                if v1 == u1 || self.mult(u1, v1) != 0 {
                    continue;
                }
                if self.rows.is_some() && self.is_row(v1) {
                    continue;
                }
                let (su, sv) = (singles(u1), singles(v1));
                let mut used = vec![u1, v1];
                total += self.forward_tuples(&su, &sv, k, &mut used);
            }
        }
        total
    }

    fn forward_tuples(&self, su: &[usize], sv: &[usize], k: usize, used: &mut Vec<usize>) -> u64 {
        if k == 0 {
            return 1;
        }
        let mut count = 0;
        for &u in su {
            if used.contains(&u) {
                continue;
            }
            for &v in sv {
                if v == u || used.contains(&v) || self.mult(u, v) != 0 {
                    continue;
                }
                used.push(u);
                used.push(v);
                count += self.forward_tuples(su, sv, k - 1, used);
                used.pop();
                used.pop();
            }
        }
        count
    }

    /// Walks every partial reverse anchor of every multiplicity-`k` edge
    /// and records the extension count at each depth `i = 1..=k`.
    fn reverse_counts(&self, k: u32, visit: &mut dyn FnMut(usize, u64)) {
        for (u1, v1) in self.anchors(k) {
            let mut used = vec![u1, v1];
            self.reverse_walk(u1, v1, 1, k as usize, &mut used, visit);
        }
    }

    fn reverse_walk(
        &self,
        u1: usize,
        v1: usize,
        depth: usize,
        k: usize,
        used: &mut Vec<usize>,
        visit: &mut dyn FnMut(usize, u64),
    ) {
        let ext = self.extensions(u1, v1, used);
        visit(depth, ext.len() as u64);
        if depth == k {
            return;
        }
        for (u, v) in ext {
            used.push(u);
            used.push(v);
            self.reverse_walk(u1, v1, depth + 1, k, used, visit);
            used.pop();
            used.pop();
        }
    }
}

/// A parameter set together with the evidence that its inequalities hold
/// on every graph of the instance.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub instance: Instance,
    pub params: ParameterSet,
    pub census: Census,
    pub report: FixtureReport,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FixtureReport {
    pub graphs: usize,
    /// Forward switching counts compared with `f̄`.
    pub forward_checks: u64,
    /// Partial reverse anchors compared with `b̲` and `M`.
    pub reverse_checks: u64,
    /// Strata whose transition mass was checked.
    pub mass_checks: u64,
    /// `(m, β_m, |H⁺_m|, |H_m|)` for every populated stratum below `t0`.
    pub lemma4: Vec<(Vec<u32>, Rational, u64, u64)>,
    /// `R / |H_0|` and `B̂`.
    pub tail_ratio: Rational,
    pub b_hat: Rational,
}

const FIXTURE_CAP: usize = 200_000;

/// Paper-formula parameters with `t0` imposed, accepted only if every
/// bound inequality holds on the enumerated instance.
pub fn forced_parameter_fixture(instance: Instance, t0: u64) -> Result<Fixture> {
    let profile = instance.profile()?;
    let params = ParameterSet::with_forced_t0(profile, t0, default_eps_min())?;
    verify(instance, params)
}

/// Parameters whose `b̲_k(m', i)` are the exact minima of the reverse
/// counts over all partial anchors, with `β` built from them and
/// `B̂ = R / |H_0|`; accepted only after the same verification.
pub fn tabulated_fixture(instance: Instance, t0: u64) -> Result<Fixture> {
    let table = exact_table_bounds(&instance, t0)?;
    table_fixture(instance, t0, table)
}

/// Verifies caller-supplied table bounds the same way.
pub fn table_fixture(instance: Instance, t0: u64, table: TableBounds) -> Result<Fixture> {
    let params = ParameterSet::with_table(instance.profile()?, t0, table)?;
    verify(instance, params)
}

/// Exact minima of the reverse counts over all partial anchors of every
/// populated stratum below `t0`, with `B̂ = R / |H_0|`.
pub fn exact_table_bounds(instance: &Instance, t0: u64) -> Result<TableBounds> {
    if t0 == 0 {
        return Err(Error::FixtureInvalid("t0 must be positive".into()));
    }
    let delta = instance.delta();
    let graphs = instance.graphs(FIXTURE_CAP)?;
    let mut lower: HashMap<Stratum, Vec<u64>> = HashMap::new();
    let mut populated: Vec<Stratum> = Vec::new();
    let mut seen = BTreeMap::new();
    let mut tail = 0u64;
    let mut simple = 0u64;
    for g in &graphs {
        let m = g.stratum(delta);
        let s = s_of(&m);
        if s == 0 {
            simple += 1;
        }
        if s >= t0 {
            tail += 1;
            continue;
        }
        let st = to_stratum(&m, delta);
        if seen.insert(m.clone(), ()).is_none() {
            populated.push(st.clone());
        }
        if s == 0 {
            continue;
        }
        let k = level_of(&m) as u32;
        let row = lower.entry(st).or_insert_with(|| vec![u64::MAX; k as usize]);
        g.reverse_counts(k, &mut |depth, c| {
            row[depth - 1] = row[depth - 1].min(c);
        });
    }
    if simple == 0 {
        return Err(Error::FixtureInvalid("no simple realization".into()));
    }
    Ok(TableBounds {
        lower,
        populated,
        b_hat: ratio(tail, simple),
    })
}

fn to_stratum(m: &[u32], delta: u32) -> Stratum {
    let counts: Vec<(u32, u32)> = m.iter().enumerate().skip(2).map(|(k, &c)| (k as u32, c)).collect();
    Stratum::from_counts(delta, &counts)
}

/// Exhaustive check of the forward bound, the reverse bounds, the
/// transition-mass bound, `β_m >= |H⁺_m| / |H_m|`, and `B̂ >= R / |H_0|`.
fn verify(instance: Instance, params: ParameterSet) -> Result<Fixture> {
    let refuse = |msg: String| Err(Error::FixtureInvalid(msg));
    let delta = instance.delta();
    let total = instance.total();
    let t0 = params.t0();
    if t0 == 0 {
        return refuse("t0 = 0 leaves Gen unused".into());
    }
    let graphs = instance.graphs(FIXTURE_CAP)?;
    let strata: Vec<Vec<u32>> = graphs.iter().map(|g| g.stratum(delta)).collect();
    let census = Census::collect(strata.iter().cloned(), delta);
    let mut report = FixtureReport {
        graphs: graphs.len(),
        ..FixtureReport::default()
    };
    for (g, m) in graphs.iter().zip(&strata) {
        let s = s_of(m);
        if s >= t0 {
            continue;
        }
        let st = to_stratum(m, delta);
        // forward counts against f̄
        for k in level_of(m)..=delta as usize {
            if s + k as u64 >= t0 {
                continue;
            }
            report.forward_checks += 1;
            let f = g.forward_switchings(k);
            if BigUint::from(f) > params.f_bar(k as u32) {
                return refuse(format!("f_{k}(G) = {f} exceeds f̄ in stratum {m:?}"));
            }
        }
        if s == 0 {
            continue;
        }
        let k = level_of(m) as u32;
        let mut bad = None;
        g.reverse_counts(k, &mut |depth, c| {
            report.reverse_checks += 1;
            let lo = params.b_under(k, &st, depth as u32);
            if bad.is_none() && (lo <= 0 || i128::from(c) < lo || c > total) {
                bad = Some(format!("b_{k}(G', V_{depth}) = {c} outside [{lo}, {total}] in {m:?}"));
            }
        });
        if let Some(msg) = bad {
            return refuse(msg);
        }
    }
    for (m, &count) in &census.strata {
        if s_of(m) >= t0 {
            continue;
        }
        let st = to_stratum(m, delta);
        report.mass_checks += 1;
        if params.transition_mass(&st) > Rational::one() {
            return refuse(format!("transition mass out of {m:?} exceeds 1"));
        }
        let beta = match params.beta(&st) {
            Beta::Value(b) => b,
            Beta::NegOne => return refuse(format!("no β for populated stratum {m:?}")),
        };
        let hp = census.h_plus(m, t0);
        if beta < ratio(hp, count) {
            return refuse(format!("β = {beta} below |H⁺|/|H| = {hp}/{count} at {m:?}"));
        }
        report.lemma4.push((m.clone(), beta, hp, count));
    }
    let simple = census.count(&vec![0; delta.max(2) as usize + 1]);
    if simple == 0 {
        return refuse("no simple realization".into());
    }
    let tail_ratio = ratio(census.tail(t0), simple);
    let b_hat = params.b_hat().cloned().unwrap_or_else(Rational::zero);
    if b_hat < tail_ratio {
        return refuse(format!("B̂ = {b_hat} below R/|H0| = {tail_ratio}"));
    }
    report.tail_ratio = tail_ratio;
    report.b_hat = b_hat;
    Ok(Fixture {
        instance,
        params,
        census,
        report,
    })
}

/// Exact probability of each stratum under uniform sampling.
pub fn stratum_probabilities(census: &Census) -> Vec<(Vec<u32>, Rational)> {
    let total = census.total();
    census
        .strata
        .iter()
        .map(|(m, &c)| (m.clone(), ratio(c, total)))
        .collect()
}

/// Variant of an instance, for callers that only hold an [`Instance`].
pub fn variant_of(instance: &Instance) -> Variant {
    match instance {
        Instance::Bipartite { .. } => Variant::Bipartite,
        Instance::Loopless { .. } => Variant::Loopless,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_enumeration_examples() {
        assert_eq!(enumerate_tables(&[1, 1], &[1, 1], 100).unwrap().len(), 2);
        assert_eq!(enumerate_tables(&[2, 2], &[2, 2], 100).unwrap().len(), 3);
        assert_eq!(enumerate_tables(&[2, 1], &[2, 1], 100).unwrap().len(), 2);
        assert!(matches!(enumerate_tables(&[2, 2], &[2, 2], 2), Err(Error::TooLarge(_))));
    }

    #[test]
    fn loopless_enumeration_examples() {
        assert_eq!(enumerate_loopless(&[2, 2], 10).unwrap(), vec![vec![vec![0, 2], vec![2, 0]]]);
        assert_eq!(enumerate_loopless(&[1, 1, 1, 1], 10).unwrap().len(), 3);
        assert_eq!(enumerate_loopless(&[2, 2, 2], 10).unwrap().len(), 1);
    }

    #[test]
    fn census_examples() {
        let t = enumerate_tables(&[2, 2], &[2, 2], 100).unwrap();
        let c = Census::of_tables(&t, 2);
        assert_eq!(c.count(&[0, 0, 0]), 1);
        assert_eq!(c.count(&[0, 0, 2]), 2);
        assert_eq!(c.total(), 3);
        let t = enumerate_tables(&[1, 1, 1], &[1, 1, 1], 100).unwrap();
        let c = Census::of_tables(&t, 2);
        assert_eq!(c.strata.len(), 1);
        assert_eq!(c.count(&[0, 0, 0]), 6);
    }

    #[test]
    fn h_plus_agrees_with_precedes() {
        let tables = enumerate_tables(&[3, 3, 2, 2], &[3, 3, 2, 2], 100_000).unwrap();
        let census = Census::of_tables(&tables, 3);
        for t0 in [4u64, 7, 11] {
            for m in census.strata.keys() {
                let sm = to_stratum(m, 3);
                let via_precedes: u64 = census
                    .strata
                    .iter()
                    .filter(|(mp, _)| s_of(mp) < t0 && sm.precedes(&to_stratum(mp, 3)))
                    .map(|(_, &c)| c)
                    .sum();
                assert_eq!(census.h_plus(m, t0), via_precedes, "{m:?} t0 = {t0}");
            }
        }
    }

    #[test]
    fn chi_square_examples() {
        let r = chi_square_uniform(&[100, 100, 100], &[1.0 / 3.0; 3]).unwrap();
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert_eq!(r.tv_distance, 0.0);
        let r = chi_square_uniform(&[66_667, 33_333], &[0.5, 0.5]).unwrap();
        assert!(r.p_value < 1e-6);
        assert!(matches!(
            chi_square_uniform(&[1, 1], &[0.5, 0.5]),
            Err(Error::InsufficientSamples(_))
        ));
    }

    #[test]
    fn paper_fixture_is_refused_on_tiny_instances() {
        let inst = Instance::Bipartite {
            rows: vec![2, 2],
            cols: vec![2, 2],
        };
        assert!(matches!(forced_parameter_fixture(inst, 5), Err(Error::FixtureInvalid(_))));
        let inst = Instance::Bipartite {
            rows: vec![2; 4],
            cols: vec![2; 4],
        };
        assert!(matches!(forced_parameter_fixture(inst, 9), Err(Error::FixtureInvalid(_))));
    }

    #[test]
    fn overstated_bounds_are_refused() {
        let inst = Instance::Bipartite {
            rows: vec![2, 2, 2],
            cols: vec![2, 2, 2],
        };
        let good = exact_table_bounds(&inst, 3).unwrap();
        let mut high = good.clone();
        for row in high.lower.values_mut() {
            row[0] += 1;
        }
        assert!(matches!(table_fixture(inst.clone(), 3, high), Err(Error::FixtureInvalid(_))));
        let mut low_tail = good;
        low_tail.b_hat = low_tail.b_hat / Rational::from_integer(2.into());
        assert!(matches!(table_fixture(inst, 3, low_tail), Err(Error::FixtureInvalid(_))));
    }

    #[test]
    fn tabulated_fixtures_verify() {
        for (inst, t0) in [
            (
                Instance::Bipartite {
                    rows: vec![2, 2],
                    cols: vec![2, 2],
                },
                3,
            ),
            (
                Instance::Bipartite {
                    rows: vec![2, 2, 2],
                    cols: vec![2, 2, 2],
                },
                5,
            ),
            (
                Instance::Loopless {
                    degrees: vec![2; 6],
                },
                5,
            ),
        ] {
            let f = tabulated_fixture(inst.clone(), t0).unwrap_or_else(|e| panic!("{inst:?}: {e}"));
            assert_eq!(f.report.b_hat, f.report.tail_ratio);
            for (m, beta, hp, hm) in &f.report.lemma4 {
                assert!(beta >= &ratio(*hp, *hm), "{m:?}");
            }
        }
    }
}
