//! `Gen`: the stratum-index chain that grows multiple edges on a uniform
//! simple graph by switchings, with f-, b- and β-rejection.

use std::collections::HashMap;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::exactprob::{BitSource, Boundary};
use crate::marginals::falling_factorial_u128;
use crate::multigraph::{Anchor, MultiGraph};
use crate::params::{ParameterSet, Stratum, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rejection {
    /// The sampled star pair is not a valid switching.
    F,
    /// Incremental-relaxation reverse count exceeded its lower bound.
    B,
    /// Residual mass of the stratum chain.
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenOutcome {
    /// The graph passed in now holds the output.
    Output,
    Restart(Rejection),
}

/// Counters accumulated over many runs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GenStats {
    pub runs: u64,
    pub iterations: u64,
    pub outputs: u64,
    pub f_rejects: u64,
    pub b_rejects: u64,
    pub beta_rejects: u64,
    /// Point-list entries and cells visited while switching and counting.
    pub work: u64,
    /// Largest number of double edges reached in any run.
    pub max_doubles: u32,
    /// `visits[k]` = runs that reached `k` double edges (index capped).
    pub double_reach: Vec<u64>,
}

impl GenStats {
    pub fn record(&mut self, outcome: GenOutcome) {
        match outcome {
            GenOutcome::Output => self.outputs += 1,
            GenOutcome::Restart(Rejection::F) => self.f_rejects += 1,
            GenOutcome::Restart(Rejection::B) => self.b_rejects += 1,
            GenOutcome::Restart(Rejection::Beta) => self.beta_rejects += 1,
        }
    }

    pub fn merge(&mut self, other: &GenStats) {
        self.runs += other.runs;
        self.iterations += other.iterations;
        self.outputs += other.outputs;
        self.f_rejects += other.f_rejects;
        self.b_rejects += other.b_rejects;
        self.beta_rejects += other.beta_rejects;
        self.work += other.work;
        self.max_doubles = self.max_doubles.max(other.max_doubles);
        if self.double_reach.len() < other.double_reach.len() {
            self.double_reach.resize(other.double_reach.len(), 0);
        }
        for (a, b) in self.double_reach.iter_mut().zip(&other.double_reach) {
            *a += b;
        }
    }
}

/// Runtime checks of the bound inequalities, enabled for audits.
#[derive(Debug, Clone, Default)]
pub struct LemmaAudit {
    /// `b̲_k(m', i) <= b_k(G', V_i) <= M` for `i >= 1`.
    pub reverse_checks: u64,
    pub reverse_violations: u64,
    /// Transition mass out of each visited stratum is at most 1.
    pub mass_checks: u64,
    pub mass_violations: u64,
    /// `b̲_k(m + e_k) >= (m_k + 1)(εM)^k`, the form of the f̄/b̲ bound
    /// used by the runtime analysis (bipartite only).
    pub ratio_checks: u64,
    pub ratio_violations: u64,
    mass_seen: HashMap<Stratum, bool>,
}

impl LemmaAudit {
    pub fn violations(&self) -> u64 {
        self.reverse_violations + self.mass_violations + self.ratio_violations
    }

    fn check_stratum(&mut self, params: &ParameterSet, m: &Stratum) {
        self.mass_checks += 1;
        let ok = *self
            .mass_seen
            .entry(m.clone())
            .or_insert_with(|| params.transition_mass(m) <= num_traits::One::one());
        if !ok {
            self.mass_violations += 1;
        }
        if params.variant() != Variant::Bipartite || params.is_tabulated() {
            return;
        }
        let e = BigUint::from(params.eps_m().max(0) as u128);
        for k in m.level()..=params.max_degree() {
            let target = m.plus(k);
            if target.sum() >= params.t0() {
                continue;
            }
            self.ratio_checks += 1;
            let bound = BigUint::from(m.get(k) + 1) * e.pow(k);
            match params.b_under_product(k, &target) {
                Some(b) if b >= bound => {}
                _ => self.ratio_violations += 1,
            }
        }
    }
}

/// Centre-selection tables: prefix sums of `(d)_s` over each side.
#[derive(Debug, Clone)]
pub struct StarTables {
    sides: [Vec<u32>; 2],
    /// `cum[s][side]`, cumulative `(d)_s`.
    cum: Vec<[Vec<u64>; 2]>,
}

impl StarTables {
    pub fn new(g: &MultiGraph) -> Result<Self> {
        let ids: Vec<u32> = (0..g.vertex_count() as u32).collect();
        let sides = match g.variant() {
            Variant::Bipartite => {
                let (x, y) = ids.split_at(g.rows());
                [x.to_vec(), y.to_vec()]
            }
            Variant::Loopless => [ids.clone(), ids],
        };
        let delta = g.max_degree();
        let mut cum = vec![[Vec::new(), Vec::new()]; delta as usize + 1];
        for s in 2..=delta {
            for side in 0..2 {
                let mut acc = 0u64;
                let mut out = Vec::with_capacity(sides[side].len());
                for &v in &sides[side] {
                    let w = falling_factorial_u128(u64::from(g.degree(v)), s)
                        .and_then(|x| u64::try_from(x).ok())
                        .and_then(|x| acc.checked_add(x))
                        .ok_or_else(|| Error::TooLarge(format!("star count for s = {s}")))?;
                    acc = w;
                    out.push(acc);
                }
                cum[s as usize][side] = out;
            }
        }
        Ok(Self { sides, cum })
    }

    /// Number of `s`-stars on `side` (`S_s` or `T_s`).
    pub fn total(&self, s: u32, side: usize) -> u64 {
        self.cum
            .get(s as usize)
            .and_then(|c| c[side].last().copied())
            .unwrap_or(0)
    }

    fn centre(&self, s: u32, side: usize, src: &mut BitSource) -> u32 {
        let cum = &self.cum[s as usize][side];
        let r = src.below(*cum.last().expect("nonempty side"));
        let i = cum.partition_point(|&c| c <= r);
        self.sides[side][i]
    }
}

/// Shared read-only state for `Gen` runs on one instance.
#[derive(Debug, Clone)]
pub struct GenContext {
    pub params: ParameterSet,
    pub stars: StarTables,
}

impl GenContext {
    pub fn new(params: ParameterSet, template: &MultiGraph) -> Result<Self> {
        Ok(Self {
            stars: StarTables::new(template)?,
            params,
        })
    }
}

/// Draws an ordered star pair uniformly among the `f̄_s` pairs: a centre
/// `u1` with probability `(d(u1))_s / S_s`, then `s` distinct points of
/// `u1` in uniformly random order; likewise for `v1`.
pub fn sample_star_pair(
    g: &MultiGraph,
    stars: &StarTables,
    s: u32,
    src: &mut BitSource,
) -> Anchor {
    let mut anchor = Anchor::default();
    let (u1, u_pos) = star(g, stars, s, 0, src);
    let (v1, v_pos) = star(g, stars, s, 1, src);
    anchor.us = u_pos.iter().map(|&p| g.points(u1)[p as usize]).collect();
    anchor.vs = v_pos.iter().map(|&p| g.points(v1)[p as usize]).collect();
    anchor.u1 = u1;
    anchor.v1 = v1;
    anchor.u_pos = u_pos;
    anchor.v_pos = v_pos;
    anchor
}

fn star(g: &MultiGraph, stars: &StarTables, s: u32, side: usize, src: &mut BitSource) -> (u32, Vec<u32>) {
    let c = stars.centre(s, side, src);
    let d = g.degree(c);
    let mut idx: Vec<u32> = (0..d).collect();
    for j in 0..s as usize {
        let r = j + src.below_usize(d as usize - j);
        idx.swap(j, r);
    }
    idx.truncate(s as usize);
    (c, idx)
}

/// Whether the star pair names a switching that lands in `H_{m + e_s}`:
/// all `2(s+1)` vertices distinct, every `u1 u_i` and `v1 v_i` a single
/// edge, every `u_i v_i` a non-edge, and `u1 v1` a non-edge.
pub fn validate_anchor(g: &MultiGraph, anchor: &Anchor) -> bool {
    let mut vs = anchor.vertices();
    vs.sort_unstable();
    if vs.windows(2).any(|w| w[0] == w[1]) {
        return false;
    }
    if g.multiplicity(anchor.u1, anchor.v1) != 0 {
        return false;
    }
    anchor.us.iter().zip(&anchor.vs).all(|(&u, &v)| {
        g.multiplicity(anchor.u1, u) == 1
            && g.multiplicity(anchor.v1, v) == 1
            && g.multiplicity(u, v) == 0
    })
}

/// Reverse counts `b_s(G', V_i)` for `i = 0..=s` after `anchor` has been
/// applied. `i = 0` counts the anchorings of the new multiple edge; each
/// `i >= 1` counts the simple (ordered, when loopless) edges `uv` disjoint
/// from `V_i` with `u1 u` and `v1 v` non-edges.
pub fn b_factors(g: &MultiGraph, anchor: &Anchor, work: &mut u64) -> Vec<u64> {
    let s = anchor.multiplicity();
    let mut out = Vec::with_capacity(s as usize + 1);
    out.push(g.variant().orientations() * g.registry(s).len() as u64);
    let mut excluded: Vec<u64> = Vec::new();
    let n = g.vertex_count() as u64;
    let key = |a: u32, b: u32| u64::from(a) * n + u64::from(b);
    let loopless = g.variant() == Variant::Loopless;
    // bipartite edges are keyed (row, column); loopless ones as ordered (u, v)
    let push_simple_at = |excluded: &mut Vec<u64>, w: u32, work: &mut u64| {
        for &x in g.points(w) {
            *work += 1;
            if g.multiplicity(w, x) == 1 {
                if loopless {
                    excluded.push(key(w, x));
                    excluded.push(key(x, w));
                } else if g.is_row(w) {
                    excluded.push(key(w, x));
                } else {
                    excluded.push(key(x, w));
                }
            }
        }
    };
    let nbrs = |c: u32| -> Vec<u32> {
        let mut v = g.points(c).to_vec();
        v.sort_unstable();
        v.dedup();
        v
    };
    // edges whose u-end touches N(u1)
    for a in nbrs(anchor.u1) {
        for &b in g.points(a) {
            *work += 1;
            if g.multiplicity(a, b) == 1 {
                excluded.push(if loopless || !g.is_row(a) { key_uv(g, a, b, n) } else { key(a, b) });
            }
        }
    }
    // edges whose v-end touches N(v1)
    for b in nbrs(anchor.v1) {
        for &a in g.points(b) {
            *work += 1;
            if g.multiplicity(a, b) == 1 {
                excluded.push(if loopless { key(a, b) } else { key_uv(g, a, b, n) });
            }
        }
    }
    push_simple_at(&mut excluded, anchor.u1, work);
    push_simple_at(&mut excluded, anchor.v1, work);
    let total = if loopless {
        2 * g.simple_edge_count()
    } else {
        g.simple_edge_count()
    };
    let count_now = |excluded: &mut Vec<u64>| -> u64 {
        excluded.sort_unstable();
        excluded.dedup();
        total - excluded.len() as u64
    };
    out.push(count_now(&mut excluded));
    for i in 0..s as usize - 1 {
        push_simple_at(&mut excluded, anchor.us[i], work);
        push_simple_at(&mut excluded, anchor.vs[i], work);
        out.push(count_now(&mut excluded));
    }
    out
}

/// Key of a bipartite edge as (row, column), or of an ordered loopless
/// pair `(u, v)` where `u` is the end adjacent to `u1`.
fn key_uv(g: &MultiGraph, a: u32, b: u32, n: u64) -> u64 {
    if g.variant() == Variant::Loopless {
        return u64::from(a) * n + u64::from(b);
    }
    let (x, y) = if g.is_row(a) { (a, b) } else { (b, a) };
    u64::from(x) * n + u64::from(y)
}

/// Acceptance probability `Π_{i=1..s} b̲_s(m', i) / b_i`, after checking
/// `b̲ <= b <= M` for every factor.
pub fn b_acceptance(
    factors: &[u64],
    m_prime: &Stratum,
    s: u32,
    params: &ParameterSet,
    audit: Option<&mut LemmaAudit>,
) -> Result<Boundary> {
    let mut num = BigUint::from(1u32);
    let mut den = BigUint::from(1u32);
    let mut violation = None;
    let upper = params.total();
    if factors[0] != params.b_under(s, m_prime, 0) as u64 {
        violation = Some(format!(
            "reverse count {} of the new multiple edge differs from b̲(m', 0)",
            factors[0]
        ));
    }
    let mut checks = 0u64;
    let mut bad = 0u64;
    for (i, &b) in factors.iter().enumerate().skip(1) {
        let lower = params.b_under(s, m_prime, i as u32);
        checks += 1;
        if lower <= 0 || i128::from(b) < lower || b > upper {
            bad += 1;
            violation.get_or_insert(format!(
                "b_{s}(G', V_{i}) = {b} outside [{lower}, {upper}] at S(m') = {}",
                m_prime.sum()
            ));
            continue;
        }
        num *= lower as u128;
        den *= b;
    }
    if let Some(a) = audit {
        a.reverse_checks += checks;
        a.reverse_violations += bad;
    }
    if let Some(msg) = violation {
        return Err(Error::InvariantViolation(msg));
    }
    Boundary::from_ratio(num, den)
}

/// One run of `Gen` on the simple graph `g` (modified in place).
pub fn run_gen(
    g: &mut MultiGraph,
    ctx: &GenContext,
    src: &mut BitSource,
    stats: &mut GenStats,
    mut audit: Option<&mut LemmaAudit>,
) -> Result<GenOutcome> {
    let params = &ctx.params;
    debug_assert!(g.stratum().is_zero(), "Gen starts from a simple graph");
    stats.runs += 1;
    let mut doubles = 0u32;
    let note_doubles = |stats: &mut GenStats, d: u32| {
        stats.max_doubles = stats.max_doubles.max(d);
        let i = d as usize;
        if stats.double_reach.len() <= i {
            stats.double_reach.resize(i + 1, 0);
        }
        stats.double_reach[i] += 1;
    };
    note_doubles(stats, 0);
    let outcome = loop {
        let m = g.stratum().clone();
        if m.sum() >= params.t0() {
            return Err(Error::InvariantViolation(format!(
                "Gen crossed t0 = {} (S(m) = {})",
                params.t0(),
                m.sum()
            )));
        }
        stats.iterations += 1;
        if let Some(a) = audit.as_deref_mut() {
            a.check_stratum(params, &m);
        }
        let step = params.step(&m)?;
        if src.bernoulli_prepared(&step.output) {
            break GenOutcome::Output;
        }
        let Some(choice) = src.draw(&step.choices) else {
            break GenOutcome::Restart(Rejection::Beta);
        };
        let s = step.levels[choice];
        let anchor = sample_star_pair(g, &ctx.stars, s, src);
        stats.work += 2 * u64::from(s);
        if !validate_anchor(g, &anchor) {
            break GenOutcome::Restart(Rejection::F);
        }
        g.apply_switching(&anchor);
        let factors = b_factors(g, &anchor, &mut stats.work);
        let accept = b_acceptance(&factors, g.stratum(), s, params, audit.as_deref_mut())?;
        if !src.bernoulli_prepared(&accept) {
            break GenOutcome::Restart(Rejection::B);
        }
        if s == 2 {
            doubles += 1;
            note_doubles(stats, doubles);
        }
    };
    stats.record(outcome);
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginals::Marginals;
    use crate::params::{default_eps_min, Profile};
    use crate::simplegen::Seeder;

    fn switchable() -> (MultiGraph, Anchor) {
        let mut g = MultiGraph::bipartite(&[2, 2, 2], &[2, 2, 2]);
        for &(x, y) in &[(0, 4), (0, 5), (1, 3), (1, 5), (2, 3), (2, 4)] {
            g.insert(x, y, 1);
        }
        let anchor = Anchor {
            u1: 0,
            v1: 3,
            u_pos: vec![0, 1],
            v_pos: vec![0, 1],
            us: vec![4, 5],
            vs: vec![1, 2],
        };
        (g, anchor)
    }

    #[test]
    fn valid_anchor_on_six_cycle() {
        let (g, anchor) = switchable();
        assert!(validate_anchor(&g, &anchor));
        let mut h = g.clone();
        h.apply_switching(&anchor);
        assert_eq!(h.stratum().get(2), 1);
    }

    #[test]
    fn anchor_rejections() {
        let (g, anchor) = switchable();
        // v1 adjacent to u1
        let mut bad = anchor.clone();
        bad.v1 = 4;
        assert!(!validate_anchor(&g, &bad));
        // repeated vertex across the stars
        let mut bad = anchor.clone();
        bad.vs = vec![1, 1];
        assert!(!validate_anchor(&g, &bad));
        // two points on the same double edge
        let mut d = MultiGraph::bipartite(&[2, 1, 1], &[2, 1, 1]);
        d.insert(0, 3, 2);
        d.insert(1, 4, 1);
        d.insert(2, 5, 1);
        let a = Anchor {
            u1: 0,
            v1: 4,
            u_pos: vec![0, 1],
            v_pos: vec![0, 0],
            us: vec![3, 3],
            vs: vec![1, 1],
        };
        assert!(!validate_anchor(&d, &a));
    }

    /// Direct reading of the reverse-count definition, quadratic in the
    /// number of vertices.
    fn reverse_counts_by_scan(g: &MultiGraph, anchor: &Anchor) -> Vec<u64> {
        let s = anchor.multiplicity() as usize;
        let mut out = vec![g.variant().orientations() * g.registry(s as u32).len() as u64];
        let nv = g.vertex_count() as u32;
        for i in 1..=s {
            let mut used = vec![anchor.u1, anchor.v1];
            for j in 0..i - 1 {
                used.push(anchor.us[j]);
                used.push(anchor.vs[j]);
            }
            let mut count = 0;
            for u in 0..nv {
                for v in 0..nv {
                    let sides_ok = match g.variant() {
                        Variant::Bipartite => !g.is_row(u) && g.is_row(v),
                        Variant::Loopless => true,
                    };
                    if sides_ok
                        && g.multiplicity(u, v) == 1
                        && !used.contains(&u)
                        && !used.contains(&v)
                        && g.multiplicity(anchor.u1, u) == 0
                        && g.multiplicity(anchor.v1, v) == 0
                    {
                        count += 1;
                    }
                }
            }
            out.push(count);
        }
        out
    }

    #[test]
    fn b_factors_match_quadratic_scan() {
        let (mut g, anchor) = switchable();
        g.apply_switching(&anchor);
        let mut work = 0;
        assert_eq!(b_factors(&g, &anchor, &mut work), reverse_counts_by_scan(&g, &anchor));
    }

    #[test]
    fn b_factors_match_scan_on_random_switchings() {
        let mut src = BitSource::new(11);
        for (rows, cols) in [
            (vec![2u32; 5], vec![2u32; 5]),
            (vec![3, 3, 2, 2, 2], vec![3, 2, 2, 2, 2, 1]),
        ] {
            let mut g = MultiGraph::bipartite(&rows, &cols);
            let stars = StarTables::new(&g).unwrap();
            let mut seeder = Seeder::new(&g);
            let mut hits = 0;
            for _ in 0..3000 {
                seeder.sample(&mut g, &mut src);
                let s = 2 + src.below(u64::from(g.max_degree() - 1)) as u32;
                let anchor = sample_star_pair(&g, &stars, s, &mut src);
                if !validate_anchor(&g, &anchor) {
                    continue;
                }
                g.apply_switching(&anchor);
                g.audit().unwrap();
                let mut work = 0;
                assert_eq!(b_factors(&g, &anchor, &mut work), reverse_counts_by_scan(&g, &anchor));
                hits += 1;
            }
            assert!(hits > 20, "only {hits} valid switchings");
        }
    }

    #[test]
    fn loopless_b_factors_match_scan() {
        let mut src = BitSource::new(12);
        let degrees = [2u32, 2, 2, 2, 2, 2, 2, 2];
        let mut g = MultiGraph::loopless(&degrees);
        let stars = StarTables::new(&g).unwrap();
        let mut seeder = Seeder::new(&g);
        let mut hits = 0;
        for _ in 0..3000 {
            seeder.sample(&mut g, &mut src);
            let anchor = sample_star_pair(&g, &stars, 2, &mut src);
            if !validate_anchor(&g, &anchor) {
                continue;
            }
            g.apply_switching(&anchor);
            g.audit().unwrap();
            let mut work = 0;
            assert_eq!(b_factors(&g, &anchor, &mut work), reverse_counts_by_scan(&g, &anchor));
            hits += 1;
        }
        assert!(hits > 20);
    }

    #[test]
    fn k22_f_rejection_rate_matches_enumeration() {
        // K_{2,2}: S_2 T_2 = 16 ordered star pairs; a 2-switching needs six
        // distinct vertices, so none is valid
        let g = {
            let mut g = MultiGraph::bipartite(&[2, 2], &[2, 2]);
            for x in 0..2 {
                for y in 2..4 {
                    g.insert(x, y, 1);
                }
            }
            g
        };
        let stars = StarTables::new(&g).unwrap();
        assert_eq!(stars.total(2, 0) * stars.total(2, 1), 16);
        let mut src = BitSource::new(4);
        for _ in 0..1000 {
            let a = sample_star_pair(&g, &stars, 2, &mut src);
            assert!(!validate_anchor(&g, &a));
        }
    }

    #[test]
    fn acceptance_formula_plug_in() {
        let mg = Marginals::validate(&[2; 128], &[2; 128]).unwrap();
        let params = crate::params::ParameterSet::new(Profile::bipartite(&mg), default_eps_min()).unwrap();
        let m1 = Stratum::from_counts(2, &[(2, 1)]);
        let (b1, b2) = (params.b_under(2, &m1, 1), params.b_under(2, &m1, 2));
        let at_lower = b_acceptance(&[1, b1 as u64, b2 as u64], &m1, 2, &params, None).unwrap();
        let same = |a: &Boundary, num: BigUint, den: BigUint| a.equals_ratio(&num, &den);
        assert!(same(&at_lower, 1u32.into(), 1u32.into()));
        let total = params.total();
        let at_top = b_acceptance(&[1, total, total], &m1, 2, &params, None).unwrap();
        assert!(same(
            &at_top,
            BigUint::from((b1 * b2) as u128),
            BigUint::from(total * total)
        ));
        assert!(b_acceptance(&[1, 3, total], &m1, 2, &params, None).is_err());
    }

    #[test]
    fn gen_runs_keep_invariants_at_n128() {
        let n = 128;
        let mg = Marginals::validate(&vec![2; n], &vec![2; n]).unwrap();
        let params = ParameterSet::new(Profile::bipartite(&mg), default_eps_min()).unwrap();
        let mut g = MultiGraph::bipartite(mg.rows(), mg.cols());
        let ctx = GenContext::new(params, &g).unwrap();
        let mut seeder = Seeder::new(&g);
        let mut src = BitSource::new(5);
        let mut stats = GenStats::default();
        let mut audit = LemmaAudit::default();
        for _ in 0..300 {
            seeder.sample(&mut g, &mut src);
            let out = run_gen(&mut g, &ctx, &mut src, &mut stats, Some(&mut audit)).unwrap();
            if out == GenOutcome::Output {
                assert!(g.multiple_total() < ctx.params.t0());
            }
            g.audit().unwrap();
        }
        assert_eq!(audit.violations(), 0);
        assert!(stats.outputs > 0);
        assert_eq!(stats.runs, 300);
    }
}
