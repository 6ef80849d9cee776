use ctgen_core::brute::{count_tables, layered_top, CountCache, CountKey, ProfileSampler};
use ctgen_core::oracle::{enumerate_loopless, enumerate_tables, table_stratum};
use num_bigint::BigUint;
use proptest::prelude::*;
use std::time::Instant;

/// Every vector of length `1..=3` with entries summing to `total`.
fn vectors(total: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for len in 1..=3usize {
        let mut v = vec![0u32; len];
        fill(&mut v, 0, total, &mut out);
    }
    out
}

fn fill(v: &mut Vec<u32>, i: usize, left: u32, out: &mut Vec<Vec<u32>>) {
    if i + 1 == v.len() {
        v[i] = left;
        out.push(v.clone());
        return;
    }
    for x in 0..=left {
        v[i] = x;
        fill(v, i + 1, left - x, out);
    }
}

fn multiplicity_total(t: &[Vec<u32>]) -> usize {
    t.iter().flatten().filter(|&&x| x >= 2).map(|&x| x as usize).sum()
}

fn histogram(tables: &[Vec<Vec<u32>>], total: u32) -> Vec<u64> {
    let mut by_t = vec![0u64; total as usize + 1];
    for t in tables {
        by_t[multiplicity_total(t)] += 1;
    }
    by_t
}

#[test]
fn count_tables_matches_enumeration_up_to_three_by_three() {
    let start = Instant::now();
    let mut cache = CountCache::with_capacity(1 << 16);
    let mut pairs = 0u64;
    for total in 1..=8u32 {
        let vs = vectors(total);
        for g in &vs {
            for h in &vs {
                let tables = enumerate_tables(g, h, 1_000_000).unwrap();
                let by_t = histogram(&tables, total);
                for (t, &expected) in by_t.iter().enumerate() {
                    let key = CountKey::new(g, h, t as u64).unwrap();
                    assert_eq!(count_tables(&key, &mut cache), BigUint::from(expected), "{g:?} {h:?} t = {t}");
                }
                pairs += 1;
            }
        }
    }
    assert_eq!(pairs, 7932);
    assert!(start.elapsed().as_secs() < 300);
}

#[test]
fn memoized_and_uncached_counts_agree() {
    let mut off = CountCache::disabled();
    let mut on = CountCache::with_capacity(64);
    for g in vectors(6) {
        for h in vectors(6) {
            for t in 0..=6 {
                let key = CountKey::new(&g, &h, t).unwrap();
                assert_eq!(count_tables(&key, &mut off), count_tables(&key, &mut on));
            }
        }
    }
}

#[test]
fn layered_route_matches_enumeration() {
    for total in 1..=8u32 {
        let vs = vectors(total);
        for g in &vs {
            for h in &vs {
                let mut rows = g.clone();
                rows.sort_unstable_by(|a, b| b.cmp(a));
                let by_t = histogram(&enumerate_tables(g, h, 1_000_000).unwrap(), total);
                let layered = layered_top(&rows, h);
                let memo = ProfileSampler::bipartite(g, h).top();
                for (t, &n) in by_t.iter().enumerate() {
                    let n = BigUint::from(n);
                    assert_eq!(layered.get(t).cloned().unwrap_or_default(), n, "layered {g:?} {h:?} t = {t}");
                    assert_eq!(memo.get(t).cloned().unwrap_or_default(), n, "memo {g:?} {h:?} t = {t}");
                }
            }
        }
    }
}

#[test]
fn loopless_profile_counts_match_enumeration() {
    let sequences: [&[u32]; 7] = [
        &[2, 2],
        &[1, 1, 1, 1],
        &[2, 2, 2],
        &[3, 3, 2],
        &[2, 2, 2, 2],
        &[3, 2, 2, 1, 2],
        &[4, 2, 2, 2, 2],
    ];
    for d in sequences {
        let graphs = enumerate_loopless(d, 1_000_000).unwrap();
        let total: u32 = d.iter().sum::<u32>() / 2;
        let mut by_t = vec![0u64; total as usize + 1];
        for g in &graphs {
            let s: usize = (0..d.len())
                .flat_map(|a| (a + 1..d.len()).map(move |b| (a, b)))
                .map(|(a, b)| g[a][b])
                .filter(|&x| x >= 2)
                .map(|x| x as usize)
                .sum();
            by_t[s] += 1;
        }
        let top = ProfileSampler::loopless(d).top();
        for (t, &n) in by_t.iter().enumerate() {
            assert_eq!(top.get(t).cloned().unwrap_or_default(), BigUint::from(n), "{d:?} t = {t}");
        }
    }
}

#[test]
fn census_of_two_by_two() {
    let tables = enumerate_tables(&[2, 2], &[2, 2], 10).unwrap();
    let census = ctgen_core::oracle::stratum_census(&tables, 2);
    assert_eq!(census.count(&[0, 0, 0]), 1);
    assert_eq!(census.count(&[0, 0, 2]), 2);
    assert_eq!(table_stratum(&tables[0], 2).len(), 3);
}

fn marginal_pair() -> impl Strategy<Value = (Vec<u32>, Vec<u32>)> {
    (1usize..=4, 1usize..=4, 1u32..=10).prop_flat_map(|(m, n, total)| {
        (
            proptest::collection::vec(0u32..=total, m - 1),
            proptest::collection::vec(0u32..=total, n - 1),
        )
            .prop_map(move |(a, b)| (split(total, a), split(total, b)))
    })
}

/// Cuts `total` at the sorted points `cuts` into `cuts.len() + 1` parts.
fn split(total: u32, mut cuts: Vec<u32>) -> Vec<u32> {
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut prev = 0;
    for c in cuts {
        out.push(c - prev);
        prev = c;
    }
    out.push(total - prev);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn counts_are_permutation_invariant(
        (g, h) in marginal_pair(),
        t in 0u64..=10,
        rot_g in 0usize..4,
        rot_h in 0usize..4,
    ) {
        let mut cache = CountCache::disabled();
        let base = count_tables(&CountKey::new(&g, &h, t).unwrap(), &mut cache);
        let mut g2 = g.clone();
        let mut h2 = h.clone();
        g2.rotate_left(rot_g % g.len());
        h2.reverse();
        h2.rotate_left(rot_h % h.len());
        prop_assert_eq!(base, count_tables(&CountKey::new(&g2, &h2, t).unwrap(), &mut cache));
    }

    #[test]
    fn counts_sum_to_enumeration((g, h) in marginal_pair()) {
        let total: u32 = g.iter().sum();
        let tables = enumerate_tables(&g, &h, 2_000_000).unwrap();
        let mut cache = CountCache::with_capacity(256);
        let sum: BigUint = (0..=u64::from(total))
            .map(|t| count_tables(&CountKey::new(&g, &h, t).unwrap(), &mut cache))
            .sum();
        prop_assert_eq!(sum, BigUint::from(tables.len()));
    }
}
