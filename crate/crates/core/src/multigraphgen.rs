//! Uniform loopless multigraphs with a prescribed degree sequence.
//!
//! The pipeline is the bipartite one with the vertex bipartition dropped:
//! switchings draw both stars from the whole vertex set, anchors come in two
//! orientations per multiple edge, and Brute peels vertices instead of rows.

use crate::driver::{Config, DriverStats, Engine, Shape};
use crate::error::{Error, Result};
use crate::exactprob::BitSource;
use crate::gen::LemmaAudit;
use crate::multigraph::MultiGraph;
use crate::params::ParameterSet;

/// A degree sequence with its zero entries set aside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequence {
    degrees: Vec<u32>,
    /// Original position of each kept vertex.
    index: Vec<usize>,
    raw_len: usize,
    simple: bool,
}

impl DegreeSequence {
    /// Checks the sum is positive and even and that some loopless
    /// multigraph has these degrees (no vertex needs more than all others
    /// together). Whether a simple graph exists is recorded separately.
    pub fn validate(raw: &[u32]) -> Result<Self> {
        let total: u64 = raw.iter().map(|&d| u64::from(d)).sum();
        if total == 0 {
            return Err(Error::Empty);
        }
        if total % 2 == 1 {
            return Err(Error::OddSum(total));
        }
        let index: Vec<usize> = (0..raw.len()).filter(|&i| raw[i] > 0).collect();
        let degrees: Vec<u32> = index.iter().map(|&i| raw[i]).collect();
        let top = u64::from(degrees.iter().copied().max().unwrap_or(0));
        if 2 * top > total {
            return Err(Error::NotGraphical);
        }
        Ok(Self {
            simple: is_graphical(&degrees),
            degrees,
            index,
            raw_len: raw.len(),
        })
    }

    /// Whether a simple graph has these degrees (Erdős–Gallai).
    pub fn is_simple_graphical(&self) -> bool {
        self.simple
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn total(&self) -> u64 {
        self.degrees.iter().map(|&d| u64::from(d)).sum()
    }

    /// Edge list `(a, b, multiplicity)` with `a < b` in original labels.
    pub fn relabel(&self, g: &MultiGraph) -> Vec<(u32, u32, u32)> {
        let mut out: Vec<_> = g
            .edge_list()
            .into_iter()
            .map(|(a, b, k)| {
                let (a, b) = (self.index[a as usize] as u32, self.index[b as usize] as u32);
                (a.min(b), a.max(b), k)
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Symmetric adjacency matrix in original labels.
    pub fn adjacency(&self, g: &MultiGraph) -> Vec<Vec<u32>> {
        let mut m = vec![vec![0; self.raw_len]; self.raw_len];
        for (a, b, k) in self.relabel(g) {
            m[a as usize][b as usize] = k;
            m[b as usize][a as usize] = k;
        }
        m
    }
}

/// Erdős–Gallai: with `d` sorted nonincreasing, for every `k`,
/// `Σ_{i<=k} d_i <= k(k-1) + Σ_{i>k} min(d_i, k)`, and the sum is even.
pub fn is_graphical(degrees: &[u32]) -> bool {
    let mut d: Vec<u64> = degrees.iter().map(|&x| u64::from(x)).collect();
    d.sort_unstable_by(|a, b| b.cmp(a));
    if d.iter().sum::<u64>() % 2 == 1 {
        return false;
    }
    let mut head = 0u64;
    for k in 1..=d.len() {
        head += d[k - 1];
        let tail: u64 = d[k..].iter().map(|&x| x.min(k as u64)).sum();
        if head > (k as u64) * (k as u64 - 1) + tail {
            return false;
        }
    }
    true
}

/// Exact uniform sampler of loopless multigraphs.
#[derive(Debug, Clone)]
pub struct MultigraphGen {
    sequence: DegreeSequence,
    engine: Engine,
}

impl MultigraphGen {
    /// Without a simple realization there is no seed for `Gen`, so `t0` is
    /// pinned to 0 and Brute covers every multigraph.
    pub fn new(degrees: &[u32], mut config: Config) -> Result<Self> {
        let sequence = DegreeSequence::validate(degrees)?;
        if !sequence.simple {
            config.force_t0 = Some(0);
        }
        let engine = Engine::new(Shape::Loopless(sequence.degrees.clone()), config)?;
        Ok(Self { sequence, engine })
    }

    /// Uses a prepared parameter set, e.g. a verified fixture.
    pub fn with_params(degrees: &[u32], params: ParameterSet, config: Config) -> Result<Self> {
        let sequence = DegreeSequence::validate(degrees)?;
        if !sequence.simple && params.t0() > 0 {
            return Err(Error::NotGraphical);
        }
        let engine = Engine::with_params(Shape::Loopless(sequence.degrees.clone()), params, config)?;
        Ok(Self { sequence, engine })
    }

    pub fn sequence(&self) -> &DegreeSequence {
        &self.sequence
    }

    pub fn params(&self) -> &ParameterSet {
        self.engine.params()
    }

    pub fn stats(&self) -> &DriverStats {
        &self.engine.stats
    }

    pub fn enable_audit(&mut self) {
        self.engine.enable_audit();
    }

    pub fn audit(&self) -> Option<&LemmaAudit> {
        self.engine.audit()
    }

    /// One uniform multigraph over the nonzero-degree vertices.
    pub fn sample_graph(&mut self, src: &mut BitSource) -> Result<MultiGraph> {
        self.engine.sample(src).cloned()
    }

    /// One uniform multigraph as an edge list in original labels.
    pub fn sample(&mut self, src: &mut BitSource) -> Result<Vec<(u32, u32, u32)>> {
        let g = self.engine.sample(src)?;
        Ok(self.sequence.relabel(g))
    }
}

/// One uniform loopless multigraph with degrees `degrees`, as an edge list.
pub fn multigraphgen(degrees: &[u32], config: Config, src: &mut BitSource) -> Result<Vec<(u32, u32, u32)>> {
    MultigraphGen::new(degrees, config)?.sample(src)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn erdos_gallai_examples() {
        assert!(is_graphical(&[2, 2, 2]));
        assert!(is_graphical(&[1, 1]));
        assert!(!is_graphical(&[2, 2]));
        assert!(is_graphical(&[3, 1, 1, 1, 2]));
        assert!(!is_graphical(&[3, 3, 1, 1]));
        assert!(is_graphical(&[3, 3, 2, 2, 2]));
        assert!(!is_graphical(&[4, 4, 4, 1, 1]));
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(DegreeSequence::validate(&[1, 2]), Err(Error::OddSum(_))));
        assert!(matches!(DegreeSequence::validate(&[0, 0]), Err(Error::Empty)));
        assert!(matches!(DegreeSequence::validate(&[3, 1]), Err(Error::NotGraphical)));
        let d = DegreeSequence::validate(&[2, 2]).unwrap();
        assert!(!d.is_simple_graphical());
    }

    #[test]
    fn forced_outputs() {
        let mut src = BitSource::new(1);
        for _ in 0..50 {
            assert_eq!(multigraphgen(&[2, 2], Config::default(), &mut src).unwrap(), vec![(0, 1, 2)]);
            assert_eq!(
                multigraphgen(&[2, 2, 2], Config::default(), &mut src).unwrap(),
                vec![(0, 1, 1), (0, 2, 1), (1, 2, 1)]
            );
        }
    }

    #[test]
    fn matchings_on_four_vertices() {
        let mut s = MultigraphGen::new(&[1, 1, 1, 1], Config::default()).unwrap();
        let mut src = BitSource::new(2);
        let mut f: HashMap<_, usize> = HashMap::new();
        for _ in 0..9000 {
            *f.entry(s.sample(&mut src).unwrap()).or_default() += 1;
        }
        assert_eq!(f.len(), 3);
        let sd = (9000.0 * (2.0 / 9.0) as f64).sqrt();
        assert!(f.values().all(|&c| (c as f64 - 3000.0).abs() < 5.0 * sd));
    }

    #[test]
    fn zero_degree_vertices_keep_their_labels() {
        let mut src = BitSource::new(3);
        let e = multigraphgen(&[0, 2, 0, 2, 2], Config::default(), &mut src).unwrap();
        assert_eq!(e, vec![(1, 3, 1), (1, 4, 1), (3, 4, 1)]);
    }
}
