//! Uniform simple graphs with given degrees via the configuration model.
//!
//! A uniformly random pairing of points is built one pair at a time and
//! abandoned as soon as it would create a repeated pair (or a loop, in the
//! loopless case). Every simple graph arises from the same number of
//! pairings, so the accepted graph is exactly uniform.

use crate::exactprob::BitSource;
use crate::multigraph::MultiGraph;
use crate::params::Variant;

/// Reusable point arrays for repeated seeding of one instance.
#[derive(Debug, Clone)]
pub struct Seeder {
    variant: Variant,
    left: Vec<u32>,
    right: Vec<u32>,
}

impl Seeder {
    pub fn new(g: &MultiGraph) -> Self {
        let expand = |ids: std::ops::Range<u32>| -> Vec<u32> {
            ids.flat_map(|v| std::iter::repeat(v).take(g.degree(v) as usize))
                .collect()
        };
        match g.variant() {
            Variant::Bipartite => {
                let rows = g.rows() as u32;
                let all = g.vertex_count() as u32;
                Self {
                    variant: Variant::Bipartite,
                    left: expand(0..rows),
                    right: expand(rows..all),
                }
            }
            Variant::Loopless => Self {
                variant: Variant::Loopless,
                left: expand(0..g.vertex_count() as u32),
                right: Vec::new(),
            },
        }
    }

    /// Clears `g` and fills it with a uniformly random simple graph.
    /// Returns the number of pairings attempted. Loops forever if no simple
    /// realization exists; callers check graphicality first.
    pub fn sample(&mut self, g: &mut MultiGraph, src: &mut BitSource) -> u64 {
        let mut attempts = 0;
        loop {
            attempts += 1;
            g.clear();
            let done = match self.variant {
                Variant::Bipartite => self.try_bipartite(g, src),
                Variant::Loopless => self.try_loopless(g, src),
            };
            if done {
                return attempts;
            }
        }
    }

    fn try_bipartite(&mut self, g: &mut MultiGraph, src: &mut BitSource) -> bool {
        let total = self.right.len();
        for i in 0..total {
            let j = i + src.below_usize(total - i);
            self.right.swap(i, j);
            let (x, y) = (self.left[i], self.right[i]);
            if g.multiplicity(x, y) > 0 {
                return false;
            }
            g.insert(x, y, 1);
        }
        true
    }

    fn try_loopless(&mut self, g: &mut MultiGraph, src: &mut BitSource) -> bool {
        let total = self.left.len();
        let mut i = 0;
        while i + 1 < total {
            let j = i + 1 + src.below_usize(total - i - 1);
            self.left.swap(i + 1, j);
            let (a, b) = (self.left[i], self.left[i + 1]);
            if a == b || g.multiplicity(a, b) > 0 {
                return false;
            }
            g.insert(a, b, 1);
            i += 2;
        }
        true
    }
}

/// One uniformly random simple bipartite graph with the given degrees.
pub fn sample_simple_bipartite(rows: &[u32], cols: &[u32], src: &mut BitSource) -> MultiGraph {
    let mut g = MultiGraph::bipartite(rows, cols);
    Seeder::new(&g).sample(&mut g, src);
    g
}

/// One uniformly random simple graph with the given degrees.
pub fn sample_simple_graph(degrees: &[u32], src: &mut BitSource) -> MultiGraph {
    let mut g = MultiGraph::loopless(degrees);
    Seeder::new(&g).sample(&mut g, src);
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_realizations() {
        let mut src = BitSource::new(1);
        for _ in 0..50 {
            let g = sample_simple_bipartite(&[2], &[1, 1], &mut src);
            assert_eq!(g.to_matrix(), vec![vec![1, 1]]);
            let g = sample_simple_bipartite(&[2, 2], &[2, 2], &mut src);
            assert_eq!(g.to_matrix(), vec![vec![1, 1], vec![1, 1]]);
            let g = sample_simple_graph(&[2, 2, 2], &mut src);
            assert_eq!(g.edge_list(), vec![(0, 1, 1), (0, 2, 1), (1, 2, 1)]);
        }
    }

    #[test]
    fn matchings_are_balanced() {
        let mut src = BitSource::new(2);
        let n = 100_000;
        let diag = (0..n)
            .filter(|_| sample_simple_bipartite(&[1, 1], &[1, 1], &mut src).to_matrix()[0][0] == 1)
            .count() as f64;
        let sd = (n as f64 * 0.25).sqrt();
        assert!((diag - n as f64 / 2.0).abs() < 5.0 * sd, "diag = {diag}");
    }

    #[test]
    fn outputs_are_simple_and_complete() {
        let mut src = BitSource::new(3);
        let rows = [3, 2, 2, 1];
        let cols = [2, 2, 2, 1, 1];
        for _ in 0..200 {
            let g = sample_simple_bipartite(&rows, &cols, &mut src);
            assert!(g.is_complete());
            assert!(g.stratum().is_zero());
            g.audit().unwrap();
        }
        for _ in 0..200 {
            let g = sample_simple_graph(&[3, 3, 2, 2, 2], &mut src);
            assert!(g.stratum().is_zero());
            g.audit().unwrap();
        }
    }
}
