//! Mutable multigraph with constant-time multiplicity lookup, per-vertex
//! point lists and per-multiplicity edge registries.
//!
//! Vertices share one id space. In the bipartite case rows are `0..m` and
//! columns are `m..m+n`; in the loopless case the ids are the vertices of
//! the degree sequence. Multiple edges are only ever created (switchings
//! and Brute never split one), so the registries are append-only.

use crate::error::{Error, Result};
use crate::params::{Stratum, Variant};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiGraph {
    variant: Variant,
    rows: usize,
    cols: usize,
    degrees: Vec<u32>,
    max_degree: u32,
    /// Bipartite: `rows x cols`. Loopless: symmetric `n x n`.
    cell: Cells,
    points: Vec<Vec<u32>>,
    simple_edges: u64,
    registry: Vec<Vec<(u32, u32)>>,
    stratum: Stratum,
}

/// Dense multiplicity table, one byte per cell whenever no multiplicity
/// can exceed 255. The narrow form keeps large tables cache resident.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Cells {
    Narrow(Vec<u8>),
    Wide(Vec<u32>),
}

impl Cells {
    fn new(len: usize, max_degree: u32) -> Self {
        if max_degree <= u32::from(u8::MAX) {
            Cells::Narrow(vec![0; len])
        } else {
            Cells::Wide(vec![0; len])
        }
    }

    #[inline]
    fn get(&self, i: usize) -> u32 {
        match self {
            Cells::Narrow(v) => u32::from(v[i]),
            Cells::Wide(v) => v[i],
        }
    }

    #[inline]
    fn set(&mut self, i: usize, k: u32) {
        match self {
            Cells::Narrow(v) => v[i] = k as u8,
            Cells::Wide(v) => v[i] = k,
        }
    }
}

impl MultiGraph {
    /// Empty bipartite graph awaiting edges with row degrees `rows` and
    /// column degrees `cols`.
    pub fn bipartite(rows: &[u32], cols: &[u32]) -> Self {
        let degrees: Vec<u32> = rows.iter().chain(cols.iter()).copied().collect();
        Self::empty(Variant::Bipartite, rows.len(), cols.len(), degrees)
    }

    /// Empty loopless graph awaiting edges for degree sequence `degrees`.
    pub fn loopless(degrees: &[u32]) -> Self {
        let n = degrees.len();
        Self::empty(Variant::Loopless, n, n, degrees.to_vec())
    }

    fn empty(variant: Variant, rows: usize, cols: usize, degrees: Vec<u32>) -> Self {
        let max_degree = degrees.iter().copied().max().unwrap_or(0);
        let points = degrees
            .iter()
            .map(|&d| Vec::with_capacity(d as usize))
            .collect();
        Self {
            variant,
            rows,
            cols,
            max_degree,
            cell: Cells::new(rows * cols, max_degree),
            points,
            simple_edges: 0,
            registry: vec![Vec::new(); max_degree as usize + 1],
            stratum: Stratum::zero(max_degree.max(2)),
            degrees,
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Number of vertex ids.
    pub fn vertex_count(&self) -> usize {
        self.degrees.len()
    }

    /// Row count (bipartite) or vertex count (loopless).
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Id of column `j` (bipartite).
    pub fn col_id(&self, j: usize) -> u32 {
        (self.rows + j) as u32
    }

    pub fn is_row(&self, v: u32) -> bool {
        match self.variant {
            Variant::Bipartite => (v as usize) < self.rows,
            Variant::Loopless => true,
        }
    }

    pub fn degree(&self, v: u32) -> u32 {
        self.degrees[v as usize]
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    fn index(&self, a: u32, b: u32) -> usize {
        match self.variant {
            Variant::Bipartite => {
                let (x, y) = if (a as usize) < self.rows { (a, b) } else { (b, a) };
                x as usize * self.cols + (y as usize - self.rows)
            }
            Variant::Loopless => a as usize * self.cols + b as usize,
        }
    }

    /// Multiplicity of the pair `{a, b}`; 0 for non-edges and for two
    /// vertices on the same side of a bipartition.
    pub fn multiplicity(&self, a: u32, b: u32) -> u32 {
        if a == b || (self.variant == Variant::Bipartite && self.is_row(a) == self.is_row(b)) {
            return 0;
        }
        self.cell.get(self.index(a, b))
    }

    fn set_raw(&mut self, a: u32, b: u32, k: u32) {
        let i = self.index(a, b);
        self.cell.set(i, k);
        if self.variant == Variant::Loopless {
            let j = self.index(b, a);
            self.cell.set(j, k);
        }
    }

    /// Inserts `k >= 1` parallel edges between the currently non-adjacent
    /// vertices `a` and `b`.
    pub fn insert(&mut self, a: u32, b: u32, k: u32) {
        debug_assert!(k >= 1);
        debug_assert_eq!(self.multiplicity(a, b), 0, "pair already adjacent");
        debug_assert!(a != b);
        self.set_raw(a, b, k);
        for _ in 0..k {
            self.points[a as usize].push(b);
            self.points[b as usize].push(a);
        }
        if k == 1 {
            self.simple_edges += 1;
        } else {
            self.registry[k as usize].push((a.min(b), a.max(b)));
            self.stratum.inc(k);
        }
    }

    /// Removes every edge, keeping the degree targets.
    pub fn clear(&mut self) {
        for v in 0..self.points.len() {
            let nbrs = std::mem::take(&mut self.points[v]);
            for &w in &nbrs {
                self.set_raw(v as u32, w, 0);
            }
            self.points[v] = nbrs;
            self.points[v].clear();
        }
        for r in &mut self.registry {
            r.clear();
        }
        self.simple_edges = 0;
        self.stratum = Stratum::zero(self.max_degree.max(2));
    }

    /// Point list of `v`: one neighbour entry per incident edge.
    pub fn points(&self, v: u32) -> &[u32] {
        &self.points[v as usize]
    }

    /// Number of cells with multiplicity exactly 1.
    pub fn simple_edge_count(&self) -> u64 {
        self.simple_edges
    }

    /// Multiple edges of multiplicity `k`.
    pub fn registry(&self, k: u32) -> &[(u32, u32)] {
        self.registry.get(k as usize).map_or(&[], |r| r.as_slice())
    }

    pub fn stratum(&self) -> &Stratum {
        &self.stratum
    }

    /// Total multiplicity of multiple edges, `S(m)`.
    pub fn multiple_total(&self) -> u64 {
        self.stratum.sum()
    }

    /// True once every vertex has reached its degree.
    pub fn is_complete(&self) -> bool {
        self.points
            .iter()
            .zip(&self.degrees)
            .all(|(p, &d)| p.len() == d as usize)
    }

    /// Performs the `s`-switching described by `anchor`, whose point
    /// positions select the removed edges. The anchor must already be valid.
    pub fn apply_switching(&mut self, anchor: &Anchor) {
        let (u1, v1) = (anchor.u1, anchor.v1);
        let s = anchor.us.len() as u32;
        for (&ui, &vi) in anchor.us.iter().zip(&anchor.vs) {
            self.set_raw(u1, ui, 0);
            self.set_raw(v1, vi, 0);
            self.set_raw(ui, vi, 1);
            replace_one(&mut self.points[ui as usize], u1, vi);
            replace_one(&mut self.points[vi as usize], v1, ui);
        }
        for &p in &anchor.u_pos {
            self.points[u1 as usize][p as usize] = v1;
        }
        for &p in &anchor.v_pos {
            self.points[v1 as usize][p as usize] = u1;
        }
        self.set_raw(u1, v1, s);
        // 2s single edges removed, s created
        self.simple_edges -= u64::from(s);
        self.registry[s as usize].push((u1.min(v1), u1.max(v1)));
        self.stratum.inc(s);
    }

    /// Stripped `rows x cols` matrix (bipartite only).
    pub fn to_matrix(&self) -> Vec<Vec<u32>> {
        assert_eq!(self.variant, Variant::Bipartite);
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.cell.get(r * self.cols + c)).collect())
            .collect()
    }

    /// Edge list `(a, b, multiplicity)` with `a < b`, sorted.
    pub fn edge_list(&self) -> Vec<(u32, u32, u32)> {
        let mut out = Vec::new();
        for a in 0..self.vertex_count() as u32 {
            let mut nbrs: Vec<u32> = self.points(a).iter().copied().filter(|&b| b > a).collect();
            nbrs.sort_unstable();
            nbrs.dedup();
            for b in nbrs {
                out.push((a, b, self.multiplicity(a, b)));
            }
        }
        out
    }

    /// Recounts everything from the multiplicity table and compares with
    /// the incrementally maintained state.
    pub fn audit(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvariantViolation(msg));
        let nv = self.vertex_count() as u32;
        let mut simple = 0u64;
        let mut stratum = Stratum::zero(self.max_degree.max(2));
        let mut multi: Vec<Vec<(u32, u32)>> = vec![Vec::new(); self.registry.len()];
        for a in 0..nv {
            let mut sum = 0u32;
            for b in 0..nv {
                let k = self.multiplicity(a, b);
                sum += k;
                if a < b && k > 0 {
                    if k == 1 {
                        simple += 1;
                    } else {
                        stratum.inc(k);
                        multi[k as usize].push((a, b));
                    }
                }
            }
            if sum != self.degrees[a as usize] {
                return fail(format!("vertex {a} has degree {sum}"));
            }
            let mut listed = self.points[a as usize].clone();
            listed.sort_unstable();
            let mut expected: Vec<u32> = (0..nv)
                .flat_map(|b| std::iter::repeat(b).take(self.multiplicity(a, b) as usize))
                .collect();
            expected.sort_unstable();
            if listed != expected {
                return fail(format!("point list of {a} disagrees with the table"));
            }
        }
        if simple != self.simple_edges {
            return fail(format!("simple edges {simple} vs {}", self.simple_edges));
        }
        if stratum != self.stratum {
            return fail(format!("stratum {stratum:?} vs {:?}", self.stratum));
        }
        for (k, reg) in self.registry.iter().enumerate() {
            let mut reg = reg.clone();
            reg.sort_unstable();
            if reg != multi[k] {
                return fail(format!("registry for multiplicity {k} is stale"));
            }
        }
        Ok(())
    }
}

fn replace_one(list: &mut [u32], from: u32, to: u32) {
    let slot = list
        .iter_mut()
        .find(|x| **x == from)
        .expect("edge present in point list");
    *slot = to;
}

/// A star pair naming an `s`-switching: centres `u1`, `v1`, the chosen
/// point positions in their lists, and the far endpoints `u_i`, `v_i`
/// (`i = 2..=s+1`, stored from index 0).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Anchor {
    pub u1: u32,
    pub v1: u32,
    pub u_pos: Vec<u32>,
    pub v_pos: Vec<u32>,
    pub us: Vec<u32>,
    pub vs: Vec<u32>,
}

impl Anchor {
    pub fn multiplicity(&self) -> u32 {
        self.us.len() as u32
    }

    /// All `2(s+1)` vertices, `u1, v1, u2, v2, …`.
    pub fn vertices(&self) -> Vec<u32> {
        let mut out = vec![self.u1, self.v1];
        for (&u, &v) in self.us.iter().zip(&self.vs) {
            out.push(u);
            out.push(v);
        }
        out
    }
}
