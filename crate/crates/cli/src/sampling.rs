//! Drawing many samples, optionally across worker threads.
//!
//! Worker `w` of `J` draws samples `⌊wN/J⌋ .. ⌊(w+1)N/J⌋` from the ChaCha
//! stream `(seed, w)`, and results are concatenated in worker order, so a
//! run is reproducible from `(seed, J)`. With one worker the stream is
//! `(seed, 0)`, the same as `BitSource::new(seed)`.

use std::thread;

use ctgen_core::driver::{DriverStats, MatrixGen};
use ctgen_core::multigraphgen::MultigraphGen;
use ctgen_core::{BitSource, Error};

/// Something that yields one sample per call.
pub trait Draw: Clone + Send {
    type Item: Send;
    fn draw(&mut self, src: &mut BitSource) -> ctgen_core::Result<Self::Item>;
    fn stats(&self) -> &DriverStats;
}

/// A table, dense or as its nonzero cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Table {
    Dense(Vec<Vec<u32>>),
    Cells(Vec<(u32, u32, u32)>),
}

#[derive(Debug, Clone)]
pub struct TableDraw {
    pub gen: MatrixGen,
    pub cells: bool,
}

impl Draw for TableDraw {
    type Item = Table;

    fn draw(&mut self, src: &mut BitSource) -> ctgen_core::Result<Table> {
        if self.cells {
            self.gen.sample_cells(src).map(Table::Cells)
        } else {
            self.gen.sample(src).map(Table::Dense)
        }
    }

    fn stats(&self) -> &DriverStats {
        self.gen.stats()
    }
}

#[derive(Debug, Clone)]
pub struct MultigraphDraw(pub MultigraphGen);

impl Draw for MultigraphDraw {
    type Item = Vec<(u32, u32, u32)>;

    fn draw(&mut self, src: &mut BitSource) -> ctgen_core::Result<Self::Item> {
        self.0.sample(src)
    }

    fn stats(&self) -> &DriverStats {
        self.0.stats()
    }
}

/// `None` marks a sample abandoned by the approximate-mode cutoff.
pub type Outcome<T> = Option<T>;

fn run_block<D: Draw>(mut d: D, seed: u64, worker: u64, count: usize) -> ctgen_core::Result<(Vec<Outcome<D::Item>>, DriverStats)> {
    let mut src = BitSource::with_stream(seed, worker);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        match d.draw(&mut src) {
            Ok(x) => out.push(Some(x)),
            Err(Error::ApproximateCutoff(_)) => out.push(None),
            Err(e) => return Err(e),
        }
    }
    Ok((out, d.stats().clone()))
}

/// Draws `n` samples with `jobs` workers, each starting from a clone of
/// `proto`. Returns the samples in order and the merged counters.
pub fn draw_many<D: Draw>(proto: &D, n: usize, jobs: usize, seed: u64) -> ctgen_core::Result<(Vec<Outcome<D::Item>>, DriverStats)> {
    let jobs = jobs.clamp(1, n.max(1));
    let bounds: Vec<usize> = (0..=jobs).map(|w| w * n / jobs).collect();
    let results: Vec<_> = if jobs == 1 {
        vec![run_block(proto.clone(), seed, 0, n)]
    } else {
        thread::scope(|scope| {
            let handles: Vec<_> = (0..jobs)
                .map(|w| {
                    let d = proto.clone();
                    let count = bounds[w + 1] - bounds[w];
                    scope.spawn(move || run_block(d, seed, w as u64, count))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sampling worker panicked"))
                .collect()
        })
    };
    let mut samples = Vec::with_capacity(n);
    let mut stats = DriverStats::default();
    for r in results {
        let (s, st) = r?;
        samples.extend(s);
        stats.merge(&st);
    }
    Ok((samples, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ctgen_core::driver::Config;

    #[test]
    fn worker_split_is_reproducible() {
        let d = TableDraw {
            gen: MatrixGen::new(&[2, 1, 1], &[2, 1, 1], Config::default()).unwrap(),
            cells: false,
        };
        let (a, sa) = draw_many(&d, 37, 3, 9).unwrap();
        let (b, sb) = draw_many(&d, 37, 3, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        assert_eq!(a.len(), 37);
        let (c, _) = draw_many(&d, 37, 1, 9).unwrap();
        let mut src = BitSource::new(9);
        let mut g = d.gen.clone();
        let direct: Vec<_> = (0..37).map(|_| Some(Table::Dense(g.sample(&mut src).unwrap()))).collect();
        assert_eq!(c, direct);
    }
}
