//! MATRIXGEN: the restart loop that mixes `Gen` (low multiplicity) with
//! `Brute` (high multiplicity) so that every table is equally likely.

use num_bigint::BigUint;
use num_traits::Zero;

use crate::brute::{layered_top, BruteContext, ProfileSampler};
use crate::error::{Error, Result};
use crate::exactprob::{BitSource, Boundary, Rational};
use crate::gen::{run_gen, GenContext, GenOutcome, GenStats, LemmaAudit};
use crate::marginals::Marginals;
use crate::multigraph::MultiGraph;
use crate::params::{default_eps_min, ParameterSet, Profile};
use crate::simplegen::Seeder;

/// Which bound on the high-multiplicity tail sets `ρ̂` and Brute's final
/// acceptance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TailBound {
    /// The closed-form `B̂`.
    #[default]
    Paper,
    /// `B = R / |H_0|`, counted exactly; Brute then always accepts.
    Counted,
    /// `Counted` when the closed-form `B̂` exceeds 1, else `Paper`.
    Auto,
}

impl TailBound {
    fn counts_tail(self, params: &ParameterSet) -> bool {
        match self {
            TailBound::Paper => false,
            TailBound::Counted => true,
            TailBound::Auto => params.b_hat().is_some_and(|b| *b > Rational::from_integer(1.into())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    /// Give up with `ApproximateCutoff` after this many restarts.
    pub max_restarts: Option<u64>,
    /// Cap restarts at `⌈M ln M⌉` unless `max_restarts` is set, and treat
    /// a Brute call with `t0 > 0` as a restart instead of running it.
    pub approximate: bool,
    pub tail: TailBound,
    pub eps_min: Rational,
    /// Impose `t0` instead of choosing the largest feasible value.
    pub force_t0: Option<u64>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            max_restarts: None,
            approximate: false,
            tail: TailBound::Paper,
            eps_min: default_eps_min(),
            force_t0: None,
        }
    }
}

impl Config {
    fn restart_limit(&self, total: u64) -> Option<u64> {
        self.max_restarts.or_else(|| {
            self.approximate.then(|| {
                let m = total.max(2) as f64;
                (m * m.ln()).ceil() as u64
            })
        })
    }
}

/// Counters over all samples drawn from one sampler.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DriverStats {
    pub outputs: u64,
    pub restarts: u64,
    pub gen: GenStats,
    pub brute_calls: u64,
    pub brute_rejects: u64,
    /// Brute calls turned into restarts by approximate mode.
    pub brute_skipped: u64,
    pub seed_attempts: u64,
    /// Outputs produced by the maximum-degree-one shortcut.
    pub matchings: u64,
}

impl DriverStats {
    pub fn merge(&mut self, o: &DriverStats) {
        self.outputs += o.outputs;
        self.restarts += o.restarts;
        self.gen.merge(&o.gen);
        self.brute_calls += o.brute_calls;
        self.brute_rejects += o.brute_rejects;
        self.brute_skipped += o.brute_skipped;
        self.seed_attempts += o.seed_attempts;
        self.matchings += o.matchings;
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Shape {
    Bipartite(Marginals),
    Loopless(Vec<u32>),
}

impl Shape {
    fn profile(&self) -> Profile {
        match self {
            Shape::Bipartite(mg) => Profile::bipartite(mg),
            Shape::Loopless(d) => Profile::loopless(d),
        }
    }

    fn template(&self) -> MultiGraph {
        match self {
            Shape::Bipartite(mg) => MultiGraph::bipartite(mg.rows(), mg.cols()),
            Shape::Loopless(d) => MultiGraph::loopless(d),
        }
    }

    fn counts(&self) -> (Vec<BigUint>, ProfileSampler) {
        match self {
            Shape::Bipartite(mg) => (
                layered_top(mg.rows(), mg.cols()),
                ProfileSampler::bipartite(mg.rows(), mg.cols()),
            ),
            Shape::Loopless(d) => {
                let mut s = ProfileSampler::loopless(d);
                (s.top().as_ref().clone(), s)
            }
        }
    }
}

/// Prepared state shared by the bipartite and loopless front ends.
#[derive(Debug, Clone)]
pub(crate) struct Engine {
    shape: Shape,
    config: Config,
    params: ParameterSet,
    rho: Boundary,
    gen: Option<GenContext>,
    brute: Option<BruteContext>,
    work: MultiGraph,
    seeder: Seeder,
    audit: Option<LemmaAudit>,
    pub(crate) stats: DriverStats,
}

impl Engine {
    pub(crate) fn new(shape: Shape, config: Config) -> Result<Self> {
        let profile = shape.profile();
        let params = match config.force_t0 {
            Some(t0) => ParameterSet::with_forced_t0(profile, t0, config.eps_min.clone())?,
            None => ParameterSet::new(profile, config.eps_min.clone())?,
        };
        Self::with_params(shape, params, config)
    }

    pub(crate) fn with_params(shape: Shape, mut params: ParameterSet, config: Config) -> Result<Self> {
        let mut brute = None;
        if params.t0() > 0 && config.tail.counts_tail(&params) {
            let (top, sampler) = shape.counts();
            let r: BigUint = top.iter().skip(params.t0() as usize).sum();
            let h0 = top.first().cloned().unwrap_or_default();
            if h0.is_zero() {
                return Err(Error::Infeasible);
            }
            params = params.with_b_hat(Rational::new(r.into(), h0.into()));
            brute = Some(BruteContext::from_top(&params, top, sampler)?);
        }
        let work = shape.template();
        let gen = if params.t0() > 0 {
            Some(GenContext::new(params.clone(), &work)?)
        } else {
            None
        };
        Ok(Self {
            rho: Boundary::from_rational(params.rho_hat()),
            seeder: Seeder::new(&work),
            shape,
            config,
            params,
            gen,
            brute,
            work,
            audit: None,
            stats: DriverStats::default(),
        })
    }

    pub(crate) fn params(&self) -> &ParameterSet {
        &self.params
    }

    pub(crate) fn enable_audit(&mut self) {
        self.audit.get_or_insert_with(LemmaAudit::default);
    }

    pub(crate) fn audit(&self) -> Option<&LemmaAudit> {
        self.audit.as_ref()
    }

    pub(crate) fn brute_context(&mut self) -> Result<&mut BruteContext> {
        if self.brute.is_none() {
            let (top, sampler) = self.shape.counts();
            self.brute = Some(BruteContext::from_top(&self.params, top, sampler)?);
        }
        Ok(self.brute.as_mut().expect("just built"))
    }

    /// One output of MATRIXGEN, left in the engine's working graph.
    pub(crate) fn sample(&mut self, src: &mut BitSource) -> Result<&MultiGraph> {
        if self.work.max_degree() == 1 {
            self.stats.seed_attempts += self.seeder.sample(&mut self.work, src);
            self.stats.matchings += 1;
            self.stats.outputs += 1;
            return Ok(&self.work);
        }
        let limit = self.config.restart_limit(self.params.total());
        let mut restarts = 0u64;
        loop {
            if self.attempt(src)? {
                self.stats.outputs += 1;
                return Ok(&self.work);
            }
            restarts += 1;
            self.stats.restarts += 1;
            if limit.is_some_and(|max| restarts > max) {
                return Err(Error::ApproximateCutoff(restarts - 1));
            }
        }
    }

    /// One pass of the MATRIXGEN loop; `true` if `work` holds an output.
    fn attempt(&mut self, src: &mut BitSource) -> Result<bool> {
        if src.bernoulli_prepared(&self.rho) {
            if self.config.approximate && self.params.t0() > 0 {
                self.stats.brute_skipped += 1;
                return Ok(false);
            }
            self.stats.brute_calls += 1;
            return Ok(match self.brute_context()?.run(src)? {
                Some(g) => {
                    self.work = g;
                    true
                }
                None => {
                    self.stats.brute_rejects += 1;
                    false
                }
            });
        }
        let ctx = self
            .gen
            .as_ref()
            .ok_or_else(|| Error::InvariantViolation("Gen branch with t0 = 0".into()))?;
        self.stats.seed_attempts += self.seeder.sample(&mut self.work, src);
        let outcome = run_gen(&mut self.work, ctx, src, &mut self.stats.gen, self.audit.as_mut())?;
        Ok(outcome == GenOutcome::Output)
    }
}

/// Exact uniform sampler of contingency tables with fixed marginals.
#[derive(Debug, Clone)]
pub struct MatrixGen {
    marginals: Marginals,
    engine: Engine,
}

impl MatrixGen {
    /// Validates the marginals (they must admit a 0/1 table) and prepares
    /// the parameters.
    pub fn new(rows: &[u32], cols: &[u32], config: Config) -> Result<Self> {
        let marginals = Self::check(rows, cols)?;
        let engine = Engine::new(Shape::Bipartite(marginals.clone()), config)?;
        Ok(Self { marginals, engine })
    }

    /// Uses a prepared parameter set, e.g. a verified fixture.
    pub fn with_params(rows: &[u32], cols: &[u32], params: ParameterSet, config: Config) -> Result<Self> {
        let marginals = Self::check(rows, cols)?;
        let engine = Engine::with_params(Shape::Bipartite(marginals.clone()), params, config)?;
        Ok(Self { marginals, engine })
    }

    fn check(rows: &[u32], cols: &[u32]) -> Result<Marginals> {
        let marginals = Marginals::validate(rows, cols)?;
        if !marginals.is_bigraphical() {
            return Err(Error::NotBigraphical);
        }
        Ok(marginals)
    }

    pub fn marginals(&self) -> &Marginals {
        &self.marginals
    }

    pub fn params(&self) -> &ParameterSet {
        self.engine.params()
    }

    pub fn stats(&self) -> &DriverStats {
        &self.engine.stats
    }

    /// Turns on runtime checks of the bound inequalities inside `Gen`.
    pub fn enable_audit(&mut self) {
        self.engine.enable_audit();
    }

    pub fn audit(&self) -> Option<&LemmaAudit> {
        self.engine.audit()
    }

    /// Builds the Brute counts now rather than on first use.
    pub fn brute_context(&mut self) -> Result<&mut BruteContext> {
        self.engine.brute_context()
    }

    /// One uniform table over the zero-stripped marginals, as a multigraph.
    pub fn sample_graph(&mut self, src: &mut BitSource) -> Result<MultiGraph> {
        self.engine.sample(src).cloned()
    }

    /// One uniform table with the original (unstripped) shape.
    pub fn sample(&mut self, src: &mut BitSource) -> Result<Vec<Vec<u32>>> {
        let g = self.engine.sample(src)?;
        Ok(self.marginals.inflate(&g.to_matrix()))
    }

    /// One uniform table as its nonzero cells `(row, col, value)` in the
    /// original indexing, sorted. Costs `O(M)` rather than `O(mn)`.
    pub fn sample_cells(&mut self, src: &mut BitSource) -> Result<Vec<(u32, u32, u32)>> {
        let g = self.engine.sample(src)?;
        let rows = g.rows() as u32;
        let mut cells: Vec<(u32, u32, u32)> = g
            .edge_list()
            .into_iter()
            .map(|(x, y, k)| {
                let i = self.marginals.row_origin(x as usize) as u32;
                let j = self.marginals.col_origin((y - rows) as usize) as u32;
                (i, j, k)
            })
            .collect();
        cells.sort_unstable();
        Ok(cells)
    }
}

/// One uniform table with row sums `rows` and column sums `cols`.
pub fn matrixgen(rows: &[u32], cols: &[u32], config: Config, src: &mut BitSource) -> Result<Vec<Vec<u32>>> {
    MatrixGen::new(rows, cols, config)?.sample(src)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn freq(rows: &[u32], cols: &[u32], n: usize, seed: u64) -> HashMap<Vec<Vec<u32>>, usize> {
        let mut s = MatrixGen::new(rows, cols, Config::default()).unwrap();
        let mut src = BitSource::new(seed);
        let mut out = HashMap::new();
        for _ in 0..n {
            *out.entry(s.sample(&mut src).unwrap()).or_default() += 1;
        }
        out
    }

    #[test]
    fn matching_shortcut_is_balanced() {
        let f = freq(&[1, 1], &[1, 1], 20_000, 1);
        assert_eq!(f.len(), 2);
        for &c in f.values() {
            assert!((c as f64 - 10_000.0).abs() < 5.0 * 5_000f64.sqrt());
        }
    }

    #[test]
    fn three_tables_for_two_by_two() {
        let f = freq(&[2, 2], &[2, 2], 30_000, 2);
        assert_eq!(f.len(), 3);
        let sd = (30_000.0 * (1.0 / 3.0) * (2.0 / 3.0) as f64).sqrt();
        for &c in f.values() {
            assert!((c as f64 - 10_000.0).abs() < 5.0 * sd, "{f:?}");
        }
    }

    #[test]
    fn zero_rows_are_restored() {
        let mut src = BitSource::new(3);
        let t = matrixgen(&[0, 2, 1], &[1, 0, 2], Config::default(), &mut src).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t[0], vec![0, 0, 0]);
        assert!(t.iter().all(|r| r[1] == 0));
    }

    #[test]
    fn errors() {
        let mut src = BitSource::new(4);
        assert!(matches!(
            matrixgen(&[2, 1], &[3], Config::default(), &mut src),
            Err(Error::NotBigraphical)
        ));
        assert!(matches!(
            matrixgen(&[2, 1], &[2], Config::default(), &mut src),
            Err(Error::UnequalSums { .. })
        ));
    }

    #[test]
    fn restart_cap_is_enforced() {
        // 2x2 with t0 = 0: Brute always accepts, so force a cap of zero
        let cfg = Config {
            max_restarts: Some(0),
            ..Config::default()
        };
        let mut s = MatrixGen::new(&[2, 2], &[2, 2], cfg).unwrap();
        let mut src = BitSource::new(5);
        assert!(s.sample(&mut src).is_ok());
        assert_eq!(s.stats().restarts, 0);
        // at n = 128 a Gen run restarts often enough that a zero cap trips
        let cfg = Config {
            max_restarts: Some(0),
            tail: TailBound::Counted,
            ..Config::default()
        };
        let mut s = MatrixGen::new(&[2; 128], &[2; 128], cfg).unwrap();
        let outcomes: Vec<_> = (0..200).map(|_| s.sample(&mut src)).collect();
        assert!(outcomes.iter().any(|o| matches!(o, Err(Error::ApproximateCutoff(0)))));
        assert!(outcomes.iter().any(Result::is_ok));
    }

    #[test]
    fn counted_tail_at_n128_runs_gen() {
        let cfg = Config {
            tail: TailBound::Counted,
            ..Config::default()
        };
        let mut s = MatrixGen::new(&[2; 128], &[2; 128], cfg).unwrap();
        assert_eq!(s.params().t0(), 78);
        assert!(crate::params::log2_ratio(s.params().rho_hat()) < -100.0);
        let mut src = BitSource::new(6);
        for _ in 0..20 {
            let t = s.sample(&mut src).unwrap();
            assert!(t.iter().all(|r| r.iter().sum::<u32>() == 2));
            for j in 0..128 {
                assert_eq!(t.iter().map(|r| r[j]).sum::<u32>(), 2);
            }
        }
        assert_eq!(s.stats().outputs, 20);
    }
}
