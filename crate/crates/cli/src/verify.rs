//! The acceptance suite: one pass/fail outcome per criterion.
//!
//! Criteria 4, 5, 6 and 10 are stated for the 2-regular 50×50 instance
//! with a positive honest `t0`, but the honest `t0` there is 0 and Gen never
//! runs. They are evaluated as stated (and fail), and each has a companion
//! run on 2-regular 128×128, where the honest `t0` is 78.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use num_bigint::BigUint;
use serde_json::{json, Value};

use ctgen_core::brute::{count_tables, layered_top, CountCache, CountKey};
use ctgen_core::driver::{Config, DriverStats, MatrixGen, TailBound};
use ctgen_core::gen::LemmaAudit;
use ctgen_core::multigraphgen::MultigraphGen;
use ctgen_core::oracle::{chi_square_uniform, enumerate_loopless, enumerate_tables, tabulated_fixture, tally, Instance};
use ctgen_core::params::{to_f64, ParameterSet};
use ctgen_core::BitSource;

use crate::bench;
use crate::output::FORMAT_VERSION;

pub const ALPHA: f64 = 0.001;
pub const CRITERION1_SECONDS: f64 = 300.0;
pub const SCALING_LIMIT: f64 = 2.5;
pub const SCALING_SIZES: [usize; 4] = [64, 128, 256, 512];
pub const SCALING_SAMPLES: usize = 1000;
pub const SYMMETRY_QUALIFYING: u64 = 100_000;
pub const GEN_ITERATIONS: u64 = 1_000_000;
pub const TAIL_RUNS: u64 = 100_000;
pub const NO_REJECTION_FLOOR: f64 = 0.01;
pub const SMALL_N: usize = 50;
pub const COMPANION_N: usize = 128;

/// Criteria that cannot hold as stated, with the reason.
pub const UNATTAINABLE: [(&str, &str); 4] = [
    ("4", "honest t0 is 0 on 2-regular 50x50, so the stated precondition t0 > 0 is false"),
    ("5", "honest t0 is 0 on 2-regular 50x50, so Gen performs no iterations"),
    ("6", "honest t0 is 0 on 2-regular 50x50, so there are no Gen runs to measure"),
    ("10", "honest t0 is 0 on 2-regular 50x50, so there are no Gen runs to measure"),
];

/// Fixtures for criterion 3: `(rows, cols, t0)`.
pub fn fixtures() -> Vec<(Vec<u32>, Vec<u32>, u64)> {
    vec![
        (vec![2, 2, 2], vec![2, 2, 2], 3),
        (vec![2, 2, 2], vec![2, 2, 1, 1], 3),
        (vec![2, 2, 1, 1], vec![2, 2, 1, 1], 5),
        (vec![2, 2, 2, 2], vec![2, 2, 2, 2], 5),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: String,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    fn new(id: &str, title: &'static str, passed: bool, detail: String) -> Self {
        Self {
            id: id.to_string(),
            title,
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} [{}] {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail
        )
    }

    pub fn unattainable(&self) -> Option<&'static str> {
        UNATTAINABLE.iter().find(|(id, _)| *id == self.id).map(|(_, why)| *why)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    /// The `ctgen` binary, for the determinism check.
    pub exe: Option<PathBuf>,
    /// Criterion ids to run; all when `None`.
    pub only: Option<Vec<String>>,
    pub seed: u64,
}

fn wanted(opts: &Options, id: &str) -> bool {
    opts.only.as_ref().map_or(true, |ids| {
        ids.iter().any(|x| x == id || id.split('@').next() == Some(x.as_str()))
    })
}

/// Runs the suite, calling `report` as each outcome becomes available.
pub fn run(opts: &Options, mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    let mut out = Vec::new();
    let mut push = |o: Outcome, out: &mut Vec<Outcome>| {
        report(&o);
        out.push(o);
    };
    let seed = opts.seed;
    macro_rules! step {
        ($id:expr, $title:expr, $body:expr) => {
            if wanted(opts, $id) {
                let o = match $body {
                    Ok(o) => o,
                    Err(e) => Outcome::new($id, $title, false, format!("error: {e:#}")),
                };
                push(o, &mut out);
            }
        };
    }
    step!("1", TITLES[0], count_oracle());
    step!("2", TITLES[1], brute_uniformity(seed));
    step!("3", TITLES[2], fixture_uniformity(seed));
    let wants_small = ["4", "5", "6", "10"].iter().any(|id| wanted(opts, id));
    let small = if wants_small { Some(symmetry(SMALL_N, TailBound::Paper, seed)) } else { None };
    if let Some(s) = &small {
        step!("4", TITLES[3], s.as_ref().map(|s| s.outcome("4")).map_err(|e| anyhow::anyhow!("{e:#}")));
    }
    step!("4@128", TITLES[3], symmetry(COMPANION_N, TailBound::Auto, seed + 1).map(|s| s.outcome("4@128")));
    let wants_companion = ["5", "6", "10"].iter().any(|id| wanted(opts, id));
    let companion = if wants_companion { Some(gen_run(COMPANION_N, seed + 2)) } else { None };
    for (id, title, f) in [
        ("5", TITLES[4], lemma_bounds as fn(&GenRun, &str) -> Outcome),
        ("6", TITLES[5], tail_decay),
        ("10", TITLES[9], no_rejection),
    ] {
        if !wanted(opts, id) {
            continue;
        }
        match &small {
            Some(Ok(s)) => push(f(&s.run, id), &mut out),
            Some(Err(e)) => push(Outcome::new(id, title, false, format!("error: {e:#}")), &mut out),
            None => {}
        }
        let cid = format!("{id}@128");
        match &companion {
            Some(Ok(r)) => push(f(r, &cid), &mut out),
            Some(Err(e)) => push(Outcome::new(&cid, title, false, format!("error: {e:#}")), &mut out),
            None => {}
        }
    }
    step!("7", TITLES[6], scaling(seed));
    step!("8", TITLES[7], multigraph_mode(seed));
    step!("9", TITLES[8], determinism(opts.exe.clone()));
    out.sort_by_key(|o| order_key(&o.id));
    out
}

fn order_key(id: &str) -> (u32, u32) {
    let mut parts = id.split('@');
    let main = parts.next().and_then(|x| x.parse().ok()).unwrap_or(99);
    let sub = parts.next().and_then(|x| x.parse().ok()).unwrap_or(0);
    (main, sub)
}

pub const TITLES: [&str; 10] = [
    "count-oracle equivalence",
    "uniformity on the Brute path",
    "uniformity on the Gen path (verified fixtures)",
    "within-stratum symmetry at scale",
    "switching bounds as runtime assertions",
    "tail decay of the double-edge count",
    "linear-scaling proxy",
    "multigraph mode",
    "determinism",
    "rejection sanity",
];

pub fn report_json(outcomes: &[Outcome]) -> Value {
    json!({
        "format": FORMAT_VERSION,
        "kind": "verify",
        "passed": outcomes.iter().filter(|o| o.passed).count(),
        "failed": outcomes.iter().filter(|o| !o.passed).count(),
        "criteria": outcomes.iter().map(|o| json!({
            "id": o.id,
            "title": o.title,
            "passed": o.passed,
            "detail": o.detail,
            "unattainable": o.unattainable(),
        })).collect::<Vec<_>>(),
    })
}

fn vectors(total: u32) -> Vec<Vec<u32>> {
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
    let mut out = Vec::new();
    for len in 1..=3 {
        fill(&mut vec![0; len], 0, total, &mut out);
    }
    out
}

/// Criterion 1, by both counting routes.
pub fn count_oracle() -> Result<Outcome> {
    let start = Instant::now();
    let mut cache = CountCache::with_capacity(1 << 16);
    let (mut pairs, mut keys, mut mismatches) = (0u64, 0u64, Vec::new());
    for total in 1..=8u32 {
        let vs = vectors(total);
        for g in &vs {
            for h in &vs {
                let tables = enumerate_tables(g, h, 1_000_000)?;
                let mut by_t = vec![0u64; total as usize + 1];
                for t in &tables {
                    let s: u32 = t.iter().flatten().filter(|&&x| x >= 2).sum();
                    by_t[s as usize] += 1;
                }
                let mut sorted = g.clone();
                sorted.sort_unstable_by(|a, b| b.cmp(a));
                let layered = layered_top(&sorted, h);
                for (t, &n) in by_t.iter().enumerate() {
                    let n = BigUint::from(n);
                    let split = count_tables(&CountKey::new(g, h, t as u64)?, &mut cache);
                    let other = layered.get(t).cloned().unwrap_or_default();
                    if split != n || other != n {
                        mismatches.push(format!("{g:?} {h:?} t={t}"));
                    }
                    keys += 1;
                }
                pairs += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(Outcome::new(
        "1",
        TITLES[0],
        mismatches.is_empty() && secs < CRITERION1_SECONDS,
        format!(
            "{pairs} marginal pairs, {keys} keys, {} mismatches, {secs:.1}s (limit {CRITERION1_SECONDS}s){}",
            mismatches.len(),
            mismatches.first().map(|m| format!("; first {m}")).unwrap_or_default()
        ),
    ))
}

fn uniform_fit(outcomes: &[Vec<Vec<u32>>], samples: Vec<Vec<Vec<u32>>>) -> Result<(f64, f64, f64)> {
    let observed = tally(outcomes, samples)?;
    let k = outcomes.len();
    let r = chi_square_uniform(&observed, &vec![1.0 / k as f64; k])?;
    Ok((r.p_value, r.tv_distance, r.tv_alarm))
}

/// Criterion 2.
pub fn brute_uniformity(seed: u64) -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (rows, cols, n) in [(vec![2, 2], vec![2, 2], 30_000), (vec![2, 1], vec![2, 1], 20_000)] {
        let tables = enumerate_tables(&rows, &cols, 100)?;
        let mut s = MatrixGen::new(&rows, &cols, Config::default())?;
        let mut src = BitSource::new(seed);
        let samples = (0..n).map(|_| s.sample(&mut src)).collect::<ctgen_core::Result<Vec<_>>>()?;
        let (p, tv, alarm) = uniform_fit(&tables, samples)?;
        let brute_only = s.stats().gen.runs == 0;
        ok &= p > ALPHA && brute_only;
        parts.push(format!(
            "{rows:?}x{cols:?}: {} tables, {n} samples, p = {p:.3}, tv = {tv:.4} (alarm {alarm:.4}), gen runs {}",
            tables.len(),
            s.stats().gen.runs
        ));
    }
    Ok(Outcome::new("2", TITLES[1], ok, parts.join("; ")))
}

/// Criterion 3.
pub fn fixture_uniformity(seed: u64) -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, (rows, cols, t0)) in fixtures().into_iter().enumerate() {
        let fixture = tabulated_fixture(
            Instance::Bipartite {
                rows: rows.clone(),
                cols: cols.clone(),
            },
            t0,
        )?;
        let tables = enumerate_tables(&rows, &cols, 100_000)?;
        let mut s = MatrixGen::with_params(&rows, &cols, fixture.params, Config::default())?;
        s.enable_audit();
        let mut src = BitSource::new(seed + i as u64);
        let n = 1000 * tables.len();
        let samples = (0..n).map(|_| s.sample(&mut src)).collect::<ctgen_core::Result<Vec<_>>>()?;
        let (p, tv, alarm) = uniform_fit(&tables, samples)?;
        let st = s.stats();
        let switched = st.gen.iterations > st.gen.runs;
        let violations = s.audit().map_or(0, LemmaAudit::violations);
        ok &= p > ALPHA && switched && violations == 0;
        parts.push(format!(
            "{rows:?}x{cols:?} t0={t0}: {} tables, {n} samples, p = {p:.3}, tv = {tv:.4} (alarm {alarm:.4}), gen iterations {}, audit violations {violations}",
            tables.len(),
            st.gen.iterations
        ));
    }
    Ok(Outcome::new("3", TITLES[2], ok && parts.len() >= 3, parts.join("; ")))
}

/// Counters from a long sampling run with the audit enabled.
#[derive(Debug, Clone)]
pub struct GenRun {
    pub n: usize,
    pub params: ParameterSet,
    pub stats: DriverStats,
    pub audit: LemmaAudit,
    pub samples: u64,
}

pub struct Symmetry {
    pub run: GenRun,
    pub qualifying: u64,
    pub p_value: f64,
    pub tv: f64,
    pub alarm: f64,
}

impl Symmetry {
    fn outcome(&self, id: &str) -> Outcome {
        let t0 = self.run.params.t0();
        let passed = t0 > 0 && self.qualifying >= SYMMETRY_QUALIFYING && self.p_value > ALPHA;
        Outcome::new(
            id,
            TITLES[3],
            passed,
            format!(
                "2-regular {n}x{n}, honest t0 = {t0}; {} qualifying of {} samples, row-index p = {:.3}, tv = {:.4} (alarm {:.4}), gen runs {}",
                self.qualifying,
                self.run.samples,
                self.p_value,
                self.tv,
                self.alarm,
                self.run.stats.gen.runs,
                n = self.run.n
            ),
        )
    }
}

/// Criterion 4 on 2-regular `n × n`: the row of the lone double entry.
pub fn symmetry(n: usize, tail: TailBound, seed: u64) -> Result<Symmetry> {
    let marg = vec![2u32; n];
    let mut s = MatrixGen::new(&marg, &marg, Config { tail, ..Config::default() })?;
    s.enable_audit();
    let mut src = BitSource::new(seed);
    let mut rows = vec![0u64; n];
    let (mut qualifying, mut samples) = (0u64, 0u64);
    while qualifying < SYMMETRY_QUALIFYING {
        if samples >= 40 * SYMMETRY_QUALIFYING {
            bail!("only {qualifying} qualifying samples in {samples}");
        }
        let cells = s.sample_cells(&mut src)?;
        samples += 1;
        let mut doubles = cells.iter().filter(|c| c.2 == 2);
        if let (Some(&(r, _, _)), None) = (doubles.next(), doubles.next()) {
            rows[r as usize] += 1;
            qualifying += 1;
        }
    }
    let r = chi_square_uniform(&rows, &vec![1.0 / n as f64; n])?;
    Ok(Symmetry {
        run: GenRun {
            n,
            params: s.params().clone(),
            stats: s.stats().clone(),
            audit: s.audit().cloned().unwrap_or_default(),
            samples,
        },
        qualifying,
        p_value: r.p_value,
        tv: r.tv_distance,
        alarm: r.tv_alarm,
    })
}

/// Samples 2-regular `n × n` with the audit on until Gen has run at least
/// `GEN_ITERATIONS` iterations and `TAIL_RUNS` runs.
pub fn gen_run(n: usize, seed: u64) -> Result<GenRun> {
    let marg = vec![2u32; n];
    let config = Config {
        tail: TailBound::Auto,
        ..Config::default()
    };
    let mut s = MatrixGen::new(&marg, &marg, config)?;
    if s.params().t0() == 0 {
        bail!("honest t0 is 0 on {n}x{n}");
    }
    s.enable_audit();
    let mut src = BitSource::new(seed);
    let mut samples = 0u64;
    while s.stats().gen.iterations < GEN_ITERATIONS || s.stats().gen.runs < TAIL_RUNS {
        s.sample_cells(&mut src)?;
        samples += 1;
    }
    Ok(GenRun {
        n,
        params: s.params().clone(),
        stats: s.stats().clone(),
        audit: s.audit().cloned().unwrap_or_default(),
        samples,
    })
}

/// Criterion 5.
pub fn lemma_bounds(r: &GenRun, id: &str) -> Outcome {
    let a = &r.audit;
    let it = r.stats.gen.iterations;
    let passed = r.params.t0() > 0 && it >= GEN_ITERATIONS && a.violations() == 0;
    Outcome::new(
        id,
        TITLES[4],
        passed,
        format!(
            "2-regular {n}x{n}, t0 = {}: {it} Gen iterations (need {GEN_ITERATIONS}); reverse-count bounds {}/{} violated, transition mass {}/{}, inequality on b̲ {}/{}",
            r.params.t0(),
            a.reverse_violations,
            a.reverse_checks,
            a.mass_violations,
            a.mass_checks,
            a.ratio_violations,
            a.ratio_checks,
            n = r.n
        ),
    )
}

/// `3 S₂ T₂ / (ε² M²)` for the instance behind `r`.
fn double_threshold(r: &GenRun) -> f64 {
    let p = r.params.profile();
    let m = p.total() as f64;
    let s2 = 2.0 * r.n as f64;
    let eps = to_f64(r.params.eps());
    3.0 * s2 * s2 / (eps * eps * m * m)
}

/// Criterion 6.
pub fn tail_decay(r: &GenRun, id: &str) -> Outcome {
    let runs = r.stats.gen.runs;
    if r.params.t0() == 0 || runs < TAIL_RUNS {
        return Outcome::new(
            id,
            TITLES[5],
            false,
            format!("2-regular {n}x{n}, t0 = {}: {runs} Gen runs (need {TAIL_RUNS})", r.params.t0(), n = r.n),
        );
    }
    let tau = double_threshold(r);
    let reach = &r.stats.gen.double_reach;
    let mut ok = true;
    let mut parts = Vec::new();
    for j in 1..=8u32 {
        let k = (tau + f64::from(j)).ceil() as usize;
        let hits = reach.get(k).copied().unwrap_or(0);
        let p = hits as f64 / runs as f64;
        let bound = 1.5 * (7.0f64 / 8.0).powi(j as i32);
        ok &= p <= bound;
        parts.push(format!("j={j}: {p:.2e} <= {bound:.3}"));
    }
    Outcome::new(
        id,
        TITLES[5],
        ok,
        format!(
            "2-regular {n}x{n}, t0 = {}, {runs} runs, threshold {tau:.2}, max doubles {}; {}",
            r.params.t0(),
            r.stats.gen.max_doubles,
            parts.join(", "),
            n = r.n
        ),
    )
}

/// Criterion 10.
pub fn no_rejection(r: &GenRun, id: &str) -> Outcome {
    let g = &r.stats.gen;
    let frac = if g.runs == 0 { 0.0 } else { g.outputs as f64 / g.runs as f64 };
    Outcome::new(
        id,
        TITLES[9],
        r.params.t0() > 0 && g.runs > 0 && frac >= NO_REJECTION_FLOOR,
        format!(
            "2-regular {n}x{n}, t0 = {}: {} of {} Gen runs finished without rejection ({frac:.3}, floor {NO_REJECTION_FLOOR}); f/b/β rejections {}/{}/{}",
            r.params.t0(),
            g.outputs,
            g.runs,
            g.f_rejects,
            g.b_rejects,
            g.beta_rejects,
            n = r.n
        ),
    )
}

/// Criterion 7.
pub fn scaling(seed: u64) -> Result<Outcome> {
    let rows = bench::scaling(&SCALING_SIZES, SCALING_SAMPLES, seed, TailBound::Auto)?;
    let ratios = bench::ratios(&rows);
    let ok = ratios.iter().all(|&r| r <= SCALING_LIMIT);
    let sizes: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "n={} t0={} {:.1}us (mean {:.1}us)",
                r.n,
                r.t0,
                r.per_sample.as_secs_f64() * 1e6,
                r.mean.as_secs_f64() * 1e6
            )
        })
        .collect();
    let ratios: Vec<String> = ratios.iter().map(|r| format!("{r:.2}")).collect();
    Ok(Outcome::new(
        "7",
        TITLES[6],
        ok,
        format!(
            "{} samples per size, median of {} batch means; {}; ratios {} (limit {SCALING_LIMIT})",
            SCALING_SAMPLES,
            bench::BATCHES,
            sizes.join(", "),
            ratios.join(", ")
        ),
    ))
}

/// Criterion 8.
pub fn multigraph_mode(seed: u64) -> Result<Outcome> {
    let mut src = BitSource::new(seed);
    let mut parts = Vec::new();
    let mut ok = true;
    for (d, n) in [(vec![2u32, 2], 1000), (vec![2, 2, 2], 1000)] {
        let truth = enumerate_loopless(&d, 10)?;
        let mut s = MultigraphGen::new(&d, Config::default())?;
        let mut hits = 0;
        for _ in 0..n {
            let g = s.sample_graph(&mut src)?;
            hits += usize::from(truth.len() == 1 && s.sequence().adjacency(&g) == truth[0]);
        }
        ok &= hits == n;
        parts.push(format!("{d:?}: {hits}/{n} equal the unique multigraph"));
    }
    let d = [1u32, 1, 1, 1];
    let truth = enumerate_loopless(&d, 10)?;
    let mut s = MultigraphGen::new(&d, Config::default())?;
    let samples = (0..30_000)
        .map(|_| s.sample_graph(&mut src).map(|g| s.sequence().adjacency(&g)))
        .collect::<ctgen_core::Result<Vec<_>>>()?;
    let (p, tv, alarm) = uniform_fit(&truth, samples)?;
    ok &= truth.len() == 3 && p > ALPHA;
    parts.push(format!(
        "[1, 1, 1, 1]: {} matchings, 30000 samples, p = {p:.3}, tv = {tv:.4} (alarm {alarm:.4})",
        truth.len()
    ));
    Ok(Outcome::new("8", TITLES[7], ok, parts.join("; ")))
}

/// Arguments for the determinism runs: approximate mode with no restarts
/// allowed, so cutoffs appear in the stream, two workers, stats on.
pub fn determinism_args(seed: u64) -> Vec<String> {
    let marg = vec!["2"; COMPANION_N].join(",");
    [
        "sample",
        "--rows",
        &marg,
        "--cols",
        &marg,
        "--samples",
        "60",
        "--seed",
        &seed.to_string(),
        "--format",
        "json",
        "--cells",
        "--tail",
        "counted",
        "--max-restarts",
        "0",
        "--jobs",
        "2",
        "--stats",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

/// Criterion 9.
pub fn determinism(exe: Option<PathBuf>) -> Result<Outcome> {
    let exe = match exe {
        Some(p) => p,
        None => std::env::current_exe().context("locating the ctgen binary")?,
    };
    let run = |seed: u64| -> Result<(Vec<u8>, Vec<u8>)> {
        let out = Command::new(&exe).args(determinism_args(seed)).output()?;
        if !out.status.success() {
            bail!("ctgen exited with {}: {}", out.status, String::from_utf8_lossy(&out.stderr));
        }
        Ok((out.stdout, out.stderr))
    };
    let (a, b, c) = (run(7)?, run(7)?, run(8)?);
    let doc: Value = serde_json::from_slice(&a.0)?;
    let samples = doc["samples"].as_array().map_or(0, Vec::len);
    let cutoffs = doc["samples"].as_array().map_or(0, |s| s.iter().filter(|x| x.is_null()).count());
    let same = a == b;
    let differs = a.0 != c.0;
    Ok(Outcome::new(
        "9",
        TITLES[8],
        same && differs && cutoffs > 0 && cutoffs < samples,
        format!(
            "two runs with seed 7: stdout {} bytes, stats {} bytes, identical = {same}; {samples} samples with {cutoffs} restart cutoffs; seed 8 differs = {differs}",
            a.0.len(),
            a.1.len()
        ),
    ))
}
