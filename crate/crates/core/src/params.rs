//! The parameter ledger driving `Gen` and `Brute`: the threshold `t0`,
//! the slack `ε`, the switching-count bounds `f̄_k` and `b̲_k(m, i)`, the
//! stratum weights `β_m`, and the Brute mixing probability `ρ̂`.
//!
//! Two variants share the machinery. `Bipartite` is the contingency-table
//! case; `Loopless` is the multigraph case, where every multiple edge can be
//! anchored in two orientations and stars are drawn from one vertex set.

use std::borrow::Cow;
use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exactprob::{ratio, Boundary, Categorical, Rational};
use crate::marginals::{falling_factorial, Marginals};

/// Rational upper bound on Euler's number used in `B̂`.
pub const E_UPPER_NUM: u64 = 2_718_281_829;
pub const E_UPPER_DEN: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Bipartite,
    Loopless,
}

impl Variant {
    /// Orientations per multiple edge: the `i = 0` reverse count is
    /// `orientations * m_k`.
    pub fn orientations(self) -> u64 {
        match self {
            Variant::Bipartite => 1,
            Variant::Loopless => 2,
        }
    }
}

/// The instance data the parameters depend on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    variant: Variant,
    total: u64,
    max_degree: u32,
    /// `f̄_k` for `k = 0..=Δ` (entries below 2 unused).
    f_bar: Vec<BigUint>,
}

impl Profile {
    pub fn bipartite(mg: &Marginals) -> Self {
        let moments = mg.moments();
        let delta = mg.max_degree();
        let f_bar = (0..=delta).map(|k| moments.row(k) * moments.col(k)).collect();
        Self {
            variant: Variant::Bipartite,
            total: mg.total(),
            max_degree: delta,
            f_bar,
        }
    }

    /// Degree sequence of a loopless multigraph; `total` is the degree sum.
    pub fn loopless(degrees: &[u32]) -> Self {
        let delta = degrees.iter().copied().max().unwrap_or(0);
        let f_bar = (0..=delta)
            .map(|k| {
                let mk: BigUint = degrees
                    .iter()
                    .map(|&d| falling_factorial(u64::from(d), k))
                    .sum();
                &mk * &mk
            })
            .collect();
        Self {
            variant: Variant::Loopless,
            total: degrees.iter().map(|&d| u64::from(d)).sum(),
            max_degree: delta,
            f_bar,
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// `S_k T_k` (bipartite) or `M_k^2` (loopless); zero above `Δ`.
    pub fn f_bar(&self, k: u32) -> BigUint {
        self.f_bar.get(k as usize).cloned().unwrap_or_default()
    }

    /// `εM` as an integer for a given `t0` (may be nonpositive).
    pub fn eps_m(&self, t0: u64) -> i128 {
        let (m, d2) = (i128::from(self.total), i128::from(self.max_degree).pow(2));
        match self.variant {
            Variant::Bipartite => m - i128::from(t0) - 4 * d2,
            Variant::Loopless => m - 2 * i128::from(t0) - 6 * d2,
        }
    }

    /// Whether `t0` meets all three threshold conditions.
    pub fn t0_feasible(&self, t0: u64, eps_min: &Rational) -> bool {
        if t0 <= 7 || t0 >= self.total {
            return false;
        }
        let e = self.eps_m(t0);
        if e <= 0 {
            return false;
        }
        let big = |x: i128| BigInt::from(x);
        let (m, d) = (big(i128::from(self.total)), big(i128::from(self.max_degree)));
        let e = big(e);
        let t = big(i128::from(t0));
        let d2 = &d * &d;
        let d3 = &d2 * &d;
        let d4 = &d2 * &d2;
        // ε >= eps_min  <=>  E * den >= num * M
        if &e * eps_min.denom() < eps_min.numer() * &m {
            return false;
        }
        // ε^3 > c Δ^4 / M  <=>  E^3 > c Δ^4 M^2
        let (c, lhs, rhs) = match self.variant {
            Variant::Bipartite => (
                4u32,
                2u32 * &t * (&t - &d2 - &d3),
                (&t + 4u32 * &d2).pow(2),
            ),
            Variant::Loopless => (
                2u32,
                8u32 * &t * (&t - &d2 - &d3),
                (2u32 * &t + 6u32 * &d2).pow(2),
            ),
        };
        if e.pow(3) <= c * d4 * &m * &m {
            return false;
        }
        lhs >= rhs
    }

    /// Largest feasible `t0` in `(7, M)`, or 0 if none.
    pub fn choose_t0(&self, eps_min: &Rational) -> u64 {
        if self.max_degree < 2 {
            return 0;
        }
        (8..self.total)
            .rev()
            .find(|&t0| self.t0_feasible(t0, eps_min))
            .unwrap_or(0)
    }
}

/// Stratum index `m`: `m[k]` is the number of multiplicity-`k` edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Stratum {
    m: Vec<u32>,
    sum: u64,
}

impl Stratum {
    pub fn zero(max_degree: u32) -> Self {
        Self {
            m: vec![0; max_degree as usize + 1],
            sum: 0,
        }
    }

    pub fn from_counts(max_degree: u32, counts: &[(u32, u32)]) -> Self {
        let mut s = Self::zero(max_degree);
        for &(k, c) in counts {
            for _ in 0..c {
                s.inc(k);
            }
        }
        s
    }

    pub fn get(&self, k: u32) -> u32 {
        self.m.get(k as usize).copied().unwrap_or(0)
    }

    /// `S(m)`, the number of edges lying in multiple edges.
    pub fn sum(&self) -> u64 {
        self.sum
    }

    /// `ℓ(m)`: largest `k` with `m_k > 0`, or 2 for the zero stratum.
    pub fn level(&self) -> u32 {
        (2..self.m.len())
            .rev()
            .find(|&k| self.m[k] > 0)
            .map_or(2, |k| k as u32)
    }

    pub fn is_zero(&self) -> bool {
        self.sum == 0
    }

    /// True when only double edges are present.
    pub fn is_double_only(&self) -> bool {
        self.m.iter().skip(3).all(|&c| c == 0)
    }

    pub fn inc(&mut self, k: u32) {
        assert!(k >= 2, "multiplicity below 2 has no stratum entry");
        self.m[k as usize] += 1;
        self.sum += u64::from(k);
    }

    pub fn dec(&mut self, k: u32) {
        self.m[k as usize] -= 1;
        self.sum -= u64::from(k);
    }

    pub fn plus(&self, k: u32) -> Self {
        let mut s = self.clone();
        s.inc(k);
        s
    }

    pub fn max_degree(&self) -> u32 {
        self.m.len() as u32 - 1
    }

    /// Counts indexed by multiplicity `0..=Δ`.
    pub fn counts(&self) -> &[u32] {
        &self.m
    }

    /// `self ≺ other` with the level-prefix condition.
    pub fn precedes(&self, other: &Stratum) -> bool {
        let l = self.level() as usize;
        if self.m[..l] != other.m[..l] {
            return false;
        }
        self.m[l..] < other.m[l..]
    }
}

/// `β_m`, with the `-1` of strata at or beyond `t0` kept out of the
/// rational domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Beta {
    NegOne,
    Value(Rational),
}

impl Beta {
    /// `1 + β`, zero for the sentinel.
    pub fn one_plus(&self) -> Rational {
        match self {
            Beta::NegOne => Rational::zero(),
            Beta::Value(b) => Rational::one() + b,
        }
    }
}

/// Per-stratum lower bounds for the exhaustive-bound fixture mode:
/// `bounds[m'] = [b̲(m', 1), …, b̲(m', k)]` with `k = ℓ(m')`, plus the
/// exact `β_m` for every stratum below `t0` and the exact `B̂`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TableBounds {
    pub lower: HashMap<Stratum, Vec<u64>>,
    /// Strata below `t0` that are nonempty.
    pub populated: Vec<Stratum>,
    pub b_hat: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Bounds {
    Paper,
    Table {
        lower: HashMap<Stratum, Vec<u64>>,
        beta: HashMap<Stratum, Rational>,
    },
}

/// One step of the stratum chain out of `m`: the output coin and the
/// categorical choice of the next multiplicity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub output: Boundary,
    /// Multiplicities `s` in the order of `choices`.
    pub levels: Vec<u32>,
    pub choices: Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterSet {
    profile: Profile,
    t0: u64,
    eps: Rational,
    eps_min: Rational,
    bounds: Bounds,
    /// `β` for `m = (0, m2, 0, …)`, indexed by `m2` with `2 m2 < t0`.
    beta_table: Vec<Rational>,
    /// Precomputed steps of double-only strata; `None` when unpopulated.
    steps: Vec<Option<Step>>,
    b_hat: Option<Rational>,
    rho_hat: Rational,
}

pub fn default_eps_min() -> Rational {
    ratio(1u32, 8u32)
}

impl ParameterSet {
    /// Honest parameters: the largest feasible `t0`.
    pub fn new(profile: Profile, eps_min: Rational) -> Result<Self> {
        let t0 = profile.choose_t0(&eps_min);
        Self::build(profile, t0, eps_min, Bounds::Paper, None)
    }

    /// Paper formulas with `t0` imposed; no feasibility check here (fixtures
    /// verify the lemma inequalities exhaustively before use).
    pub fn with_forced_t0(profile: Profile, t0: u64, eps_min: Rational) -> Result<Self> {
        if t0 != 0 && (t0 <= 7 || profile.eps_m(t0) <= 0) {
            return Err(Error::FixtureInvalid(format!(
                "forced t0 = {t0} leaves no valid ε or B"
            )));
        }
        Self::build(profile, t0, eps_min, Bounds::Paper, None)
    }

    /// Exact per-stratum bounds supplied by exhaustive enumeration.
    pub fn with_table(profile: Profile, t0: u64, table: TableBounds) -> Result<Self> {
        if t0 == 0 {
            return Err(Error::FixtureInvalid("table mode needs t0 > 0".into()));
        }
        let TableBounds {
            lower,
            populated,
            b_hat,
        } = table;
        let beta = table_betas(&profile, t0, &lower, &populated)?;
        let bounds = Bounds::Table { lower, beta };
        Self::build(profile, t0, default_eps_min(), bounds, Some(b_hat))
    }

    fn build(
        profile: Profile,
        t0: u64,
        eps_min: Rational,
        bounds: Bounds,
        b_hat_override: Option<Rational>,
    ) -> Result<Self> {
        let eps = if t0 == 0 {
            Rational::zero()
        } else {
            Rational::new(profile.eps_m(t0).into(), BigInt::from(profile.total))
        };
        let mut params = Self {
            profile,
            t0,
            eps,
            eps_min,
            bounds,
            beta_table: Vec::new(),
            steps: Vec::new(),
            b_hat: None,
            rho_hat: Rational::one(),
        };
        if t0 == 0 {
            return Ok(params);
        }
        params.beta_table = params.build_beta_table();
        let b_hat = match b_hat_override {
            Some(b) => b,
            None => params.paper_b_hat(),
        };
        let beta0 = params.beta_table[0].clone();
        params.rho_hat = &b_hat / (Rational::one() + beta0 + &b_hat);
        params.b_hat = Some(b_hat);
        let delta = params.profile.max_degree;
        params.steps = (0..params.beta_table.len() as u32)
            .map(|m2| {
                let m = Stratum::from_counts(delta, &[(2, m2)]);
                match params.beta(&m) {
                    Beta::Value(_) => params.compute_step(&m).map(Some),
                    Beta::NegOne => Ok(None),
                }
            })
            .collect::<Result<_>>()?;
        Ok(params)
    }

    /// Replaces `B̂` by another upper bound on the high-multiplicity ratio
    /// and recomputes `ρ̂`. Ignored when `t0 = 0`.
    pub fn with_b_hat(mut self, b_hat: Rational) -> Self {
        if self.t0 > 0 {
            let beta0 = &self.beta_table[0];
            self.rho_hat = &b_hat / (Rational::one() + beta0 + &b_hat);
            self.b_hat = Some(b_hat);
        }
        self
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn variant(&self) -> Variant {
        self.profile.variant
    }

    pub fn t0(&self) -> u64 {
        self.t0
    }

    pub fn eps(&self) -> &Rational {
        &self.eps
    }

    pub fn eps_min(&self) -> &Rational {
        &self.eps_min
    }

    /// `εM`, an integer by construction.
    pub fn eps_m(&self) -> i128 {
        self.profile.eps_m(self.t0)
    }

    pub fn total(&self) -> u64 {
        self.profile.total
    }

    pub fn max_degree(&self) -> u32 {
        self.profile.max_degree
    }

    pub fn f_bar(&self, k: u32) -> BigUint {
        self.profile.f_bar(k)
    }

    pub fn beta_table(&self) -> &[Rational] {
        &self.beta_table
    }

    pub fn b_hat(&self) -> Option<&Rational> {
        self.b_hat.as_ref()
    }

    pub fn rho_hat(&self) -> &Rational {
        &self.rho_hat
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.bounds, Bounds::Table { .. })
    }

    /// `b̲_k(m, i)`; for `i = 0` this is `m_k` (twice that when loopless).
    /// Out-of-regime strata can make the paper's `k = 2` value negative.
    pub fn b_under(&self, k: u32, m: &Stratum, i: u32) -> i128 {
        if i == 0 {
            return i128::from(self.profile.variant.orientations() * u64::from(m.get(k)));
        }
        if let Bounds::Table { lower, .. } = &self.bounds {
            return lower
                .get(m)
                .and_then(|row| row.get(i as usize - 1))
                .map_or(0, |&b| i128::from(b));
        }
        if k >= 3 {
            return self.eps_m();
        }
        let (mm, s, d) = (
            i128::from(self.profile.total),
            i128::from(m.sum()),
            i128::from(self.profile.max_degree),
        );
        let i = i128::from(i);
        match self.profile.variant {
            Variant::Bipartite => mm - s - 2 * i * d - 2 * d * d,
            Variant::Loopless => mm - 2 * s - 4 * i * d - 2 * d * d,
        }
    }

    /// `b̲_k(m) = Π_{i=0..k} b̲_k(m, i)`, or `None` if a factor is not
    /// positive.
    pub fn b_under_product(&self, k: u32, m: &Stratum) -> Option<BigUint> {
        let mut acc = BigUint::one();
        for i in 0..=k {
            let b = self.b_under(k, m, i);
            if b <= 0 {
                return None;
            }
            acc *= BigUint::from(b as u128);
        }
        Some(acc)
    }

    /// `β_m`.
    pub fn beta(&self, m: &Stratum) -> Beta {
        if self.t0 == 0 || m.sum() >= self.t0 {
            return Beta::NegOne;
        }
        match &self.bounds {
            Bounds::Table { beta, .. } => {
                beta.get(m).cloned().map_or(Beta::NegOne, Beta::Value)
            }
            Bounds::Paper => {
                let l = m.level();
                if l >= 3 {
                    Beta::Value(self.closed_form_beta(l))
                } else {
                    Beta::Value(self.beta_table[m.get(2) as usize].clone())
                }
            }
        }
    }

    /// `c Δ^{2ℓ-2} / (M^{ℓ-2} ε^ℓ)` with `c = 4` (bipartite) or 2.
    pub fn closed_form_beta(&self, level: u32) -> Rational {
        let c: u32 = match self.profile.variant {
            Variant::Bipartite => 4,
            Variant::Loopless => 2,
        };
        let d = BigUint::from(self.profile.max_degree);
        let m = BigUint::from(self.profile.total);
        let e = BigUint::from(self.eps_m().max(1) as u128);
        // ε^ℓ M^{ℓ-2} = E^ℓ / M^2
        let num = c * d.pow(2 * level - 2) * &m * &m;
        let den = e.pow(level);
        ratio(num, den)
    }

    /// Weight of the step `m → m + e_s` before dividing by `β_m`:
    /// `f̄_s / b̲_s(m + e_s) · (1 + β_{m+e_s})`. Zero when the target lies
    /// at or beyond `t0` or has no usable lower bound.
    pub fn forward_weight(&self, m: &Stratum, s: u32) -> Rational {
        let target = m.plus(s);
        let one_plus = self.beta(&target).one_plus();
        if one_plus.is_zero() {
            return Rational::zero();
        }
        let f = self.profile.f_bar(s);
        if f.is_zero() {
            return Rational::zero();
        }
        match self.b_under_product(s, &target) {
            Some(b) => ratio(f, b) * one_plus,
            None => Rational::zero(),
        }
    }

    /// Transition probabilities out of `m` for `s = ℓ(m)..=Δ`; empty when
    /// `β_m = 0` (output is certain).
    pub fn transition_probs(&self, m: &Stratum) -> Vec<(u32, Rational)> {
        let beta = match self.beta(m) {
            Beta::Value(b) if !b.is_zero() => b,
            _ => return Vec::new(),
        };
        (m.level()..=self.profile.max_degree)
            .map(|s| (s, self.forward_weight(m, s) / &beta))
            .collect()
    }

    /// Left side of the stratum-chain normalization: the total transition
    /// probability out of `m` (must not exceed 1).
    pub fn transition_mass(&self, m: &Stratum) -> Rational {
        self.transition_probs(m).into_iter().map(|(_, p)| p).sum()
    }

    /// Output coin and next-multiplicity distribution for `m`.
    pub fn step(&self, m: &Stratum) -> Result<Cow<'_, Step>> {
        if m.is_double_only() {
            if let Some(Some(step)) = self.steps.get(m.get(2) as usize) {
                return Ok(Cow::Borrowed(step));
            }
        }
        self.compute_step(m).map(Cow::Owned)
    }

    fn compute_step(&self, m: &Stratum) -> Result<Step> {
        let output = match self.beta(m) {
            Beta::Value(b) => {
                let p = (Rational::one() + b).recip();
                Boundary::from_rational(&p)
            }
            Beta::NegOne => {
                return Err(Error::InvariantViolation(format!(
                    "stratum with S(m) = {} reached with t0 = {}",
                    m.sum(),
                    self.t0
                )))
            }
        };
        let probs = self.transition_probs(m);
        let levels = probs.iter().map(|(s, _)| *s).collect();
        let values: Vec<Rational> = probs.into_iter().map(|(_, p)| p).collect();
        let choices = Categorical::new(&values).map_err(|e| {
            Error::InvariantViolation(format!("transition mass out of stratum: {e}"))
        })?;
        Ok(Step {
            output,
            levels,
            choices,
        })
    }

    fn build_beta_table(&self) -> Vec<Rational> {
        let delta = self.profile.max_degree;
        let len = self.t0.div_ceil(2) as usize;
        let mut table = vec![Rational::zero(); len];
        if let Bounds::Table { beta, .. } = &self.bounds {
            for (m2, slot) in table.iter_mut().enumerate() {
                let m = Stratum::from_counts(delta, &[(2, m2 as u32)]);
                *slot = beta.get(&m).cloned().unwrap_or_default();
            }
            return table;
        }
        for m2 in (0..len).rev() {
            let m = Stratum::from_counts(delta, &[(2, m2 as u32)]);
            let mut acc = Rational::zero();
            for i in 2..=delta {
                let target = m.plus(i);
                if target.sum() >= self.t0 {
                    continue;
                }
                let one_plus = if i == 2 {
                    Rational::one() + &table[m2 + 1]
                } else {
                    Rational::one() + self.closed_form_beta(i)
                };
                let f = self.profile.f_bar(i);
                if f.is_zero() {
                    continue;
                }
                if let Some(b) = self.b_under_product(i, &target) {
                    acc += ratio(f, b) * one_plus;
                }
            }
            table[m2] = acc;
        }
        table
    }

    /// `B̂`: the paper's `B` with `e` replaced by `ê` and the exponent
    /// `εM/2` rounded up.
    fn paper_b_hat(&self) -> Rational {
        let m = BigInt::from(self.profile.total);
        let e_m = BigInt::from(self.eps_m());
        let one_minus = Rational::new(&m - &e_m, m.clone());
        let sq = &one_minus * &one_minus;
        let base1 = Rational::from_integer(3.into()) / (Rational::from_integer(2.into()) * &sq)
            + Rational::from_integer(3.into()) / (Rational::from_integer(4.into()) * &sq * &sq);
        let exp1 = (self.eps_m() as u128).div_ceil(2) as u32;
        let delta2 = BigInt::from(self.profile.max_degree).pow(2);
        let c: u32 = match self.profile.variant {
            Variant::Bipartite => 1,
            Variant::Loopless => 2,
        };
        let eps = &self.eps;
        let t_minus = BigInt::from(self.t0 - 7);
        let e_hat = Rational::new(E_UPPER_NUM.into(), E_UPPER_DEN.into());
        let base2 = Rational::from_integer(delta2) * e_hat
            / (Rational::from_integer(c.into()) * eps * eps * &one_minus
                * Rational::from_integer(t_minus));
        Rational::from_integer(4.into()) * rpow(&base1, exp1) * rpow(&base2, (self.t0 - 7) as u32)
    }
}

fn rpow(x: &Rational, k: u32) -> Rational {
    Rational::new(x.numer().pow(k), x.denom().pow(k))
}

/// `β_m` for every populated stratum in table mode, computed by the same
/// recursion that defines the double-edge table, for all levels.
fn table_betas(
    profile: &Profile,
    t0: u64,
    lower: &HashMap<Stratum, Vec<u64>>,
    populated: &[Stratum],
) -> Result<HashMap<Stratum, Rational>> {
    let mut order: Vec<&Stratum> = populated.iter().filter(|m| m.sum() < t0).collect();
    // every successor has strictly larger S(m)
    order.sort_by_key(|m| std::cmp::Reverse(m.sum()));
    let mut beta: HashMap<Stratum, Rational> = HashMap::new();
    let orient = profile.variant.orientations();
    for m in order {
        let mut acc = Rational::zero();
        for s in m.level()..=profile.max_degree {
            let target = m.plus(s);
            let Some(bt) = beta.get(&target) else {
                continue;
            };
            let f = profile.f_bar(s);
            if f.is_zero() {
                continue;
            }
            let row = lower.get(&target).ok_or_else(|| {
                Error::FixtureInvalid(format!("no lower bounds for populated stratum {target:?}"))
            })?;
            let mut b = BigUint::from(orient * u64::from(target.get(s)));
            for &x in row {
                if x == 0 {
                    return Err(Error::FixtureInvalid(format!(
                        "a partial anchor of {target:?} has no extension"
                    )));
                }
                b *= x;
            }
            acc += ratio(f, b) * (Rational::one() + bt);
        }
        beta.insert(m.clone(), acc);
    }
    Ok(beta)
}

/// Exact `Rational` to `f64`, for reporting only.
pub fn to_f64(x: &Rational) -> f64 {
    let (n, d) = (x.numer(), x.denom());
    let shift = n.bits().max(d.bits()).saturating_sub(1000) as usize;
    let (n, d) = (n >> shift, d >> shift);
    let v = n.to_f64().unwrap_or(f64::INFINITY) / d.to_f64().unwrap_or(f64::INFINITY);
    if v.is_nan() {
        log2_ratio(x).exp2()
    } else {
        v
    }
}

/// `log2` of a positive rational, for reporting magnitudes like `ρ̂`.
pub fn log2_ratio(x: &Rational) -> f64 {
    let top = |v: &BigInt| -> f64 {
        let bits = v.bits();
        let shift = bits.saturating_sub(60);
        let head = (v.abs() >> shift as usize).to_f64().unwrap_or(0.0);
        head.log2() + shift as f64
    };
    if !x.is_positive() {
        return f64::NEG_INFINITY;
    }
    top(x.numer()) - top(x.denom())
}
