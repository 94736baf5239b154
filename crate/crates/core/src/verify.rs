//! Statistical tests for open hypotheses about interventional distributions,
//! and a Monte-Carlo harness that runs them against a known model.
//!
//! A hypothesis is a positive boolean combination of constraints
//! `P[α](C) > r`. With `k` constraints each one is tested at level `ε/k`
//! with the Hoeffding margin `c_n(ε/k) = sqrt(ln(k/ε) / (2n))`: it fires
//! when the empirical frequency of `C` exceeds `r + c_n`. All decisions are
//! made by comparing integer counts against exact thresholds.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::causation::{GoodnessReport, Roles};
use crate::error::{Error, Result};
use crate::hierarchy::TwoVarFamily;
use crate::rational::{format_rational, int, one, ratio, to_f64, zero, Rational};
use crate::scm::{interventional, Event, Intervention, StructuralModel, Valuation};

/// A finite union of cylinder events.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellSet(pub Vec<Event>);

impl CellSet {
    pub fn cylinder(event: Event) -> Self {
        CellSet(vec![event])
    }

    pub fn contains(&self, order: &[String], v: &Valuation) -> Result<bool> {
        for e in &self.0 {
            if e.holds_in(order, v)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// `P[intervention](event) > gt`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub intervention: Intervention,
    pub event: CellSet,
    pub gt: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Hypothesis {
    Atom(Constraint),
    All(Vec<Hypothesis>),
    Any(Vec<Hypothesis>),
}

impl Hypothesis {
    pub fn atom(intervention: Intervention, event: Event, gt: Rational) -> Self {
        Hypothesis::Atom(Constraint { intervention, event: CellSet::cylinder(event), gt })
    }

    /// Constraints in left-to-right order.
    pub fn constraints(&self) -> Vec<&Constraint> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a Constraint>) {
        match self {
            Hypothesis::Atom(c) => out.push(c),
            Hypothesis::All(hs) | Hypothesis::Any(hs) => hs.iter().for_each(|h| h.collect(out)),
        }
    }

    /// Distinct interventions, sorted.
    pub fn interventions(&self) -> Vec<Intervention> {
        let mut out: Vec<Intervention> = self.constraints().iter().map(|c| c.intervention.clone()).collect();
        out.sort();
        out.dedup();
        out
    }

    /// Thresholds must lie in `[0, 1]` (a threshold of 1 is the empty open
    /// set), events and combinators must be non-empty.
    pub fn validate(&self) -> Result<()> {
        match self {
            Hypothesis::Atom(c) => {
                if c.gt.is_negative() || c.gt > one() {
                    return Err(Error::malformed(format!(
                        "threshold {} is outside [0, 1]",
                        format_rational(&c.gt)
                    )));
                }
                if c.event.0.is_empty() {
                    return Err(Error::malformed("empty event in hypothesis"));
                }
                Ok(())
            }
            Hypothesis::All(hs) | Hypothesis::Any(hs) => {
                if hs.is_empty() {
                    return Err(Error::malformed("empty combinator in hypothesis"));
                }
                hs.iter().try_for_each(Hypothesis::validate)
            }
        }
    }

    /// Combines per-constraint verdicts given in [`Hypothesis::constraints`] order.
    pub fn combine(&self, leaves: &[bool]) -> bool {
        let mut next = 0;
        self.combine_from(leaves, &mut next)
    }

    #[allow(clippy::unnecessary_fold)]
    fn combine_from(&self, leaves: &[bool], next: &mut usize) -> bool {
        match self {
            Hypothesis::Atom(_) => {
                *next += 1;
                leaves[*next - 1]
            }
            // fold, not all/any: every child must advance `next`
            Hypothesis::All(hs) => hs.iter().map(|h| h.combine_from(leaves, next)).fold(true, |a, b| a && b),
            Hypothesis::Any(hs) => hs.iter().map(|h| h.combine_from(leaves, next)).fold(false, |a, b| a || b),
        }
    }

    /// Exact value of each constraint's probability under `model`.
    pub fn true_values<M: StructuralModel + ?Sized>(&self, model: &M) -> Result<Vec<Rational>> {
        let mut dists = BTreeMap::new();
        for alpha in self.interventions() {
            let d = interventional(model, &alpha)?;
            dists.insert(alpha, d);
        }
        let order = model.variables();
        self.constraints()
            .iter()
            .map(|c| {
                let mut total = zero();
                for (v, p) in dists[&c.intervention].cells() {
                    if c.event.contains(order, v)? {
                        total += p;
                    }
                }
                Ok(total)
            })
            .collect()
    }

    pub fn holds_for<M: StructuralModel + ?Sized>(&self, model: &M) -> Result<bool> {
        let values = self.true_values(model)?;
        let leaves: Vec<bool> = self.constraints().iter().zip(&values).map(|(c, v)| *v > c.gt).collect();
        Ok(self.combine(&leaves))
    }
}

/// Rational bounds `lo < ln(q) < hi` for `q > 1`, tightening with `terms`.
fn ln_bounds(q: &Rational, terms: usize) -> (Rational, Rational) {
    debug_assert!(*q > one());
    let two = int(2);
    let mut m = 0i64;
    let mut s = q.clone();
    while s >= two {
        s /= &two;
        m += 1;
    }
    let (l2_lo, l2_hi) = atanh_bounds(&ratio(1, 3), terms);
    let (ls_lo, ls_hi) = if s == one() {
        (zero(), zero())
    } else {
        atanh_bounds(&((&s - one()) / (&s + one())), terms)
    };
    let m = int(m);
    (
        (&m * &l2_lo + &ls_lo) * &two,
        (&m * &l2_hi + &ls_hi) * &two,
    )
}

/// Bounds on `atanh(z)` for `0 < z <= 1/3` from the odd power series.
fn atanh_bounds(z: &Rational, terms: usize) -> (Rational, Rational) {
    let z2 = z * z;
    let mut power = z.clone();
    let mut sum = zero();
    for j in 0..terms {
        sum += &power / int(2 * j as i64 + 1);
        power *= &z2;
    }
    // remainder <= z^(2N+1) / ((2N+1)(1 - z^2))
    let tail = &power / (int(2 * terms as i64 + 1) * (one() - &z2));
    let hi = &sum + tail;
    (sum, hi)
}

/// Whether `value > ln(q)`, refining the logarithm until decided. `ln(q)`
/// is irrational for rational `q > 1`, so equality never occurs.
fn exceeds_ln(value: &Rational, q: &Rational) -> bool {
    let mut terms = 24;
    loop {
        let (lo, hi) = ln_bounds(q, terms);
        if *value > hi {
            return true;
        }
        if *value < lo {
            return false;
        }
        terms *= 2;
    }
}

/// Smallest count `c` with `c/n > r + sqrt(ln(1/eps)/(2n))`, or `n + 1` if
/// no count fires.
pub fn threshold_count(n: u64, r: &Rational, eps: &Rational) -> u64 {
    assert!(n >= 1 && eps.is_positive() && *eps < one());
    let q = one() / eps;
    let nr = int(n as i64) * r;
    let fires = |c: u64| {
        let d = int(c as i64) - &nr;
        d.is_positive() && exceeds_ln(&(&d * &d * int(2) / int(n as i64)), &q)
    };
    let start = (nr.floor().to_integer().to_i64().unwrap_or(i64::MAX).max(-1) + 1) as u64;
    if start > n || !fires(n) {
        return n + 1;
    }
    let (mut lo, mut hi) = (start, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if fires(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// The Hoeffding margin `sqrt(ln(1/eps)/(2n))` in floating point, for
/// reporting only.
pub fn margin(n: u64, eps: &Rational) -> f64 {
    ((1.0 / to_f64(eps)).ln() / (2.0 * n as f64)).sqrt()
}

/// The test for a hypothesis at a fixed sample size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Test {
    pub hypothesis: Hypothesis,
    pub n: u64,
    pub epsilon: Rational,
    /// Level of each constraint, `epsilon / k`.
    pub per_constraint: Rational,
    /// Firing count threshold per constraint; `n + 1` means never.
    pub thresholds: Vec<u64>,
}

pub fn make_test(h: &Hypothesis, epsilon: &Rational, n: u64) -> Result<Test> {
    h.validate()?;
    if !epsilon.is_positive() || *epsilon >= one() {
        return Err(Error::malformed("epsilon must lie in (0, 1)"));
    }
    if n == 0 {
        return Err(Error::malformed("sample size must be at least 1"));
    }
    let constraints = h.constraints();
    let per = epsilon / int(constraints.len() as i64);
    let thresholds = constraints.iter().map(|c| threshold_count(n, &c.gt, &per)).collect();
    Ok(Test { hypothesis: h.clone(), n, epsilon: epsilon.clone(), per_constraint: per, thresholds })
}

impl Test {
    /// Decision from the count of samples inside each constraint's event.
    pub fn fires(&self, counts: &[u64]) -> bool {
        let leaves: Vec<bool> = counts.iter().zip(&self.thresholds).map(|(c, t)| c >= t).collect();
        self.hypothesis.combine(&leaves)
    }

    /// Decision from raw samples, one dataset of size `n` per intervention.
    pub fn fires_on(&self, order: &[String], data: &BTreeMap<Intervention, Vec<Valuation>>) -> Result<bool> {
        let mut counts = Vec::new();
        for c in self.hypothesis.constraints() {
            let sample = data
                .get(&c.intervention)
                .ok_or_else(|| Error::malformed(format!("no dataset for {}", c.intervention)))?;
            if sample.len() as u64 != self.n {
                return Err(Error::malformed("dataset size differs from the test's sample size"));
            }
            let mut k = 0;
            for v in sample {
                if c.event.contains(order, v)? {
                    k += 1;
                }
            }
            counts.push(k);
        }
        Ok(self.fires(&counts))
    }
}

/// Exact probability that the single-constraint test fires when the true
/// probability of the event is `value`.
pub fn exact_type1_bound(h: &Hypothesis, epsilon: &Rational, n: u64, value: &Rational) -> Result<Rational> {
    let Hypothesis::Atom(c) = h else {
        return Err(Error::precondition("exact audit needs a single constraint"));
    };
    if *value > c.gt || value.is_negative() {
        return Err(Error::precondition("audited value must lie in [0, threshold]"));
    }
    let test = make_test(h, epsilon, n)?;
    Ok(binomial_upper_tail(n, value, test.thresholds[0]))
}

/// `P(Bin(n, p) >= m)` exactly.
pub fn binomial_upper_tail(n: u64, p: &Rational, m: u64) -> Rational {
    if m > n {
        return zero();
    }
    if m == 0 {
        return one();
    }
    let a = p.numer().clone();
    let b = p.denom().clone();
    let fail = &b - &a;
    let mut choose = BigInt::one();
    for c in 0..m {
        choose = choose * BigInt::from(n - c) / BigInt::from(c + 1);
    }
    let mut total = BigInt::zero();
    for c in m..=n {
        total += &choose * num_traits::pow(a.clone(), c as usize) * num_traits::pow(fail.clone(), (n - c) as usize);
        choose = choose * BigInt::from(n - c) / BigInt::from(c + 1);
    }
    Rational::new(total, num_traits::pow(b, n as usize))
}

/// `⌈2 ln(k/ε) / gap²⌉`: beyond this sample size a constraint with true
/// value `r + gap` fires with probability at least `1 - ε/k`.
pub fn power_threshold(k: usize, epsilon: &Rational, gap: &Rational) -> Result<u64> {
    if !gap.is_positive() {
        return Err(Error::precondition("gap must be positive"));
    }
    let q = int(k as i64) / epsilon;
    let (_, hi) = ln_bounds(&q, 48);
    let bound = (hi * int(2) / (gap * gap)).ceil().to_integer();
    bound.to_u64().ok_or_else(|| Error::malformed("power threshold overflows"))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestConfig {
    pub epsilon: Rational,
    pub n_grid: Vec<u64>,
    pub trials: u32,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimRow {
    pub n: u64,
    pub thresholds: Vec<u64>,
    /// Trials in which the test fired, i.e. rejected "the hypothesis fails".
    pub rejections: u32,
    pub trials: u32,
    pub frequency: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimReport {
    pub epsilon: Rational,
    pub seed: u64,
    pub constraints: usize,
    pub true_values: Vec<Rational>,
    pub true_model_satisfies: bool,
    pub rows: Vec<SimRow>,
}

/// Integer CDF over `2^64`: sample `u` maps to the first cell whose bound
/// exceeds it.
struct Sampler {
    cells: Vec<Valuation>,
    bounds: Vec<u128>,
}

impl Sampler {
    fn new(cells: &BTreeMap<Valuation, Rational>) -> Self {
        let scale = Rational::from_integer(BigInt::from(1u128 << 64));
        let mut cum = zero();
        let mut bounds = Vec::new();
        for p in cells.values() {
            cum += p;
            let b = (&cum * &scale).ceil().to_integer();
            bounds.push(b.to_u128().expect("bounded by 2^64"));
        }
        Sampler { cells: cells.keys().cloned().collect(), bounds }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let u = rng.next_u64() as u128;
        self.bounds.partition_point(|&b| b <= u)
    }
}

fn stream_id(n_index: usize, trial: u32, intervention: usize) -> u64 {
    ((n_index as u64) << 48) | ((trial as u64) << 16) | intervention as u64
}

/// Runs `cfg.trials` simulated experiments per sample size. Each
/// (sample size, trial, intervention) triple reads its own ChaCha8 stream,
/// so the report depends only on the seed.
pub fn simulate_verification<M>(model: &M, h: &Hypothesis, cfg: &TestConfig) -> Result<SimReport>
where
    M: StructuralModel + Sync + ?Sized,
{
    h.validate()?;
    model.ensure_valid()?;
    let order = model.variables();
    let interventions = h.interventions();
    let mut samplers = Vec::new();
    for alpha in &interventions {
        samplers.push(Sampler::new(interventional(model, alpha)?.cells()));
    }
    let constraints = h.constraints();
    // which cells of each sampler each constraint covers
    let mut masks = Vec::new();
    for c in &constraints {
        let i = interventions.binary_search(&c.intervention).expect("collected above");
        let mut mask = Vec::new();
        for v in &samplers[i].cells {
            mask.push(c.event.contains(order, v)?);
        }
        masks.push((i, mask));
    }
    let true_values = h.true_values(model)?;
    let true_model_satisfies = h.holds_for(model)?;
    let mut rows = Vec::new();
    for (ni, &n) in cfg.n_grid.iter().enumerate() {
        let test = make_test(h, &cfg.epsilon, n)?;
        let rejections = (0..cfg.trials)
            .into_par_iter()
            .filter(|&trial| {
                let histograms: Vec<Vec<u64>> = samplers
                    .iter()
                    .enumerate()
                    .map(|(j, s)| {
                        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                        rng.set_stream(stream_id(ni, trial, j));
                        let mut hist = vec![0u64; s.cells.len()];
                        for _ in 0..n {
                            hist[s.draw(&mut rng)] += 1;
                        }
                        hist
                    })
                    .collect();
                let counts: Vec<u64> = masks
                    .iter()
                    .map(|(i, mask)| histograms[*i].iter().zip(mask).filter(|(_, m)| **m).map(|(c, _)| c).sum())
                    .collect();
                test.fires(&counts)
            })
            .count() as u32;
        rows.push(SimRow {
            n,
            thresholds: test.thresholds,
            rejections,
            trials: cfg.trials,
            frequency: if cfg.trials == 0 { 0.0 } else { rejections as f64 / cfg.trials as f64 },
        });
    }
    Ok(SimReport {
        epsilon: cfg.epsilon.clone(),
        seed: cfg.seed,
        constraints: constraints.len(),
        true_values,
        true_model_satisfies,
        rows,
    })
}

/// An open box around a Y-good family, written as constraints, on which
/// every Y-goodness margin stays positive. Each of `P(y'|do(x))`,
/// `P(x,y')`, `P(x')` and `P(x',y')` is confined to within a quarter of the
/// smallest margin of its true value; bounds that are vacuous at 0 or 1
/// are left out.
pub fn y_good_hypothesis(fam: &TwoVarFamily, roles: Roles, report: &GoodnessReport) -> Result<Hypothesis> {
    if !report.good {
        return Err(Error::precondition(format!(
            "family is not Y-good: {}",
            report.binding_description()
        )));
    }
    let (x, xp, yp) = (roles.x, roles.x_prime(), roles.y_prime());
    let g = report.margins.iter().min().expect("four margins") / int(4);
    let values = [
        (Intervention::set(&fam.x, x), Event::of([(fam.y.as_str(), yp)])),
        (Intervention::empty(), Event::of([(fam.x.as_str(), x), (fam.y.as_str(), yp)])),
        (Intervention::empty(), Event::of([(fam.x.as_str(), xp)])),
        (Intervention::empty(), Event::of([(fam.x.as_str(), xp), (fam.y.as_str(), yp)])),
    ];
    let order = vec![fam.x.clone(), fam.y.clone()];
    let mut parts = Vec::new();
    for (alpha, event) in values {
        let table = if alpha.is_empty() { &fam.obs } else { fam.do_x(x) };
        let p = table.prob_event(&event)?;
        let lo = &p - &g;
        let hi = &p + &g;
        if lo.is_positive() {
            parts.push(Hypothesis::atom(alpha.clone(), event.clone(), lo));
        }
        if hi < one() {
            let complement: Vec<Event> = Valuation::all(2)
                .filter(|v| !event.holds_in(&order, v).unwrap_or(false))
                .map(|v| Event::of([(fam.x.as_str(), v.0[0]), (fam.y.as_str(), v.0[1])]))
                .collect();
            parts.push(Hypothesis::Atom(Constraint {
                intervention: alpha,
                event: CellSet(complement),
                gt: one() - hi,
            }));
        }
    }
    Ok(Hypothesis::All(parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causation::check_y_good;
    use crate::examples::{coins, two_units};
    use crate::hierarchy::{interventional_family, project_2ve};
    use crate::rational::parse_rational;

    fn eps(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn y_above_half() -> Hypothesis {
        Hypothesis::atom(Intervention::empty(), Event::of([("Y", 1)]), ratio(1, 2))
    }

    #[test]
    fn ln_bounds_bracket_known_values() {
        for (q, expect) in [(20.0f64, 20f64.ln()), (2.0, 2f64.ln()), (3.5, 3.5f64.ln()), (400.0, 400f64.ln())] {
            let qr = parse_rational(&q.to_string()).unwrap();
            let (lo, hi) = ln_bounds(&qr, 24);
            assert!(to_f64(&lo) <= expect + 1e-12 && to_f64(&hi) >= expect - 1e-12);
            assert!(lo < hi && to_f64(&(hi - lo)) < 1e-20);
        }
    }

    #[test]
    fn threshold_matches_margin_formula() {
        // fires iff k/100 > 1/2 + sqrt(ln 20 / 200)
        let m = threshold_count(100, &ratio(1, 2), &eps("0.05"));
        let cut = 50.0 + 100.0 * (20f64.ln() / 200.0).sqrt();
        assert_eq!(m, cut.floor() as u64 + 1);
        // brute force over every count agrees
        for n in [1u64, 7, 10, 33] {
            let t = threshold_count(n, &ratio(1, 3), &eps("0.05"));
            for c in 0..=n {
                let f = c as f64 / n as f64 > 1.0 / 3.0 + margin(n, &eps("0.05"));
                assert_eq!(c >= t, f, "n={n} c={c}");
            }
        }
    }

    #[test]
    fn small_samples_never_fire_at_half() {
        assert_eq!(threshold_count(1, &ratio(1, 2), &eps("0.05")), 2);
        let t = exact_type1_bound(&y_above_half(), &eps("0.05"), 1, &ratio(1, 2)).unwrap();
        assert_eq!(t, zero());
    }

    #[test]
    fn type1_audit_at_boundary() {
        for e in ["0.01", "0.05"] {
            for n in [1u64, 10, 100, 1000] {
                let t = exact_type1_bound(&y_above_half(), &eps(e), n, &ratio(1, 2)).unwrap();
                assert!(t <= eps(e), "eps={e} n={n} tail={}", format_rational(&t));
            }
        }
        let zero_value = exact_type1_bound(&y_above_half(), &eps("0.05"), 50, &zero()).unwrap();
        assert_eq!(zero_value, zero());
    }

    #[test]
    fn binomial_tail_matches_enumeration() {
        // brute force over all 2^n outcome strings
        let p = ratio(1, 3);
        let n = 8u64;
        for m in 0..=n + 1 {
            let mut total = zero();
            for mask in 0u32..1 << n {
                let k = mask.count_ones() as u64;
                if k >= m {
                    let mut w = one();
                    for i in 0..n {
                        w *= if mask >> i & 1 == 1 { p.clone() } else { one() - &p };
                    }
                    total += w;
                }
            }
            assert_eq!(binomial_upper_tail(n, &p, m), total);
        }
    }

    #[test]
    fn union_bound_split() {
        let h = Hypothesis::All(vec![y_above_half(), y_above_half()]);
        let t = make_test(&h, &eps("0.05"), 100).unwrap();
        assert_eq!(t.per_constraint, eps("0.025"));
    }

    #[test]
    fn threshold_one_never_fires() {
        let h = Hypothesis::atom(Intervention::empty(), Event::of([("Y", 1)]), one());
        let t = make_test(&h, &eps("0.05"), 50).unwrap();
        assert_eq!(t.thresholds, vec![51]);
        assert!(!t.fires(&[50]));
    }

    #[test]
    fn two_units_y_good_power_and_determinism() {
        let m = two_units();
        let treat = [Intervention::empty(), Intervention::set("X", 0), Intervention::set("X", 1)];
        let fam = project_2ve(&interventional_family(&m, &treat).unwrap(), "X", "Y").unwrap();
        let report = check_y_good(&fam, Roles::default());
        let h = y_good_hypothesis(&fam, Roles::default(), &report).unwrap();
        assert_eq!(h.constraints().len(), 6);
        assert!(h.holds_for(&m).unwrap());
        let cfg = TestConfig { epsilon: eps("0.05"), n_grid: vec![10, 2000], trials: 40, seed: 7 };
        let a = simulate_verification(&m, &h, &cfg).unwrap();
        let b = simulate_verification(&m, &h, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows[0].rejections, 0);
        assert_eq!(a.rows[1].rejections, 40);
    }

    #[test]
    fn boundary_model_rarely_verified() {
        // the coin model has P(Y=1) = 1/2 exactly
        let m = coins();
        let cfg = TestConfig { epsilon: eps("0.05"), n_grid: vec![20, 200], trials: 200, seed: 3 };
        let r = simulate_verification(&m, &y_above_half(), &cfg).unwrap();
        assert!(!r.true_model_satisfies);
        for row in &r.rows {
            assert!(row.frequency <= 0.05 + 0.05, "{row:?}");
        }
    }

    #[test]
    fn power_threshold_formula() {
        let n = power_threshold(6, &eps("0.05"), &ratio(1, 8)).unwrap();
        let expect = (2.0 * (120f64).ln() * 64.0).ceil() as u64;
        assert_eq!(n, expect);
    }

    #[test]
    fn sampler_respects_exact_cdf() {
        let mut cells = BTreeMap::new();
        cells.insert(Valuation(vec![0]), ratio(1, 4));
        cells.insert(Valuation(vec![1]), ratio(3, 4));
        let s = Sampler::new(&cells);
        assert_eq!(s.bounds, vec![1u128 << 62, 1u128 << 64]);
    }
}
