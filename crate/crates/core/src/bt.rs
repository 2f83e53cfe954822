//! Exact checks of the 2,3-tree recursions and inequalities.
//!
//! Counts come from the DP with the bare root included (`e(1) = 1`,
//! `o(1) = 0`, zero below one leaf). When a sweep fails, the offending point
//! is recomputed from the brute-force oracle: agreement means the statement
//! itself is false under this reading, disagreement means the DP is wrong.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::BtCounts;
use crate::model::{BranchingSchedule, Parity};
use crate::oracle::{count_by_top_with, OracleOptions, TopKey};
use crate::rep::bt_rep;
use crate::report::{PointCheck, Relation, VerificationReport};

/// The four statements about 2,3-trees that can be swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BtStatement {
    /// `t(2s, q_o) = e(q-s) - Σ_{j ≤ ⌊(s-1)/3⌋} t(3j, (q-s)_e)`
    OddRecursion,
    /// `t(3s, q_e) = o(q-2s) - Σ_{j ≤ ⌊(s-1)/2⌋} t(2j, (q-2s)_o)`
    EvenRecursion,
    /// `o(q+1) ≤ o(q) + e(q)`
    OddStep,
    /// `e(q+2) ≤ o(q) + e(q)`
    EvenStep,
}

impl BtStatement {
    pub const ALL: [BtStatement; 4] = [
        BtStatement::OddRecursion,
        BtStatement::EvenRecursion,
        BtStatement::OddStep,
        BtStatement::EvenStep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BtStatement::OddRecursion => "odd-recursion",
            BtStatement::EvenRecursion => "even-recursion",
            BtStatement::OddStep => "odd-step",
            BtStatement::EvenStep => "even-step",
        }
    }

    /// Numeric label under which the statement is usually cited.
    pub fn number(self) -> &'static str {
        match self {
            BtStatement::OddRecursion => "4.1.1",
            BtStatement::EvenRecursion => "4.1.2",
            BtStatement::OddStep => "4.2",
            BtStatement::EvenStep => "4.3",
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            BtStatement::OddRecursion => "t(2s, q_o) = e(q-s) - sum_{j=1..floor((s-1)/3)} t(3j, (q-s)_e)",
            BtStatement::EvenRecursion => "t(3s, q_e) = o(q-2s) - sum_{j=1..floor((s-1)/2)} t(2j, (q-2s)_o)",
            BtStatement::OddStep => "o(q+1) <= o(q) + e(q)",
            BtStatement::EvenStep => "e(q+2) <= o(q) + e(q)",
        }
    }
}

impl fmt::Display for BtStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BtStatement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BtStatement::ALL
            .into_iter()
            .find(|t| t.name() == s || t.number() == s)
            .ok_or_else(|| {
                Error::Domain(format!(
                    "unknown statement `{s}`; expected one of {}",
                    BtStatement::ALL
                        .map(|t| format!("{} ({})", t.name(), t.number()))
                        .join(", ")
                ))
            })
    }
}

/// Where counts come from.
trait Source {
    /// `t(p, q)` for the given top parity, bare root included.
    fn t(&self, p: usize, q: i64, parity: Parity) -> BigUint;
    /// `e(q)` or `o(q)`, bare root included.
    fn total(&self, q: i64, parity: Parity) -> BigUint;
}

impl Source for BtCounts {
    fn t(&self, p: usize, q: i64, parity: Parity) -> BigUint {
        if q < 1 {
            return BigUint::default();
        }
        self.t_with_base(p, q as usize, parity)
    }

    fn total(&self, q: i64, parity: Parity) -> BigUint {
        self.total_with_base(q, parity)
    }
}

/// Brute-force counts, enumerated once per `q`.
struct OracleSource {
    schedule: BranchingSchedule,
    cache: RefCell<HashMap<u64, BTreeMap<TopKey, BigUint>>>,
}

impl OracleSource {
    fn new() -> Self {
        Self { schedule: BranchingSchedule::binary_ternary(), cache: RefCell::default() }
    }

    fn with<R>(&self, q: i64, f: impl FnOnce(&BTreeMap<TopKey, BigUint>) -> R) -> R {
        if q < 1 {
            return f(&BTreeMap::new());
        }
        let q = q as u64;
        let mut cache = self.cache.borrow_mut();
        let map = cache.entry(q).or_insert_with(|| {
            let opts = OracleOptions { include_degenerate: true, threads: None };
            count_by_top_with(&self.schedule, q, opts).expect("q ≥ 1")
        });
        f(map)
    }
}

impl Source for OracleSource {
    fn t(&self, p: usize, q: i64, parity: Parity) -> BigUint {
        self.with(q, |m| m.get(&TopKey { p: p as u64, parity }).cloned().unwrap_or_default())
    }

    fn total(&self, q: i64, parity: Parity) -> BigUint {
        self.with(q, |m| m.iter().filter(|(k, _)| k.parity == parity).map(|(_, v)| v).sum())
    }
}

fn big(v: BigUint) -> BigInt {
    BigInt::from(v)
}

fn odd_recursion_point(src: &dyn Source, s: usize, q: usize) -> PointCheck {
    let base = q as i64 - s as i64;
    let lhs = src.t(2 * s, q as i64, Parity::Odd);
    let sub: BigUint = (1..=(s - 1) / 3).map(|j| src.t(3 * j, base, Parity::Even)).sum();
    let rhs = big(src.total(base, Parity::Even)) - big(sub);
    PointCheck::new(BtStatement::OddRecursion.formula(), &[("s", s as i64), ("q", q as i64)], big(lhs), Relation::Eq, rhs)
}

fn even_recursion_point(src: &dyn Source, s: usize, q: usize) -> PointCheck {
    let base = q as i64 - 2 * s as i64;
    let lhs = src.t(3 * s, q as i64, Parity::Even);
    let sub: BigUint = (1..=(s - 1) / 2).map(|j| src.t(2 * j, base, Parity::Odd)).sum();
    let rhs = big(src.total(base, Parity::Odd)) - big(sub);
    PointCheck::new(BtStatement::EvenRecursion.formula(), &[("s", s as i64), ("q", q as i64)], big(lhs), Relation::Eq, rhs)
}

fn step_point(src: &dyn Source, which: BtStatement, q: usize) -> PointCheck {
    let q = q as i64;
    let lhs = match which {
        BtStatement::OddStep => src.total(q + 1, Parity::Odd),
        _ => src.total(q + 2, Parity::Even),
    };
    let rhs = src.total(q, Parity::Odd) + src.total(q, Parity::Even);
    PointCheck::new(which.formula(), &[("q", q)], big(lhs), Relation::Le, big(rhs))
}

/// Recursion grid points: the expansion needs at least two leaves below the
/// new level, except for `s = 1` where the bare root itself is expanded.
fn recursion_grid(s_max: usize, q_max: usize, per_s: usize) -> Vec<(usize, usize)> {
    let mut grid = Vec::new();
    for s in 1..=s_max {
        for q in 2..=q_max {
            let below = q as i64 - (per_s * s) as i64;
            if s == 1 || below >= 2 {
                grid.push((s, q));
            }
        }
    }
    grid
}

fn need_horizon(counts: &BtCounts, q: usize) -> Result<()> {
    if q > counts.max_q() {
        return Err(Error::Config(format!(
            "sweep needs q = {q}, beyond the table horizon {}",
            counts.max_q()
        )));
    }
    Ok(())
}

/// Rechecks every failing point against the oracle and explains the outcome.
fn diagnose(report: &mut VerificationReport, recompute: impl Fn(&dyn Source, &PointCheck) -> PointCheck) {
    if report.passed() {
        return;
    }
    let oracle = OracleSource::new();
    let mut dp_wrong = Vec::new();
    let mut statement_false = Vec::new();
    for p in report.failures() {
        let o = recompute(&oracle, p);
        if o.lhs == p.lhs && o.rhs == p.rhs {
            statement_false.push(p.to_string());
        } else {
            dp_wrong.push(format!("{p} (oracle: {} {} {})", o.lhs, o.relation, o.rhs));
        }
    }
    let mut parts = Vec::new();
    if !statement_false.is_empty() {
        parts.push(format!(
            "oracle agrees with the DP, so the statement fails as read at {} point(s), first {}",
            statement_false.len(),
            statement_false[0]
        ));
    }
    if !dp_wrong.is_empty() {
        parts.push(format!(
            "DP disagrees with the oracle at {} point(s), first {}",
            dp_wrong.len(),
            dp_wrong[0]
        ));
    }
    report.diagnosis = Some(parts.join("; "));
}

fn grid_param(p: &PointCheck, name: &str) -> usize {
    p.param(name).expect("grid parameter") as usize
}

/// `t(2s, q_o) = e(q-s) - Σ_{j=1}^{⌊(s-1)/3⌋} t(3j, (q-s)_e)` on `s ≤ s_max`,
/// `q ≤ q_max`.
pub fn verify_odd_recursion(counts: &BtCounts, s_max: usize, q_max: usize) -> Result<VerificationReport> {
    need_horizon(counts, q_max)?;
    let points = recursion_grid(s_max, q_max, 1)
        .into_par_iter()
        .map(|(s, q)| odd_recursion_point(counts, s, q))
        .collect();
    let mut r = VerificationReport::new(
        format!("{} ({})", BtStatement::OddRecursion, BtStatement::OddRecursion.number()),
        BtStatement::OddRecursion.formula(),
        format!("s <= {s_max}, q <= {q_max}, q-s >= 2 or s = 1"),
        points,
    );
    diagnose(&mut r, |src, p| odd_recursion_point(src, grid_param(p, "s"), grid_param(p, "q")));
    Ok(r)
}

/// `t(3s, q_e) = o(q-2s) - Σ_{j=1}^{⌊(s-1)/2⌋} t(2j, (q-2s)_o)` on
/// `s ≤ s_max`, `q ≤ q_max`.
pub fn verify_even_recursion(counts: &BtCounts, s_max: usize, q_max: usize) -> Result<VerificationReport> {
    need_horizon(counts, q_max)?;
    let points = recursion_grid(s_max, q_max, 2)
        .into_par_iter()
        .map(|(s, q)| even_recursion_point(counts, s, q))
        .collect();
    let mut r = VerificationReport::new(
        format!("{} ({})", BtStatement::EvenRecursion, BtStatement::EvenRecursion.number()),
        BtStatement::EvenRecursion.formula(),
        format!("s <= {s_max}, q <= {q_max}, q-2s >= 2 or s = 1"),
        points,
    );
    diagnose(&mut r, |src, p| even_recursion_point(src, grid_param(p, "s"), grid_param(p, "q")));
    Ok(r)
}

fn verify_step(counts: &BtCounts, which: BtStatement, q_max: usize) -> Result<VerificationReport> {
    let reach = if which == BtStatement::OddStep { 1 } else { 2 };
    need_horizon(counts, q_max + reach)?;
    let points = (2..=q_max).into_par_iter().map(|q| step_point(counts, which, q)).collect();
    let mut r = VerificationReport::new(
        format!("{which} ({})", which.number()),
        which.formula(),
        format!("2 <= q <= {q_max}"),
        points,
    );
    diagnose(&mut r, |src, p| step_point(src, which, grid_param(p, "q")));
    Ok(r)
}

/// `o(q+1) ≤ o(q) + e(q)` for `2 ≤ q ≤ q_max`.
pub fn verify_odd_step(counts: &BtCounts, q_max: usize) -> Result<VerificationReport> {
    verify_step(counts, BtStatement::OddStep, q_max)
}

/// `e(q+2) ≤ o(q) + e(q)` for `2 ≤ q ≤ q_max`.
pub fn verify_even_step(counts: &BtCounts, q_max: usize) -> Result<VerificationReport> {
    verify_step(counts, BtStatement::EvenStep, q_max)
}

/// Default sweep sizes: `(s_max, q_max)` for the recursions, `q_max` for the
/// inequalities.
pub fn default_grid(which: BtStatement) -> (usize, usize) {
    match which {
        BtStatement::OddRecursion => (8, 24),
        BtStatement::EvenRecursion => (6, 24),
        BtStatement::OddStep | BtStatement::EvenStep => (0, 30),
    }
}

/// Runs one statement; `s_max` is ignored by the inequalities.
pub fn verify_statement(
    counts: &BtCounts,
    which: BtStatement,
    s_max: usize,
    q_max: usize,
) -> Result<VerificationReport> {
    match which {
        BtStatement::OddRecursion => verify_odd_recursion(counts, s_max, q_max),
        BtStatement::EvenRecursion => verify_even_recursion(counts, s_max, q_max),
        BtStatement::OddStep => verify_odd_step(counts, q_max),
        BtStatement::EvenStep => verify_even_step(counts, q_max),
    }
}

/// Evaluates the substituted expansion of rows `1..=i` with exact `e`/`o`
/// values and compares it with the truncated sum `Σ_{s≤i} t(b·s, q)` from
/// the table; also checks that the truncated sum does not exceed the total.
/// The identity is checked from the first `q` at which every lag of the
/// expansion is exact.
pub fn verify_bt_rep(
    counts: &BtCounts,
    parity: Parity,
    i: usize,
    q_range: RangeInclusive<usize>,
) -> Result<VerificationReport> {
    need_horizon(counts, *q_range.end())?;
    let rep = bt_rep(parity, i)?;
    let first = rep.aggregate.first_exact_q();
    let b = match parity {
        Parity::Odd => 2,
        Parity::Even => 3,
    };
    let mut points = Vec::new();
    for q in q_range.clone().filter(|&q| q >= 2) {
        let at = [("i", i as i64), ("q", q as i64)];
        let truncated: BigUint = (1..=i).map(|s| counts.t(b * s, q, parity)).sum();
        if q >= first {
            let value = rep
                .aggregate
                .evaluate(q, |arg, par| big(counts.total_with_base(arg, par.expect("tagged term"))));
            points.push(PointCheck::new("expansion = truncated sum", &at, value, Relation::Eq, big(truncated.clone())));
        }
        let total = match parity {
            Parity::Odd => counts.o(q),
            Parity::Even => counts.e(q),
        };
        points.push(PointCheck::new("truncated sum <= total", &at, big(truncated), Relation::Le, big(total)));
    }
    Ok(VerificationReport::new(
        format!("expansion-{}", parity.suffix()),
        format!("sum_(s<=i) q_{} expansion evaluated with exact counts", parity.suffix()),
        format!(
            "i = {i}, q in [{}, {}], identity from q = {first}",
            q_range.start(),
            q_range.end()
        ),
        points,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts() -> BtCounts {
        BtCounts::build(40)
    }

    #[test]
    fn statement_names() {
        for t in BtStatement::ALL {
            assert_eq!(t.name().parse::<BtStatement>().unwrap(), t);
            assert_eq!(t.number().parse::<BtStatement>().unwrap(), t);
        }
        assert!("4.4".parse::<BtStatement>().is_err());
    }

    #[test]
    fn first_rows_have_no_subtraction() {
        let c = counts();
        for q in 2..=20 {
            assert_eq!(c.t(2, q, Parity::Odd), c.total_with_base(q as i64 - 1, Parity::Even), "q={q}");
            assert_eq!(c.t(3, q, Parity::Even), c.total_with_base(q as i64 - 2, Parity::Odd), "q={q}");
        }
    }

    #[test]
    fn default_grids_pass() {
        let c = counts();
        for t in BtStatement::ALL {
            let (s, q) = default_grid(t);
            let r = verify_statement(&c, t, s, q).unwrap();
            assert!(r.passed(), "{}", r.summary());
            assert!(r.diagnosis.is_none());
        }
    }

    #[test]
    fn smallest_inequality_cases() {
        let c = counts();
        let r = verify_even_step(&c, 2).unwrap();
        assert_eq!(r.points.len(), 1);
        // e(4) = 1 = o(2) + e(2): equality
        assert_eq!(r.points[0].lhs, BigInt::from(1));
        assert_eq!(r.points[0].margin, BigInt::from(0));
        let r = verify_odd_step(&c, 2).unwrap();
        assert_eq!(r.points[0].rhs, BigInt::from(1));
    }

    #[test]
    fn expansion_matches_truncated_sums() {
        let c = counts();
        for parity in [Parity::Odd, Parity::Even] {
            for i in 1..=8 {
                let r = verify_bt_rep(&c, parity, i, 2..=40).unwrap();
                assert!(r.passed(), "{}", r.summary());
            }
        }
        let r = verify_bt_rep(&c, Parity::Odd, 4, 20..=20).unwrap();
        assert_eq!(r.points.len(), 2);
    }

    #[test]
    fn failures_are_diagnosed_against_the_oracle() {
        // q - s = 1 with s ≥ 2 drops the bare root's single top leaf, which
        // the subtraction does not cover; the oracle confirms.
        let c = counts();
        let mut r = VerificationReport::new("x", "", "", vec![odd_recursion_point(&c, 2, 3)]);
        assert!(!r.passed());
        diagnose(&mut r, |src, p| odd_recursion_point(src, grid_param(p, "s"), grid_param(p, "q")));
        assert!(r.diagnosis.unwrap().starts_with("oracle agrees"));
    }
}
