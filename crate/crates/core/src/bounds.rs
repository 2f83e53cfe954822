//! Lower and upper bound recurrences for `h_n(q)`.
//!
//! Splitting `h_n(q) = Σ_{s ≤ i} t_n(ns, q) + Σ_{s > i} t_n(ns, q)` and
//! dropping the tail gives the lower bound; bounding the tail by
//! `h_n(q - i - (n-1))` gives the upper one. With the rows of the truncated
//! sum expanded into `h`-lags (see [`crate::rep`]) both become linear
//! recurrences `B(q) = Σ c_lag B(q - lag)`.
//!
//! Two readings are provided:
//!
//! * iterated: the recurrence is seeded with exact `h` values on the window
//!   just below `first_q` and then run on its own values;
//! * one-step: every `B(q)` is computed from exact `h` values at `q - lag`,
//!   i.e. the bounds are re-seeded at each `q`. Here the gap between upper
//!   and lower is exactly `h_n(q - i - (n-1))`.
//!
//! All arithmetic is exact.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::NaryCounts;
use crate::rep::{lower_coeffs, upper_coeffs, BoundKind, CoefficientList};
use crate::report::{PointCheck, Relation, VerificationReport};

/// A bound recurrence together with its exact seed window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundSpec {
    coeffs: CoefficientList,
    first_q: usize,
    seed: BTreeMap<usize, BigUint>,
}

impl BoundSpec {
    /// `seed` must hold a value for every `q` in `[first_q - max_lag, first_q)`
    /// with `q ≥ 1`; arguments below 1 count as zero.
    pub fn new(
        coeffs: CoefficientList,
        first_q: usize,
        seed: BTreeMap<usize, BigUint>,
    ) -> Result<Self> {
        let m = coeffs.max_lag();
        if m == 0 {
            return Err(Error::Domain("bound coefficients are all zero".into()));
        }
        if first_q == 0 {
            return Err(Error::Config("first predicted q must be at least 1".into()));
        }
        let start = first_q.saturating_sub(m).max(1);
        if let Some(q) = (start..first_q).find(|q| !seed.contains_key(q)) {
            return Err(Error::Config(format!(
                "seed window too small: no value for q = {q}; the recurrence reaches back {m} steps from q = {first_q}"
            )));
        }
        Ok(Self { coeffs, first_q, seed })
    }

    /// Seeds `[first_q - max_lag, first_q)` from exact counts.
    pub fn exact_seed(counts: &NaryCounts, coeffs: CoefficientList, first_q: usize) -> Result<Self> {
        if counts.n() != coeffs.n {
            return Err(Error::Domain(format!(
                "counts are for n = {} but coefficients for n = {}",
                counts.n(),
                coeffs.n
            )));
        }
        if first_q > counts.max_q() + 1 {
            return Err(Error::Config(format!(
                "seed window ends at q = {} beyond the table horizon {}",
                first_q - 1,
                counts.max_q()
            )));
        }
        let start = first_q.saturating_sub(coeffs.max_lag()).max(1);
        let seed = (start..first_q).map(|q| (q, counts.h_with_base(q as i64))).collect();
        Self::new(coeffs, first_q, seed)
    }

    pub fn coeffs(&self) -> &CoefficientList {
        &self.coeffs
    }

    pub fn first_q(&self) -> usize {
        self.first_q
    }

    pub fn seed(&self) -> &BTreeMap<usize, BigUint> {
        &self.seed
    }
}

/// Smallest `q` at which both bound recurrences for `(n, i)` predict exact
/// truncated sums: two past the deepest lag any substituted row reaches.
pub fn default_first_q(n: u32, i: usize) -> Result<usize> {
    let upper = upper_coeffs(n, i)?;
    Ok(upper.span + 2)
}

/// Values of the iterated recurrence on `[first_q - max_lag, q_max]`: seeds
/// as given, then `B(q) = Σ c_lag B(q - lag)`.
pub fn bound_sequence(spec: &BoundSpec, q_max: usize) -> BTreeMap<usize, BigInt> {
    let mut out: BTreeMap<usize, BigInt> =
        spec.seed.iter().map(|(&q, v)| (q, BigInt::from(v.clone()))).collect();
    let terms: Vec<(usize, BigInt)> =
        spec.coeffs.nonzero().map(|(lag, c)| (lag, BigInt::from(c))).collect();
    for q in spec.first_q..=q_max {
        let mut acc = BigInt::zero();
        for (lag, c) in &terms {
            if let Some(v) = q.checked_sub(*lag).and_then(|k| out.get(&k)) {
                acc += c * v;
            }
        }
        out.insert(q, acc);
    }
    out
}

/// `Σ c_lag h(q - lag)` from exact values, with `h(1) = 1` and `h(q ≤ 0) = 0`.
pub fn one_step(counts: &NaryCounts, coeffs: &CoefficientList, q: usize) -> BigInt {
    coeffs
        .nonzero()
        .map(|(lag, c)| BigInt::from(c) * BigInt::from(counts.h_with_base(q as i64 - lag as i64)))
        .sum()
}

/// `Σ_{s=1..i} t_n(ns, q)` read directly from the table.
pub fn truncated_sum(counts: &NaryCounts, i: usize, q: usize) -> BigUint {
    let n = counts.n() as usize;
    (1..=i).map(|s| counts.t(n * s, q)).sum()
}

/// One-step `upper(q) - lower(q)`.
pub fn bound_gap(counts: &NaryCounts, i: usize, q: usize) -> Result<BigInt> {
    let n = counts.n();
    Ok(one_step(counts, &upper_coeffs(n, i)?, q) - one_step(counts, &lower_coeffs(n, i)?, q))
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub n: u32,
    pub i: usize,
    pub q_max: usize,
    /// First `q` predicted by the recurrences.
    pub first_q: usize,
    /// `Σ_{s≤i} t ≤ h ≤ Σ_{s≤i} t + h(q-i-(n-1))` straight from the table,
    /// every valid `q ≤ q_max`.
    pub truncation: VerificationReport,
    /// One-step bounds from `first_q` on: lower equals the truncated sum,
    /// `lower ≤ h ≤ upper`, and `upper - lower = h(q-i-(n-1))`.
    pub one_step: VerificationReport,
    /// Iterated recurrences seeded below `first_q`: `lower ≤ h ≤ upper`.
    pub iterated: VerificationReport,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.truncation.passed() && self.one_step.passed() && self.iterated.passed()
    }

    pub fn reports(&self) -> [&VerificationReport; 3] {
        [&self.truncation, &self.one_step, &self.iterated]
    }
}

fn big(v: BigUint) -> BigInt {
    BigInt::from(v)
}

/// Checks both bound readings for `(n, i)` over every valid `q ≤ q_max`.
pub fn verify_sandwich(counts: &NaryCounts, i: usize, q_max: usize) -> Result<SandwichReport> {
    let n = counts.n();
    let lower = lower_coeffs(n, i)?;
    let upper = upper_coeffs(n, i)?;
    if q_max > counts.max_q() {
        return Err(Error::Config(format!(
            "q_max = {q_max} is beyond the table horizon {}",
            counts.max_q()
        )));
    }
    let first_q = upper.span + 2;
    let shift = (i + n as usize - 1) as i64;
    let valid: Vec<usize> = (n as usize..=q_max).filter(|&q| counts.is_valid_q(q)).collect();
    let tail_bound = |q: usize| big(counts.h_with_base(q as i64 - shift));

    let mut trunc_pts = Vec::new();
    for &q in &valid {
        let at = [("n", n as i64), ("i", i as i64), ("q", q as i64)];
        let s = big(truncated_sum(counts, i, q));
        let h = big(counts.h(q));
        trunc_pts.push(PointCheck::new("truncated <= h", &at, s.clone(), Relation::Le, h.clone()));
        trunc_pts.push(PointCheck::new(
            "h <= truncated + h(q-i-(n-1))",
            &at,
            h,
            Relation::Le,
            s + tail_bound(q),
        ));
    }

    let mut step_pts = Vec::new();
    let mut iter_pts = Vec::new();
    let predicted: Vec<usize> = valid.iter().copied().filter(|&q| q >= first_q).collect();
    let (lo_seq, up_seq) = if predicted.is_empty() {
        (BTreeMap::new(), BTreeMap::new())
    } else {
        let lo = BoundSpec::exact_seed(counts, lower.clone(), first_q)?;
        let up = BoundSpec::exact_seed(counts, upper.clone(), first_q)?;
        (bound_sequence(&lo, q_max), bound_sequence(&up, q_max))
    };
    for &q in &predicted {
        let at = [("n", n as i64), ("i", i as i64), ("q", q as i64)];
        let h = big(counts.h(q));
        let lo = one_step(counts, &lower, q);
        let up = one_step(counts, &upper, q);
        step_pts.push(PointCheck::new(
            "lower = truncated",
            &at,
            lo.clone(),
            Relation::Eq,
            big(truncated_sum(counts, i, q)),
        ));
        step_pts.push(PointCheck::new("lower <= h", &at, lo.clone(), Relation::Le, h.clone()));
        step_pts.push(PointCheck::new("h <= upper", &at, h.clone(), Relation::Le, up.clone()));
        step_pts.push(PointCheck::new("upper - lower = h(q-i-(n-1))", &at, up - lo, Relation::Eq, tail_bound(q)));

        iter_pts.push(PointCheck::new("lower <= h", &at, lo_seq[&q].clone(), Relation::Le, h.clone()));
        iter_pts.push(PointCheck::new("h <= upper", &at, h, Relation::Le, up_seq[&q].clone()));
    }

    let grid = format!("n={n}, i={i}, valid q <= {q_max}");
    let from = format!("n={n}, i={i}, valid q in [{first_q}, {q_max}]");
    Ok(SandwichReport {
        n,
        i,
        q_max,
        first_q,
        truncation: VerificationReport::new(
            "truncation",
            "sum_{s<=i} t(ns,q) <= h(q) <= sum_{s<=i} t(ns,q) + h(q-i-(n-1))",
            grid,
            trunc_pts,
        ),
        one_step: VerificationReport::new(
            "one-step",
            "lower(q) <= h(q) <= upper(q), upper(q) - lower(q) = h(q-i-(n-1)), exact seeds at every q",
            from.clone(),
            step_pts,
        ),
        iterated: VerificationReport::new(
            "iterated",
            "lower(q) <= h(q) <= upper(q), exact seeds below the first predicted q",
            from,
            iter_pts,
        ),
    })
}

/// `H_n(k) ≤ Σ_{j=1..n+1} H_n(k-j)` for `k ≥ n+1`, and
/// `H_n(k) ≥ Σ_{j=1..n} H_n(k-j) + H_n(k-(n+2))` for `k ≥ n+3`, over
/// `k ≤ k_max`.
pub fn verify_k_sandwich(counts: &NaryCounts, k_max: usize) -> Result<VerificationReport> {
    let n = counts.n() as usize;
    let q_top = crate::exact::q_from_k(counts.n(), k_max);
    if q_top > counts.max_q() {
        return Err(Error::Config(format!(
            "k_max = {k_max} needs q = {q_top}, beyond the table horizon {}",
            counts.max_q()
        )));
    }
    let hk = |k: usize| big(counts.h_from_k(k));
    let mut pts = Vec::new();
    for k in (n + 1)..=k_max {
        let at = [("n", n as i64), ("k", k as i64)];
        let upper: BigInt = (1..=n + 1).map(|j| hk(k - j)).sum();
        pts.push(PointCheck::new("H(k) <= sum_{j=1..n+1} H(k-j)", &at, hk(k), Relation::Le, upper));
        if k >= n + 3 {
            let lower: BigInt = (1..=n).map(|j| hk(k - j)).sum::<BigInt>() + hk(k - (n + 2));
            pts.push(PointCheck::new(
                "sum_{j=1..n} H(k-j) + H(k-n-2) <= H(k)",
                &at,
                lower,
                Relation::Le,
                hk(k),
            ));
        }
    }
    Ok(VerificationReport::new(
        "k-sandwich",
        "sum_{j=1..n} H(k-j) + H(k-(n+2)) <= H(k) <= sum_{j=1..n+1} H(k-j)",
        format!("n={n}, k <= {k_max}"),
        pts,
    ))
}

/// Exact-seeded lower and upper sequences for `(n, i)`, side by side with `h`.
pub fn bound_table(counts: &NaryCounts, i: usize, q_max: usize) -> Result<Vec<BoundRow>> {
    let n = counts.n();
    let lower = lower_coeffs(n, i)?;
    let upper = upper_coeffs(n, i)?;
    let first_q = upper.span + 2;
    if q_max > counts.max_q() {
        return Err(Error::Config(format!(
            "q_max = {q_max} is beyond the table horizon {}",
            counts.max_q()
        )));
    }
    let lo = BoundSpec::exact_seed(counts, lower.clone(), first_q.min(q_max + 1))?;
    let up = BoundSpec::exact_seed(counts, upper.clone(), first_q.min(q_max + 1))?;
    let (lo_seq, up_seq) = (bound_sequence(&lo, q_max), bound_sequence(&up, q_max));
    Ok((n as usize..=q_max)
        .filter(|&q| counts.is_valid_q(q))
        .map(|q| BoundRow {
            q,
            predicted: q >= first_q,
            lower: lo_seq.get(&q).cloned().unwrap_or_else(|| big(counts.h(q))),
            h: counts.h(q),
            upper: up_seq.get(&q).cloned().unwrap_or_else(|| big(counts.h(q))),
            lower_step: (q >= first_q).then(|| one_step(counts, &lower, q)),
            upper_step: (q >= first_q).then(|| one_step(counts, &upper, q)),
        })
        .collect())
}

/// One line of [`bound_table`]. Below the first predicted `q` both bounds
/// are the exact seeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundRow {
    pub q: usize,
    pub predicted: bool,
    pub lower: BigInt,
    pub h: BigUint,
    pub upper: BigInt,
    pub lower_step: Option<BigInt>,
    pub upper_step: Option<BigInt>,
}

impl BoundKind {
    pub fn coeffs(self, n: u32, i: usize) -> Result<CoefficientList> {
        match self {
            BoundKind::Lower => lower_coeffs(n, i),
            BoundKind::Upper => upper_coeffs(n, i),
        }
    }
}
