//! Signed lag representations of top-level counts.
//!
//! For full n-ary trees,
//!
//! ```text
//! t_n(ns, q) = h_n(q - s(n-1)) - Σ_{j=1}^{⌊(s-1)/n⌋} t_n(nj, q - s(n-1))
//! ```
//!
//! and substituting the subtracted terms recursively leaves a signed list of
//! `h_n(q - lag)` terms. For 2,3-trees the same idea alternates between the
//! two parities:
//!
//! ```text
//! t(2s, q_o) = e(q - s)  - Σ_{j=1}^{⌊(s-1)/3⌋} t(3j, (q - s)_e)
//! t(3s, q_e) = o(q - 2s) - Σ_{j=1}^{⌊(s-1)/2⌋} t(2j, (q - 2s)_o)
//! ```
//!
//! Each expansion step adds a positive amount to the lag, so lags are always
//! at least one. A row is exact whenever every argument reached during
//! substitution is a real tree size (≥ 2); [`SignedRep::span`] is the
//! largest lag reached, so `q ≥ span + 2` is always safe.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Parity;

/// One signed lagged term, `coeff · h(q - lag)` or `coeff · (q - lag)_{e|o}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Term {
    pub lag: usize,
    pub coeff: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parity: Option<Parity>,
}

/// A signed sum of lagged terms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignedRep {
    pub subject: String,
    pub terms: Vec<Term>,
    /// Largest lag reached while substituting, cancelled terms included.
    pub span: usize,
}

type TermKey = (usize, Option<Parity>);

impl SignedRep {
    fn from_map(subject: String, map: BTreeMap<TermKey, i64>, span: usize) -> Self {
        let terms = map
            .into_iter()
            .filter(|&(_, c)| c != 0)
            .map(|((lag, parity), coeff)| Term { lag, coeff, parity })
            .collect();
        Self { subject, terms, span }
    }

    pub fn max_lag(&self) -> usize {
        self.terms.iter().map(|t| t.lag).max().unwrap_or(0)
    }

    /// Smallest `q` for which evaluation is guaranteed exact.
    pub fn first_exact_q(&self) -> usize {
        self.span + 2
    }

    /// Coefficient of `lag` (summing over parity tags).
    pub fn coeff(&self, lag: usize) -> i64 {
        self.terms.iter().filter(|t| t.lag == lag).map(|t| t.coeff).sum()
    }

    /// Evaluates the representation at `q`. `value(arg, parity)` supplies the
    /// count for an argument, which may be below one.
    pub fn evaluate<F>(&self, q: usize, mut value: F) -> BigInt
    where
        F: FnMut(i64, Option<Parity>) -> BigInt,
    {
        self.terms
            .iter()
            .map(|t| BigInt::from(t.coeff) * value(q as i64 - t.lag as i64, t.parity))
            .sum()
    }

    /// Renders as `(q-4)_e-(q-6)_o` (parity-tagged) or `h(q-3)-h(q-4)`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, t) in self.terms.iter().enumerate() {
            let sign = if t.coeff < 0 { "-" } else if k > 0 { "+" } else { "" };
            out.push_str(sign);
            if t.coeff.abs() != 1 {
                out.push_str(&t.coeff.abs().to_string());
            }
            match t.parity {
                Some(par) => out.push_str(&format!("(q-{})_{}", t.lag, par.suffix())),
                None => out.push_str(&format!("h(q-{})", t.lag)),
            }
        }
        out
    }
}

impl fmt::Display for SignedRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.subject, self.render())
    }
}

fn add_shifted(target: &mut BTreeMap<TermKey, i64>, rep: &SignedRep, shift: usize, sign: i64) {
    for t in &rep.terms {
        *target.entry((t.lag + shift, t.parity)).or_insert(0) += sign * t.coeff;
    }
}

/// Memoized rows `t_n(ns, q)` for one `n`.
#[derive(Debug, Clone)]
pub struct RepChart {
    n: usize,
    rows: Vec<SignedRep>,
}

impl RepChart {
    pub fn new(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("branching factor {n} is below 2")));
        }
        Ok(Self { n: n as usize, rows: Vec::new() })
    }

    pub fn n(&self) -> u32 {
        self.n as u32
    }

    /// Row for `t_n(ns, q)`, `s ≥ 1`.
    pub fn row(&mut self, s: usize) -> &SignedRep {
        assert!(s >= 1, "rows start at s = 1");
        while self.rows.len() < s {
            let next = self.rows.len() + 1;
            let row = self.expand(next);
            self.rows.push(row);
        }
        &self.rows[s - 1]
    }

    fn expand(&self, s: usize) -> SignedRep {
        let n = self.n;
        let shift = s * (n - 1);
        let mut map = BTreeMap::new();
        map.insert((shift, None), 1);
        let mut span = shift;
        for j in 1..=(s - 1) / n {
            let inner = &self.rows[j - 1];
            add_shifted(&mut map, inner, shift, -1);
            span = span.max(shift + inner.span);
        }
        let rep = SignedRep::from_map(format!("t_{n}({}, q)", n * s), map, span);
        debug_assert!(rep.terms.iter().all(|t| t.lag >= 1));
        rep
    }

    pub fn rows(&mut self, count: usize) -> Vec<SignedRep> {
        (1..=count).map(|s| self.row(s).clone()).collect()
    }
}

/// `t_n(ns, q)` as a signed list of `h_n(q - lag)` terms.
pub fn rep_row(n: u32, s: usize) -> Result<SignedRep> {
    if s == 0 {
        return Err(Error::Domain("rows start at s = 1".into()));
    }
    Ok(RepChart::new(n)?.row(s).clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Lower,
    Upper,
}

/// Recurrence coefficients: `coeffs[lag - 1]` multiplies `h(q - lag)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoefficientList {
    pub n: u32,
    pub i: usize,
    pub kind: BoundKind,
    pub coeffs: Vec<i64>,
    /// Largest lag reached while substituting the summed rows.
    pub span: usize,
}

impl CoefficientList {
    pub fn get(&self, lag: usize) -> i64 {
        if lag == 0 {
            return 0;
        }
        self.coeffs.get(lag - 1).copied().unwrap_or(0)
    }

    pub fn max_lag(&self) -> usize {
        self.coeffs.iter().rposition(|&c| c != 0).map_or(0, |k| k + 1)
    }

    /// `(lag, coeff)` pairs with nonzero coefficient.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(k, &c)| (k + 1, c))
    }

    pub fn as_map(&self) -> BTreeMap<usize, i64> {
        self.coeffs.iter().enumerate().map(|(k, &c)| (k + 1, c)).collect()
    }
}

fn check_truncation(n: u32, i: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("branching factor {n} is below 2")));
    }
    if i == 0 {
        return Err(Error::Domain("truncation depth i must be at least 1".into()));
    }
    if !i.is_multiple_of(n as usize - 1) {
        return Err(Error::Domain(format!(
            "truncation depth i = {i} is not a multiple of n-1 = {}; q and q-i must both be ≡ 1 (mod n-1)",
            n - 1
        )));
    }
    Ok(())
}

/// Column sums of the first `i` rows: the lower-bound recurrence.
pub fn lower_coeffs(n: u32, i: usize) -> Result<CoefficientList> {
    check_truncation(n, i)?;
    let mut chart = RepChart::new(n)?;
    let mut map: BTreeMap<usize, i64> = BTreeMap::new();
    let mut span = 0;
    for s in 1..=i {
        let row = chart.row(s);
        span = span.max(row.span);
        for t in &row.terms {
            *map.entry(t.lag).or_insert(0) += t.coeff;
        }
    }
    let width = map.keys().copied().max().unwrap_or(0);
    let mut coeffs = vec![0; width];
    for (lag, c) in map {
        coeffs[lag - 1] = c;
    }
    Ok(CoefficientList { n, i, kind: BoundKind::Lower, coeffs, span })
}

/// [`lower_coeffs`] plus one at lag `i + (n-1)`.
pub fn upper_coeffs(n: u32, i: usize) -> Result<CoefficientList> {
    let mut list = lower_coeffs(n, i)?;
    let lag = i + n as usize - 1;
    if list.coeffs.len() < lag {
        list.coeffs.resize(lag, 0);
    }
    list.coeffs[lag - 1] += 1;
    list.span = list.span.max(lag);
    list.kind = BoundKind::Upper;
    Ok(list)
}

/// Memoized 2,3-tree rows of both parities.
#[derive(Debug, Clone, Default)]
pub struct BtChart {
    odd: Vec<SignedRep>,
    even: Vec<SignedRep>,
}

impl BtChart {
    pub fn new() -> Self {
        Self::default()
    }

    /// `t(2s, q_o)` for [`Parity::Odd`], `t(3s, q_e)` for [`Parity::Even`].
    pub fn row(&mut self, parity: Parity, s: usize) -> SignedRep {
        assert!(s >= 1, "rows start at s = 1");
        self.ensure(parity, s);
        match parity {
            Parity::Odd => self.odd[s - 1].clone(),
            Parity::Even => self.even[s - 1].clone(),
        }
    }

    fn ensure(&mut self, parity: Parity, s: usize) {
        loop {
            let have = match parity {
                Parity::Odd => self.odd.len(),
                Parity::Even => self.even.len(),
            };
            if have >= s {
                return;
            }
            let next = have + 1;
            let (shift, base, other, limit) = match parity {
                Parity::Odd => (next, Parity::Even, Parity::Even, (next - 1) / 3),
                Parity::Even => (2 * next, Parity::Odd, Parity::Odd, (next - 1) / 2),
            };
            if limit > 0 {
                self.ensure(other, limit);
            }
            let inner = match other {
                Parity::Odd => &self.odd,
                Parity::Even => &self.even,
            };
            let mut map = BTreeMap::new();
            map.insert((shift, Some(base)), 1);
            let mut span = shift;
            for rep in &inner[..limit] {
                add_shifted(&mut map, rep, shift, -1);
                span = span.max(shift + rep.span);
            }
            let subject = match parity {
                Parity::Odd => format!("t(2*{next}, q_o)"),
                Parity::Even => format!("t(3*{next}, q_e)"),
            };
            let rep = SignedRep::from_map(subject, map, span);
            match parity {
                Parity::Odd => self.odd.push(rep),
                Parity::Even => self.even.push(rep),
            }
        }
    }
}

/// Per-row 2,3-tree representations and their sum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BtRep {
    pub parity: Parity,
    pub rows: Vec<SignedRep>,
    pub aggregate: SignedRep,
}

/// Rows `s = 1..=i` of the `q_o` (odd) or `q_e` (even) expansion.
pub fn bt_rep(parity: Parity, i: usize) -> Result<BtRep> {
    if i == 0 {
        return Err(Error::Domain("truncation depth i must be at least 1".into()));
    }
    let mut chart = BtChart::new();
    let rows: Vec<SignedRep> = (1..=i).map(|s| chart.row(parity, s)).collect();
    let mut map = BTreeMap::new();
    let mut span = 0;
    for r in &rows {
        add_shifted(&mut map, r, 0, 1);
        span = span.max(r.span);
    }
    let subject = format!("Σ_(s≤{i}) of q_{}", parity.suffix());
    let aggregate = SignedRep::from_map(subject, map, span);
    Ok(BtRep { parity, rows, aggregate })
}

/// Double-summation closed form of the truncated `q_o` expansion, with the
/// outer limits read as functions of the truncation depth `i`. Agrees with
/// the substituted aggregate through `i = 12`; from `i = 13` on, third-level
/// terms appear that it omits.
pub fn closed_form_odd(i: usize) -> SignedRep {
    let i = i as i64;
    let mut map: BTreeMap<TermKey, i64> = BTreeMap::new();
    let mut add = |lag: i64, parity: Parity, c: i64| {
        *map.entry((lag as usize, Some(parity))).or_insert(0) += c;
    };
    for k in 1..=i {
        add(k, Parity::Even, 1);
    }
    for r in 1..=(i - 1).div_euclid(3) {
        for t in 0..=(i - 3 * r - 1) {
            add(5 * r + 1 + t, Parity::Odd, -1);
        }
    }
    for w in 1..=(i - 4).div_euclid(6) {
        for v in 0..=(i - 6 * w - 4) {
            add(11 * w + 6 + v, Parity::Even, 1);
        }
    }
    SignedRep::from_map(format!("closed form q_o, i={i}"), map, 0)
}

/// Closed form of the truncated `q_e` expansion; agrees with the substituted
/// aggregate through `i = 14`.
pub fn closed_form_even(i: usize) -> SignedRep {
    let i = i as i64;
    let mut map: BTreeMap<TermKey, i64> = BTreeMap::new();
    let mut add = |lag: i64, parity: Parity, c: i64| {
        *map.entry((lag as usize, Some(parity))).or_insert(0) += c;
    };
    for k in 1..=i {
        add(2 * k, Parity::Odd, 1);
    }
    for m in 1..=(i - 1).div_euclid(2) {
        for f in 0..=(i - 2 * m - 1) {
            add(5 * m + 2 + 2 * f, Parity::Even, -1);
        }
    }
    for b in 1..=(i - 7).div_euclid(2) {
        for c in 0..=(i - 2 * b - 7) {
            add(5 * b + 19 + 2 * c, Parity::Odd, 1);
        }
    }
    SignedRep::from_map(format!("closed form q_e, i={i}"), map, 0)
}

/// Chart layout: one row per `s`, one column per lag, blank cells for
/// absent entries.
pub fn chart_table(rows: &[SignedRep]) -> (Vec<usize>, Vec<(String, Vec<Option<i64>>)>) {
    let width = rows.iter().map(SignedRep::max_lag).max().unwrap_or(0);
    let lags: Vec<usize> = (1..=width).collect();
    let body = rows
        .iter()
        .map(|r| {
            let cells = lags
                .iter()
                .map(|&lag| {
                    let c = r.coeff(lag);
                    (c != 0).then_some(c)
                })
                .collect();
            (r.subject.clone(), cells)
        })
        .collect();
    (lags, body)
}

/// One line per row in the `q_o = / (q-1)_e+ / ...` style.
pub fn listing_lines(rep: &BtRep) -> Vec<String> {
    rep.rows.iter().map(|r| format!("{}+", r.render())).collect()
}
