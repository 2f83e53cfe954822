//! Exact class counts by forward expansion.
//!
//! Giving `b` children to `s` of the `p ≥ s` top-level leaves of a tree with
//! `q` leaves is a bijection onto the trees with `q + (b - 1)s` leaves and
//! `bs` leaves on a new top level. Reading it forwards,
//!
//! ```text
//! t(b·s, q + (b-1)s, φ+1) = Σ_{p ≥ s} t(p, q, φ)
//! ```
//!
//! where `φ` is the top-level phase (`L mod period`) and `b` the factor of
//! phase `φ`. Rows are built in increasing `q` from the bare-root seed
//! `t(1, 1, 0) = 1`, with one suffix-sum array per `(q, φ)`.

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::model::{BranchingSchedule, Parity};

/// Exact counts `t(p, q, phase)` for one schedule, up to `max_q` leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    schedule: BranchingSchedule,
    max_q: usize,
    /// `rows[q][phase][p]`
    rows: Vec<Vec<Vec<BigUint>>>,
    /// `suffix[q][phase][s] = Σ_{p ≥ s} rows[q][phase][p]`
    suffix: Vec<Vec<Vec<BigUint>>>,
}

impl CountTable {
    pub fn build(schedule: &BranchingSchedule, max_q: usize) -> Self {
        let period = schedule.period();
        let max_q = max_q.max(1);
        let mut rows: Vec<Vec<Vec<BigUint>>> = vec![vec![Vec::new(); period]; max_q + 1];
        let mut suffix: Vec<Vec<Vec<BigUint>>> = vec![vec![Vec::new(); period]; max_q + 1];

        rows[1][0] = vec![BigUint::zero(), BigUint::from(1u32)];
        suffix[1][0] = suffix_sums(&rows[1][0]);

        for q in 2..=max_q {
            for phase in 0..period {
                let prev = (phase + period - 1) % period;
                let b = schedule.factors()[prev] as usize;
                let mut row = vec![BigUint::zero(); q + 1];
                let mut s = 1;
                while (b - 1) * s < q {
                    let q0 = q - (b - 1) * s;
                    if let Some(v) = suffix[q0][prev].get(s) {
                        // p = b·s ≤ q always holds since q ≥ s + (b-1)s
                        row[b * s] = v.clone();
                    }
                    s += 1;
                }
                trim_zeros(&mut row);
                suffix[q][phase] = suffix_sums(&row);
                rows[q][phase] = row;
            }
        }
        Self { schedule: schedule.clone(), max_q, rows, suffix }
    }

    pub(crate) fn from_parts(
        schedule: BranchingSchedule,
        max_q: usize,
        mut rows: Vec<Vec<Vec<BigUint>>>,
    ) -> Self {
        let suffix = rows
            .iter_mut()
            .map(|per_phase| {
                per_phase
                    .iter_mut()
                    .map(|row| {
                        trim_zeros(row);
                        suffix_sums(row)
                    })
                    .collect()
            })
            .collect();
        Self { schedule, max_q, rows, suffix }
    }

    pub fn schedule(&self) -> &BranchingSchedule {
        &self.schedule
    }

    pub fn max_q(&self) -> usize {
        self.max_q
    }

    pub(crate) fn row(&self, q: usize, phase: usize) -> &[BigUint] {
        &self.rows[q][phase]
    }

    fn check(&self, q: usize) {
        assert!(q <= self.max_q, "q = {q} is beyond the table horizon {}", self.max_q);
    }

    /// `t(p, q, phase)` with the bare root included at `(1, 1, 0)`.
    pub fn t_with_base(&self, p: usize, q: usize, phase: usize) -> BigUint {
        if q == 0 || phase >= self.schedule.period() {
            return BigUint::zero();
        }
        self.check(q);
        self.rows[q][phase].get(p).cloned().unwrap_or_default()
    }

    /// Number of classes with `q` leaves, `p` of them on a top level of the
    /// given phase. The bare root is never reported.
    pub fn t(&self, p: usize, q: usize, phase: usize) -> BigUint {
        if q < 2 {
            return BigUint::zero();
        }
        self.t_with_base(p, q, phase)
    }

    /// `Σ_{p ≥ s} t(p, q, phase)`, bare root included.
    pub fn tail_sum(&self, s: usize, q: usize, phase: usize) -> BigUint {
        if q == 0 || phase >= self.schedule.period() {
            return BigUint::zero();
        }
        self.check(q);
        self.suffix[q][phase].get(s.max(1)).cloned().unwrap_or_default()
    }

    /// Classes with `q` leaves and a top level of the given phase; the bare
    /// root counts at `q = 1`.
    pub fn phase_total_with_base(&self, q: usize, phase: usize) -> BigUint {
        self.tail_sum(1, q, phase)
    }

    pub fn phase_total(&self, q: usize, phase: usize) -> BigUint {
        if q < 2 {
            return BigUint::zero();
        }
        self.phase_total_with_base(q, phase)
    }

    /// All classes with `q ≥ 2` leaves.
    pub fn total(&self, q: usize) -> BigUint {
        (0..self.schedule.period()).map(|ph| self.phase_total(q, ph)).sum()
    }

    pub fn total_with_base(&self, q: usize) -> BigUint {
        (0..self.schedule.period()).map(|ph| self.phase_total_with_base(q, ph)).sum()
    }

    /// Nonzero entries `(p, count)` of one row, ascending in `p`.
    pub fn entries(&self, q: usize, phase: usize) -> Vec<(usize, BigUint)> {
        if q < 2 {
            return Vec::new();
        }
        self.check(q);
        self.rows[q][phase]
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(p, v)| (p, v.clone()))
            .collect()
    }
}

fn trim_zeros(row: &mut Vec<BigUint>) {
    while row.last().is_some_and(Zero::is_zero) {
        row.pop();
    }
}

fn suffix_sums(row: &[BigUint]) -> Vec<BigUint> {
    let mut out = vec![BigUint::zero(); row.len()];
    let mut acc = BigUint::zero();
    for p in (0..row.len()).rev() {
        acc += &row[p];
        out[p] = acc.clone();
    }
    out
}

/// Count table for full n-ary trees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NaryCounts {
    n: u32,
    table: CountTable,
}

impl NaryCounts {
    pub fn build(n: u32, max_q: usize) -> Result<Self> {
        let schedule = BranchingSchedule::n_ary(n)?;
        Ok(Self { n, table: CountTable::build(&schedule, max_q) })
    }

    pub fn from_table(table: CountTable) -> Result<Self> {
        match (table.schedule().constant_factor(), table.schedule().period()) {
            (Some(n), 1) => Ok(Self { n, table }),
            _ => Err(Error::Domain(format!("schedule {} is not constant", table.schedule()))),
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn max_q(&self) -> usize {
        self.table.max_q()
    }

    pub fn table(&self) -> &CountTable {
        &self.table
    }

    /// `t_n(p, q)`; zero for impossible pairs and for `q < 2`.
    pub fn t(&self, p: usize, q: usize) -> BigUint {
        self.table.t(p, q, 0)
    }

    /// `h_n(q)`; zero for `q < 2`.
    pub fn h(&self, q: usize) -> BigUint {
        self.table.phase_total(q, 0)
    }

    /// `h_n(q)` with the bare root counted at `q = 1` and zero below.
    pub fn h_with_base(&self, q: i64) -> BigUint {
        if q < 1 {
            return BigUint::zero();
        }
        self.table.phase_total_with_base(q as usize, 0)
    }

    /// `H_n(k) = h_n(n + k(n-1))`.
    pub fn h_from_k(&self, k: usize) -> BigUint {
        self.h(q_from_k(self.n, k))
    }

    /// Whether `q` can be a leaf count, i.e. `q ≥ n` and `q ≡ 1 (mod n-1)`.
    pub fn is_valid_q(&self, q: usize) -> bool {
        is_valid_q(self.n, q)
    }
}

pub fn q_from_k(n: u32, k: usize) -> usize {
    n as usize + k * (n as usize - 1)
}

pub fn is_valid_q(n: u32, q: usize) -> bool {
    let n = n as usize;
    q >= n && (q - 1).is_multiple_of(n - 1)
}

/// Count table for 2,3-trees, indexed by top-level parity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BtCounts {
    table: CountTable,
}

impl BtCounts {
    pub fn build(max_q: usize) -> Self {
        Self { table: CountTable::build(&BranchingSchedule::binary_ternary(), max_q) }
    }

    pub fn from_table(table: CountTable) -> Result<Self> {
        if table.schedule().factors() != [2, 3] {
            return Err(Error::Domain(format!("schedule {} is not 2,3", table.schedule())));
        }
        Ok(Self { table })
    }

    pub fn max_q(&self) -> usize {
        self.table.max_q()
    }

    pub fn table(&self) -> &CountTable {
        &self.table
    }

    /// `t_{2,3}(p, q)` for a top level of the given parity; bare root excluded.
    pub fn t(&self, p: usize, q: usize, parity: Parity) -> BigUint {
        self.table.t(p, q, parity.phase())
    }

    pub fn t_with_base(&self, p: usize, q: usize, parity: Parity) -> BigUint {
        self.table.t_with_base(p, q, parity.phase())
    }

    /// `e_{2,3}(q)`.
    pub fn e(&self, q: usize) -> BigUint {
        self.table.phase_total(q, 0)
    }

    /// `o_{2,3}(q)`.
    pub fn o(&self, q: usize) -> BigUint {
        self.table.phase_total(q, 1)
    }

    /// Parity total with the bare root counted as an even-topped tree with
    /// one leaf, and zero below `q = 1`.
    pub fn total_with_base(&self, q: i64, parity: Parity) -> BigUint {
        if q < 1 {
            return BigUint::zero();
        }
        self.table.phase_total_with_base(q as usize, parity.phase())
    }
}

/// `t_n(p, q)`.
pub fn t_exact(n: u32, p: usize, q: usize) -> Result<BigUint> {
    Ok(NaryCounts::build(n, q)?.t(p, q))
}

/// `h_n(q)`.
pub fn h_exact(n: u32, q: usize) -> Result<BigUint> {
    Ok(NaryCounts::build(n, q)?.h(q))
}

/// `H_n(k)`.
pub fn h_from_k(n: u32, k: usize) -> Result<BigUint> {
    let q = if n >= 2 { q_from_k(n, k) } else { 0 };
    h_exact(n, q)
}

pub fn bt_t_exact(p: usize, q: usize, parity: Parity) -> BigUint {
    BtCounts::build(q).t(p, q, parity)
}

pub fn bt_e(q: usize) -> BigUint {
    BtCounts::build(q).e(q)
}

pub fn bt_o(q: usize) -> BigUint {
    BtCounts::build(q).o(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn binary_values() {
        let c = NaryCounts::build(2, 20).unwrap();
        let h: Vec<BigUint> = (2..=12).map(|q| c.h(q)).collect();
        let want: Vec<BigUint> = [1u64, 1, 2, 3, 5, 9, 16, 28, 50, 89, 159].map(big).to_vec();
        assert_eq!(h, want);
        assert_eq!(c.t(2, 2), big(1));
        assert_eq!(c.h(1), big(0));
        assert_eq!(c.h_with_base(1), big(1));
    }

    #[test]
    fn bijection_instance() {
        let c = NaryCounts::build(2, 10).unwrap();
        let lhs: BigUint = (1..=4).map(|p| c.t(p, 4)).sum();
        assert_eq!(lhs, c.t(2, 5));
    }

    #[test]
    fn ternary_gaps() {
        assert_eq!(h_exact(3, 8).unwrap(), big(0));
        assert_eq!(h_exact(3, 3).unwrap(), big(1));
        assert_eq!(h_exact(2, 5).unwrap(), big(3));
    }

    #[test]
    fn h_by_k() {
        assert_eq!(h_from_k(2, 0).unwrap(), big(1));
        assert_eq!(h_from_k(2, 3).unwrap(), big(3));
        assert_eq!(h_from_k(3, 1).unwrap(), h_exact(3, 5).unwrap());
    }

    #[test]
    fn binary_ternary_values() {
        let c = BtCounts::build(12);
        assert_eq!(c.o(2), big(1));
        assert_eq!(c.e(2), big(0));
        assert_eq!(c.e(4), big(1));
        assert_eq!(c.t(2, 2, Parity::Odd), big(1));
        assert_eq!(c.t(3, 4, Parity::Even), big(1));
        assert_eq!(c.e(1), big(0));
        assert_eq!(c.total_with_base(1, Parity::Even), big(1));
        assert_eq!(bt_e(4), big(1));
        assert_eq!(bt_o(2), big(1));
        assert_eq!(bt_t_exact(2, 2, Parity::Odd), big(1));
    }

    #[test]
    fn row_sums_match_totals() {
        let c = CountTable::build(&"2,3".parse().unwrap(), 30);
        for q in 2..=30 {
            for ph in 0..2 {
                let sum: BigUint = c.entries(q, ph).into_iter().map(|(_, v)| v).sum();
                assert_eq!(sum, c.phase_total(q, ph));
            }
        }
    }

    #[test]
    fn keys_are_multiples_of_n() {
        let c = NaryCounts::build(4, 40).unwrap();
        for q in 2..=40 {
            for (p, _) in c.table().entries(q, 0) {
                assert_eq!(p % 4, 0);
            }
        }
    }

    #[test]
    fn big_values_do_not_overflow() {
        let c = NaryCounts::build(2, 200).unwrap();
        let digits = c.h(200).to_string().len();
        assert!((49..=53).contains(&digits), "{digits} digits");
    }

    #[test]
    #[should_panic(expected = "beyond the table horizon")]
    fn horizon_is_enforced() {
        NaryCounts::build(2, 10).unwrap().h(11);
    }
}
