//! Tree shapes as level profiles.
//!
//! A full tree is described level by level: level 0 holds the root, and the
//! vertices on level `j` each have either `b_j` children or none, where `b_j`
//! comes from a periodic [`BranchingSchedule`]. Two trees with the same depth
//! multiset are considered equivalent, and the number of internal vertices on
//! each level is a canonical representative of such a class.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parity of a level index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(level: usize) -> Self {
        if level.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Phase index in a period-2 schedule.
    pub fn phase(self) -> usize {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }

    pub fn suffix(self) -> char {
        match self {
            Parity::Even => 'e',
            Parity::Odd => 'o',
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

impl FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "even" | "e" => Ok(Parity::Even),
            "odd" | "o" => Ok(Parity::Odd),
            other => Err(Error::Domain(format!("unknown parity `{other}`"))),
        }
    }
}

/// Periodic per-level branching factors.
///
/// Level `j` branches `factors[j % factors.len()]` ways. `[n]` gives full
/// n-ary trees and `[2, 3]` gives 2,3-trees.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct BranchingSchedule {
    factors: Vec<u32>,
}

impl BranchingSchedule {
    pub fn new(factors: Vec<u32>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Schedule("no branching factors".into()));
        }
        if let Some((j, b)) = factors.iter().enumerate().find(|(_, &b)| b < 2) {
            return Err(Error::Schedule(format!("factor {b} at position {j} is below 2")));
        }
        Ok(Self { factors })
    }

    /// Constant schedule: every internal vertex has `n` children.
    pub fn n_ary(n: u32) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn binary_ternary() -> Self {
        Self { factors: vec![2, 3] }
    }

    pub fn factors(&self) -> &[u32] {
        &self.factors
    }

    pub fn period(&self) -> usize {
        self.factors.len()
    }

    /// Branching factor used by internal vertices on `level`.
    pub fn factor_at(&self, level: usize) -> u32 {
        self.factors[level % self.factors.len()]
    }

    /// `Some(n)` for a constant schedule.
    pub fn constant_factor(&self) -> Option<u32> {
        let first = self.factors[0];
        self.factors.iter().all(|&b| b == first).then_some(first)
    }

    pub fn label(&self) -> String {
        match self.constant_factor() {
            Some(n) if self.factors.len() == 1 => format!("n-ary({n})"),
            _ => self
                .factors
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(","),
        }
    }
}

impl TryFrom<Vec<u32>> for BranchingSchedule {
    type Error = Error;

    fn try_from(factors: Vec<u32>) -> Result<Self> {
        Self::new(factors)
    }
}

impl From<BranchingSchedule> for Vec<u32> {
    fn from(s: BranchingSchedule) -> Self {
        s.factors
    }
}

impl FromStr for BranchingSchedule {
    type Err = Error;

    /// Parses `"2"` or `"2,3"`.
    fn from_str(s: &str) -> Result<Self> {
        let factors = s
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Schedule(format!("cannot parse factor `{}`", part.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(factors)
    }
}

impl fmt::Display for BranchingSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// One reason a profile fails to describe a full tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// `i_j ≥ 1` fails.
    NoInternalVertex { level: usize },
    /// `i_j ≤ a_j` fails.
    TooManyInternal { level: usize, internal: u64, available: u64 },
    /// Vertex counts left the `u64` range.
    Overflow { level: usize },
    /// The leaf weights do not sum to one.
    Kraft { sum: BigRational },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoInternalVertex { level } => write!(f, "i_j ≥ 1 fails at j={level}"),
            Violation::TooManyInternal { level, internal, available } => write!(
                f,
                "i_j ≤ a_j fails at j={level} ({internal} internal of {available} vertices)"
            ),
            Violation::Overflow { level } => write!(f, "vertex count overflows at j={level}"),
            Violation::Kraft { sum } => write!(f, "Kraft sum is {sum}, expected 1"),
        }
    }
}

/// Internal-vertex count per level below the top; the canonical
/// representative of an equivalence class of full trees.
///
/// With `a_0 = 1`, `a_{j+1} = b_j · i_j` and `l_j = a_j - i_j`, the top level
/// `L = internal.len()` consists of `a_L` leaves. The empty profile is the
/// bare root (one leaf, `L = 0`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LevelProfile {
    schedule: BranchingSchedule,
    internal: Vec<u64>,
}

impl LevelProfile {
    /// Builds a profile without validating it. See [`validate_profile`].
    pub fn new(schedule: BranchingSchedule, internal: Vec<u64>) -> Self {
        Self { schedule, internal }
    }

    /// Builds a profile and rejects it unless every invariant holds.
    pub fn checked(schedule: BranchingSchedule, internal: Vec<u64>) -> Result<Self> {
        let profile = Self::new(schedule, internal);
        match validate_profile(&profile) {
            Ok(()) => Ok(profile),
            Err(v) => Err(Error::InvalidProfile(v)),
        }
    }

    pub fn degenerate(schedule: BranchingSchedule) -> Self {
        Self::new(schedule, Vec::new())
    }

    pub fn schedule(&self) -> &BranchingSchedule {
        &self.schedule
    }

    pub fn internal(&self) -> &[u64] {
        &self.internal
    }

    pub fn is_degenerate(&self) -> bool {
        self.internal.is_empty()
    }

    /// Index `L` of the top level.
    pub fn top_level(&self) -> usize {
        self.internal.len()
    }

    pub fn top_parity(&self) -> Parity {
        Parity::of(self.top_level())
    }

    /// Top level modulo the schedule period.
    pub fn top_phase(&self) -> usize {
        self.top_level() % self.schedule.period()
    }

    /// Vertex counts `a_0..=a_L`, or the first level whose count overflows.
    fn try_vertices(&self) -> std::result::Result<Vec<u64>, usize> {
        let mut a = Vec::with_capacity(self.internal.len() + 1);
        a.push(1u64);
        for (j, &i) in self.internal.iter().enumerate() {
            let next = u64::from(self.schedule.factor_at(j))
                .checked_mul(i)
                .ok_or(j + 1)?;
            a.push(next);
        }
        Ok(a)
    }

    /// Vertex counts `a_0..=a_L`.
    ///
    /// # Panics
    /// If a count does not fit in `u64`.
    pub fn vertices(&self) -> Vec<u64> {
        self.try_vertices().expect("vertex count overflow")
    }

    /// Leaf counts `l_0..=l_L` (saturating at zero for inconsistent profiles).
    pub fn leaves(&self) -> Vec<u64> {
        let a = self.vertices();
        let mut l: Vec<u64> = self
            .internal
            .iter()
            .zip(&a)
            .map(|(&i, &aj)| aj.saturating_sub(i))
            .collect();
        l.push(*a.last().unwrap());
        l
    }

    /// Total leaf count `q`.
    pub fn leaf_count(&self) -> u64 {
        self.leaves().iter().sum()
    }

    /// Leaves on the top level, `p`.
    pub fn top_leaves(&self) -> u64 {
        *self.vertices().last().unwrap()
    }

    /// Internal vertices on the level just below the top, `s`.
    pub fn top_parents(&self) -> Option<u64> {
        self.internal.last().copied()
    }

    /// Total internal vertex count, root included.
    pub fn internal_total(&self) -> u64 {
        self.internal.iter().sum()
    }

    /// Number of vertices of degree `n + 1`: the internal vertices other
    /// than the root. `None` for the bare root.
    pub fn inner_vertex_count(&self) -> Option<u64> {
        self.internal_total().checked_sub(1)
    }

    pub fn kraft_sum(&self) -> BigRational {
        kraft_sum_of_leaves(&self.schedule, &self.leaves())
    }

    /// The profile with its top level removed, i.e. the tree obtained by
    /// deleting every top-level leaf.
    pub fn truncated(&self) -> Option<LevelProfile> {
        if self.internal.is_empty() {
            return None;
        }
        Some(Self::new(
            self.schedule.clone(),
            self.internal[..self.internal.len() - 1].to_vec(),
        ))
    }

    /// Appends a level by giving children to `s` of the top-level leaves.
    pub fn expanded(&self, s: u64) -> LevelProfile {
        let mut internal = self.internal.clone();
        internal.push(s);
        Self::new(self.schedule.clone(), internal)
    }
}

/// Sum over leaves of the product of reciprocal branching factors along the
/// root path, in exact arithmetic. `leaves[j]` is the leaf count on level `j`.
pub fn kraft_sum_of_leaves(schedule: &BranchingSchedule, leaves: &[u64]) -> BigRational {
    let mut sum = BigRational::zero();
    let mut weight = BigRational::one();
    for (j, &l) in leaves.iter().enumerate() {
        if l > 0 {
            sum += &weight * BigRational::from_integer(BigInt::from(l));
        }
        weight /= BigRational::from_integer(BigInt::from(schedule.factor_at(j)));
    }
    sum
}

/// Checks every profile invariant, including exact Kraft equality.
pub fn validate_profile(profile: &LevelProfile) -> std::result::Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    let vertices = match profile.try_vertices() {
        Ok(a) => a,
        Err(level) => return Err(vec![Violation::Overflow { level }]),
    };
    for (j, (&i, &a)) in profile.internal.iter().zip(&vertices).enumerate() {
        if i == 0 {
            violations.push(Violation::NoInternalVertex { level: j });
        } else if i > a {
            violations.push(Violation::TooManyInternal { level: j, internal: i, available: a });
        }
    }
    if violations.is_empty() {
        let sum = profile.kraft_sum();
        if !sum.is_one() {
            violations.push(Violation::Kraft { sum });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// Non-decreasing list of root-to-leaf depths.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct HuffmanSequence {
    depths: Vec<u32>,
}

impl HuffmanSequence {
    pub fn new(depths: Vec<u32>) -> Result<Self> {
        if depths.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidSequence("depths are not non-decreasing".into()));
        }
        Ok(Self { depths })
    }

    pub fn depths(&self) -> &[u32] {
        &self.depths
    }

    pub fn len(&self) -> usize {
        self.depths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.depths.is_empty()
    }

    /// Leaf count per depth, `l_0..=l_max`.
    pub fn leaves_per_level(&self) -> Vec<u64> {
        let max = self.depths.last().copied().unwrap_or(0) as usize;
        let mut l = vec![0u64; max + 1];
        for &d in &self.depths {
            l[d as usize] += 1;
        }
        l
    }

    pub fn kraft_sum(&self, schedule: &BranchingSchedule) -> BigRational {
        kraft_sum_of_leaves(schedule, &self.leaves_per_level())
    }

    /// Recovers the level profile whose leaves sit at these depths.
    pub fn to_profile(&self, schedule: &BranchingSchedule) -> Result<LevelProfile> {
        let leaves = self.leaves_per_level();
        let top = leaves.len() - 1;
        let mut internal = Vec::with_capacity(top);
        let mut a = 1u64;
        for (j, &l) in leaves.iter().enumerate().take(top) {
            let i = a.checked_sub(l).ok_or_else(|| {
                Error::InvalidSequence(format!("{l} leaves at depth {j} exceed {a} vertices"))
            })?;
            internal.push(i);
            a = u64::from(schedule.factor_at(j))
                .checked_mul(i)
                .ok_or_else(|| Error::InvalidSequence("vertex count overflow".into()))?;
        }
        if a != leaves[top] {
            return Err(Error::InvalidSequence(format!(
                "top level has {a} vertices but {} leaves",
                leaves[top]
            )));
        }
        LevelProfile::checked(schedule.clone(), internal)
    }
}

impl TryFrom<Vec<u32>> for HuffmanSequence {
    type Error = Error;

    fn try_from(depths: Vec<u32>) -> Result<Self> {
        Self::new(depths)
    }
}

impl From<HuffmanSequence> for Vec<u32> {
    fn from(s: HuffmanSequence) -> Self {
        s.depths
    }
}

/// Lists `l_j` copies of depth `j` for every level.
pub fn profile_to_sequence(profile: &LevelProfile) -> Result<HuffmanSequence> {
    validate_profile(profile).map_err(Error::InvalidProfile)?;
    let depths = profile
        .leaves()
        .iter()
        .enumerate()
        .flat_map(|(j, &l)| std::iter::repeat_n(j as u32, l as usize))
        .collect();
    HuffmanSequence::new(depths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary() -> BranchingSchedule {
        BranchingSchedule::n_ary(2).unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn six_leaf_binary_tree() {
        let p = LevelProfile::checked(binary(), vec![1, 2, 2]).unwrap();
        assert_eq!(p.vertices(), vec![1, 2, 4, 4]);
        assert_eq!(p.leaves(), vec![0, 0, 2, 4]);
        assert_eq!(p.top_parents(), Some(2));
        let seq = profile_to_sequence(&p).unwrap();
        assert_eq!(seq.depths(), &[2, 2, 3, 3, 3, 3]);
    }

    #[test]
    fn smallest_binary_tree() {
        let p = LevelProfile::new(binary(), vec![1]);
        assert_eq!(profile_to_sequence(&p).unwrap().depths(), &[1, 1]);
    }

    #[test]
    fn binary_ternary_example() {
        let p = LevelProfile::new(BranchingSchedule::binary_ternary(), vec![1, 2, 2]);
        assert_eq!(p.vertices(), vec![1, 2, 6, 4]);
        assert_eq!(p.leaf_count(), 8);
        assert_eq!(p.kraft_sum(), rat(1, 1));
        assert_eq!(profile_to_sequence(&p).unwrap().depths(), &[2, 2, 2, 2, 3, 3, 3, 3]);
        assert_eq!(p.top_parity(), Parity::Odd);
    }

    #[test]
    fn validation_cases() {
        assert!(validate_profile(&LevelProfile::new(binary(), vec![1, 1])).is_ok());
        let err = validate_profile(&LevelProfile::new(binary(), vec![1, 0])).unwrap_err();
        assert_eq!(err, vec![Violation::NoInternalVertex { level: 1 }]);
        assert_eq!(err[0].to_string(), "i_j ≥ 1 fails at j=1");

        let ternary = LevelProfile::new(BranchingSchedule::n_ary(3).unwrap(), vec![1]);
        assert!(validate_profile(&ternary).is_ok());
        assert_eq!(ternary.leaf_count(), 3);

        let too_many = LevelProfile::new(binary(), vec![1, 3]);
        assert!(matches!(
            validate_profile(&too_many).unwrap_err()[0],
            Violation::TooManyInternal { level: 1, internal: 3, available: 2 }
        ));
    }

    #[test]
    fn degenerate_root_is_valid() {
        let p = LevelProfile::degenerate(binary());
        assert!(validate_profile(&p).is_ok());
        assert_eq!(p.leaf_count(), 1);
        assert_eq!(p.top_leaves(), 1);
        assert_eq!(profile_to_sequence(&p).unwrap().depths(), &[0]);
    }

    #[test]
    fn kraft_of_broken_tree() {
        // [1,2,2] with one depth-3 leaf removed
        let sum = kraft_sum_of_leaves(&binary(), &[0, 0, 2, 3]);
        assert_eq!(sum, rat(7, 8));
    }

    #[test]
    fn schedule_parsing() {
        let s: BranchingSchedule = "2,3".parse().unwrap();
        assert_eq!(s.factors(), &[2, 3]);
        assert_eq!(s.label(), "2,3");
        assert_eq!("4".parse::<BranchingSchedule>().unwrap().label(), "n-ary(4)");
        assert!("1".parse::<BranchingSchedule>().is_err());
        assert!("".parse::<BranchingSchedule>().is_err());
        assert_eq!(s.factor_at(0), 2);
        assert_eq!(s.factor_at(3), 3);
    }

    #[test]
    fn json_shapes() {
        let p = LevelProfile::new(BranchingSchedule::binary_ternary(), vec![1, 2, 2]);
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"{"schedule":[2,3],"internal":[1,2,2]}"#);
        let back: LevelProfile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<LevelProfile>(r#"{"schedule":[1],"internal":[]}"#).is_err());

        let seq = profile_to_sequence(&p).unwrap();
        assert_eq!(serde_json::to_string(&seq).unwrap(), "[2,2,2,2,3,3,3,3]");
        assert!(serde_json::from_str::<HuffmanSequence>("[3,2]").is_err());
    }

    #[test]
    fn sequence_back_to_profile() {
        let seq = HuffmanSequence::new(vec![1, 2, 3, 3]).unwrap();
        let p = seq.to_profile(&binary()).unwrap();
        assert_eq!(p.internal(), &[1, 1, 1]);
        assert!(HuffmanSequence::new(vec![1, 2, 3]).unwrap().to_profile(&binary()).is_err());
    }

    #[test]
    fn degree_identity() {
        let p = LevelProfile::new(BranchingSchedule::n_ary(3).unwrap(), vec![1, 2, 4]);
        let n = 3;
        let k = p.inner_vertex_count().unwrap();
        assert_eq!(k, 6);
        assert_eq!(p.leaf_count(), n + k * (n - 1));
    }
}
