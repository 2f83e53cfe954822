//! Brute-force enumeration of level profiles.
//!
//! Depth-first search over levels: at level `j` with `a_j` vertices, either
//! stop (all `a_j` become top-level leaves) or pick `1 ≤ i_j ≤ a_j` internal
//! vertices. The running leaf total plus the cheapest completion of the
//! current level must not exceed `q`, which bounds the depth by `q`.
//!
//! Every other module is tested against this one, so it deliberately shares
//! no code with the counting recurrences.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{BranchingSchedule, LevelProfile, Parity};

/// Knobs for [`enumerate_with`] and friends.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleOptions {
    /// Report the bare root as the single profile with `q = 1`.
    pub include_degenerate: bool,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

/// Key of [`OracleResult::counts_by_top`]: top-level leaf count and the
/// parity of the top level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TopKey {
    pub p: u64,
    pub parity: Parity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub schedule: BranchingSchedule,
    pub q: u64,
    pub profiles: Vec<LevelProfile>,
    #[serde(serialize_with = "serialize_top_counts")]
    pub counts_by_top: BTreeMap<TopKey, BigUint>,
}

impl OracleResult {
    pub fn total(&self) -> BigUint {
        self.counts_by_top.values().sum()
    }
}

fn serialize_top_counts<S: Serializer>(
    map: &BTreeMap<TopKey, BigUint>,
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Entry {
        p: u64,
        parity: Parity,
        count: String,
    }
    let entries: Vec<Entry> = map
        .iter()
        .map(|(k, v)| Entry { p: k.p, parity: k.parity, count: v.to_string() })
        .collect();
    entries.serialize(ser)
}

/// A partially built profile: the next level to decide is `internal.len()`.
#[derive(Debug, Clone)]
struct Node {
    internal: Vec<u64>,
    /// Vertices on the current level.
    width: u64,
    /// Leaves on finished levels.
    leaves: u64,
}

impl Node {
    fn root() -> Self {
        Node { internal: Vec::new(), width: 1, leaves: 0 }
    }

    fn level(&self) -> usize {
        self.internal.len()
    }

    /// Stopping here yields a tree with exactly `q` leaves.
    fn completes(&self, q: u64) -> bool {
        self.leaves + self.width == q
    }

    /// Children in ascending order of `i_j`, pruned against `q`.
    fn children<'a>(
        &'a self,
        schedule: &'a BranchingSchedule,
        q: u64,
    ) -> impl Iterator<Item = Node> + 'a {
        let b = u64::from(schedule.factor_at(self.level()));
        (1..=self.width)
            .take_while(move |&i| self.leaves + (self.width - i) + b * i <= q)
            .map(move |i| {
                let mut internal = self.internal.clone();
                internal.push(i);
                Node { internal, width: b * i, leaves: self.leaves + self.width - i }
            })
    }
}

trait Visitor: Send {
    fn visit(&mut self, node: &Node);
}

struct Collect(Vec<Vec<u64>>);

impl Visitor for Collect {
    fn visit(&mut self, node: &Node) {
        self.0.push(node.internal.clone());
    }
}

#[derive(Default)]
struct Tally(BTreeMap<TopKey, u64>);

impl Visitor for Tally {
    fn visit(&mut self, node: &Node) {
        let key = TopKey { p: node.width, parity: Parity::of(node.level()) };
        *self.0.entry(key).or_insert(0) += 1;
    }
}

fn dfs<V: Visitor>(schedule: &BranchingSchedule, q: u64, node: &Node, v: &mut V) {
    if node.completes(q) && !node.internal.is_empty() {
        v.visit(node);
    }
    for child in node.children(schedule, q) {
        dfs(schedule, q, &child, v);
    }
}

/// Expands the search tree breadth-first until there are enough independent
/// subtrees to share out. Completed profiles met on the way are visited
/// through `shallow`; the returned frontier keeps DFS order.
fn frontier<V: Visitor>(
    schedule: &BranchingSchedule,
    q: u64,
    target: usize,
    shallow: &mut V,
) -> Vec<Node> {
    let mut nodes = vec![Node::root()];
    // A node's own completion is visited before its children, so an
    // expanded node is replaced in place by its children to keep the order.
    loop {
        if nodes.len() >= target {
            return nodes;
        }
        let mut next = Vec::new();
        let mut grew = false;
        for node in nodes {
            let kids: Vec<Node> = node.children(schedule, q).collect();
            if kids.is_empty() {
                next.push(node);
                continue;
            }
            grew = true;
            if node.completes(q) && !node.internal.is_empty() {
                shallow.visit(&node);
            }
            next.extend(kids);
        }
        nodes = next;
        if !grew {
            return nodes;
        }
    }
}

fn run_search<V, F>(schedule: &BranchingSchedule, q: u64, threads: Option<usize>, make: F) -> Vec<V>
where
    V: Visitor,
    F: Fn() -> V + Sync,
{
    let work = || {
        let mut shallow = make();
        let target = rayon::current_num_threads().max(1) * 8;
        let nodes = frontier(schedule, q, target, &mut shallow);
        let mut parts: Vec<V> = nodes
            .par_iter()
            .map(|node| {
                let mut v = make();
                dfs(schedule, q, node, &mut v);
                v
            })
            .collect();
        parts.insert(0, shallow);
        parts
    };
    match threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(work),
            Err(_) => work(),
        },
        None => work(),
    }
}

fn check_q(q: u64) -> Result<()> {
    if q == 0 {
        return Err(Error::Domain("leaf count q must be at least 1".into()));
    }
    Ok(())
}

/// All valid profiles with `q` leaves, in lexicographic order of their
/// internal-vertex lists.
pub fn enumerate(schedule: &BranchingSchedule, q: u64) -> Result<OracleResult> {
    enumerate_with(schedule, q, OracleOptions::default())
}

pub fn enumerate_with(
    schedule: &BranchingSchedule,
    q: u64,
    opts: OracleOptions,
) -> Result<OracleResult> {
    check_q(q)?;
    let mut lists: Vec<Vec<u64>> = run_search(schedule, q, opts.threads, || Collect(Vec::new()))
        .into_iter()
        .flat_map(|c| c.0)
        .collect();
    if q == 1 && opts.include_degenerate {
        lists.push(Vec::new());
    }
    lists.sort();
    let profiles: Vec<LevelProfile> = lists
        .into_iter()
        .map(|internal| LevelProfile::new(schedule.clone(), internal))
        .collect();
    let mut counts_by_top = BTreeMap::new();
    for p in &profiles {
        let key = TopKey { p: p.top_leaves(), parity: p.top_parity() };
        *counts_by_top.entry(key).or_insert_with(BigUint::default) += 1u32;
    }
    Ok(OracleResult { schedule: schedule.clone(), q, profiles, counts_by_top })
}

/// Number of profiles with `q` leaves, without materializing them.
pub fn count_oracle(schedule: &BranchingSchedule, q: u64) -> Result<BigUint> {
    Ok(count_by_top_and_parity(schedule, q)?.values().sum())
}

/// [`count_oracle`] split by top-level leaf count and top-level parity.
pub fn count_by_top_and_parity(
    schedule: &BranchingSchedule,
    q: u64,
) -> Result<BTreeMap<TopKey, BigUint>> {
    count_by_top_with(schedule, q, OracleOptions::default())
}

pub fn count_by_top_with(
    schedule: &BranchingSchedule,
    q: u64,
    opts: OracleOptions,
) -> Result<BTreeMap<TopKey, BigUint>> {
    check_q(q)?;
    let mut merged: BTreeMap<TopKey, BigUint> = BTreeMap::new();
    for part in run_search(schedule, q, opts.threads, Tally::default) {
        for (k, v) in part.0 {
            *merged.entry(k).or_default() += v;
        }
    }
    if q == 1 && opts.include_degenerate {
        merged.insert(TopKey { p: 1, parity: Parity::Even }, BigUint::from(1u32));
    }
    Ok(merged)
}
