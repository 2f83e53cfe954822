//! Acceptance checks, one test per criterion. Each prints a single
//! `criterion N: PASS|FAIL` line with the measured quantities, then asserts.

use std::cell::Cell;
use std::collections::BTreeMap;
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use huffenum::bounds::{verify_k_sandwich, verify_sandwich};
use huffenum::bt::{default_grid, verify_statement, BtStatement};
use huffenum::exact::{q_from_k, BtCounts, NaryCounts};
use huffenum::fit::{approx_h, fit_from_truncation};
use huffenum::model::{BranchingSchedule, Parity};
use huffenum::oracle::{count_by_top_and_parity, count_by_top_with, enumerate, OracleOptions};
use huffenum::rep::{bt_rep, listing_lines, lower_coeffs, rep_row};
use huffenum::roots::characteristic_roots;

const R1: f64 = 1.794147187541;
const R1_TOL: f64 = 1e-6;
const R2: f64 = 1.2795491341242096;
const R2_TOL: f64 = 1e-4;
const C1: f64 = 0.1418532;
const C1_TOL: f64 = 1e-4;
const C2: f64 = 0.061241041;
const C2_REL_TOL: f64 = 0.20;
const APPROX_REL_TOL: f64 = 1e-3;

fn verdict(n: u32, pass: bool, detail: &str, elapsed: Duration, budget: Option<Duration>) {
    let within = budget.is_none_or(|b| elapsed <= b);
    let status = if pass && within { "PASS" } else { "FAIL" };
    let budget = budget.map_or(String::new(), |b| format!(", budget {}s", b.as_secs()));
    println!("criterion {n}: {status} ({detail}; {:.2}s{budget})", elapsed.as_secs_f64());
}

/// Oracle counts summed over parity, keyed by top-level leaf count.
fn oracle_by_p(schedule: &BranchingSchedule, q: u64) -> BTreeMap<usize, BigUint> {
    let mut out = BTreeMap::new();
    for (key, v) in count_by_top_and_parity(schedule, q).unwrap() {
        *out.entry(key.p as usize).or_insert_with(BigUint::default) += v;
    }
    out
}

#[test]
fn criterion_1_oracle_matches_dp() {
    let start = Instant::now();
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for n in 2..=5u32 {
        let counts = NaryCounts::build(n, 25).unwrap();
        let schedule = BranchingSchedule::n_ary(n).unwrap();
        for q in (2..=25).filter(|&q| counts.is_valid_q(q)) {
            let by_p = oracle_by_p(&schedule, q as u64);
            let total: BigUint = by_p.values().sum();
            if total != counts.h(q) {
                mismatches.push(format!("h_{n}({q}): dp {} oracle {total}", counts.h(q)));
            }
            for p in 1..=q {
                let oracle = by_p.get(&p).cloned().unwrap_or_default();
                if oracle != counts.t(p, q) {
                    mismatches.push(format!("t_{n}({p},{q})"));
                }
            }
            checked += 1;
        }
    }
    let pass = mismatches.is_empty();
    let detail = format!("{checked} (n, q) pairs, {} mismatches {mismatches:?}", mismatches.len());
    verdict(1, pass, &detail, start.elapsed(), Some(Duration::from_secs(60)));
    assert!(pass, "{detail}");
}

#[test]
fn criterion_2_bt_oracle_matches_dp() {
    let start = Instant::now();
    let schedule = BranchingSchedule::binary_ternary();
    let counts = BtCounts::build(20);
    let mut mismatches = Vec::new();
    for q in 2..=20usize {
        let oracle = count_by_top_and_parity(&schedule, q as u64).unwrap();
        let total: BigUint = oracle.values().sum();
        if total != counts.e(q) + counts.o(q) {
            mismatches.push(format!("q={q}: e+o {} oracle {total}", counts.e(q) + counts.o(q)));
        }
        for parity in [Parity::Even, Parity::Odd] {
            for p in 1..=q {
                let o = oracle
                    .iter()
                    .filter(|(k, _)| k.p as usize == p && k.parity == parity)
                    .map(|(_, v)| v.clone())
                    .sum::<BigUint>();
                if o != counts.t(p, q, parity) {
                    mismatches.push(format!("t({p}, {q}_{})", parity.suffix()));
                }
            }
        }
    }
    let pass = mismatches.is_empty();
    let detail = format!("q = 2..=20, {} mismatches {mismatches:?}", mismatches.len());
    verdict(2, pass, &detail, start.elapsed(), Some(Duration::from_secs(60)));
    assert!(pass, "{detail}");
}

#[test]
fn criterion_3_lag_chart() {
    let start = Instant::now();
    let expected: [&[(usize, i64)]; 8] = [
        &[(1, 1)],
        &[(2, 1)],
        &[(3, 1), (4, -1)],
        &[(4, 1), (5, -1)],
        &[(5, 1), (6, -1), (7, -1)],
        &[(6, 1), (7, -1), (8, -1)],
        &[(7, 1), (8, -1), (9, -1), (10, -1), (11, 1)],
        &[(8, 1), (9, -1), (10, -1), (11, -1), (12, 1)],
    ];
    let mut wrong = Vec::new();
    for (s, want) in (1..).zip(expected) {
        let row = rep_row(2, s).unwrap();
        let got: Vec<(usize, i64)> = row.terms.iter().map(|t| (t.lag, t.coeff)).collect();
        if got != want {
            wrong.push(format!("s={s}: {got:?}"));
        }
    }
    let pass = wrong.is_empty();
    let detail = format!("rows s = 1..=8, {} differ {wrong:?}", wrong.len());
    verdict(3, pass, &detail, start.elapsed(), None);
    assert!(pass, "{detail}");
}

/// Removes brackets, distributing a leading minus over their contents.
fn normalize(line: &str) -> String {
    let mut out = String::new();
    let (mut negate, mut depth) = (false, 0);
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '-' if chars.peek() == Some(&'[') => {
                chars.next();
                negate = true;
                out.push('-');
            }
            ']' => negate = false,
            '(' | ')' => {
                depth += if c == '(' { 1 } else { -1 };
                out.push(c);
            }
            '+' if negate && depth == 0 => out.push('-'),
            '-' if negate && depth == 0 => out.push('+'),
            _ => out.push(c),
        }
    }
    out
}

#[test]
fn criterion_4_odd_listing() {
    let start = Instant::now();
    let published = [
        "(q-1)_e+",
        "(q-2)_e+",
        "(q-3)_e+",
        "(q-4)_e-(q-6)_o+",
        "(q-5)_e-(q-7)_o+",
        "(q-6)_e-(q-8)_o+",
        "(q-7)_e-(q-9)_o-(q-11)_o+",
        "(q-8)_e-(q-10)_o-(q-12)_o+",
        "(q-9)_e-(q-11)_o-(q-13)_o+",
        "(q-10)_e-(q-12)_o-(q-14)_o-[(q-16)_o-(q-17)_e]+",
        "(q-11)_e-(q-13)_o-(q-15)_o-[(q-17)_o-(q-18)_e]+",
        "(q-12)_e-(q-14)_o-(q-16)_o-[(q-18)_o-(q-19)_e]+",
    ];
    let got = listing_lines(&bt_rep(Parity::Odd, 12).unwrap());
    let mut wrong = Vec::new();
    for (idx, (line, want)) in got.iter().zip(published).enumerate() {
        if *line != normalize(want) {
            wrong.push(format!("line {}: {line} vs {want}", idx + 1));
        }
    }
    let pass = wrong.is_empty() && got.len() == published.len();
    let detail = format!("{} lines, {} differ {wrong:?}", got.len(), wrong.len());
    verdict(4, pass, &detail, start.elapsed(), None);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_5_sandwich_and_gap() {
    let start = Instant::now();
    let mut failing = Vec::new();
    let mut cases = 0;
    for n in [2u32, 3] {
        let counts = NaryCounts::build(n, 60).unwrap();
        let step = n as usize - 1;
        for i in (step..=10 * step).step_by(step) {
            let report = verify_sandwich(&counts, i, 60).unwrap();
            cases += 1;
            if !report.passed() {
                for r in report.reports().into_iter().filter(|r| !r.passed()) {
                    failing.push(format!("n={n} i={i}: {}", r.summary()));
                }
            }
        }
    }
    let pass = failing.is_empty();
    let detail = format!("{cases} (n, i) cases, q <= 60; failures {failing:?}");
    verdict(5, pass, &detail, start.elapsed(), Some(Duration::from_secs(30)));
    assert!(pass, "{detail}");
}

#[test]
fn criterion_6_growth_constants() {
    let start = Instant::now();
    let counts = NaryCounts::build(2, 120).unwrap();
    let mut notes = Vec::new();
    let mut pass = true;
    for i in [40, 60] {
        let roots = characteristic_roots(&lower_coeffs(2, i).unwrap(), 2).unwrap();
        let (d1, d2) = ((roots[0] - R1).abs(), (roots[1] - R2).abs());
        pass &= d1 <= R1_TOL && d2 <= R2_TOL;
        notes.push(format!("i={i}: r1={:.13} (|d|={d1:.1e}) r2={:.10} (|d|={d2:.1e})", roots[0], roots[1]));
    }
    let fit = fit_from_truncation(&counts, 60, 2, 60..=120).unwrap();
    let (c1, c2) = (fit.constants[0], fit.constants[1]);
    let c1_err = (c1 - C1).abs();
    let c2_rel = (c2 - C2).abs() / C2;
    pass &= c1_err <= C1_TOL && c2_rel <= C2_REL_TOL;
    let mut worst = 0.0f64;
    for q in 40..=120 {
        let exact = counts.h(q).to_f64().unwrap();
        let approx = approx_h(&fit, q).unwrap().value;
        worst = worst.max((approx - exact).abs() / exact);
    }
    pass &= worst <= APPROX_REL_TOL;
    notes.push(format!(
        "c1={c1:.10} (|d|={c1_err:.1e}) c2={c2:.8} (rel {c2_rel:.3}) worst approx rel err on [40,120] {worst:.1e}"
    ));
    let detail = notes.join("; ");
    verdict(6, pass, &detail, start.elapsed(), Some(Duration::from_secs(120)));
    assert!(pass, "{detail}");
}

#[test]
fn criterion_7_k_sandwich() {
    let start = Instant::now();
    let mut summaries = Vec::new();
    let mut pass = true;
    for n in [2u32, 3] {
        let counts = NaryCounts::build(n, q_from_k(n, 40)).unwrap();
        let report = verify_k_sandwich(&counts, 40).unwrap();
        pass &= report.passed();
        summaries.push(format!("n={n}: {}", report.summary()));
    }
    let detail = summaries.join("; ");
    verdict(7, pass, &detail, start.elapsed(), None);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_8_bt_statements() {
    let start = Instant::now();
    let counts = BtCounts::build(40);
    let mut summaries = Vec::new();
    let mut pass = true;
    for which in BtStatement::ALL {
        let (s_max, q_max) = default_grid(which);
        let report = verify_statement(&counts, which, s_max, q_max).unwrap();
        pass &= report.passed();
        summaries.push(report.summary());
    }
    let out = Command::new(env!("CARGO_BIN_EXE_huffenum"))
        .args(["--no-cache", "bt", "verify"])
        .output()
        .expect("binary runs");
    let code = out.status.code();
    pass &= code == Some(0);
    summaries.push(format!("`bt verify` exit code {code:?}"));
    let detail = summaries.join("; ");
    verdict(8, pass, &detail, start.elapsed(), None);
    assert!(pass, "{detail}");
}

fn deterministic_runner(cases: u32) -> TestRunner {
    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &[7; 32]);
    TestRunner::new_with_rng(Config { cases, failure_persistence: None, ..Config::default() }, rng)
}

#[test]
fn criterion_9_properties() {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;

    // Kraft equality over every enumerated profile.
    let mut schedules: Vec<(BranchingSchedule, u64)> =
        (2..=5).map(|n| (BranchingSchedule::n_ary(n).unwrap(), 16)).collect();
    schedules.push((BranchingSchedule::binary_ternary(), 14));
    let mut profiles = 0usize;
    let mut kraft_bad = 0usize;
    for (schedule, q_max) in &schedules {
        for q in 2..=*q_max {
            for p in enumerate(schedule, q).unwrap().profiles {
                profiles += 1;
                if !p.kraft_sum().is_one() {
                    kraft_bad += 1;
                }
            }
        }
    }
    pass &= kraft_bad == 0;
    notes.push(format!("kraft: {profiles} profiles, {kraft_bad} violations"));

    // Bijection identity on random triples, against the table and, where
    // small enough, against the oracle.
    const HORIZON: usize = 90;
    let tables: Vec<NaryCounts> = (2..=5).map(|n| NaryCounts::build(n, HORIZON).unwrap()).collect();
    let oracle_checked = Cell::new(0usize);
    let strategy = (2u32..=5, 1usize..=12, 2usize..=40);
    let outcome = deterministic_runner(200).run(&strategy, |(n, s, q)| {
        let counts = &tables[n as usize - 2];
        let target = q + (n as usize - 1) * s;
        let lhs: BigUint = (s..=q).map(|p| counts.t(p, q)).sum();
        prop_assert_eq!(&lhs, &counts.t(n as usize * s, target));
        if target <= 16 {
            let schedule = BranchingSchedule::n_ary(n).unwrap();
            let below = oracle_by_p(&schedule, q as u64);
            let above = oracle_by_p(&schedule, target as u64);
            let lhs: BigUint = below.range(s..).map(|(_, v)| v).sum();
            let rhs = above.get(&(n as usize * s)).cloned().unwrap_or_default();
            prop_assert_eq!(lhs, rhs);
            oracle_checked.set(oracle_checked.get() + 1);
        }
        Ok(())
    });
    pass &= outcome.is_ok();
    notes.push(format!("bijection: 200 triples ({} also by oracle) {outcome:?}", oracle_checked.get()));

    // Oracle output must not depend on the number of workers.
    let mut determinism = true;
    for (schedule, q) in [(BranchingSchedule::n_ary(2).unwrap(), 18), (BranchingSchedule::binary_ternary(), 16)] {
        let runs: Vec<_> = [1, 2, 4, 8]
            .into_iter()
            .map(|t| count_by_top_with(&schedule, q, OracleOptions { threads: Some(t), ..Default::default() }).unwrap())
            .collect();
        determinism &= runs.windows(2).all(|w| w[0] == w[1]);
    }
    pass &= determinism;
    notes.push(format!("oracle determinism across 1/2/4/8 threads: {determinism}"));

    // The n = 3 dominant root settles as the truncation depth grows.
    let r: Vec<f64> = [40, 60, 80]
        .into_iter()
        .map(|i| characteristic_roots(&lower_coeffs(3, i).unwrap(), 1).unwrap()[0])
        .collect();
    let converges = (r[1] - r[0]).abs() >= (r[2] - r[1]).abs() && (r[2] - r[1]).abs() < 1e-9;
    pass &= converges;
    notes.push(format!("n=3 dominant root at i=40/60/80: {r:?}"));

    let detail = notes.join("; ");
    verdict(9, pass, &detail, start.elapsed(), None);
    assert!(pass, "{detail}");
}
