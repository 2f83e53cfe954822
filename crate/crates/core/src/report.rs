//! Pass/fail records for exact identity and inequality sweeps.

use std::fmt;

use num_bigint::BigInt;
use serde::{Serialize, Serializer};

/// How the two sides of a check are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "<=")]
    Le,
}

impl Relation {
    pub fn holds(self, lhs: &BigInt, rhs: &BigInt) -> bool {
        match self {
            Relation::Eq => lhs == rhs,
            Relation::Le => lhs <= rhs,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Eq => "=",
            Relation::Le => "<=",
        })
    }
}

pub(crate) fn as_string<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// One grid point: `lhs relation rhs`, with `margin = rhs - lhs`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PointCheck {
    /// Which identity or inequality this point exercises.
    pub check: String,
    /// Grid coordinates, in a fixed order.
    pub params: Vec<(String, i64)>,
    #[serde(serialize_with = "as_string")]
    pub lhs: BigInt,
    pub relation: Relation,
    #[serde(serialize_with = "as_string")]
    pub rhs: BigInt,
    #[serde(serialize_with = "as_string")]
    pub margin: BigInt,
    pub pass: bool,
}

impl PointCheck {
    pub fn new(
        check: impl Into<String>,
        params: &[(&str, i64)],
        lhs: impl Into<BigInt>,
        relation: Relation,
        rhs: impl Into<BigInt>,
    ) -> Self {
        let (lhs, rhs) = (lhs.into(), rhs.into());
        Self {
            check: check.into(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            pass: relation.holds(&lhs, &rhs),
            margin: &rhs - &lhs,
            lhs,
            relation,
            rhs,
        }
    }

    pub fn param(&self, name: &str) -> Option<i64> {
        self.params.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }
}

impl fmt::Display for PointCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params = self
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ");
        write!(f, "{} [{params}]: {} {} {}", self.check, self.lhs, self.relation, self.rhs)
    }
}

/// Result of sweeping one statement over a parameter grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub id: String,
    pub statement: String,
    pub grid: String,
    pub points: Vec<PointCheck>,
    pub first_counterexample: Option<PointCheck>,
    /// Filled in when a failure was rechecked independently.
    pub diagnosis: Option<String>,
}

impl VerificationReport {
    pub fn new(
        id: impl Into<String>,
        statement: impl Into<String>,
        grid: impl Into<String>,
        points: Vec<PointCheck>,
    ) -> Self {
        let first_counterexample = points.iter().find(|p| !p.pass).cloned();
        Self {
            id: id.into(),
            statement: statement.into(),
            grid: grid.into(),
            points,
            first_counterexample,
            diagnosis: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.first_counterexample.is_none()
    }

    pub fn failures(&self) -> impl Iterator<Item = &PointCheck> {
        self.points.iter().filter(|p| !p.pass)
    }

    /// One line: id, verdict, point count and the first counterexample.
    pub fn summary(&self) -> String {
        match &self.first_counterexample {
            None => format!("{}: pass ({} points, {})", self.id, self.points.len(), self.grid),
            Some(p) => format!(
                "{}: FAIL ({} of {} points, {}); first counterexample {p}",
                self.id,
                self.failures().count(),
                self.points.len(),
                self.grid
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_failure_is_kept() {
        let pts = vec![
            PointCheck::new("x", &[("q", 1)], 1, Relation::Le, 2),
            PointCheck::new("x", &[("q", 2)], 3, Relation::Le, 2),
            PointCheck::new("x", &[("q", 3)], 4, Relation::Eq, 5),
        ];
        let r = VerificationReport::new("demo", "lhs <= rhs", "q <= 3", pts);
        assert!(!r.passed());
        let first = r.first_counterexample.as_ref().unwrap();
        assert_eq!(first.param("q"), Some(2));
        assert_eq!(first.margin, BigInt::from(-1));
        assert_eq!(r.failures().count(), 2);
        assert!(r.summary().contains("FAIL (2 of 3"));
    }

    #[test]
    fn serializes_big_values_as_strings() {
        let p = PointCheck::new("x", &[("q", 1)], 1, Relation::Eq, 1);
        let v = serde_json::to_value(&p).unwrap();
        assert_eq!(v["lhs"], "1");
        assert_eq!(v["relation"], "=");
        assert_eq!(v["params"][0][0], "q");
    }
}
