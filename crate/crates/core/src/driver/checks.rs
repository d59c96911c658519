use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Running record of one inequality `lhs <= rhs + tol` evaluated online.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub tol: f64,
    /// A violation makes the run fail.
    pub fatal: bool,
    pub evaluations: u64,
    pub violations: u64,
    /// Largest `lhs - rhs` seen; `-inf` before the first evaluation.
    pub max_excess: f64,
    pub worst_t: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckSet {
    pub checks: BTreeMap<String, Check>,
}

impl CheckSet {
    pub fn declare(&mut self, name: &str, tol: f64, fatal: bool) {
        self.checks.entry(name.to_string()).or_insert(Check {
            tol,
            fatal,
            evaluations: 0,
            violations: 0,
            max_excess: f64::NEG_INFINITY,
            worst_t: f64::NAN,
        });
    }

    /// Records `lhs <= rhs`; returns whether it held within tolerance.
    pub fn le(&mut self, name: &str, t: f64, lhs: f64, rhs: f64) -> bool {
        let c = self.checks.get_mut(name).unwrap_or_else(|| panic!("undeclared check {name}"));
        c.evaluations += 1;
        let excess = if lhs.is_nan() || rhs.is_nan() { f64::INFINITY } else { lhs - rhs };
        if excess > c.max_excess {
            c.max_excess = excess;
            c.worst_t = t;
        }
        let ok = excess <= c.tol;
        if !ok {
            c.violations += 1;
        }
        ok
    }

    pub fn holds(&mut self, name: &str, t: f64, ok: bool) -> bool {
        self.le(name, t, if ok { 0.0 } else { 1.0 }, 0.0)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.get(name)
    }

    pub fn passed(&self, name: &str) -> bool {
        self.checks.get(name).is_some_and(|c| c.violations == 0)
    }

    pub fn fatal_failures(&self) -> Vec<String> {
        self.checks.iter().filter(|(_, c)| c.fatal && c.violations > 0).map(|(n, _)| n.clone()).collect()
    }
}
