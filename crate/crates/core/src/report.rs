//! Named margins with pass/fail verdicts.

use std::collections::BTreeMap;

use serde::Serialize;

/// One verified inequality: it passes iff `margin ≥ −tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: String,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub context: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub checks: Vec<Check>,
    /// Constants the checks were evaluated with (tolerances, fitted bounds, ...).
    pub constants: BTreeMap<String, f64>,
}

impl DiagnosticsReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, id: impl Into<String>, margin: f64, tolerance: f64, context: impl Into<String>) {
        // NaN margins fail
        let pass = margin >= -tolerance;
        self.checks.push(Check {
            id: id.into(),
            margin,
            tolerance,
            pass,
            context: context.into(),
        });
    }

    pub fn constant(&mut self, name: impl Into<String>, value: f64) {
        self.constants.insert(name.into(), value);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.pass)
    }

    pub fn get(&self, id: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.id == id)
    }

    /// Smallest margin among checks whose id starts with `prefix`.
    pub fn min_margin(&self, prefix: &str) -> Option<f64> {
        self.checks
            .iter()
            .filter(|c| c.id.starts_with(prefix))
            .map(|c| c.margin)
            .reduce(f64::min)
    }

    /// Appends `other`, then orders all checks by id (stable within an id).
    pub fn merge(&mut self, other: DiagnosticsReport) {
        self.checks.extend(other.checks);
        self.checks.sort_by(|a, b| a.id.cmp(&b.id));
        self.constants.extend(other.constants);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_margin_above_minus_tolerance() {
        let mut r = DiagnosticsReport::new();
        r.push("a", -1e-9, 1e-8, "");
        r.push("b", -1e-7, 1e-8, "");
        r.push("c", f64::NAN, 1.0, "");
        assert!(r.get("a").unwrap().pass);
        assert!(!r.get("b").unwrap().pass);
        assert!(!r.get("c").unwrap().pass);
        assert_eq!(r.first_failure().unwrap().id, "b");
        assert!(!r.all_pass());
    }

    #[test]
    fn merge_orders_by_id() {
        let mut a = DiagnosticsReport::new();
        a.push("z", 0.0, 0.0, "");
        let mut b = DiagnosticsReport::new();
        b.push("m", 1.0, 0.0, "");
        b.constant("tol", 1e-8);
        a.merge(b);
        let ids: Vec<_> = a.checks.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(ids, ["m", "z"]);
        assert_eq!(a.constants["tol"], 1e-8);
        assert_eq!(a.min_margin(""), Some(0.0));
    }
}
