use serde::Serialize;

/// One asserted inequality `lhs <= rhs` with its measured sides.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Inequality {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Inequality {
    /// Exact comparison.
    pub fn exact(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::with_slack(name, lhs, rhs, 0.0)
    }

    /// `lhs <= rhs + rel * max(|lhs|, |rhs|)`, for sums accumulated in
    /// different orders.
    pub fn with_slack(name: impl Into<String>, lhs: f64, rhs: f64, rel: f64) -> Self {
        let slack = rel * lhs.abs().max(rhs.abs());
        Self {
            name: name.into(),
            lhs,
            rhs,
            holds: lhs <= rhs + slack,
        }
    }
}

/// Names of the inequalities that fail.
pub fn failures(checks: &[Inequality]) -> Vec<String> {
    checks
        .iter()
        .filter(|c| !c.holds)
        .map(|c| format!("{}: {} > {}", c.name, c.lhs, c.rhs))
        .collect()
}
