//! Figure-data carrier emitted by the experiment runners.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ResultRow {
    pub sweep: f64,
    pub policy: String,
    pub mean_hit_ratio: f64,
    pub stderr: f64,
    /// Closed-form value, when the policy has one.
    pub analytic: Option<f64>,
    /// Analytic upper bound on any policy, when applicable.
    pub upper_bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultTable {
    /// Name of the sweep axis (for example "gamma" or "users").
    pub axis: String,
    pub rows: Vec<ResultRow>,
}

/// Six significant digits, the CSV number format.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.5e}")
    }
}

impl ResultTable {
    pub fn new(axis: impl Into<String>) -> Self {
        ResultTable { axis: axis.into(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: ResultRow) {
        self.rows.push(row);
    }

    /// Rows for one policy, in sweep order.
    pub fn policy_rows(&self, policy: &str) -> Vec<&ResultRow> {
        self.rows.iter().filter(|r| r.policy == policy).collect()
    }

    pub fn check(&self) -> Result<()> {
        for r in &self.rows {
            let ok_ratio = |v: f64| (0.0..=1.0 + 1e-9).contains(&v);
            if !ok_ratio(r.mean_hit_ratio)
                || !(r.stderr >= 0.0 || r.stderr.is_nan())
                || r.analytic.is_some_and(|v| !ok_ratio(v))
                || r.upper_bound.is_some_and(|v| !ok_ratio(v))
            {
                return Err(Error::InvalidConfig(format!(
                    "result row out of range: {} at {}",
                    r.policy, r.sweep
                )));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{},policy,mean_hit_ratio,stderr,analytic,upper_bound\n", self.axis);
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                fmt_sig(r.sweep),
                r.policy,
                fmt_sig(r.mean_hit_ratio),
                fmt_sig(r.stderr),
                r.analytic.map(fmt_sig).unwrap_or_default(),
                r.upper_bound.map(fmt_sig).unwrap_or_default(),
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_format_and_validation() {
        let mut t = ResultTable::new("gamma");
        t.push(ResultRow {
            sweep: 0.5,
            policy: "lru".into(),
            mean_hit_ratio: 0.123456789,
            stderr: 0.001,
            analytic: None,
            upper_bound: Some(0.75),
        });
        t.check().unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("gamma,policy,"));
        assert!(csv.contains("1.23457e-1"));
        assert!(csv.contains(",,7.50000e-1"));

        t.push(ResultRow {
            sweep: 1.0,
            policy: "bad".into(),
            mean_hit_ratio: 1.5,
            stderr: 0.0,
            analytic: None,
            upper_bound: None,
        });
        assert!(t.check().is_err());
    }
}
