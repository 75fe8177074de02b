use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

pub const TRACE_HEADER: &str = "k,rel_err,succ_change,supp_size,supp_included,zeta,eta,ms";

/// One row of a solve trace. Row `k = 0` describes the initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub rel_err: Option<f64>,
    pub succ_change: Option<f64>,
    pub supp_size: usize,
    pub supp_included: Option<bool>,
    pub zeta: Option<f64>,
    pub eta: Option<f64>,
    /// Wall time of the update itself, excluding metrics and schedule lookups.
    pub ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SolveTrace {
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.k)
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn rel_errors(&self) -> Vec<Option<f64>> {
        self.records.iter().map(|r| r.rel_err).collect()
    }

    /// Mean update time over iterations `k ≥ 1`.
    pub fn mean_step_ms(&self) -> Option<f64> {
        let steps: Vec<f64> = self.records.iter().filter(|r| r.k > 0).map(|r| r.ms).collect();
        (!steps.is_empty()).then(|| steps.iter().sum::<f64>() / steps.len() as f64)
    }

    /// Median step time; less sensitive to scheduler noise than the mean.
    pub fn median_step_ms(&self) -> Option<f64> {
        let mut steps: Vec<f64> = self.records.iter().filter(|r| r.k > 0).map(|r| r.ms).collect();
        if steps.is_empty() {
            return None;
        }
        steps.sort_by(f64::total_cmp);
        let m = steps.len() / 2;
        Some(if steps.len() % 2 == 1 { steps[m] } else { 0.5 * (steps[m - 1] + steps[m]) })
    }

    /// CSV rendering; with `with_timing = false` the `ms` column is left
    /// empty so that output is reproducible byte for byte.
    pub fn to_csv(&self, with_timing: bool) -> String {
        let mut out = String::from(TRACE_HEADER);
        out.push('\n');
        for r in &self.records {
            let ms = if with_timing { format!("{:.4}", r.ms) } else { String::new() };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.k,
                opt(r.rel_err),
                opt(r.succ_change),
                r.supp_size,
                opt(r.supp_included),
                opt(r.zeta),
                opt(r.eta),
                ms
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, with_timing: bool) -> Result<()> {
        std::fs::write(path, self.to_csv(with_timing))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_truth_renders_empty_fields() {
        let t = SolveTrace {
            records: vec![TraceRecord {
                k: 0,
                rel_err: None,
                succ_change: None,
                supp_size: 3,
                supp_included: None,
                zeta: Some(0.5),
                eta: None,
                ms: 1.25,
            }],
        };
        let csv = t.to_csv(true);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), TRACE_HEADER);
        assert_eq!(lines.next().unwrap(), "0,,,3,,0.5,,1.2500");
        assert_eq!(t.to_csv(false).lines().nth(1).unwrap(), "0,,,3,,0.5,,");
    }
}
