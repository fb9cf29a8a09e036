//! Metric rows and their CSV form: `task,method,ratio_x,metric,value,flops`.
//!
//! Floats are written in Rust's shortest round-trip form, so parsing a
//! written report reproduces every value bit for bit. An absent ratio is an
//! empty field.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::MetricsError;

pub const CSV_HEADER: [&str; 6] = ["task", "method", "ratio_x", "metric", "value", "flops"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    Ssim,
    Psnr,
    Accuracy,
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricName::Ssim => "ssim",
            MetricName::Psnr => "psnr",
            MetricName::Accuracy => "accuracy",
        })
    }
}

impl FromStr for MetricName {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ssim" => Ok(MetricName::Ssim),
            "psnr" => Ok(MetricName::Psnr),
            "accuracy" => Ok(MetricName::Accuracy),
            other => Err(MetricsError::Csv(format!("unknown metric {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub task: String,
    pub method: String,
    pub ratio_x: Option<f64>,
    pub metric: MetricName,
    pub value: f64,
    pub flops: u64,
}

impl MetricRow {
    fn sort_key_cmp(&self, other: &Self) -> Ordering {
        self.task
            .cmp(&other.task)
            .then_with(|| self.method.cmp(&other.method))
            .then_with(|| match (self.ratio_x, other.ratio_x) {
                (None, None) => Ordering::Equal,
                (None, Some(_)) => Ordering::Less,
                (Some(_), None) => Ordering::Greater,
                (Some(a), Some(b)) => a.total_cmp(&b),
            })
    }
}

/// Sorts rows by `(task, method, ratio_x)` and renders them as CSV.
pub fn flops_report(rows: &[MetricRow]) -> String {
    let mut sorted: Vec<&MetricRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.sort_key_cmp(b));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in sorted {
        let ratio = r.ratio_x.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([
            r.task.as_str(),
            r.method.as_str(),
            ratio.as_str(),
            &r.metric.to_string(),
            &r.value.to_string(),
            &r.flops.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 fields")
}

pub fn parse_report(text: &str) -> Result<Vec<MetricRow>, MetricsError> {
    let err = |e: String| MetricsError::Csv(e);
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| err(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(err(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let field = |k: usize| rec.get(k).unwrap_or_default();
        let num = |k: usize| -> Result<f64, MetricsError> {
            field(k)
                .parse()
                .map_err(|_| err(format!("row {}: bad number {:?}", i + 1, field(k))))
        };
        rows.push(MetricRow {
            task: field(0).to_string(),
            method: field(1).to_string(),
            ratio_x: if field(2).is_empty() { None } else { Some(num(2)?) },
            metric: field(3).parse()?,
            value: num(4)?,
            flops: field(5)
                .parse()
                .map_err(|_| err(format!("row {}: bad flops {:?}", i + 1, field(5))))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_is_header_only() {
        assert_eq!(flops_report(&[]), "task,method,ratio_x,metric,value,flops\n");
    }

    #[test]
    fn sorted_and_absent_ratio() {
        let row = |method: &str, ratio| MetricRow {
            task: "denoise".into(),
            method: method.into(),
            ratio_x: ratio,
            metric: MetricName::Ssim,
            value: 0.5,
            flops: 10,
        };
        let text = flops_report(&[row("gt_only", Some(0.5)), row("bootstrapped", Some(1.0)), row("gt_only", Some(0.25)), row("pipeline", None)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "denoise,bootstrapped,1,ssim,0.5,10");
        assert_eq!(lines[2], "denoise,gt_only,0.25,ssim,0.5,10");
        assert_eq!(lines[4], "denoise,pipeline,,ssim,0.5,10");
    }

    proptest! {
        #[test]
        fn csv_round_trip(value in proptest::num::f64::NORMAL | proptest::num::f64::ZERO,
                          ratio in proptest::option::of(0.0f64..=1.0),
                          flops in any::<u64>(),
                          method in "[a-z_]{1,12}") {
            let row = MetricRow {
                task: "classify".into(),
                method,
                ratio_x: ratio,
                metric: MetricName::Accuracy,
                value,
                flops,
            };
            let parsed = parse_report(&flops_report(std::slice::from_ref(&row))).unwrap();
            prop_assert_eq!(parsed.len(), 1);
            prop_assert_eq!(parsed[0].value.to_bits(), row.value.to_bits());
            prop_assert_eq!(parsed[0].ratio_x.map(f64::to_bits), row.ratio_x.map(f64::to_bits));
            prop_assert_eq!(&parsed[0], &row);
        }
    }
}
