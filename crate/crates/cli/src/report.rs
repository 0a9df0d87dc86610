//! Machine-readable reports: typed structures serialized with stable key
//! order (struct declaration order), a finiteness guard, and the CSV writer
//! for curve output.

use anyhow::{bail, Result};
use serde::Serialize;
use serde_json::Value;

use nsfrac_core::dimension::{BoundTag, DimensionEstimate};
use nsfrac_core::engine::TrajectoryReport;
use nsfrac_core::ifs::SetTrajectoryReport;
use nsfrac_core::operator::{BelowReport, BoundReport};
use nsfrac_core::spaces::{AdmissibilityFlags, ConditionReport};

#[derive(Serialize)]
pub struct ConditionEntryOut {
    pub level: usize,
    pub interval: usize,
    pub quantity: f64,
}

#[derive(Serialize)]
pub struct ConditionReportOut {
    pub space: String,
    pub threshold: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst: Option<ConditionEntryOut>,
    pub entries: Vec<ConditionEntryOut>,
}

impl From<&ConditionReport> for ConditionReportOut {
    fn from(r: &ConditionReport) -> Self {
        let entry = |e: &nsfrac_core::spaces::ConditionEntry| ConditionEntryOut {
            level: e.level,
            interval: e.interval,
            quantity: e.quantity,
        };
        ConditionReportOut {
            space: r.space.as_str().to_string(),
            threshold: r.threshold,
            pass: r.pass,
            worst: r.worst.as_ref().map(entry),
            entries: r.entries.iter().map(entry).collect(),
        }
    }
}

#[derive(Serialize)]
pub struct TrajectoryOut {
    pub levels_run: usize,
    pub converged: bool,
    pub distances: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contraction_ratio: Option<f64>,
}

impl From<&TrajectoryReport> for TrajectoryOut {
    fn from(r: &TrajectoryReport) -> Self {
        TrajectoryOut {
            levels_run: r.levels_run,
            converged: r.converged,
            distances: r.distances.clone(),
            contraction_ratio: r.contraction_ratio,
        }
    }
}

impl From<&SetTrajectoryReport> for TrajectoryOut {
    fn from(r: &SetTrajectoryReport) -> Self {
        TrajectoryOut {
            levels_run: r.levels_run,
            converged: r.converged,
            distances: r.distances.clone(),
            contraction_ratio: r.contraction_ratio,
        }
    }
}

#[derive(Serialize)]
pub struct DimensionEstimateOut {
    pub k_min: u32,
    pub k_max: u32,
    pub counts: Vec<u64>,
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    pub bound: String,
}

impl From<&DimensionEstimate> for DimensionEstimateOut {
    fn from(e: &DimensionEstimate) -> Self {
        let bound = match e.bound {
            BoundTag::EqOne => "eq-one".to_string(),
            BoundTag::LeqTwoMinusEps(eps) => format!("leq-{}", 2.0 - eps),
            BoundTag::None => "none".to_string(),
        };
        DimensionEstimateOut {
            k_min: e.k_min,
            k_max: e.k_max,
            counts: e.counts.clone(),
            slope: e.slope,
            intercept: e.intercept,
            max_residual: e.max_residual,
            bound,
        }
    }
}

#[derive(Serialize)]
pub struct BoundReportOut {
    pub measured: f64,
    pub bound_sup_form: f64,
    pub bound_cl_form: f64,
    pub slack: f64,
    pub pass: bool,
}

impl From<&BoundReport> for BoundReportOut {
    fn from(r: &BoundReport) -> Self {
        BoundReportOut {
            measured: r.measured,
            bound_sup_form: r.bound_sup_form,
            bound_cl_form: r.bound_cl_form,
            slack: r.slack,
            pass: r.pass,
        }
    }
}

#[derive(Serialize)]
pub struct BelowReportOut {
    pub measured_ratio: f64,
    pub floor_measured: f64,
    pub floor_conservative: f64,
    pub pass: bool,
}

impl From<&BelowReport> for BelowReportOut {
    fn from(r: &BelowReport) -> Self {
        BelowReportOut {
            measured_ratio: r.measured_ratio,
            floor_measured: r.floor_measured,
            floor_conservative: r.floor_conservative,
            pass: r.pass,
        }
    }
}

#[derive(Serialize)]
pub struct AdmissibilityOut {
    pub positive: bool,
    pub bounded_s_over_theta: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling_exponent: Option<f64>,
}

impl From<AdmissibilityFlags> for AdmissibilityOut {
    fn from(f: AdmissibilityFlags) -> Self {
        AdmissibilityOut {
            positive: f.positive,
            bounded_s_over_theta: f.bounded_s_over_theta,
            scaling_exponent: f.scaling_exponent,
        }
    }
}

/// Serializes a report, refusing any non-finite numerics (`serde_json` would
/// silently turn them into `null`).
pub fn to_checked_json<T: Serialize>(report: &T) -> Result<String> {
    let value = serde_json::to_value(report)?;
    ensure_no_nulls(&value, "$")?;
    Ok(format!("{}\n", serde_json::to_string_pretty(&value)?))
}

fn ensure_no_nulls(value: &Value, path: &str) -> Result<()> {
    match value {
        Value::Null => bail!("report contains a non-finite number at {path}"),
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                ensure_no_nulls(item, &format!("{path}[{i}]"))?;
            }
            Ok(())
        }
        Value::Object(map) => {
            for (k, v) in map {
                ensure_no_nulls(v, &format!("{path}.{k}"))?;
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Curve CSV: `x,y` header, shortest round-trip decimal representation.
pub fn curve_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::with_capacity(points.len() * 20 + 4);
    out.push_str("x,y\n");
    for (x, y) in points {
        out.push_str(&format!("{x},{y}\n"));
    }
    out
}

pub fn write_output(path: Option<&std::path::Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, content)?;
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Demo {
        a: f64,
        b: Vec<f64>,
    }

    #[test]
    fn nan_is_rejected() {
        let bad = Demo {
            a: 1.0,
            b: vec![0.5, f64::NAN],
        };
        let err = to_checked_json(&bad).unwrap_err();
        assert!(err.to_string().contains("$.b[1]"));
        let good = Demo {
            a: 1.0,
            b: vec![0.5],
        };
        assert!(to_checked_json(&good).is_ok());
    }

    #[test]
    fn csv_round_trips_shortest_form() {
        let csv = curve_csv(&[(0.0, 0.1), (0.5, 1.0 / 3.0)]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,y"));
        assert_eq!(lines.next(), Some("0,0.1"));
        let second = lines.next().unwrap();
        let y: f64 = second.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(y, 1.0 / 3.0);
    }
}
