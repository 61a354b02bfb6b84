//! Ensemble aggregation (means with standard errors) and normalized curves
//! for cross-protocol comparison plots.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::experiment::ResultRecord;

/// Mean and standard error of one quantity over the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Standard error of the mean (sample std / sqrt(n); 0 when n = 1).
    pub se: f64,
}

fn stat(values: &[f64]) -> Stat {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return Stat { mean, se: 0.0 };
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Stat {
        mean,
        se: (var / n).sqrt(),
    }
}

/// Per-grid-point ensemble aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatePoint {
    /// Swept parameter value; `None` for single experiments.
    pub parameter: Option<f64>,
    /// Ensemble members aggregated.
    pub n: usize,
    pub linear: Stat,
    pub nonlinear: Stat,
    pub total: Stat,
    pub per_degree: Vec<Stat>,
    pub nrmse_lxx: Option<Stat>,
    pub nrmse_lxz: Option<Stat>,
    pub nrmse_mg: Option<Stat>,
}

/// Groups records by parameter value (preserving first-seen order, which is
/// grid order for sweep output) and aggregates each group.
pub fn aggregate(records: &[ResultRecord]) -> Result<Vec<AggregatePoint>> {
    if records.is_empty() {
        return Err(Error::Empty { what: "records" });
    }
    let mut order: Vec<Option<f64>> = Vec::new();
    for r in records {
        if !order.iter().any(|p| same_parameter(*p, r.parameter)) {
            order.push(r.parameter);
        }
    }
    let mut out = Vec::with_capacity(order.len());
    for p in order {
        let group: Vec<&ResultRecord> = records
            .iter()
            .filter(|r| same_parameter(r.parameter, p))
            .collect();
        let collect = |f: &dyn Fn(&ResultRecord) -> f64| -> Vec<f64> {
            group.iter().map(|r| f(r)).collect()
        };
        let optional = |f: &dyn Fn(&ResultRecord) -> Option<f64>| -> Option<Stat> {
            let vals: Vec<f64> = group.iter().filter_map(|r| f(r)).collect();
            if vals.is_empty() {
                None
            } else {
                Some(stat(&vals))
            }
        };
        let max_degree = group.iter().map(|r| r.ipc.per_degree.len()).max().unwrap();
        let per_degree = (0..max_degree)
            .map(|d| {
                stat(&collect(&|r| {
                    r.ipc.per_degree.get(d).copied().unwrap_or(0.0)
                }))
            })
            .collect();
        out.push(AggregatePoint {
            parameter: p,
            n: group.len(),
            linear: stat(&collect(&|r| r.ipc.linear)),
            nonlinear: stat(&collect(&|r| r.ipc.nonlinear)),
            total: stat(&collect(&|r| r.ipc.total)),
            per_degree,
            nrmse_lxx: optional(&|r| r.nrmse_lxx),
            nrmse_lxz: optional(&|r| r.nrmse_lxz),
            nrmse_mg: optional(&|r| r.nrmse_mg),
        });
    }
    Ok(out)
}

fn same_parameter(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => x.to_bits() == y.to_bits(),
        _ => false,
    }
}

/// What the curves are divided by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    /// The aggregate at a designated grid point of the same sweep.
    AtParameter(f64),
    /// The point whose linear capacity is largest, so the normalized memory
    /// curve peaks at exactly 1.
    MaxLinear,
    /// Externally supplied means, e.g. a separate baseline run.
    External {
        linear: f64,
        nonlinear: f64,
        total: f64,
    },
}

/// One normalized curve sample: each component divided by the reference
/// mean of the same component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedPoint {
    pub parameter: Option<f64>,
    pub memory: f64,
    pub nonlinearity: f64,
    pub total: f64,
}

/// Divides aggregated curves by a reference aggregate.
pub fn normalize_records(
    points: &[AggregatePoint],
    reference: Reference,
) -> Result<Vec<NormalizedPoint>> {
    if points.is_empty() {
        return Err(Error::Empty { what: "aggregates" });
    }
    let (ref_linear, ref_nonlinear, ref_total) = match reference {
        Reference::AtParameter(p) => {
            let r = points
                .iter()
                .find(|a| same_parameter(a.parameter, Some(p)))
                .ok_or_else(|| {
                    Error::InvalidConfig(format!("no aggregate at reference parameter {p}"))
                })?;
            (r.linear.mean, r.nonlinear.mean, r.total.mean)
        }
        Reference::MaxLinear => {
            let r = points
                .iter()
                .max_by(|a, b| a.linear.mean.total_cmp(&b.linear.mean))
                .unwrap();
            (r.linear.mean, r.nonlinear.mean, r.total.mean)
        }
        Reference::External {
            linear,
            nonlinear,
            total,
        } => (linear, nonlinear, total),
    };
    for (name, v) in [
        ("linear", ref_linear),
        ("nonlinear", ref_nonlinear),
        ("total", ref_total),
    ] {
        if v == 0.0 || !v.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "reference {name} capacity is {v}; cannot normalize"
            )));
        }
    }
    Ok(points
        .iter()
        .map(|a| NormalizedPoint {
            parameter: a.parameter,
            memory: a.linear.mean / ref_linear,
            nonlinearity: a.nonlinear.mean / ref_nonlinear,
            total: a.total.mean / ref_total,
        })
        .collect())
}
