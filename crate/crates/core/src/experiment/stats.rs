use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::sim::station::UK_SHED;
use crate::sim::RunStats;
use crate::{Error, Result};

const CONFIDENCE: f64 = 0.95;
const MIN_REPLICATIONS: usize = 3;

/// Point estimate and 95% confidence interval of one metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n−1 denominator); zero for a single value.
    pub std_dev: f64,
    pub half_width: f64,
}

impl Summary {
    pub fn std_error(&self) -> f64 {
        self.std_dev / (self.n as f64).sqrt()
    }
}

/// Two-sided 95% Student-t quantile with `df` degrees of freedom.
pub fn t_quantile(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("df >= 1")
        .inverse_cdf(0.5 + CONFIDENCE / 2.0)
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    let n = values.len();
    if n == 0 {
        return Err(Error::Empty("no replication values"));
    }
    if values.iter().all(|&v| v == values[0]) {
        return Ok(Summary {
            n,
            mean: values[0],
            std_dev: 0.0,
            half_width: 0.0,
        });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    let std_dev = (ss / (n - 1) as f64).sqrt();
    let half_width = if std_dev == 0.0 {
        0.0
    } else {
        t_quantile(n - 1) * std_dev / (n as f64).sqrt()
    };
    Ok(Summary {
        n,
        mean,
        std_dev,
        half_width,
    })
}

/// Smallest replication count whose 95% half-width falls within
/// `relative_precision` of the pilot mean, never below three.
pub fn required_replications(pilot: &Summary, relative_precision: f64) -> Result<usize> {
    if pilot.n < MIN_REPLICATIONS {
        return Err(Error::Precision(format!(
            "pilot has {} replications, need at least {MIN_REPLICATIONS}",
            pilot.n
        )));
    }
    if !(relative_precision > 0.0) {
        return Err(Error::Precision(format!(
            "relative precision {relative_precision} must be positive"
        )));
    }
    if pilot.mean == 0.0 {
        return Err(Error::Precision("pilot mean is zero".into()));
    }
    if pilot.std_dev == 0.0 {
        return Ok(MIN_REPLICATIONS);
    }
    let target = relative_precision * pilot.mean.abs();
    let mut n = MIN_REPLICATIONS;
    while t_quantile(n - 1) * pilot.std_dev / (n as f64).sqrt() > target {
        n += 1;
    }
    Ok(n)
}

/// Per-metric summaries over a set of replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationSummary {
    pub n_reps: usize,
    pub metrics: BTreeMap<String, Summary>,
}

impl ReplicationSummary {
    pub fn metric(&self, name: &str) -> Option<&Summary> {
        self.metrics.get(name)
    }
}

pub fn summarize_runs(runs: &[RunStats]) -> Result<ReplicationSummary> {
    if runs.is_empty() {
        return Err(Error::Empty("no replications"));
    }
    let extractors: [(&str, fn(&RunStats) -> f64); 10] = [
        ("arrivals", |r| r.arrivals as f64),
        ("france_found", |r| r.france_found as f64),
        ("shed_found", |r| r.shed_found as f64),
        ("berth_found", |r| r.berth_found as f64),
        ("uk_found", |r| r.uk_found() as f64),
        ("missed", |r| r.missed as f64),
        ("mean_time_in_system", |r| r.mean_time_in_system),
        ("shed_utilization", |r| {
            r.stations.get(UK_SHED).map_or(0.0, |s| s.utilization)
        }),
        ("shed_bypassed", |r| {
            r.stations.get(UK_SHED).map_or(0.0, |s| s.bypassed as f64)
        }),
        ("shed_max_queue", |r| {
            r.stations.get(UK_SHED).map_or(0.0, |s| s.max_queue as f64)
        }),
    ];
    let mut metrics = BTreeMap::new();
    for (name, f) in extractors {
        let values: Vec<f64> = runs.iter().map(f).collect();
        metrics.insert(name.to_string(), summarize(&values)?);
    }
    Ok(ReplicationSummary {
        n_reps: runs.len(),
        metrics,
    })
}
