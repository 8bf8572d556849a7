//! Metric samples, empirical CDFs and CSV emission.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Effective DL SINR (dB) of direct UEs.
    SinrDirect,
    /// Effective end-to-end DL SINR (dB) of indirect UEs.
    SinrIndirect,
    /// Effective DL SINR (dB) of UEs located in relay coverage gaps,
    /// whichever node serves them.
    SinrGap,
    /// Spectral efficiency (bit/s/Hz) of indirect UEs over scheduled slots.
    SeIndirect,
    /// Mean DL throughput per gNB sector, Mbit/s.
    SectorThroughput,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::SinrDirect,
        Metric::SinrIndirect,
        Metric::SinrGap,
        Metric::SeIndirect,
        Metric::SectorThroughput,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::SinrDirect => "sinr_direct_db",
            Metric::SinrIndirect => "sinr_indirect_db",
            Metric::SinrGap => "sinr_gap_db",
            Metric::SeIndirect => "se_indirect",
            Metric::SectorThroughput => "sector_throughput_mbps",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Samples accumulated over drops for one case.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricStore {
    pub samples: BTreeMap<Metric, Vec<f64>>,
    /// UEs seen over all drops.
    pub ue_count: usize,
    /// Indirect UEs seen over all drops.
    pub indirect_count: usize,
    pub drops: usize,
}

impl MetricStore {
    pub fn push(&mut self, metric: Metric, value: f64) {
        self.samples.entry(metric).or_default().push(value);
    }

    pub fn get(&self, metric: Metric) -> &[f64] {
        self.samples.get(&metric).map_or(&[], Vec::as_slice)
    }

    /// Merges `other` into `self`. Sample order is normalized so that the
    /// result does not depend on merge order.
    pub fn merge(&mut self, other: MetricStore) {
        for (metric, mut values) in other.samples {
            let entry = self.samples.entry(metric).or_default();
            entry.append(&mut values);
            entry.sort_by(f64::total_cmp);
        }
        self.ue_count += other.ue_count;
        self.indirect_count += other.indirect_count;
        self.drops += other.drops;
    }

    /// Percentage of UEs served through a relay.
    pub fn indirect_pct(&self) -> f64 {
        if self.ue_count == 0 {
            0.0
        } else {
            100.0 * self.indirect_count as f64 / self.ue_count as f64
        }
    }

    pub fn is_empty(&self) -> bool {
        self.samples.values().all(Vec::is_empty)
    }

    pub fn median(&self, metric: Metric) -> Option<f64> {
        CdfSeries::from_samples(metric.name(), self.get(metric)).map(|c| c.quantile(0.5))
    }

    pub fn mean(&self, metric: Metric) -> Option<f64> {
        let v = self.get(metric);
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Empirical CDF of one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfSeries {
    pub metric: String,
    pub values: Vec<f64>,
    pub cum_prob: Vec<f64>,
}

impl CdfSeries {
    /// Returns `None` for an empty sample set.
    pub fn from_samples(metric: &str, samples: &[f64]) -> Option<CdfSeries> {
        if samples.is_empty() {
            return None;
        }
        let mut values = samples.to_vec();
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let cum_prob = (1..=values.len()).map(|i| i as f64 / n).collect();
        Some(CdfSeries {
            metric: metric.to_string(),
            values,
            cum_prob,
        })
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }

    /// Quantile with linear interpolation between order statistics.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.values.len();
        let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        self.values[lo] + (self.values[hi] - self.values[lo]) * frac
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["value", "cum_prob"])?;
        for (v, p) in self.values.iter().zip(&self.cum_prob) {
            w.write_record([v.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One row of the summary file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub case: String,
    pub metric: String,
    pub count: usize,
    pub p5: f64,
    pub median: f64,
    pub p95: f64,
    pub mean: f64,
    pub indirect_pct: f64,
}

pub fn summarize(case: &str, store: &MetricStore) -> Vec<SummaryRow> {
    Metric::ALL
        .iter()
        .filter_map(|&m| {
            let cdf = CdfSeries::from_samples(m.name(), store.get(m))?;
            Some(SummaryRow {
                case: case.to_string(),
                metric: m.name().to_string(),
                count: cdf.count(),
                p5: cdf.quantile(0.05),
                median: cdf.quantile(0.5),
                p95: cdf.quantile(0.95),
                mean: store.mean(m).unwrap_or(f64::NAN),
                indirect_pct: store.indirect_pct(),
            })
        })
        .collect()
}

/// Writes `<case>_<metric>.csv` for every non-empty metric of every case plus
/// `summary.csv`. Returns the paths written.
pub fn emit_cdfs<'a, I>(stores: I, out_dir: &Path) -> Result<Vec<PathBuf>>
where
    I: IntoIterator<Item = (&'a str, &'a MetricStore)>,
{
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut rows = Vec::new();
    for (case, store) in stores {
        for m in Metric::ALL {
            match CdfSeries::from_samples(m.name(), store.get(m)) {
                Some(cdf) => {
                    let path = out_dir.join(format!("{case}_{}.csv", m.name()));
                    cdf.write_csv(&path)?;
                    written.push(path);
                }
                None => log::info!("{case}: no samples for {}, file omitted", m.name()),
            }
        }
        rows.extend(summarize(case, store));
    }
    let path = out_dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for row in &rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record([
            "case",
            "metric",
            "count",
            "p5",
            "median",
            "p95",
            "mean",
            "indirect_pct",
        ])?;
    }
    w.flush()?;
    written.push(path);
    Ok(written)
}
