//! Non-parametric trial statistics.
//!
//! Channel timing is rarely Gaussian (refresh stalls, interrupt activity),
//! so runs are summarized by median, minimum and maximum rather than mean
//! and standard deviation.

use serde::Serialize;

/// Median/min/max summary of one trial run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialStats {
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl TrialStats {
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Some(TrialStats {
            median,
            min: sorted[0],
            max: sorted[n - 1],
            count: n,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: u64,
}

/// Equal-width histogram over a sample set. Rendering (including log-scale
/// count axes) is left to external tooling; this only bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub bins: Vec<HistogramBin>,
}

impl Histogram {
    pub fn from_samples(samples: &[f64], n_bins: usize) -> Self {
        assert!(n_bins > 0);
        if samples.is_empty() {
            return Histogram { bins: Vec::new() };
        }
        let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if min == max {
            return Histogram {
                bins: vec![HistogramBin {
                    left: min,
                    right: max,
                    count: samples.len() as u64,
                }],
            };
        }
        let width = (max - min) / n_bins as f64;
        let mut bins: Vec<HistogramBin> = (0..n_bins)
            .map(|i| HistogramBin {
                left: min + i as f64 * width,
                right: min + (i + 1) as f64 * width,
                count: 0,
            })
            .collect();
        for &s in samples {
            let idx = (((s - min) / width) as usize).min(n_bins - 1);
            bins[idx].count += 1;
        }
        Histogram { bins }
    }

    /// CSV rows: `bin_left,bin_right,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count\n");
        for b in &self.bins {
            out.push_str(&format!("{},{},{}\n", b.left, b.right, b.count));
        }
        out
    }
}
