//! Parameterized block-transfer timing model.
//!
//! One DMA-style mechanism is described by a base latency, a bus width, a
//! word clock and a per-word transfer cost; throughput dips from periodic
//! memory-refresh stalls are modeled as a multiplicative slowdown applied
//! every `period`-th trial. The model form is
//!
//! ```text
//! t(payload) = base_latency + ceil(payload / bus_width) * word_cost / clock
//! ```
//!
//! with the asymptotic bandwidth `bus_width * clock / word_cost`.

use crate::stats::{Histogram, TrialStats};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ChannelError {
    #[error("{field} must be positive (got {value})")]
    NonPositive { field: &'static str, value: f64 },
    #[error("stall magnitude {0} outside [0, 1)")]
    StallMagnitude(f64),
    #[error("payload must be at least one byte")]
    EmptyPayload,
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("preset file: {0}")]
    PresetFile(String),
}

/// Transfer direction of a DMA-style mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Memory-map to stream.
    Mm2s,
    /// Stream to memory-map.
    S2mm,
    /// Memory-to-memory block copies.
    Cdma,
}

/// Periodic multiplicative throughput reduction: every `period`-th trial
/// runs at `(1 - magnitude)` of nominal throughput.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StallModel {
    pub period: u32,
    pub magnitude: f64,
}

/// Optional bounded-uniform time jitter for min/max envelope studies.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JitterModel {
    #[default]
    None,
    Uniform {
        fraction: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelTimingModel {
    pub name: String,
    pub direction: Direction,
    pub bus_width_bytes: u64,
    pub clock_hz: f64,
    pub base_latency_ns: f64,
    pub word_cost_cycles: f64,
    #[serde(default)]
    pub stall: Option<StallModel>,
    #[serde(default)]
    pub jitter: JitterModel,
}

impl ChannelTimingModel {
    pub fn validate(&self) -> Result<(), ChannelError> {
        for (field, value) in [
            ("bus_width_bytes", self.bus_width_bytes as f64),
            ("clock_hz", self.clock_hz),
            ("word_cost_cycles", self.word_cost_cycles),
        ] {
            if value <= 0.0 {
                return Err(ChannelError::NonPositive { field, value });
            }
        }
        if self.base_latency_ns < 0.0 {
            return Err(ChannelError::NonPositive {
                field: "base_latency_ns",
                value: self.base_latency_ns,
            });
        }
        if let Some(stall) = &self.stall {
            if !(0.0..1.0).contains(&stall.magnitude) {
                return Err(ChannelError::StallMagnitude(stall.magnitude));
            }
        }
        Ok(())
    }

    /// Nominal (median) transfer time.
    pub fn transfer_time_ns(&self, payload_bytes: u64) -> Result<f64, ChannelError> {
        if payload_bytes == 0 {
            return Err(ChannelError::EmptyPayload);
        }
        let words = payload_bytes.div_ceil(self.bus_width_bytes);
        Ok(self.base_latency_ns + words as f64 * self.word_cost_cycles / self.clock_hz * 1e9)
    }

    /// Transfer time of a stalled trial.
    pub fn worst_case_time_ns(&self, payload_bytes: u64) -> Result<f64, ChannelError> {
        let nominal = self.transfer_time_ns(payload_bytes)?;
        Ok(match &self.stall {
            Some(stall) => nominal / (1.0 - stall.magnitude),
            None => nominal,
        })
    }

    /// Nominal throughput in bytes per second.
    pub fn throughput(&self, payload_bytes: u64) -> Result<f64, ChannelError> {
        Ok(payload_bytes as f64 / (self.transfer_time_ns(payload_bytes)? * 1e-9))
    }

    /// Worst-case (stalled-trial) throughput.
    pub fn min_throughput(&self, payload_bytes: u64) -> Result<f64, ChannelError> {
        Ok(payload_bytes as f64 / (self.worst_case_time_ns(payload_bytes)? * 1e-9))
    }

    /// Large-payload bandwidth limit: `bus_width * clock / word_cost`.
    pub fn asymptotic_bandwidth(&self) -> f64 {
        self.bus_width_bytes as f64 * self.clock_hz / self.word_cost_cycles
    }

    /// Simulate `n` trials at one payload size with a deterministic seed.
    /// Every `period`-th trial is depressed by the stall model; optional
    /// jitter widens the envelope.
    pub fn run_trials(&self, payload_bytes: u64, n: usize, seed: u64) -> Result<TrialRun, ChannelError> {
        if n == 0 {
            return Err(ChannelError::NonPositive {
                field: "trials",
                value: 0.0,
            });
        }
        self.validate()?;
        let nominal = self.transfer_time_ns(payload_bytes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut times = Vec::with_capacity(n);
        for i in 0..n {
            let mut t = nominal;
            if let Some(stall) = &self.stall {
                if stall.period > 0 && (i as u32 + 1) % stall.period == 0 {
                    t /= 1.0 - stall.magnitude;
                }
            }
            if let JitterModel::Uniform { fraction } = self.jitter {
                t *= 1.0 + rng.gen_range(-fraction..=fraction);
            }
            times.push(t);
        }
        let throughputs: Vec<f64> = times
            .iter()
            .map(|t| payload_bytes as f64 / (t * 1e-9))
            .collect();
        Ok(TrialRun {
            payload_bytes,
            time_stats: TrialStats::from_samples(&times).expect("n >= 1"),
            throughput_stats: TrialStats::from_samples(&throughputs).expect("n >= 1"),
            times_ns: times,
            throughputs,
        })
    }
}

/// Samples and summary statistics from one payload's trial run.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRun {
    pub payload_bytes: u64,
    pub time_stats: TrialStats,
    pub throughput_stats: TrialStats,
    #[serde(skip)]
    pub times_ns: Vec<f64>,
    #[serde(skip)]
    pub throughputs: Vec<f64>,
}

impl TrialRun {
    pub fn throughput_histogram(&self, bins: usize) -> Histogram {
        Histogram::from_samples(&self.throughputs, bins)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(stall: Option<StallModel>) -> ChannelTimingModel {
        ChannelTimingModel {
            name: "test".into(),
            direction: Direction::Mm2s,
            bus_width_bytes: 32,
            clock_hz: 333e6,
            base_latency_ns: 1000.0,
            word_cost_cycles: 1.0,
            stall,
            jitter: JitterModel::None,
        }
    }

    #[test]
    fn single_beat_time_is_latency_plus_one_word() {
        let m = model(None);
        let t = m.transfer_time_ns(32).unwrap();
        let word = 1e9 / 333e6;
        assert!((t - (1000.0 + word)).abs() < 1e-9);
    }

    #[test]
    fn throughput_is_monotone_and_approaches_asymptote() {
        let m = model(None);
        let mut last = 0.0;
        let mut payload = 4u64;
        while payload <= 1 << 30 {
            let thr = m.throughput(payload).unwrap();
            assert!(thr >= last, "payload {payload}");
            last = thr;
            payload *= 2;
        }
        let asym = m.asymptotic_bandwidth();
        assert!((last - asym).abs() / asym < 0.01);
    }

    #[test]
    fn zero_stall_collapses_min_median_max() {
        let run = model(None).run_trials(64, 100, 7).unwrap();
        assert_eq!(run.time_stats.min, run.time_stats.median);
        assert_eq!(run.time_stats.median, run.time_stats.max);
    }

    #[test]
    fn stall_period_ten_depresses_exactly_ten_of_one_hundred() {
        let m = model(Some(StallModel {
            period: 10,
            magnitude: 0.5,
        }));
        let run = m.run_trials(64, 100, 7).unwrap();
        let nominal = m.transfer_time_ns(64).unwrap();
        let depressed = run.times_ns.iter().filter(|&&t| t > nominal * 1.5).count();
        assert_eq!(depressed, 10);
        assert!(run.throughput_stats.min < run.throughput_stats.median);
        assert!(run.time_stats.min <= run.time_stats.median);
        assert!(run.time_stats.median <= run.time_stats.max);
    }

    #[test]
    fn trials_replay_identically_under_one_seed() {
        let m = ChannelTimingModel {
            jitter: JitterModel::Uniform { fraction: 0.05 },
            ..model(Some(StallModel {
                period: 7,
                magnitude: 0.3,
            }))
        };
        let a = m.run_trials(256, 500, 42).unwrap();
        let b = m.run_trials(256, 500, 42).unwrap();
        assert_eq!(a.times_ns, b.times_ns);
        let c = m.run_trials(256, 500, 43).unwrap();
        assert_ne!(a.times_ns, c.times_ns);
    }

    #[test]
    fn invalid_models_are_rejected() {
        let mut m = model(None);
        m.clock_hz = 0.0;
        assert!(m.validate().is_err());
        let mut m = model(Some(StallModel {
            period: 10,
            magnitude: 1.0,
        }));
        assert!(m.validate().is_err());
        m.stall = None;
        assert!(matches!(m.transfer_time_ns(0), Err(ChannelError::EmptyPayload)));
    }
}
