//! Memory-mapped GPIO handshake timing.
//!
//! Latency is measured by a counter in the fabric spanning one round trip:
//! one-way latency is `N_c / (2 f_clk)`. Throughput over repeated
//! handshakes follows `(N_B * N_I * N_H * f_clk) / N_c` bytes per second,
//! with `N_B` bytes per handshake, `N_I` iterations, `N_H` handshakes per
//! iteration and `N_c` the final counter value.

use crate::model::ChannelError;
use serde::{Deserialize, Serialize};

/// One-way handshake latency in nanoseconds from a round-trip counter.
pub fn gpio_latency_ns(counter: u64, f_clk_hz: f64) -> Result<f64, ChannelError> {
    if f_clk_hz <= 0.0 {
        return Err(ChannelError::NonPositive {
            field: "f_clk_hz",
            value: f_clk_hz,
        });
    }
    if counter == 0 {
        return Err(ChannelError::NonPositive {
            field: "counter",
            value: 0.0,
        });
    }
    Ok(counter as f64 / (2.0 * f_clk_hz) * 1e9)
}

/// Multi-exchange throughput in bytes per second.
pub fn gpio_throughput(
    bytes_per_handshake: u64,
    iterations: u64,
    handshakes_per_iteration: u64,
    f_clk_hz: f64,
    counter: u64,
) -> Result<f64, ChannelError> {
    for (field, value) in [
        ("bytes_per_handshake", bytes_per_handshake as f64),
        ("iterations", iterations as f64),
        ("handshakes_per_iteration", handshakes_per_iteration as f64),
        ("f_clk_hz", f_clk_hz),
        ("counter", counter as f64),
    ] {
        if value <= 0.0 {
            return Err(ChannelError::NonPositive { field, value });
        }
    }
    Ok(
        (bytes_per_handshake * iterations * handshakes_per_iteration) as f64 * f_clk_hz
            / counter as f64,
    )
}

/// Counter values measured at one fabric clock frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpioClockPoint {
    pub clock_hz: f64,
    pub latency_count: u64,
    pub throughput_count: u64,
}

/// One GPIO routing configuration with its measured counter presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpioPreset {
    pub name: String,
    pub bytes_per_handshake: u64,
    pub iterations: u64,
    pub handshakes_per_iteration: u64,
    pub clocks: Vec<GpioClockPoint>,
}

impl GpioPreset {
    pub fn point(&self, clock_hz: f64) -> Option<&GpioClockPoint> {
        self.clocks.iter().find(|c| c.clock_hz == clock_hz)
    }

    pub fn latency_ns(&self, point: &GpioClockPoint) -> Result<f64, ChannelError> {
        gpio_latency_ns(point.latency_count, point.clock_hz)
    }

    pub fn throughput(&self, point: &GpioClockPoint) -> Result<f64, ChannelError> {
        gpio_throughput(
            self.bytes_per_handshake,
            self.iterations,
            self.handshakes_per_iteration,
            point.clock_hz,
            point.throughput_count,
        )
    }
}

/// Direct measured anchor for the multiplexed-pin interface; no mechanism
/// model behind it, the one-way/two-way asymmetry is recorded as observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmioPreset {
    pub name: String,
    pub latency_ns: f64,
    pub throughput_bytes_per_s: f64,
}
