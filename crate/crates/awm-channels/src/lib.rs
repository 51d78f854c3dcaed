//! Timing models of on-chip communication mechanisms (memory-mapped GPIO,
//! interprocessor messaging, DMA and CDMA block transfers) parameterized by
//! hardware reference measurements, with non-parametric trial statistics.

pub mod gpio;
pub mod model;
pub mod preset;
pub mod rmsg;
pub mod stats;

pub use gpio::{gpio_latency_ns, gpio_throughput, EmioPreset, GpioPreset};
pub use model::{ChannelError, ChannelTimingModel, Direction, JitterModel, StallModel, TrialRun};
pub use preset::PresetCatalog;
pub use rmsg::{RmsgDirection, RmsgEstimate, RmsgModel};
pub use stats::{Histogram, TrialStats};
