//! Dual-tone DDS model: modular phase accumulation, global phase
//! synchronization, frame-rotation accumulators, frequency feedforward and
//! crosstalk cancellation.
//!
//! Phase words are integers modulo `2^N` (N = 40 by default, matching the
//! spline lanes; tests shrink N to exercise wrap-around cheaply). The sine
//! output itself is computed in floating point from the integer phase — the
//! upconversion and interpolation chain behind the physical DAC is out of
//! scope, so one sample here is one sequencer clock.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Sizing of the phase arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseGeometry {
    /// Bits in frequency/phase words (modulus `2^phase_bits`).
    pub phase_bits: u32,
    /// Bits in the shared sample counter. Must be at least `phase_bits` so
    /// counter rollover stays commensurate with every frequency word.
    pub counter_bits: u32,
}

impl Default for PhaseGeometry {
    fn default() -> Self {
        PhaseGeometry {
            phase_bits: 40,
            counter_bits: 64,
        }
    }
}

impl PhaseGeometry {
    pub fn phase_mask(&self) -> u64 {
        if self.phase_bits >= 64 {
            u64::MAX
        } else {
            (1u64 << self.phase_bits) - 1
        }
    }

    pub fn counter_mask(&self) -> u64 {
        if self.counter_bits >= 64 {
            u64::MAX
        } else {
            (1u64 << self.counter_bits) - 1
        }
    }

    /// Phase in turns, for the sine lookup.
    fn turns(&self, phase: u64) -> f64 {
        phase as f64 / (self.phase_mask() as f64 + 1.0)
    }
}

/// Per-cycle inputs for one tone, sourced from the channel's spline engines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ToneInputs {
    /// Frequency tuning word: phase increment per sample.
    pub ftw: u64,
    /// Static phase offset word.
    pub phase: u64,
    /// Amplitude in sample units (signed).
    pub amplitude: i64,
    /// Reset the accumulator to the global phase this sample.
    pub sync: bool,
    /// Apply the feedforward offset to this tone.
    pub ffwd_enable: bool,
}

/// Pre-sine state of one tone, exported as the secondary output so
/// neighbouring channels can synthesize phase-shifted cancellation tones.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ToneSnapshot {
    pub phase: u64,
    pub amplitude: i64,
}

/// One channel's DDS output for a sample tick.
#[derive(Debug, Clone, Copy, Default)]
pub struct DdsSample {
    /// Sum of both tones.
    pub primary: f64,
    /// Per-tone instantaneous state for crosstalk taps.
    pub secondary: [ToneSnapshot; 2],
}

#[derive(Debug, Clone, Copy, Default)]
struct ToneState {
    phase_acc: u64,
    frame_acc: u64,
}

/// Feedforward correction state. The externally measured phase error is
/// written into `phase`; the offset applied is `phase * harmonic`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Feedforward {
    pub enabled: bool,
    pub phase: u64,
    pub harmonic: u32,
}

impl Default for Feedforward {
    fn default() -> Self {
        Feedforward {
            enabled: false,
            phase: 0,
            harmonic: 1,
        }
    }
}

/// Dual-tone DDS state for one output channel.
#[derive(Debug, Clone)]
pub struct DdsState {
    geometry: PhaseGeometry,
    tones: [ToneState; 2],
    global_counter: u64,
    feedforward: Feedforward,
}

impl DdsState {
    pub fn new(geometry: PhaseGeometry) -> Self {
        debug_assert!(geometry.counter_bits >= geometry.phase_bits);
        DdsState {
            geometry,
            tones: [ToneState::default(); 2],
            global_counter: 0,
            feedforward: Feedforward::default(),
        }
    }

    pub fn geometry(&self) -> PhaseGeometry {
        self.geometry
    }

    pub fn global_counter(&self) -> u64 {
        self.global_counter
    }

    pub fn phase_acc(&self, tone: usize) -> u64 {
        self.tones[tone].phase_acc
    }

    pub fn frame_acc(&self, tone: usize) -> u64 {
        self.tones[tone].frame_acc
    }

    pub fn set_feedforward(&mut self, ffwd: Feedforward) {
        self.feedforward = ffwd;
    }

    /// Feedforward phase offset: the measured comb error scaled by the
    /// harmonic separation, modulo `2^N`.
    pub fn feedforward_offset(&self) -> u64 {
        let mask = self.geometry.phase_mask();
        ((self.feedforward.phase as u128 * self.feedforward.harmonic as u128)
            & mask as u128) as u64
    }

    /// Reset a tone's accumulator to the free-running global phase for
    /// `ftw`: `(global_counter * ftw) mod 2^N`. Latency-matched: callers
    /// apply this before computing the current sample, so the write lands on
    /// the sample it was triggered for.
    pub fn sync_phase(&mut self, tone: usize, ftw: u64) {
        let mask = self.geometry.phase_mask();
        let counter = self.global_counter & self.geometry.counter_mask();
        self.tones[tone].phase_acc =
            ((counter as u128 * (ftw & mask) as u128) & mask as u128) as u64;
    }

    /// Add a frame-rotation value into a tone's accumulator. Invoked at
    /// pulse boundaries; the running pulse is unaffected until then.
    pub fn apply_frame_rotation(&mut self, tone: usize, value: u64) {
        let mask = self.geometry.phase_mask();
        let t = &mut self.tones[tone];
        t.frame_acc = t.frame_acc.wrapping_add(value) & mask;
    }

    /// Advance one sample: accumulate both tones, render and sum them, and
    /// bump the global counter.
    pub fn step(&mut self, inputs: &[ToneInputs; 2]) -> DdsSample {
        let mask = self.geometry.phase_mask();
        let ffwd_offset = self.feedforward_offset();
        let mut sample = DdsSample::default();
        for (idx, input) in inputs.iter().enumerate() {
            if input.sync {
                self.sync_phase(idx, input.ftw);
            }
            let tone = &mut self.tones[idx];
            let mut phase = tone
                .phase_acc
                .wrapping_add(input.phase)
                .wrapping_add(tone.frame_acc)
                & mask;
            if self.feedforward.enabled && input.ffwd_enable {
                phase = phase.wrapping_add(ffwd_offset) & mask;
            }
            let value =
                input.amplitude as f64 * (std::f64::consts::TAU * self.geometry.turns(phase)).sin();
            sample.primary += value;
            sample.secondary[idx] = ToneSnapshot {
                phase,
                amplitude: input.amplitude,
            };
            tone.phase_acc = tone.phase_acc.wrapping_add(input.ftw & mask) & mask;
        }
        self.global_counter = self.global_counter.wrapping_add(1) & self.geometry.counter_mask();
        sample
    }
}

/// Render a snapshot pair as a real sample with an extra phase offset.
fn render(geometry: &PhaseGeometry, snaps: &[ToneSnapshot; 2], phase_offset: u64) -> f64 {
    let mask = geometry.phase_mask();
    snaps
        .iter()
        .map(|s| {
            let phase = s.phase.wrapping_add(phase_offset) & mask;
            s.amplitude as f64 * (std::f64::consts::TAU * geometry.turns(phase)).sin()
        })
        .sum()
}

/// One crosstalk cancellation tap: the neighbour's secondary output, scaled
/// in amplitude, shifted in phase (fine delay) and coarsely delayed in whole
/// samples.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CrosstalkTap {
    /// Channel whose secondary output feeds this tap.
    pub source: usize,
    /// Amplitude scale (negative for cancellation).
    pub amplitude: f64,
    /// Phase adjustment added to the source tone phases.
    pub phase_offset: u64,
    /// Coarse delay in samples.
    pub delay: usize,
}

#[derive(Debug, Clone)]
struct TapState {
    tap: CrosstalkTap,
    buffer: VecDeque<[ToneSnapshot; 2]>,
}

#[derive(Debug, Clone)]
struct ChannelMixState {
    taps: Vec<TapState>,
    primary: VecDeque<f64>,
}

/// Crosstalk mixing network across a group of channels.
///
/// Each channel's primary path runs through a delay line that matches the
/// latency of the tap arithmetic, so cancellation tones land sample-aligned
/// on the output.
#[derive(Debug, Clone)]
pub struct CrosstalkMixer {
    geometry: PhaseGeometry,
    mixer_latency: usize,
    channels: Vec<ChannelMixState>,
}

impl CrosstalkMixer {
    pub fn new(geometry: PhaseGeometry, mixer_latency: usize, n_channels: usize) -> Self {
        CrosstalkMixer {
            geometry,
            mixer_latency,
            channels: (0..n_channels)
                .map(|_| ChannelMixState {
                    taps: Vec::new(),
                    primary: VecDeque::from(vec![0.0; mixer_latency]),
                })
                .collect(),
        }
    }

    pub fn add_tap(&mut self, channel: usize, tap: CrosstalkTap) {
        let total_delay = self.mixer_latency + tap.delay;
        self.channels[channel].taps.push(TapState {
            tap,
            buffer: VecDeque::from(vec![[ToneSnapshot::default(); 2]; total_delay]),
        });
    }

    /// Mix one tick of channel outputs into corrected samples.
    pub fn mix(&mut self, raw: &[DdsSample]) -> Vec<f64> {
        debug_assert_eq!(raw.len(), self.channels.len());
        let mut out = Vec::with_capacity(raw.len());
        for (idx, state) in self.channels.iter_mut().enumerate() {
            state.primary.push_back(raw[idx].primary);
            let own = state.primary.pop_front().expect("delay line non-empty");
            let mut mixed = own;
            for tap in &mut state.taps {
                tap.buffer.push_back(raw[tap.tap.source].secondary);
                let snaps = tap.buffer.pop_front().expect("tap buffer non-empty");
                mixed += tap.tap.amplitude * render(&self.geometry, &snaps, tap.tap.phase_offset);
            }
            out.push(mixed);
        }
        out
    }
}
