//! Whole-datapath simulator: word stream in, waveforms out.
//!
//! Each channel owns a LUT set, an engine bank and a DDS; a crosstalk mixer
//! couples the channels. Words are decoded and expanded at load time (so
//! mid-stream reprogramming takes effect in stream order), staged segments
//! are fed into engine FIFOs at one per system clock, and the global trigger
//! starts all engines and DDS counters on the same cycle.

use crate::codec::CodecError;
use crate::dds::{CrosstalkMixer, CrosstalkTap, DdsSample, DdsState, Feedforward, PhaseGeometry, ToneInputs};
use crate::lut::{channel_luts, process_word, LutError, LutSet};
use crate::spline::{EngineBank, EngineStep, ENGINES_PER_CHANNEL};
use crate::word::Word256;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Lut(#[from] LutError),
    #[error("preload stalled with {0} segments staged (FIFO capacity too small)")]
    PreloadStalled(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub channels: usize,
    /// Per-engine FIFO depth; `None` models unbounded buffering.
    pub fifo_capacity: Option<usize>,
    pub geometry: PhaseGeometry,
    pub feedforward: Feedforward,
    /// Primary-path delay matching the crosstalk tap arithmetic.
    pub mixer_latency: usize,
    /// Crosstalk cancellation taps as (destination channel, tap).
    pub taps: Vec<(usize, CrosstalkTap)>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            channels: 8,
            fifo_capacity: None,
            geometry: PhaseGeometry::default(),
            feedforward: Feedforward::default(),
            mixer_latency: 0,
            taps: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EventKind {
    Underrun { engine: usize },
    Backpressure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimEvent {
    pub cycle: u64,
    pub channel: usize,
    pub kind: EventKind,
}

/// Recorded simulation output.
#[derive(Debug, Clone, Default)]
pub struct SimTrace {
    /// `[channel][engine][cycle]` spline-engine outputs (the DDS inputs).
    pub bank_samples: Vec<Vec<Vec<i64>>>,
    /// `[channel][cycle]` mixed DDS output samples.
    pub dds_samples: Vec<Vec<f64>>,
    pub events: Vec<SimEvent>,
    pub cycles: u64,
}

impl SimTrace {
    fn new(channels: usize) -> Self {
        SimTrace {
            bank_samples: vec![vec![Vec::new(); ENGINES_PER_CHANNEL]; channels],
            dds_samples: vec![Vec::new(); channels],
            events: Vec::new(),
            cycles: 0,
        }
    }

    /// Waveform CSV: `cycle,channel,sample`.
    pub fn waveform_csv(&self) -> String {
        let mut out = String::from("cycle,channel,sample\n");
        for cycle in 0..self.cycles as usize {
            for (channel, samples) in self.dds_samples.iter().enumerate() {
                out.push_str(&format!("{cycle},{channel},{}\n", samples[cycle]));
            }
        }
        out
    }

    /// Per-engine trace CSV: `cycle,value`.
    pub fn engine_csv(&self, channel: usize, engine: usize) -> String {
        let mut out = String::from("cycle,value\n");
        for (cycle, v) in self.bank_samples[channel][engine].iter().enumerate() {
            out.push_str(&format!("{cycle},{v}\n"));
        }
        out
    }
}

pub struct Simulator {
    config: SimConfig,
    luts: Vec<LutSet>,
    banks: Vec<EngineBank>,
    dds: Vec<DdsState>,
    mixer: CrosstalkMixer,
    cycle: u64,
    trace: SimTrace,
}

impl Simulator {
    pub fn new(config: SimConfig) -> Self {
        let n = config.channels;
        let mut mixer = CrosstalkMixer::new(config.geometry, config.mixer_latency, n);
        for (channel, tap) in &config.taps {
            mixer.add_tap(*channel, *tap);
        }
        let mut dds = Vec::with_capacity(n);
        for _ in 0..n {
            let mut d = DdsState::new(config.geometry);
            d.set_feedforward(config.feedforward);
            dds.push(d);
        }
        Simulator {
            luts: channel_luts(n),
            banks: (0..n).map(|_| EngineBank::new(config.fifo_capacity)).collect(),
            dds,
            mixer,
            cycle: 0,
            trace: SimTrace::new(n),
            config,
        }
    }

    pub fn luts(&self) -> &[LutSet] {
        &self.luts
    }

    /// Decode one stream word. Programming words mutate the LUTs; sequencing
    /// and raw words expand to segments staged at their channel banks.
    pub fn load_word(&mut self, block: &Word256) -> Result<(), SimError> {
        for routed in process_word(block, &mut self.luts)? {
            self.banks[routed.channel as usize].enqueue(routed.engine, routed.segment);
        }
        Ok(())
    }

    pub fn load_stream(&mut self, words: &[Word256]) -> Result<(), SimError> {
        for w in words {
            self.load_word(w)?;
        }
        Ok(())
    }

    /// Drain staged segments into the engine FIFOs before triggering, at the
    /// feed rate of one segment per channel per clock.
    pub fn preload(&mut self) -> Result<(), SimError> {
        loop {
            let staged: usize = self.banks.iter().map(EngineBank::staged).sum();
            if staged == 0 {
                return Ok(());
            }
            let mut progressed = false;
            for bank in &mut self.banks {
                if bank.feed_clock().delivered.is_some() {
                    progressed = true;
                }
            }
            if !progressed {
                return Err(SimError::PreloadStalled(staged));
            }
        }
    }

    /// Fire the global trigger: all banks start concurrently.
    pub fn trigger(&mut self) {
        for bank in &mut self.banks {
            bank.trigger();
        }
    }

    fn tone_inputs(geometry: &PhaseGeometry, steps: &[EngineStep; ENGINES_PER_CHANNEL]) -> [ToneInputs; 2] {
        let mask = geometry.phase_mask();
        let mut inputs = [ToneInputs::default(); 2];
        for (tone, input) in inputs.iter_mut().enumerate() {
            let freq = &steps[tone * 4];
            let phase = &steps[tone * 4 + 2];
            input.ftw = (freq.sample as u64) & mask;
            input.phase = (phase.sample as u64) & mask;
            input.amplitude = steps[tone * 4 + 1].sample;
            if let Some(meta) = freq.meta {
                input.sync = freq.started && meta.sync_on_start;
                input.ffwd_enable = meta.ffwd_enable;
            }
        }
        inputs
    }

    /// Advance one system clock across all channels.
    pub fn tick(&mut self) -> Vec<f64> {
        let mask = self.config.geometry.phase_mask();
        let mut raw: Vec<DdsSample> = Vec::with_capacity(self.banks.len());
        for (channel, bank) in self.banks.iter_mut().enumerate() {
            // a fully drained channel holds its outputs; that is normal
            // end-of-stream behavior, not a starvation event
            let drained = bank.idle();
            let tick = bank.tick();
            if tick.feed.stalled {
                self.trace.events.push(SimEvent {
                    cycle: self.cycle,
                    channel,
                    kind: EventKind::Backpressure,
                });
            }
            for (engine, step) in tick.steps.iter().enumerate() {
                if step.underrun && !drained {
                    self.trace.events.push(SimEvent {
                        cycle: self.cycle,
                        channel,
                        kind: EventKind::Underrun { engine },
                    });
                }
                self.trace.bank_samples[channel][engine].push(step.sample);
            }

            let inputs = Self::tone_inputs(&self.config.geometry, &tick.steps);
            let sample = self.dds[channel].step(&inputs);

            // frame rotations land at segment boundaries, after the sample
            for tone in 0..2 {
                if let Some(boundary) = tick.steps[tone * 4 + 3].completed {
                    if boundary.meta.frame_apply {
                        let value = if boundary.meta.frame_final_only {
                            boundary.last_sample
                        } else {
                            boundary.sample_sum
                        };
                        self.dds[channel].apply_frame_rotation(tone, (value as u64) & mask);
                    }
                }
            }
            raw.push(sample);
        }

        let mixed = self.mixer.mix(&raw);
        for (channel, value) in mixed.iter().enumerate() {
            self.trace.dds_samples[channel].push(*value);
        }
        self.cycle += 1;
        self.trace.cycles = self.cycle;
        mixed
    }

    pub fn idle(&self) -> bool {
        self.banks.iter().all(EngineBank::idle)
    }

    /// Run until every bank drains (or `max_cycles`).
    pub fn run_until_idle(&mut self, max_cycles: u64) {
        while self.cycle < max_cycles && !self.idle() {
            self.tick();
        }
    }

    pub fn run(&mut self, cycles: u64) {
        for _ in 0..cycles {
            self.tick();
        }
    }

    pub fn trace(&self) -> &SimTrace {
        &self.trace
    }

    pub fn into_trace(self) -> SimTrace {
        self.trace
    }
}

/// Load a stream, preload the FIFOs, trigger, and run to idle.
pub fn simulate_stream(
    config: SimConfig,
    words: &[Word256],
    max_cycles: u64,
) -> Result<SimTrace, SimError> {
    let mut sim = Simulator::new(config);
    sim.load_stream(words)?;
    sim.preload()?;
    sim.trigger();
    sim.run_until_idle(max_cycles);
    Ok(sim.into_trace())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{
        encode_word, pack_gate_ids, ChannelMask, GateId, GlutRecord,
        ProgrammingWord, SegmentMeta, SplineSegmentWord, Tone, TransferWord, WaveformParam,
    };

    fn raw_word(seg: SplineSegmentWord, channel: u8) -> Word256 {
        encode_word(&TransferWord::Raw {
            channels: ChannelMask::single(channel),
            segment: seg,
        })
        .unwrap()
    }

    fn constant(param: WaveformParam, tone: Tone, tau: u64, value: i64) -> SplineSegmentWord {
        SplineSegmentWord::constant(SegmentMeta::new(param, tone), tau, value)
    }

    fn one_channel_config() -> SimConfig {
        SimConfig {
            channels: 1,
            ..Default::default()
        }
    }

    #[test]
    fn raw_stream_drives_engines() {
        let mut words = Vec::new();
        for tone in Tone::ALL {
            for param in WaveformParam::ALL {
                let value = (tone.index() * 4 + param.tag() as usize) as i64 * 10;
                words.push(raw_word(constant(param, tone, 4, value), 0));
            }
        }
        let trace = simulate_stream(one_channel_config(), &words, 100).unwrap();
        assert_eq!(trace.cycles, 4);
        for engine in 0..ENGINES_PER_CHANNEL {
            assert_eq!(
                trace.bank_samples[0][engine],
                vec![engine as i64 * 10; 4],
                "engine {engine}"
            );
        }
        assert!(trace.events.is_empty());
    }

    #[test]
    fn zero_amplitude_stream_is_all_zero_output() {
        let mut words = Vec::new();
        for tone in Tone::ALL {
            for param in WaveformParam::ALL {
                let v = if param == WaveformParam::Amplitude { 0 } else { 123_456 };
                words.push(raw_word(constant(param, tone, 8, v), 0));
            }
        }
        let trace = simulate_stream(one_channel_config(), &words, 100).unwrap();
        assert!(trace.dds_samples[0].iter().all(|&s| s == 0.0));
    }

    #[test]
    fn sequencing_matches_raw_for_same_segments() {
        // program one gate (8 constant parameters), then compare LUT
        // expansion against the equivalent raw stream.
        let mut segs = Vec::new();
        for tone in Tone::ALL {
            for param in WaveformParam::ALL {
                segs.push(constant(param, tone, 6, 7 * (1 + tone.index() as i64 + param.tag() as i64)));
            }
        }
        let mask = ChannelMask::single(0);
        let mut compiled = Vec::new();
        for (i, seg) in segs.iter().enumerate() {
            compiled.push(
                encode_word(&TransferWord::Programming(ProgrammingWord::Plut {
                    channels: mask,
                    addr: i as u16,
                    segment: *seg,
                }))
                .unwrap(),
            );
        }
        compiled.push(
            encode_word(&TransferWord::Programming(ProgrammingWord::Mlut {
                channels: mask,
                entries: (0..8u16).map(|a| (a, a)).collect(),
            }))
            .unwrap(),
        );
        compiled.push(
            encode_word(&TransferWord::Programming(ProgrammingWord::Glut {
                channels: mask,
                entries: vec![GlutRecord::new(GateId::new(0).unwrap(), 0, 7).unwrap()],
            }))
            .unwrap(),
        );
        compiled.push(
            encode_word(&TransferWord::Sequence(
                pack_gate_ids(&[GateId::new(0).unwrap()], mask).unwrap(),
            ))
            .unwrap(),
        );
        assert_eq!(compiled.len(), 11);

        let raw: Vec<Word256> = segs.iter().map(|s| raw_word(*s, 0)).collect();

        let t1 = simulate_stream(one_channel_config(), &compiled, 100).unwrap();
        let t2 = simulate_stream(one_channel_config(), &raw, 100).unwrap();
        assert_eq!(t1.bank_samples, t2.bank_samples);
        assert_eq!(t1.dds_samples, t2.dds_samples);
    }

    #[test]
    fn frame_rotation_final_value_only_accumulates_last_sample() {
        let config = one_channel_config();
        let mut sim = Simulator::new(config);
        // a frame ramp 0,100,200,300 with final-value accumulation
        let mut meta = SegmentMeta::new(WaveformParam::FrameRotation, Tone::T0);
        meta.frame_apply = true;
        meta.frame_final_only = true;
        let seg = SplineSegmentWord {
            meta,
            tau: 4,
            u0: 0,
            u1: 100,
            u2: 0,
            u3: 0,
        };
        sim.load_word(&raw_word(seg, 0)).unwrap();
        sim.preload().unwrap();
        sim.trigger();
        for _ in 0..3 {
            sim.tick();
            assert_eq!(sim.dds[0].frame_acc(0), 0, "no accumulation mid-pulse");
        }
        sim.tick();
        assert_eq!(sim.dds[0].frame_acc(0), 300);
    }

    #[test]
    fn frame_rotation_sum_mode_accumulates_integral() {
        let mut sim = Simulator::new(one_channel_config());
        let mut meta = SegmentMeta::new(WaveformParam::FrameRotation, Tone::T0);
        meta.frame_apply = true;
        let seg = SplineSegmentWord {
            meta,
            tau: 4,
            u0: 0,
            u1: 100,
            u2: 0,
            u3: 0,
        };
        sim.load_word(&raw_word(seg, 0)).unwrap();
        sim.preload().unwrap();
        sim.trigger();
        for _ in 0..4 {
            sim.tick();
        }
        assert_eq!(sim.dds[0].frame_acc(0), 600); // 0 + 100 + 200 + 300
    }

    #[test]
    fn sync_flag_resets_accumulator_on_segment_start() {
        let mut sim = Simulator::new(one_channel_config());
        let ftw = 1_000_000i64;
        // segment 1: a different frequency; segment 2: back to ftw with sync
        let plain = constant(WaveformParam::Frequency, Tone::T0, 5, 777);
        let mut synced = constant(WaveformParam::Frequency, Tone::T0, 5, ftw);
        synced.meta.sync_on_start = true;
        sim.load_word(&raw_word(plain, 0)).unwrap();
        sim.load_word(&raw_word(synced, 0)).unwrap();
        sim.preload().unwrap();
        sim.trigger();
        for _ in 0..10 {
            sim.tick();
        }
        // as if ftw had run free since counter zero: 10 * ftw, no trace of 777
        assert_eq!(sim.dds[0].phase_acc(0), 10 * ftw as u64);
    }

    #[test]
    fn mid_stream_reprogram_changes_later_expansion() {
        let mask = ChannelMask::single(0);
        let seg_a = constant(WaveformParam::Amplitude, Tone::T0, 2, 10);
        let seg_b = constant(WaveformParam::Amplitude, Tone::T0, 2, 99);
        let gate = GateId::new(5).unwrap();
        let mut words = Vec::new();
        words.push(
            encode_word(&TransferWord::Programming(ProgrammingWord::Plut {
                channels: mask,
                addr: 0,
                segment: seg_a,
            }))
            .unwrap(),
        );
        words.push(
            encode_word(&TransferWord::Programming(ProgrammingWord::Mlut {
                channels: mask,
                entries: vec![(0, 0)],
            }))
            .unwrap(),
        );
        words.push(
            encode_word(&TransferWord::Programming(ProgrammingWord::Glut {
                channels: mask,
                entries: vec![GlutRecord::new(gate, 0, 0).unwrap()],
            }))
            .unwrap(),
        );
        words.push(encode_word(&TransferWord::Sequence(pack_gate_ids(&[gate], mask).unwrap())).unwrap());
        // reprogram the same PLUT address, then sequence again
        words.push(
            encode_word(&TransferWord::Programming(ProgrammingWord::Plut {
                channels: mask,
                addr: 0,
                segment: seg_b,
            }))
            .unwrap(),
        );
        words.push(encode_word(&TransferWord::Sequence(pack_gate_ids(&[gate], mask).unwrap())).unwrap());

        let trace = simulate_stream(one_channel_config(), &words, 100).unwrap();
        let amp_engine = 1; // amp0 slot
        assert_eq!(trace.bank_samples[0][amp_engine], vec![10, 10, 99, 99]);
    }

    #[test]
    fn preload_stall_is_reported() {
        let config = SimConfig {
            channels: 1,
            fifo_capacity: Some(2),
            ..Default::default()
        };
        let mut sim = Simulator::new(config);
        for _ in 0..3 {
            sim.load_word(&raw_word(constant(WaveformParam::Phase, Tone::T0, 1, 0), 0))
                .unwrap();
        }
        assert!(matches!(sim.preload(), Err(SimError::PreloadStalled(1))));
    }

    #[test]
    fn csv_export_shapes() {
        let words = vec![raw_word(constant(WaveformParam::Amplitude, Tone::T0, 2, 5), 0)];
        let trace = simulate_stream(one_channel_config(), &words, 10).unwrap();
        let csv = trace.waveform_csv();
        assert!(csv.starts_with("cycle,channel,sample\n"));
        assert_eq!(csv.lines().count(), 1 + 2);
        let engine = trace.engine_csv(0, 1);
        assert_eq!(engine.lines().count(), 1 + 2);
    }
}
