//! Third-order forward-difference interpolation engines.
//!
//! Each engine replays cubic segments by repeated addition: it emits its
//! first-order register and then cascades the higher-order registers, all in
//! wrapping 40-bit two's-complement arithmetic. A bank groups the eight
//! engines of one output channel (four waveform parameters per tone) behind
//! a shared feed path that delivers at most one segment per system clock.

use crate::codec::{SegmentMeta, SplineSegmentWord, COEFF_MAX, COEFF_MIN, LANE_BITS};
use std::collections::VecDeque;

/// Engines per channel: four parameters for each of two tones.
pub const ENGINES_PER_CHANNEL: usize = 8;
/// Default per-engine FIFO depth in segments.
pub const DEFAULT_FIFO_DEPTH: usize = 64;

/// Wrap a value to 40-bit two's complement.
#[inline]
pub fn wrap40(v: i64) -> i64 {
    (v << (64 - LANE_BITS)) >> (64 - LANE_BITS)
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SplineError {
    #[error("forward difference `{field}` = {value} overflows the 40-bit lane")]
    CoefficientRange { field: &'static str, value: i128 },
}

/// Raised when an enabled engine has nothing to play. The output holds the
/// last emitted sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Underrun;

/// Emitted when a segment finishes, carrying what frame-rotation
/// accumulation needs: the running sample sum and the final sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentBoundary {
    pub meta: SegmentMeta,
    pub sample_sum: i64,
    pub last_sample: i64,
}

/// Per-clock engine output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineStep {
    pub sample: i64,
    /// Metadata of the segment that produced this sample (`None` while
    /// holding through an underrun).
    pub meta: Option<SegmentMeta>,
    /// True on a segment's first sample.
    pub started: bool,
    /// Set on the clock that emits a segment's final sample.
    pub completed: Option<SegmentBoundary>,
    pub underrun: bool,
}

#[derive(Debug, Clone)]
struct ActiveSegment {
    meta: SegmentMeta,
    cycles_remaining: u64,
    sample_sum: i64,
    fresh: bool,
}

/// One forward-difference interpolator with its segment FIFO.
#[derive(Debug, Clone)]
pub struct SplineEngine {
    a: [i64; 4],
    active: Option<ActiveSegment>,
    fifo: VecDeque<SplineSegmentWord>,
    capacity: Option<usize>,
    enabled: bool,
    last_sample: i64,
    underruns: u64,
}

impl SplineEngine {
    pub fn new(capacity: Option<usize>) -> Self {
        SplineEngine {
            a: [0; 4],
            active: None,
            fifo: VecDeque::new(),
            capacity,
            enabled: false,
            last_sample: 0,
            underruns: 0,
        }
    }

    pub fn enabled(&self) -> bool {
        self.enabled
    }

    pub fn enable(&mut self) {
        self.enabled = true;
    }

    pub fn fifo_len(&self) -> usize {
        self.fifo.len()
    }

    pub fn underrun_count(&self) -> u64 {
        self.underruns
    }

    /// True when no segment is active and nothing is queued.
    pub fn idle(&self) -> bool {
        self.active.is_none() && self.fifo.is_empty()
    }

    /// Queue a segment. Returns `false` (backpressure) when the FIFO is at
    /// capacity; the caller must hold the segment and retry.
    pub fn push(&mut self, segment: SplineSegmentWord) -> bool {
        if let Some(cap) = self.capacity {
            if self.fifo.len() >= cap {
                return false;
            }
        }
        self.fifo.push_back(segment);
        true
    }

    fn load_next(&mut self) -> bool {
        match self.fifo.pop_front() {
            Some(seg) => {
                self.a = [seg.u0, seg.u1, seg.u2, seg.u3];
                self.active = Some(ActiveSegment {
                    meta: seg.meta,
                    cycles_remaining: seg.tau,
                    sample_sum: 0,
                    fresh: true,
                });
                true
            }
            None => false,
        }
    }

    /// Advance one clock: emit a sample, cascade the accumulators, and roll
    /// to the next queued segment when the current one ends.
    pub fn step(&mut self) -> EngineStep {
        debug_assert!(self.enabled, "step on a disabled engine");
        if self.active.is_none() && !self.load_next() {
            self.underruns += 1;
            return EngineStep {
                sample: self.last_sample,
                meta: None,
                started: false,
                completed: None,
                underrun: true,
            };
        }

        let sample = self.a[0];
        self.a[0] = wrap40(self.a[0].wrapping_add(self.a[1]));
        self.a[1] = wrap40(self.a[1].wrapping_add(self.a[2]));
        self.a[2] = wrap40(self.a[2].wrapping_add(self.a[3]));
        self.last_sample = sample;

        let seg = self.active.as_mut().expect("active segment");
        let meta = seg.meta;
        let started = seg.fresh;
        seg.fresh = false;
        seg.sample_sum = wrap40(seg.sample_sum.wrapping_add(sample));
        seg.cycles_remaining -= 1;
        let completed = if seg.cycles_remaining == 0 {
            let boundary = SegmentBoundary {
                meta: seg.meta,
                sample_sum: seg.sample_sum,
                last_sample: sample,
            };
            self.active = None;
            self.load_next();
            Some(boundary)
        } else {
            None
        };

        EngineStep {
            sample,
            meta: Some(meta),
            started,
            completed,
            underrun: false,
        }
    }
}

/// Convert polynomial coefficients (sample units, `f(k) = c0 + c1 k + c2 k^2
/// + c3 k^3`) into forward-difference form:
///
/// ```text
/// U0 = f(0)        = c0
/// U1 = delta f(0)  = c1 + c2 + c3
/// U2 = delta^2 f(0) = 2 c2 + 6 c3
/// U3 = delta^3 f(0) = 6 c3
/// ```
///
/// Engine replay of the result reproduces `f(k)` exactly for `k` in
/// `[0, tau)` whenever `f(k)` stays within the 40-bit lane.
pub fn to_forward_difference(
    c0: i64,
    c1: i64,
    c2: i64,
    c3: i64,
) -> Result<(i64, i64, i64, i64), SplineError> {
    let u0 = c0 as i128;
    let u1 = c1 as i128 + c2 as i128 + c3 as i128;
    let u2 = 2 * c2 as i128 + 6 * c3 as i128;
    let u3 = 6 * c3 as i128;
    let check = |field: &'static str, v: i128| -> Result<i64, SplineError> {
        if v < COEFF_MIN as i128 || v > COEFF_MAX as i128 {
            return Err(SplineError::CoefficientRange { field, value: v });
        }
        Ok(v as i64)
    };
    Ok((
        check("u0", u0)?,
        check("u1", u1)?,
        check("u2", u2)?,
        check("u3", u3)?,
    ))
}

/// Feed/backpressure bookkeeping for one bank clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedStatus {
    /// Engine that accepted a segment this clock, if any.
    pub delivered: Option<usize>,
    /// Set when the head segment could not be delivered (FIFO full).
    pub stalled: bool,
}

/// The eight spline engines of one channel, in order
/// (freq0, amp0, phase0, frame0, freq1, amp1, phase1, frame1), behind a
/// single feed path and a global start trigger.
#[derive(Debug, Clone)]
pub struct EngineBank {
    engines: Vec<SplineEngine>,
    staging: Vec<VecDeque<SplineSegmentWord>>,
    feed_cursor: usize,
    triggered: bool,
    backpressure_events: u64,
}

impl EngineBank {
    pub fn new(fifo_capacity: Option<usize>) -> Self {
        EngineBank {
            engines: (0..ENGINES_PER_CHANNEL)
                .map(|_| SplineEngine::new(fifo_capacity))
                .collect(),
            staging: (0..ENGINES_PER_CHANNEL).map(|_| VecDeque::new()).collect(),
            feed_cursor: 0,
            triggered: false,
            backpressure_events: 0,
        }
    }

    pub fn engine(&self, slot: usize) -> &SplineEngine {
        &self.engines[slot]
    }

    pub fn triggered(&self) -> bool {
        self.triggered
    }

    pub fn backpressure_events(&self) -> u64 {
        self.backpressure_events
    }

    /// Stage a segment for delivery to its engine FIFO.
    pub fn enqueue(&mut self, slot: usize, segment: SplineSegmentWord) {
        self.staging[slot].push_back(segment);
    }

    /// Segments staged but not yet delivered into FIFOs.
    pub fn staged(&self) -> usize {
        self.staging.iter().map(VecDeque::len).sum()
    }

    /// All engines drained: staging empty and every engine idle.
    pub fn idle(&self) -> bool {
        self.staged() == 0 && self.engines.iter().all(SplineEngine::idle)
    }

    /// Enable all engines simultaneously; they begin consuming on the next
    /// clock so concurrently-triggered engines stay sample-aligned.
    pub fn trigger(&mut self) {
        for e in &mut self.engines {
            e.enable();
        }
        self.triggered = true;
    }

    /// Deliver at most one staged segment into an engine FIFO, round-robin
    /// over the engines. A full FIFO stalls the feed (head-of-line) until
    /// the engine drains.
    pub fn feed_clock(&mut self) -> FeedStatus {
        for probe in 0..ENGINES_PER_CHANNEL {
            let slot = (self.feed_cursor + probe) % ENGINES_PER_CHANNEL;
            let Some(&segment) = self.staging[slot].front() else {
                continue;
            };
            if self.engines[slot].push(segment) {
                self.staging[slot].pop_front();
                self.feed_cursor = (slot + 1) % ENGINES_PER_CHANNEL;
                return FeedStatus {
                    delivered: Some(slot),
                    stalled: false,
                };
            }
            // keep the cursor here: the stream stalls on this segment
            self.feed_cursor = slot;
            self.backpressure_events += 1;
            return FeedStatus {
                delivered: None,
                stalled: true,
            };
        }
        FeedStatus {
            delivered: None,
            stalled: false,
        }
    }

    /// One system clock: feed, then step every engine if triggered.
    pub fn tick(&mut self) -> BankTick {
        let feed = self.feed_clock();
        let mut steps = [EngineStep {
            sample: 0,
            meta: None,
            started: false,
            completed: None,
            underrun: false,
        }; ENGINES_PER_CHANNEL];
        if self.triggered {
            for (slot, engine) in self.engines.iter_mut().enumerate() {
                steps[slot] = engine.step();
            }
        }
        BankTick {
            feed,
            steps,
            stepped: self.triggered,
        }
    }
}

/// Output of one bank clock.
#[derive(Debug, Clone, Copy)]
pub struct BankTick {
    pub feed: FeedStatus,
    pub steps: [EngineStep; ENGINES_PER_CHANNEL],
    pub stepped: bool,
}

impl BankTick {
    pub fn samples(&self) -> [i64; ENGINES_PER_CHANNEL] {
        let mut out = [0; ENGINES_PER_CHANNEL];
        for (i, s) in self.steps.iter().enumerate() {
            out[i] = s.sample;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{SegmentMeta, Tone, WaveformParam};

    fn meta() -> SegmentMeta {
        SegmentMeta::new(WaveformParam::Amplitude, Tone::T0)
    }

    fn seg(tau: u64, u3: i64, u2: i64, u1: i64, u0: i64) -> SplineSegmentWord {
        SplineSegmentWord {
            meta: meta(),
            tau,
            u0,
            u1,
            u2,
            u3,
        }
    }

    fn run(engine: &mut SplineEngine, n: usize) -> Vec<i64> {
        (0..n).map(|_| engine.step().sample).collect()
    }

    #[test]
    fn constant_segment_repeats_value() {
        let mut e = SplineEngine::new(None);
        e.push(seg(4, 0, 0, 0, 5));
        e.enable();
        assert_eq!(run(&mut e, 4), vec![5, 5, 5, 5]);
    }

    #[test]
    fn linear_ramp() {
        let mut e = SplineEngine::new(None);
        e.push(seg(4, 0, 0, 3, 0));
        e.enable();
        assert_eq!(run(&mut e, 4), vec![0, 3, 6, 9]);
    }

    #[test]
    fn cubic_from_difference_table() {
        // f(k) = k^3 via delta f(0) = 1, delta^2 f(0) = 6, delta^3 f(0) = 6
        let mut e = SplineEngine::new(None);
        e.push(seg(4, 6, 6, 1, 0));
        e.enable();
        assert_eq!(run(&mut e, 4), vec![0, 1, 8, 27]);
    }

    #[test]
    fn forward_difference_of_constant_and_cube() {
        assert_eq!(to_forward_difference(5, 0, 0, 0).unwrap(), (5, 0, 0, 0));
        assert_eq!(to_forward_difference(0, 0, 0, 1).unwrap(), (0, 1, 6, 6));
        assert!(matches!(
            to_forward_difference(0, 0, 0, COEFF_MAX),
            Err(SplineError::CoefficientRange { field: "u2", .. })
        ));
    }

    #[test]
    fn replay_matches_polynomial_for_random_cubics() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let tau = rng.gen_range(1..=1000u64);
            let c0 = rng.gen_range(-100_000_000i64..=100_000_000);
            let c1 = rng.gen_range(-1_000_000i64..=1_000_000);
            let c2 = rng.gen_range(-10_000i64..=10_000);
            let c3 = rng.gen_range(-100i64..=100);
            let (u0, u1, u2, u3) = to_forward_difference(c0, c1, c2, c3).unwrap();
            let mut e = SplineEngine::new(None);
            e.push(seg(tau, u3, u2, u1, u0));
            e.enable();
            for k in 0..tau as i128 {
                let expected =
                    c0 as i128 + c1 as i128 * k + c2 as i128 * k * k + c3 as i128 * k * k * k;
                assert_eq!(e.step().sample as i128, expected, "k = {k}");
            }
        }
    }

    #[test]
    fn segment_of_duration_tau_emits_tau_samples() {
        let mut e = SplineEngine::new(None);
        e.push(seg(7, 0, 0, 1, 0));
        e.enable();
        let mut emitted = 0;
        loop {
            let step = e.step();
            if step.underrun {
                break;
            }
            emitted += 1;
            if emitted > 20 {
                panic!("segment never completed");
            }
        }
        assert_eq!(emitted, 7);
    }

    #[test]
    fn wrapping_arithmetic_stays_in_lane() {
        let mut e = SplineEngine::new(None);
        e.push(seg(3, 0, 0, COEFF_MAX, COEFF_MAX));
        e.enable();
        let samples = run(&mut e, 3);
        assert_eq!(samples[0], COEFF_MAX);
        assert_eq!(samples[1], wrap40(COEFF_MAX.wrapping_add(COEFF_MAX)));
        for s in samples {
            assert!((COEFF_MIN..=COEFF_MAX).contains(&s));
        }
    }

    #[test]
    fn underrun_holds_last_sample() {
        let mut e = SplineEngine::new(None);
        e.push(seg(2, 0, 0, 1, 10));
        e.enable();
        assert_eq!(run(&mut e, 2), vec![10, 11]);
        let step = e.step();
        assert!(step.underrun);
        assert_eq!(step.sample, 11);
        assert_eq!(e.underrun_count(), 1);
    }

    #[test]
    fn boundary_reports_sum_and_last() {
        let mut e = SplineEngine::new(None);
        e.push(seg(4, 0, 0, 3, 0)); // samples 0, 3, 6, 9
        e.enable();
        for _ in 0..3 {
            assert!(e.step().completed.is_none());
        }
        let boundary = e.step().completed.unwrap();
        assert_eq!(boundary.sample_sum, 18);
        assert_eq!(boundary.last_sample, 9);
    }

    #[test]
    fn feeding_eight_segments_takes_eight_clocks() {
        let mut bank = EngineBank::new(Some(DEFAULT_FIFO_DEPTH));
        for slot in 0..ENGINES_PER_CHANNEL {
            bank.enqueue(slot, seg(4, 0, 0, 0, slot as i64));
        }
        for clock in 0..ENGINES_PER_CHANNEL {
            assert_eq!(bank.staged(), ENGINES_PER_CHANNEL - clock);
            let status = bank.feed_clock();
            assert!(status.delivered.is_some());
        }
        assert_eq!(bank.staged(), 0);
        assert!(bank.feed_clock().delivered.is_none());
    }

    #[test]
    fn feeding_during_long_segment_accumulates_fifo_depth() {
        let mut bank = EngineBank::new(Some(DEFAULT_FIFO_DEPTH));
        bank.enqueue(0, seg(100, 0, 0, 0, 1));
        bank.feed_clock();
        bank.trigger();
        for i in 0..10 {
            bank.enqueue(0, seg(100, 0, 0, 0, 2 + i));
            bank.tick();
        }
        assert_eq!(bank.engine(0).fifo_len(), 10);
    }

    #[test]
    fn trigger_before_feed_underruns_on_first_step() {
        let mut bank = EngineBank::new(None);
        bank.trigger();
        let tick = bank.tick();
        assert!(tick.steps.iter().all(|s| s.underrun));
    }

    #[test]
    fn backpressure_when_fifo_full() {
        let mut bank = EngineBank::new(Some(2));
        for _ in 0..4 {
            bank.enqueue(3, seg(10, 0, 0, 0, 1));
        }
        assert!(!bank.feed_clock().stalled);
        assert!(!bank.feed_clock().stalled);
        // FIFO now full; engine not consuming
        let status = bank.feed_clock();
        assert!(status.stalled);
        assert_eq!(bank.backpressure_events(), 1);
        // draining the engine unblocks the feed
        bank.trigger();
        for _ in 0..24 {
            bank.tick();
        }
        assert_eq!(bank.staged(), 0);
    }

    #[test]
    fn triggered_engines_stay_sample_aligned() {
        let mut bank = EngineBank::new(None);
        for slot in 0..ENGINES_PER_CHANNEL {
            bank.enqueue(slot, seg(16, 0, 0, 1, 100 * slot as i64));
        }
        while bank.staged() > 0 {
            bank.feed_clock();
        }
        bank.trigger();
        for k in 0..16i64 {
            let tick = bank.tick();
            for (slot, step) in tick.steps.iter().enumerate() {
                assert_eq!(step.sample, 100 * slot as i64 + k);
            }
        }
    }

    /// With the feed path delivering one segment per clock over 8 engines, a
    /// continuous stream of duration-8 segments is sustainable; duration-7
    /// segments eventually starve the FIFOs.
    #[test]
    fn sustained_throughput_floor_is_eight_clocks_per_gate() {
        for (tau, expect_underrun) in [(8u64, false), (7u64, true)] {
            let mut bank = EngineBank::new(Some(DEFAULT_FIFO_DEPTH));
            // prime one gate ahead
            for slot in 0..ENGINES_PER_CHANNEL {
                bank.enqueue(slot, seg(tau, 0, 0, 0, 0));
            }
            for _ in 0..ENGINES_PER_CHANNEL {
                bank.feed_clock();
            }
            bank.trigger();
            let mut underran = false;
            for gate in 0..64 {
                for slot in 0..ENGINES_PER_CHANNEL {
                    bank.enqueue(slot, seg(tau, 0, 0, 0, gate));
                }
                for _ in 0..tau {
                    let tick = bank.tick();
                    underran |= tick.steps.iter().any(|s| s.underrun);
                }
            }
            assert_eq!(underran, expect_underrun, "tau = {tau}");
        }
    }
}
