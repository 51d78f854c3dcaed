//! Bit-exact encoding and decoding of the word formats crossing the
//! streaming interface.
//!
//! Three word families share the 256-bit block:
//!
//! * raw spline segments (the 216-bit payload in the low bits, used both
//!   standalone in direct-streaming mode and as the PLUT programming payload),
//! * gate-ID sequencing words (up to 20 packed 11-bit identifiers),
//! * LUT programming words (PLUT / MLUT / GLUT variants).
//!
//! The word type tag lives in bits `[252, 256)` of every block so a decoder
//! can dispatch without context. A bare segment carrier has zero padding
//! above bit 215 and therefore tags itself as `TYPE_RAW_SEGMENT`. The
//! channel routing mask sits at bits `[240, 248)` in every variant.
//!
//! Segment payload layout (within bits `[0, 216)`):
//!
//! ```text
//! [  0,  40)  u0    first-order value, 40-bit two's complement
//! [ 40,  80)  u1
//! [ 80, 120)  u2
//! [120, 160)  u3
//! [160, 200)  tau   duration in sequencer clocks, unsigned, >= 1
//! [200, 216)  metadata (routing tag, tone, frame/sync/feedforward flags)
//! ```

use crate::word::Word256;
use serde::{Deserialize, Serialize};

/// Width of phase, frequency, amplitude and spline coefficient lanes.
pub const LANE_BITS: u32 = 40;
/// Mask for one 40-bit lane.
pub const LANE_MASK: u64 = (1 << LANE_BITS) - 1;
/// Encoded width of one spline segment.
pub const SEGMENT_BITS: usize = 216;
/// Maximum gate identifiers in one sequencing word.
pub const MAX_PACKED_IDS: usize = 20;
/// Width of a gate identifier.
pub const GATE_ID_BITS: u32 = 11;
/// Width of MLUT/PLUT addresses.
pub const LUT_ADDR_BITS: u32 = 12;
/// Maximum (MLUT address -> PLUT address) pairs in one programming word.
pub const MAX_MLUT_RECORDS: usize = 10;
/// Maximum (gate ID -> start, end) records in one programming word.
pub const MAX_GLUT_RECORDS: usize = 6;

const MASK_TAU: u64 = LANE_MASK;
const ROUTING_OFFSET: usize = 240;
const TYPE_OFFSET: usize = 252;

const TYPE_RAW_SEGMENT: u64 = 0;
const TYPE_SEQUENCE: u64 = 1;
const TYPE_PLUT: u64 = 2;
const TYPE_MLUT: u64 = 3;
const TYPE_GLUT: u64 = 4;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("field `{field}` value {value} does not fit in {bits} bits")]
    FieldRange {
        field: &'static str,
        value: i128,
        bits: u32,
    },
    #[error("segment duration must be at least one cycle")]
    ZeroDuration,
    #[error("sequencing words hold 1..={MAX_PACKED_IDS} gate IDs, got {0}")]
    IdCapacity(usize),
    #[error("programming word record count {got} outside 1..={max}")]
    RecordCount { got: usize, max: usize },
    #[error("gate range start {start} exceeds end {end}")]
    InvertedRange { start: u16, end: u16 },
    #[error("unknown word type tag {0:#x}")]
    UnknownWordType(u8),
    #[error("unknown parameter routing tag {0}")]
    UnknownParamTag(u8),
}

/// Waveform parameter addressed by a segment's routing tag (3-bit field).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WaveformParam {
    Frequency,
    Amplitude,
    Phase,
    FrameRotation,
}

impl WaveformParam {
    pub const ALL: [WaveformParam; 4] = [
        WaveformParam::Frequency,
        WaveformParam::Amplitude,
        WaveformParam::Phase,
        WaveformParam::FrameRotation,
    ];

    pub fn tag(self) -> u8 {
        match self {
            WaveformParam::Frequency => 0,
            WaveformParam::Amplitude => 1,
            WaveformParam::Phase => 2,
            WaveformParam::FrameRotation => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self, CodecError> {
        match tag {
            0 => Ok(WaveformParam::Frequency),
            1 => Ok(WaveformParam::Amplitude),
            2 => Ok(WaveformParam::Phase),
            3 => Ok(WaveformParam::FrameRotation),
            t => Err(CodecError::UnknownParamTag(t)),
        }
    }
}

/// DDS tone targeted by a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tone {
    T0,
    T1,
}

impl Tone {
    pub const ALL: [Tone; 2] = [Tone::T0, Tone::T1];

    pub fn index(self) -> usize {
        match self {
            Tone::T0 => 0,
            Tone::T1 => 1,
        }
    }

    pub fn from_index(i: usize) -> Tone {
        if i == 0 {
            Tone::T0
        } else {
            Tone::T1
        }
    }
}

/// Segment metadata: the 16-bit `M` field.
///
/// Bit assignment (a declared convention; only the total width is fixed by
/// the hardware format):
///
/// ```text
/// [0, 3)  parameter routing tag
/// [3]     tone select
/// [4]     frame_apply      accumulate this segment into the frame register
/// [5]     frame_final_only accumulate only the segment's final sample
/// [6]     sync_on_start    trigger global phase sync on the first sample
/// [7]     ffwd_enable      apply the feedforward offset while active
/// [8,16)  reserved, encoded zero, masked on decode
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SegmentMeta {
    pub param: WaveformParam,
    pub tone: Tone,
    pub frame_apply: bool,
    pub frame_final_only: bool,
    pub sync_on_start: bool,
    pub ffwd_enable: bool,
}

impl SegmentMeta {
    pub fn new(param: WaveformParam, tone: Tone) -> Self {
        SegmentMeta {
            param,
            tone,
            frame_apply: false,
            frame_final_only: false,
            sync_on_start: false,
            ffwd_enable: false,
        }
    }

    /// Index of the spline engine this segment routes to, in bank order
    /// (freq0, amp0, phase0, frame0, freq1, amp1, phase1, frame1).
    pub fn engine_slot(&self) -> usize {
        self.tone.index() * 4 + self.param.tag() as usize
    }

    fn to_bits(self) -> u64 {
        u64::from(self.param.tag())
            | (self.tone.index() as u64) << 3
            | (self.frame_apply as u64) << 4
            | (self.frame_final_only as u64) << 5
            | (self.sync_on_start as u64) << 6
            | (self.ffwd_enable as u64) << 7
    }

    fn from_bits(bits: u64) -> Result<Self, CodecError> {
        Ok(SegmentMeta {
            param: WaveformParam::from_tag((bits & 0x7) as u8)?,
            tone: Tone::from_index(((bits >> 3) & 1) as usize),
            frame_apply: bits & (1 << 4) != 0,
            frame_final_only: bits & (1 << 5) != 0,
            sync_on_start: bits & (1 << 6) != 0,
            ffwd_enable: bits & (1 << 7) != 0,
        })
    }
}

/// One 216-bit pulse-LUT entry: a cubic segment for a single waveform
/// parameter, interpolated over `tau` sequencer clocks.
///
/// `u0..u3` are forward-difference coefficients in 40-bit two's complement;
/// a constant parameter sets `u1 = u2 = u3 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SplineSegmentWord {
    pub meta: SegmentMeta,
    pub tau: u64,
    pub u0: i64,
    pub u1: i64,
    pub u2: i64,
    pub u3: i64,
}

/// Smallest 40-bit two's-complement value.
pub const COEFF_MIN: i64 = -(1 << (LANE_BITS - 1));
/// Largest 40-bit two's-complement value.
pub const COEFF_MAX: i64 = (1 << (LANE_BITS - 1)) - 1;

fn check_coeff(field: &'static str, v: i64) -> Result<u64, CodecError> {
    if !(COEFF_MIN..=COEFF_MAX).contains(&v) {
        return Err(CodecError::FieldRange {
            field,
            value: v as i128,
            bits: LANE_BITS,
        });
    }
    Ok((v as u64) & LANE_MASK)
}

/// Sign-extend a 40-bit lane value.
pub fn lane_to_i64(bits: u64) -> i64 {
    ((bits << (64 - LANE_BITS)) as i64) >> (64 - LANE_BITS)
}

impl SplineSegmentWord {
    pub fn constant(meta: SegmentMeta, tau: u64, value: i64) -> Self {
        SplineSegmentWord {
            meta,
            tau,
            u0: value,
            u1: 0,
            u2: 0,
            u3: 0,
        }
    }

    pub fn validate(&self) -> Result<(), CodecError> {
        if self.tau == 0 {
            return Err(CodecError::ZeroDuration);
        }
        if self.tau > MASK_TAU {
            return Err(CodecError::FieldRange {
                field: "tau",
                value: self.tau as i128,
                bits: LANE_BITS,
            });
        }
        check_coeff("u0", self.u0)?;
        check_coeff("u1", self.u1)?;
        check_coeff("u2", self.u2)?;
        check_coeff("u3", self.u3)?;
        Ok(())
    }

    /// Write the 216-bit payload into the low bits of `block`.
    fn encode_payload(&self, block: &mut Word256) -> Result<(), CodecError> {
        self.validate()?;
        block.set_bits(0, 40, check_coeff("u0", self.u0)?);
        block.set_bits(40, 40, check_coeff("u1", self.u1)?);
        block.set_bits(80, 40, check_coeff("u2", self.u2)?);
        block.set_bits(120, 40, check_coeff("u3", self.u3)?);
        block.set_bits(160, 40, self.tau);
        block.set_bits(200, 16, self.meta.to_bits());
        Ok(())
    }

    fn decode_payload(block: &Word256) -> Result<Self, CodecError> {
        let seg = SplineSegmentWord {
            u0: lane_to_i64(block.bits(0, 40)),
            u1: lane_to_i64(block.bits(40, 40)),
            u2: lane_to_i64(block.bits(80, 40)),
            u3: lane_to_i64(block.bits(120, 40)),
            tau: block.bits(160, 40),
            meta: SegmentMeta::from_bits(block.bits(200, 16))?,
        };
        if seg.tau == 0 {
            return Err(CodecError::ZeroDuration);
        }
        Ok(seg)
    }
}

/// Encode one segment into a 256-bit carrier with the upper 40 bits zero.
pub fn encode_segment(seg: &SplineSegmentWord) -> Result<Word256, CodecError> {
    let mut block = Word256::ZERO;
    seg.encode_payload(&mut block)?;
    Ok(block)
}

/// Decode the segment payload of a carrier; bits above 215 are ignored.
pub fn decode_segment(block: &Word256) -> Result<SplineSegmentWord, CodecError> {
    SplineSegmentWord::decode_payload(block)
}

/// Set of output channels a word applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ChannelMask(pub u8);

impl ChannelMask {
    pub fn single(channel: u8) -> Self {
        ChannelMask(1 << channel)
    }

    pub fn contains(self, channel: u8) -> bool {
        self.0 & (1 << channel) != 0
    }

    /// Channels in the mask, ascending.
    pub fn channels(self) -> impl Iterator<Item = u8> {
        (0..8).filter(move |c| self.0 & (1 << c) != 0)
    }
}

/// 11-bit gate identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GateId(u16);

impl GateId {
    pub const MAX: u16 = (1 << GATE_ID_BITS) - 1;

    pub fn new(id: u16) -> Result<Self, CodecError> {
        if id > Self::MAX {
            return Err(CodecError::FieldRange {
                field: "gate_id",
                value: id as i128,
                bits: GATE_ID_BITS,
            });
        }
        Ok(GateId(id))
    }

    pub fn get(self) -> u16 {
        self.0
    }
}

fn check_lut_addr(field: &'static str, addr: u16) -> Result<u16, CodecError> {
    if addr >= (1 << LUT_ADDR_BITS) {
        return Err(CodecError::FieldRange {
            field,
            value: addr as i128,
            bits: LUT_ADDR_BITS,
        });
    }
    Ok(addr)
}

/// A sequencing word: up to 20 gate IDs consumed in 11-bit slots, plus a
/// routing mask. Layout: slots `[11k, 11k+11)` for `k < 20`, count at
/// `[220, 225)`, routing at `[240, 248)`, type tag at `[252, 256)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSequenceWord {
    pub ids: Vec<GateId>,
    pub routing: ChannelMask,
}

/// Pack gate identifiers into a sequencing word.
pub fn pack_gate_ids(ids: &[GateId], routing: ChannelMask) -> Result<GateSequenceWord, CodecError> {
    if ids.is_empty() || ids.len() > MAX_PACKED_IDS {
        return Err(CodecError::IdCapacity(ids.len()));
    }
    Ok(GateSequenceWord {
        ids: ids.to_vec(),
        routing,
    })
}

impl GateSequenceWord {
    fn encode(&self, block: &mut Word256) -> Result<(), CodecError> {
        if self.ids.is_empty() || self.ids.len() > MAX_PACKED_IDS {
            return Err(CodecError::IdCapacity(self.ids.len()));
        }
        for (k, id) in self.ids.iter().enumerate() {
            block.set_bits(11 * k, 11, id.get() as u64);
        }
        block.set_bits(220, 5, self.ids.len() as u64);
        block.set_bits(ROUTING_OFFSET, 8, self.routing.0 as u64);
        block.set_bits(TYPE_OFFSET, 4, TYPE_SEQUENCE);
        Ok(())
    }

    fn decode(block: &Word256) -> Result<Self, CodecError> {
        let count = block.bits(220, 5) as usize;
        if count == 0 || count > MAX_PACKED_IDS {
            return Err(CodecError::IdCapacity(count));
        }
        let ids = (0..count)
            .map(|k| GateId::new(block.bits(11 * k, 11) as u16))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GateSequenceWord {
            ids,
            routing: ChannelMask(block.bits(ROUTING_OFFSET, 8) as u8),
        })
    }
}

/// One GLUT record: gate ID mapped to an inclusive MLUT address range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlutRecord {
    pub gate: GateId,
    pub start: u16,
    pub end: u16,
}

impl GlutRecord {
    pub fn new(gate: GateId, start: u16, end: u16) -> Result<Self, CodecError> {
        check_lut_addr("glut_start", start)?;
        check_lut_addr("glut_end", end)?;
        if start > end {
            return Err(CodecError::InvertedRange { start, end });
        }
        Ok(GlutRecord { gate, start, end })
    }
}

/// A LUT programming word. Each variant fills one 256-bit block; MLUT and
/// GLUT records pack densely so small tables program in few transfers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProgrammingWord {
    /// Write one 216-bit segment at a PLUT address.
    Plut {
        channels: ChannelMask,
        addr: u16,
        segment: SplineSegmentWord,
    },
    /// Write up to 10 (MLUT address -> PLUT address) mappings.
    Mlut {
        channels: ChannelMask,
        entries: Vec<(u16, u16)>,
    },
    /// Write up to 6 (gate ID -> MLUT range) records.
    Glut {
        channels: ChannelMask,
        entries: Vec<GlutRecord>,
    },
}

impl ProgrammingWord {
    pub fn channels(&self) -> ChannelMask {
        match self {
            ProgrammingWord::Plut { channels, .. }
            | ProgrammingWord::Mlut { channels, .. }
            | ProgrammingWord::Glut { channels, .. } => *channels,
        }
    }

    fn encode(&self, block: &mut Word256) -> Result<(), CodecError> {
        match self {
            ProgrammingWord::Plut {
                channels,
                addr,
                segment,
            } => {
                segment.encode_payload(block)?;
                block.set_bits(216, 12, check_lut_addr("plut_addr", *addr)? as u64);
                block.set_bits(ROUTING_OFFSET, 8, channels.0 as u64);
                block.set_bits(TYPE_OFFSET, 4, TYPE_PLUT);
            }
            ProgrammingWord::Mlut { channels, entries } => {
                if entries.is_empty() || entries.len() > MAX_MLUT_RECORDS {
                    return Err(CodecError::RecordCount {
                        got: entries.len(),
                        max: MAX_MLUT_RECORDS,
                    });
                }
                for (k, (mlut, plut)) in entries.iter().enumerate() {
                    block.set_bits(24 * k, 12, check_lut_addr("mlut_addr", *mlut)? as u64);
                    block.set_bits(24 * k + 12, 12, check_lut_addr("plut_addr", *plut)? as u64);
                }
                block.set_bits(248, 4, entries.len() as u64);
                block.set_bits(ROUTING_OFFSET, 8, channels.0 as u64);
                block.set_bits(TYPE_OFFSET, 4, TYPE_MLUT);
            }
            ProgrammingWord::Glut { channels, entries } => {
                if entries.is_empty() || entries.len() > MAX_GLUT_RECORDS {
                    return Err(CodecError::RecordCount {
                        got: entries.len(),
                        max: MAX_GLUT_RECORDS,
                    });
                }
                for (k, rec) in entries.iter().enumerate() {
                    let base = 35 * k;
                    block.set_bits(base, 11, rec.gate.get() as u64);
                    block.set_bits(base + 11, 12, check_lut_addr("glut_start", rec.start)? as u64);
                    block.set_bits(base + 23, 12, check_lut_addr("glut_end", rec.end)? as u64);
                    if rec.start > rec.end {
                        return Err(CodecError::InvertedRange {
                            start: rec.start,
                            end: rec.end,
                        });
                    }
                }
                block.set_bits(248, 4, entries.len() as u64);
                block.set_bits(ROUTING_OFFSET, 8, channels.0 as u64);
                block.set_bits(TYPE_OFFSET, 4, TYPE_GLUT);
            }
        }
        Ok(())
    }

    fn decode(block: &Word256, tag: u64) -> Result<Self, CodecError> {
        let channels = ChannelMask(block.bits(ROUTING_OFFSET, 8) as u8);
        match tag {
            TYPE_PLUT => Ok(ProgrammingWord::Plut {
                channels,
                addr: block.bits(216, 12) as u16,
                segment: SplineSegmentWord::decode_payload(block)?,
            }),
            TYPE_MLUT => {
                let count = block.bits(248, 4) as usize;
                if count == 0 || count > MAX_MLUT_RECORDS {
                    return Err(CodecError::RecordCount {
                        got: count,
                        max: MAX_MLUT_RECORDS,
                    });
                }
                let entries = (0..count)
                    .map(|k| {
                        (
                            block.bits(24 * k, 12) as u16,
                            block.bits(24 * k + 12, 12) as u16,
                        )
                    })
                    .collect();
                Ok(ProgrammingWord::Mlut { channels, entries })
            }
            TYPE_GLUT => {
                let count = block.bits(248, 4) as usize;
                if count == 0 || count > MAX_GLUT_RECORDS {
                    return Err(CodecError::RecordCount {
                        got: count,
                        max: MAX_GLUT_RECORDS,
                    });
                }
                let entries = (0..count)
                    .map(|k| {
                        let base = 35 * k;
                        GlutRecord::new(
                            GateId::new(block.bits(base, 11) as u16)?,
                            block.bits(base + 11, 12) as u16,
                            block.bits(base + 23, 12) as u16,
                        )
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(ProgrammingWord::Glut { channels, entries })
            }
            _ => unreachable!("dispatch handled by decode_word"),
        }
    }
}

/// A decoded 256-bit word from the streaming interface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransferWord {
    /// LUT-bypass segment carrier (direct streaming mode).
    Raw {
        channels: ChannelMask,
        segment: SplineSegmentWord,
    },
    Sequence(GateSequenceWord),
    Programming(ProgrammingWord),
}

/// Encode any word variant into one 256-bit block.
pub fn encode_word(word: &TransferWord) -> Result<Word256, CodecError> {
    let mut block = Word256::ZERO;
    match word {
        TransferWord::Raw { channels, segment } => {
            segment.encode_payload(&mut block)?;
            block.set_bits(ROUTING_OFFSET, 8, channels.0 as u64);
            // type tag stays 0: a raw carrier is identified by zero padding
        }
        TransferWord::Sequence(seq) => seq.encode(&mut block)?,
        TransferWord::Programming(prog) => prog.encode(&mut block)?,
    }
    Ok(block)
}

/// Decode a 256-bit block, dispatching on the word type tag.
pub fn decode_word(block: &Word256) -> Result<TransferWord, CodecError> {
    match block.bits(TYPE_OFFSET, 4) {
        TYPE_RAW_SEGMENT => Ok(TransferWord::Raw {
            channels: ChannelMask(block.bits(ROUTING_OFFSET, 8) as u8),
            segment: SplineSegmentWord::decode_payload(block)?,
        }),
        TYPE_SEQUENCE => Ok(TransferWord::Sequence(GateSequenceWord::decode(block)?)),
        tag @ (TYPE_PLUT | TYPE_MLUT | TYPE_GLUT) => {
            Ok(TransferWord::Programming(ProgrammingWord::decode(block, tag)?))
        }
        tag => Err(CodecError::UnknownWordType(tag as u8)),
    }
}
