//! Three-level gate sequencer memory: GLUT -> MLUT -> PLUT, per channel.
//!
//! The gate LUT maps an 11-bit gate ID to an inclusive MLUT address range.
//! The memory-map LUT linearizes arbitrarily-ordered pulse LUT contents, and
//! the pulse LUT itself stores unique 216-bit spline segments. Reads of
//! unprogrammed entries are hard errors so a compiler bug surfaces
//! deterministically instead of replaying stale data.

use crate::codec::{
    decode_word, CodecError, GateId, ProgrammingWord, SplineSegmentWord, TransferWord,
};
use crate::word::Word256;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Gate LUT depth: one entry per possible 11-bit gate ID.
pub const GLUT_DEPTH: usize = 2048;
/// Memory-map LUT depth (12-bit addressed).
pub const MLUT_DEPTH: usize = 4096;
/// Pulse LUT depth per channel (12-bit addressed).
pub const PLUT_DEPTH: usize = 4096;
/// Output channels per board.
pub const NUM_CHANNELS: usize = 8;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LutError {
    #[error("{table} address {addr} exceeds depth {depth}")]
    AddressRange {
        table: &'static str,
        addr: u16,
        depth: usize,
    },
    #[error("gate {0} is not programmed in the GLUT")]
    UnprogrammedGate(u16),
    #[error("MLUT address {0} is not programmed")]
    UnprogrammedMlut(u16),
    #[error("PLUT address {0} is not programmed")]
    UnprogrammedPlut(u16),
    #[error("channel {0} outside configured channel count")]
    ChannelRange(u8),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("snapshot: {0}")]
    Snapshot(String),
}

/// Inclusive MLUT address range of one gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateRange {
    pub start: u16,
    pub end: u16,
}

/// One channel's GLUT/MLUT/PLUT contents.
#[derive(Debug, Clone)]
pub struct LutSet {
    glut: Vec<Option<GateRange>>,
    mlut: Vec<Option<u16>>,
    plut: Vec<Option<SplineSegmentWord>>,
}

impl Default for LutSet {
    fn default() -> Self {
        Self::new()
    }
}

impl LutSet {
    pub fn new() -> Self {
        LutSet {
            glut: vec![None; GLUT_DEPTH],
            mlut: vec![None; MLUT_DEPTH],
            plut: vec![None; PLUT_DEPTH],
        }
    }

    pub fn write_plut(&mut self, addr: u16, segment: SplineSegmentWord) -> Result<(), LutError> {
        let slot = self.plut.get_mut(addr as usize).ok_or(LutError::AddressRange {
            table: "PLUT",
            addr,
            depth: PLUT_DEPTH,
        })?;
        *slot = Some(segment);
        Ok(())
    }

    pub fn write_mlut(&mut self, addr: u16, plut_addr: u16) -> Result<(), LutError> {
        if plut_addr as usize >= PLUT_DEPTH {
            return Err(LutError::AddressRange {
                table: "PLUT",
                addr: plut_addr,
                depth: PLUT_DEPTH,
            });
        }
        let slot = self.mlut.get_mut(addr as usize).ok_or(LutError::AddressRange {
            table: "MLUT",
            addr,
            depth: MLUT_DEPTH,
        })?;
        *slot = Some(plut_addr);
        Ok(())
    }

    pub fn write_glut(&mut self, gate: GateId, range: GateRange) -> Result<(), LutError> {
        if range.end as usize >= MLUT_DEPTH {
            return Err(LutError::AddressRange {
                table: "MLUT",
                addr: range.end,
                depth: MLUT_DEPTH,
            });
        }
        self.glut[gate.get() as usize] = Some(range);
        Ok(())
    }

    /// Apply one programming word to this channel.
    pub fn program(&mut self, word: &ProgrammingWord) -> Result<(), LutError> {
        match word {
            ProgrammingWord::Plut { addr, segment, .. } => self.write_plut(*addr, *segment),
            ProgrammingWord::Mlut { entries, .. } => {
                for (mlut_addr, plut_addr) in entries {
                    self.write_mlut(*mlut_addr, *plut_addr)?;
                }
                Ok(())
            }
            ProgrammingWord::Glut { entries, .. } => {
                for rec in entries {
                    self.write_glut(
                        rec.gate,
                        GateRange {
                            start: rec.start,
                            end: rec.end,
                        },
                    )?;
                }
                Ok(())
            }
        }
    }

    pub fn gate_range(&self, gate: GateId) -> Result<GateRange, LutError> {
        self.glut[gate.get() as usize].ok_or(LutError::UnprogrammedGate(gate.get()))
    }

    pub fn mlut_entry(&self, addr: u16) -> Result<u16, LutError> {
        self.mlut
            .get(addr as usize)
            .copied()
            .flatten()
            .ok_or(LutError::UnprogrammedMlut(addr))
    }

    pub fn plut_entry(&self, addr: u16) -> Result<SplineSegmentWord, LutError> {
        self.plut
            .get(addr as usize)
            .copied()
            .flatten()
            .ok_or(LutError::UnprogrammedPlut(addr))
    }

    /// Iterator stepping through a gate's MLUT range, resolving each address
    /// to its PLUT segment. Yields exactly `end - start + 1` items.
    pub fn readout(&self, gate: GateId) -> Result<ReadoutIterator<'_>, LutError> {
        let range = self.gate_range(gate)?;
        Ok(ReadoutIterator {
            lut: self,
            next: Some(range.start),
            end: range.end,
        })
    }

    /// Expand a gate to its ordered segment list.
    pub fn read_gate(&self, gate: GateId) -> Result<Vec<SplineSegmentWord>, LutError> {
        self.readout(gate)?.collect()
    }

    /// Dump the programmed entries as a JSON document with hex-encoded
    /// PLUT payloads, for use as test fixtures.
    pub fn snapshot(&self) -> LutSnapshot {
        LutSnapshot {
            glut: self
                .glut
                .iter()
                .enumerate()
                .filter_map(|(a, e)| e.map(|r| (a as u16, r)))
                .collect(),
            mlut: self
                .mlut
                .iter()
                .enumerate()
                .filter_map(|(a, e)| e.map(|p| (a as u16, p)))
                .collect(),
            plut: self
                .plut
                .iter()
                .enumerate()
                .filter_map(|(a, e)| {
                    e.as_ref().map(|seg| {
                        let block = crate::codec::encode_segment(seg).expect("stored segment valid");
                        (a as u16, hex::encode(&block.as_bytes()[..27]))
                    })
                })
                .collect(),
        }
    }

    pub fn restore(snapshot: &LutSnapshot) -> Result<Self, LutError> {
        let mut set = LutSet::new();
        for (&addr, range) in &snapshot.glut {
            set.write_glut(
                GateId::new(addr).map_err(LutError::Codec)?,
                *range,
            )?;
        }
        for (&addr, &plut_addr) in &snapshot.mlut {
            set.write_mlut(addr, plut_addr)?;
        }
        for (&addr, entry) in &snapshot.plut {
            let bytes = hex::decode(entry).map_err(|e| LutError::Snapshot(e.to_string()))?;
            if bytes.len() != 27 {
                return Err(LutError::Snapshot(format!(
                    "PLUT entry {addr} has {} bytes, expected 27",
                    bytes.len()
                )));
            }
            let mut block = Word256::ZERO;
            block.0[..27].copy_from_slice(&bytes);
            set.write_plut(addr, crate::codec::decode_segment(&block)?)?;
        }
        Ok(set)
    }
}

/// Serializable LUT contents, addresses mapped to entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LutSnapshot {
    pub glut: BTreeMap<u16, GateRange>,
    pub mlut: BTreeMap<u16, u16>,
    pub plut: BTreeMap<u16, String>,
}

/// Steps through a gate's MLUT range in order.
pub struct ReadoutIterator<'a> {
    lut: &'a LutSet,
    next: Option<u16>,
    end: u16,
}

impl Iterator for ReadoutIterator<'_> {
    type Item = Result<SplineSegmentWord, LutError>;

    fn next(&mut self) -> Option<Self::Item> {
        let addr = self.next?;
        self.next = if addr < self.end { Some(addr + 1) } else { None };
        Some(
            self.lut
                .mlut_entry(addr)
                .and_then(|plut_addr| self.lut.plut_entry(plut_addr)),
        )
    }
}

/// A segment routed to one channel's parameter FIFO.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoutedSegment {
    pub channel: u8,
    /// Engine index in bank order; derived from the segment metadata.
    pub engine: usize,
    pub segment: SplineSegmentWord,
}

fn route(channel: u8, segment: SplineSegmentWord) -> RoutedSegment {
    RoutedSegment {
        channel,
        engine: segment.meta.engine_slot(),
        segment,
    }
}

fn lut_for(luts: &mut [LutSet], channel: u8) -> Result<&mut LutSet, LutError> {
    luts.get_mut(channel as usize)
        .ok_or(LutError::ChannelRange(channel))
}

/// Process one stream block against a bank of per-channel LUTs.
///
/// Programming words mutate the LUTs of every channel in their routing mask
/// and emit nothing. Sequencing words expand each packed gate ID through
/// GLUT -> MLUT -> PLUT on each masked channel. Raw carriers route their
/// segment directly, bypassing the LUTs.
pub fn process_word(
    block: &Word256,
    luts: &mut [LutSet],
) -> Result<Vec<RoutedSegment>, LutError> {
    process_transfer(&decode_word(block)?, luts)
}

/// [`process_word`] over an already-decoded word.
pub fn process_transfer(
    word: &TransferWord,
    luts: &mut [LutSet],
) -> Result<Vec<RoutedSegment>, LutError> {
    match word {
        TransferWord::Programming(prog) => {
            for channel in prog.channels().channels() {
                lut_for(luts, channel)?.program(prog)?;
            }
            Ok(Vec::new())
        }
        TransferWord::Sequence(seq) => {
            let mut out = Vec::new();
            for channel in seq.routing.channels() {
                if channel as usize >= luts.len() {
                    return Err(LutError::ChannelRange(channel));
                }
                for id in &seq.ids {
                    for seg in luts[channel as usize].readout(*id)? {
                        out.push(route(channel, seg?));
                    }
                }
            }
            Ok(out)
        }
        TransferWord::Raw { channels, segment } => {
            let mut out = Vec::new();
            for channel in channels.channels() {
                if channel as usize >= luts.len() {
                    return Err(LutError::ChannelRange(channel));
                }
                out.push(route(channel, *segment));
            }
            Ok(out)
        }
    }
}

/// Convenience constructor for a full bank of channel LUTs.
pub fn channel_luts(n: usize) -> Vec<LutSet> {
    (0..n).map(|_| LutSet::new()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlutStorage {
    pub total_entries: usize,
    pub total_bytes: usize,
}

/// Aggregate pulse-LUT storage across all channels.
pub fn plut_storage() -> PlutStorage {
    let total_entries = PLUT_DEPTH * NUM_CHANNELS;
    PlutStorage {
        total_entries,
        total_bytes: total_entries * crate::codec::SEGMENT_BITS / 8,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{
        encode_word, pack_gate_ids, ChannelMask, GlutRecord, SegmentMeta, Tone, WaveformParam,
    };

    fn seg(param: WaveformParam, tone: Tone, value: i64) -> SplineSegmentWord {
        SplineSegmentWord::constant(SegmentMeta::new(param, tone), 4, value)
    }

    fn gid(id: u16) -> GateId {
        GateId::new(id).unwrap()
    }

    #[test]
    fn write_then_read_single_segment_gate() {
        let mut lut = LutSet::new();
        let s = seg(WaveformParam::Amplitude, Tone::T0, 17);
        lut.write_plut(0, s).unwrap();
        lut.write_mlut(5, 0).unwrap();
        lut.write_glut(gid(9), GateRange { start: 5, end: 5 }).unwrap();
        assert_eq!(lut.read_gate(gid(9)).unwrap(), vec![s]);
    }

    #[test]
    fn last_plut_write_wins() {
        let mut lut = LutSet::new();
        lut.write_plut(3, seg(WaveformParam::Phase, Tone::T0, 1)).unwrap();
        let second = seg(WaveformParam::Phase, Tone::T0, 2);
        lut.write_plut(3, second).unwrap();
        assert_eq!(lut.plut_entry(3).unwrap(), second);
    }

    #[test]
    fn mlut_word_with_two_mappings_updates_exactly_two_entries() {
        let mut lut = LutSet::new();
        let before: Vec<Option<u16>> = (0..MLUT_DEPTH as u16).map(|a| lut.mlut.get(a as usize).copied().flatten()).collect();
        lut.program(&ProgrammingWord::Mlut {
            channels: ChannelMask::single(0),
            entries: vec![(10, 100), (20, 200)],
        })
        .unwrap();
        let mut changed = Vec::new();
        for addr in 0..MLUT_DEPTH as u16 {
            let now = lut.mlut[addr as usize];
            if now != before[addr as usize] {
                changed.push((addr, now.unwrap()));
            }
        }
        assert_eq!(changed, vec![(10, 100), (20, 200)]);
    }

    #[test]
    fn gate_spanning_eight_mlut_entries_reads_in_order() {
        let mut lut = LutSet::new();
        let segments: Vec<_> = (0..8)
            .map(|i| seg(WaveformParam::Frequency, Tone::T0, 1000 + i))
            .collect();
        // PLUT order deliberately scrambled relative to MLUT order
        let plut_addrs = [7u16, 3, 5, 0, 6, 1, 4, 2];
        for (i, &pa) in plut_addrs.iter().enumerate() {
            lut.write_plut(pa, segments[i]).unwrap();
            lut.write_mlut(100 + i as u16, pa).unwrap();
        }
        lut.write_glut(gid(1), GateRange { start: 100, end: 107 }).unwrap();
        assert_eq!(lut.read_gate(gid(1)).unwrap(), segments);
    }

    #[test]
    fn aliased_gates_share_plut_entries() {
        let mut lut = LutSet::new();
        let shared = seg(WaveformParam::Amplitude, Tone::T1, -7);
        lut.write_plut(0, shared).unwrap();
        lut.write_mlut(0, 0).unwrap();
        lut.write_mlut(1, 0).unwrap();
        lut.write_glut(gid(0), GateRange { start: 0, end: 0 }).unwrap();
        lut.write_glut(gid(1), GateRange { start: 1, end: 1 }).unwrap();
        assert_eq!(lut.read_gate(gid(0)).unwrap(), lut.read_gate(gid(1)).unwrap());
    }

    #[test]
    fn unprogrammed_reads_are_errors() {
        let lut = LutSet::new();
        assert_eq!(lut.read_gate(gid(4)), Err(LutError::UnprogrammedGate(4)));

        let mut lut = LutSet::new();
        lut.write_glut(gid(4), GateRange { start: 0, end: 0 }).unwrap();
        assert_eq!(lut.read_gate(gid(4)), Err(LutError::UnprogrammedMlut(0)));
        lut.write_mlut(0, 9).unwrap();
        assert_eq!(lut.read_gate(gid(4)), Err(LutError::UnprogrammedPlut(9)));
    }

    #[test]
    fn readout_iterator_yields_range_length() {
        let mut lut = LutSet::new();
        for a in 0..5u16 {
            lut.write_plut(a, seg(WaveformParam::Phase, Tone::T0, a as i64)).unwrap();
            lut.write_mlut(a, a).unwrap();
        }
        lut.write_glut(gid(2), GateRange { start: 1, end: 3 }).unwrap();
        assert_eq!(lut.readout(gid(2)).unwrap().count(), 3);
    }

    /// A single-gate sequencing word expands to one segment per parameter
    /// FIFO: 8 segments, 2 kbit of stream data in raw form.
    #[test]
    fn eight_parameter_gate_feeds_all_fifos() {
        let mut luts = channel_luts(1);
        let mut entries = Vec::new();
        let mut addr = 0u16;
        for tone in Tone::ALL {
            for param in WaveformParam::ALL {
                luts[0]
                    .write_plut(addr, seg(param, tone, addr as i64))
                    .unwrap();
                luts[0].write_mlut(addr, addr).unwrap();
                entries.push(addr);
                addr += 1;
            }
        }
        luts[0].write_glut(gid(0), GateRange { start: 0, end: 7 }).unwrap();

        let word = encode_word(&crate::codec::TransferWord::Sequence(
            pack_gate_ids(&[gid(0)], ChannelMask::single(0)).unwrap(),
        ))
        .unwrap();
        let routed = process_word(&word, &mut luts).unwrap();
        assert_eq!(routed.len(), 8);
        let mut engines: Vec<usize> = routed.iter().map(|r| r.engine).collect();
        engines.sort_unstable();
        assert_eq!(engines, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn programming_words_emit_no_routing() {
        let mut luts = channel_luts(2);
        let word = encode_word(&crate::codec::TransferWord::Programming(
            ProgrammingWord::Glut {
                channels: ChannelMask(0b11),
                entries: vec![GlutRecord::new(gid(3), 0, 1).unwrap()],
            },
        ))
        .unwrap();
        assert!(process_word(&word, &mut luts).unwrap().is_empty());
        assert_eq!(luts[0].gate_range(gid(3)).unwrap(), GateRange { start: 0, end: 1 });
        assert_eq!(luts[1].gate_range(gid(3)).unwrap(), GateRange { start: 0, end: 1 });
    }

    #[test]
    fn two_channel_mask_duplicates_single_channel_runs() {
        let make_lut = || {
            let mut lut = LutSet::new();
            lut.write_plut(0, seg(WaveformParam::Frequency, Tone::T0, 5)).unwrap();
            lut.write_plut(1, seg(WaveformParam::Amplitude, Tone::T0, 6)).unwrap();
            lut.write_mlut(0, 0).unwrap();
            lut.write_mlut(1, 1).unwrap();
            lut.write_glut(gid(0), GateRange { start: 0, end: 1 }).unwrap();
            lut
        };
        let mut both = vec![make_lut(), make_lut()];
        let word = encode_word(&crate::codec::TransferWord::Sequence(
            pack_gate_ids(&[gid(0)], ChannelMask(0b11)).unwrap(),
        ))
        .unwrap();
        let routed = process_word(&word, &mut both).unwrap();

        let mut singles = Vec::new();
        for ch in 0..2u8 {
            let mut luts = vec![make_lut(), make_lut()];
            let w = encode_word(&crate::codec::TransferWord::Sequence(
                pack_gate_ids(&[gid(0)], ChannelMask::single(ch)).unwrap(),
            ))
            .unwrap();
            singles.extend(process_word(&w, &mut luts).unwrap());
        }
        assert_eq!(routed, singles);
    }

    #[test]
    fn snapshot_round_trip() {
        let mut lut = LutSet::new();
        lut.write_plut(11, seg(WaveformParam::FrameRotation, Tone::T1, -99)).unwrap();
        lut.write_mlut(40, 11).unwrap();
        lut.write_glut(gid(7), GateRange { start: 40, end: 40 }).unwrap();
        let snap = lut.snapshot();
        let json = serde_json::to_string(&snap).unwrap();
        let restored = LutSet::restore(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(restored.read_gate(gid(7)).unwrap(), lut.read_gate(gid(7)).unwrap());
    }

    /// Total pulse-LUT capacity: 32,768 segments of 216 bits is 864 KiB,
    /// under half of the 2.8125 MiB on-chip RAM budget.
    #[test]
    fn plut_storage_arithmetic() {
        let storage = plut_storage();
        assert_eq!(storage.total_entries, 32_768);
        assert_eq!(storage.total_bytes, 864 * 1024);
        let uram_bytes = 80 * 288 * 1024 / 8;
        assert_eq!(uram_bytes, 2_949_120); // 2.8125 MiB
        assert!(storage.total_bytes <= uram_bytes / 2);
    }
}
