//! Compilation of gate libraries into LUT programming and sequencing word
//! streams, plus the LUT-bypass raw stream and in-place delta updates.
//!
//! Segments are distilled to unique entries per channel (content-addressed
//! pulse LUT), each gate's segments occupy a contiguous MLUT range in engine
//! slot order, and gate IDs are assigned densely in first-use order. The
//! same allocation inputs always produce the same word stream.

use crate::fit::{fit_segments, FitError};
use crate::gates::{FrameMode, GateDefinition, ToneSpec};
use awm_sequencer::codec::{
    encode_word, ChannelMask, CodecError, GateId, GlutRecord, ProgrammingWord, SegmentMeta,
    SplineSegmentWord, Tone, TransferWord, WaveformParam, MAX_GLUT_RECORDS, MAX_MLUT_RECORDS,
    MAX_PACKED_IDS,
};
use awm_sequencer::lut::{GLUT_DEPTH, MLUT_DEPTH, PLUT_DEPTH};
use awm_sequencer::word::Word256;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, thiserror::Error)]
pub enum CompileError {
    #[error("gate `{0}` referenced by the circuit is not defined")]
    UnknownGate(String),
    #[error("gate `{gate}`: {source}")]
    Fit {
        gate: String,
        #[source]
        source: FitError,
    },
    #[error("{table} capacity exceeded on channel {channel} ({needed} entries, depth {depth}); dynamic reprogramming required")]
    CapacityExceeded {
        table: &'static str,
        channel: u8,
        needed: usize,
        depth: usize,
    },
    #[error("gate `{gate}` is not programmed on channel {channel}")]
    GateNotOnChannel { gate: String, channel: u8 },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Word-count statistics of a compiled program.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct WordCounts {
    pub plut_words: usize,
    pub mlut_words: usize,
    pub glut_words: usize,
    pub sequence_words: usize,
}

impl WordCounts {
    pub fn programming(&self) -> usize {
        self.plut_words + self.mlut_words + self.glut_words
    }

    pub fn total(&self) -> usize {
        self.programming() + self.sequence_words
    }
}

/// Where one gate lives in a channel's MLUT.
#[derive(Debug, Clone, Serialize)]
pub struct GateLayout {
    pub mlut_start: u16,
    pub mlut_end: u16,
    /// Per engine slot: offset of the slot's segments inside the gate range
    /// and their count.
    pub param_slices: [(u16, u16); 8],
}

/// Allocation state of one channel: the PLUT image with its dedup index and
/// reference counts, the MLUT image, and per-gate layouts.
#[derive(Debug, Clone)]
struct ChannelAllocation {
    plut: Vec<Option<SplineSegmentWord>>,
    dedup: HashMap<SplineSegmentWord, u16>,
    refcount: Vec<u32>,
    next_plut: usize,
    mlut: Vec<Option<u16>>,
    next_mlut: usize,
    gates: BTreeMap<u16, GateLayout>,
}

impl ChannelAllocation {
    fn new() -> Self {
        ChannelAllocation {
            plut: vec![None; PLUT_DEPTH],
            dedup: HashMap::new(),
            refcount: vec![0; PLUT_DEPTH],
            next_plut: 0,
            mlut: vec![None; MLUT_DEPTH],
            next_mlut: 0,
            gates: BTreeMap::new(),
        }
    }

    /// Dedup-aware segment allocation. Returns the PLUT address and whether
    /// a fresh entry was written.
    fn intern(
        &mut self,
        channel: u8,
        seg: SplineSegmentWord,
    ) -> Result<(u16, bool), CompileError> {
        if let Some(&addr) = self.dedup.get(&seg) {
            self.refcount[addr as usize] += 1;
            return Ok((addr, false));
        }
        if self.next_plut >= PLUT_DEPTH {
            return Err(CompileError::CapacityExceeded {
                table: "PLUT",
                channel,
                needed: self.next_plut + 1,
                depth: PLUT_DEPTH,
            });
        }
        let addr = self.next_plut as u16;
        self.next_plut += 1;
        self.plut[addr as usize] = Some(seg);
        self.dedup.insert(seg, addr);
        self.refcount[addr as usize] = 1;
        Ok((addr, true))
    }

    fn append_mlut(&mut self, channel: u8, plut_addr: u16) -> Result<u16, CompileError> {
        if self.next_mlut >= MLUT_DEPTH {
            return Err(CompileError::CapacityExceeded {
                table: "MLUT",
                channel,
                needed: self.next_mlut + 1,
                depth: MLUT_DEPTH,
            });
        }
        let addr = self.next_mlut as u16;
        self.next_mlut += 1;
        self.mlut[addr as usize] = Some(plut_addr);
        Ok(addr)
    }

    fn release(&mut self, addr: u16) {
        let rc = &mut self.refcount[addr as usize];
        *rc = rc.saturating_sub(1);
        if *rc == 0 {
            // entry is dead: drop it from the dedup index so future interns
            // do not alias it, but do not reuse the address (freed addresses
            // are only reclaimed by a full recompile)
            if let Some(seg) = self.plut[addr as usize] {
                self.dedup.remove(&seg);
            }
        }
    }
}

/// A compiled circuit: the programming and sequencing word streams plus the
/// allocation state needed for delta updates.
#[derive(Debug, Clone)]
pub struct CompiledProgram {
    pub programming_words: Vec<Word256>,
    pub sequencing_words: Vec<Word256>,
    pub counts: WordCounts,
    gate_ids: BTreeMap<String, u16>,
    channels: BTreeMap<u8, ChannelAllocation>,
    definitions: BTreeMap<String, GateDefinition>,
    circuit: Vec<String>,
}

/// Metadata flags for the segments of one engine slot within a gate.
fn slot_segments(
    gate: &GateDefinition,
    channel: u8,
    tone: Tone,
    param: WaveformParam,
) -> Result<Vec<SplineSegmentWord>, FitError> {
    let spec: &ToneSpec = gate.channels[&channel].tone(tone.index());
    let (param_spec, frame_mode) = match param {
        WaveformParam::Frequency => (&spec.frequency, FrameMode::None),
        WaveformParam::Amplitude => (&spec.amplitude, FrameMode::None),
        WaveformParam::Phase => (&spec.phase, FrameMode::None),
        WaveformParam::FrameRotation => (&spec.frame, spec.frame_mode),
    };
    let meta = SegmentMeta::new(param, tone);
    let mut segments = fit_segments(param_spec, gate.duration, meta)?;
    match param {
        WaveformParam::Frequency => {
            if spec.sync {
                segments[0].meta.sync_on_start = true;
            }
            if spec.ffwd {
                for s in &mut segments {
                    s.meta.ffwd_enable = true;
                }
            }
        }
        WaveformParam::FrameRotation => match frame_mode {
            FrameMode::None => {}
            FrameMode::Accumulate => {
                for s in &mut segments {
                    s.meta.frame_apply = true;
                }
            }
            FrameMode::Final => {
                let last = segments.len() - 1;
                segments[last].meta.frame_apply = true;
                segments[last].meta.frame_final_only = true;
            }
        },
        _ => {}
    }
    Ok(segments)
}

/// All eight engine-slot segment lists of a gate on one channel, in bank
/// order.
fn gate_segments(
    gate: &GateDefinition,
    channel: u8,
) -> Result<Vec<Vec<SplineSegmentWord>>, FitError> {
    let mut slots = Vec::with_capacity(8);
    for tone in Tone::ALL {
        for param in WaveformParam::ALL {
            slots.push(slot_segments(gate, channel, tone, param)?);
        }
    }
    Ok(slots)
}

fn chunk_words<T: Clone, F>(items: &[T], size: usize, mut build: F) -> Result<Vec<Word256>, CompileError>
where
    F: FnMut(Vec<T>) -> Result<Word256, CodecError>,
{
    items
        .chunks(size)
        .map(|c| build(c.to_vec()).map_err(CompileError::from))
        .collect()
}

/// Compile a circuit over a gate library into LUT programming words and
/// packed sequencing words.
pub fn compile(gates: &[GateDefinition], circuit: &[String]) -> Result<CompiledProgram, CompileError> {
    let library: BTreeMap<String, GateDefinition> =
        gates.iter().map(|g| (g.name.clone(), g.clone())).collect();

    // dense gate IDs in first-use order
    let mut gate_ids: BTreeMap<String, u16> = BTreeMap::new();
    let mut used_order: Vec<String> = Vec::new();
    for name in circuit {
        if !library.contains_key(name) {
            return Err(CompileError::UnknownGate(name.clone()));
        }
        if !gate_ids.contains_key(name) {
            if used_order.len() >= GLUT_DEPTH {
                return Err(CompileError::CapacityExceeded {
                    table: "GLUT",
                    channel: 0,
                    needed: used_order.len() + 1,
                    depth: GLUT_DEPTH,
                });
            }
            gate_ids.insert(name.clone(), used_order.len() as u16);
            used_order.push(name.clone());
        }
    }

    let mut channels: BTreeMap<u8, ChannelAllocation> = BTreeMap::new();
    // per channel emission logs, in allocation order
    let mut plut_writes: BTreeMap<u8, Vec<(u16, SplineSegmentWord)>> = BTreeMap::new();
    let mut mlut_writes: BTreeMap<u8, Vec<(u16, u16)>> = BTreeMap::new();
    let mut glut_records: BTreeMap<u8, Vec<GlutRecord>> = BTreeMap::new();

    for name in &used_order {
        let gate = &library[name];
        let id = gate_ids[name];
        for &channel in gate.channels.keys() {
            let alloc = channels.entry(channel).or_insert_with(ChannelAllocation::new);
            let slots = gate_segments(gate, channel).map_err(|source| CompileError::Fit {
                gate: name.clone(),
                source,
            })?;
            let mlut_start = alloc.next_mlut as u16;
            let mut param_slices = [(0u16, 0u16); 8];
            let mut offset = 0u16;
            for (slot, segments) in slots.iter().enumerate() {
                param_slices[slot] = (offset, segments.len() as u16);
                for seg in segments {
                    let (addr, fresh) = alloc.intern(channel, *seg)?;
                    if fresh {
                        plut_writes.entry(channel).or_default().push((addr, *seg));
                    }
                    let mlut_addr = alloc.append_mlut(channel, addr)?;
                    mlut_writes.entry(channel).or_default().push((mlut_addr, addr));
                }
                offset += segments.len() as u16;
            }
            let mlut_end = alloc.next_mlut as u16 - 1;
            alloc.gates.insert(
                id,
                GateLayout {
                    mlut_start,
                    mlut_end,
                    param_slices,
                },
            );
            glut_records
                .entry(channel)
                .or_default()
                .push(GlutRecord::new(GateId::new(id)?, mlut_start, mlut_end)?);
        }
    }

    // emit programming words channel by channel: PLUT, then MLUT, then GLUT
    let mut programming_words = Vec::new();
    let mut counts = WordCounts::default();
    for (&channel, _) in &channels {
        let mask = ChannelMask::single(channel);
        if let Some(writes) = plut_writes.get(&channel) {
            for (addr, segment) in writes {
                programming_words.push(encode_word(&TransferWord::Programming(
                    ProgrammingWord::Plut {
                        channels: mask,
                        addr: *addr,
                        segment: *segment,
                    },
                ))?);
                counts.plut_words += 1;
            }
        }
        if let Some(writes) = mlut_writes.get(&channel) {
            let words = chunk_words(writes, MAX_MLUT_RECORDS, |entries| {
                encode_word(&TransferWord::Programming(ProgrammingWord::Mlut {
                    channels: mask,
                    entries,
                }))
            })?;
            counts.mlut_words += words.len();
            programming_words.extend(words);
        }
        if let Some(records) = glut_records.get(&channel) {
            let words = chunk_words(records, MAX_GLUT_RECORDS, |entries| {
                encode_word(&TransferWord::Programming(ProgrammingWord::Glut {
                    channels: mask,
                    entries,
                }))
            })?;
            counts.glut_words += words.len();
            programming_words.extend(words);
        }
    }

    // per-channel sequencing words: the circuit's IDs for gates present on
    // that channel, packed up to 20 per word
    let mut sequencing_words = Vec::new();
    for (&channel, _) in &channels {
        let mask = ChannelMask::single(channel);
        let ids: Vec<GateId> = circuit
            .iter()
            .filter(|name| library[*name].channels.contains_key(&channel))
            .map(|name| GateId::new(gate_ids[name]))
            .collect::<Result<_, _>>()?;
        let words = chunk_words(&ids, MAX_PACKED_IDS, |chunk| {
            encode_word(&TransferWord::Sequence(awm_sequencer::codec::pack_gate_ids(
                &chunk, mask,
            )?))
        })?;
        counts.sequence_words += words.len();
        sequencing_words.extend(words);
    }

    Ok(CompiledProgram {
        programming_words,
        sequencing_words,
        counts,
        gate_ids,
        channels,
        definitions: library,
        circuit: circuit.to_vec(),
    })
}

impl CompiledProgram {
    /// The full stream: programming words followed by sequencing words.
    pub fn stream(&self) -> Vec<Word256> {
        let mut words = self.programming_words.clone();
        words.extend_from_slice(&self.sequencing_words);
        words
    }

    pub fn gate_id(&self, name: &str) -> Option<u16> {
        self.gate_ids.get(name).copied()
    }

    pub fn circuit(&self) -> &[String] {
        &self.circuit
    }

    /// Re-fit one parameter of a gate and emit only the words needed to
    /// update the programmed LUTs. Identical data emits nothing; a changed
    /// segment whose PLUT entry is unshared is patched in place (one PLUT
    /// word); shared or resized data falls back to fresh allocations plus
    /// MLUT/GLUT rewrites.
    pub fn delta_update(
        &mut self,
        gate_name: &str,
        channel: u8,
        tone: Tone,
        param: WaveformParam,
        new_spec: crate::gates::ParamSpec,
    ) -> Result<Vec<Word256>, CompileError> {
        let gate = self
            .definitions
            .get(gate_name)
            .ok_or_else(|| CompileError::UnknownGate(gate_name.to_string()))?
            .clone();
        let id = *self
            .gate_ids
            .get(gate_name)
            .ok_or_else(|| CompileError::UnknownGate(gate_name.to_string()))?;
        if !gate.channels.contains_key(&channel) {
            return Err(CompileError::GateNotOnChannel {
                gate: gate_name.to_string(),
                channel,
            });
        }

        // updated definition drives the refit so tone directives persist
        let mut updated = gate.clone();
        {
            let tone_spec = updated
                .channels
                .get_mut(&channel)
                .expect("checked above")
                .tone_mut(tone.index());
            match param {
                WaveformParam::Frequency => tone_spec.frequency = new_spec.clone(),
                WaveformParam::Amplitude => tone_spec.amplitude = new_spec.clone(),
                WaveformParam::Phase => tone_spec.phase = new_spec.clone(),
                WaveformParam::FrameRotation => tone_spec.frame = new_spec.clone(),
            }
        }
        let slot = tone.index() * 4 + param.tag() as usize;
        let new_segments = slot_segments(&updated, channel, tone, param).map_err(|source| {
            CompileError::Fit {
                gate: gate_name.to_string(),
                source,
            }
        })?;

        let alloc = self.channels.get_mut(&channel).expect("allocated channel");
        let layout = alloc.gates.get(&id).expect("gate layout").clone();
        let (offset, len) = layout.param_slices[slot];
        let slot_base = layout.mlut_start + offset;

        let mask = ChannelMask::single(channel);
        let mut plut_programming: Vec<(u16, SplineSegmentWord)> = Vec::new();
        let mut mlut_changes: Vec<(u16, u16)> = Vec::new();

        if new_segments.len() == len as usize {
            for (k, new_seg) in new_segments.iter().enumerate() {
                let mlut_addr = slot_base + k as u16;
                let old_plut = alloc.mlut[mlut_addr as usize].expect("programmed slot");
                let old_seg = alloc.plut[old_plut as usize].expect("programmed entry");
                if old_seg == *new_seg {
                    continue;
                }
                if let Some(&existing) = alloc.dedup.get(new_seg) {
                    // repoint to the already-stored copy
                    alloc.refcount[existing as usize] += 1;
                    alloc.release(old_plut);
                    alloc.mlut[mlut_addr as usize] = Some(existing);
                    mlut_changes.push((mlut_addr, existing));
                } else if alloc.refcount[old_plut as usize] == 1 {
                    // sole user: patch the PLUT entry in place
                    alloc.dedup.remove(&old_seg);
                    alloc.plut[old_plut as usize] = Some(*new_seg);
                    alloc.dedup.insert(*new_seg, old_plut);
                    plut_programming.push((old_plut, *new_seg));
                } else {
                    let (addr, fresh) = alloc.intern(channel, *new_seg)?;
                    alloc.release(old_plut);
                    alloc.mlut[mlut_addr as usize] = Some(addr);
                    mlut_changes.push((mlut_addr, addr));
                    if fresh {
                        plut_programming.push((addr, *new_seg));
                    }
                }
            }
        } else {
            // segment count changed: rebuild the gate's MLUT range with the
            // other slots' existing addresses and fresh entries for this one
            let mut new_range: Vec<u16> = Vec::new();
            let mut param_slices = [(0u16, 0u16); 8];
            let mut cursor = 0u16;
            for s in 0..8 {
                let (s_off, s_len) = layout.param_slices[s];
                if s == slot {
                    param_slices[s] = (cursor, new_segments.len() as u16);
                    for seg in &new_segments {
                        let (addr, fresh) = alloc.intern(channel, *seg)?;
                        if fresh {
                            plut_programming.push((addr, *seg));
                        }
                        new_range.push(addr);
                    }
                    cursor += new_segments.len() as u16;
                    for k in 0..s_len {
                        let old = alloc.mlut[(layout.mlut_start + s_off + k) as usize]
                            .expect("programmed slot");
                        alloc.release(old);
                    }
                } else {
                    param_slices[s] = (cursor, s_len);
                    for k in 0..s_len {
                        let addr = alloc.mlut[(layout.mlut_start + s_off + k) as usize]
                            .expect("programmed slot");
                        new_range.push(addr);
                    }
                    cursor += s_len;
                }
            }
            let new_start = alloc.next_mlut as u16;
            for (k, addr) in new_range.iter().enumerate() {
                let mlut_addr = alloc.append_mlut(channel, *addr)?;
                debug_assert_eq!(mlut_addr, new_start + k as u16);
                mlut_changes.push((mlut_addr, *addr));
            }
            let new_end = alloc.next_mlut as u16 - 1;
            alloc.gates.insert(
                id,
                GateLayout {
                    mlut_start: new_start,
                    mlut_end: new_end,
                    param_slices,
                },
            );
        }

        let mut words = Vec::new();
        for (addr, segment) in &plut_programming {
            words.push(encode_word(&TransferWord::Programming(ProgrammingWord::Plut {
                channels: mask,
                addr: *addr,
                segment: *segment,
            }))?);
        }
        if !mlut_changes.is_empty() {
            words.extend(chunk_words(&mlut_changes, MAX_MLUT_RECORDS, |entries| {
                encode_word(&TransferWord::Programming(ProgrammingWord::Mlut {
                    channels: mask,
                    entries,
                }))
            })?);
        }
        if new_segments.len() != len as usize {
            let layout = &self.channels[&channel].gates[&id];
            words.push(encode_word(&TransferWord::Programming(ProgrammingWord::Glut {
                channels: mask,
                entries: vec![GlutRecord::new(
                    GateId::new(id)?,
                    layout.mlut_start,
                    layout.mlut_end,
                )?],
            }))?);
        }

        self.definitions.insert(gate_name.to_string(), updated);
        Ok(words)
    }

    /// Allocation summary for reports.
    pub fn report(&self) -> AllocationReport {
        AllocationReport {
            word_counts: self.counts,
            total_stream_words: self.counts.total(),
            gate_ids: self.gate_ids.clone(),
            channels: self
                .channels
                .iter()
                .map(|(&ch, alloc)| {
                    (
                        ch,
                        ChannelReport {
                            plut_entries: alloc.next_plut,
                            mlut_entries: alloc.next_mlut,
                            gates: self
                                .gate_ids
                                .iter()
                                .filter_map(|(name, id)| {
                                    alloc.gates.get(id).map(|layout| {
                                        (
                                            name.clone(),
                                            GateRangeReport {
                                                id: *id,
                                                mlut_start: layout.mlut_start,
                                                mlut_end: layout.mlut_end,
                                            },
                                        )
                                    })
                                })
                                .collect(),
                        },
                    )
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GateRangeReport {
    pub id: u16,
    pub mlut_start: u16,
    pub mlut_end: u16,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelReport {
    pub plut_entries: usize,
    pub mlut_entries: usize,
    pub gates: BTreeMap<String, GateRangeReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AllocationReport {
    pub word_counts: WordCounts,
    pub total_stream_words: usize,
    pub gate_ids: BTreeMap<String, u16>,
    pub channels: BTreeMap<u8, ChannelReport>,
}

/// Emit the LUT-bypass stream: one carrier word per segment, per channel,
/// in gate order. Gates with eight constant parameters cost eight words per
/// channel.
pub fn emit_raw_stream(
    gates: &[GateDefinition],
    circuit: &[String],
) -> Result<Vec<Word256>, CompileError> {
    let library: BTreeMap<&str, &GateDefinition> =
        gates.iter().map(|g| (g.name.as_str(), g)).collect();
    let mut words = Vec::new();
    for name in circuit {
        let gate = library
            .get(name.as_str())
            .ok_or_else(|| CompileError::UnknownGate(name.clone()))?;
        for &channel in gate.channels.keys() {
            let slots = gate_segments(gate, channel).map_err(|source| CompileError::Fit {
                gate: name.clone(),
                source,
            })?;
            for segments in slots {
                for segment in segments {
                    words.push(encode_word(&TransferWord::Raw {
                        channels: ChannelMask::single(channel),
                        segment,
                    })?);
                }
            }
        }
    }
    Ok(words)
}
