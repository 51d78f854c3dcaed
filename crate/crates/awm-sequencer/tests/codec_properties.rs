//! Property tests for the word codec and the LUT expansion path.

use awm_sequencer::codec::{
    decode_word, encode_word, ChannelMask, GateId, GateSequenceWord, GlutRecord, ProgrammingWord,
    SegmentMeta, SplineSegmentWord, Tone, TransferWord, WaveformParam, COEFF_MAX, COEFF_MIN,
    MAX_GLUT_RECORDS, MAX_MLUT_RECORDS, MAX_PACKED_IDS,
};
use awm_sequencer::lut::{channel_luts, process_transfer};
use proptest::prelude::*;

fn arb_meta() -> impl Strategy<Value = SegmentMeta> {
    (0u8..4, 0usize..2, any::<[bool; 4]>()).prop_map(|(tag, tone, flags)| SegmentMeta {
        param: WaveformParam::from_tag(tag).unwrap(),
        tone: Tone::from_index(tone),
        frame_apply: flags[0],
        frame_final_only: flags[1],
        sync_on_start: flags[2],
        ffwd_enable: flags[3],
    })
}

fn arb_segment() -> impl Strategy<Value = SplineSegmentWord> {
    (
        arb_meta(),
        1u64..=(1 << 40) - 1,
        prop::array::uniform4(COEFF_MIN..=COEFF_MAX),
    )
        .prop_map(|(meta, tau, u)| SplineSegmentWord {
            meta,
            tau,
            u0: u[0],
            u1: u[1],
            u2: u[2],
            u3: u[3],
        })
}

fn arb_gate_id() -> impl Strategy<Value = GateId> {
    (0u16..2048).prop_map(|id| GateId::new(id).unwrap())
}

fn arb_sequence() -> impl Strategy<Value = GateSequenceWord> {
    (
        prop::collection::vec(arb_gate_id(), 1..=MAX_PACKED_IDS),
        any::<u8>(),
    )
        .prop_map(|(ids, mask)| GateSequenceWord {
            ids,
            routing: ChannelMask(mask),
        })
}

fn arb_programming() -> impl Strategy<Value = ProgrammingWord> {
    let plut = (any::<u8>(), 0u16..4096, arb_segment()).prop_map(|(mask, addr, segment)| {
        ProgrammingWord::Plut {
            channels: ChannelMask(mask),
            addr,
            segment,
        }
    });
    let mlut = (
        any::<u8>(),
        prop::collection::vec((0u16..4096, 0u16..4096), 1..=MAX_MLUT_RECORDS),
    )
        .prop_map(|(mask, entries)| ProgrammingWord::Mlut {
            channels: ChannelMask(mask),
            entries,
        });
    let glut = (
        any::<u8>(),
        prop::collection::vec((arb_gate_id(), 0u16..4096, 0u16..4096), 1..=MAX_GLUT_RECORDS),
    )
        .prop_map(|(mask, recs)| ProgrammingWord::Glut {
            channels: ChannelMask(mask),
            entries: recs
                .into_iter()
                .map(|(gate, a, b)| GlutRecord::new(gate, a.min(b), a.max(b)).unwrap())
                .collect(),
        });
    prop_oneof![plut, mlut, glut]
}

fn arb_word() -> impl Strategy<Value = TransferWord> {
    prop_oneof![
        (any::<u8>(), arb_segment()).prop_map(|(mask, segment)| TransferWord::Raw {
            channels: ChannelMask(mask),
            segment,
        }),
        arb_sequence().prop_map(TransferWord::Sequence),
        arb_programming().prop_map(TransferWord::Programming),
    ]
}

proptest! {
    /// decode . encode is the identity on every word variant.
    #[test]
    fn decode_encode_identity(word in arb_word()) {
        let block = encode_word(&word).unwrap();
        prop_assert_eq!(decode_word(&block).unwrap(), word);
    }

    /// Streaming a programmed gate yields exactly the segments the PLUT
    /// holds, in MLUT order, for every parameter FIFO.
    #[test]
    fn lut_expansion_matches_inlined_segments(
        segments in prop::collection::vec(arb_segment(), 1..24),
        gate in arb_gate_id(),
    ) {
        let mut luts = channel_luts(1);
        let mask = ChannelMask::single(0);
        for (i, seg) in segments.iter().enumerate() {
            let prog = ProgrammingWord::Plut { channels: mask, addr: i as u16, segment: *seg };
            process_transfer(&TransferWord::Programming(prog), &mut luts).unwrap();
            let map = ProgrammingWord::Mlut { channels: mask, entries: vec![(i as u16, i as u16)] };
            process_transfer(&TransferWord::Programming(map), &mut luts).unwrap();
        }
        let glut = ProgrammingWord::Glut {
            channels: mask,
            entries: vec![GlutRecord::new(gate, 0, segments.len() as u16 - 1).unwrap()],
        };
        process_transfer(&TransferWord::Programming(glut), &mut luts).unwrap();

        let seq = TransferWord::Sequence(GateSequenceWord { ids: vec![gate], routing: mask });
        let routed = process_transfer(&seq, &mut luts).unwrap();
        let got: Vec<_> = routed.iter().map(|r| r.segment).collect();
        prop_assert_eq!(got, segments.clone());

        // raw-mode inlining of the same segments routes identically
        let mut raw_routed = Vec::new();
        for seg in &segments {
            let word = TransferWord::Raw { channels: mask, segment: *seg };
            raw_routed.extend(process_transfer(&word, &mut luts).unwrap());
        }
        prop_assert_eq!(routed, raw_routed);
    }
}
