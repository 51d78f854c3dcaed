//! Digital datapath model of an RF gate sequencer: the compressed word
//! formats on the streaming interface, the GLUT/MLUT/PLUT memory hierarchy,
//! forward-difference spline engines, and a dual-tone DDS with global phase
//! synchronization, frame rotations, feedforward and crosstalk cancellation.

pub mod codec;
pub mod dds;
pub mod lut;
pub mod sim;
pub mod spline;
pub mod word;

pub use codec::{
    decode_segment, decode_word, encode_segment, encode_word, pack_gate_ids, ChannelMask,
    CodecError, GateId, GateSequenceWord, GlutRecord, ProgrammingWord, SegmentMeta,
    SplineSegmentWord, Tone, TransferWord, WaveformParam,
};
pub use lut::{process_word, GateRange, LutError, LutSet, RoutedSegment};
pub use sim::{simulate_stream, SimConfig, SimError, SimTrace, Simulator};
pub use spline::{to_forward_difference, EngineBank, SplineEngine, SplineError};
pub use word::{read_stream, stream_from_bytes, stream_to_bytes, write_stream, Word256};
