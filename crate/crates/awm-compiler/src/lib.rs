//! Pulse compiler: gate definitions in, LUT programs and word streams out.

pub mod fit;
pub mod gates;
pub mod program;

pub use fit::{fit_segments, FitError};
pub use gates::{
    load_circuit_file, load_gate_file, ChannelGate, CircuitFile, FrameMode, GateDefinition,
    GateFile, GateFileError, ParamSpec, ToneSpec,
};
pub use program::{
    compile, emit_raw_stream, AllocationReport, CompileError, CompiledProgram, WordCounts,
};
