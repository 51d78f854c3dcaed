//! High-level gate definitions and their file representation.
//!
//! A gate names, per output channel and per tone, how each of the four
//! waveform parameters behaves over the gate's duration: either a constant
//! value or a list of spline knots. Gate libraries load from TOML or JSON
//! documents; both map onto the same serde structures.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum GateFileError {
    #[error("gate `{gate}`: {message}")]
    Invalid { gate: String, message: String },
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One waveform parameter over a gate: constant or knot-specified spline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamSpec {
    Constant { constant: f64 },
    Knots { knots: Vec<(u64, f64)> },
}

impl Default for ParamSpec {
    fn default() -> Self {
        ParamSpec::Constant { constant: 0.0 }
    }
}

impl ParamSpec {
    pub fn constant(value: f64) -> Self {
        ParamSpec::Constant { constant: value }
    }

    pub fn knots(knots: Vec<(u64, f64)>) -> Self {
        ParamSpec::Knots { knots }
    }
}

/// How the frame-rotation parameter feeds the phase accumulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameMode {
    /// Frame values are not accumulated.
    #[default]
    None,
    /// Every sample accumulates (the trajectory's integral lands in the
    /// accumulator).
    Accumulate,
    /// Only the final sample of the gate accumulates.
    Final,
}

/// Per-tone parameter specification.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToneSpec {
    pub frequency: ParamSpec,
    pub amplitude: ParamSpec,
    pub phase: ParamSpec,
    pub frame: ParamSpec,
    pub frame_mode: FrameMode,
    /// Synchronize the tone to the global phase at gate start.
    pub sync: bool,
    /// Apply the feedforward correction during this gate.
    pub ffwd: bool,
}

/// Parameters of one gate on one output channel.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelGate {
    pub tone0: ToneSpec,
    pub tone1: ToneSpec,
}

impl ChannelGate {
    pub fn tone(&self, index: usize) -> &ToneSpec {
        if index == 0 {
            &self.tone0
        } else {
            &self.tone1
        }
    }

    pub fn tone_mut(&mut self, index: usize) -> &mut ToneSpec {
        if index == 0 {
            &mut self.tone0
        } else {
            &mut self.tone1
        }
    }
}

/// A named gate: duration in sequencer cycles plus per-channel parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateDefinition {
    pub name: String,
    pub duration: u64,
    #[serde(
        deserialize_with = "de_channel_keys",
        serialize_with = "ser_channel_keys"
    )]
    pub channels: BTreeMap<u8, ChannelGate>,
}

// TOML/JSON table keys are strings; channel numbers round-trip through them.
fn de_channel_keys<'de, D>(d: D) -> Result<BTreeMap<u8, ChannelGate>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let raw = BTreeMap::<String, ChannelGate>::deserialize(d)?;
    raw.into_iter()
        .map(|(k, v)| {
            k.parse::<u8>()
                .map(|ch| (ch, v))
                .map_err(|_| serde::de::Error::custom(format!("channel key `{k}` is not an integer")))
        })
        .collect()
}

fn ser_channel_keys<S>(map: &BTreeMap<u8, ChannelGate>, s: S) -> Result<S::Ok, S::Error>
where
    S: serde::Serializer,
{
    use serde::ser::SerializeMap;
    let mut m = s.serialize_map(Some(map.len()))?;
    for (k, v) in map {
        m.serialize_entry(&k.to_string(), v)?;
    }
    m.end()
}

impl GateDefinition {
    /// Check structural invariants: duration at least one cycle, knot times
    /// strictly increasing from 0 to the duration.
    pub fn validate(&self) -> Result<(), GateFileError> {
        let fail = |message: String| GateFileError::Invalid {
            gate: self.name.clone(),
            message,
        };
        if self.duration == 0 {
            return Err(fail("duration must be at least one cycle".into()));
        }
        if self.channels.is_empty() {
            return Err(fail("gate defines no channels".into()));
        }
        for (&channel, cg) in &self.channels {
            if channel >= 8 {
                return Err(fail(format!("channel {channel} out of range 0..8")));
            }
            for tone in 0..2 {
                let spec = cg.tone(tone);
                for (label, param) in [
                    ("frequency", &spec.frequency),
                    ("amplitude", &spec.amplitude),
                    ("phase", &spec.phase),
                    ("frame", &spec.frame),
                ] {
                    if let ParamSpec::Knots { knots } = param {
                        if knots.len() < 2 {
                            return Err(fail(format!(
                                "channel {channel} tone{tone} {label}: needs at least 2 knots"
                            )));
                        }
                        if knots[0].0 != 0 {
                            return Err(fail(format!(
                                "channel {channel} tone{tone} {label}: first knot must be at time 0"
                            )));
                        }
                        if knots[knots.len() - 1].0 != self.duration {
                            return Err(fail(format!(
                                "channel {channel} tone{tone} {label}: last knot must be at the gate duration"
                            )));
                        }
                        if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
                            return Err(fail(format!(
                                "channel {channel} tone{tone} {label}: knot times must strictly increase"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// A gate library document.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateFile {
    #[serde(rename = "gate", default)]
    pub gates: Vec<GateDefinition>,
}

/// Circuit: the gate names to sequence, in execution order.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitFile {
    pub circuit: Vec<String>,
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, GateFileError> {
    let is_json = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    let result = if is_json {
        serde_json::from_str(text).map_err(|e| e.to_string())
    } else {
        toml::from_str(text).map_err(|e| e.to_string())
    };
    result.map_err(|message| GateFileError::Parse {
        path: path.display().to_string(),
        message,
    })
}

pub fn load_gate_file(path: &Path) -> Result<Vec<GateDefinition>, GateFileError> {
    let text = std::fs::read_to_string(path)?;
    let file: GateFile = parse(path, &text)?;
    for gate in &file.gates {
        gate.validate()?;
    }
    Ok(file.gates)
}

pub fn load_circuit_file(path: &Path) -> Result<Vec<String>, GateFileError> {
    let text = std::fs::read_to_string(path)?;
    let file: CircuitFile = parse(path, &text)?;
    Ok(file.circuit)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[[gate]]
name = "sq"
duration = 100

[gate.channels.0.tone0]
frequency = { constant = 1000000 }
amplitude = { knots = [[0, 0.0], [50, 800000.0], [100, 0.0]] }
sync = true

[gate.channels.0.tone1]
frame = { constant = 42 }
frame_mode = "final"
"#;

    #[test]
    fn toml_gate_file_parses() {
        let file: GateFile = toml::from_str(SAMPLE).unwrap();
        assert_eq!(file.gates.len(), 1);
        let g = &file.gates[0];
        g.validate().unwrap();
        assert_eq!(g.duration, 100);
        let ch = &g.channels[&0];
        assert!(ch.tone0.sync);
        assert_eq!(ch.tone0.frequency, ParamSpec::constant(1_000_000.0));
        assert!(matches!(ch.tone0.amplitude, ParamSpec::Knots { .. }));
        assert_eq!(ch.tone1.frame_mode, FrameMode::Final);
    }

    #[test]
    fn knot_invariants_are_enforced() {
        let mut g = GateDefinition {
            name: "bad".into(),
            duration: 10,
            channels: BTreeMap::from([(0, ChannelGate::default())]),
        };
        g.channels.get_mut(&0).unwrap().tone0.amplitude =
            ParamSpec::knots(vec![(0, 0.0), (5, 1.0), (9, 0.0)]);
        assert!(g.validate().is_err(), "last knot not at duration");

        g.channels.get_mut(&0).unwrap().tone0.amplitude =
            ParamSpec::knots(vec![(0, 0.0), (5, 1.0), (5, 2.0), (10, 0.0)]);
        assert!(g.validate().is_err(), "non-increasing knots");

        g.channels.get_mut(&0).unwrap().tone0.amplitude =
            ParamSpec::knots(vec![(0, 0.0), (5, 1.0), (10, 0.0)]);
        assert!(g.validate().is_ok());

        g.duration = 0;
        assert!(g.validate().is_err(), "zero duration");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"
[[gate]]
name = "x"
duration = 1
typo_field = 3
[gate.channels.0]
"#;
        assert!(toml::from_str::<GateFile>(text).is_err());
    }
}
