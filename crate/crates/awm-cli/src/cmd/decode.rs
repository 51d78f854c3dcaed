use anyhow::{Context, Result};
use awm_sequencer::codec::{decode_word, ProgrammingWord, TransferWord};
use awm_sequencer::word::read_stream;
use std::io::Write;
use std::path::Path;

pub fn run(stream: &Path) -> Result<()> {
    let words = read_stream(stream).context("reading word stream")?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for (i, word) in words.iter().enumerate() {
        let hex: String = word.as_bytes().iter().rev().map(|b| format!("{b:02x}")).collect();
        let summary = match decode_word(word) {
            Ok(TransferWord::Raw { channels, segment }) => format!(
                "raw segment  ch={:08b} {:?} tone{} tau={} u=({}, {}, {}, {})",
                channels.0,
                segment.meta.param,
                segment.meta.tone.index(),
                segment.tau,
                segment.u3,
                segment.u2,
                segment.u1,
                segment.u0,
            ),
            Ok(TransferWord::Sequence(seq)) => format!(
                "sequence     ch={:08b} ids={:?}",
                seq.routing.0,
                seq.ids.iter().map(|id| id.get()).collect::<Vec<_>>()
            ),
            Ok(TransferWord::Programming(ProgrammingWord::Plut { channels, addr, segment })) => {
                format!(
                    "plut write   ch={:08b} addr={addr} tau={} {:?} tone{}",
                    channels.0,
                    segment.tau,
                    segment.meta.param,
                    segment.meta.tone.index(),
                )
            }
            Ok(TransferWord::Programming(ProgrammingWord::Mlut { channels, entries })) => format!(
                "mlut write   ch={:08b} {} mappings {:?}",
                channels.0,
                entries.len(),
                entries
            ),
            Ok(TransferWord::Programming(ProgrammingWord::Glut { channels, entries })) => format!(
                "glut write   ch={:08b} {} records {:?}",
                channels.0,
                entries.len(),
                entries
                    .iter()
                    .map(|r| (r.gate.get(), r.start, r.end))
                    .collect::<Vec<_>>(),
            ),
            Err(e) => format!("undecodable: {e}"),
        };
        if let Err(e) = writeln!(out, "{i:6}  {hex}  {summary}") {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                return Ok(());
            }
            return Err(e.into());
        }
    }
    let _ = writeln!(out, "{} words", words.len());
    Ok(())
}
