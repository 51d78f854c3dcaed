use anyhow::{Context, Result};
use awm_compiler::{compile, emit_raw_stream, load_circuit_file, load_gate_file};
use awm_sequencer::word::write_stream;
use std::path::Path;

pub fn run(
    gates_path: &Path,
    circuit_path: &Path,
    out: &Path,
    report_path: Option<&Path>,
    raw: bool,
) -> Result<()> {
    let gates = load_gate_file(gates_path).context("loading gate definitions")?;
    let circuit = load_circuit_file(circuit_path).context("loading circuit")?;

    let config = serde_json::json!({
        "gates": gates_path.display().to_string(),
        "circuit": circuit_path.display().to_string(),
        "raw": raw,
        "gate_count": gates.len(),
        "circuit_length": circuit.len(),
    });

    let report_path = report_path
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| out.with_extension("report.json"));

    if raw {
        let words = emit_raw_stream(&gates, &circuit)?;
        write_stream(out, &words)?;
        let report = serde_json::json!({
            "config": config,
            "stream_words": words.len(),
        });
        std::fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;
        println!("wrote {} raw words to {}", words.len(), out.display());
    } else {
        let program = compile(&gates, &circuit)?;
        let words = program.stream();
        write_stream(out, &words)?;
        let report = serde_json::json!({
            "config": config,
            "allocation": program.report(),
        });
        std::fs::write(&report_path, serde_json::to_string_pretty(&report)?)?;
        println!(
            "wrote {} words ({} programming, {} sequencing) to {}",
            words.len(),
            program.counts.programming(),
            program.counts.sequence_words,
            out.display()
        );
    }
    Ok(())
}
