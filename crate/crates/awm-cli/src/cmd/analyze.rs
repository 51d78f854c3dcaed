use anyhow::{anyhow, Result};
use awm_analysis::{render_markdown, reproduction_report, StreamConfig};
use awm_channels::PresetCatalog;
use std::path::Path;

pub fn run(out: Option<&Path>, format: &str) -> Result<()> {
    let cfg = StreamConfig::default();
    let rows = reproduction_report(&cfg, &PresetCatalog::builtin())?;
    let text = match format {
        "markdown" | "md" => render_markdown(&rows),
        "json" => serde_json::to_string_pretty(&serde_json::json!({
            "config": cfg,
            "rows": rows,
        }))? + "\n",
        other => return Err(anyhow!("unknown format `{other}` (use json or markdown)")),
    };
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    let misses: Vec<_> = rows.iter().filter(|r| !r.within).collect();
    if !misses.is_empty() {
        return Err(anyhow!(
            "{} quantities deviate beyond tolerance: {}",
            misses.len(),
            misses
                .iter()
                .map(|r| r.name.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    Ok(())
}
