use anyhow::{anyhow, Context, Result};
use awm_channels::PresetCatalog;
use std::fmt::Write as _;
use std::path::PathBuf;

pub struct BenchArgs {
    pub preset: String,
    pub payloads: String,
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub hist: Option<PathBuf>,
    pub bins: usize,
}

fn parse_sweep(spec: &str) -> Result<(u64, u64)> {
    let (min, max) = spec
        .split_once(':')
        .ok_or_else(|| anyhow!("payload sweep must be `min:max`, got `{spec}`"))?;
    let min: u64 = min.parse().context("sweep minimum")?;
    let max: u64 = max.parse().context("sweep maximum")?;
    if min == 0 || max < min {
        return Err(anyhow!("invalid sweep range {min}:{max}"));
    }
    Ok((min, max))
}

pub fn run(args: BenchArgs) -> Result<()> {
    let catalog = PresetCatalog::builtin();
    let model = catalog.dma(&args.preset).map_err(|_| {
        anyhow!(
            "unknown preset `{}`; available: {}",
            args.preset,
            catalog.names().join(", ")
        )
    })?;

    let (min, max) = parse_sweep(&args.payloads)?;
    let mut payloads = Vec::new();
    let mut p = min;
    while p <= max {
        payloads.push(p);
        match p.checked_mul(2) {
            Some(next) => p = next,
            None => break,
        }
    }

    let mut results = Vec::new();
    let mut hist_csv = String::from("payload_bytes,bin_left,bin_right,count\n");
    for (i, &payload) in payloads.iter().enumerate() {
        let run = model.run_trials(payload, args.trials, args.seed.wrapping_add(i as u64))?;
        for bin in run.throughput_histogram(args.bins).bins {
            writeln!(
                hist_csv,
                "{payload},{},{},{}",
                bin.left, bin.right, bin.count
            )
            .expect("string write");
        }
        results.push(run);
    }

    let out = serde_json::json!({
        "config": {
            "preset": args.preset,
            "model": model,
            "payloads": payloads,
            "trials": args.trials,
            "seed": args.seed,
            "bins": args.bins,
        },
        "results": results,
    });
    std::fs::write(&args.out, serde_json::to_string_pretty(&out)?)?;
    if let Some(hist) = &args.hist {
        std::fs::write(hist, hist_csv)?;
    }
    println!(
        "benchmarked {} payload sizes x {} trials on {} -> {}",
        payloads.len(),
        args.trials,
        args.preset,
        args.out.display()
    );
    Ok(())
}
