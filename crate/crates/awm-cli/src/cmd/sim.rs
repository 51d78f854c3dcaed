use anyhow::{Context, Result};
use awm_sequencer::sim::{SimConfig, Simulator};
use awm_sequencer::word::read_stream;
use std::path::{Path, PathBuf};

pub struct SimArgs {
    pub stream: PathBuf,
    pub config: Option<PathBuf>,
    pub channels: Option<usize>,
    pub cycles: Option<u64>,
    pub max_cycles: u64,
    pub out: PathBuf,
    pub events: Option<PathBuf>,
    pub trace_dir: Option<PathBuf>,
}

pub fn run(args: SimArgs) -> Result<()> {
    let mut config: SimConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).context("parsing simulator config")?
        }
        None => SimConfig::default(),
    };
    if let Some(channels) = args.channels {
        config.channels = channels;
    }

    let words = read_stream(&args.stream).context("reading word stream")?;
    let mut sim = Simulator::new(config.clone());
    sim.load_stream(&words).context("decoding word stream")?;
    sim.preload()?;
    sim.trigger();
    match args.cycles {
        Some(n) => sim.run(n),
        None => sim.run_until_idle(args.max_cycles),
    }
    let trace = sim.into_trace();

    std::fs::write(&args.out, trace.waveform_csv())?;

    let events_path = args
        .events
        .unwrap_or_else(|| args.out.with_extension("events.json"));
    let log = serde_json::json!({
        "config": config,
        "stream": args.stream.display().to_string(),
        "stream_words": words.len(),
        "cycles": trace.cycles,
        "events": trace.events,
    });
    std::fs::write(&events_path, serde_json::to_string_pretty(&log)?)?;

    if let Some(dir) = &args.trace_dir {
        write_engine_traces(dir, &trace, config.channels)?;
    }

    println!(
        "simulated {} cycles on {} channels ({} events) -> {}",
        trace.cycles,
        config.channels,
        trace.events.len(),
        args.out.display()
    );
    Ok(())
}

fn write_engine_traces(
    dir: &Path,
    trace: &awm_sequencer::sim::SimTrace,
    channels: usize,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for channel in 0..channels {
        for engine in 0..awm_sequencer::spline::ENGINES_PER_CHANNEL {
            let path = dir.join(format!("ch{channel}_eng{engine}.csv"));
            std::fs::write(path, trace.engine_csv(channel, engine))?;
        }
    }
    Ok(())
}
