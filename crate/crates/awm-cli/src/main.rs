//! `awm`: compile gate circuits to word streams, simulate the sequencer
//! datapath, benchmark communication-channel models, and reproduce the
//! bandwidth/latency analysis.

mod cmd;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "awm", version, about = "gate sequencer datapath toolkit")]
struct Cli {
    /// Emit errors as JSON on stderr.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a gate library and circuit into a word stream.
    Compile {
        /// Gate definition file (TOML or JSON).
        #[arg(long)]
        gates: PathBuf,
        /// Circuit file naming the gate sequence (TOML or JSON).
        #[arg(long)]
        circuit: PathBuf,
        /// Output word-stream path (32-byte little-endian records).
        #[arg(long)]
        out: PathBuf,
        /// Allocation report path (JSON); defaults to `<out>.report.json`.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Emit the LUT-bypass raw stream instead of the compressed form.
        #[arg(long)]
        raw: bool,
    },
    /// Simulate a word stream and export waveforms.
    Sim {
        /// Input word-stream path.
        #[arg(long)]
        stream: PathBuf,
        /// Simulator configuration file (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the configured channel count.
        #[arg(long)]
        channels: Option<usize>,
        /// Run exactly this many cycles instead of running to idle.
        #[arg(long)]
        cycles: Option<u64>,
        /// Cycle cap when running to idle.
        #[arg(long, default_value_t = 1 << 20)]
        max_cycles: u64,
        /// Waveform CSV output path.
        #[arg(long)]
        out: PathBuf,
        /// Event log path (JSON); defaults to `<out>.events.json`.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Directory for per-engine trace CSVs.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
    },
    /// Run trials against a channel timing model preset.
    Bench {
        /// Preset name, e.g. `zcu111-mm2s-256`.
        #[arg(long)]
        preset: String,
        /// Payload sweep `min:max` in bytes, doubling.
        #[arg(long, default_value = "4:1048576")]
        payloads: String,
        /// Trials per payload size.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Random seed (affects jitter only; stalls are periodic).
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Statistics output path (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Histogram output path (CSV).
        #[arg(long)]
        hist: Option<PathBuf>,
        /// Histogram bin count.
        #[arg(long, default_value_t = 50)]
        bins: usize,
    },
    /// Emit the reproduction table of computed vs reference values.
    Analyze {
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// `json` or `markdown`.
        #[arg(long, default_value = "markdown")]
        format: String,
    },
    /// Hex-dump and decode a word stream.
    Decode {
        /// Input word-stream path.
        #[arg(long)]
        stream: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compile {
            gates,
            circuit,
            out,
            report,
            raw,
        } => cmd::compile::run(&gates, &circuit, &out, report.as_deref(), raw),
        Command::Sim {
            stream,
            config,
            channels,
            cycles,
            max_cycles,
            out,
            events,
            trace_dir,
        } => cmd::sim::run(cmd::sim::SimArgs {
            stream,
            config,
            channels,
            cycles,
            max_cycles,
            out,
            events,
            trace_dir,
        }),
        Command::Bench {
            preset,
            payloads,
            trials,
            seed,
            out,
            hist,
            bins,
        } => cmd::bench::run(cmd::bench::BenchArgs {
            preset,
            payloads,
            trials,
            seed,
            out,
            hist,
            bins,
        }),
        Command::Analyze { out, format } => cmd::analyze::run(out.as_deref(), &format),
        Command::Decode { stream } => cmd::decode::run(&stream),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if cli.json {
                eprintln!(
                    "{}",
                    serde_json::json!({ "error": err.to_string() })
                );
            } else {
                eprintln!("error: {err:#}");
            }
            ExitCode::FAILURE
        }
    }
}
