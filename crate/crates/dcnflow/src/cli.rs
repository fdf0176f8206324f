//! Command-line front end: `generate`, `simulate`, `benchmark` and `serve`.

use std::io::Write;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use dcnflow_core::benchmarks::{preset, run_cell, BenchmarkPreset, ProtocolConfig, ProtocolResults};
use dcnflow_core::generator::{generate_trace, trace_load, GenConfig};
use dcnflow_core::network::Topology;
use dcnflow_core::simulator::{run, Scheduler, SimConfig};

use crate::io::{self, MetricsRow, TraceFormat};
use crate::server::{self, AppState};

#[derive(Debug, Parser)]
#[command(name = "dcnflow", version, about = "Synthetic data-centre traffic and flow-level scheduler benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a flow trace from a preset or a preset file.
    Generate(GenerateArgs),
    /// Simulate a trace under one scheduler and append a metrics row.
    Simulate(SimulateArgs),
    /// Run the preset × load × repeat × scheduler protocol.
    Benchmark(BenchmarkArgs),
    /// Serve the JSON preview API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, conflicts_with = "spec_file", required_unless_present = "spec_file")]
    pub preset: Option<String>,
    /// JSON with `name`, `size_spec`, `time_spec` and `node_spec`.
    #[arg(long)]
    pub spec_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub load: f64,
    #[arg(long, default_value_t = 0.1)]
    pub jsd_threshold: f64,
    /// μs; short traces are replicated up to this length.
    #[arg(long, default_value_t = GenConfig::default().min_duration)]
    pub min_duration: f64,
    /// Topology JSON; defaults to the 64-server reference.
    #[arg(long)]
    pub topology: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to the `--out` extension.
    #[arg(long, value_enum)]
    pub format: Option<TraceFormat>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `.json` or `.csv` trace.
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long)]
    pub topology: Option<PathBuf>,
    #[arg(long)]
    pub scheduler: String,
    /// μs.
    #[arg(long, default_value_t = 1000.0)]
    pub slot_size: f64,
    /// Fraction of the arrival span excluded from metrics.
    #[arg(long, default_value_t = 0.1)]
    pub warmup: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Load label for the row; measured from the trace when omitted.
    #[arg(long)]
    pub load: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub repeat: u32,
    /// Keep simulating past the last arrival until every flow completes.
    #[arg(long)]
    pub drain: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Comma-separated preset names.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub presets: Vec<String>,
    /// `start:stop:step` or a comma-separated list.
    #[arg(long, default_value = "0.1:0.9:0.1")]
    pub loads: String,
    #[arg(long, default_value_t = 5)]
    pub repeats: u32,
    #[arg(long, value_delimiter = ',', default_value = "srpt,fair_share,first_fit,random")]
    pub schedulers: Vec<String>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub jsd_threshold: f64,
    #[arg(long, default_value_t = GenConfig::default().min_duration)]
    pub min_duration: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub slot_size: f64,
    #[arg(long, default_value_t = 0.1)]
    pub warmup: f64,
    #[arg(long)]
    pub topology: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
    pub host: IpAddr,
    /// Overrides `$DCNFLOW_SPECS_DIR`.
    #[arg(long)]
    pub specs_dir: Option<PathBuf>,
}

pub fn run_cli(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(&a, stdout),
        Command::Simulate(a) => simulate(&a, stdout),
        Command::Benchmark(a) => benchmark(&a, stdout),
        Command::Serve(a) => {
            let state = match a.specs_dir {
                Some(d) => AppState::new(d),
                None => AppState::from_env(),
            };
            tokio::runtime::Runtime::new()?.block_on(server::serve(SocketAddr::new(a.host, a.port), state))
        }
    }
}

fn load_topology(path: Option<&Path>) -> Result<Topology> {
    match path {
        Some(p) => io::read_topology(p),
        None => Ok(Topology::reference()),
    }
}

fn load_preset(args: &GenerateArgs, topology: &Topology) -> Result<BenchmarkPreset> {
    match (&args.preset, &args.spec_file) {
        (Some(name), _) => Ok(preset(name, topology)?),
        (None, Some(path)) => io::read_preset(path),
        (None, None) => bail!("one of --preset or --spec-file is required"),
    }
}

pub fn generate(args: &GenerateArgs, stdout: &mut dyn Write) -> Result<()> {
    let topology = load_topology(args.topology.as_deref())?;
    let p = load_preset(args, &topology)?;
    let cfg = GenConfig {
        jsd_threshold: args.jsd_threshold,
        target_load: args.load,
        min_duration: args.min_duration,
        seed: args.seed,
        ..GenConfig::default()
    };
    cfg.validate()?;
    let trace = generate_trace(&p.size_spec, &p.time_spec, &p.node_spec, &topology, &cfg)
        .with_context(|| format!("generating `{}`", p.name))?;
    let format = args.format.unwrap_or_else(|| TraceFormat::from_path(&args.out));
    io::write_trace(&trace, &args.out, format)?;
    serde_json::to_writer_pretty(&mut *stdout, &trace.report)?;
    writeln!(stdout)?;
    Ok(())
}

pub fn simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let scheduler: Scheduler = args.scheduler.parse()?;
    let topology = load_topology(args.topology.as_deref())?;
    let (flows, header) = io::read_flows(&args.trace)?;
    let load = match (args.load, header) {
        (Some(l), _) => l,
        (None, Some(t)) => t.provenance.config.target_load,
        (None, None) => trace_load(&flows, &topology)?.2,
    };
    let cfg = SimConfig {
        slot_size: args.slot_size,
        warmup_frac: args.warmup,
        scheduler,
        seed: args.seed,
        drain: args.drain,
    };
    let metrics = run(&flows, &topology, &cfg)?;
    let row = MetricsRow { load, scheduler, repeat: args.repeat, metrics };
    io::append_metrics_row(&args.out, &row)?;
    serde_json::to_writer_pretty(&mut *stdout, &row)?;
    writeln!(stdout)?;
    Ok(())
}

/// `a:b:step` (inclusive) or `x,y,z`.
pub fn parse_loads(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() {
        bail!("empty load list");
    }
    if s.contains(':') {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad load range `{s}`")))
            .collect::<Result<_>>()?;
        let [a, b, step] = parts[..] else {
            bail!("load range must be start:stop:step, got `{s}`");
        };
        if !(step > 0.0) || b < a {
            bail!("load range needs step > 0 and stop >= start, got `{s}`");
        }
        let n = ((b - a) / step + 1e-9).floor() as usize + 1;
        // snap to 1e-9 so 0.1 + 2*0.1 prints as 0.3
        Ok((0..n).map(|i| ((a + step * i as f64) * 1e9).round() / 1e9).collect())
    } else {
        s.split(',')
            .map(|p| p.trim().parse::<f64>().with_context(|| format!("bad load `{p}`")))
            .collect()
    }
}

pub fn benchmark(args: &BenchmarkArgs, stdout: &mut dyn Write) -> Result<()> {
    let presets: Vec<String> = args.presets.iter().map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect();
    if presets.is_empty() {
        bail!("--presets must name at least one preset");
    }
    let schedulers = args
        .schedulers
        .iter()
        .map(|s| s.parse::<Scheduler>())
        .collect::<Result<Vec<_>, _>>()?;
    let topology = load_topology(args.topology.as_deref())?;
    let cfg = ProtocolConfig {
        presets,
        loads: parse_loads(&args.loads)?,
        repeats: args.repeats,
        schedulers,
        gen: GenConfig {
            jsd_threshold: args.jsd_threshold,
            min_duration: args.min_duration,
            ..GenConfig::default()
        },
        sim: SimConfig {
            slot_size: args.slot_size,
            warmup_frac: args.warmup,
            ..SimConfig::new(Scheduler::Srpt)
        },
        seed: args.seed,
    };
    cfg.validate(&topology)?;
    cfg.gen.validate()?;

    let records = cfg
        .cells()
        .par_iter()
        .flat_map_iter(|cell| run_cell(&cfg, &topology, cell))
        .collect();
    let results = ProtocolResults::from_records(records);
    io::write_protocol_outputs(&results, &args.out_dir)?;

    let failures = results.records.iter().filter(|r| r.error.is_some()).count();
    writeln!(
        stdout,
        "{} runs ({} failed), {} cell rows, {} winner rows -> {}",
        results.records.len(),
        failures,
        results.summary.len(),
        results.winners.len(),
        args.out_dir.display()
    )?;
    for w in &results.winners {
        writeln!(stdout, "{:<24} {:>4} {:<20} {}", w.preset, w.load, w.kpi.name(), w.label)?;
    }
    Ok(())
}
