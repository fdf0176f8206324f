//! File formats: traces (JSON and CSV), topologies, presets, metrics rows and
//! protocol outputs.
//!
//! Sizes are integer bytes and times are microseconds everywhere. Trace JSON
//! carries the full generation provenance next to the flows so a trace can be
//! regenerated from its own header.

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use dcnflow_core::benchmarks::{BenchmarkPreset, Kpi, ProtocolResults, RunRecord};
use dcnflow_core::generator::{Flow, FlowTrace, GenerationReport, Provenance};
use dcnflow_core::network::{EndpointId, SpineLeafSpec, Topology};
use dcnflow_core::simulator::{Metrics, Scheduler};

pub const TRACE_CSV_HEADER: [&str; 5] = ["id", "size", "arrival", "src", "dst"];

pub const METRICS_CSV_HEADER: [&str; 10] = [
    "load",
    "scheduler",
    "repeat",
    "mean_fct",
    "p99_fct",
    "max_fct",
    "throughput_abs",
    "throughput_rel",
    "frac_flows_accepted",
    "frac_info_accepted",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Units {
    pub size: String,
    pub time: String,
    pub rate: String,
}

impl Default for Units {
    fn default() -> Self {
        Units {
            size: "bytes".into(),
            time: "microseconds".into(),
            rate: "bytes/microsecond".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceMetadata {
    #[serde(default)]
    pub units: Units,
    pub provenance: Provenance,
    pub report: GenerationReport,
}

/// On-disk layout of a JSON trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFile {
    pub metadata: TraceMetadata,
    pub flows: Vec<Flow>,
}

impl From<FlowTrace> for TraceFile {
    fn from(t: FlowTrace) -> Self {
        TraceFile {
            metadata: TraceMetadata {
                units: Units::default(),
                provenance: t.provenance,
                report: t.report,
            },
            flows: t.flows,
        }
    }
}

impl From<TraceFile> for FlowTrace {
    fn from(f: TraceFile) -> Self {
        FlowTrace {
            flows: f.flows,
            report: f.metadata.report,
            provenance: f.metadata.provenance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum TraceFormat {
    #[default]
    Json,
    Csv,
}

impl TraceFormat {
    /// `.csv` means CSV, anything else JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => TraceFormat::Csv,
            _ => TraceFormat::Json,
        }
    }
}

pub fn trace_to_json(trace: &FlowTrace) -> Result<String> {
    Ok(serde_json::to_string(&TraceFile::from(trace.clone()))?)
}

pub fn trace_from_json(s: &str) -> Result<FlowTrace> {
    let f: TraceFile = serde_json::from_str(s).context("malformed trace JSON")?;
    Ok(f.into())
}

pub fn write_trace_json(trace: &FlowTrace, path: &Path) -> Result<()> {
    let w = BufWriter::new(create(path)?);
    serde_json::to_writer(w, &TraceFile::from(trace.clone()))?;
    Ok(())
}

pub fn read_trace_json(path: &Path) -> Result<FlowTrace> {
    let r = BufReader::new(open(path)?);
    let f: TraceFile =
        serde_json::from_reader(r).with_context(|| format!("malformed trace JSON in {}", path.display()))?;
    Ok(f.into())
}

pub fn write_flows_csv<W: Write>(flows: &[Flow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRACE_CSV_HEADER)?;
    for f in flows {
        out.write_record([
            f.id.to_string(),
            f.size.to_string(),
            format!("{:.3}", f.arrival),
            f.src.to_string(),
            f.dst.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct FlowRow {
    id: u64,
    size: u64,
    arrival: f64,
    src: u32,
    dst: u32,
}

pub fn read_flows_csv<R: std::io::Read>(r: R) -> Result<Vec<Flow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().ne(TRACE_CSV_HEADER) {
        bail!("expected trace CSV header `{}`, found `{}`", TRACE_CSV_HEADER.join(","), header.iter().collect::<Vec<_>>().join(","));
    }
    rdr.deserialize::<FlowRow>()
        .enumerate()
        .map(|(i, row)| {
            let row = row.with_context(|| format!("bad trace CSV row {}", i + 1))?;
            Ok(Flow {
                id: row.id,
                size: row.size,
                arrival: row.arrival,
                src: EndpointId(row.src),
                dst: EndpointId(row.dst),
            })
        })
        .collect()
}

pub fn write_trace_csv(flows: &[Flow], path: &Path) -> Result<()> {
    write_flows_csv(flows, BufWriter::new(create(path)?))
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<Flow>> {
    read_flows_csv(BufReader::new(open(path)?)).with_context(|| format!("reading {}", path.display()))
}

pub fn write_trace(trace: &FlowTrace, path: &Path, format: TraceFormat) -> Result<()> {
    match format {
        TraceFormat::Json => write_trace_json(trace, path),
        TraceFormat::Csv => write_trace_csv(&trace.flows, path),
    }
}

/// Flows from either format; the JSON header comes back when there is one.
pub fn read_flows(path: &Path) -> Result<(Vec<Flow>, Option<FlowTrace>)> {
    match TraceFormat::from_path(path) {
        TraceFormat::Csv => Ok((read_trace_csv(path)?, None)),
        TraceFormat::Json => {
            let t = read_trace_json(path)?;
            Ok((t.flows.clone(), Some(t)))
        }
    }
}

pub fn read_topology(path: &Path) -> Result<Topology> {
    let spec: SpineLeafSpec = serde_json::from_reader(BufReader::new(open(path)?))
        .with_context(|| format!("malformed topology JSON in {}", path.display()))?;
    Ok(Topology::from_spec(spec)?)
}

pub fn write_topology(topology: &Topology, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(topology.spec())?)?;
    Ok(())
}

pub fn read_preset(path: &Path) -> Result<BenchmarkPreset> {
    serde_json::from_reader(BufReader::new(open(path)?))
        .with_context(|| format!("malformed preset JSON in {}", path.display()))
}

/// One line of a metrics file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub load: f64,
    pub scheduler: Scheduler,
    pub repeat: u32,
    #[serde(flatten)]
    pub metrics: Metrics,
}

impl MetricsRow {
    fn record(&self) -> [String; 10] {
        let m = &self.metrics;
        [
            self.load.to_string(),
            self.scheduler.name().to_string(),
            self.repeat.to_string(),
            m.mean_fct.to_string(),
            m.p99_fct.to_string(),
            m.max_fct.to_string(),
            m.throughput_abs.to_string(),
            m.throughput_rel.to_string(),
            m.frac_flows_accepted.to_string(),
            m.frac_info_accepted.to_string(),
        ]
    }
}

/// Appends `row`, writing the header first if the file is new or empty.
pub fn append_metrics_row(path: &Path, row: &MetricsRow) -> Result<()> {
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let fresh = file.metadata()?.len() == 0;
    let mut w = csv::Writer::from_writer(file);
    if fresh {
        w.write_record(METRICS_CSV_HEADER)?;
    }
    w.write_record(row.record())?;
    w.flush()?;
    Ok(())
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut rdr = csv::Reader::from_reader(BufReader::new(open(path)?));
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != METRICS_CSV_HEADER.len() {
            bail!("metrics row has {} columns, expected {}", rec.len(), METRICS_CSV_HEADER.len());
        }
        let f = |i: usize| -> Result<f64> { Ok(rec[i].parse()?) };
        rows.push(MetricsRow {
            load: f(0)?,
            scheduler: rec[1].parse()?,
            repeat: rec[2].parse()?,
            metrics: Metrics {
                mean_fct: f(3)?,
                p99_fct: f(4)?,
                max_fct: f(5)?,
                throughput_abs: f(6)?,
                throughput_rel: f(7)?,
                frac_flows_accepted: f(8)?,
                frac_info_accepted: f(9)?,
            },
        });
    }
    Ok(rows)
}

pub const RUNS_FILE: &str = "runs.csv";
pub const CELLS_FILE: &str = "cells.csv";
pub const WINNERS_FILE: &str = "winners.json";

/// Raw per-repeat rows.
pub fn write_runs_csv<W: Write>(records: &[RunRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["preset".to_string()];
    header.extend(METRICS_CSV_HEADER.iter().map(|s| s.to_string()));
    header.push("error".into());
    out.write_record(&header)?;
    for r in records {
        let mut rec = vec![r.preset.clone(), r.load.to_string(), r.scheduler.name().into(), r.repeat.to_string()];
        match &r.metrics {
            Some(m) => rec.extend(
                MetricsRow {
                    load: r.load,
                    scheduler: r.scheduler,
                    repeat: r.repeat,
                    metrics: *m,
                }
                .record()[3..]
                    .iter()
                    .cloned(),
            ),
            None => rec.extend(std::iter::repeat_n(String::new(), 7)),
        }
        rec.push(r.error.clone().unwrap_or_default());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// One row per (preset, load, scheduler) with `<kpi>_mean` and `<kpi>_ci95`.
pub fn write_cells_csv<W: Write>(results: &ProtocolResults, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = ["preset", "load", "scheduler", "repeats", "failures"].map(String::from).to_vec();
    for k in Kpi::ALL {
        header.push(format!("{}_mean", k.name()));
        header.push(format!("{}_ci95", k.name()));
    }
    out.write_record(&header)?;
    for c in &results.summary {
        let mut rec = vec![
            c.preset.clone(),
            c.load.to_string(),
            c.scheduler.name().to_string(),
            c.repeats.to_string(),
            c.failures.to_string(),
        ];
        for k in Kpi::ALL {
            match c.kpis.get(&k) {
                Some(e) => {
                    rec.push(e.mean.to_string());
                    rec.push(e.ci95.to_string());
                }
                None => rec.extend([String::new(), String::new()]),
            }
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `runs.csv`, `cells.csv` and `winners.json` into `dir`.
pub fn write_protocol_outputs(results: &ProtocolResults, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_runs_csv(&results.records, BufWriter::new(create(&dir.join(RUNS_FILE))?))?;
    write_cells_csv(results, BufWriter::new(create(&dir.join(CELLS_FILE))?))?;
    let w = BufWriter::new(create(&dir.join(WINNERS_FILE))?);
    serde_json::to_writer_pretty(w, &serde_json::json!({ "winners": results.winners }))?;
    Ok(())
}

fn create(path: &Path) -> Result<File> {
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flows() -> Vec<Flow> {
        vec![
            Flow { id: 0, size: 1500, arrival: 0.0, src: EndpointId(0), dst: EndpointId(5) },
            Flow { id: 1, size: 20_000_000, arrival: 12.345, src: EndpointId(63), dst: EndpointId(1) },
            Flow { id: 2, size: 1, arrival: 98765.432, src: EndpointId(7), dst: EndpointId(8) },
        ]
    }

    #[test]
    fn csv_round_trip() {
        let mut buf = Vec::new();
        write_flows_csv(&flows(), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,size,arrival,src,dst\n"));
        assert!(text.contains("1,20000000,12.345,63,1"));
        assert_eq!(read_flows_csv(&buf[..]).unwrap(), flows());
    }

    #[test]
    fn csv_rejects_wrong_header() {
        let err = read_flows_csv(&b"a,b\n1,2\n"[..]).unwrap_err();
        assert!(err.to_string().contains("header"));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(TraceFormat::from_path(Path::new("t.CSV")), TraceFormat::Csv);
        assert_eq!(TraceFormat::from_path(Path::new("t.json")), TraceFormat::Json);
        assert_eq!(TraceFormat::from_path(Path::new("t")), TraceFormat::Json);
    }

    #[test]
    fn metrics_rows_append_under_one_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let row = MetricsRow {
            load: 0.5,
            scheduler: Scheduler::Srpt,
            repeat: 2,
            metrics: Metrics { mean_fct: 1.5, frac_flows_accepted: 1.0, ..Default::default() },
        };
        append_metrics_row(&path, &row).unwrap();
        append_metrics_row(&path, &row).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(text.lines().next().unwrap(), METRICS_CSV_HEADER.join(","));
        assert_eq!(read_metrics_csv(&path).unwrap(), vec![row, row]);
    }
}
