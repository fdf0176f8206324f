use proptest::prelude::*;

use dcnflow::io;
use dcnflow_core::benchmarks::{preset, preset_names, BenchmarkPreset};
use dcnflow_core::generator::{generate_trace, Flow, GenConfig};
use dcnflow_core::network::{EndpointId, Topology};
use dcnflow_core::pmf::build_pmf;

fn small_trace() -> dcnflow_core::generator::FlowTrace {
    let topo = Topology::reference();
    let p = preset("social_media_cloud", &topo).unwrap();
    let cfg = GenConfig {
        jsd_threshold: 0.2,
        min_duration: 0.0,
        ..GenConfig::with_load(0.4, 11)
    };
    generate_trace(&p.size_spec, &p.time_spec, &p.node_spec, &topo, &cfg).unwrap()
}

#[test]
fn json_csv_memory_agree() {
    let trace = small_trace();
    let dir = tempfile::tempdir().unwrap();
    let (j, c) = (dir.path().join("t.json"), dir.path().join("t.csv"));
    io::write_trace_json(&trace, &j).unwrap();
    io::write_trace_csv(&trace.flows, &c).unwrap();

    let from_json = io::read_trace_json(&j).unwrap();
    assert_eq!(from_json, trace);
    let from_csv = io::read_trace_csv(&c).unwrap();
    assert_eq!(from_csv, trace.flows);
    assert_eq!(from_csv, from_json.flows);

    // and back out again, byte for byte
    let c2 = dir.path().join("t2.csv");
    io::write_trace_csv(&from_csv, &c2).unwrap();
    assert_eq!(std::fs::read(&c).unwrap(), std::fs::read(&c2).unwrap());
    assert_eq!(io::trace_to_json(&from_json).unwrap(), io::trace_to_json(&trace).unwrap());
}

#[test]
fn json_header_carries_units_and_provenance() {
    let trace = small_trace();
    let v: serde_json::Value = serde_json::from_str(&io::trace_to_json(&trace).unwrap()).unwrap();
    let meta = &v["metadata"];
    assert_eq!(meta["units"]["size"], "bytes");
    assert_eq!(meta["units"]["time"], "microseconds");
    assert_eq!(meta["provenance"]["config"]["seed"], 11);
    assert_eq!(meta["provenance"]["size_dist"]["family"], "weibull");
    assert_eq!(meta["report"]["n_flows"].as_u64().unwrap() as usize, trace.flows.len());
    let f0 = &v["flows"][0];
    for key in ["id", "size", "arrival", "src", "dst"] {
        assert!(!f0[key].is_null(), "{key}");
    }
}

#[test]
fn provenance_regenerates_trace() {
    let trace = small_trace();
    let back = io::trace_from_json(&io::trace_to_json(&trace).unwrap()).unwrap();
    let p = &back.provenance;
    let topo = Topology::from_spec(p.topology.clone()).unwrap();
    let again = generate_trace(&p.size_dist, &p.time_dist, &p.node_dist, &topo, &p.config).unwrap();
    assert_eq!(again, trace);
}

#[test]
fn preset_specs_round_trip_to_identical_pmfs() {
    let topo = Topology::reference();
    for name in preset_names() {
        let p = preset(name, &topo).unwrap();
        let text = serde_json::to_string_pretty(&p).unwrap();
        let back: BenchmarkPreset = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p, "{name}");
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
        for (a, b) in [(&p.size_spec, &back.size_spec), (&p.time_spec, &back.time_spec)] {
            assert_eq!(build_pmf(a, 20_000, 1).unwrap(), build_pmf(b, 20_000, 1).unwrap(), "{name}");
        }
    }
}

fn flow() -> impl Strategy<Value = Flow> {
    (any::<u64>(), 1u64..u64::MAX, 0u64..1_000_000_000_000, 0u32..10_000, 0u32..10_000).prop_map(
        |(id, size, ns, src, dst)| Flow {
            id,
            size,
            // arrivals live on a 1 ns grid
            arrival: ns as f64 / 1000.0,
            src: EndpointId(src),
            dst: EndpointId(dst),
        },
    )
}

proptest! {
    #[test]
    fn csv_round_trips_grid_arrivals(flows in prop::collection::vec(flow(), 0..50)) {
        let mut buf = Vec::new();
        io::write_flows_csv(&flows, &mut buf).unwrap();
        prop_assert_eq!(io::read_flows_csv(&buf[..]).unwrap(), flows);
    }

    #[test]
    fn json_round_trips_any_finite_arrival(flows in prop::collection::vec(
        (any::<u64>(), any::<u64>(), 0.0f64..1e12, any::<u32>(), any::<u32>())
            .prop_map(|(id, size, arrival, s, d)| Flow { id, size, arrival, src: EndpointId(s), dst: EndpointId(d) }),
        0..50,
    )) {
        let text = serde_json::to_string(&flows).unwrap();
        let back: Vec<Flow> = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, flows);
    }
}
