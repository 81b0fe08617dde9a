use wur_core::analog::{preset, sweep_tune, DetectorCurve, PRESET_NAMES};
use wur_core::catalog::{builtin_catalog, load_catalog};
use wur_core::codec::{decode_stream, encode_frame, WakeFrame};
use wur_core::config::{apply_overrides, load_candidates, load_chains, load_scenario};
use wur_core::netsim;

const CATALOG: &str = include_str!("../../../configs/catalog.toml");
const CHAINS: &str = include_str!("../../../configs/chains.toml");
const SCENARIO: &str = include_str!("../../../configs/demo_scenario.toml");
const CANDIDATES: &str = include_str!("../../../configs/tune_candidates.toml");

#[test]
fn bundled_catalog_is_the_builtin_one() {
    assert_eq!(load_catalog(CATALOG).unwrap(), builtin_catalog());
}

#[test]
fn bundled_chains_are_the_presets() {
    let cat = builtin_catalog();
    let chains = load_chains(CHAINS, &cat).unwrap();
    let names: Vec<&str> = chains.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(
        names,
        ["ewake-default", "ewake-lpv801", "direct-lpv7215", "direct-tlv3691"]
    );
    for c in &chains {
        assert_eq!(c, &preset(&c.name, &cat).unwrap());
    }
}

#[test]
fn bundled_candidates_pick_10nh_3p3pf() {
    let (plan, candidates) = load_candidates(CANDIDATES).unwrap();
    let best = *sweep_tune(&candidates, &plan, &DetectorCurve::direct_load())
        .unwrap()
        .best();
    assert_eq!((best.inductance_nh, best.capacitance_pf), (10.0, 3.3));
}

#[test]
fn demo_scenario_wakes_only_the_addressed_node() {
    let report = netsim::run(&load_scenario(SCENARIO, &builtin_catalog()).unwrap()).unwrap();
    assert_eq!((report.true_wakes, report.missed_wakes, report.false_wakes), (1, 0, 0));
    assert_eq!(report.node("n2").unwrap().true_wakes, 1);
    for id in ["n1", "n3"] {
        let n = report.node(id).unwrap();
        assert_eq!(n.true_wakes + n.false_wakes, 0);
        assert_eq!(n.events[0].outcome.to_string(), "no-match wrong-address");
    }
}

#[test]
fn moving_a_node_out_of_range_turns_a_wake_into_a_miss() {
    let text = apply_overrides(SCENARIO, &["node.1.distance=\"500 m\"".into()]).unwrap();
    let report = netsim::run(&load_scenario(&text, &builtin_catalog()).unwrap()).unwrap();
    assert_eq!((report.true_wakes, report.missed_wakes), (0, 1));
}

#[test]
fn encoded_frames_decode_on_every_preset() {
    let cat = builtin_catalog();
    let frame = WakeFrame::new(0x5A, 0x01);
    let wave = encode_frame(&frame, 1000.0, 0.0).unwrap().ideal_waveform();
    for name in PRESET_NAMES {
        let c = preset(name, &cat).unwrap();
        assert!(decode_stream(&wave, &c.decoder).unwrap().is_wake(), "{name}");
    }
}
