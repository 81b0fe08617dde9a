//! Acceptance checks. Runs without the libtest harness so that every
//! criterion prints exactly one `PASS`/`FAIL` line; exits non-zero if any
//! criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wur_core::analog::{
    detect_envelope, inject, preset, resonant_frequency, sensitivity, sweep_tune, DetectorCurve, LinkModel, LoadClass,
    MatchingSpec, ReceiverChain, SweepPlan,
};
use wur_core::catalog::builtin_catalog;
use wur_core::codec::{
    decode_stream, encode_frame_checked, frame_bits, DecodeOutcome, DecoderConfig, NoMatchReason, SegmentRole,
    WakeFrame, DEFAULT_WAKE_DELAY_US,
};
use wur_core::config::load_scenario;
use wur_core::energy::{quiescent_current, EnergyLedger, PowerProfile};
use wur_core::netsim::{self, NodeConfig, Scenario, ScheduledFrame};

const DEMO_SCENARIO: &str = include_str!("../../../configs/demo_scenario.toml");

struct Outcome {
    ok: bool,
    detail: String,
}

impl Outcome {
    fn check(ok: bool, detail: impl Into<String>) -> Self {
        Self {
            ok,
            detail: detail.into(),
        }
    }
}

fn chain(name: &str) -> ReceiverChain {
    preset(name, &builtin_catalog()).expect("bundled preset")
}

fn with_budget(budget: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let took = start.elapsed();
    if took > budget {
        out.ok = false;
    }
    out.detail = format!("{} [{:.2?} / budget {:.0?}]", out.detail, took, budget);
    out
}

/// Quiescent current of the three reference builds, exact to the nA.
fn quiescent() -> Outcome {
    let got: Vec<(&str, f64, f64)> = [
        ("ewake-default", 580.0),
        ("ewake-lpv801", 450.0),
        ("direct-lpv7215", 600.0),
    ]
    .into_iter()
    .map(|(name, want)| (name, quiescent_current(&chain(name), true), want))
    .collect();
    let ok = got.iter().all(|&(_, g, w)| g == w);
    let detail = got
        .iter()
        .map(|(n, g, w)| format!("{n}={g} nA (want {w})"))
        .collect::<Vec<_>>()
        .join(", ");
    Outcome::check(ok, detail)
}

/// Random strictly increasing calibration through (p_star, 1 mV), with
/// segment slopes in [0.05, 0.2] decades/dB.
fn random_direct_curve(rng: &mut ChaCha8Rng) -> DetectorCurve {
    let p_star: f64 = rng.random_range(-80.0..-40.0);
    let below = rng.random_range(0..3);
    let above = rng.random_range(0..3);
    let mut anchors = vec![(p_star, -3.0)];
    for _ in 0..below {
        let (p, lv) = anchors[0];
        let dp = rng.random_range(1.0..8.0);
        anchors.insert(0, (p - dp, lv - dp * rng.random_range(0.05..0.2)));
    }
    for _ in 0..above {
        let (p, lv) = *anchors.last().unwrap();
        let dp = rng.random_range(1.0..8.0);
        anchors.push((p + dp, lv + dp * rng.random_range(0.05..0.2)));
    }
    let anchors = anchors.into_iter().map(|(p, lv)| (p, 10f64.powf(lv))).collect();
    DetectorCurve::new(anchors, rng.random_range(0.05..0.2), LoadClass::DirectLoad).expect("monotone anchors")
}

/// Sensitivity table for the bundled chains, plus the ordering under 100
/// random calibrations. The high-impedance curve of each draw sits a random
/// factor of 2..20 above the direct-load one (a rectifier into a light load
/// never delivers less voltage than into a heavy one).
fn sensitivity_ordering() -> Outcome {
    let chains = [chain("direct-tlv3691"), chain("direct-lpv7215"), chain("ewake-default")];
    let rows = match netsim::sensitivity_sweep(&chains, None) {
        Ok(r) => r,
        Err(e) => return Outcome::check(false, e.to_string()),
    };
    let want = [-32.0, -55.0, -70.0];
    let table_ok = rows
        .iter()
        .zip(want)
        .all(|(r, w)| r.sensitivity_dbm.is_some_and(|s| (s - w).abs() <= 0.1 + 1e-9));
    let table = rows
        .iter()
        .map(|r| format!("{}={:?}", r.chain, r.sensitivity_dbm))
        .collect::<Vec<_>>()
        .join(", ");

    let frame = WakeFrame::new(0x5A, 0x01);
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0002);
    let mut violations = Vec::new();
    for draw in 0..100 {
        let direct = random_direct_curve(&mut rng);
        let boost = rng.random_range(2.0..20.0);
        let high = direct.scaled(boost, LoadClass::HighImpedance).unwrap();
        let mut tlv = chains[0].clone();
        let mut lpv = chains[1].clone();
        let mut ewake = chains[2].clone();
        tlv.detector = direct.clone();
        lpv.detector = direct;
        ewake.detector = high;
        let s = [&ewake, &lpv, &tlv].map(|c| sensitivity(c, &frame));
        match s {
            [Ok(e), Ok(l), Ok(t)] if e < l && l < t => {}
            other => violations.push(format!("draw {draw}: {other:?}")),
        }
    }
    Outcome::check(
        table_ok && violations.is_empty(),
        format!(
            "{table}; ordering held in {}/100 random calibrations (high-impedance curve 2..20x direct-load){}",
            100 - violations.len(),
            violations
                .first()
                .map(|v| format!(" (first violation {v})"))
                .unwrap_or_default()
        ),
    )
}

/// Random frames and bit rates decode to Wake with the matching config and to
/// NoMatch(wrong-network) otherwise; exhaustive address exclusivity.
fn codec_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0003);
    let mut failures = Vec::new();
    let cases = 2000;
    for _ in 0..cases {
        let net: u8 = rng.random();
        let addr: u8 = rng.random();
        let rate = rng.random_range(100.0..100_000.0f64).round();
        let preamble = rng.random_range(DEFAULT_WAKE_DELAY_US + 1.0..200.0);
        let frame = WakeFrame::new(net, addr).with_preamble(preamble);
        let wave = encode_frame_checked(&frame, rate, 0.0, DEFAULT_WAKE_DELAY_US)
            .expect("valid frame")
            .ideal_waveform();
        let other_net = net.wrapping_add(rng.random_range(1..=255));
        let good = decode_stream(&wave, &DecoderConfig::new(net, [addr]).with_bit_rate(rate));
        let bad = decode_stream(&wave, &DecoderConfig::new(other_net, [addr]).with_bit_rate(rate));
        if !matches!(good, Ok(DecodeOutcome::Wake(a)) if a == addr)
            || !matches!(bad, Ok(DecodeOutcome::NoMatch(NoMatchReason::WrongNetwork)))
        {
            failures.push(format!(
                "net {net:#04x} addr {addr:#04x} rate {rate}: {good:?} / {bad:?}"
            ));
        }
    }

    let mut exclusivity_errors = 0;
    for target in 0..=255u8 {
        let wave = encode_frame_checked(&WakeFrame::new(0x5A, target), 1000.0, 0.0, DEFAULT_WAKE_DELAY_US)
            .unwrap()
            .ideal_waveform();
        for node in 0..=255u8 {
            let woke = decode_stream(&wave, &DecoderConfig::new(0x5A, [node]))
                .unwrap()
                .is_wake();
            if woke != (node == target) {
                exclusivity_errors += 1;
            }
        }
    }
    Outcome::check(
        failures.is_empty() && exclusivity_errors == 0,
        format!(
            "{}/{cases} random round trips ok, {exclusivity_errors} exclusivity violations over 256x256{}",
            cases - failures.len(),
            failures
                .first()
                .map(|f| format!(" (first failure {f})"))
                .unwrap_or_default()
        ),
    )
}

fn matcher_active_current() -> Outcome {
    let p = PowerProfile::for_chain(&chain("ewake-default"));
    let got = p.mcu_active_ua();
    Outcome::check(
        got == 64.0,
        format!("{} uA/MHz x {} MHz = {got} uA", p.mcu_ua_per_mhz, p.mcu_clock_mhz),
    )
}

/// At -60 dBm the eWake comparator output follows the transmitted symbols.
fn comparator_trace() -> Outcome {
    let c = chain("ewake-default");
    let frame = WakeFrame::new(0x5A, 0x01);
    let timeline = encode_frame_checked(&frame, c.decoder.bit_rate, -60.0, c.decoder.wake_delay_us)
        .unwrap()
        .with_carrier(c.matching.band_center_hz);
    let response = inject(&timeline, &c, -60.0, None).unwrap();

    // trace holds (start, midpoint) per segment, then one point after the frame
    let mids: Vec<bool> = response
        .trace
        .chunks(2)
        .take(timeline.segments.len())
        .map(|p| p[1].comparator)
        .collect();
    let sent: Vec<bool> = timeline.segments.iter().map(|s| s.carrier).collect();
    let payload: Vec<bool> = timeline
        .segments
        .iter()
        .zip(&mids)
        .filter(|(s, _)| s.role == SegmentRole::Payload)
        .map(|(_, &m)| m)
        .collect();
    let symbols_ok = mids == sent && payload == frame_bits(&frame);
    let decoded = decode_stream(&response.waveform, &c.decoder).unwrap();

    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("ewake_minus60dbm_trace.csv");
    let mut csv = Vec::new();
    response.write_trace_csv(&mut csv).unwrap();
    let exported = std::fs::write(&path, &csv).is_ok()
        && String::from_utf8_lossy(&csv).starts_with("time_us,testpoint_a_volts,testpoint_b_volts,comparator\n");

    let bits: String = payload.iter().map(|&b| if b { '1' } else { '0' }).collect();
    Outcome::check(
        symbols_ok && decoded.is_wake() && exported,
        format!("payload {bits}, decode {decoded}, trace written to {}", path.display()),
    )
}

fn range_scenario(distances: &[f64]) -> Scenario {
    let mut s = Scenario::new(LinkModel::default(), 14.0, 1.0);
    for &d in distances {
        s.nodes
            .push(NodeConfig::new(format!("d{d}"), d, chain("ewake-default")));
    }
    s.schedule.push(ScheduledFrame {
        time_s: 0.1,
        frame: WakeFrame::new(0x5A, 0x01),
    });
    s
}

fn export(report: &netsim::SimReport) -> Vec<u8> {
    let mut out = report.summary_json().into_bytes();
    for n in &report.nodes {
        n.write_events_csv(&mut out).unwrap();
        n.ledger.write_csv(&mut out, Some(report.duration_s)).unwrap();
    }
    out
}

fn netsim_determinism_and_range() -> Outcome {
    let cat = builtin_catalog();
    let runs: Vec<Vec<u8>> = (0..2)
        .map(|_| export(&netsim::run(&load_scenario(DEMO_SCENARIO, &cat).unwrap()).unwrap()))
        .collect();
    let identical = runs[0] == runs[1];

    let report = netsim::run(&range_scenario(&[400.0, 436.0, 500.0])).unwrap();
    let wakes = |id: &str| report.node(id).unwrap().true_wakes;
    let range_ok = wakes("d400") == 1 && wakes("d436") == 1 && wakes("d500") == 0;
    Outcome::check(
        identical && range_ok,
        format!(
            "demo export {} ({} bytes); wakes at 400 m={}, 436 m={}, 500 m={}",
            if identical { "byte-identical" } else { "DIFFERS" },
            runs[0].len(),
            wakes("d400"),
            wakes("d436"),
            wakes("d500")
        ),
    )
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn property_suites() -> Outcome {
    let mut results: Vec<(&str, Result<(), String>)> = Vec::new();
    let mut rec = |name, r: Result<(), String>| results.push((name, r));

    // detector monotonicity
    rec(
        "detector-monotone",
        runner(256)
            .run(&(any::<u64>(), -130.0..20.0f64, 0.001..30.0f64), |(seed, p, dp)| {
                let curve = random_direct_curve(&mut ChaCha8Rng::seed_from_u64(seed));
                prop_assert!(detect_envelope(p, &curve) < detect_envelope(p + dp, &curve));
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );

    // matching-gain peak sits within one grid step of the L-C resonance
    rec(
        "matching-peak",
        runner(128)
            .run(
                &(1.0..100.0f64, 0.5..20.0f64, 2.0..50.0f64, -0.2..0.2f64),
                |(l, c, q, offset)| {
                    let f0 = resonant_frequency(l, c).unwrap();
                    let plan = SweepPlan {
                        band_center_hz: f0 * (1.0 + offset),
                        span_hz: f0,
                        step_hz: f0 / 500.0,
                        probe_power_dbm: -40.0,
                    };
                    let spec = MatchingSpec::new(l, c, q, plan.band_center_hz);
                    let r = sweep_tune(&[spec], &plan, &DetectorCurve::direct_load()).unwrap();
                    prop_assert!((r.tables[0].peak_frequency() - f0).abs() <= plan.step_hz);
                    Ok(())
                },
            )
            .map_err(|e| e.to_string()),
    );

    // sensitivity improves with gain and degrades with reference / offset
    let frame = WakeFrame::new(0x5A, 0x01);
    let base = chain("ewake-default");
    rec(
        "sensitivity-gain",
        runner(24)
            .run(&(10.0..1000.0f64, 1.0..4.0f64), |(g, k)| {
                let sens = |gain| {
                    let mut c = base.clone();
                    c.amplifier.as_mut().unwrap().gain = gain;
                    sensitivity(&c, &frame).unwrap()
                };
                prop_assert!(sens(g * k) <= sens(g));
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );
    rec(
        "sensitivity-vref",
        runner(24)
            .run(&(0.0..0.1f64, 0.0..0.1f64), |(a, b)| {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let sens = |v_ref| {
                    let mut c = base.clone();
                    c.comparator.v_ref = v_ref;
                    sensitivity(&c, &frame).unwrap()
                };
                prop_assert!(sens(lo) <= sens(hi));
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );
    let direct = chain("direct-lpv7215");
    rec(
        "sensitivity-vos",
        runner(24)
            .run(&(1e-5..1e-2f64, 1.0..10.0f64), |(v, k)| {
                let sens = |v_os| {
                    let mut c = direct.clone();
                    c.comparator.v_os = v_os;
                    sensitivity(&c, &frame).unwrap()
                };
                prop_assert!(sens(v) <= sens(v * k));
                Ok(())
            })
            .map_err(|e| e.to_string()),
    );

    // ledger concatenation adds charge exactly
    let entry = (0.0..20_000.0f64, 0.0..3600.0f64);
    rec(
        "energy-additivity",
        runner(256)
            .run(
                &(
                    prop::collection::vec(entry.clone(), 0..8),
                    prop::collection::vec(entry, 0..8),
                ),
                |(xs, ys)| {
                    let build = |v: &[(f64, f64)]| {
                        let mut l = EnergyLedger::new();
                        for (i, &(ua, s)) in v.iter().enumerate() {
                            l.record(format!("s{i}"), ua, s).unwrap();
                        }
                        l
                    };
                    let (a, b) = (build(&xs), build(&ys));
                    let mut ab = a.clone();
                    ab.append(&b);
                    prop_assert_eq!(ab.total_charge(), a.total_charge() + b.total_charge());
                    prop_assert_eq!(ab.total_charge(), ab.entries().iter().map(|e| e.charge).sum());
                    Ok(())
                },
            )
            .map_err(|e| e.to_string()),
    );

    // no false wakes without noise
    rec(
        "no-false-wakes",
        runner(32)
            .run(
                &(
                    prop::collection::vec((1.0..600.0f64, any::<u8>()), 1..5),
                    prop::collection::vec((any::<u8>(), any::<u8>()), 0..6),
                    -10.0..20.0f64,
                ),
                |(nodes, frames, tx)| {
                    let mut s = Scenario::new(LinkModel::default(), tx, 1.0);
                    for (i, (d, addr)) in nodes.iter().enumerate() {
                        let mut c = chain("ewake-default");
                        c.decoder.addresses = [*addr].into();
                        s.nodes.push(NodeConfig::new(format!("n{i}"), *d, c));
                    }
                    for (i, (net, addr)) in frames.iter().enumerate() {
                        s.schedule.push(ScheduledFrame {
                            time_s: 0.1 * (i + 1) as f64,
                            frame: WakeFrame::new(*net, *addr),
                        });
                    }
                    s.noise_seed = Some(7);
                    let r = netsim::run(&s).unwrap();
                    prop_assert_eq!(r.false_wakes, 0);
                    Ok(())
                },
            )
            .map_err(|e| e.to_string()),
    );

    let ok = results.iter().all(|(_, r)| r.is_ok());
    let detail = results
        .iter()
        .map(|(n, r)| match r {
            Ok(()) => format!("{n} ok"),
            Err(e) => format!("{n} FAILED: {}", e.replace('\n', " ")),
        })
        .collect::<Vec<_>>()
        .join(", ");
    Outcome::check(ok, detail)
}

fn main() -> ExitCode {
    let suite_start = Instant::now();
    type Criterion = (&'static str, Duration, fn() -> Outcome);
    let criteria: [Criterion; 7] = [
        ("1 quiescent current", Duration::from_secs(1), quiescent),
        ("2 sensitivity & ordering", Duration::from_secs(5), sensitivity_ordering),
        ("3 codec round trip", Duration::from_secs(5), codec_round_trip),
        (
            "4 matcher active current",
            Duration::from_secs(1),
            matcher_active_current,
        ),
        (
            "5 comparator trace at -60 dBm",
            Duration::from_secs(5),
            comparator_trace,
        ),
        (
            "6 netsim determinism & range",
            Duration::from_secs(10),
            netsim_determinism_and_range,
        ),
        ("7 property suites", Duration::from_secs(60), property_suites),
    ];
    let mut all_ok = true;
    for (name, budget, f) in criteria {
        let out = with_budget(budget, f);
        all_ok &= out.ok;
        println!(
            "criterion {name}: {} — {}",
            if out.ok { "PASS" } else { "FAIL" },
            out.detail
        );
    }
    let total = suite_start.elapsed();
    let in_budget = total < Duration::from_secs(60);
    println!(
        "acceptance total {:.2?}: {}",
        total,
        if all_ok && in_budget { "PASS" } else { "FAIL" }
    );
    if all_ok && in_budget {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
