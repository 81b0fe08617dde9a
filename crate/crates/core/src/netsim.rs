//! Single-transmitter wake-up network simulation.
//!
//! Frames are delivered in schedule order; each node runs its own receive
//! chain and address matcher, and its energy ledger is charged for matcher
//! wake-ups and host activity on top of the always-on drain.

use std::collections::HashSet;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analog::{self, AnalogError, EnvelopeNoise, LinkModel, ReceiverChain};
use crate::codec::{self, CodecError, DecodeOutcome, WakeFrame, DEFAULT_BIT_RATE, DEFAULT_CARRIER_HZ};
use crate::energy::{EnergyError, EnergyLedger, PowerProfile};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("node {node}{}: {source}", event.map(|e| format!(", event {e}")).unwrap_or_default())]
    Node {
        node: String,
        event: Option<usize>,
        #[source]
        source: Box<AnalogError>,
    },
    #[error("node {node}: {source}")]
    Energy {
        node: String,
        #[source]
        source: EnergyError,
    },
    #[error("event {event}: {source}")]
    Frame {
        event: usize,
        #[source]
        source: CodecError,
    },
    #[error("empty chain list")]
    NoChains,
    #[error("chain {chain}: {source}")]
    Chain {
        chain: String,
        #[source]
        source: Box<AnalogError>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeConfig {
    pub id: String,
    pub distance_m: f64,
    pub chain: ReceiverChain,
    pub profile: PowerProfile,
}

impl NodeConfig {
    /// Node with the power profile implied by its chain.
    pub fn new(id: impl Into<String>, distance_m: f64, chain: ReceiverChain) -> Self {
        let profile = PowerProfile::for_chain(&chain);
        Self {
            id: id.into(),
            distance_m,
            chain,
            profile,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduledFrame {
    pub time_s: f64,
    pub frame: WakeFrame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub link: LinkModel,
    pub tx_power_dbm: f64,
    pub bit_rate: f64,
    pub carrier_hz: f64,
    pub nodes: Vec<NodeConfig>,
    pub schedule: Vec<ScheduledFrame>,
    pub duration_s: f64,
    pub noise_seed: Option<u64>,
    /// Standard deviation of envelope noise in volts; 0 disables noise.
    pub noise_sigma_volts: f64,
}

impl Scenario {
    pub fn new(link: LinkModel, tx_power_dbm: f64, duration_s: f64) -> Self {
        Self {
            link,
            tx_power_dbm,
            bit_rate: DEFAULT_BIT_RATE,
            carrier_hz: DEFAULT_CARRIER_HZ,
            nodes: Vec::new(),
            schedule: Vec::new(),
            duration_s,
            noise_seed: None,
            noise_sigma_volts: 0.0,
        }
    }

    pub fn noise_enabled(&self) -> bool {
        self.noise_sigma_volts > 0.0
    }

    fn frame_duration_s(&self, frame: &WakeFrame) -> f64 {
        (frame.preamble_us + (codec::FRAME_BITS as f64 + 1.0) * 1e6 / self.bit_rate) / 1e6
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let invalid = |m: String| Err(SimError::Invalid(m));
        if !(self.duration_s > 0.0) {
            return invalid(format!("duration must be positive, got {} s", self.duration_s));
        }
        if !(self.bit_rate > 0.0) {
            return invalid(format!("bit rate must be positive, got {}", self.bit_rate));
        }
        if !(self.noise_sigma_volts >= 0.0) {
            return invalid("noise sigma must be non-negative".into());
        }
        self.link.validate().map_err(|e| SimError::Invalid(e.to_string()))?;
        let mut ids = HashSet::new();
        for node in &self.nodes {
            if !ids.insert(node.id.as_str()) {
                return invalid(format!("duplicate node id {:?}", node.id));
            }
            if !(node.distance_m >= self.link.reference_distance_m) {
                return Err(SimError::Node {
                    node: node.id.clone(),
                    event: None,
                    source: Box::new(AnalogError::DistanceBelowReference {
                        distance_m: node.distance_m,
                        reference_m: self.link.reference_distance_m,
                    }),
                });
            }
            node.chain.validate().map_err(|source| SimError::Node {
                node: node.id.clone(),
                event: None,
                source: Box::new(source),
            })?;
            node.profile.validate().map_err(|source| SimError::Energy {
                node: node.id.clone(),
                source,
            })?;
        }
        let mut busy_until = f64::NEG_INFINITY;
        for (i, ev) in self.schedule.iter().enumerate() {
            if !(ev.time_s >= 0.0 && ev.time_s <= self.duration_s) {
                return invalid(format!(
                    "event {i} at {} s lies outside [0, {}] s",
                    ev.time_s, self.duration_s
                ));
            }
            if !(ev.time_s >= busy_until) {
                return invalid(format!("event {i} at {} s overlaps the previous frame", ev.time_s));
            }
            busy_until = ev.time_s + self.frame_duration_s(&ev.frame);
            if busy_until > self.duration_s {
                return invalid(format!("event {i} runs past the end of the scenario"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time_s: f64,
    pub network_id: u8,
    pub address: u8,
    pub received_dbm: f64,
    pub addressed: bool,
    pub outcome: DecodeOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub id: String,
    pub frames_addressed: u64,
    pub true_wakes: u64,
    pub missed_wakes: u64,
    pub false_wakes: u64,
    /// Frames that brought the matcher MCU out of sleep.
    pub matcher_wakeups: u64,
    pub events: Vec<EventRecord>,
    pub ledger: EnergyLedger,
    pub average_current_ua: f64,
}

impl NodeReport {
    /// `time_s,network_id,address,received_dbm,addressed,outcome`
    pub fn write_events_csv<W: io::Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "time_s,network_id,address,received_dbm,addressed,outcome")?;
        for e in &self.events {
            writeln!(
                out,
                "{},0x{:02X},0x{:02X},{},{},{}",
                e.time_s,
                e.network_id,
                e.address,
                e.received_dbm,
                u8::from(e.addressed),
                e.outcome
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub duration_s: f64,
    pub frames: u64,
    pub true_wakes: u64,
    pub missed_wakes: u64,
    pub false_wakes: u64,
    pub nodes: Vec<NodeReport>,
}

#[derive(Serialize)]
struct NodeSummary<'a> {
    id: &'a str,
    frames_addressed: u64,
    true_wakes: u64,
    missed_wakes: u64,
    false_wakes: u64,
    matcher_wakeups: u64,
    charge_uc: f64,
    average_current_ua: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    duration_s: f64,
    frames: u64,
    true_wakes: u64,
    missed_wakes: u64,
    false_wakes: u64,
    nodes: Vec<NodeSummary<'a>>,
}

impl SimReport {
    pub fn summary_json(&self) -> String {
        let summary = Summary {
            duration_s: self.duration_s,
            frames: self.frames,
            true_wakes: self.true_wakes,
            missed_wakes: self.missed_wakes,
            false_wakes: self.false_wakes,
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeSummary {
                    id: &n.id,
                    frames_addressed: n.frames_addressed,
                    true_wakes: n.true_wakes,
                    missed_wakes: n.missed_wakes,
                    false_wakes: n.false_wakes,
                    matcher_wakeups: n.matcher_wakeups,
                    charge_uc: n.ledger.total_charge().as_uc(),
                    average_current_ua: n.average_current_ua,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&summary).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn node(&self, id: &str) -> Option<&NodeReport> {
        self.nodes.iter().find(|n| n.id == id)
    }
}

/// FNV-1a, used to derive a per-node noise stream from its id.
fn stream_id(node_id: &str) -> u64 {
    node_id.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

struct NodeState {
    report: NodeReport,
    noise: Option<EnvelopeNoise>,
    matcher_active_s: f64,
    host_active_s: f64,
}

pub fn run(scenario: &Scenario) -> Result<SimReport, SimError> {
    scenario.validate()?;
    let seed = scenario.noise_seed.unwrap_or(0);

    let mut states = scenario
        .nodes
        .iter()
        .map(|n| {
            let noise = if scenario.noise_enabled() {
                Some(
                    EnvelopeNoise::new(scenario.noise_sigma_volts, seed, stream_id(&n.id))
                        .map_err(|e| SimError::Invalid(e.to_string()))?,
                )
            } else {
                None
            };
            Ok(NodeState {
                report: NodeReport {
                    id: n.id.clone(),
                    frames_addressed: 0,
                    true_wakes: 0,
                    missed_wakes: 0,
                    false_wakes: 0,
                    matcher_wakeups: 0,
                    events: Vec::new(),
                    ledger: EnergyLedger::new(),
                    average_current_ua: 0.0,
                },
                noise,
                matcher_active_s: 0.0,
                host_active_s: 0.0,
            })
        })
        .collect::<Result<Vec<_>, SimError>>()?;

    for (i, ev) in scenario.schedule.iter().enumerate() {
        let timeline = codec::encode_frame(&ev.frame, scenario.bit_rate, scenario.tx_power_dbm)
            .map_err(|source| SimError::Frame { event: i, source })?
            .with_carrier(scenario.carrier_hz);
        let frame_s = timeline.duration_us() / 1e6;

        for (node, state) in scenario.nodes.iter().zip(states.iter_mut()) {
            let ctx = |source: AnalogError| SimError::Node {
                node: node.id.clone(),
                event: Some(i),
                source: Box::new(source),
            };
            let response = analog::chain_response_with_noise(
                &timeline,
                &node.chain,
                &scenario.link,
                node.distance_m,
                state.noise.as_mut(),
            )
            .map_err(ctx)?;
            let outcome = codec::decode_stream(&response.waveform, &node.chain.decoder)
                .map_err(|e| ctx(AnalogError::Codec(e)))?;
            let addressed = node.chain.decoder.accepts(&ev.frame);

            let r = &mut state.report;
            r.frames_addressed += u64::from(addressed);
            match (addressed, outcome.is_wake()) {
                (true, true) => r.true_wakes += 1,
                (true, false) => r.missed_wakes += 1,
                (false, true) => r.false_wakes += 1,
                (false, false) => {}
            }
            if outcome.matcher_woke() {
                r.matcher_wakeups += 1;
                state.matcher_active_s += frame_s;
            }
            if outcome.is_wake() {
                let remaining = scenario.duration_s - (ev.time_s + frame_s);
                state.host_active_s += node.profile.host_active_s.min(remaining.max(0.0));
            }
            r.events.push(EventRecord {
                time_s: ev.time_s,
                network_id: ev.frame.network_id,
                address: ev.frame.target_address,
                received_dbm: response.received_dbm,
                addressed,
                outcome,
            });
        }
    }

    let mut report = SimReport {
        duration_s: scenario.duration_s,
        frames: scenario.schedule.len() as u64,
        true_wakes: 0,
        missed_wakes: 0,
        false_wakes: 0,
        nodes: Vec::with_capacity(states.len()),
    };
    for (node, mut state) in scenario.nodes.iter().zip(states) {
        let p = &node.profile;
        let d = scenario.duration_s;
        let energy = |source| SimError::Energy {
            node: node.id.clone(),
            source,
        };
        let ledger = &mut state.report.ledger;
        ledger
            .record("receiver", p.wur_quiescent_na / 1000.0, d)
            .map_err(energy)?;
        ledger
            .record("matcher_sleep", p.mcu_sleep_na / 1000.0, d - state.matcher_active_s)
            .map_err(energy)?;
        ledger
            .record("matcher_active", p.mcu_active_ua(), state.matcher_active_s)
            .map_err(energy)?;
        ledger
            .record("host_sleep", p.host_sleep_na / 1000.0, d - state.host_active_s)
            .map_err(energy)?;
        ledger
            .record("host_active", p.host_active_ma * 1000.0, state.host_active_s)
            .map_err(energy)?;
        state.report.average_current_ua = ledger.average_over_ua(d);

        report.true_wakes += state.report.true_wakes;
        report.missed_wakes += state.report.missed_wakes;
        report.false_wakes += state.report.false_wakes;
        report.nodes.push(state.report);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub chain: String,
    /// `None` when the chain cannot decode even at 0 dBm.
    pub sensitivity_dbm: Option<f64>,
}

/// Sensitivity of each chain. With no `frame`, each chain is probed with a
/// frame for its own network and lowest address.
pub fn sensitivity_sweep(chains: &[ReceiverChain], frame: Option<&WakeFrame>) -> Result<Vec<SensitivityRow>, SimError> {
    if chains.is_empty() {
        return Err(SimError::NoChains);
    }
    chains
        .iter()
        .map(|c| {
            let own = WakeFrame::new(
                c.decoder.network_id,
                c.decoder.addresses.iter().next().copied().unwrap_or_default(),
            );
            let probe = frame.unwrap_or(&own);
            let sensitivity_dbm = match analog::sensitivity(c, probe) {
                Ok(s) => Some(s),
                Err(AnalogError::Undetectable) => None,
                Err(source) => {
                    return Err(SimError::Chain {
                        chain: c.name.clone(),
                        source: Box::new(source),
                    })
                }
            };
            Ok(SensitivityRow {
                chain: c.name.clone(),
                sensitivity_dbm,
            })
        })
        .collect()
}

pub fn write_sensitivity_csv<W: io::Write>(rows: &[SensitivityRow], mut out: W) -> io::Result<()> {
    writeln!(out, "chain,sensitivity_dbm")?;
    for r in rows {
        match r.sensitivity_dbm {
            Some(s) => writeln!(out, "{},{:.1}", r.chain, s)?,
            None => writeln!(out, "{},undetectable", r.chain)?,
        }
    }
    Ok(())
}
