//! TOML configuration for receiver chains and simulation scenarios.
//!
//! Physical quantities are strings with explicit units (`"27 mV"`, `"10 m"`),
//! ids and addresses are hex strings (`"0x5A"`) or integers.
//!
//! ```toml
//! [[chain]]
//! name = "ewake-default"
//! preset = "ewake-default"
//!
//! [[chain]]
//! name = "lpv7215-with-ref"
//! comparator = "LPV7215"
//! v_ref = "1 mV"
//! ```
//!
//! A scenario adds `duration`, `tx_power`, a `[link]` table, `[[node]]`
//! entries (which name a preset or a `[[chain]]` from the same file) and
//! `[[event]]` entries.

use std::collections::BTreeSet;
use std::ops::Range;

use serde::Deserialize;
use thiserror::Error;

use crate::analog::{
    AmplifierStage, AnalogError, ComparatorStage, DetectorCurve, LinkModel, LoadClass, MatchingSpec, ReceiverChain,
    SweepPlan, DEFAULT_Q,
};
use crate::catalog::{line_of, toml_error, Catalog, ComponentKind};
use crate::codec::{DecoderConfig, WakeFrame, DEFAULT_CARRIER_HZ, DEFAULT_PREAMBLE_US};
use crate::netsim::{NodeConfig, Scenario, ScheduledFrame};
use crate::units::{self, UnitError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: field `{field}`: {source}")]
    Unit {
        line: usize,
        field: &'static str,
        source: UnitError,
    },
    #[error("line {line}: {msg}")]
    Value { line: usize, msg: String },
    #[error("override {0:?}: {1}")]
    Override(String, String),
    #[error("chain {chain}: {source}")]
    Chain {
        chain: String,
        #[source]
        source: AnalogError,
    },
}

impl ConfigError {
    /// Errors that come from malformed input text rather than from a
    /// well-formed but physically invalid configuration.
    pub fn is_parse(&self) -> bool {
        matches!(
            self,
            ConfigError::Parse { .. }
                | ConfigError::Unit { .. }
                | ConfigError::Value { .. }
                | ConfigError::Override(..)
        )
    }
}

type Spanned<T> = toml::Spanned<T>;

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        line_of(self.text, span.start)
    }

    fn unit<T>(
        &self,
        field: &'static str,
        v: &Spanned<String>,
        f: impl Fn(&str) -> Result<T, UnitError>,
    ) -> Result<T, ConfigError> {
        f(v.get_ref()).map_err(|source| ConfigError::Unit {
            line: self.line(v.span()),
            field,
            source,
        })
    }

    fn opt_unit<T>(
        &self,
        field: &'static str,
        v: &Option<Spanned<String>>,
        f: impl Fn(&str) -> Result<T, UnitError>,
    ) -> Result<Option<T>, ConfigError> {
        v.as_ref().map(|v| self.unit(field, v, &f)).transpose()
    }

    fn id(&self, v: &Spanned<IdValue>) -> Result<u8, ConfigError> {
        v.get_ref().to_u8().map_err(|msg| ConfigError::Value {
            line: self.line(v.span()),
            msg,
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum IdValue {
    Int(i64),
    Str(String),
}

impl IdValue {
    fn to_u8(&self) -> Result<u8, String> {
        match self {
            IdValue::Int(i) => u8::try_from(*i).map_err(|_| format!("{i} does not fit in 8 bits")),
            IdValue::Str(s) => parse_id(s),
        }
    }
}

/// `0x`-prefixed hex or decimal, 0..=255.
pub fn parse_id(s: &str) -> Result<u8, String> {
    let t = s.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u8::from_str_radix(hex, 16),
        None => t.parse::<u8>(),
    };
    parsed.map_err(|_| format!("{s:?} is not an 8-bit id (use 0x-hex or decimal)"))
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    fn value(&self) -> f64 {
        match *self {
            Number::Int(i) => i as f64,
            Number::Float(f) => f,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChain {
    name: Spanned<String>,
    preset: Option<Spanned<String>>,
    comparator: Option<Spanned<String>>,
    v_ref: Option<Spanned<String>>,
    v_os: Option<Spanned<String>>,
    hysteresis: Option<Spanned<String>>,
    amplifier: Option<Spanned<String>>,
    gain: Option<Number>,
    rail: Option<Spanned<String>>,
    detector: Option<Spanned<String>>,
    detector_anchors: Option<Vec<(Spanned<String>, Spanned<String>)>>,
    detector_slope: Option<Number>,
    inductance: Option<Spanned<String>>,
    capacitance: Option<Spanned<String>>,
    q: Option<Number>,
    band_center: Option<Spanned<String>>,
    network_id: Option<Spanned<IdValue>>,
    addresses: Option<Vec<Spanned<IdValue>>>,
    bit_rate: Option<Spanned<String>>,
    wake_delay: Option<Spanned<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainFile {
    #[serde(default)]
    chain: Vec<RawChain>,
}

const DEFAULT_EWAKE_GAIN: f64 = 100.0;
const DEFAULT_RAIL: f64 = 3.3;

fn build_chain(ctx: &Ctx, raw: &RawChain, catalog: &Catalog) -> Result<ReceiverChain, ConfigError> {
    let name = raw.name.get_ref().clone();
    let chain_err = |source: AnalogError| ConfigError::Chain {
        chain: name.clone(),
        source,
    };
    let base = match &raw.preset {
        Some(p) => Some(crate::analog::preset(p.get_ref(), catalog).map_err(|e| match e {
            AnalogError::UnknownPreset(_) => ConfigError::Value {
                line: ctx.line(p.span()),
                msg: e.to_string(),
            },
            other => chain_err(other),
        })?),
        None => None,
    };
    if base.is_none() && raw.comparator.is_none() {
        return Err(ConfigError::Value {
            line: ctx.line(raw.name.span()),
            msg: format!("chain {name}: needs either `preset` or `comparator`"),
        });
    }

    // comparator
    let comparator = {
        let spec = match &raw.comparator {
            Some(c) => catalog
                .get_kind(c.get_ref(), ComponentKind::Comparator)
                .map_err(|e| ConfigError::Value {
                    line: ctx.line(c.span()),
                    msg: e.to_string(),
                })?
                .clone(),
            None => base.as_ref().map(|b| b.comparator.spec.clone()).expect("checked above"),
        };
        let prev = base.as_ref().map(|b| &b.comparator);
        let v_ref = ctx.opt_unit("v_ref", &raw.v_ref, units::parse_volts)?;
        let v_ref = v_ref.or(prev.map(|c| c.v_ref)).unwrap_or(0.0);
        let hysteresis = ctx
            .opt_unit("hysteresis", &raw.hysteresis, units::parse_volts)?
            .or(prev.map(|c| c.hysteresis))
            .unwrap_or(0.0);
        let v_os = ctx.opt_unit("v_os", &raw.v_os, units::parse_volts)?;
        ComparatorStage::new(spec, v_ref, hysteresis, v_os).map_err(chain_err)?
    };

    // amplifier
    let amplifier = match &raw.amplifier {
        Some(a) if a.get_ref() == "none" => None,
        Some(a) => {
            let spec = catalog
                .get_kind(a.get_ref(), ComponentKind::OpAmp)
                .map_err(|e| ConfigError::Value {
                    line: ctx.line(a.span()),
                    msg: e.to_string(),
                })?
                .clone();
            let prev = base.as_ref().and_then(|b| b.amplifier.as_ref());
            let gain = raw
                .gain
                .as_ref()
                .map(Number::value)
                .or(prev.map(|p| p.gain))
                .unwrap_or(DEFAULT_EWAKE_GAIN);
            let rail = ctx
                .opt_unit("rail", &raw.rail, units::parse_volts)?
                .or(prev.map(|p| p.rail))
                .unwrap_or(DEFAULT_RAIL);
            Some(AmplifierStage::new(spec, gain, rail).map_err(chain_err)?)
        }
        None => match base.as_ref().and_then(|b| b.amplifier.clone()) {
            Some(mut amp) => {
                if let Some(g) = &raw.gain {
                    amp.gain = g.value();
                }
                if let Some(r) = ctx.opt_unit("rail", &raw.rail, units::parse_volts)? {
                    amp.rail = r;
                }
                Some(AmplifierStage::new(amp.spec, amp.gain, amp.rail).map_err(chain_err)?)
            }
            None => None,
        },
    };

    // detector
    let load = if amplifier.is_some() {
        LoadClass::HighImpedance
    } else {
        LoadClass::DirectLoad
    };
    let detector = match (&raw.detector, &raw.detector_anchors) {
        (_, Some(anchors)) => {
            let pts = anchors
                .iter()
                .map(|(p, v)| {
                    Ok((
                        ctx.unit("detector_anchors", p, units::parse_dbm)?,
                        ctx.unit("detector_anchors", v, units::parse_volts)?,
                    ))
                })
                .collect::<Result<Vec<_>, ConfigError>>()?;
            let class = match &raw.detector {
                Some(d) => parse_load(ctx, d)?,
                None => load,
            };
            let slope = raw
                .detector_slope
                .as_ref()
                .map_or(crate::analog::SQUARE_LAW_SLOPE, Number::value);
            DetectorCurve::new(pts, slope, class).map_err(chain_err)?
        }
        (Some(d), None) => DetectorCurve::for_load(parse_load(ctx, d)?),
        (None, None) => match &base {
            Some(b) if b.detector.load_class() == load => b.detector.clone(),
            _ => DetectorCurve::for_load(load),
        },
    };

    // matching network
    let base_match = base.as_ref().map(|b| b.matching);
    let band_center = ctx
        .opt_unit("band_center", &raw.band_center, units::parse_hertz)?
        .or(base_match.map(|m| m.band_center_hz))
        .unwrap_or(DEFAULT_CARRIER_HZ);
    let q = raw
        .q
        .as_ref()
        .map(Number::value)
        .or(base_match.map(|m| m.quality_factor))
        .unwrap_or(DEFAULT_Q);
    let l = ctx.opt_unit("inductance", &raw.inductance, |s| units::parse_quantity(s, "H", -9))?;
    let c = ctx.opt_unit("capacitance", &raw.capacitance, |s| units::parse_quantity(s, "F", -12))?;
    let matching = match (l, c) {
        (Some(l), Some(c)) => MatchingSpec::new(l, c, q, band_center),
        (Some(l), None) => MatchingSpec::tuned(l, band_center, q),
        (None, Some(_)) => {
            return Err(ConfigError::Value {
                line: ctx.line(raw.name.span()),
                msg: format!("chain {name}: `capacitance` given without `inductance`"),
            })
        }
        (None, None) => match base_match {
            Some(m) if m.band_center_hz == band_center => MatchingSpec { quality_factor: q, ..m },
            _ => MatchingSpec::tuned(10.0, band_center, q),
        },
    };

    // decoder
    let mut decoder = base
        .as_ref()
        .map(|b| b.decoder.clone())
        .unwrap_or_else(|| DecoderConfig::new(0x5A, [0x01]));
    if let Some(n) = &raw.network_id {
        decoder.network_id = ctx.id(n)?;
    }
    if let Some(addrs) = &raw.addresses {
        decoder.addresses = addrs.iter().map(|a| ctx.id(a)).collect::<Result<BTreeSet<_>, _>>()?;
    }
    if let Some(r) = ctx.opt_unit("bit_rate", &raw.bit_rate, units::parse_bit_rate)? {
        decoder.bit_rate = r;
    }
    if let Some(d) = ctx.opt_unit("wake_delay", &raw.wake_delay, units::parse_micros)? {
        decoder.wake_delay_us = d;
    }

    ReceiverChain::new(name.clone(), matching, detector, amplifier, comparator, decoder).map_err(chain_err)
}

fn parse_load(ctx: &Ctx, d: &Spanned<String>) -> Result<LoadClass, ConfigError> {
    match d.get_ref().as_str() {
        "direct-load" => Ok(LoadClass::DirectLoad),
        "high-impedance" => Ok(LoadClass::HighImpedance),
        other => Err(ConfigError::Value {
            line: ctx.line(d.span()),
            msg: format!("unknown detector calibration {other:?} (direct-load | high-impedance)"),
        }),
    }
}

fn parse_toml<'de, T: Deserialize<'de>>(text: &'de str) -> Result<T, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let (line, msg) = toml_error(text, &e);
        ConfigError::Parse { line, msg }
    })
}

/// Parses a chain file: a list of `[[chain]]` tables.
pub fn load_chains(text: &str, catalog: &Catalog) -> Result<Vec<ReceiverChain>, ConfigError> {
    let file: ChainFile = parse_toml(text)?;
    let ctx = Ctx { text };
    file.chain.iter().map(|c| build_chain(&ctx, c, catalog)).collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLink {
    reference_distance: Option<Spanned<String>>,
    reference_path_loss: Option<Spanned<String>>,
    path_loss_exponent: Option<Number>,
    extra_attenuation: Option<Spanned<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: Spanned<String>,
    distance: Spanned<String>,
    chain: Spanned<String>,
    network_id: Option<Spanned<IdValue>>,
    addresses: Option<Vec<Spanned<IdValue>>>,
    host_active: Option<Spanned<String>>,
    host_active_time: Option<Spanned<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    time: Spanned<String>,
    network_id: Spanned<IdValue>,
    address: Spanned<IdValue>,
    preamble: Option<Spanned<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    duration: Spanned<String>,
    tx_power: Spanned<String>,
    bit_rate: Option<Spanned<String>>,
    carrier: Option<Spanned<String>>,
    noise_sigma: Option<Spanned<String>>,
    noise_seed: Option<u64>,
    link: Option<RawLink>,
    #[serde(default)]
    chain: Vec<RawChain>,
    #[serde(default)]
    node: Vec<RawNode>,
    #[serde(default)]
    event: Vec<RawEvent>,
}

/// Parses a scenario file. Node chains name a bundled preset or a
/// `[[chain]]` defined in the same file.
pub fn load_scenario(text: &str, catalog: &Catalog) -> Result<Scenario, ConfigError> {
    let raw: RawScenario = parse_toml(text)?;
    let ctx = Ctx { text };

    let mut link = LinkModel::default();
    if let Some(l) = &raw.link {
        if let Some(d) = ctx.opt_unit("reference_distance", &l.reference_distance, units::parse_meters)? {
            link.reference_distance_m = d;
        }
        if let Some(pl) = ctx.opt_unit("reference_path_loss", &l.reference_path_loss, units::parse_db)? {
            link.reference_path_loss_db = pl;
        }
        if let Some(n) = &l.path_loss_exponent {
            link.path_loss_exponent = n.value();
        }
        if let Some(a) = ctx.opt_unit("extra_attenuation", &l.extra_attenuation, units::parse_db)? {
            link.extra_attenuation_db = a;
        }
    }

    let mut scenario = Scenario::new(
        link,
        ctx.unit("tx_power", &raw.tx_power, units::parse_dbm)?,
        ctx.unit("duration", &raw.duration, units::parse_seconds)?,
    );
    if let Some(r) = ctx.opt_unit("bit_rate", &raw.bit_rate, units::parse_bit_rate)? {
        scenario.bit_rate = r;
    }
    if let Some(c) = ctx.opt_unit("carrier", &raw.carrier, units::parse_hertz)? {
        scenario.carrier_hz = c;
    }
    if let Some(s) = ctx.opt_unit("noise_sigma", &raw.noise_sigma, units::parse_volts)? {
        scenario.noise_sigma_volts = s;
    }
    scenario.noise_seed = raw.noise_seed;

    let inline = raw
        .chain
        .iter()
        .map(|c| build_chain(&ctx, c, catalog))
        .collect::<Result<Vec<_>, _>>()?;

    for n in &raw.node {
        let chain_name = n.chain.get_ref();
        let mut chain = match inline.iter().find(|c| &c.name == chain_name) {
            Some(c) => c.clone(),
            None => crate::analog::preset(chain_name, catalog).map_err(|e| ConfigError::Value {
                line: ctx.line(n.chain.span()),
                msg: e.to_string(),
            })?,
        };
        if let Some(id) = &n.network_id {
            chain.decoder.network_id = ctx.id(id)?;
        }
        if let Some(addrs) = &n.addresses {
            chain.decoder.addresses = addrs.iter().map(|a| ctx.id(a)).collect::<Result<BTreeSet<_>, _>>()?;
        }
        let mut node = NodeConfig::new(
            n.id.get_ref().clone(),
            ctx.unit("distance", &n.distance, units::parse_meters)?,
            chain,
        );
        if let Some(ma) = ctx.opt_unit("host_active", &n.host_active, |s| units::parse_quantity(s, "A", -3))? {
            node.profile.host_active_ma = ma;
        }
        if let Some(t) = ctx.opt_unit("host_active_time", &n.host_active_time, units::parse_seconds)? {
            node.profile.host_active_s = t;
        }
        scenario.nodes.push(node);
    }

    for e in &raw.event {
        let mut frame = WakeFrame::new(ctx.id(&e.network_id)?, ctx.id(&e.address)?);
        frame.preamble_us = ctx
            .opt_unit("preamble", &e.preamble, units::parse_micros)?
            .unwrap_or(DEFAULT_PREAMBLE_US);
        scenario.schedule.push(ScheduledFrame {
            time_s: ctx.unit("time", &e.time, units::parse_seconds)?,
            frame,
        });
    }
    Ok(scenario)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    band_center: Option<Spanned<String>>,
    span: Option<Spanned<String>>,
    step: Option<Spanned<String>>,
    probe_power: Option<Spanned<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCandidate {
    inductance: Spanned<String>,
    capacitance: Spanned<String>,
    q: Option<Number>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateFile {
    sweep: Option<RawSweep>,
    #[serde(default)]
    candidate: Vec<RawCandidate>,
}

/// Parses a tuning file: an optional `[sweep]` table and `[[candidate]]`
/// L-C pairs.
pub fn load_candidates(text: &str) -> Result<(SweepPlan, Vec<MatchingSpec>), ConfigError> {
    let file: CandidateFile = parse_toml(text)?;
    let ctx = Ctx { text };
    let mut plan = SweepPlan::default();
    if let Some(s) = &file.sweep {
        if let Some(v) = ctx.opt_unit("band_center", &s.band_center, units::parse_hertz)? {
            plan.band_center_hz = v;
        }
        if let Some(v) = ctx.opt_unit("span", &s.span, units::parse_hertz)? {
            plan.span_hz = v;
        }
        if let Some(v) = ctx.opt_unit("step", &s.step, units::parse_hertz)? {
            plan.step_hz = v;
        }
        if let Some(v) = ctx.opt_unit("probe_power", &s.probe_power, units::parse_dbm)? {
            plan.probe_power_dbm = v;
        }
    }
    let candidates = file
        .candidate
        .iter()
        .map(|c| {
            Ok(MatchingSpec::new(
                ctx.unit("inductance", &c.inductance, |s| units::parse_quantity(s, "H", -9))?,
                ctx.unit("capacitance", &c.capacitance, |s| units::parse_quantity(s, "F", -12))?,
                c.q.as_ref().map_or(DEFAULT_Q, Number::value),
                plan.band_center_hz,
            ))
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;
    Ok((plan, candidates))
}

/// Applies `key=value` overrides to a TOML document. Keys are dotted paths;
/// array elements are addressed by index (`node.1.distance=500m`). Every
/// path must already exist. Values that parse as TOML literals keep their
/// type, anything else becomes a string.
pub fn apply_overrides(text: &str, overrides: &[String]) -> Result<String, ConfigError> {
    if overrides.is_empty() {
        return Ok(text.to_string());
    }
    let mut doc: toml::Table = parse_toml(text)?;
    for ov in overrides {
        let err = |m: &str| ConfigError::Override(ov.clone(), m.to_string());
        let (path, value) = ov.split_once('=').ok_or_else(|| err("expected key=value"))?;
        let value = value.trim();
        let new_value = format!("v = {value}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));

        let keys: Vec<&str> = path.trim().split('.').collect();
        let (last, parents) = keys.split_last().ok_or_else(|| err("empty key"))?;
        let mut cursor: &mut toml::Value = doc
            .get_mut(parents.first().copied().unwrap_or(last))
            .ok_or_else(|| err("no such key"))?;
        if parents.is_empty() {
            *cursor = new_value;
            continue;
        }
        for key in &parents[1..] {
            cursor = step(cursor, key).ok_or_else(|| err("no such key"))?;
        }
        let slot = step(cursor, last).ok_or_else(|| err("no such key"))?;
        *slot = new_value;
    }
    Ok(toml::to_string(&doc).expect("toml table serializes"))
}

fn step<'a>(v: &'a mut toml::Value, key: &str) -> Option<&'a mut toml::Value> {
    match v {
        toml::Value::Table(t) => t.get_mut(key),
        toml::Value::Array(a) => a.get_mut(key.parse::<usize>().ok()?),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analog::preset;
    use crate::catalog::builtin_catalog;

    #[test]
    fn preset_chain_round_trips() {
        let cat = builtin_catalog();
        let chains = load_chains(
            "[[chain]]\nname = \"ewake-default\"\npreset = \"ewake-default\"\n",
            &cat,
        )
        .unwrap();
        assert_eq!(chains[0], preset("ewake-default", &cat).unwrap());
    }

    #[test]
    fn explicit_chain_matches_preset() {
        let cat = builtin_catalog();
        let text = r#"
[[chain]]
name = "ewake-default"
comparator = "TLV3691"
v_ref = "27 mV"
amplifier = "LPV811"
gain = 100
rail = "3.3 V"
network_id = "0x5A"
addresses = ["0x01"]
"#;
        let chains = load_chains(text, &cat).unwrap();
        assert_eq!(chains[0], preset("ewake-default", &cat).unwrap());
    }

    #[test]
    fn preset_fields_can_be_overridden() {
        let cat = builtin_catalog();
        let text = "[[chain]]\nname = \"x\"\npreset = \"ewake-default\"\ngain = 50\naddresses = [1, \"0x02\"]\n";
        let c = &load_chains(text, &cat).unwrap()[0];
        assert_eq!(c.amplifier.as_ref().unwrap().gain, 50.0);
        assert_eq!(c.decoder.addresses, BTreeSet::from([1, 2]));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cat = builtin_catalog();
        let bad_syntax = "[[chain]]\nname = \"x\"\npreset = = \"ewake-default\"\n";
        assert!(matches!(
            load_chains(bad_syntax, &cat),
            Err(ConfigError::Parse { line: 3, .. })
        ));

        let bad_unit = "[[chain]]\nname = \"x\"\npreset = \"ewake-default\"\nv_ref = \"27\"\n";
        assert!(matches!(
            load_chains(bad_unit, &cat),
            Err(ConfigError::Unit {
                line: 4,
                field: "v_ref",
                ..
            })
        ));

        let bad_part = "[[chain]]\nname = \"x\"\ncomparator = \"NOPE\"\n";
        assert!(matches!(
            load_chains(bad_part, &cat),
            Err(ConfigError::Value { line: 3, .. })
        ));

        let bad_id = "[[chain]]\nname = \"x\"\npreset = \"ewake-default\"\nnetwork_id = \"0x1FF\"\n";
        assert!(matches!(
            load_chains(bad_id, &cat),
            Err(ConfigError::Value { line: 4, .. })
        ));
    }

    #[test]
    fn missing_offset_needs_override() {
        let cat = builtin_catalog();
        let text = "[[chain]]\nname = \"ltc\"\ncomparator = \"LTC1540\"\n";
        assert!(matches!(
            load_chains(text, &cat),
            Err(ConfigError::Chain {
                source: AnalogError::MissingOffset(_),
                ..
            })
        ));
        let text = "[[chain]]\nname = \"ltc\"\ncomparator = \"LTC1540\"\nv_os = \"500 uV\"\n";
        assert_eq!(load_chains(text, &cat).unwrap()[0].comparator.v_os, 500e-6);
    }

    const SCENARIO: &str = r#"
duration = "1 s"
tx_power = "14 dBm"

[link]
reference_distance = "1 m"
reference_path_loss = "31.2 dB"
path_loss_exponent = 2

[[node]]
id = "a"
distance = "10 m"
chain = "ewake-default"
addresses = ["0x01"]

[[node]]
id = "b"
distance = "10 m"
chain = "mine"

[[chain]]
name = "mine"
preset = "ewake-default"
addresses = ["0x02"]

[[event]]
time = "100 ms"
network_id = "0x5A"
address = "0x02"
"#;

    #[test]
    fn scenario_parses() {
        let s = load_scenario(SCENARIO, &builtin_catalog()).unwrap();
        assert_eq!(s.nodes.len(), 2);
        assert_eq!(s.nodes[1].chain.decoder.addresses, BTreeSet::from([2]));
        assert_eq!(s.schedule[0].time_s, 0.1);
        assert_eq!(s.link, LinkModel::default());
        assert_eq!(s.tx_power_dbm, 14.0);
    }

    #[test]
    fn overrides_edit_existing_keys_only() {
        let text = apply_overrides(SCENARIO, &["node.1.distance=500m".into(), "tx_power=\"0 dBm\"".into()]).unwrap();
        let s = load_scenario(&text, &builtin_catalog()).unwrap();
        assert_eq!(s.nodes[1].distance_m, 500.0);
        assert_eq!(s.tx_power_dbm, 0.0);
        let text = apply_overrides(SCENARIO, &["link.path_loss_exponent=3".into()]).unwrap();
        assert_eq!(
            load_scenario(&text, &builtin_catalog())
                .unwrap()
                .link
                .path_loss_exponent,
            3.0
        );

        assert!(matches!(
            apply_overrides(SCENARIO, &["node.7.distance=1m".into()]),
            Err(ConfigError::Override(..))
        ));
        assert!(matches!(
            apply_overrides(SCENARIO, &["nope=1".into()]),
            Err(ConfigError::Override(..))
        ));
        assert!(matches!(
            apply_overrides(SCENARIO, &["tx_power".into()]),
            Err(ConfigError::Override(..))
        ));
    }

    #[test]
    fn candidates_parse_with_sweep_defaults() {
        let text = "[sweep]\nstep = \"2 MHz\"\n\n[[candidate]]\ninductance = \"10 nH\"\ncapacitance = \"3.3 pF\"\n";
        let (plan, c) = load_candidates(text).unwrap();
        assert_eq!(plan.step_hz, 2e6);
        assert_eq!(plan.band_center_hz, 868e6);
        assert_eq!(c, vec![MatchingSpec::new(10.0, 3.3, DEFAULT_Q, 868e6)]);
        assert!(matches!(
            load_candidates("[[candidate]]\ninductance = \"10\"\ncapacitance = \"3.3 pF\"\n"),
            Err(ConfigError::Unit { line: 2, .. })
        ));
    }

    #[test]
    fn ids_accept_hex_and_decimal() {
        assert_eq!(parse_id("0x5A"), Ok(0x5A));
        assert_eq!(parse_id("90"), Ok(90));
        assert!(parse_id("256").is_err());
        assert!(parse_id("0xZZ").is_err());
    }
}
