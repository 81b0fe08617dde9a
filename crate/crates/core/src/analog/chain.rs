use std::io;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    amplify, compare, detect_envelope, matching_gain, received_power, AmplifierStage, AnalogError, ComparatorStage,
    DetectorCurve, LinkModel, LoadClass, MatchingSpec, DEFAULT_Q,
};
use crate::catalog::{Catalog, ComponentKind};
use crate::codec::{self, DecoderConfig, OokTimeline, Sample, WakeFrame, Waveform, DEFAULT_CARRIER_HZ};

pub const SENSITIVITY_FLOOR_DBM: f64 = -120.0;
pub const SENSITIVITY_CEILING_DBM: f64 = 0.0;
const BISECTION_TOLERANCE_DB: f64 = 1e-3;
const REPORT_RESOLUTION_DB: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverChain {
    pub name: String,
    pub matching: MatchingSpec,
    pub detector: DetectorCurve,
    pub amplifier: Option<AmplifierStage>,
    pub comparator: ComparatorStage,
    pub decoder: DecoderConfig,
}

impl ReceiverChain {
    pub fn new(
        name: impl Into<String>,
        matching: MatchingSpec,
        detector: DetectorCurve,
        amplifier: Option<AmplifierStage>,
        comparator: ComparatorStage,
        decoder: DecoderConfig,
    ) -> Result<Self, AnalogError> {
        let chain = Self {
            name: name.into(),
            matching,
            detector,
            amplifier,
            comparator,
            decoder,
        };
        chain.validate()?;
        Ok(chain)
    }

    pub fn validate(&self) -> Result<(), AnalogError> {
        self.matching.validate()?;
        self.decoder.validate()?;
        let expected = if self.amplifier.is_some() {
            LoadClass::HighImpedance
        } else {
            LoadClass::DirectLoad
        };
        if self.detector.load_class() != expected {
            return Err(AnalogError::LoadMismatch {
                chain: self.name.clone(),
                load: self.detector.load_class(),
            });
        }
        Ok(())
    }

    /// Rectifier-side voltage the comparator needs, referred back through the
    /// gain stage.
    pub fn input_referred_threshold(&self) -> f64 {
        let gain = self.amplifier.as_ref().map_or(1.0, |a| a.gain);
        self.comparator.threshold() / gain
    }
}

pub const PRESET_NAMES: &[&str] = &["ewake-default", "ewake-lpv801", "direct-tlv3691", "direct-lpv7215"];

const EWAKE_GAIN: f64 = 100.0;
const EWAKE_RAIL: f64 = 3.3;
const EWAKE_V_REF: f64 = 27e-3;
const PRESET_NETWORK: u8 = 0x5A;
const PRESET_ADDRESS: u8 = 0x01;

/// Bundled receiver configurations.
///
/// `ewake-*` put a x100 op-amp in front of a TLV3691 with a 27 mV reference.
/// `direct-*` feed the rectifier straight into the comparator, threshold = V_OS.
pub fn preset(name: &str, catalog: &Catalog) -> Result<ReceiverChain, AnalogError> {
    let matching = MatchingSpec::tuned(10.0, DEFAULT_CARRIER_HZ, DEFAULT_Q);
    let decoder = DecoderConfig::new(PRESET_NETWORK, [PRESET_ADDRESS]);
    let comparator = |part: &str, v_ref: f64| -> Result<ComparatorStage, AnalogError> {
        let spec = catalog.get_kind(part, ComponentKind::Comparator)?.clone();
        ComparatorStage::new(spec, v_ref, 0.0, None)
    };
    let ewake = |amp: &str| -> Result<ReceiverChain, AnalogError> {
        let spec = catalog.get_kind(amp, ComponentKind::OpAmp)?.clone();
        ReceiverChain::new(
            name,
            matching,
            DetectorCurve::high_impedance(),
            Some(AmplifierStage::new(spec, EWAKE_GAIN, EWAKE_RAIL)?),
            comparator("TLV3691", EWAKE_V_REF)?,
            decoder.clone(),
        )
    };
    let direct = |part: &str| -> Result<ReceiverChain, AnalogError> {
        ReceiverChain::new(
            name,
            matching,
            DetectorCurve::direct_load(),
            None,
            comparator(part, 0.0)?,
            decoder.clone(),
        )
    };
    match name {
        "ewake-default" => ewake("LPV811"),
        "ewake-lpv801" => ewake("LPV801"),
        "direct-tlv3691" => direct("TLV3691"),
        "direct-lpv7215" => direct("LPV7215"),
        _ => Err(AnalogError::UnknownPreset(name.to_string())),
    }
}

/// Seeded additive Gaussian noise on the rectifier output.
#[derive(Debug, Clone)]
pub struct EnvelopeNoise {
    rng: ChaCha8Rng,
    normal: Normal<f64>,
}

impl EnvelopeNoise {
    pub fn new(sigma_volts: f64, seed: u64, stream: u64) -> Result<Self, AnalogError> {
        let normal = Normal::new(0.0, sigma_volts)
            .map_err(|_| AnalogError::Invalid(format!("noise sigma must be non-negative, got {sigma_volts}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(Self { rng, normal })
    }

    fn sample(&mut self) -> f64 {
        self.normal.sample(&mut self.rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub time_us: f64,
    /// Rectifier output.
    pub testpoint_a: f64,
    /// Comparator input: amplifier output, or the rectifier output when there
    /// is no gain stage.
    pub testpoint_b: f64,
    pub comparator: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainResponse {
    pub received_dbm: f64,
    pub waveform: Waveform,
    pub trace: Vec<TracePoint>,
}

impl ChainResponse {
    pub fn write_trace_csv<W: io::Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "time_us,testpoint_a_volts,testpoint_b_volts,comparator")?;
        for p in &self.trace {
            writeln!(
                out,
                "{},{:e},{:e},{}",
                p.time_us,
                p.testpoint_a,
                p.testpoint_b,
                u8::from(p.comparator)
            )?;
        }
        Ok(())
    }
}

pub fn chain_response(
    timeline: &OokTimeline,
    chain: &ReceiverChain,
    link: &LinkModel,
    distance_m: f64,
) -> Result<ChainResponse, AnalogError> {
    chain_response_with_noise(timeline, chain, link, distance_m, None)
}

pub fn chain_response_with_noise(
    timeline: &OokTimeline,
    chain: &ReceiverChain,
    link: &LinkModel,
    distance_m: f64,
    noise: Option<&mut EnvelopeNoise>,
) -> Result<ChainResponse, AnalogError> {
    let received = received_power(timeline.tx_power_dbm, link, distance_m)?;
    inject(timeline, chain, received, noise)
}

/// Runs the timeline through the chain with `received_dbm` at the antenna
/// port whenever the carrier is on. The comparator is evaluated at every
/// segment start, every segment midpoint, and once after the frame ends.
pub fn inject(
    timeline: &OokTimeline,
    chain: &ReceiverChain,
    received_dbm: f64,
    mut noise: Option<&mut EnvelopeNoise>,
) -> Result<ChainResponse, AnalogError> {
    let on_dbm = received_dbm + matching_gain(timeline.carrier_hz, &chain.matching)?;
    let on_volts = detect_envelope(on_dbm, &chain.detector);

    let mut instants: Vec<(f64, bool)> = Vec::with_capacity(2 * timeline.segments.len() + 1);
    for (start, seg) in timeline.spans() {
        instants.push((start, seg.carrier));
        instants.push((start + seg.duration_us / 2.0, seg.carrier));
    }
    instants.push((timeline.duration_us(), false));

    let mut high = false;
    let mut trace = Vec::with_capacity(instants.len());
    for (time_us, carrier) in instants {
        let clean = if carrier { on_volts } else { 0.0 };
        let testpoint_a = match noise.as_deref_mut() {
            Some(n) => clean + n.sample(),
            None => clean,
        };
        let testpoint_b = match &chain.amplifier {
            Some(amp) => amplify(testpoint_a, amp),
            None => testpoint_a,
        };
        high = compare(testpoint_b, &chain.comparator, high);
        trace.push(TracePoint {
            time_us,
            testpoint_a,
            testpoint_b,
            comparator: high,
        });
    }
    let waveform = Waveform::new(
        trace
            .iter()
            .map(|p| Sample {
                time_us: p.time_us,
                level: p.comparator,
            })
            .collect(),
    );
    Ok(ChainResponse {
        received_dbm,
        waveform,
        trace,
    })
}

fn wakes_at(timeline: &mut OokTimeline, chain: &ReceiverChain, power_dbm: f64) -> Result<bool, AnalogError> {
    timeline.tx_power_dbm = power_dbm;
    let response = inject(timeline, chain, power_dbm, None)?;
    Ok(codec::decode_stream(&response.waveform, &chain.decoder)?.is_wake())
}

/// Lowest antenna-port power (dBm, 0.1 dB resolution) at which `frame`
/// decodes to a wake, found by bisection over [-120, 0] dBm.
pub fn sensitivity(chain: &ReceiverChain, frame: &WakeFrame) -> Result<f64, AnalogError> {
    chain.validate()?;
    let mut timeline = codec::encode_frame_checked(
        frame,
        chain.decoder.bit_rate,
        SENSITIVITY_CEILING_DBM,
        chain.decoder.wake_delay_us,
    )?
    .with_carrier(chain.matching.band_center_hz);

    if !wakes_at(&mut timeline, chain, SENSITIVITY_CEILING_DBM)? {
        return Err(AnalogError::Undetectable);
    }
    if wakes_at(&mut timeline, chain, SENSITIVITY_FLOOR_DBM)? {
        return Ok(SENSITIVITY_FLOOR_DBM);
    }
    let (mut miss, mut hit) = (SENSITIVITY_FLOOR_DBM, SENSITIVITY_CEILING_DBM);
    while hit - miss > BISECTION_TOLERANCE_DB {
        let mid = 0.5 * (miss + hit);
        if wakes_at(&mut timeline, chain, mid)? {
            hit = mid;
        } else {
            miss = mid;
        }
    }
    Ok((hit / REPORT_RESOLUTION_DB).round() * REPORT_RESOLUTION_DB)
}
