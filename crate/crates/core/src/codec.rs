//! Wake-up frame encoding into OOK envelope timelines, and the address-matching
//! decoder that turns a binary comparator stream back into a wake decision.
//!
//! Frame layout on air:
//!
//! ```text
//! | preamble (carrier ON) | delimiter (OFF, 1 bit) | network id (8 bits) | address (8 bits) |
//! ```
//!
//! Bits are sent MSB first, carrier ON for `1`.

use std::collections::BTreeSet;
use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_BIT_RATE: f64 = 1000.0;
pub const DEFAULT_WAKE_DELAY_US: f64 = 5.0;
pub const DEFAULT_PREAMBLE_US: f64 = 10.0;
pub const DEFAULT_CARRIER_HZ: f64 = 868.0e6;
pub const FRAME_BITS: usize = 16;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("bit rate must be positive, got {0}")]
    BitRate(f64),
    #[error("preamble duration must be positive, got {0} us")]
    Preamble(f64),
    #[error("preamble of {preamble_us} us is shorter than the decoder wake delay of {wake_delay_us} us")]
    PreambleTooShort { preamble_us: f64, wake_delay_us: f64 },
    #[error("waveform timestamps must be strictly increasing (sample {index})")]
    NonMonotonic { index: usize },
    #[error("invalid decoder config: {0}")]
    Config(&'static str),
    #[error("waveform csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WakeFrame {
    pub network_id: u8,
    pub target_address: u8,
    pub preamble_us: f64,
}

impl WakeFrame {
    pub fn new(network_id: u8, target_address: u8) -> Self {
        Self {
            network_id,
            target_address,
            preamble_us: DEFAULT_PREAMBLE_US,
        }
    }

    pub fn with_preamble(mut self, preamble_us: f64) -> Self {
        self.preamble_us = preamble_us;
        self
    }
}

/// Network id then address, each MSB first.
pub fn frame_bits(frame: &WakeFrame) -> [bool; FRAME_BITS] {
    let word = u16::from_be_bytes([frame.network_id, frame.target_address]);
    std::array::from_fn(|i| word & (0x8000 >> i) != 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentRole {
    Preamble,
    Delimiter,
    Payload,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub duration_us: f64,
    pub carrier: bool,
    pub role: SegmentRole,
}

/// Piecewise-constant carrier envelope of one transmitted frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OokTimeline {
    pub tx_power_dbm: f64,
    pub bit_rate: f64,
    pub carrier_hz: f64,
    pub segments: Vec<Segment>,
}

impl OokTimeline {
    pub fn bit_period_us(&self) -> f64 {
        1e6 / self.bit_rate
    }

    pub fn duration_us(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_us).sum()
    }

    /// `(start_us, segment)` pairs.
    pub fn spans(&self) -> impl Iterator<Item = (f64, &Segment)> {
        self.segments.iter().scan(0.0, |t, seg| {
            let start = *t;
            *t += seg.duration_us;
            Some((start, seg))
        })
    }

    pub fn payload_bits(&self) -> Vec<bool> {
        self.segments
            .iter()
            .filter(|s| s.role == SegmentRole::Payload)
            .map(|s| s.carrier)
            .collect()
    }

    pub fn with_carrier(mut self, carrier_hz: f64) -> Self {
        self.carrier_hz = carrier_hz;
        self
    }

    /// The waveform a perfect detector would produce: one sample per segment
    /// start and a final low sample where the frame ends.
    pub fn ideal_waveform(&self) -> Waveform {
        let mut samples: Vec<Sample> = self
            .spans()
            .map(|(t, seg)| Sample {
                time_us: t,
                level: seg.carrier,
            })
            .collect();
        samples.push(Sample {
            time_us: self.duration_us(),
            level: false,
        });
        Waveform { samples }
    }

    /// Rows of `t_start_us,duration_us,carrier`. With `merge`, adjacent
    /// segments at the same level are joined.
    pub fn write_csv<W: io::Write>(&self, mut out: W, merge: bool) -> io::Result<()> {
        writeln!(out, "t_start_us,duration_us,carrier")?;
        let mut rows: Vec<(f64, f64, bool)> = Vec::with_capacity(self.segments.len());
        for (t, seg) in self.spans() {
            match rows.last_mut() {
                Some(last) if merge && last.2 == seg.carrier => last.1 += seg.duration_us,
                _ => rows.push((t, seg.duration_us, seg.carrier)),
            }
        }
        for (t, d, c) in rows {
            writeln!(out, "{t},{d},{}", u8::from(c))?;
        }
        Ok(())
    }
}

pub fn encode_frame(frame: &WakeFrame, bit_rate: f64, tx_power_dbm: f64) -> Result<OokTimeline, CodecError> {
    if !(bit_rate > 0.0 && bit_rate.is_finite()) {
        return Err(CodecError::BitRate(bit_rate));
    }
    if !(frame.preamble_us > 0.0 && frame.preamble_us.is_finite()) {
        return Err(CodecError::Preamble(frame.preamble_us));
    }
    let bit_us = 1e6 / bit_rate;
    let mut segments = Vec::with_capacity(FRAME_BITS + 2);
    segments.push(Segment {
        duration_us: frame.preamble_us,
        carrier: true,
        role: SegmentRole::Preamble,
    });
    segments.push(Segment {
        duration_us: bit_us,
        carrier: false,
        role: SegmentRole::Delimiter,
    });
    segments.extend(frame_bits(frame).into_iter().map(|bit| Segment {
        duration_us: bit_us,
        carrier: bit,
        role: SegmentRole::Payload,
    }));
    Ok(OokTimeline {
        tx_power_dbm,
        bit_rate,
        carrier_hz: DEFAULT_CARRIER_HZ,
        segments,
    })
}

/// Like [`encode_frame`], but also refuses a preamble that a decoder with
/// `wake_delay_us` start-up time could not catch.
pub fn encode_frame_checked(
    frame: &WakeFrame,
    bit_rate: f64,
    tx_power_dbm: f64,
    wake_delay_us: f64,
) -> Result<OokTimeline, CodecError> {
    if frame.preamble_us < wake_delay_us {
        return Err(CodecError::PreambleTooShort {
            preamble_us: frame.preamble_us,
            wake_delay_us,
        });
    }
    encode_frame(frame, bit_rate, tx_power_dbm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time_us: f64,
    pub level: bool,
}

/// Binary samples held between timestamps (zero-order hold). The last
/// sample marks the end of the capture.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Waveform {
    pub samples: Vec<Sample>,
}

impl Waveform {
    pub fn new(samples: Vec<Sample>) -> Self {
        Self { samples }
    }

    pub fn end_us(&self) -> Option<f64> {
        self.samples.last().map(|s| s.time_us)
    }

    fn check_monotonic(&self) -> Result<(), CodecError> {
        match self.samples.windows(2).position(|w| !(w[1].time_us > w[0].time_us)) {
            Some(i) => Err(CodecError::NonMonotonic { index: i + 1 }),
            None => Ok(()),
        }
    }

    /// Level at `t`: the last sample at or before `t`, low before the first.
    fn level_at(&self, t: f64) -> bool {
        let idx = self.samples.partition_point(|s| s.time_us <= t);
        idx > 0 && self.samples[idx - 1].level
    }

    /// Level just before `t`.
    fn level_before(&self, t: f64) -> bool {
        let idx = self.samples.partition_point(|s| s.time_us < t);
        idx > 0 && self.samples[idx - 1].level
    }

    pub fn write_csv<W: io::Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "time_us,level")?;
        for s in &self.samples {
            writeln!(out, "{},{}", s.time_us, u8::from(s.level))?;
        }
        Ok(())
    }

    /// Reads `time_us,level` rows (header required, level 0 or 1).
    pub fn read_csv<R: io::Read>(input: R) -> Result<Self, CodecError> {
        #[derive(Deserialize)]
        struct Row {
            time_us: f64,
            level: u8,
        }
        let csv_err = |e: csv::Error| CodecError::Csv {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        };
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = reader.headers().map_err(csv_err)?.clone();
        let mut samples = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_err)?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let bad = |msg: String| CodecError::Csv { line, msg };
            let row: Row = record.deserialize(Some(&headers)).map_err(|e| bad(e.to_string()))?;
            let level = match row.level {
                0 => false,
                1 => true,
                _ => return Err(bad("level must be 0 or 1".into())),
            };
            samples.push(Sample {
                time_us: row.time_us,
                level,
            });
        }
        Ok(Self { samples })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    pub network_id: u8,
    pub addresses: BTreeSet<u8>,
    pub bit_rate: f64,
    pub wake_delay_us: f64,
}

impl DecoderConfig {
    pub fn new(network_id: u8, addresses: impl IntoIterator<Item = u8>) -> Self {
        Self {
            network_id,
            addresses: addresses.into_iter().collect(),
            bit_rate: DEFAULT_BIT_RATE,
            wake_delay_us: DEFAULT_WAKE_DELAY_US,
        }
    }

    pub fn with_bit_rate(mut self, bit_rate: f64) -> Self {
        self.bit_rate = bit_rate;
        self
    }

    pub fn with_wake_delay(mut self, wake_delay_us: f64) -> Self {
        self.wake_delay_us = wake_delay_us;
        self
    }

    pub fn validate(&self) -> Result<(), CodecError> {
        if self.addresses.is_empty() {
            return Err(CodecError::Config("address set is empty"));
        }
        if !(self.bit_rate > 0.0 && self.bit_rate.is_finite()) {
            return Err(CodecError::Config("bit rate must be positive"));
        }
        if !(self.wake_delay_us >= 0.0) {
            return Err(CodecError::Config("wake delay must be non-negative"));
        }
        Ok(())
    }

    /// Whether a frame is meant for this decoder.
    pub fn accepts(&self, frame: &WakeFrame) -> bool {
        frame.network_id == self.network_id && self.addresses.contains(&frame.target_address)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoMatchReason {
    WrongNetwork,
    WrongAddress,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FramingReason {
    NoPreamble,
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecodeOutcome {
    Wake(u8),
    NoMatch(NoMatchReason),
    FramingError(FramingReason),
}

impl DecodeOutcome {
    pub fn is_wake(&self) -> bool {
        matches!(self, DecodeOutcome::Wake(_))
    }

    /// True when the comparator produced a rising edge, i.e. the matcher MCU
    /// left sleep to look at the frame.
    pub fn matcher_woke(&self) -> bool {
        !matches!(self, DecodeOutcome::FramingError(FramingReason::NoPreamble))
    }
}

impl fmt::Display for DecodeOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeOutcome::Wake(a) => write!(f, "wake 0x{a:02X}"),
            DecodeOutcome::NoMatch(NoMatchReason::WrongNetwork) => f.write_str("no-match wrong-network"),
            DecodeOutcome::NoMatch(NoMatchReason::WrongAddress) => f.write_str("no-match wrong-address"),
            DecodeOutcome::FramingError(FramingReason::NoPreamble) => f.write_str("framing-error no-preamble"),
            DecodeOutcome::FramingError(FramingReason::Truncated) => f.write_str("framing-error truncated"),
        }
    }
}

/// Runs the address-matching state machine over a comparator stream.
///
/// 1. Idle until the first rising edge.
/// 2. Ignore the line for `wake_delay_us` while the MCU starts.
/// 3. Wait for the falling edge that ends the preamble; the delimiter bit follows.
/// 4. Sample 16 bits at mid-bit instants.
/// 5. Match network id, then address.
pub fn decode_stream(waveform: &Waveform, config: &DecoderConfig) -> Result<DecodeOutcome, CodecError> {
    config.validate()?;
    waveform.check_monotonic()?;
    let samples = &waveform.samples;
    let Some(end_us) = waveform.end_us() else {
        return Ok(DecodeOutcome::FramingError(FramingReason::NoPreamble));
    };

    let mut prev = false;
    let Some(rise_idx) = samples.iter().position(|s| {
        let edge = s.level && !prev;
        prev = s.level;
        edge
    }) else {
        return Ok(DecodeOutcome::FramingError(FramingReason::NoPreamble));
    };
    let rise_us = samples[rise_idx].time_us;
    let ready_us = rise_us + config.wake_delay_us;

    // The carrier must still be up when the MCU comes out of start-up.
    if config.wake_delay_us > 0.0 && !waveform.level_before(ready_us) {
        return Ok(DecodeOutcome::FramingError(FramingReason::NoPreamble));
    }

    let Some(fall_us) = samples[rise_idx + 1..]
        .iter()
        .find(|s| s.time_us >= ready_us && !s.level)
        .map(|s| s.time_us)
    else {
        return Ok(DecodeOutcome::FramingError(FramingReason::Truncated));
    };

    let bit_us = 1e6 / config.bit_rate;
    let mut word: u16 = 0;
    for i in 0..FRAME_BITS {
        let t = fall_us + (1.5 + i as f64) * bit_us;
        if t > end_us {
            return Ok(DecodeOutcome::FramingError(FramingReason::Truncated));
        }
        word = (word << 1) | u16::from(waveform.level_at(t));
    }
    let [network_id, address] = word.to_be_bytes();

    Ok(if network_id != config.network_id {
        DecodeOutcome::NoMatch(NoMatchReason::WrongNetwork)
    } else if !config.addresses.contains(&address) {
        DecodeOutcome::NoMatch(NoMatchReason::WrongAddress)
    } else {
        DecodeOutcome::Wake(address)
    })
}
