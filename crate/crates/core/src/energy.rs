//! Current budgets for a wake-up receiver node and the duty-cycled baseline.
//!
//! Units follow the magnitudes involved: nA for sleep figures, µA for the
//! matcher MCU, mA for the host and radio, µC for charge.

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analog::ReceiverChain;

/// Matcher MCU sleep current (PIC12LF1552T).
pub const MATCHER_SLEEP_NA: f64 = 20.0;
pub const MATCHER_UA_PER_MHZ: f64 = 32.0;
pub const MATCHER_CLOCK_MHZ: f64 = 2.0;
pub const HOST_SLEEP_NA: f64 = 20.0;
pub const HOST_ACTIVE_MA: f64 = 10.0;
pub const HOST_ACTIVE_S: f64 = 0.1;
pub const RADIO_LISTEN_MA: f64 = 10.0;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("{0} must be non-negative")]
    Negative(&'static str),
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("node is busy {0:.3} of the time; activity must leave it idle for part of each second")]
    Saturated(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    /// Amplifier + comparator drain, nA.
    pub wur_quiescent_na: f64,
    pub mcu_sleep_na: f64,
    pub mcu_ua_per_mhz: f64,
    pub mcu_clock_mhz: f64,
    pub host_sleep_na: f64,
    pub host_active_ma: f64,
    pub host_active_s: f64,
    pub radio_listen_ma: f64,
}

impl PowerProfile {
    pub fn for_chain(chain: &ReceiverChain) -> Self {
        Self {
            wur_quiescent_na: quiescent_current(chain, false),
            mcu_sleep_na: MATCHER_SLEEP_NA,
            mcu_ua_per_mhz: MATCHER_UA_PER_MHZ,
            mcu_clock_mhz: MATCHER_CLOCK_MHZ,
            host_sleep_na: HOST_SLEEP_NA,
            host_active_ma: HOST_ACTIVE_MA,
            host_active_s: HOST_ACTIVE_S,
            radio_listen_ma: RADIO_LISTEN_MA,
        }
    }

    pub fn mcu_active_ua(&self) -> f64 {
        self.mcu_ua_per_mhz * self.mcu_clock_mhz
    }

    /// Everything asleep, receiver listening. µA.
    pub fn idle_ua(&self) -> f64 {
        (self.wur_quiescent_na + self.mcu_sleep_na + self.host_sleep_na) / 1000.0
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        let fields = [
            (self.wur_quiescent_na, "wur_quiescent"),
            (self.mcu_sleep_na, "mcu_sleep"),
            (self.mcu_ua_per_mhz, "mcu_ua_per_mhz"),
            (self.mcu_clock_mhz, "mcu_clock"),
            (self.host_sleep_na, "host_sleep"),
            (self.host_active_ma, "host_active"),
            (self.host_active_s, "host_active_duration"),
            (self.radio_listen_ma, "radio_listen"),
        ];
        match fields.iter().find(|(v, _)| !(*v >= 0.0)) {
            Some((_, name)) => Err(EnergyError::Negative(name)),
            None => Ok(()),
        }
    }
}

/// Always-on receiver drain in nA. The rectifier and matching network are
/// passive; optionally adds the matcher MCU sleep current.
pub fn quiescent_current(chain: &ReceiverChain, include_matcher_sleep: bool) -> f64 {
    let amp = chain.amplifier.as_ref().map_or(0.0, |a| a.spec.drain_na);
    let matcher = if include_matcher_sleep { MATCHER_SLEEP_NA } else { 0.0 };
    amp + chain.comparator.spec.drain_na + matcher
}

/// Extra charge (µC) the matcher spends awake for one frame.
pub fn decode_event_charge(profile: &PowerProfile, frame_duration_s: f64) -> Result<f64, EnergyError> {
    if !(frame_duration_s >= 0.0) {
        return Err(EnergyError::Negative("frame duration"));
    }
    Ok((profile.mcu_active_ua() - profile.mcu_sleep_na / 1000.0) * frame_duration_s)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Activity {
    /// Frames addressed to this node, per second.
    pub wake_rate: f64,
    /// Frames the matcher rejects, per second.
    pub false_wake_rate: f64,
    pub frame_duration_s: f64,
    pub host_active_s: f64,
}

/// Long-run average supply current in µA.
pub fn average_current(profile: &PowerProfile, activity: &Activity) -> Result<f64, EnergyError> {
    profile.validate()?;
    let a = activity;
    for (v, name) in [
        (a.wake_rate, "wake rate"),
        (a.false_wake_rate, "false wake rate"),
        (a.frame_duration_s, "frame duration"),
        (a.host_active_s, "host active duration"),
    ] {
        if !(v >= 0.0) {
            return Err(EnergyError::Negative(name));
        }
    }
    let busy = (a.wake_rate + a.false_wake_rate) * a.frame_duration_s + a.wake_rate * a.host_active_s;
    if busy >= 1.0 {
        return Err(EnergyError::Saturated(busy));
    }
    let decode = decode_event_charge(profile, a.frame_duration_s)?;
    let host_extra_ua = profile.host_active_ma * 1000.0 - profile.host_sleep_na / 1000.0;
    Ok(profile.idle_ua() + (a.wake_rate + a.false_wake_rate) * decode + a.wake_rate * host_extra_ua * a.host_active_s)
}

/// Conventional periodic listening: radio on for `duty` of the time. µA.
pub fn duty_cycle_current(radio_listen_ma: f64, duty: f64) -> Result<f64, EnergyError> {
    if !(0.0..=1.0).contains(&duty) {
        return Err(EnergyError::Negative("duty fraction in [0, 1]"));
    }
    if !(radio_listen_ma >= 0.0) {
        return Err(EnergyError::Negative("radio listen current"));
    }
    Ok(radio_listen_ma * 1000.0 * duty)
}

/// Hours until `capacity_mah` is drained at `avg_current_ua`.
pub fn lifetime(capacity_mah: f64, avg_current_ua: f64) -> Result<f64, EnergyError> {
    if !(capacity_mah > 0.0) {
        return Err(EnergyError::NonPositive("battery capacity"));
    }
    if !(avg_current_ua > 0.0) {
        return Err(EnergyError::NonPositive("average current"));
    }
    Ok(capacity_mah * 1000.0 / avg_current_ua)
}

/// Charge in attocoulombs. Integer so that ledger totals add exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Charge(pub i128);

impl Charge {
    const PER_UC: f64 = 1e12;

    pub fn from_ua_s(current_ua: f64, duration_s: f64) -> Self {
        Charge((current_ua * duration_s * Self::PER_UC).round() as i128)
    }

    pub fn as_uc(self) -> f64 {
        self.0 as f64 / Self::PER_UC
    }
}

impl std::ops::Add for Charge {
    type Output = Charge;
    fn add(self, rhs: Charge) -> Charge {
        Charge(self.0 + rhs.0)
    }
}

impl std::iter::Sum for Charge {
    fn sum<I: Iterator<Item = Charge>>(iter: I) -> Charge {
        iter.fold(Charge::default(), |a, b| a + b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub state: String,
    pub current_ua: f64,
    pub duration_s: f64,
    pub charge: Charge,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyLedger {
    entries: Vec<LedgerEntry>,
}

impl EnergyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, state: impl Into<String>, current_ua: f64, duration_s: f64) -> Result<(), EnergyError> {
        if !(duration_s >= 0.0) {
            return Err(EnergyError::Negative("ledger duration"));
        }
        if !(current_ua >= 0.0) {
            return Err(EnergyError::Negative("ledger current"));
        }
        self.entries.push(LedgerEntry {
            state: state.into(),
            current_ua,
            duration_s,
            charge: Charge::from_ua_s(current_ua, duration_s),
        });
        Ok(())
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn append(&mut self, other: &EnergyLedger) {
        self.entries.extend(other.entries.iter().cloned());
    }

    pub fn total_charge(&self) -> Charge {
        self.entries.iter().map(|e| e.charge).sum()
    }

    /// Sum of entry durations.
    pub fn total_duration_s(&self) -> f64 {
        self.entries.iter().map(|e| e.duration_s).sum()
    }

    /// Σ charge / Σ duration, µA.
    pub fn average_current_ua(&self) -> f64 {
        let d = self.total_duration_s();
        if d > 0.0 {
            self.total_charge().as_uc() / d
        } else {
            0.0
        }
    }

    /// Average over an explicit wall-clock span, for ledgers whose entries
    /// describe concurrently powered parts.
    pub fn average_over_ua(&self, span_s: f64) -> f64 {
        if span_s > 0.0 {
            self.total_charge().as_uc() / span_s
        } else {
            0.0
        }
    }

    /// `state,current_uA,duration_s,charge_uC` rows plus a `total` row.
    pub fn write_csv<W: io::Write>(&self, mut out: W, span_s: Option<f64>) -> io::Result<()> {
        writeln!(out, "state,current_uA,duration_s,charge_uC")?;
        for e in &self.entries {
            writeln!(
                out,
                "{},{},{},{}",
                e.state,
                e.current_ua,
                e.duration_s,
                e.charge.as_uc()
            )?;
        }
        let (avg, dur) = match span_s {
            Some(s) => (self.average_over_ua(s), s),
            None => (self.average_current_ua(), self.total_duration_s()),
        };
        writeln!(out, "total,{avg},{dur},{}", self.total_charge().as_uc())
    }
}

/// Ledger for `span_s` seconds of steady activity, split into the same
/// states the network simulator reports.
pub fn activity_ledger(profile: &PowerProfile, activity: &Activity, span_s: f64) -> Result<EnergyLedger, EnergyError> {
    if !(span_s > 0.0) {
        return Err(EnergyError::NonPositive("ledger span"));
    }
    average_current(profile, activity)?;
    let a = activity;
    let matcher_s = (a.wake_rate + a.false_wake_rate) * a.frame_duration_s * span_s;
    let host_s = a.wake_rate * a.host_active_s * span_s;
    let mut ledger = EnergyLedger::new();
    ledger.record("receiver", profile.wur_quiescent_na / 1000.0, span_s)?;
    ledger.record("matcher_sleep", profile.mcu_sleep_na / 1000.0, span_s - matcher_s)?;
    ledger.record("matcher_active", profile.mcu_active_ua(), matcher_s)?;
    ledger.record("host_sleep", profile.host_sleep_na / 1000.0, span_s - host_s)?;
    ledger.record("host_active", profile.host_active_ma * 1000.0, host_s)?;
    Ok(ledger)
}
