use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::AnalogError;

pub const DEFAULT_Q: f64 = 10.0;

/// L-C matching network between antenna and rectifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchingSpec {
    pub inductance_nh: f64,
    pub capacitance_pf: f64,
    pub quality_factor: f64,
    pub band_center_hz: f64,
}

impl MatchingSpec {
    pub fn new(inductance_nh: f64, capacitance_pf: f64, quality_factor: f64, band_center_hz: f64) -> Self {
        Self {
            inductance_nh,
            capacitance_pf,
            quality_factor,
            band_center_hz,
        }
    }

    /// Picks the capacitance that resonates `inductance_nh` at `band_center_hz`.
    pub fn tuned(inductance_nh: f64, band_center_hz: f64, quality_factor: f64) -> Self {
        let w = 2.0 * PI * band_center_hz;
        let c_farads = 1.0 / (w * w * inductance_nh * 1e-9);
        Self::new(inductance_nh, c_farads * 1e12, quality_factor, band_center_hz)
    }

    pub fn validate(&self) -> Result<(), AnalogError> {
        if !(self.inductance_nh > 0.0 && self.capacitance_pf > 0.0 && self.quality_factor > 0.0) {
            return Err(AnalogError::Invalid(
                "matching network needs L > 0, C > 0, Q > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn resonant_frequency(&self) -> Result<f64, AnalogError> {
        resonant_frequency(self.inductance_nh, self.capacitance_pf)
    }
}

pub fn resonant_frequency(inductance_nh: f64, capacitance_pf: f64) -> Result<f64, AnalogError> {
    if !(inductance_nh > 0.0 && capacitance_pf > 0.0) {
        return Err(AnalogError::Invalid(format!(
            "resonance needs positive L and C (got {inductance_nh} nH, {capacitance_pf} pF)"
        )));
    }
    Ok(1.0 / (2.0 * PI * (inductance_nh * 1e-9 * capacitance_pf * 1e-12).sqrt()))
}

/// Single-pole band-pass magnitude in dB; 0 at resonance, negative elsewhere.
pub fn matching_gain(freq_hz: f64, spec: &MatchingSpec) -> Result<f64, AnalogError> {
    if !(freq_hz > 0.0) {
        return Err(AnalogError::Invalid(format!(
            "frequency must be positive, got {freq_hz}"
        )));
    }
    let f0 = spec.resonant_frequency()?;
    let detune = freq_hz / f0 - f0 / freq_hz;
    let q = spec.quality_factor;
    Ok(-10.0 * (1.0 + q * q * detune * detune).log10())
}
