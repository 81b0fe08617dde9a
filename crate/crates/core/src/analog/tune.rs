//! Emulated SDR sweep for picking L-C values: probe tones across the band,
//! read the rectifier output for each candidate network.

use std::io;

use serde::{Deserialize, Serialize};

use super::{detect_envelope, matching_gain, AnalogError, DetectorCurve, MatchingSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub band_center_hz: f64,
    /// Full width of the probed range, centred on the band.
    pub span_hz: f64,
    pub step_hz: f64,
    pub probe_power_dbm: f64,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            band_center_hz: 868e6,
            span_hz: 400e6,
            step_hz: 1e6,
            probe_power_dbm: -40.0,
        }
    }
}

impl SweepPlan {
    /// Grid points `center + k * step`; the band centre is always on the grid.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = (self.span_hz / 2.0 / self.step_hz).floor() as i64;
        (-n..=n)
            .map(|k| self.band_center_hz + k as f64 * self.step_hz)
            .filter(|&f| f > 0.0)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub candidate: MatchingSpec,
    /// `(freq_hz, envelope_volts)`
    pub rows: Vec<(f64, f64)>,
    pub envelope_at_center: f64,
}

impl SweepTable {
    pub fn peak_frequency(&self) -> f64 {
        self.rows
            .iter()
            .fold(
                (f64::NAN, f64::NEG_INFINITY),
                |best, &(f, v)| if v > best.1 { (f, v) } else { best },
            )
            .0
    }

    pub fn write_csv<W: io::Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "freq_hz,envelope_volts")?;
        for (f, v) in &self.rows {
            writeln!(out, "{f},{v:e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best_index: usize,
    pub tables: Vec<SweepTable>,
}

impl TuneResult {
    pub fn best(&self) -> &MatchingSpec {
        &self.tables[self.best_index].candidate
    }
}

/// Sweeps every candidate and keeps the one with the largest rectifier output
/// at the band centre. Ties go to the earlier candidate.
pub fn sweep_tune(
    candidates: &[MatchingSpec],
    plan: &SweepPlan,
    detector: &DetectorCurve,
) -> Result<TuneResult, AnalogError> {
    if candidates.is_empty() {
        return Err(AnalogError::NoCandidates);
    }
    if !(plan.band_center_hz > 0.0 && plan.step_hz > 0.0 && plan.span_hz >= 0.0) {
        return Err(AnalogError::Invalid("sweep needs positive band centre and step".into()));
    }
    let grid = plan.frequencies();
    let envelope = |f: f64, c: &MatchingSpec| -> Result<f64, AnalogError> {
        Ok(detect_envelope(plan.probe_power_dbm + matching_gain(f, c)?, detector))
    };

    let mut tables: Vec<SweepTable> = Vec::with_capacity(candidates.len());
    let mut best_index = 0;
    for (i, c) in candidates.iter().enumerate() {
        c.validate()?;
        let rows = grid
            .iter()
            .map(|&f| envelope(f, c).map(|v| (f, v)))
            .collect::<Result<Vec<_>, _>>()?;
        let envelope_at_center = envelope(plan.band_center_hz, c)?;
        if i > 0 && envelope_at_center > tables[best_index].envelope_at_center {
            best_index = i;
        }
        tables.push(SweepTable {
            candidate: *c,
            rows,
            envelope_at_center,
        });
    }
    Ok(TuneResult { best_index, tables })
}
