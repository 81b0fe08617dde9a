use serde::{Deserialize, Serialize};

use super::AnalogError;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Log-distance path loss with a fixed attenuator chain in front of the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    pub reference_distance_m: f64,
    pub reference_path_loss_db: f64,
    pub path_loss_exponent: f64,
    pub extra_attenuation_db: f64,
}

impl Default for LinkModel {
    /// Free space at 868 MHz referenced to 1 m (31.2 dB), exponent 2.
    fn default() -> Self {
        Self {
            reference_distance_m: 1.0,
            reference_path_loss_db: 31.2,
            path_loss_exponent: 2.0,
            extra_attenuation_db: 0.0,
        }
    }
}

impl LinkModel {
    /// A lossless link: received power equals transmitted power at `d0`.
    pub fn lossless() -> Self {
        Self {
            reference_distance_m: 1.0,
            reference_path_loss_db: 0.0,
            path_loss_exponent: 0.0,
            extra_attenuation_db: 0.0,
        }
    }

    /// Friis reference loss at `reference_distance_m` for carrier `freq_hz`.
    pub fn free_space(freq_hz: f64, reference_distance_m: f64) -> Self {
        let pl0 = 20.0 * (4.0 * std::f64::consts::PI * reference_distance_m * freq_hz / SPEED_OF_LIGHT).log10();
        Self {
            reference_distance_m,
            reference_path_loss_db: pl0,
            path_loss_exponent: 2.0,
            extra_attenuation_db: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), AnalogError> {
        if !(self.reference_distance_m > 0.0) {
            return Err(AnalogError::Invalid("reference distance must be positive".into()));
        }
        if !(self.path_loss_exponent >= 0.0) {
            return Err(AnalogError::Invalid("path loss exponent must be non-negative".into()));
        }
        if !(self.reference_path_loss_db >= 0.0) {
            return Err(AnalogError::Invalid("reference path loss must be non-negative".into()));
        }
        Ok(())
    }

    pub fn path_loss_db(&self, distance_m: f64) -> Result<f64, AnalogError> {
        self.validate()?;
        if !(distance_m >= self.reference_distance_m) {
            return Err(AnalogError::DistanceBelowReference {
                distance_m,
                reference_m: self.reference_distance_m,
            });
        }
        Ok(self.reference_path_loss_db
            + 10.0 * self.path_loss_exponent * (distance_m / self.reference_distance_m).log10()
            + self.extra_attenuation_db)
    }
}

pub fn received_power(tx_power_dbm: f64, link: &LinkModel, distance_m: f64) -> Result<f64, AnalogError> {
    Ok(tx_power_dbm - link.path_loss_db(distance_m)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn friis_reference_at_868mhz() {
        let fs = LinkModel::free_space(868e6, 1.0);
        assert!(
            (fs.reference_path_loss_db - 31.2).abs() < 0.05,
            "{}",
            fs.reference_path_loss_db
        );
    }

    #[test]
    fn received_power_examples() {
        let link = LinkModel::default();
        assert!((received_power(14.0, &link, 1.0).unwrap() - -17.2).abs() < 1e-9);
        assert!((received_power(14.0, &link, 100.0).unwrap() - -57.2).abs() < 1e-9);
        let flat = LinkModel {
            path_loss_exponent: 0.0,
            ..link
        };
        for d in [1.0, 7.0, 1e4] {
            assert_eq!(received_power(14.0, &flat, d).unwrap(), 14.0 - 31.2);
        }
    }

    #[test]
    fn attenuator_subtracts() {
        let link = LinkModel {
            extra_attenuation_db: 30.0,
            ..LinkModel::default()
        };
        assert!((received_power(14.0, &link, 1.0).unwrap() - -47.2).abs() < 1e-9);
    }

    #[test]
    fn rejects_distance_inside_reference() {
        let link = LinkModel {
            reference_distance_m: 10.0,
            ..LinkModel::default()
        };
        assert!(matches!(
            received_power(0.0, &link, 5.0),
            Err(AnalogError::DistanceBelowReference { .. })
        ));
    }
}
