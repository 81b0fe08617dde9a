use serde::{Deserialize, Serialize};

use super::AnalogError;
use crate::catalog::{ComponentKind, ComponentSpec};

/// Non-inverting gain stage between rectifier and comparator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplifierStage {
    pub spec: ComponentSpec,
    pub gain: f64,
    /// Output saturates here.
    pub rail: f64,
}

impl AmplifierStage {
    pub fn new(spec: ComponentSpec, gain: f64, rail: f64) -> Result<Self, AnalogError> {
        if spec.kind != ComponentKind::OpAmp {
            return Err(AnalogError::Invalid(format!("{} is not an op-amp", spec.name)));
        }
        if !(gain >= 1.0) {
            return Err(AnalogError::Invalid(format!("amplifier gain must be >= 1, got {gain}")));
        }
        if !(rail > 0.0) {
            return Err(AnalogError::Invalid(format!(
                "amplifier rail must be positive, got {rail}"
            )));
        }
        Ok(Self { spec, gain, rail })
    }
}

/// Single-supply output: clamped to `[0, rail]`.
pub fn amplify(v_in: f64, stage: &AmplifierStage) -> f64 {
    (stage.gain * v_in).clamp(0.0, stage.rail)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparatorStage {
    pub spec: ComponentSpec,
    /// Effective input offset: the catalog value, or an override where the
    /// catalog has none.
    pub v_os: f64,
    pub v_ref: f64,
    pub hysteresis: f64,
}

impl ComparatorStage {
    pub fn new(
        spec: ComponentSpec,
        v_ref: f64,
        hysteresis: f64,
        v_os_override: Option<f64>,
    ) -> Result<Self, AnalogError> {
        if spec.kind != ComponentKind::Comparator {
            return Err(AnalogError::Invalid(format!("{} is not a comparator", spec.name)));
        }
        let v_os = match v_os_override.or(spec.v_os) {
            Some(v) if v >= 0.0 => v,
            Some(v) => return Err(AnalogError::Invalid(format!("v_os must be non-negative, got {v}"))),
            None => return Err(AnalogError::MissingOffset(spec.name.clone())),
        };
        if !(v_ref >= 0.0) {
            return Err(AnalogError::Invalid(format!("v_ref must be non-negative, got {v_ref}")));
        }
        if !(v_ref + v_os > 0.0) {
            return Err(AnalogError::Invalid(
                "comparator threshold v_ref + v_os must be positive".into(),
            ));
        }
        if !(hysteresis >= 0.0) {
            return Err(AnalogError::Invalid(format!(
                "hysteresis must be non-negative, got {hysteresis}"
            )));
        }
        Ok(Self {
            spec,
            v_os,
            v_ref,
            hysteresis,
        })
    }

    /// Input level that must be exceeded to switch high.
    pub fn threshold(&self) -> f64 {
        self.v_ref + self.v_os
    }
}

/// Returns the new output level (`true` = high). Rises only strictly above
/// the threshold; once high, falls only strictly below `threshold - hysteresis`.
pub fn compare(v_in: f64, stage: &ComparatorStage, prev_high: bool) -> bool {
    let threshold = stage.threshold();
    if prev_high && stage.hysteresis > 0.0 {
        !(v_in < threshold - stage.hysteresis)
    } else {
        v_in > threshold
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin_catalog;
    use proptest::prelude::*;

    fn lpv811(gain: f64) -> AmplifierStage {
        AmplifierStage::new(builtin_catalog().get("LPV811").unwrap().clone(), gain, 3.3).unwrap()
    }

    fn tlv3691(v_ref: f64, hysteresis: f64) -> ComparatorStage {
        ComparatorStage::new(
            builtin_catalog().get("TLV3691").unwrap().clone(),
            v_ref,
            hysteresis,
            None,
        )
        .unwrap()
    }

    #[test]
    fn amplify_examples() {
        let amp = lpv811(100.0);
        assert_eq!(amplify(0.0, &amp), 0.0);
        assert!((amplify(0.300e-3, &amp) - 30e-3).abs() < 1e-15);
        assert_eq!(amplify(50e-3, &amp), 3.3);
    }

    #[test]
    fn compare_examples() {
        let cmp = tlv3691(27e-3, 0.0);
        assert!(!compare(0.0, &cmp, false));
        assert!(!compare(0.0, &cmp, true));
        assert!(compare(31e-3, &cmp, false));
        assert_eq!(cmp.threshold(), 27e-3 + 3e-3);
        assert!(!compare(cmp.threshold(), &cmp, false));
    }

    #[test]
    fn hysteresis_band() {
        let cmp = tlv3691(27e-3, 2e-3);
        let thr = cmp.threshold();
        assert!(!compare(thr - 1e-3, &cmp, false));
        assert!(compare(thr - 1e-3, &cmp, true));
        assert!(compare(thr - 2e-3, &cmp, true));
        assert!(!compare(thr - 2.5e-3, &cmp, true));
    }

    #[test]
    fn missing_offset_needs_override() {
        let ltc = builtin_catalog().get("LTC1540").unwrap().clone();
        assert!(matches!(
            ComparatorStage::new(ltc.clone(), 0.0, 0.0, None),
            Err(AnalogError::MissingOffset(_))
        ));
        let cmp = ComparatorStage::new(ltc, 0.0, 0.0, Some(1e-3)).unwrap();
        assert_eq!(cmp.threshold(), 1e-3);
    }

    #[test]
    fn kind_and_range_checks() {
        let cat = builtin_catalog();
        assert!(AmplifierStage::new(cat.get("TLV3691").unwrap().clone(), 100.0, 3.3).is_err());
        assert!(AmplifierStage::new(cat.get("LPV811").unwrap().clone(), 0.5, 3.3).is_err());
        assert!(AmplifierStage::new(cat.get("LPV811").unwrap().clone(), 10.0, 0.0).is_err());
        assert!(ComparatorStage::new(cat.get("LPV811").unwrap().clone(), 0.0, 0.0, Some(1e-3)).is_err());
        assert!(ComparatorStage::new(cat.get("TLV3691").unwrap().clone(), -1.0, 0.0, None).is_err());
    }

    proptest! {
        #[test]
        fn zero_hysteresis_is_memoryless(v in -0.1f64..0.1, v_ref in 0.0f64..0.05) {
            let cmp = tlv3691(v_ref, 0.0);
            prop_assert_eq!(compare(v, &cmp, false), compare(v, &cmp, true));
        }
    }
}
