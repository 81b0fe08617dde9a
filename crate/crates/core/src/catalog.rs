//! Comparator and op-amp specifications, plus the TOML catalog dialect.
//!
//! A catalog file holds one table per component:
//!
//! ```toml
//! ["TLV3691"]
//! kind = "comparator"
//! drain = "110 nA"
//! v_os = "3 mV"
//! i_bias = "80 pA"
//! sensitivity = "-32 dBm"
//! ```
//!
//! `v_os` may be `"n/a"` or omitted; `sensitivity` is optional.

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{self, UnitError};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: field `{field}` of {component}: {source}")]
    Unit {
        line: usize,
        component: String,
        field: &'static str,
        source: UnitError,
    },
    #[error("line {line}: duplicate component name {name:?}")]
    Duplicate { line: usize, name: String },
    #[error("unknown component {0:?}")]
    Unknown(String),
    #[error("{name:?} is a {actual}, expected a {expected}")]
    WrongKind {
        name: String,
        expected: ComponentKind,
        actual: ComponentKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentKind {
    Comparator,
    OpAmp,
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ComponentKind::Comparator => "comparator",
            ComponentKind::OpAmp => "op-amp",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub name: String,
    pub kind: ComponentKind,
    /// Quiescent supply current in nA.
    pub drain_na: f64,
    /// Input offset voltage in V; `None` where the datasheet gives none.
    pub v_os: Option<f64>,
    /// Input bias current in A (sign as published).
    pub i_bias: f64,
    /// Receiver sensitivity reported for a direct-detection design, in dBm.
    pub reported_sensitivity_dbm: Option<f64>,
}

fn spec(
    name: &str,
    kind: ComponentKind,
    drain_na: f64,
    v_os: Option<f64>,
    i_bias: f64,
    sensitivity: Option<f64>,
) -> ComponentSpec {
    ComponentSpec {
        name: name.to_string(),
        kind,
        drain_na,
        v_os,
        i_bias,
        reported_sensitivity_dbm: sensitivity,
    }
}

/// All comparators and op-amps the receiver designs draw from.
pub fn builtin_catalog() -> Catalog {
    use ComponentKind::{Comparator as C, OpAmp as A};
    Catalog {
        components: vec![
            spec("TLV3691", C, 110.0, Some(3e-3), 80e-12, Some(-32.0)),
            spec("TLV7031/41", C, 335.0, Some(100e-6), 2e-12, None),
            spec("TLV3701", C, 560.0, Some(200e-6), 80e-12, None),
            spec("LPV7215", C, 580.0, Some(300e-6), -40e-15, Some(-55.0)),
            spec("LTC1540", C, 300.0, None, 10e-15, Some(-51.0)),
            spec("MAX919", C, 350.0, Some(1e-3), 150e-15, None),
            spec("TS881", C, 260.0, Some(500e-6), 1e-12, None),
            spec("ADCMP380", C, 92.0, None, 4e-9, None),
            spec("LPV521", A, 350.0, Some(100e-6), 40e-15, None),
            spec("LPV801", A, 320.0, Some(550e-6), 100e-15, None),
            spec("LPV811", A, 450.0, Some(55e-6), 100e-15, None),
            spec("LPV821", A, 650.0, Some(1.5e-6), 7e-12, None),
            spec("TLV8541", A, 480.0, Some(300e-6), 100e-15, None),
            spec("TLV8801", A, 450.0, Some(550e-6), 100e-15, None),
            spec("TLV8811", A, 450.0, Some(75e-6), 100e-15, None),
        ],
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Catalog {
    components: Vec<ComponentSpec>,
}

impl Catalog {
    pub fn components(&self) -> &[ComponentSpec] {
        &self.components
    }

    pub fn get(&self, name: &str) -> Result<&ComponentSpec, CatalogError> {
        self.components
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| CatalogError::Unknown(name.to_string()))
    }

    pub fn get_kind(&self, name: &str, kind: ComponentKind) -> Result<&ComponentSpec, CatalogError> {
        let c = self.get(name)?;
        if c.kind != kind {
            return Err(CatalogError::WrongKind {
                name: name.to_string(),
                expected: kind,
                actual: c.kind,
            });
        }
        Ok(c)
    }

    /// Adds entries from `other`, replacing same-named ones.
    pub fn extend(&mut self, other: Catalog) {
        for c in other.components {
            match self.components.iter_mut().find(|x| x.name == c.name) {
                Some(slot) => *slot = c,
                None => self.components.push(c),
            }
        }
    }

    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "[{}]", toml_string(&c.name));
            let _ = writeln!(out, "kind = \"{}\"", c.kind);
            let _ = writeln!(out, "drain = \"{}\"", units::format_quantity(c.drain_na, -9, "A"));
            match c.v_os {
                Some(v) => {
                    let _ = writeln!(out, "v_os = \"{}\"", units::format_quantity(v, 0, "V"));
                }
                None => out.push_str("v_os = \"n/a\"\n"),
            }
            let _ = writeln!(out, "i_bias = \"{}\"", units::format_quantity(c.i_bias, 0, "A"));
            if let Some(s) = c.reported_sensitivity_dbm {
                let _ = writeln!(out, "sensitivity = \"{s} dBm\"");
            }
        }
        out
    }
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

pub(crate) fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub(crate) fn toml_error(text: &str, err: &toml::de::Error) -> (usize, String) {
    let line = err.span().map(|s| line_of(text, s.start)).unwrap_or(1);
    (line, err.message().to_string())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    kind: ComponentKind,
    drain: toml::Spanned<String>,
    #[serde(default)]
    v_os: Option<toml::Spanned<String>>,
    i_bias: toml::Spanned<String>,
    #[serde(default)]
    sensitivity: Option<toml::Spanned<String>>,
}

/// Parses a catalog document. Component names must be unique.
pub fn load_catalog(text: &str) -> Result<Catalog, CatalogError> {
    // TOML rejects a repeated table header on its own; scan headers first so a
    // repeated component gets its own error.
    let mut seen: Vec<String> = Vec::new();
    let mut offset = 0;
    for raw_line in text.split_inclusive('\n') {
        let line = raw_line.trim();
        if line.starts_with('[') && !line.starts_with("[[") {
            if let Ok(t) = format!("{line}\n_ = 0").parse::<toml::Table>() {
                if let Some(name) = t.keys().next() {
                    if seen.contains(name) {
                        return Err(CatalogError::Duplicate {
                            line: line_of(text, offset),
                            name: name.clone(),
                        });
                    }
                    seen.push(name.clone());
                }
            }
        }
        offset += raw_line.len();
    }

    let doc: toml::Spanned<ordered::OrderedTables> = toml::from_str(text).map_err(|e| {
        let (line, msg) = toml_error(text, &e);
        CatalogError::Parse { line, msg }
    })?;

    let mut components = Vec::new();
    for (name, entry) in doc.into_inner().0 {
        let entry: RawEntry = entry.into_inner();
        let unit_err = |field: &'static str, span: std::ops::Range<usize>| {
            let name = name.clone();
            move |source| CatalogError::Unit {
                line: line_of(text, span.start),
                component: name,
                field,
                source,
            }
        };
        let drain_na =
            units::parse_quantity(entry.drain.get_ref(), "A", -9).map_err(unit_err("drain", entry.drain.span()))?;
        if !(drain_na > 0.0) {
            return Err(CatalogError::Parse {
                line: line_of(text, entry.drain.span().start),
                msg: format!("drain of {name} must be positive"),
            });
        }
        let v_os = match &entry.v_os {
            Some(v) if v.get_ref().trim() != "n/a" => {
                let x = units::parse_volts(v.get_ref()).map_err(unit_err("v_os", v.span()))?;
                if x < 0.0 {
                    return Err(CatalogError::Parse {
                        line: line_of(text, v.span().start),
                        msg: format!("v_os of {name} must be non-negative"),
                    });
                }
                Some(x)
            }
            _ => None,
        };
        let i_bias =
            units::parse_quantity(entry.i_bias.get_ref(), "A", 0).map_err(unit_err("i_bias", entry.i_bias.span()))?;
        let reported_sensitivity_dbm = match &entry.sensitivity {
            Some(s) if s.get_ref().trim() != "n/a" && s.get_ref().trim() != "-" => {
                Some(units::parse_dbm(s.get_ref()).map_err(unit_err("sensitivity", s.span()))?)
            }
            _ => None,
        };
        components.push(ComponentSpec {
            name,
            kind: entry.kind,
            drain_na,
            v_os,
            i_bias,
            reported_sensitivity_dbm,
        });
    }
    Ok(Catalog { components })
}

/// Top-level tables in document order.
mod ordered {
    use std::fmt;

    use serde::de::{Deserialize, Deserializer, MapAccess, Visitor};

    pub struct OrderedTables(pub Vec<(String, toml::Spanned<super::RawEntry>)>);

    impl<'de> Deserialize<'de> for OrderedTables {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            struct V;
            impl<'de> Visitor<'de> for V {
                type Value = OrderedTables;
                fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                    f.write_str("one table per component")
                }
                fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                    let mut out = Vec::new();
                    while let Some((k, v)) = map.next_entry()? {
                        out.push((k, v));
                    }
                    Ok(OrderedTables(out))
                }
            }
            d.deserialize_map(V)
        }
    }
}
