//! Bandwidth-distance products and electrical/optical link classification.
//!
//! Every medium is summarized by a single B·d constant in Gbps·cm. A link
//! running at rate `R` over length `L` needs `R·L`; once that meets the
//! electrical limit the link is counted as optical.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{length_histogram, Link, NodeGrid};

/// Relative slack on threshold comparisons so that products landing exactly
/// on the limit (10 Gbps × 50 cm = 500) are not lost to rounding.
const THRESHOLD_EPS: f64 = 1e-9;

fn at_least(value: f64, threshold: f64) -> bool {
    value >= threshold - THRESHOLD_EPS * threshold.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MediumClass {
    ElectricalPcb,
    PolymerWaveguide,
    MultimodeFiber,
    SingleModeFiber,
}

impl MediumClass {
    pub fn is_optical(self) -> bool {
        self != MediumClass::ElectricalPcb
    }

    pub fn label(self) -> &'static str {
        match self {
            MediumClass::ElectricalPcb => "electrical-pcb",
            MediumClass::PolymerWaveguide => "polymer-waveguide",
            MediumClass::MultimodeFiber => "multimode-fiber",
            MediumClass::SingleModeFiber => "single-mode-fiber",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMedium")]
pub struct MediumSpec {
    pub name: String,
    pub class: MediumClass,
    pub bd_gbps_cm: f64,
    /// Observed range, `(low, high)`; `high` may be infinite.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bd_range_gbps_cm: Option<(f64, f64)>,
    #[serde(default)]
    pub notes: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMedium {
    name: String,
    class: MediumClass,
    bd_gbps_cm: f64,
    #[serde(default)]
    bd_range_gbps_cm: Option<(f64, Option<f64>)>,
    #[serde(default)]
    notes: String,
}

impl TryFrom<RawMedium> for MediumSpec {
    type Error = Error;
    fn try_from(raw: RawMedium) -> Result<Self> {
        let range = raw
            .bd_range_gbps_cm
            .map(|(lo, hi)| (lo, hi.unwrap_or(f64::INFINITY)));
        let spec = MediumSpec {
            name: raw.name,
            class: raw.class,
            bd_gbps_cm: raw.bd_gbps_cm,
            bd_range_gbps_cm: range,
            notes: raw.notes,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl MediumSpec {
    pub fn new(name: impl Into<String>, class: MediumClass, bd_gbps_cm: f64) -> Result<Self> {
        let spec = MediumSpec {
            name: name.into(),
            class,
            bd_gbps_cm,
            bd_range_gbps_cm: None,
            notes: String::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn with_range(mut self, lo: f64, hi: f64, notes: &str) -> Self {
        self.bd_range_gbps_cm = Some((lo, hi));
        self.notes = notes.to_owned();
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.bd_gbps_cm.is_finite() && self.bd_gbps_cm > 0.0) {
            return Err(Error::invalid(
                "medium",
                format!("'{}': bd {} must be > 0", self.name, self.bd_gbps_cm),
            ));
        }
        if let Some((lo, hi)) = self.bd_range_gbps_cm {
            if !(lo > 0.0 && lo <= hi) {
                return Err(Error::invalid(
                    "medium",
                    format!("'{}': bd range ({lo}, {hi}) is empty", self.name),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<MediumSpec>", into = "Vec<MediumSpec>")]
pub struct MediumCatalog {
    entries: Vec<MediumSpec>,
}

impl TryFrom<Vec<MediumSpec>> for MediumCatalog {
    type Error = Error;
    fn try_from(entries: Vec<MediumSpec>) -> Result<Self> {
        Self::new(entries)
    }
}

impl From<MediumCatalog> for Vec<MediumSpec> {
    fn from(c: MediumCatalog) -> Self {
        c.entries
    }
}

impl Default for MediumCatalog {
    fn default() -> Self {
        let entry = |name, class, bd| MediumSpec::new(name, class, bd).expect("static entry");
        MediumCatalog {
            entries: vec![
                entry("electrical-pcb", MediumClass::ElectricalPcb, 500.0).with_range(
                    250.0,
                    1500.0,
                    "500 is the most common value",
                ),
                entry("polymer-waveguide", MediumClass::PolymerWaveguide, 2250.0).with_range(
                    1500.0,
                    3000.0,
                    "measured range; ideal limit 6000",
                ),
                entry("multimode-fiber", MediumClass::MultimodeFiber, 4000.0).with_range(
                    4000.0,
                    500_000.0,
                    "low end of range used for planning",
                ),
                entry("single-mode-fiber", MediumClass::SingleModeFiber, 500_000.0).with_range(
                    500_000.0,
                    f64::INFINITY,
                    "open-ended upper range",
                ),
            ],
        }
    }
}

impl MediumCatalog {
    pub fn new(entries: Vec<MediumSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            e.validate()?;
            if !seen.insert(e.name.as_str()) {
                return Err(Error::invalid(
                    "catalog",
                    format!("duplicate medium '{}'", e.name),
                ));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[MediumSpec] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Result<&MediumSpec> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::Unknown {
                kind: "medium",
                name: name.to_owned(),
            })
    }

    /// First entry of a class, if any.
    pub fn by_class(&self, class: MediumClass) -> Option<&MediumSpec> {
        self.entries.iter().find(|e| e.class == class)
    }
}

pub fn required_bd(rate_gbps: f64, length_cm: f64) -> f64 {
    rate_gbps * length_cm
}

/// Longest link a medium supports at a given rate.
pub fn max_reach_cm(medium: &MediumSpec, rate_gbps: f64) -> f64 {
    medium.bd_gbps_cm / rate_gbps
}

/// Inclusive: a link sitting exactly on the limit goes optical.
pub fn needs_optical(link: &Link, rate_gbps: f64, bd_limit_gbps_cm: f64) -> bool {
    length_needs_optical(link.length_cm, rate_gbps, bd_limit_gbps_cm)
}

pub fn length_needs_optical(length_cm: f64, rate_gbps: f64, bd_limit_gbps_cm: f64) -> bool {
    at_least(required_bd(rate_gbps, length_cm), bd_limit_gbps_cm)
}

/// Whether a length reaches the medium's reach limit at `rate_gbps`.
pub fn exceeds_reach(length_cm: f64, medium: &MediumSpec, rate_gbps: f64) -> bool {
    at_least(length_cm, max_reach_cm(medium, rate_gbps))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FabricClassification {
    pub rate_gbps: f64,
    pub bd_limit_gbps_cm: f64,
    pub electrical_count: usize,
    pub optical_count: usize,
    pub optical_fraction: f64,
}

impl FabricClassification {
    pub fn total(&self) -> usize {
        self.electrical_count + self.optical_count
    }
}

fn check_positive(what: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(what, format!("{v} must be > 0")))
    }
}

pub fn classify_fabric(
    grid: &NodeGrid,
    rate_gbps: f64,
    bd_limit_gbps_cm: f64,
) -> Result<FabricClassification> {
    check_positive("rate", rate_gbps)?;
    check_positive("bd limit", bd_limit_gbps_cm)?;
    let hist = length_histogram(grid);
    let optical_count: usize = hist
        .bins()
        .filter(|&(len, _)| length_needs_optical(len, rate_gbps, bd_limit_gbps_cm))
        .map(|(_, n)| n)
        .sum();
    let total = hist.total();
    Ok(FabricClassification {
        rate_gbps,
        bd_limit_gbps_cm,
        electrical_count: total - optical_count,
        optical_count,
        optical_fraction: if total == 0 {
            0.0
        } else {
            optical_count as f64 / total as f64
        },
    })
}

/// One classification per rate. Rates must be non-empty and ascending.
pub fn crossover_table(
    grid: &NodeGrid,
    rates_gbps: &[f64],
    bd_limit_gbps_cm: f64,
) -> Result<Vec<FabricClassification>> {
    if rates_gbps.is_empty() {
        return Err(Error::invalid("rates", "list is empty"));
    }
    if rates_gbps.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("rates", "must be ascending"));
    }
    rates_gbps
        .iter()
        .map(|&r| classify_fabric(grid, r, bd_limit_gbps_cm))
        .collect()
}
