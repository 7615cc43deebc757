//! Comparison metrics: energy per bit, interconnect density, cost zone.
//!
//! Catalog records may carry the value a data sheet or publication printed
//! next to the inputs. Derived values are never overwritten with printed
//! ones; instead each row says whether the two agree.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative gap between printed and derived pJ/bit that counts as a real
/// discrepancy rather than rounding.
pub const ENERGY_DISCREPANCY_REL: f64 = 0.05;

/// Same, for a record's printed B·d versus rate × reach.
pub const BD_DISCREPANCY_REL: f64 = 0.05;

/// A number as printed in a source table, with its printed precision.
///
/// Deserializes from a JSON string (`"12.034"`, keeps trailing zeros) or a
/// number (precision taken from its shortest round-trip form).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PrintedRepr", into = "String")]
pub struct PrintedValue {
    text: String,
    value: f64,
    decimals: u32,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PrintedRepr {
    Text(String),
    Number(f64),
}

impl TryFrom<PrintedRepr> for PrintedValue {
    type Error = Error;
    fn try_from(r: PrintedRepr) -> Result<Self> {
        match r {
            PrintedRepr::Text(s) => s.parse(),
            PrintedRepr::Number(v) => v.to_string().parse(),
        }
    }
}

impl From<PrintedValue> for String {
    fn from(p: PrintedValue) -> String {
        p.text
    }
}

impl std::str::FromStr for PrintedValue {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let text = s.trim().replace(',', "");
        let value: f64 = text
            .parse()
            .map_err(|_| Error::invalid("printed value", format!("'{s}' is not a number")))?;
        if !value.is_finite() {
            return Err(Error::invalid(
                "printed value",
                format!("'{s}' is not finite"),
            ));
        }
        let decimals = text
            .split_once('.')
            .map_or(0, |(_, frac)| frac.len() as u32);
        Ok(PrintedValue {
            text,
            value,
            decimals,
        })
    }
}

impl fmt::Display for PrintedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl PrintedValue {
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn decimals(&self) -> u32 {
        self.decimals
    }

    /// Whether `derived`, rounded half away from zero to the printed
    /// precision, reproduces the printed value.
    pub fn agrees_with(&self, derived: f64) -> bool {
        let scale = 10f64.powi(self.decimals as i32);
        ((derived * scale).round() - self.value * scale).abs() < 1e-6
    }

    pub fn relative_error(&self, derived: f64) -> f64 {
        (derived - self.value).abs() / self.value.abs()
    }
}

fn positive(what: &'static str, name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(what, format!("'{name}': {v} must be > 0")))
    }
}

/// `P / (lanes · rate)`; 1 mW per Gbps is 1 pJ/bit.
pub fn energy_per_bit_pj(total_power_mw: f64, lanes: u32, rate_per_lane_gbps: f64) -> Result<f64> {
    positive("power", "energy per bit", total_power_mw)?;
    positive("rate", "energy per bit", rate_per_lane_gbps)?;
    if lanes == 0 {
        return Err(Error::invalid(
            "lanes",
            "energy per bit needs at least one lane",
        ));
    }
    Ok(total_power_mw / (f64::from(lanes) * rate_per_lane_gbps))
}

/// Energy per bit at a new rate, holding power fixed.
pub fn scale_energy_per_bit(base_pj: f64, base_rate_gbps: f64, new_rate_gbps: f64) -> Result<f64> {
    positive("energy", "scaling", base_pj)?;
    positive("rate", "scaling", base_rate_gbps)?;
    positive("rate", "scaling", new_rate_gbps)?;
    Ok(base_pj * base_rate_gbps / new_rate_gbps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransceiverRecord {
    pub name: String,
    #[serde(default)]
    pub wavelength_nm: Option<f64>,
    pub lanes: u32,
    pub rate_per_lane_gbps: f64,
    pub total_power_mw: f64,
    #[serde(default)]
    pub reach_m: Option<f64>,
    #[serde(default)]
    pub bd_per_lane_gbps_cm: Option<PrintedValue>,
    #[serde(default)]
    pub printed_pj_per_bit: Option<PrintedValue>,
    #[serde(default)]
    pub cost_usd_per_gbps: Option<(f64, f64)>,
    #[serde(default)]
    pub notes: String,
}

impl TransceiverRecord {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::invalid("transceiver", "empty name"));
        }
        if self.lanes == 0 {
            return Err(Error::invalid(
                "transceiver",
                format!("'{}': lanes must be >= 1", self.name),
            ));
        }
        positive("transceiver", &self.name, self.rate_per_lane_gbps)?;
        positive("transceiver", &self.name, self.total_power_mw)?;
        if let Some(r) = self.reach_m {
            positive("transceiver", &self.name, r)?;
        }
        if let Some((lo, hi)) = self.cost_usd_per_gbps {
            if !(lo > 0.0 && lo <= hi) {
                return Err(Error::invalid(
                    "transceiver",
                    format!("'{}': cost range ({lo}, {hi})", self.name),
                ));
            }
        }
        Ok(())
    }

    pub fn aggregate_gbps(&self) -> f64 {
        f64::from(self.lanes) * self.rate_per_lane_gbps
    }

    /// Per-lane rate × reach, in Gbps·cm.
    pub fn derived_bd_gbps_cm(&self) -> Option<f64> {
        self.reach_m.map(|m| self.rate_per_lane_gbps * m * 100.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub name: String,
    pub lanes: u32,
    pub rate_per_lane_gbps: f64,
    pub aggregate_gbps: f64,
    pub total_power_mw: f64,
    pub derived_pj_per_bit: f64,
    pub printed_pj_per_bit: Option<PrintedValue>,
    /// Derived value does not round to the printed one.
    pub pj_rounding_flag: bool,
    /// Derived and printed differ by more than [`ENERGY_DISCREPANCY_REL`].
    pub pj_discrepancy_flag: bool,
    pub reach_m: Option<f64>,
    pub derived_bd_gbps_cm: Option<f64>,
    pub printed_bd_gbps_cm: Option<PrintedValue>,
    /// Printed B·d disagrees with rate × reach.
    pub bd_flag: bool,
}

pub fn comparison_row(rec: &TransceiverRecord) -> Result<ComparisonRow> {
    rec.validate()?;
    let pj = energy_per_bit_pj(rec.total_power_mw, rec.lanes, rec.rate_per_lane_gbps)?;
    let (rounding, discrepancy) = match &rec.printed_pj_per_bit {
        Some(p) => (
            !p.agrees_with(pj),
            p.relative_error(pj) > ENERGY_DISCREPANCY_REL,
        ),
        None => (false, false),
    };
    let derived_bd = rec.derived_bd_gbps_cm();
    let bd_flag = match (&rec.bd_per_lane_gbps_cm, derived_bd) {
        (Some(p), Some(d)) => p.relative_error(d) > BD_DISCREPANCY_REL,
        _ => false,
    };
    Ok(ComparisonRow {
        name: rec.name.clone(),
        lanes: rec.lanes,
        rate_per_lane_gbps: rec.rate_per_lane_gbps,
        aggregate_gbps: rec.aggregate_gbps(),
        total_power_mw: rec.total_power_mw,
        derived_pj_per_bit: pj,
        printed_pj_per_bit: rec.printed_pj_per_bit.clone(),
        pj_rounding_flag: rounding,
        pj_discrepancy_flag: discrepancy,
        reach_m: rec.reach_m,
        derived_bd_gbps_cm: derived_bd,
        printed_bd_gbps_cm: rec.bd_per_lane_gbps_cm.clone(),
        bd_flag,
    })
}

/// One row per record, in input order.
pub fn comparison_table(records: &[TransceiverRecord]) -> Result<Vec<ComparisonRow>> {
    if records.is_empty() {
        return Err(Error::invalid("comparison", "no records"));
    }
    records.iter().map(comparison_row).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortKey {
    Name,
    AggregateRate,
    Power,
    EnergyPerBit,
    Reach,
    BandwidthDistance,
}

/// Stable sort; rows missing the key go last.
pub fn sort_rows(rows: &mut [ComparisonRow], key: SortKey) {
    fn opt(a: Option<f64>, b: Option<f64>) -> Ordering {
        match (a, b) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        }
    }
    rows.sort_by(|a, b| match key {
        SortKey::Name => a.name.cmp(&b.name),
        SortKey::AggregateRate => a.aggregate_gbps.total_cmp(&b.aggregate_gbps),
        SortKey::Power => a.total_power_mw.total_cmp(&b.total_power_mw),
        SortKey::EnergyPerBit => a.derived_pj_per_bit.total_cmp(&b.derived_pj_per_bit),
        SortKey::Reach => opt(a.reach_m, b.reach_m),
        SortKey::BandwidthDistance => opt(a.derived_bd_gbps_cm, b.derived_bd_gbps_cm),
    });
}

/// Energy-per-bit projection at a higher line rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyScalingRecord {
    pub name: String,
    pub base_pj_per_bit: f64,
    pub base_rate_gbps: f64,
    pub new_rate_gbps: f64,
    #[serde(default)]
    pub printed_pj_per_bit: Option<PrintedValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyScalingRow {
    pub name: String,
    pub base_pj_per_bit: f64,
    pub base_rate_gbps: f64,
    pub new_rate_gbps: f64,
    pub derived_pj_per_bit: f64,
    pub printed_pj_per_bit: Option<PrintedValue>,
    pub rounding_flag: bool,
}

pub fn energy_scaling_row(rec: &EnergyScalingRecord) -> Result<EnergyScalingRow> {
    let derived = scale_energy_per_bit(rec.base_pj_per_bit, rec.base_rate_gbps, rec.new_rate_gbps)
        .map_err(|e| Error::invalid("energy scaling", format!("'{}': {e}", rec.name)))?;
    Ok(EnergyScalingRow {
        name: rec.name.clone(),
        base_pj_per_bit: rec.base_pj_per_bit,
        base_rate_gbps: rec.base_rate_gbps,
        new_rate_gbps: rec.new_rate_gbps,
        derived_pj_per_bit: derived,
        rounding_flag: rec
            .printed_pj_per_bit
            .as_ref()
            .is_some_and(|p| !p.agrees_with(derived)),
        printed_pj_per_bit: rec.printed_pj_per_bit.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectorDensityRecord {
    pub name: String,
    pub channels_per_fiber: u32,
    pub fibers: u32,
    pub rate_gbps: f64,
    pub width_mm: f64,
    pub height_mm: f64,
    #[serde(default)]
    pub printed_density: Option<PrintedValue>,
}

impl ConnectorDensityRecord {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::invalid("connector", "empty name"));
        }
        if self.channels_per_fiber == 0 || self.fibers == 0 {
            return Err(Error::invalid(
                "connector",
                format!("'{}': channel and fiber counts must be >= 1", self.name),
            ));
        }
        positive("connector", &self.name, self.rate_gbps)?;
        positive("connector", &self.name, self.width_mm)?;
        positive("connector", &self.name, self.height_mm)
    }

    pub fn aggregate_gbps(&self) -> f64 {
        f64::from(self.channels_per_fiber) * f64::from(self.fibers) * self.rate_gbps
    }

    pub fn face_area_mm2(&self) -> f64 {
        self.width_mm * self.height_mm
    }
}

/// Aggregate bandwidth over connector face area, Gbps/mm².
pub fn interconnect_density(rec: &ConnectorDensityRecord) -> Result<f64> {
    rec.validate()?;
    Ok(rec.aggregate_gbps() / rec.face_area_mm2())
}

pub fn density_ratio(a: &ConnectorDensityRecord, b: &ConnectorDensityRecord) -> Result<f64> {
    Ok(interconnect_density(a)? / interconnect_density(b)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityRow {
    pub name: String,
    pub aggregate_gbps: f64,
    pub face_area_mm2: f64,
    pub derived_density: f64,
    pub printed_density: Option<PrintedValue>,
    pub relative_error: Option<f64>,
    pub rounding_flag: bool,
}

pub fn density_table(records: &[ConnectorDensityRecord]) -> Result<Vec<DensityRow>> {
    records
        .iter()
        .map(|r| {
            let d = interconnect_density(r)?;
            Ok(DensityRow {
                name: r.name.clone(),
                aggregate_gbps: r.aggregate_gbps(),
                face_area_mm2: r.face_area_mm2(),
                derived_density: d,
                relative_error: r.printed_density.as_ref().map(|p| p.relative_error(d)),
                rounding_flag: r
                    .printed_density
                    .as_ref()
                    .is_some_and(|p| !p.agrees_with(d)),
                printed_density: r.printed_density.clone(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostZone {
    ElectricalFavored,
    Crossover,
    OpticalFavored,
}

impl fmt::Display for CostZone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostZone::ElectricalFavored => "electrical-favored",
            CostZone::Crossover => "crossover",
            CostZone::OpticalFavored => "optical-favored",
        })
    }
}

/// Optical cost per Gbps against the 1–2 $/Gbps crossover band.
pub fn cost_crossover_zone(cost_usd_per_gbps: f64) -> Result<CostZone> {
    positive("cost", "crossover", cost_usd_per_gbps)?;
    Ok(if cost_usd_per_gbps > 2.0 {
        CostZone::ElectricalFavored
    } else if cost_usd_per_gbps >= 1.0 {
        CostZone::Crossover
    } else {
        CostZone::OpticalFavored
    })
}

/// Share of total power per functional block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBreakdown")]
pub struct PowerBreakdown {
    pub name: String,
    blocks: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBreakdown {
    name: String,
    #[serde(default)]
    fractions: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    absolute_mw: Option<BTreeMap<String, f64>>,
}

impl TryFrom<RawBreakdown> for PowerBreakdown {
    type Error = Error;
    fn try_from(raw: RawBreakdown) -> Result<Self> {
        match (raw.fractions, raw.absolute_mw) {
            (Some(f), None) => PowerBreakdown::from_fractions(raw.name, f),
            (None, Some(a)) => PowerBreakdown::from_absolute(raw.name, a),
            _ => Err(Error::invalid(
                "power breakdown",
                format!(
                    "'{}': give exactly one of fractions / absolute_mw",
                    raw.name
                ),
            )),
        }
    }
}

impl PowerBreakdown {
    pub fn from_fractions(name: impl Into<String>, blocks: BTreeMap<String, f64>) -> Result<Self> {
        let name = name.into();
        if blocks.values().any(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(Error::invalid(
                "power breakdown",
                format!("'{name}': negative share"),
            ));
        }
        let sum: f64 = blocks.values().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(
                "power breakdown",
                format!("'{name}': fractions sum to {sum}, not 1"),
            ));
        }
        Ok(Self { name, blocks })
    }

    pub fn from_absolute(
        name: impl Into<String>,
        blocks_mw: BTreeMap<String, f64>,
    ) -> Result<Self> {
        let name = name.into();
        let total: f64 = blocks_mw.values().sum();
        if !(total > 0.0) || blocks_mw.values().any(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(Error::invalid(
                "power breakdown",
                format!("'{name}': bad block powers"),
            ));
        }
        let blocks = blocks_mw.into_iter().map(|(k, v)| (k, v / total)).collect();
        Self::from_fractions(name, blocks)
    }

    pub fn share(&self, block: &str) -> Option<f64> {
        self.blocks.get(block).copied()
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&str, f64)> {
        self.blocks.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn printed(s: &str) -> PrintedValue {
        s.parse().unwrap()
    }

    fn conn(name: &str, cpf: u32, fibers: u32, w: f64, h: f64, p: &str) -> ConnectorDensityRecord {
        ConnectorDensityRecord {
            name: name.into(),
            channels_per_fiber: cpf,
            fibers,
            rate_gbps: 10.0,
            width_mm: w,
            height_mm: h,
            printed_density: Some(printed(p)),
        }
    }

    fn xcvr(name: &str, lanes: u32, rate: f64, mw: f64, pj: &str) -> TransceiverRecord {
        TransceiverRecord {
            name: name.into(),
            wavelength_nm: None,
            lanes,
            rate_per_lane_gbps: rate,
            total_power_mw: mw,
            reach_m: None,
            bd_per_lane_gbps_cm: None,
            printed_pj_per_bit: Some(printed(pj)),
            cost_usd_per_gbps: None,
            notes: String::new(),
        }
    }

    #[test]
    fn energy_examples() {
        assert!((energy_per_bit_pj(800.0, 4, 6.0).unwrap() - 33.33).abs() < 5e-3);
        assert_eq!(energy_per_bit_pj(1.0, 1, 1.0).unwrap(), 1.0);
        assert!((energy_per_bit_pj(3100.0, 12, 6.0).unwrap() - 43.06).abs() < 5e-3);
        assert!(energy_per_bit_pj(1.0, 0, 1.0).is_err());
        assert!(energy_per_bit_pj(-1.0, 1, 1.0).is_err());
    }

    #[test]
    fn scaling_examples() {
        assert_eq!(scale_energy_per_bit(143.0, 10.0, 40.0).unwrap(), 35.75);
        assert_eq!(scale_energy_per_bit(143.0, 10.0, 10.0).unwrap(), 143.0);
        assert_eq!(scale_energy_per_bit(143.0, 10.0, 20.0).unwrap(), 71.5);
    }

    #[test]
    fn density_examples() {
        let e = conn("Electrical", 1, 21, 17.5, 13.5, "0.889");
        let mpo = conn("Multimode MPO", 1, 144, 17.5, 13.5, "6.095");
        let lc = conn("Single-Mode LC", 40, 1, 7.36, 4.52, "12.034");
        let lux = conn("Luxtera extended", 40, 8, 13.5, 8.5, "27.887");
        assert!((interconnect_density(&e).unwrap() - 0.889).abs() < 5e-4);
        assert!((interconnect_density(&mpo).unwrap() - 6.095).abs() < 5e-4);
        assert!((interconnect_density(&lc).unwrap() - 12.024).abs() < 5e-4);
        assert!((density_ratio(&mpo, &e).unwrap() - 6.857).abs() < 1e-3);
        assert_eq!(density_ratio(&e, &e).unwrap(), 1.0);
        assert!((density_ratio(&lux, &mpo).unwrap() - 4.575).abs() < 1e-3);
        let rows = density_table(&[e, mpo, lc]).unwrap();
        let flags: Vec<bool> = rows.iter().map(|r| r.rounding_flag).collect();
        assert_eq!(flags, vec![false, false, true]);
    }

    #[test]
    fn cost_zones() {
        assert_eq!(
            cost_crossover_zone(10.0).unwrap(),
            CostZone::ElectricalFavored
        );
        assert_eq!(cost_crossover_zone(1.5).unwrap(), CostZone::Crossover);
        assert_eq!(cost_crossover_zone(2.0).unwrap(), CostZone::Crossover);
        assert_eq!(cost_crossover_zone(1.0).unwrap(), CostZone::Crossover);
        assert_eq!(cost_crossover_zone(0.5).unwrap(), CostZone::OpticalFavored);
        assert!(cost_crossover_zone(0.0).is_err());
    }

    #[test]
    fn comparison_examples() {
        let rows = comparison_table(&[
            xcvr("Supplier #1", 4, 10.0, 1500.0, "38"),
            xcvr("Rambus 2007", 1, 6.25, 14.0, "2.2"),
            xcvr("Reflex", 12, 6.0, 3100.0, "44"),
        ])
        .unwrap();
        assert!((rows[0].derived_pj_per_bit - 37.5).abs() < 1e-12);
        assert!(!rows[0].pj_rounding_flag);
        assert!((rows[1].derived_pj_per_bit - 2.24).abs() < 1e-12);
        assert!(!rows[1].pj_rounding_flag);
        assert!(rows[2].pj_rounding_flag);
        assert!(!rows[2].pj_discrepancy_flag);
        assert!(comparison_table(&[]).is_err());
        let single = comparison_table(&[xcvr("x", 1, 1.0, 1.0, "1")]).unwrap();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn bd_flag_on_rate_reach_mismatch() {
        let mut r = xcvr("s1", 4, 10.0, 1500.0, "38");
        r.reach_m = Some(100.0);
        r.bd_per_lane_gbps_cm = Some(printed("10,000"));
        assert!(comparison_row(&r).unwrap().bd_flag);
        let mut ok = xcvr("rambus", 512, 16.0, 172_000.0, "21");
        ok.reach_m = Some(0.08);
        ok.bd_per_lane_gbps_cm = Some(printed("128"));
        let row = comparison_row(&ok).unwrap();
        assert!(!row.bd_flag);
        assert!((row.derived_pj_per_bit - 21.0).abs() < 0.01);
    }

    #[test]
    fn sorting() {
        let mut rows = comparison_table(&[
            xcvr("b", 1, 10.0, 100.0, "10"),
            xcvr("a", 1, 10.0, 50.0, "5"),
            xcvr("c", 1, 10.0, 500.0, "50"),
        ])
        .unwrap();
        sort_rows(&mut rows, SortKey::EnergyPerBit);
        let names: Vec<&str> = rows.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["a", "b", "c"]);
        sort_rows(&mut rows, SortKey::Name);
        assert_eq!(rows[0].name, "a");
    }

    #[test]
    fn printed_value_parsing() {
        let p = printed("12.034");
        assert_eq!((p.value(), p.decimals()), (12.034, 3));
        assert_eq!(printed("172,000").value(), 172_000.0);
        assert!("abc".parse::<PrintedValue>().is_err());
        let from_num: PrintedValue = serde_json::from_str("2.2").unwrap();
        assert_eq!(from_num.decimals(), 1);
        let keeps_zero: PrintedValue = serde_json::from_str("\"0.10\"").unwrap();
        assert_eq!(keeps_zero.decimals(), 2);
        assert!(printed("38").agrees_with(37.5));
        assert!(printed("53").agrees_with(52.5));
        assert!(!printed("44").agrees_with(43.06));
    }

    #[test]
    fn breakdown() {
        let b = PowerBreakdown::from_fractions(
            "tx",
            [("cdr".to_string(), 0.34), ("other".to_string(), 0.66)].into(),
        )
        .unwrap();
        assert_eq!(b.share("cdr"), Some(0.34));
        assert!(PowerBreakdown::from_fractions("bad", [("a".to_string(), 0.5)].into()).is_err());
        let abs = PowerBreakdown::from_absolute(
            "abs",
            [("a".to_string(), 30.0), ("b".to_string(), 10.0)].into(),
        )
        .unwrap();
        assert_eq!(abs.share("a"), Some(0.75));
    }

    proptest! {
        #[test]
        fn dimensional_identity(p in 1e-3f64..1e6, r in 1e-3f64..1e3) {
            let pj = energy_per_bit_pj(p, 1, r).unwrap();
            prop_assert!((pj * r - p).abs() <= 1e-12 * p);
        }

        #[test]
        fn ratio_antisymmetric(f1 in 1u32..200, f2 in 1u32..200, w in 1.0f64..30.0, h in 1.0f64..30.0) {
            let a = conn("a", 1, f1, w, h, "1");
            let b = conn("b", 2, f2, h, w + 1.0, "1");
            let prod = density_ratio(&a, &b).unwrap() * density_ratio(&b, &a).unwrap();
            prop_assert!((prod - 1.0).abs() < 1e-12);
        }
    }
}
