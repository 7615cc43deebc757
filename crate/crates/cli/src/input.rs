//! Input documents. Every file is JSON with a versioned `schema` field.

use std::collections::BTreeSet;
use std::path::Path;

use optofabric::dwdm_plan::{BroadcastNetwork, PassiveElement, ReceiverRef, TransmitterRef};
use optofabric::link_budget::{network_path, BerModel, OpticalPath, ScalingLedger};
use optofabric::media::{MediumCatalog, MediumClass};
use optofabric::metrics::{
    ConnectorDensityRecord, EnergyScalingRecord, PowerBreakdown, TransceiverRecord,
};
use optofabric::topology::NodeGrid;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult, ExitKind};

pub const SYSTEM_SCHEMA: &str = "optofabric.system/v1";
pub const NETWORK_SCHEMA: &str = "optofabric.network/v1";
pub const CATALOG_SCHEMA: &str = "optofabric.catalog/v1";

/// A parsed document together with the SHA-256 of its bytes.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub doc: T,
    pub digest: String,
}

#[derive(Deserialize)]
struct SchemaProbe {
    schema: Option<String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn read(path: &Path, schema: &str) -> CliResult<(Vec<u8>, String)> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let probe: SchemaProbe =
        serde_json::from_slice(&bytes).map_err(|e| CliError::from(e).context(path.display()))?;
    match probe.schema.as_deref() {
        Some(s) if s == schema => {}
        Some(s) => {
            return Err(CliError::input(format!(
                "{}: schema '{s}' is not supported, expected '{schema}'",
                path.display()
            )))
        }
        None => {
            return Err(CliError::input(format!(
                "{}: missing top-level field `schema` (expected '{schema}')",
                path.display()
            )))
        }
    }
    let digest = sha256_hex(&bytes);
    Ok((bytes, digest))
}

fn parse<T: DeserializeOwned>(path: &Path, bytes: &[u8]) -> CliResult<T> {
    serde_json::from_slice(bytes).map_err(|e| CliError::from(e).context(path.display()))
}

/// A value another source prints for something a command computes.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    pub item: String,
    pub quantity: String,
    pub value: f64,
    /// Absolute tolerance; defaults to 1% of the value.
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub note: Option<String>,
}

impl Reference {
    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(0.01 * self.value.abs())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub schema: String,
    pub grid: NodeGrid,
    #[serde(default)]
    pub media_catalog: Option<MediumCatalog>,
    pub rates_gbps: Vec<f64>,
    #[serde(default)]
    pub electrical_bd_limit_gbps_cm: Option<f64>,
    /// Take the limit from this catalog entry instead.
    #[serde(default)]
    pub electrical_medium: Option<String>,
    #[serde(default)]
    pub references: Vec<Reference>,
}

impl SystemConfig {
    pub fn load(path: &Path) -> CliResult<Loaded<Self>> {
        let (bytes, digest) = read(path, SYSTEM_SCHEMA)?;
        let doc: Self = parse(path, &bytes)?;
        doc.bd_limit().map_err(|e| e.context(path.display()))?;
        Ok(Loaded { doc, digest })
    }

    pub fn catalog(&self) -> MediumCatalog {
        self.media_catalog.clone().unwrap_or_default()
    }

    /// Electrical B·d limit: explicit value, named medium, or the
    /// catalog's electrical PCB entry.
    pub fn bd_limit(&self) -> CliResult<f64> {
        let catalog = self.catalog();
        match (self.electrical_bd_limit_gbps_cm, &self.electrical_medium) {
            (Some(_), Some(_)) => Err(CliError::input(
                "give either electrical_bd_limit_gbps_cm or electrical_medium, not both",
            )),
            (Some(v), None) if v.is_finite() && v > 0.0 => Ok(v),
            (Some(v), None) => Err(CliError::input(format!(
                "electrical_bd_limit_gbps_cm {v} must be > 0"
            ))),
            (None, Some(name)) => Ok(catalog.get(name)?.bd_gbps_cm),
            (None, None) => catalog
                .by_class(MediumClass::ElectricalPcb)
                .map(|m| m.bd_gbps_cm)
                .ok_or_else(|| CliError::input("no electrical B·d limit and no electrical medium")),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Route {
    pub tx: TransmitterRef,
    pub rx: ReceiverRef,
    /// Elements appended after the network's own chain.
    #[serde(default)]
    pub extra_elements: Vec<PassiveElement>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedPath {
    pub name: String,
    #[serde(default)]
    pub route: Option<Route>,
    #[serde(default)]
    pub path: Option<OpticalPath>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedLedger {
    pub name: String,
    pub ledger: ScalingLedger,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkPlanFile {
    pub schema: String,
    pub network: BroadcastNetwork,
    #[serde(default)]
    pub ber_model: BerModel,
    #[serde(default)]
    pub paths: Vec<NamedPath>,
    #[serde(default)]
    pub ledgers: Vec<NamedLedger>,
    #[serde(default)]
    pub references: Vec<Reference>,
}

impl NetworkPlanFile {
    pub fn load(path: &Path) -> CliResult<Loaded<Self>> {
        let (bytes, digest) = read(path, NETWORK_SCHEMA)?;
        let doc: Self = parse(path, &bytes)?;
        doc.validate().map_err(|e| e.context(path.display()))?;
        Ok(Loaded { doc, digest })
    }

    fn validate(&self) -> CliResult<()> {
        let mut names = BTreeSet::new();
        for (i, p) in self.paths.iter().enumerate() {
            if !names.insert(p.name.as_str()) {
                return Err(CliError::input(format!(
                    "paths[{i}]: duplicate name '{}'",
                    p.name
                )));
            }
            if p.route.is_some() == p.path.is_some() {
                return Err(CliError::input(format!(
                    "paths[{i}] '{}': give exactly one of `route` or `path`",
                    p.name
                )));
            }
        }
        let mut names = BTreeSet::new();
        for (i, l) in self.ledgers.iter().enumerate() {
            if !names.insert(l.name.as_str()) {
                return Err(CliError::input(format!(
                    "ledgers[{i}]: duplicate name '{}'",
                    l.name
                )));
            }
        }
        Ok(())
    }

    pub fn path_names(&self) -> Vec<&str> {
        self.paths.iter().map(|p| p.name.as_str()).collect()
    }

    /// Resolve a named path to its element chain.
    pub fn resolve_path(&self, name: &str) -> CliResult<OpticalPath> {
        let entry = self.paths.iter().find(|p| p.name == name).ok_or_else(|| {
            CliError::new(
                ExitKind::UnknownReference,
                format!(
                    "unknown path '{name}' (available: {})",
                    self.path_names().join(", ")
                ),
            )
        })?;
        match (&entry.route, &entry.path) {
            (Some(r), _) => {
                let mut p = network_path(&self.network, &r.tx, &r.rx)
                    .map_err(|e| CliError::from(e).context(format!("path '{name}'")))?;
                p.elements.extend(r.extra_elements.iter().cloned());
                Ok(p)
            }
            (None, Some(p)) => Ok(p.clone()),
            (None, None) => unreachable!("validated on load"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostPoint {
    pub name: String,
    pub low_usd_per_gbps: f64,
    pub high_usd_per_gbps: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Catalog {
    pub transceivers: Vec<TransceiverRecord>,
    pub energy_scaling: Vec<EnergyScalingRecord>,
    pub connectors: Vec<ConnectorDensityRecord>,
    pub density_ratios: Vec<(String, String)>,
    pub cost_points: Vec<CostPoint>,
    pub power_breakdowns: Vec<PowerBreakdown>,
    pub references: Vec<Reference>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCatalog {
    #[allow(dead_code)]
    schema: String,
    #[serde(default)]
    transceivers: Vec<Value>,
    #[serde(default)]
    energy_scaling: Vec<Value>,
    #[serde(default)]
    connectors: Vec<Value>,
    #[serde(default)]
    density_ratios: Vec<(String, String)>,
    #[serde(default)]
    cost_points: Vec<Value>,
    #[serde(default)]
    power_breakdowns: Vec<Value>,
    #[serde(default)]
    references: Vec<Reference>,
}

/// Parse one list entry, naming it in any error.
fn row<T: DeserializeOwned>(list: &str, i: usize, v: Value) -> CliResult<T> {
    let label = match v.get("name").and_then(Value::as_str) {
        Some(n) => format!("{list}[{i}] '{n}'"),
        None => format!("{list}[{i}]"),
    };
    serde_json::from_value(v).map_err(|e| CliError::input(format!("{label}: {e}")))
}

fn rows<T: DeserializeOwned>(list: &str, values: Vec<Value>) -> CliResult<Vec<T>> {
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| row(list, i, v))
        .collect()
}

impl Catalog {
    pub fn load(path: &Path) -> CliResult<Loaded<Self>> {
        let (bytes, digest) = read(path, CATALOG_SCHEMA)?;
        let raw: RawCatalog = parse(path, &bytes)?;
        let doc = Self::from_raw(raw).map_err(|e| e.context(path.display()))?;
        Ok(Loaded { doc, digest })
    }

    fn from_raw(raw: RawCatalog) -> CliResult<Self> {
        let cat = Catalog {
            transceivers: rows("transceivers", raw.transceivers)?,
            energy_scaling: rows("energy_scaling", raw.energy_scaling)?,
            connectors: rows("connectors", raw.connectors)?,
            density_ratios: raw.density_ratios,
            cost_points: rows("cost_points", raw.cost_points)?,
            power_breakdowns: rows("power_breakdowns", raw.power_breakdowns)?,
            references: raw.references,
        };
        if cat.transceivers.is_empty()
            && cat.connectors.is_empty()
            && cat.energy_scaling.is_empty()
            && cat.cost_points.is_empty()
            && cat.power_breakdowns.is_empty()
        {
            return Err(CliError::input("catalog has no records"));
        }
        for (i, t) in cat.transceivers.iter().enumerate() {
            t.validate().map_err(|e| {
                CliError::from(e).context(format!("transceivers[{i}] '{}'", t.name))
            })?;
        }
        for (i, c) in cat.connectors.iter().enumerate() {
            c.validate()
                .map_err(|e| CliError::from(e).context(format!("connectors[{i}] '{}'", c.name)))?;
        }
        for (i, c) in cat.cost_points.iter().enumerate() {
            if !(c.low_usd_per_gbps > 0.0 && c.low_usd_per_gbps <= c.high_usd_per_gbps) {
                return Err(CliError::input(format!(
                    "cost_points[{i}] '{}': need 0 < low <= high",
                    c.name
                )));
            }
        }
        Ok(cat)
    }

    pub fn connector(&self, name: &str) -> CliResult<&ConnectorDensityRecord> {
        self.connectors
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| {
                CliError::new(
                    ExitKind::UnknownReference,
                    format!("unknown connector '{name}'"),
                )
            })
    }
}
