//! Optical power budgets, link margin, BER sweeps and coupler scaling.
//!
//! Budgets run on OMA: launch OMA minus the element losses gives the
//! received OMA, and margin is received minus receiver sensitivity at BER
//! 1e-12. A negative margin is a valid (infeasible) result.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dwdm_plan::{
    AwgDirection, BroadcastNetwork, ElementKind, ItuChannel, Launch, PassiveElement, ReceiverRef,
    ReceiverSpec, TransmitterRef, TransmitterSpec,
};
use crate::error::{Error, Result};
use crate::power_math::{ber_from_q, LossDb, PowerDbm, QFactor};

/// Q giving BER 1e-12 under the Gaussian model.
pub const Q_AT_1E12: f64 = 7.0345;

/// Reported BERs below this are printed as zero.
pub const BER_REPORT_FLOOR: f64 = 1e-300;

/// `10·log10(ports)`: ideal 1:n power split.
pub fn splitting_loss_db(ports: u32) -> Result<LossDb> {
    if ports == 0 {
        return Err(Error::invalid("ports", "splitter needs at least one port"));
    }
    LossDb::new(split_db(ports))
}

fn split_db(ports: u32) -> f64 {
    10.0 * f64::from(ports).log10()
}

/// Insertion loss of one element.
///
/// A star coupler splits over its outputs. An AWG used as a demux only costs
/// its excess loss; driven backwards from an output port it also splits over
/// its ports.
pub fn element_loss_db(e: &PassiveElement) -> LossDb {
    let db = match &e.kind {
        ElementKind::StarCoupler(s) => split_db(s.out_ports) + s.excess_db.value(),
        ElementKind::Awg(a) => match a.direction {
            AwgDirection::Demux => a.excess_db.value(),
            AwgDirection::Broadcast => split_db(a.ports) + a.excess_db.value(),
        },
        ElementKind::Connector { loss_db } | ElementKind::Attenuator { loss_db } => loss_db.value(),
        ElementKind::FiberSpan {
            length_m,
            atten_db_per_km,
        } => length_m * atten_db_per_km / 1000.0,
    };
    LossDb::new(db).expect("validated element")
}

/// Source end of an optical path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSource {
    pub launch: Launch,
    /// ITU channel for DWDM sources; `None` for grey optics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ItuChannel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_gbps: Option<f64>,
}

impl From<&TransmitterSpec> for PathSource {
    fn from(t: &TransmitterSpec) -> Self {
        PathSource {
            launch: t.launch,
            channel: Some(t.current),
            rate_gbps: Some(t.rate_gbps),
        }
    }
}

/// Transmitter, ordered passive elements, receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPath")]
pub struct OpticalPath {
    pub tx: PathSource,
    pub elements: Vec<PassiveElement>,
    pub rx: ReceiverSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPath {
    tx: PathSource,
    #[serde(default)]
    elements: Vec<PassiveElement>,
    rx: ReceiverSpec,
}

impl TryFrom<RawPath> for OpticalPath {
    type Error = Error;
    fn try_from(raw: RawPath) -> Result<Self> {
        OpticalPath::new(raw.tx, raw.elements, raw.rx)
    }
}

impl OpticalPath {
    pub fn new(tx: PathSource, elements: Vec<PassiveElement>, rx: ReceiverSpec) -> Result<Self> {
        if let Some(c) = tx.channel {
            if !rx.select_channels.is_empty() && !rx.select_channels.contains(&c) {
                return Err(Error::invalid(
                    "path",
                    format!("receiver does not select channel {c}"),
                ));
            }
        }
        Ok(Self { tx, elements, rx })
    }

    pub fn total_loss(&self) -> LossDb {
        self.elements.iter().map(element_loss_db).sum()
    }

    /// The same path with an extra attenuator in front of the receiver.
    pub fn with_attenuation(&self, db: f64) -> Result<Self> {
        let mut p = self.clone();
        p.elements
            .push(PassiveElement::attenuator(db)?.labeled("test attenuator"));
        Ok(p)
    }
}

/// Path from a network transmitter through the star coupler to a receiver.
pub fn network_path(
    net: &BroadcastNetwork,
    tx: &TransmitterRef,
    rx: &ReceiverRef,
) -> Result<OpticalPath> {
    let spec = net.transmitter(tx)?;
    let port = net.receiver(rx)?;
    let c = net.coupler();
    let mut elements = net.node(&tx.node)?.mux.clone();
    elements.extend(net.uplink().iter().cloned());
    elements.push(
        PassiveElement::star_coupler(c.in_ports, c.out_ports, c.excess_db.value())?
            .labeled(format!("star-coupler {}x{}", c.in_ports, c.out_ports)),
    );
    elements.extend(net.downlink().iter().cloned());
    elements.extend(port.filter.iter().cloned());
    OpticalPath::new(spec.into(), elements, port.spec.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetStage {
    pub name: String,
    pub loss_db: f64,
    /// Running power after this stage.
    pub power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetReport {
    pub launch_oma_dbm: PowerDbm,
    /// Average launch power, carried as an annotation only.
    pub launch_average_dbm: Option<PowerDbm>,
    pub stages: Vec<BudgetStage>,
    pub total_loss_db: f64,
    pub received_oma_dbm: PowerDbm,
    pub sensitivity_dbm: PowerDbm,
    pub margin_db: f64,
}

impl BudgetReport {
    pub fn is_feasible(&self) -> bool {
        self.margin_db >= 0.0
    }
}

pub fn compute_budget(path: &OpticalPath) -> Result<BudgetReport> {
    let launch = path.tx.launch.oma_dbm()?;
    let mut power = launch;
    let mut stages = Vec::with_capacity(path.elements.len());
    let mut total = LossDb::ZERO;
    for e in &path.elements {
        let loss = element_loss_db(e);
        total = total + loss;
        power = power.attenuate(loss);
        stages.push(BudgetStage {
            name: e.display_name(),
            loss_db: loss.value(),
            power_dbm: power.value(),
        });
    }
    // recompute from the sum so the ledger identity holds exactly
    let received = launch.attenuate(total);
    Ok(BudgetReport {
        launch_oma_dbm: launch,
        launch_average_dbm: path.tx.launch.average_dbm(),
        stages,
        total_loss_db: total.value(),
        received_oma_dbm: received,
        sensitivity_dbm: path.rx.sensitivity_dbm,
        margin_db: received - path.rx.sensitivity_dbm,
    })
}

/// Receiver BER law: `Q = q_sens · 10^(γ·(P − P_sens)/10)`.
///
/// With γ = 1 Q tracks received OMA linearly (thermal-noise limited front
/// end). Larger γ gives the steeper waterfall typical of APD receivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBerModel")]
pub struct BerModel {
    pub q_at_sensitivity: QFactor,
    pub slope_exponent: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBerModel {
    #[serde(default = "default_q")]
    q_at_sensitivity: f64,
    #[serde(default = "default_slope")]
    slope_exponent: f64,
}

fn default_q() -> f64 {
    Q_AT_1E12
}

fn default_slope() -> f64 {
    1.0
}

impl TryFrom<RawBerModel> for BerModel {
    type Error = Error;
    fn try_from(raw: RawBerModel) -> Result<Self> {
        BerModel::new(raw.q_at_sensitivity, raw.slope_exponent)
    }
}

impl Default for BerModel {
    fn default() -> Self {
        BerModel {
            q_at_sensitivity: QFactor::new(Q_AT_1E12).expect("positive"),
            slope_exponent: 1.0,
        }
    }
}

impl BerModel {
    pub fn new(q_at_sensitivity: f64, slope_exponent: f64) -> Result<Self> {
        if !(q_at_sensitivity > 0.0 && q_at_sensitivity.is_finite()) {
            return Err(Error::invalid(
                "ber model",
                format!("q {q_at_sensitivity} must be > 0"),
            ));
        }
        if !(slope_exponent > 0.0 && slope_exponent.is_finite()) {
            return Err(Error::invalid(
                "ber model",
                format!("slope {slope_exponent} must be > 0"),
            ));
        }
        Ok(BerModel {
            q_at_sensitivity: QFactor::new(q_at_sensitivity)?,
            slope_exponent,
        })
    }

    pub fn q_at(&self, received: PowerDbm, rx: &ReceiverSpec) -> QFactor {
        let offset = received - rx.sensitivity_dbm;
        let q = self.q_at_sensitivity.value() * 10f64.powf(self.slope_exponent * offset / 10.0);
        QFactor::new(q.min(f64::MAX)).expect("non-negative")
    }
}

pub fn ber_at_power(received_oma: PowerDbm, rx: &ReceiverSpec, model: &BerModel) -> f64 {
    ber_from_q(model.q_at(received_oma, rx))
}

/// BER as printed in reports: anything under [`BER_REPORT_FLOOR`] is zero.
pub fn reported_ber(ber: f64) -> f64 {
    if ber < BER_REPORT_FLOOR {
        0.0
    } else {
        ber
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub attenuation_db: f64,
    pub received_dbm: f64,
    pub ber: f64,
}

/// BER versus an extra attenuator stepped from `start` to `stop` inclusive.
pub fn attenuation_sweep(
    path: &OpticalPath,
    start_db: f64,
    stop_db: f64,
    step_db: f64,
    model: &BerModel,
) -> Result<Vec<SweepRow>> {
    if !(step_db > 0.0 && step_db.is_finite()) {
        return Err(Error::invalid(
            "sweep",
            format!("step {step_db} dB must be > 0"),
        ));
    }
    if !(start_db >= 0.0 && start_db <= stop_db && stop_db.is_finite()) {
        return Err(Error::invalid(
            "sweep",
            format!("range {start_db}..{stop_db} dB must satisfy 0 <= start <= stop"),
        ));
    }
    let base = compute_budget(path)?;
    let steps = ((stop_db - start_db) / step_db + 1e-9).floor() as usize;
    Ok((0..=steps)
        .map(|i| {
            let atten = start_db + i as f64 * step_db;
            let received = base
                .received_oma_dbm
                .attenuate(LossDb::new(atten).expect("atten >= 0"));
            SweepRow {
                attenuation_db: atten,
                received_dbm: received.value(),
                ber: ber_at_power(received, &path.rx, model),
            }
        })
        .collect())
}

/// Attenuation of the first row whose BER is above `target`.
pub fn first_crossing(rows: &[SweepRow], target: f64) -> Option<f64> {
    rows.iter()
        .find(|r| r.ber > target)
        .map(|r| r.attenuation_db)
}

/// Extra excess loss of a scaled coupler relative to the base design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExcessDelta {
    #[default]
    Zero,
    /// Step function over port counts; a port count between keys takes the
    /// value of the largest key below it.
    Table(BTreeMap<u32, f64>),
    /// Fixed extra loss per doubling beyond the base.
    PerDoublingDb(f64),
}

impl ExcessDelta {
    fn validate(&self) -> Result<()> {
        match self {
            ExcessDelta::Zero => Ok(()),
            ExcessDelta::PerDoublingDb(db) if db.is_finite() && *db >= 0.0 => Ok(()),
            ExcessDelta::PerDoublingDb(db) => Err(Error::invalid(
                "excess delta",
                format!("{db} dB per doubling"),
            )),
            ExcessDelta::Table(t) => {
                let mut prev = 0.0;
                for (&ports, &db) in t {
                    if !(db.is_finite() && db >= prev) {
                        return Err(Error::invalid(
                            "excess delta",
                            format!("entry {ports} -> {db} dB must be >= 0 and non-decreasing"),
                        ));
                    }
                    prev = db;
                }
                Ok(())
            }
        }
    }

    pub fn at(&self, base_ports: u32, ports: u32) -> f64 {
        match self {
            ExcessDelta::Zero => 0.0,
            ExcessDelta::PerDoublingDb(db) => {
                db * (f64::from(ports) / f64::from(base_ports)).log2().max(0.0)
            }
            ExcessDelta::Table(t) => t.range(..=ports).next_back().map_or(0.0, |(_, &v)| v),
        }
    }
}

/// Margin extrapolation from a measured base coupler size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLedger")]
pub struct ScalingLedger {
    pub base_ports: u32,
    pub base_margin_db: f64,
    pub excess_delta: ExcessDelta,
    pub min_margin_db: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLedger {
    base_ports: u32,
    base_margin_db: f64,
    #[serde(default)]
    excess_delta: ExcessDelta,
    #[serde(default)]
    min_margin_db: f64,
}

impl TryFrom<RawLedger> for ScalingLedger {
    type Error = Error;
    fn try_from(raw: RawLedger) -> Result<Self> {
        ScalingLedger::new(
            raw.base_ports,
            raw.base_margin_db,
            raw.excess_delta,
            raw.min_margin_db,
        )
    }
}

/// Largest coupler considered by [`max_broadcast_ports`].
pub const MAX_SCALED_PORTS: u32 = 1 << 30;

impl ScalingLedger {
    pub fn new(
        base_ports: u32,
        base_margin_db: f64,
        excess_delta: ExcessDelta,
        min_margin_db: f64,
    ) -> Result<Self> {
        if !base_ports.is_power_of_two() {
            return Err(Error::invalid(
                "ledger",
                format!("base ports {base_ports} is not a power of two"),
            ));
        }
        if !base_margin_db.is_finite() || !min_margin_db.is_finite() {
            return Err(Error::invalid("ledger", "margins must be finite"));
        }
        excess_delta.validate()?;
        Ok(Self {
            base_ports,
            base_margin_db,
            excess_delta,
            min_margin_db,
        })
    }

    pub fn with_min_margin(&self, min_margin_db: f64) -> Self {
        Self {
            min_margin_db,
            ..self.clone()
        }
    }

    /// `(ports, predicted margin)` for each doubling from the base up to `max_ports`.
    pub fn doublings(&self, max_ports: u32) -> Vec<(u32, f64)> {
        let mut out = Vec::new();
        let mut n = self.base_ports;
        while n <= max_ports {
            out.push((n, predict_scaled_margin(self, n).expect("power of two")));
            match n.checked_mul(2) {
                Some(next) => n = next,
                None => break,
            }
        }
        out
    }
}

pub fn predict_scaled_margin(ledger: &ScalingLedger, ports: u32) -> Result<f64> {
    if !ports.is_power_of_two() {
        return Err(Error::invalid(
            "ports",
            format!("{ports} is not a power of two"),
        ));
    }
    if ports < ledger.base_ports {
        return Err(Error::invalid(
            "ports",
            format!("{ports} is below the base of {}", ledger.base_ports),
        ));
    }
    let extra_split = split_db(ports) - split_db(ledger.base_ports);
    Ok(ledger.base_margin_db - extra_split - ledger.excess_delta.at(ledger.base_ports, ports))
}

/// Largest power-of-two coupler whose predicted margin stays at or above
/// the ledger's minimum.
pub fn max_broadcast_ports(ledger: &ScalingLedger) -> Result<u32> {
    if ledger.base_margin_db < ledger.min_margin_db {
        return Err(Error::Infeasible {
            base_margin_db: ledger.base_margin_db,
            min_margin_db: ledger.min_margin_db,
            deficit_db: ledger.min_margin_db - ledger.base_margin_db,
        });
    }
    let mut best = ledger.base_ports;
    let mut n = ledger.base_ports;
    while n < MAX_SCALED_PORTS {
        n *= 2;
        if predict_scaled_margin(ledger, n)? >= ledger.min_margin_db {
            best = n;
        } else {
            break;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dwdm_plan::{Awg, Detector};
    use crate::power_math::{ModulationSpec, PowerMw};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn rx(sens: f64) -> ReceiverSpec {
        ReceiverSpec {
            detector: Detector::Apd,
            sensitivity_dbm: PowerDbm::new(sens).unwrap(),
            select_channels: BTreeSet::new(),
        }
    }

    fn measured(oma: f64) -> PathSource {
        PathSource {
            launch: Launch::MeasuredOma(PowerDbm::new(oma).unwrap()),
            channel: None,
            rate_gbps: None,
        }
    }

    fn path(oma: f64, elements: Vec<PassiveElement>, sens: f64) -> OpticalPath {
        OpticalPath::new(measured(oma), elements, rx(sens)).unwrap()
    }

    fn ledger(base: u32, margin: f64, delta: ExcessDelta, min: f64) -> ScalingLedger {
        ScalingLedger::new(base, margin, delta, min).unwrap()
    }

    #[test]
    fn splitting_examples() {
        assert_eq!(splitting_loss_db(1).unwrap().value(), 0.0);
        assert!((splitting_loss_db(4).unwrap().value() - 6.02).abs() < 5e-3);
        assert!((splitting_loss_db(32).unwrap().value() - 15.05).abs() < 5e-3);
        assert!(splitting_loss_db(0).is_err());
    }

    #[test]
    fn element_examples() {
        let sc = PassiveElement::star_coupler(4, 4, 1.0).unwrap();
        assert!((element_loss_db(&sc).value() - 7.02).abs() < 5e-3);
        assert_eq!(
            element_loss_db(&PassiveElement::attenuator(13.5).unwrap()).value(),
            13.5
        );
        let awg = |direction| {
            PassiveElement::new(ElementKind::Awg(Awg {
                ports: 8,
                excess_db: LossDb::new(2.5).unwrap(),
                base_channel: ItuChannel::new(30).unwrap(),
                direction,
            }))
            .unwrap()
        };
        assert_eq!(element_loss_db(&awg(AwgDirection::Demux)).value(), 2.5);
        assert!((element_loss_db(&awg(AwgDirection::Broadcast)).value() - 11.53).abs() < 5e-3);
        let fiber = PassiveElement::new(ElementKind::FiberSpan {
            length_m: 2000.0,
            atten_db_per_km: 0.25,
        })
        .unwrap();
        assert_eq!(element_loss_db(&fiber).value(), 0.5);
    }

    #[test]
    fn margin_examples() {
        let r = compute_budget(&path(-6.7, vec![], -14.5)).unwrap();
        assert!((r.margin_db - 7.8).abs() < 1e-9);
        let r = compute_budget(&path(-8.4, vec![], -26.5)).unwrap();
        assert!((r.margin_db - 18.1).abs() < 1e-9);
        let r = compute_budget(&path(-20.7, vec![], -25.5)).unwrap();
        assert!((r.margin_db - 4.8).abs() < 1e-9);
        let r = compute_budget(&path(-20.0, vec![], -10.0)).unwrap();
        assert!(!r.is_feasible());
    }

    #[test]
    fn modulated_launch_budget() {
        let src = PathSource {
            launch: Launch::Modulated(
                ModulationSpec::new(PowerMw::new(1.5).unwrap(), 16.2).unwrap(),
            ),
            channel: None,
            rate_gbps: Some(10.0),
        };
        let p = OpticalPath::new(
            src,
            vec![PassiveElement::star_coupler(4, 4, 1.0).unwrap()],
            rx(-26.5),
        )
        .unwrap();
        let r = compute_budget(&p).unwrap();
        assert!((r.launch_oma_dbm.value() - 4.5628).abs() < 1e-3);
        assert!((r.launch_average_dbm.unwrap().value() - 1.7609).abs() < 1e-3);
        assert_eq!(r.stages.len(), 1);
        assert_eq!(r.stages[0].power_dbm, r.received_oma_dbm.value());
    }

    #[test]
    fn ber_examples() {
        let m = BerModel::default();
        let sens = rx(-20.0);
        let b = ber_at_power(PowerDbm::new(-20.0).unwrap(), &sens, &m);
        assert!((b / 1e-12 - 1.0).abs() < 0.02);
        let b = ber_at_power(PowerDbm::new(-23.01).unwrap(), &sens, &m);
        assert!((m.q_at(PowerDbm::new(-23.01).unwrap(), &sens).value() - 3.517).abs() < 1e-3);
        assert!((b - 2.2e-4).abs() < 0.05e-4, "{b}");
        let hi = PowerDbm::new(-12.2).unwrap();
        assert!((m.q_at(hi, &sens).value() - 42.4).abs() < 0.05);
        assert_eq!(reported_ber(ber_at_power(hi, &sens, &m)), 0.0);
        assert!(BerModel::new(0.0, 1.0).is_err());
        assert!(BerModel::new(7.0, 0.0).is_err());
    }

    #[test]
    fn sweep_examples() {
        let m = BerModel::default();
        let p = path(-6.7, vec![], -14.5);
        let one = attenuation_sweep(&p, 3.0, 3.0, 0.5, &m).unwrap();
        assert_eq!(one.len(), 1);
        let rows = attenuation_sweep(&p, 0.0, 15.0, 0.5, &m).unwrap();
        assert_eq!(rows.len(), 31);
        let x = first_crossing(&rows, 1e-12).unwrap();
        assert!((x - 7.8).abs() <= 0.5, "{x}");
        let p = path(-8.4, vec![], -26.5);
        let rows = attenuation_sweep(&p, 0.0, 30.0, 0.5, &m).unwrap();
        let x = first_crossing(&rows, 1e-12).unwrap();
        assert!((x - 18.1).abs() <= 0.5, "{x}");
        assert!(attenuation_sweep(&p, 0.0, 1.0, 0.0, &m).is_err());
        assert!(attenuation_sweep(&p, 2.0, 1.0, 0.5, &m).is_err());
    }

    #[test]
    fn scaled_margin_examples() {
        let four = ledger(4, 18.1, ExcessDelta::Table([(32, 4.0)].into()), 3.0);
        assert!((predict_scaled_margin(&four, 32).unwrap() - 5.07).abs() < 5e-3);
        let big = ledger(32, 4.8, ExcessDelta::Zero, 3.0);
        assert!((predict_scaled_margin(&big, 64).unwrap() - 1.79).abs() < 5e-3);
        assert_eq!(predict_scaled_margin(&big, 32).unwrap(), 4.8);
        assert!(predict_scaled_margin(&big, 48).is_err());
        assert!(predict_scaled_margin(&big, 16).is_err());
    }

    #[test]
    fn max_ports_examples() {
        assert_eq!(
            max_broadcast_ports(&ledger(32, 4.8, ExcessDelta::Zero, 3.0)).unwrap(),
            32
        );
        assert_eq!(
            max_broadcast_ports(&ledger(32, 4.8, ExcessDelta::Zero, 1.5)).unwrap(),
            64
        );
        assert_eq!(
            max_broadcast_ports(&ledger(32, 4.8, ExcessDelta::Zero, 0.0)).unwrap(),
            64
        );
        let err = max_broadcast_ports(&ledger(4, 18.1, ExcessDelta::Zero, 20.0)).unwrap_err();
        match err {
            Error::Infeasible { deficit_db, .. } => assert!((deficit_db - 1.9).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
        let four = ledger(4, 18.1, ExcessDelta::Table([(32, 4.0)].into()), 3.0);
        assert_eq!(max_broadcast_ports(&four).unwrap(), 32);
    }

    #[test]
    fn ledger_validation() {
        assert!(ScalingLedger::new(3, 1.0, ExcessDelta::Zero, 0.0).is_err());
        let bad = ExcessDelta::Table([(8, 2.0), (16, 1.0)].into());
        assert!(ScalingLedger::new(4, 1.0, bad, 0.0).is_err());
        assert!(ScalingLedger::new(4, 1.0, ExcessDelta::PerDoublingDb(-1.0), 0.0).is_err());
        let json = r#"{"base_ports":4,"base_margin_db":18.1,"excess_delta":{"table":{"32":4.0}}}"#;
        let l: ScalingLedger = serde_json::from_str(json).unwrap();
        assert_eq!(l.excess_delta.at(4, 64), 4.0);
        assert_eq!(l.excess_delta.at(4, 16), 0.0);
    }

    #[test]
    fn path_channel_must_be_selected() {
        let src = PathSource {
            channel: Some(ItuChannel::new(30).unwrap()),
            ..measured(-5.0)
        };
        let mut r = rx(-20.0);
        r.select_channels.insert(ItuChannel::new(31).unwrap());
        assert!(OpticalPath::new(src, vec![], r).is_err());
    }

    fn loss_element() -> impl Strategy<Value = PassiveElement> {
        prop_oneof![
            (0.0f64..5.0).prop_map(|d| PassiveElement::connector(d).unwrap()),
            (0.0f64..20.0).prop_map(|d| PassiveElement::attenuator(d).unwrap()),
            (0u32..7, 0.0f64..3.0).prop_map(|(k, x)| PassiveElement::star_coupler(
                1 << k,
                1 << k,
                x
            )
            .unwrap()),
            (0.0f64..5000.0, 0.0f64..3.5).prop_map(|(l, a)| PassiveElement::new(
                ElementKind::FiberSpan {
                    length_m: l,
                    atten_db_per_km: a
                }
            )
            .unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn ledger_additivity(oma in -20.0f64..10.0, els in proptest::collection::vec(loss_element(), 0..8)) {
            let p = path(oma, els.clone(), -25.0);
            let r = compute_budget(&p).unwrap();
            let sum: f64 = els.iter().map(|e| element_loss_db(e).value()).sum();
            prop_assert!((r.received_oma_dbm.value() - (oma - sum)).abs() < 1e-9);
            prop_assert!((r.margin_db - (r.received_oma_dbm.value() + 25.0)).abs() < 1e-12);
        }

        #[test]
        fn permutation_invariance(els in proptest::collection::vec(loss_element(), 1..8), seed in any::<u64>()) {
            let mut shuffled = els.clone();
            // deterministic Fisher-Yates from the seed
            let mut s = seed;
            for i in (1..shuffled.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (s >> 33) as usize % (i + 1);
                shuffled.swap(i, j);
            }
            let a = compute_budget(&path(0.0, els, -20.0)).unwrap();
            let b = compute_budget(&path(0.0, shuffled, -20.0)).unwrap();
            prop_assert!((a.margin_db - b.margin_db).abs() < 1e-9);
        }

        #[test]
        fn doubling_adds_3db(n in 1u32..=1024) {
            let d = splitting_loss_db(2 * n).unwrap().value() - splitting_loss_db(n).unwrap().value();
            prop_assert!((d - 3.010_299_956_639_812).abs() < 1e-9);
        }

        #[test]
        fn sweep_monotone(oma in -15.0f64..0.0, sens in -30.0f64..-10.0, gamma in 0.5f64..3.0) {
            let m = BerModel::new(Q_AT_1E12, gamma).unwrap();
            let rows = attenuation_sweep(&path(oma, vec![], sens), 0.0, 30.0, 0.25, &m).unwrap();
            for w in rows.windows(2) {
                prop_assert!(w[1].received_dbm < w[0].received_dbm);
                prop_assert!(w[1].ber >= w[0].ber);
            }
        }

        #[test]
        fn crossing_matches_margin(oma in -15.0f64..0.0, sens in -30.0f64..-16.0, step in 0.05f64..1.0) {
            let p = path(oma, vec![], sens);
            let margin = compute_budget(&p).unwrap().margin_db;
            prop_assume!(margin > step);
            let rows = attenuation_sweep(&p, 0.0, margin + 5.0, step, &BerModel::default()).unwrap();
            let x = first_crossing(&rows, 1e-12).unwrap();
            prop_assert!((x - margin).abs() <= step + 1e-9);
        }

        #[test]
        fn apd_adds_seven_db(oma in -20.0f64..5.0, sens in -30.0f64..-5.0) {
            let mut pin = rx(sens);
            pin.detector = Detector::Pin;
            let p = OpticalPath::new(measured(oma), vec![], pin.clone()).unwrap();
            let q = OpticalPath::new(measured(oma), vec![], pin.with_apd()).unwrap();
            let d = compute_budget(&q).unwrap().margin_db - compute_budget(&p).unwrap().margin_db;
            prop_assert!((d - 7.0).abs() < 1e-9);
        }

        #[test]
        fn predicted_margin_non_increasing(k in 0u32..12, base_k in 0u32..4, per in 0.0f64..3.0) {
            let l = ledger(1 << base_k, 20.0, ExcessDelta::PerDoublingDb(per), 0.0);
            let n = (1u32 << base_k) << k;
            let a = predict_scaled_margin(&l, n).unwrap();
            let b = predict_scaled_margin(&l, n * 2).unwrap();
            prop_assert!(b <= a);
        }
    }
}
