//! ITU-grid channel math and broadcast-and-select network plans.
//!
//! A [`BroadcastNetwork`] is a set of nodes whose transmitters all feed one
//! star coupler. The coupler hands every input wavelength to every output,
//! and each receiver picks its channels with a wavelength filter (an AWG or
//! a tunable filter). A plan is valid when no two transmitters share a
//! channel.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::power_math::{
    dbm_to_mw, mw_to_dbm, oma_from_modulation, LossDb, ModulationSpec, PowerDbm,
};

pub const GRID_BASE_THZ: f64 = 190.0;
pub const GRID_SPACING_THZ: f64 = 0.1;
const SPEED_OF_LIGHT_M_PER_S: f64 = 299_792_458.0;

/// Sensitivity gained by swapping a PIN front end for an APD.
pub const APD_ADVANTAGE_DB: f64 = 7.0;

/// Channel `n` on the 100 GHz grid anchored at 190.0 THz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub struct ItuChannel(i32);

impl ItuChannel {
    pub fn new(index: i32) -> Result<Self> {
        if GRID_BASE_THZ + GRID_SPACING_THZ * f64::from(index) <= 0.0 {
            return Err(Error::invalid("channel", format!("{index} is below 0 THz")));
        }
        Ok(Self(index))
    }

    pub fn index(self) -> i32 {
        self.0
    }

    pub fn frequency_thz(self) -> f64 {
        channel_frequency_thz(self)
    }

    pub fn wavelength_nm(self) -> f64 {
        channel_wavelength_nm(self)
    }
}

impl TryFrom<i32> for ItuChannel {
    type Error = Error;
    fn try_from(v: i32) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ItuChannel> for i32 {
    fn from(c: ItuChannel) -> i32 {
        c.0
    }
}

impl fmt::Display for ItuChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn channel_frequency_thz(c: ItuChannel) -> f64 {
    GRID_BASE_THZ + GRID_SPACING_THZ * f64::from(c.0)
}

pub fn channel_wavelength_nm(c: ItuChannel) -> f64 {
    SPEED_OF_LIGHT_M_PER_S / (channel_frequency_thz(c) * 1e12) * 1e9
}

/// Contiguous channel range, inclusive on both ends.
pub fn channel_range(first: i32, last: i32) -> Result<BTreeSet<ItuChannel>> {
    (first..=last).map(ItuChannel::new).collect()
}

/// Grid channels whose wavelength lies in `[lo_nm, hi_nm]`.
pub fn channels_in_band(lo_nm: f64, hi_nm: f64) -> Result<BTreeSet<ItuChannel>> {
    if !(lo_nm > 0.0 && lo_nm <= hi_nm && hi_nm.is_finite()) {
        return Err(Error::invalid("band", format!("[{lo_nm}, {hi_nm}] nm")));
    }
    let to_index = |nm: f64| {
        let thz = SPEED_OF_LIGHT_M_PER_S / (nm * 1e-9) / 1e12;
        (thz - GRID_BASE_THZ) / GRID_SPACING_THZ
    };
    // one channel of slack on each side, then filter on the exact wavelength
    let first = to_index(hi_nm).floor() as i32 - 1;
    let last = to_index(lo_nm).ceil() as i32 + 1;
    Ok((first..=last)
        .filter_map(|i| ItuChannel::new(i).ok())
        .filter(|c| {
            let nm = c.wavelength_nm();
            nm >= lo_nm && nm <= hi_nm
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tuning {
    Fixed(ItuChannel),
    Tunable(BTreeSet<ItuChannel>),
}

impl Tuning {
    pub fn allows(&self, c: ItuChannel) -> bool {
        match self {
            Tuning::Fixed(f) => *f == c,
            Tuning::Tunable(set) => set.contains(&c),
        }
    }

    pub fn is_tunable(&self) -> bool {
        matches!(self, Tuning::Tunable(_))
    }
}

/// Launch condition at the transmitter output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Launch {
    Modulated(ModulationSpec),
    /// OMA measured directly, e.g. at a breakout before the receiver.
    #[serde(rename = "measured_oma_dbm")]
    MeasuredOma(PowerDbm),
}

impl Launch {
    pub fn oma_dbm(&self) -> Result<PowerDbm> {
        match self {
            Launch::Modulated(m) => mw_to_dbm(oma_from_modulation(m)),
            Launch::MeasuredOma(p) => Ok(*p),
        }
    }

    /// Average launch power, when known.
    pub fn average_dbm(&self) -> Option<PowerDbm> {
        match self {
            Launch::Modulated(m) => mw_to_dbm(m.average_power).ok(),
            Launch::MeasuredOma(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTransmitter")]
pub struct TransmitterSpec {
    pub tuning: Tuning,
    pub current: ItuChannel,
    pub launch: Launch,
    pub rate_gbps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub electrical_power_mw: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransmitter {
    tuning: Tuning,
    #[serde(default)]
    current: Option<ItuChannel>,
    launch: Launch,
    rate_gbps: f64,
    #[serde(default)]
    electrical_power_mw: Option<f64>,
}

impl TryFrom<RawTransmitter> for TransmitterSpec {
    type Error = Error;
    fn try_from(raw: RawTransmitter) -> Result<Self> {
        let current = match (&raw.tuning, raw.current) {
            (_, Some(c)) => c,
            (Tuning::Fixed(c), None) => *c,
            (Tuning::Tunable(_), None) => {
                return Err(Error::invalid(
                    "transmitter",
                    "tunable transmitter needs 'current'",
                ))
            }
        };
        TransmitterSpec::new(raw.tuning, current, raw.launch, raw.rate_gbps)
            .map(|t| t.with_electrical_power(raw.electrical_power_mw))?
    }
}

impl TransmitterSpec {
    pub fn new(
        tuning: Tuning,
        current: ItuChannel,
        launch: Launch,
        rate_gbps: f64,
    ) -> Result<Self> {
        if !tuning.allows(current) {
            return Err(Error::invalid(
                "transmitter",
                format!("channel {current} is outside its tuning range"),
            ));
        }
        if let Tuning::Tunable(set) = &tuning {
            if set.is_empty() {
                return Err(Error::invalid("transmitter", "empty tuning set"));
            }
        }
        if !(rate_gbps.is_finite() && rate_gbps > 0.0) {
            return Err(Error::invalid(
                "transmitter",
                format!("rate {rate_gbps} Gbps"),
            ));
        }
        Ok(Self {
            tuning,
            current,
            launch,
            rate_gbps,
            electrical_power_mw: None,
        })
    }

    pub fn fixed(channel: ItuChannel, launch: Launch, rate_gbps: f64) -> Result<Self> {
        Self::new(Tuning::Fixed(channel), channel, launch, rate_gbps)
    }

    fn with_electrical_power(mut self, mw: Option<f64>) -> Result<Self> {
        if let Some(p) = mw {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::invalid(
                    "transmitter",
                    format!("electrical power {p} mW"),
                ));
            }
        }
        self.electrical_power_mw = mw;
        Ok(self)
    }

    /// Same transmitter on another channel of its tuning range.
    pub fn retuned(&self, channel: ItuChannel) -> Result<Self> {
        if !self.tuning.allows(channel) {
            return Err(Error::invalid(
                "retune",
                format!("channel {channel} is outside the tuning range"),
            ));
        }
        Ok(Self {
            current: channel,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    Apd,
    Pin,
}

/// Photoreceiver: detector type, OMA sensitivity at BER 1e-12, and the
/// channels its wavelength filter passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverSpec {
    pub detector: Detector,
    pub sensitivity_dbm: PowerDbm,
    #[serde(default)]
    pub select_channels: BTreeSet<ItuChannel>,
}

impl ReceiverSpec {
    /// The APD variant of a PIN receiver; APD receivers come back unchanged.
    pub fn with_apd(&self) -> Self {
        match self.detector {
            Detector::Apd => self.clone(),
            Detector::Pin => ReceiverSpec {
                detector: Detector::Apd,
                sensitivity_dbm: PowerDbm::new(self.sensitivity_dbm.value() - APD_ADVANTAGE_DB)
                    .expect("finite"),
                select_channels: self.select_channels.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AwgDirection {
    /// Channel in on the common port, out on its own port.
    Demux,
    /// Light entering an output port spreads over all input ports.
    Broadcast,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarCoupler {
    pub in_ports: u32,
    pub out_ports: u32,
    #[serde(default)]
    pub excess_db: LossDb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Awg {
    pub ports: u32,
    #[serde(default)]
    pub excess_db: LossDb,
    pub base_channel: ItuChannel,
    pub direction: AwgDirection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ElementKind {
    StarCoupler(StarCoupler),
    Awg(Awg),
    Connector { loss_db: LossDb },
    Attenuator { loss_db: LossDb },
    FiberSpan { length_m: f64, atten_db_per_km: f64 },
}

/// A passive element in an optical path, optionally labeled for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawElement")]
pub struct PassiveElement {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub kind: ElementKind,
}

#[derive(Deserialize)]
struct RawElement {
    #[serde(default)]
    label: Option<String>,
    #[serde(flatten)]
    kind: ElementKind,
}

impl TryFrom<RawElement> for PassiveElement {
    type Error = Error;
    fn try_from(raw: RawElement) -> Result<Self> {
        let e = PassiveElement {
            label: raw.label,
            kind: raw.kind,
        };
        e.validate()?;
        Ok(e)
    }
}

impl PassiveElement {
    pub fn new(kind: ElementKind) -> Result<Self> {
        let e = PassiveElement { label: None, kind };
        e.validate()?;
        Ok(e)
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn attenuator(db: f64) -> Result<Self> {
        Self::new(ElementKind::Attenuator {
            loss_db: LossDb::new(db)?,
        })
    }

    pub fn connector(db: f64) -> Result<Self> {
        Self::new(ElementKind::Connector {
            loss_db: LossDb::new(db)?,
        })
    }

    pub fn star_coupler(in_ports: u32, out_ports: u32, excess_db: f64) -> Result<Self> {
        Self::new(ElementKind::StarCoupler(StarCoupler {
            in_ports,
            out_ports,
            excess_db: LossDb::new(excess_db)?,
        }))
    }

    fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::invalid("element", reason));
        match &self.kind {
            ElementKind::StarCoupler(s) if s.in_ports == 0 || s.out_ports == 0 => bad(format!(
                "star coupler {}x{} needs ports",
                s.in_ports, s.out_ports
            )),
            ElementKind::Awg(a) if a.ports == 0 => bad("AWG needs at least one port".into()),
            ElementKind::FiberSpan {
                length_m,
                atten_db_per_km,
            } if !(*length_m >= 0.0 && *atten_db_per_km >= 0.0)
                || !length_m.is_finite()
                || !atten_db_per_km.is_finite() =>
            {
                bad(format!(
                    "fiber span {length_m} m at {atten_db_per_km} dB/km"
                ))
            }
            _ => Ok(()),
        }
    }

    /// Label for report ledgers; falls back to a description of the kind.
    pub fn display_name(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        match &self.kind {
            ElementKind::StarCoupler(s) => format!("star-coupler {}x{}", s.in_ports, s.out_ports),
            ElementKind::Awg(a) => format!(
                "awg {}-port {}",
                a.ports,
                match a.direction {
                    AwgDirection::Demux => "demux",
                    AwgDirection::Broadcast => "broadcast",
                }
            ),
            ElementKind::Connector { .. } => "connector".into(),
            ElementKind::Attenuator { .. } => "attenuator".into(),
            ElementKind::FiberSpan { length_m, .. } => format!("fiber {length_m} m"),
        }
    }
}

/// Output port of a cyclic AWG for a channel: `(n − base) mod ports`.
pub fn awg_route(c: ItuChannel, awg: &Awg) -> usize {
    (c.0 - awg.base_channel.0).rem_euclid(awg.ports as i32) as usize
}

/// Channel in the AWG's first free spectral range that exits `port`.
pub fn awg_port_channel(port: usize, awg: &Awg) -> Result<ItuChannel> {
    if port >= awg.ports as usize {
        return Err(Error::invalid(
            "awg port",
            format!("{port} of {}", awg.ports),
        ));
    }
    ItuChannel::new(awg.base_channel.0 + port as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverPort {
    #[serde(flatten)]
    pub spec: ReceiverSpec,
    /// Filter elements between the coupler output and this receiver.
    #[serde(default)]
    pub filter: Vec<PassiveElement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkNode {
    pub name: String,
    #[serde(default)]
    pub transmitters: Vec<TransmitterSpec>,
    #[serde(default)]
    pub receivers: Vec<ReceiverPort>,
    /// Elements combining this node's transmitters onto its coupler fiber.
    #[serde(default)]
    pub mux: Vec<PassiveElement>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TransmitterRef {
    pub node: String,
    pub tx: usize,
}

impl fmt::Display for TransmitterRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:tx{}", self.node, self.tx)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ReceiverRef {
    pub node: String,
    pub rx: usize,
}

impl fmt::Display for ReceiverRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:rx{}", self.node, self.rx)
    }
}

/// Nodes around one star coupler, plus the shared fiber/connector losses
/// on the way in (`uplink`) and out (`downlink`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork")]
pub struct BroadcastNetwork {
    nodes: Vec<NetworkNode>,
    coupler: StarCoupler,
    uplink: Vec<PassiveElement>,
    downlink: Vec<PassiveElement>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    #[serde(default)]
    nodes: Vec<NetworkNode>,
    coupler: StarCoupler,
    #[serde(default)]
    uplink: Vec<PassiveElement>,
    #[serde(default)]
    downlink: Vec<PassiveElement>,
}

impl TryFrom<RawNetwork> for BroadcastNetwork {
    type Error = Error;
    fn try_from(raw: RawNetwork) -> Result<Self> {
        BroadcastNetwork::new(raw.nodes, raw.coupler, raw.uplink, raw.downlink)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Collision {
    pub channel: ItuChannel,
    pub transmitters: Vec<TransmitterRef>,
}

impl BroadcastNetwork {
    pub fn new(
        nodes: Vec<NetworkNode>,
        coupler: StarCoupler,
        uplink: Vec<PassiveElement>,
        downlink: Vec<PassiveElement>,
    ) -> Result<Self> {
        if coupler.in_ports == 0 || coupler.out_ports == 0 {
            return Err(Error::invalid("network", "coupler needs ports"));
        }
        let mut names = HashSet::new();
        for n in &nodes {
            if n.name.is_empty() {
                return Err(Error::invalid("network", "node with empty name"));
            }
            if !names.insert(n.name.as_str()) {
                return Err(Error::invalid(
                    "network",
                    format!("duplicate node '{}'", n.name),
                ));
            }
        }
        let feeding = nodes.iter().filter(|n| !n.transmitters.is_empty()).count();
        let fed = nodes.iter().filter(|n| !n.receivers.is_empty()).count();
        if feeding > coupler.in_ports as usize {
            return Err(Error::invalid(
                "network",
                format!(
                    "{feeding} transmitting nodes exceed {} coupler inputs",
                    coupler.in_ports
                ),
            ));
        }
        if fed > coupler.out_ports as usize {
            return Err(Error::invalid(
                "network",
                format!(
                    "{fed} receiving nodes exceed {} coupler outputs",
                    coupler.out_ports
                ),
            ));
        }
        Ok(Self {
            nodes,
            coupler,
            uplink,
            downlink,
        })
    }

    pub fn nodes(&self) -> &[NetworkNode] {
        &self.nodes
    }

    pub fn coupler(&self) -> &StarCoupler {
        &self.coupler
    }

    pub fn uplink(&self) -> &[PassiveElement] {
        &self.uplink
    }

    pub fn downlink(&self) -> &[PassiveElement] {
        &self.downlink
    }

    pub fn node(&self, name: &str) -> Result<&NetworkNode> {
        self.nodes
            .iter()
            .find(|n| n.name == name)
            .ok_or_else(|| Error::Unknown {
                kind: "node",
                name: name.to_owned(),
            })
    }

    pub fn transmitter(&self, r: &TransmitterRef) -> Result<&TransmitterSpec> {
        self.node(&r.node)?
            .transmitters
            .get(r.tx)
            .ok_or_else(|| Error::Unknown {
                kind: "transmitter",
                name: r.to_string(),
            })
    }

    pub fn receiver(&self, r: &ReceiverRef) -> Result<&ReceiverPort> {
        self.node(&r.node)?
            .receivers
            .get(r.rx)
            .ok_or_else(|| Error::Unknown {
                kind: "receiver",
                name: r.to_string(),
            })
    }

    pub fn transmitters(&self) -> impl Iterator<Item = (TransmitterRef, &TransmitterSpec)> + '_ {
        self.nodes.iter().flat_map(|n| {
            n.transmitters.iter().enumerate().map(move |(i, t)| {
                (
                    TransmitterRef {
                        node: n.name.clone(),
                        tx: i,
                    },
                    t,
                )
            })
        })
    }

    pub fn receivers(&self) -> impl Iterator<Item = (ReceiverRef, &ReceiverPort)> + '_ {
        self.nodes.iter().flat_map(|n| {
            n.receivers.iter().enumerate().map(move |(i, r)| {
                (
                    ReceiverRef {
                        node: n.name.clone(),
                        rx: i,
                    },
                    r,
                )
            })
        })
    }

    /// A new network with one transmitter moved to another channel.
    pub fn retune(&self, r: &TransmitterRef, channel: ItuChannel) -> Result<Self> {
        let retuned = self.transmitter(r)?.retuned(channel)?;
        let mut next = self.clone();
        let node = next
            .nodes
            .iter_mut()
            .find(|n| n.name == r.node)
            .expect("checked above");
        node.transmitters[r.tx] = retuned;
        Ok(next)
    }
}

pub fn active_channel_assignments(
    net: &BroadcastNetwork,
) -> BTreeMap<ItuChannel, Vec<TransmitterRef>> {
    let mut out: BTreeMap<ItuChannel, Vec<TransmitterRef>> = BTreeMap::new();
    for (r, t) in net.transmitters() {
        out.entry(t.current).or_default().push(r);
    }
    out
}

pub fn detect_collisions(net: &BroadcastNetwork) -> Vec<Collision> {
    active_channel_assignments(net)
        .into_iter()
        .filter(|(_, txs)| txs.len() > 1)
        .map(|(channel, transmitters)| Collision {
            channel,
            transmitters,
        })
        .collect()
}

/// Channels of `range` not held by any transmitter other than `querying`.
pub fn free_channels(
    net: &BroadcastNetwork,
    range: &BTreeSet<ItuChannel>,
    querying: Option<&TransmitterRef>,
) -> BTreeSet<ItuChannel> {
    let used: BTreeSet<ItuChannel> = net
        .transmitters()
        .filter(|(r, _)| Some(r) != querying)
        .map(|(_, t)| t.current)
        .collect();
    range.difference(&used).copied().collect()
}

/// Channel set on each coupler input, one entry per transmitting node.
pub fn coupler_input_channels(net: &BroadcastNetwork) -> Vec<BTreeSet<ItuChannel>> {
    net.nodes
        .iter()
        .filter(|n| !n.transmitters.is_empty())
        .map(|n| n.transmitters.iter().map(|t| t.current).collect())
        .collect()
}

/// Channel set on each coupler output. The coupler broadcasts, so every
/// output carries the union of all inputs.
pub fn coupler_output_channels(net: &BroadcastNetwork) -> Vec<BTreeSet<ItuChannel>> {
    let all: BTreeSet<ItuChannel> = coupler_input_channels(net).into_iter().flatten().collect();
    vec![all; net.coupler.out_ports as usize]
}

/// Which transmitters each receiver hears.
///
/// Fails on the first collision: a shared channel makes that channel
/// unusable for everyone in the broadcast domain.
pub fn reachability(
    net: &BroadcastNetwork,
) -> Result<BTreeMap<ReceiverRef, BTreeSet<TransmitterRef>>> {
    if let Some(c) = detect_collisions(net).into_iter().next() {
        return Err(Error::Collision {
            channel: c.channel.index(),
            transmitters: c
                .transmitters
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(", "),
        });
    }
    let on_air = active_channel_assignments(net);
    Ok(net
        .receivers()
        .map(|(r, port)| {
            let heard = port
                .spec
                .select_channels
                .iter()
                .filter_map(|c| on_air.get(c))
                .flatten()
                .cloned()
                .collect();
            (r, heard)
        })
        .collect())
}

/// [`reachability`] collapsed to node names.
pub fn heard_nodes(net: &BroadcastNetwork) -> Result<BTreeMap<ReceiverRef, BTreeSet<String>>> {
    Ok(reachability(net)?
        .into_iter()
        .map(|(r, txs)| (r, txs.into_iter().map(|t| t.node).collect()))
        .collect())
}

/// Total launch OMA into the coupler inputs, for a quick power sanity check.
pub fn total_launch_mw(net: &BroadcastNetwork) -> Result<f64> {
    net.transmitters()
        .map(|(_, t)| t.launch.oma_dbm().map(|p| dbm_to_mw(p).value()))
        .sum()
}
