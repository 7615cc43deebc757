//! One function per subcommand. Each builds a [`Report`]; the caller adds
//! the command echo and decides where the output goes.

use std::collections::BTreeSet;

use optofabric::dwdm_plan::{
    active_channel_assignments, detect_collisions, free_channels, reachability, Detector,
    ItuChannel, Tuning, APD_ADVANTAGE_DB,
};
use optofabric::link_budget::{
    attenuation_sweep, compute_budget, first_crossing, max_broadcast_ports, splitting_loss_db,
    MAX_SCALED_PORTS,
};
use optofabric::media::{crossover_table, max_reach_cm};
use optofabric::metrics::{
    comparison_table, cost_crossover_zone, density_ratio, density_table, energy_scaling_row,
};
use optofabric::topology::length_histogram;

use crate::error::{CliError, CliResult, ExitKind};
use crate::input::{Catalog, Loaded, NetworkPlanFile, Reference, SystemConfig};
use crate::report::{ber, db, fixed, flag, key, num, provenance, Computed, Report, Table};

/// Target BER for crossings and sensitivity.
pub const TARGET_BER: f64 = 1e-12;

/// A report plus an error to exit with after the report is written.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub failure: Option<CliError>,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Outcome {
            report,
            failure: None,
        }
    }
}

fn rate_item(rate: f64) -> String {
    format!("{} Gbps", num(rate, 4))
}

/// `30-37`, `30 32-34`, ...
fn compact(channels: &BTreeSet<ItuChannel>) -> String {
    let mut parts: Vec<String> = Vec::new();
    let mut iter = channels.iter().map(|c| c.index()).peekable();
    while let Some(start) = iter.next() {
        let mut end = start;
        while iter.peek() == Some(&(end + 1)) {
            end = iter.next().expect("peeked");
        }
        parts.push(if end == start {
            start.to_string()
        } else {
            format!("{start}-{end}")
        });
    }
    parts.join(" ")
}

fn joined<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn topology(input: &Loaded<SystemConfig>) -> CliResult<Outcome> {
    let cfg = &input.doc;
    let grid = cfg.grid;
    let limit = cfg.bd_limit()?;
    let catalog = cfg.catalog();
    let hist = length_histogram(&grid);
    let mut report = Report::new(String::new(), input.digest.clone());
    let mut computed = Computed::new();

    if hist.is_empty() {
        report.warnings.push(format!(
            "{}x{} grid has a single node; no links, empty histogram",
            grid.rows(),
            grid.cols()
        ));
    }

    let mut summary = Table::new("summary", &["quantity", "value"]);
    let max_len = hist.max_length_cm().unwrap_or(0.0);
    let at_max = hist.bins().last().map_or(0, |(_, n)| n);
    for (q, v) in [
        ("nodes", num(grid.node_count() as f64, 0)),
        ("links", hist.total().to_string()),
        ("pitch_cm", num(grid.pitch_cm(), 4)),
        ("max_length_cm", num(max_len, 4)),
        ("links_at_max_length", at_max.to_string()),
        ("electrical_bd_limit_gbps_cm", num(limit, 4)),
    ] {
        summary.push(vec![q.into(), v]);
    }
    computed.insert(key("grid", "links"), hist.total() as f64);
    computed.insert(key("grid", "max_length_cm"), max_len);
    computed.insert(key("grid", "links_at_max_length"), at_max as f64);

    let mut h = Table::new("length_histogram", &["length_cm", "count"]);
    for (len, n) in hist.bins() {
        h.push(vec![num(len, 4), n.to_string()]);
    }
    report.tables.push(h);
    report.tables.push(summary);

    let mut split = Table::new(
        "crossover",
        &[
            "rate_gbps",
            "critical_length_cm",
            "electrical_links",
            "optical_links",
            "optical_percent",
        ],
    );
    for c in crossover_table(&grid, &cfg.rates_gbps, limit)? {
        split.push(vec![
            num(c.rate_gbps, 4),
            num(limit / c.rate_gbps, 4),
            c.electrical_count.to_string(),
            c.optical_count.to_string(),
            fixed(100.0 * c.optical_fraction, 2),
        ]);
        let item = rate_item(c.rate_gbps);
        computed.insert(key(item.as_str(), "optical_links"), c.optical_count as f64);
        computed.insert(key(item, "optical_fraction"), c.optical_fraction);
    }
    report.tables.push(split);

    let mut reach = Table::new(
        "media_reach",
        &["medium", "class", "bd_gbps_cm", "rate_gbps", "max_reach_cm"],
    );
    for m in catalog.entries() {
        for &r in &cfg.rates_gbps {
            reach.push(vec![
                m.name.clone(),
                m.class.label().to_owned(),
                num(m.bd_gbps_cm, 4),
                num(r, 4),
                num(max_reach_cm(m, r), 4),
            ]);
        }
    }
    report.tables.push(reach);

    let prov = provenance(&computed, &cfg.references, &mut report.notes);
    report.tables.push(prov);
    Ok(report.into())
}

pub fn plan(input: &Loaded<NetworkPlanFile>) -> CliResult<Outcome> {
    let net = &input.doc.network;
    let mut report = Report::new(String::new(), input.digest.clone());
    let mut computed = Computed::new();

    let mut channels = Table::new(
        "channels",
        &["channel", "frequency_thz", "wavelength_nm", "transmitters"],
    );
    for (c, txs) in active_channel_assignments(net) {
        channels.push(vec![
            c.to_string(),
            fixed(c.frequency_thz(), 1),
            fixed(c.wavelength_nm(), 2),
            joined(&txs),
        ]);
    }
    report.tables.push(channels);

    let mut mentioned: BTreeSet<ItuChannel> = BTreeSet::new();
    let mut txs = Table::new(
        "transmitters",
        &[
            "transmitter",
            "tuning",
            "current",
            "wavelength_nm",
            "free_channels",
        ],
    );
    for (r, t) in net.transmitters() {
        let (tuning, free) = match &t.tuning {
            Tuning::Fixed(_) => ("fixed".to_owned(), String::new()),
            Tuning::Tunable(set) => {
                mentioned.extend(set.iter().copied());
                (
                    format!("tunable {}", compact(set)),
                    compact(&free_channels(net, set, Some(&r))),
                )
            }
        };
        mentioned.insert(t.current);
        txs.push(vec![
            r.to_string(),
            tuning,
            t.current.to_string(),
            fixed(t.current.wavelength_nm(), 2),
            free,
        ]);
    }
    report.tables.push(txs);

    let collisions = detect_collisions(net);
    let mut col = Table::new("collisions", &["channel", "transmitters"]);
    for c in &collisions {
        col.push(vec![c.channel.to_string(), joined(&c.transmitters)]);
    }
    report.tables.push(col);

    let mut reach = Table::new(
        "reachability",
        &["receiver", "selects", "transmitters", "nodes"],
    );
    let failure = if collisions.is_empty() {
        // validates the plan; listing follows the receiver's channel order
        reachability(net)?;
        let on_air = active_channel_assignments(net);
        for (r, port) in net.receivers() {
            mentioned.extend(port.spec.select_channels.iter().copied());
            let from: Vec<_> = port
                .spec
                .select_channels
                .iter()
                .filter_map(|c| on_air.get(c))
                .flatten()
                .collect();
            let mut nodes: Vec<&str> = Vec::new();
            for t in &from {
                if !nodes.contains(&t.node.as_str()) {
                    nodes.push(&t.node);
                }
            }
            reach.push(vec![
                r.to_string(),
                compact(&port.spec.select_channels),
                joined(&from),
                nodes.join(" "),
            ]);
        }
        None
    } else {
        report
            .notes
            .push("reachability not evaluated: colliding channels are unusable".into());
        let msg = collisions
            .iter()
            .map(|c| {
                format!(
                    "collision on channel {} between {}",
                    c.channel,
                    joined(&c.transmitters)
                )
            })
            .collect::<Vec<_>>()
            .join("; ");
        Some(CliError::new(ExitKind::Collision, msg))
    };
    report.tables.push(reach);

    for c in mentioned {
        computed.insert(
            key(format!("channel {c}"), "wavelength_nm"),
            c.wavelength_nm(),
        );
    }
    let prov = provenance(&computed, &input.doc.references, &mut report.notes);
    report.tables.push(prov);
    Ok(Outcome { report, failure })
}

pub fn budget(input: &Loaded<NetworkPlanFile>, path: Option<&str>) -> CliResult<Outcome> {
    let doc = &input.doc;
    let names: Vec<&str> = match path {
        Some(p) => vec![p],
        None if doc.paths.is_empty() => return Err(CliError::input("plan defines no paths")),
        None => doc.path_names(),
    };
    let mut report = Report::new(String::new(), input.digest.clone());
    let mut computed = Computed::new();
    let mut margins = Table::new(
        "margins",
        &[
            "path",
            "launch_oma_dbm",
            "launch_average_dbm",
            "total_loss_db",
            "received_oma_dbm",
            "detector",
            "sensitivity_dbm",
            "margin_db",
            "apd_margin_db",
        ],
    );
    let mut stage_tables = Vec::new();
    for name in names {
        let p = doc.resolve_path(name)?;
        let b =
            compute_budget(&p).map_err(|e| CliError::from(e).context(format!("path '{name}'")))?;
        let mut stages = Table::new(
            &format!("stages_{name}"),
            &["stage", "loss_db", "power_dbm"],
        );
        stages.push(vec![
            "launch (oma)".into(),
            db(0.0),
            db(b.launch_oma_dbm.value()),
        ]);
        for s in &b.stages {
            stages.push(vec![s.name.clone(), db(s.loss_db), db(s.power_dbm)]);
        }
        stage_tables.push(stages);

        let apd = match p.rx.detector {
            Detector::Pin => b.margin_db + APD_ADVANTAGE_DB,
            Detector::Apd => b.margin_db,
        };
        margins.push(vec![
            name.to_owned(),
            db(b.launch_oma_dbm.value()),
            b.launch_average_dbm
                .map_or_else(String::new, |p| db(p.value())),
            db(b.total_loss_db),
            db(b.received_oma_dbm.value()),
            match p.rx.detector {
                Detector::Pin => "pin".into(),
                Detector::Apd => "apd".into(),
            },
            db(b.sensitivity_dbm.value()),
            db(b.margin_db),
            db(apd),
        ]);
        if !b.is_feasible() {
            report.warnings.push(format!(
                "path '{name}' misses receiver sensitivity by {} dB",
                db(-b.margin_db)
            ));
        }
        computed.insert(key(name, "margin_db"), b.margin_db);
        computed.insert(key(name, "received_oma_dbm"), b.received_oma_dbm.value());
        computed.insert(key(name, "total_loss_db"), b.total_loss_db);
        computed.insert(key(name, "launch_oma_dbm"), b.launch_oma_dbm.value());
    }
    if path.is_some() {
        report.tables.extend(stage_tables);
        report.tables.push(margins);
    } else {
        report.tables.push(margins);
        report.tables.extend(stage_tables);
    }
    let prov = provenance(&computed, &doc.references, &mut report.notes);
    report.tables.push(prov);
    Ok(report.into())
}

/// Attenuation range `start:stop:step` in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttenRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl std::str::FromStr for AttenRange {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(format!("expected start:stop:step, got '{s}'"));
        };
        let f = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("'{t}' is not a number"))
        };
        Ok(AttenRange {
            start: f(a)?,
            stop: f(b)?,
            step: f(c)?,
        })
    }
}

impl std::fmt::Display for AttenRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

pub fn sweep(input: &Loaded<NetworkPlanFile>, path: &str, range: AttenRange) -> CliResult<Outcome> {
    let doc = &input.doc;
    let p = doc.resolve_path(path)?;
    let rows = attenuation_sweep(&p, range.start, range.stop, range.step, &doc.ber_model)?;
    let margin = compute_budget(&p)?.margin_db;
    let mut report = Report::new(String::new(), input.digest.clone());
    let mut computed = Computed::new();

    let mut t = Table::new("sweep", &["attenuation_db", "received_dbm", "ber"]);
    for r in &rows {
        t.push(vec![db(r.attenuation_db), db(r.received_dbm), ber(r.ber)]);
    }
    let crossing = first_crossing(&rows, TARGET_BER);
    let mut s = Table::new("summary", &["quantity", "value"]);
    s.push(vec!["path".into(), path.to_owned()]);
    s.push(vec!["margin_db".into(), db(margin)]);
    s.push(vec!["step_db".into(), num(range.step, 4)]);
    s.push(vec![
        "crossing_attenuation_db".into(),
        crossing.map_or_else(|| "none".into(), db),
    ]);
    computed.insert(key(path, "margin_db"), margin);
    match crossing {
        Some(x) => {
            computed.insert(key(path, "crossing_attenuation_db"), x);
        }
        None => report.notes.push(format!(
            "BER stays at or below {TARGET_BER:.0e} over the whole range"
        )),
    }
    report.tables.push(t);
    report.tables.push(s);
    let prov = provenance(&computed, &doc.references, &mut report.notes);
    report.tables.push(prov);
    Ok(report.into())
}

pub fn scale(input: &Loaded<NetworkPlanFile>, min_margin_db: Option<f64>) -> CliResult<Outcome> {
    let doc = &input.doc;
    if doc.ledgers.is_empty() {
        return Err(CliError::input("plan defines no scaling ledgers"));
    }
    if let Some(m) = min_margin_db {
        if !m.is_finite() {
            return Err(CliError::input(format!("minimum margin {m} is not finite")));
        }
    }
    let mut report = Report::new(String::new(), input.digest.clone());
    let mut computed = Computed::new();
    let mut limits = Table::new(
        "limits",
        &[
            "ledger",
            "base_ports",
            "base_margin_db",
            "min_margin_db",
            "max_ports",
        ],
    );
    let mut rows = Table::new(
        "scaling",
        &[
            "ledger",
            "ports",
            "splitting_loss_db",
            "excess_delta_db",
            "predicted_margin_db",
            "feasible",
        ],
    );
    for named in &doc.ledgers {
        let l = match min_margin_db {
            Some(m) => named.ledger.with_min_margin(m),
            None => named.ledger.clone(),
        };
        let max = max_broadcast_ports(&l)
            .map_err(|e| CliError::from(e).context(format!("ledger '{}'", named.name)))?;
        limits.push(vec![
            named.name.clone(),
            l.base_ports.to_string(),
            db(l.base_margin_db),
            db(l.min_margin_db),
            max.to_string(),
        ]);
        computed.insert(key(named.name.as_str(), "max_ports"), f64::from(max));
        let top = max
            .max(l.base_ports)
            .saturating_mul(4)
            .min(MAX_SCALED_PORTS);
        for (ports, margin) in l.doublings(top) {
            rows.push(vec![
                named.name.clone(),
                ports.to_string(),
                db(splitting_loss_db(ports)?.value()),
                db(l.excess_delta.at(l.base_ports, ports)),
                db(margin),
                flag(margin >= l.min_margin_db),
            ]);
            computed.insert(
                key(format!("{} {ports}-port", named.name), "margin_db"),
                margin,
            );
        }
    }
    report.tables.push(rows);
    report.tables.push(limits);
    let prov = provenance(&computed, &doc.references, &mut report.notes);
    report.tables.push(prov);
    Ok(report.into())
}

pub fn metrics(input: &Loaded<Catalog>) -> CliResult<Outcome> {
    let cat = &input.doc;
    let mut report = Report::new(String::new(), input.digest.clone());
    let mut computed = Computed::new();
    // printed values become references alongside the explicit ones
    let mut refs: Vec<Reference> = Vec::new();
    let mut printed_ref = |item: &str, quantity: &str, value: f64, rel: f64| {
        refs.push(Reference {
            item: item.to_owned(),
            quantity: quantity.to_owned(),
            value,
            tolerance: Some(rel * value.abs()),
            note: None,
        })
    };

    if !cat.transceivers.is_empty() {
        let mut t = Table::new(
            "energy",
            &[
                "name",
                "lanes",
                "rate_per_lane_gbps",
                "aggregate_gbps",
                "power_mw",
                "derived_pj_per_bit",
                "printed_pj_per_bit",
                "rounding_flag",
                "discrepancy_flag",
                "reach_m",
                "derived_bd_gbps_cm",
                "printed_bd_gbps_cm",
                "bd_flag",
            ],
        );
        for row in comparison_table(&cat.transceivers)? {
            let printed_pj = row.printed_pj_per_bit.as_ref();
            t.push(vec![
                row.name.clone(),
                row.lanes.to_string(),
                num(row.rate_per_lane_gbps, 4),
                num(row.aggregate_gbps, 4),
                num(row.total_power_mw, 4),
                fixed(row.derived_pj_per_bit, 3),
                printed_pj.map_or_else(String::new, ToString::to_string),
                flag(row.pj_rounding_flag),
                flag(row.pj_discrepancy_flag),
                row.reach_m.map_or_else(String::new, |r| num(r, 4)),
                row.derived_bd_gbps_cm
                    .map_or_else(String::new, |b| num(b, 1)),
                row.printed_bd_gbps_cm
                    .as_ref()
                    .map_or_else(String::new, ToString::to_string),
                flag(row.bd_flag),
            ]);
            computed.insert(key(row.name.as_str(), "pj_per_bit"), row.derived_pj_per_bit);
            if let Some(p) = printed_pj {
                printed_ref(&row.name, "pj_per_bit", p.value(), 0.05);
                if row.pj_rounding_flag {
                    report.notes.push(format!(
                        "{}: derived {} pJ/bit does not round to the printed {}",
                        row.name,
                        num(row.derived_pj_per_bit, 3),
                        p
                    ));
                }
            }
            if let Some(bd) = row.derived_bd_gbps_cm {
                computed.insert(key(row.name.as_str(), "bd_gbps_cm"), bd);
                if let Some(p) = &row.printed_bd_gbps_cm {
                    printed_ref(&row.name, "bd_gbps_cm", p.value(), 0.05);
                }
            }
        }
        report.tables.push(t);
    }

    if !cat.energy_scaling.is_empty() {
        let mut t = Table::new(
            "energy_scaling",
            &[
                "name",
                "base_pj_per_bit",
                "base_rate_gbps",
                "new_rate_gbps",
                "derived_pj_per_bit",
                "printed_pj_per_bit",
                "rounding_flag",
            ],
        );
        for (i, rec) in cat.energy_scaling.iter().enumerate() {
            let row = energy_scaling_row(rec)
                .map_err(|e| CliError::from(e).context(format!("energy_scaling[{i}]")))?;
            t.push(vec![
                row.name.clone(),
                num(row.base_pj_per_bit, 4),
                num(row.base_rate_gbps, 4),
                num(row.new_rate_gbps, 4),
                fixed(row.derived_pj_per_bit, 3),
                row.printed_pj_per_bit
                    .as_ref()
                    .map_or_else(String::new, ToString::to_string),
                flag(row.rounding_flag),
            ]);
            computed.insert(key(row.name.as_str(), "pj_per_bit"), row.derived_pj_per_bit);
            if let Some(p) = &row.printed_pj_per_bit {
                printed_ref(&row.name, "pj_per_bit", p.value(), 0.05);
            }
        }
        report.tables.push(t);
    }

    if !cat.connectors.is_empty() {
        let mut t = Table::new(
            "density",
            &[
                "name",
                "aggregate_gbps",
                "face_area_mm2",
                "derived_gbps_per_mm2",
                "printed_gbps_per_mm2",
                "relative_error_percent",
                "rounding_flag",
            ],
        );
        for row in density_table(&cat.connectors)? {
            t.push(vec![
                row.name.clone(),
                num(row.aggregate_gbps, 4),
                num(row.face_area_mm2, 4),
                fixed(row.derived_density, 3),
                row.printed_density
                    .as_ref()
                    .map_or_else(String::new, ToString::to_string),
                row.relative_error
                    .map_or_else(String::new, |e| fixed(100.0 * e, 3)),
                flag(row.rounding_flag),
            ]);
            computed.insert(key(row.name.as_str(), "gbps_per_mm2"), row.derived_density);
            if let Some(p) = &row.printed_density {
                printed_ref(&row.name, "gbps_per_mm2", p.value(), 0.005);
                if row.rounding_flag {
                    report.notes.push(format!(
                        "{}: derived {} Gbps/mm2 does not round to the printed {}",
                        row.name,
                        fixed(row.derived_density, 3),
                        p
                    ));
                }
            }
        }
        report.tables.push(t);
    }

    if !cat.density_ratios.is_empty() {
        let mut t = Table::new("density_ratios", &["numerator", "denominator", "ratio"]);
        for (a, b) in &cat.density_ratios {
            let r = density_ratio(cat.connector(a)?, cat.connector(b)?)?;
            t.push(vec![a.clone(), b.clone(), fixed(r, 3)]);
            computed.insert(key(format!("{a} / {b}"), "density_ratio"), r);
        }
        report.tables.push(t);
    }

    if !cat.cost_points.is_empty() {
        let mut t = Table::new(
            "cost",
            &[
                "name",
                "low_usd_per_gbps",
                "high_usd_per_gbps",
                "zone_at_low",
                "zone_at_high",
            ],
        );
        for c in &cat.cost_points {
            t.push(vec![
                c.name.clone(),
                num(c.low_usd_per_gbps, 4),
                num(c.high_usd_per_gbps, 4),
                cost_crossover_zone(c.low_usd_per_gbps)?.to_string(),
                cost_crossover_zone(c.high_usd_per_gbps)?.to_string(),
            ]);
        }
        report.tables.push(t);
    }

    if !cat.power_breakdowns.is_empty() {
        let mut t = Table::new("power_breakdown", &["breakdown", "block", "percent"]);
        for b in &cat.power_breakdowns {
            for (block, share) in b.blocks() {
                t.push(vec![
                    b.name.clone(),
                    block.to_owned(),
                    fixed(100.0 * share, 1),
                ]);
                computed.insert(key(format!("{} {block}", b.name), "fraction"), share);
            }
        }
        report.tables.push(t);
    }

    refs.extend(cat.references.iter().cloned());
    let prov = provenance(&computed, &refs, &mut report.notes);
    report.tables.push(prov);
    Ok(report.into())
}
