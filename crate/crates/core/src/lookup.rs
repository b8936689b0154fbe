//! Precomputed optimization results over a parameter grid.
//!
//! Solving is cheap but not free; deployments sweep the environment axes
//! (link rates, batch, weight-update fraction) ahead of time and answer
//! online queries from the table. The table pins the instance it was built
//! against by content hash, so a stale table cannot silently serve answers
//! for a different network.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Document, LinkProfile, ProblemInstance};
use crate::scenario::{solve_scenario, ScenarioSpec};
use crate::schedule::Schedule;
use crate::solver::evaluate_schedule;
use crate::types::Mode;

pub const DEFAULT_CELL_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Num(f64),
    Name(String),
}

impl AxisValue {
    fn as_num(&self) -> Option<f64> {
        match self {
            AxisValue::Num(v) => Some(*v),
            AxisValue::Name(_) => None,
        }
    }
}

impl std::fmt::Display for AxisValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AxisValue::Num(v) => write!(f, "{v}"),
            AxisValue::Name(s) => write!(f, "{s}"),
        }
    }
}

/// Axes the sweep understands.
pub const AXIS_NAMES: [&str; 5] = ["uplink_mbps", "downlink_mbps", "link_name", "batch", "rho"];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxisGrid {
    pub name: String,
    pub values: Vec<AxisValue>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LookupCell {
    /// Axis values in the same order as the table's axes.
    pub point: Vec<AxisValue>,
    pub schedule: Schedule,
    pub pattern: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LookupTable {
    pub instance_hash: String,
    pub scenario: ScenarioSpec,
    pub axes: Vec<AxisGrid>,
    pub cells: Vec<LookupCell>,
}

fn validate_axes(axes: &[AxisGrid], spec: &ScenarioSpec) -> Result<()> {
    let mut failures = Vec::new();
    for axis in axes {
        if !AXIS_NAMES.contains(&axis.name.as_str()) {
            failures.push(format!(
                "unknown axis '{}' (expected one of {:?})",
                axis.name, AXIS_NAMES
            ));
            continue;
        }
        if axis.values.is_empty() {
            failures.push(format!("axis '{}' has no values", axis.name));
        }
        for v in &axis.values {
            match (axis.name.as_str(), v) {
                ("link_name", AxisValue::Name(name)) => {
                    if LinkProfile::preset(name).is_none() {
                        failures.push(format!("axis link_name: unknown preset '{name}'"));
                    }
                }
                ("link_name", AxisValue::Num(_)) => {
                    failures.push("axis link_name takes names, not numbers".into());
                }
                (_, AxisValue::Name(s)) => {
                    failures.push(format!("axis '{}' takes numbers, got '{s}'", axis.name));
                }
                ("rho", AxisValue::Num(r)) => {
                    if !(0.0..=1.0).contains(r) {
                        failures.push(format!("axis rho: {r} not in [0,1]"));
                    }
                    if spec.mode != Mode::Training {
                        failures.push("axis rho requires a training scenario".into());
                    }
                }
                ("batch", AxisValue::Num(b)) => {
                    if *b < 1.0 || b.fract() != 0.0 {
                        failures.push(format!("axis batch: {b} must be a positive integer"));
                    }
                }
                (_, AxisValue::Num(v)) => {
                    if !(*v > 0.0) {
                        failures.push(format!("axis '{}': {v} must be > 0", axis.name));
                    }
                }
            }
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    for axis in axes {
        if !seen.insert(axis.name.clone()) {
            failures.push(format!("axis '{}' listed twice", axis.name));
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation { failures })
    }
}

/// Applies one grid point to the base document and scenario.
fn apply_point(
    base: &ProblemInstance,
    spec: &ScenarioSpec,
    axes: &[AxisGrid],
    point: &[AxisValue],
) -> Result<(ProblemInstance, ScenarioSpec)> {
    let mut doc: Document = base.document().clone();
    let mut spec = spec.clone();
    let mut batch = base.batch();

    fn scale_explicit(doc: &mut Document, up_ratio: f64, down_ratio: f64) {
        if let Some(t) = doc.explicit_transfers.as_mut() {
            t.upload_input.latency_ms *= up_ratio;
            t.upload_input.energy_mj *= up_ratio;
            for e in t.upload.iter_mut() {
                e.latency_ms *= up_ratio;
                e.energy_mj *= up_ratio;
            }
            for e in t.download.iter_mut() {
                e.latency_ms *= down_ratio;
                e.energy_mj *= down_ratio;
            }
            if let Some(e) = t.download_input.as_mut() {
                e.latency_ms *= down_ratio;
                e.energy_mj *= down_ratio;
            }
        }
    }

    for (axis, value) in axes.iter().zip(point) {
        match axis.name.as_str() {
            "uplink_mbps" => {
                let v = value.as_num().expect("validated");
                let ratio = doc.link.uplink_mbps / v;
                scale_explicit(&mut doc, ratio, 1.0);
                doc.link.uplink_mbps = v;
            }
            "downlink_mbps" => {
                let v = value.as_num().expect("validated");
                let ratio = doc.link.downlink_mbps / v;
                scale_explicit(&mut doc, 1.0, ratio);
                doc.link.downlink_mbps = v;
            }
            "link_name" => {
                let name = match value {
                    AxisValue::Name(n) => n,
                    AxisValue::Num(_) => unreachable!("validated"),
                };
                let preset = LinkProfile::preset(name).expect("validated");
                let up_ratio = doc.link.uplink_mbps / preset.uplink_mbps;
                let down_ratio = doc.link.downlink_mbps / preset.downlink_mbps;
                scale_explicit(&mut doc, up_ratio, down_ratio);
                doc.link = preset;
            }
            "batch" => {
                batch = value.as_num().expect("validated") as u32;
            }
            "rho" => {
                spec.update_fraction = value.as_num().expect("validated");
            }
            _ => unreachable!("validated"),
        }
    }
    let instance = ProblemInstance::from_document(doc)?.with_batch(batch)?;
    Ok((instance, spec))
}

/// Solves every grid cell. Cells are independent and run in parallel; the
/// table's content does not depend on evaluation order.
pub fn sweep_lookup(
    instance: &ProblemInstance,
    axes: Vec<AxisGrid>,
    spec: &ScenarioSpec,
    cap: usize,
) -> Result<LookupTable> {
    spec.validate()?;
    validate_axes(&axes, spec)?;
    if axes.is_empty() {
        return Err(Error::Argument("sweep needs at least one axis".into()));
    }
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    if total > cap {
        return Err(Error::Argument(format!(
            "sweep would produce {total} cells, over the cap of {cap}; raise the cap \
             explicitly if intended"
        )));
    }

    let points: Vec<Vec<AxisValue>> = cartesian(&axes);
    let cells: Result<Vec<LookupCell>> = points
        .par_iter()
        .map(|point| {
            let (cell_instance, cell_spec) = apply_point(instance, spec, &axes, point)?;
            let outcome = solve_scenario(&cell_instance, &cell_spec)?;
            // every cell must survive independent re-evaluation
            evaluate_schedule(&cell_instance, &outcome.schedule, &cell_spec)?;
            Ok(LookupCell {
                point: point.clone(),
                pattern: outcome.schedule.pattern(),
                schedule: outcome.schedule,
            })
        })
        .collect();

    Ok(LookupTable {
        instance_hash: instance.content_hash().to_string(),
        scenario: spec.clone(),
        axes,
        cells: cells?,
    })
}

fn cartesian(axes: &[AxisGrid]) -> Vec<Vec<AxisValue>> {
    let mut points: Vec<Vec<AxisValue>> = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for p in &points {
            for v in &axis.values {
                let mut q = p.clone();
                q.push(v.clone());
                next.push(q);
            }
        }
        points = next;
    }
    points
}

/// Nearest-cell lookup under normalized axis distance. Numeric queries must
/// fall inside the axis bounding box; ties break toward lower axis values.
pub fn query_lookup<'a>(
    table: &'a LookupTable,
    instance_hash: &str,
    point: &BTreeMap<String, AxisValue>,
) -> Result<&'a LookupCell> {
    if table.instance_hash != instance_hash {
        return Err(Error::validation(format!(
            "lookup table was built for instance {} but the query instance is {}",
            table.instance_hash, instance_hash
        )));
    }
    // Every axis needs a query value; extras are rejected.
    for name in point.keys() {
        if !table.axes.iter().any(|a| &a.name == name) {
            return Err(Error::Range(format!("query axis '{name}' not in table")));
        }
    }
    let mut query = Vec::with_capacity(table.axes.len());
    for axis in &table.axes {
        let v = point.get(&axis.name).ok_or_else(|| {
            Error::Range(format!("query is missing a value for axis '{}'", axis.name))
        })?;
        match (axis.values[0].as_num(), v) {
            (Some(_), AxisValue::Num(q)) => {
                let lo = axis
                    .values
                    .iter()
                    .filter_map(AxisValue::as_num)
                    .fold(f64::INFINITY, f64::min);
                let hi = axis
                    .values
                    .iter()
                    .filter_map(AxisValue::as_num)
                    .fold(f64::NEG_INFINITY, f64::max);
                if *q < lo || *q > hi {
                    return Err(Error::Range(format!(
                        "axis '{}': {q} outside the table's [{lo}, {hi}]",
                        axis.name
                    )));
                }
            }
            (None, AxisValue::Name(name)) => {
                if !axis.values.contains(&AxisValue::Name(name.clone())) {
                    return Err(Error::Range(format!(
                        "axis '{}': '{name}' not among the swept values",
                        axis.name
                    )));
                }
            }
            _ => {
                return Err(Error::Range(format!(
                    "query value for axis '{}' has the wrong type",
                    axis.name
                )));
            }
        }
        query.push(v.clone());
    }

    let range: Vec<f64> = table
        .axes
        .iter()
        .map(|a| {
            let nums: Vec<f64> = a.values.iter().filter_map(AxisValue::as_num).collect();
            if nums.is_empty() {
                1.0
            } else {
                let lo = nums.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = nums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (hi - lo).max(f64::MIN_POSITIVE)
            }
        })
        .collect();

    let mut best: Option<(&LookupCell, f64)> = None;
    for cell in &table.cells {
        let mut dist = 0.0;
        let mut compatible = true;
        for ((cv, qv), r) in cell.point.iter().zip(&query).zip(&range) {
            match (cv, qv) {
                (AxisValue::Num(c), AxisValue::Num(q)) => {
                    let d = (c - q) / r;
                    dist += d * d;
                }
                (AxisValue::Name(c), AxisValue::Name(q)) => {
                    if c != q {
                        compatible = false;
                        break;
                    }
                }
                _ => {
                    compatible = false;
                    break;
                }
            }
        }
        if !compatible {
            continue;
        }
        let better = match &best {
            None => true,
            Some((bc, bd)) => {
                dist < *bd - 1e-12
                    || ((dist - *bd).abs() <= 1e-12
                        && point_key(&cell.point) < point_key(&bc.point))
            }
        };
        if better {
            best = Some((cell, dist));
        }
    }
    best.map(|(c, _)| c)
        .ok_or_else(|| Error::Range("no compatible cell for the query".into()))
}

fn point_key(point: &[AxisValue]) -> Vec<(u8, f64, String)> {
    point
        .iter()
        .map(|v| match v {
            AxisValue::Num(n) => (0u8, *n, String::new()),
            AxisValue::Name(s) => (1u8, 0.0, s.clone()),
        })
        .collect()
}

impl LookupTable {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn from_json(text: &str) -> Result<LookupTable> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("lookup table: {e}")))
    }
}
