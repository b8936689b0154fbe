//! Exact ILP export in LP text format.
//!
//! Binary variables m_i_j / c_i_j select the platform for each grouped span;
//! u_i_j / d_i_j linearize the upload/download products. The performance
//! form uses exactly-once equalities; the energy form uses the cover
//! relaxation (uncovered layers are implicitly cloud-executed). The export
//! is a verification and interoperability artifact: the engine never calls
//! an external solver, but any MILP solver fed this file should land on the
//! same optimum.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::chain::{ChainCosts, TrainingOptions};
use crate::error::{Error, Result};
use crate::instance::{ProblemInstance, ResidualBlock};
use crate::scenario::{Constraint, ScenarioSpec};
use crate::schedule::Schedule;
use crate::types::{Metric, Mode, Platform};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(f64, usize)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// The in-memory model behind the LP text, kept around so schedules can be
/// checked against exactly what was exported.
#[derive(Debug, Clone)]
pub struct IlpModel {
    pub name: String,
    n: usize,
    mode: Mode,
    objective_metric: Metric,
    vars: Vec<String>,
    var_index: BTreeMap<String, usize>,
    objective: Vec<(f64, usize)>,
    obj_constant: f64,
    rows: Vec<Row>,
    comments: Vec<String>,
    costs: ChainCosts,
    blocks: Vec<ResidualBlock>,
}

fn fam_name(fam: char, i: usize, j: usize) -> String {
    format!("{fam}_{i}_{j}")
}

impl IlpModel {
    pub fn build(instance: &ProblemInstance, scenario: &ScenarioSpec) -> Result<IlpModel> {
        scenario.validate()?;
        let costs = match scenario.mode {
            Mode::Inference => ChainCosts::inference(instance)?,
            Mode::Training => ChainCosts::training(
                instance,
                &TrainingOptions::with_update_fraction(scenario.update_fraction),
            )?,
        };
        let n = costs.n;

        let mut vars = Vec::with_capacity(4 * n * (n + 1) / 2);
        let mut var_index = BTreeMap::new();
        for fam in ['m', 'c', 'u', 'd'] {
            for i in 1..=n {
                for j in i..=n {
                    let name = fam_name(fam, i, j);
                    var_index.insert(name.clone(), vars.len());
                    vars.push(name);
                }
            }
        }
        let blocks = match scenario.mode {
            Mode::Inference => instance.residual_blocks().to_vec(),
            Mode::Training => Vec::new(),
        };

        let mut model = IlpModel {
            name: format!(
                "offload_{}_{}{}",
                scenario.mode,
                scenario.objective,
                match &scenario.constraint {
                    Constraint::None => String::new(),
                    Constraint::Battery(_) => "_battery".into(),
                    Constraint::CloudTime(_) => "_cloud_time".into(),
                    Constraint::Qos(_) => "_qos".into(),
                }
            ),
            n,
            mode: scenario.mode,
            objective_metric: scenario.objective,
            vars,
            var_index,
            objective: Vec::new(),
            obj_constant: 0.0,
            rows: Vec::new(),
            comments: Vec::new(),
            costs,
            blocks,
        };

        let (obj_terms, obj_constant) = match scenario.objective {
            Metric::Latency => model.latency_expression(),
            Metric::Energy => model.energy_expression(),
        };
        model.objective = obj_terms
            .into_iter()
            .map(|(vid, coef)| (coef, vid))
            .collect();
        model.obj_constant = obj_constant;

        match scenario.objective {
            Metric::Latency => model.push_exactly_once(),
            Metric::Energy => model.push_cover(),
        }
        model.push_linearization();

        match scenario.constraint {
            Constraint::None => {}
            Constraint::Battery(bound) => {
                let (terms, constant) = model.energy_expression();
                model.rows.push(Row {
                    name: "battery".into(),
                    terms: terms.into_iter().map(|(vid, coef)| (coef, vid)).collect(),
                    sense: Sense::Le,
                    rhs: bound - constant,
                });
            }
            Constraint::CloudTime(bound) => {
                let mut terms = Vec::new();
                for i in 1..=n {
                    for j in i..=n {
                        terms.push((model.costs.cloud_exec_latency(i, j), model.vid('c', i, j)));
                    }
                }
                model.rows.push(Row {
                    name: "cloud_time".into(),
                    terms,
                    sense: Sense::Le,
                    rhs: bound,
                });
            }
            Constraint::Qos(deadline) => {
                let (terms, constant) = model.latency_expression();
                model.rows.push(Row {
                    name: "qos".into(),
                    terms: terms.into_iter().map(|(vid, coef)| (coef, vid)).collect(),
                    sense: Sense::Le,
                    rhs: deadline - constant,
                });
            }
        }

        if scenario.objective == Metric::Energy {
            model.comments.push(
                "cover rows: layers left uncovered by m variables are implicitly \
                 cloud-executed"
                    .into(),
            );
        }
        if scenario.mode == Mode::Training {
            model.comments.push(
                "training form omits the final-output download for cloud-ending \
                 schedules; the evaluator adds it back when checking"
                    .into(),
            );
        }
        if !model.blocks.is_empty() {
            model.comments.push(
                "residual skip transfers are not represented; the evaluator adds \
                 them back when checking"
                    .into(),
            );
        }
        Ok(model)
    }

    fn vid(&self, fam: char, i: usize, j: usize) -> usize {
        self.var_index[&fam_name(fam, i, j)]
    }

    /// Total latency as a linear expression: computation, linearized
    /// upload/download, input upload, weight downloads, and the final
    /// download in inference mode.
    fn latency_expression(&self) -> (BTreeMap<usize, f64>, f64) {
        let n = self.n;
        let c = &self.costs;
        let mut terms: BTreeMap<usize, f64> = BTreeMap::new();
        let mut add = |vid: usize, coef: f64| {
            if coef != 0.0 {
                *terms.entry(vid).or_insert(0.0) += coef;
            }
        };
        let up = |b: usize| c.upload(Metric::Latency, b) + c.overhead(Metric::Latency, b);
        let dn = |b: usize| c.download(Metric::Latency, b) + c.overhead(Metric::Latency, b);
        for i in 1..=n {
            for j in i..=n {
                add(
                    self.vid('m', i, j),
                    c.exec(Platform::Mobile, Metric::Latency, i, j),
                );
                let mut cloud = c.exec(Platform::Cloud, Metric::Latency, i, j);
                cloud += c.weight_download(Metric::Latency, i, j);
                add(self.vid('c', i, j), cloud);
                if j < n {
                    add(self.vid('u', i, j), up(j));
                    add(self.vid('d', i, j), dn(j));
                }
            }
        }
        for i in 1..=n {
            add(self.vid('c', 1, i), up(0));
            if self.mode == Mode::Inference {
                add(self.vid('c', i, n), dn(n));
            }
        }
        (terms, 0.0)
    }

    /// Mobile energy as a linear expression over m variables, with the
    /// boundary indicator terms contributing constants, plus the idle-wait
    /// energy on c variables when the device draws idle power.
    fn energy_expression(&self) -> (BTreeMap<usize, f64>, f64) {
        let n = self.n;
        let c = &self.costs;
        let mut terms: BTreeMap<usize, f64> = BTreeMap::new();
        let mut constant = 0.0;
        let mut add = |vid: usize, coef: f64| {
            if coef != 0.0 {
                *terms.entry(vid).or_insert(0.0) += coef;
            }
        };
        let up = |b: usize| c.upload(Metric::Energy, b) + c.overhead(Metric::Energy, b);
        let dn = |b: usize| c.download(Metric::Energy, b) + c.overhead(Metric::Energy, b);
        for i in 1..=n {
            for j in i..=n {
                add(
                    self.vid('m', i, j),
                    c.exec(Platform::Mobile, Metric::Energy, i, j),
                );
                let idle = c.exec(Platform::Cloud, Metric::Energy, i, j);
                add(self.vid('c', i, j), idle);
                // a mobile segment starting past layer 1 downloads its input
                if i >= 2 {
                    add(self.vid('m', i, j), dn(i - 1));
                }
                // a mobile segment ending before layer n uploads its output
                if j < n {
                    add(self.vid('m', i, j), up(j));
                }
            }
        }
        // input upload unless a mobile segment starts at layer 1
        constant += up(0);
        for i in 1..=n {
            add(self.vid('m', 1, i), -up(0));
        }
        if self.mode == Mode::Inference {
            // final download unless a mobile segment ends at layer n
            constant += dn(n);
            for i in 1..=n {
                add(self.vid('m', i, n), -dn(n));
            }
        }
        if self.mode == Mode::Training {
            // weight download for every backward layer not covered by m
            let base_n = n / 2;
            for b in (base_n + 1)..=n {
                let w = c.weight_download(Metric::Energy, b, b);
                if w == 0.0 {
                    continue;
                }
                constant += w;
                for i in 1..=b {
                    for j in b..=n {
                        add(self.vid('m', i, j), -w);
                    }
                }
            }
        }
        (terms, constant)
    }

    fn push_exactly_once(&mut self) {
        for layer in 1..=self.n {
            let mut terms = Vec::new();
            for i in 1..=layer {
                for j in layer..=self.n {
                    terms.push((1.0, self.vid('m', i, j)));
                    terms.push((1.0, self.vid('c', i, j)));
                }
            }
            self.rows.push(Row {
                name: format!("once_{layer}"),
                terms,
                sense: Sense::Eq,
                rhs: 1.0,
            });
        }
    }

    fn push_cover(&mut self) {
        for layer in 1..=self.n {
            let mut terms = Vec::new();
            for i in 1..=layer {
                for j in layer..=self.n {
                    terms.push((1.0, self.vid('m', i, j)));
                }
            }
            self.rows.push(Row {
                name: format!("cover_{layer}"),
                terms,
                sense: Sense::Le,
                rhs: 1.0,
            });
        }
    }

    fn push_linearization(&mut self) {
        let n = self.n;
        for i in 1..=n {
            for j in i..=n {
                let u = self.vid('u', i, j);
                let d = self.vid('d', i, j);
                let m = self.vid('m', i, j);
                let c = self.vid('c', i, j);
                let succ_c: Vec<usize> = ((j + 1)..=n).map(|k| self.vid('c', j + 1, k)).collect();
                let succ_m: Vec<usize> = ((j + 1)..=n).map(|k| self.vid('m', j + 1, k)).collect();

                self.rows.push(Row {
                    name: format!("lin_u1_{i}_{j}"),
                    terms: vec![(1.0, u), (-1.0, m)],
                    sense: Sense::Le,
                    rhs: 0.0,
                });
                let mut t = vec![(1.0, u)];
                t.extend(succ_c.iter().map(|&v| (-1.0, v)));
                self.rows.push(Row {
                    name: format!("lin_u2_{i}_{j}"),
                    terms: t,
                    sense: Sense::Le,
                    rhs: 0.0,
                });
                let mut t = vec![(1.0, m)];
                t.extend(succ_c.iter().map(|&v| (1.0, v)));
                t.push((-1.0, u));
                self.rows.push(Row {
                    name: format!("lin_u3_{i}_{j}"),
                    terms: t,
                    sense: Sense::Le,
                    rhs: 1.0,
                });

                self.rows.push(Row {
                    name: format!("lin_d1_{i}_{j}"),
                    terms: vec![(1.0, d), (-1.0, c)],
                    sense: Sense::Le,
                    rhs: 0.0,
                });
                let mut t = vec![(1.0, d)];
                t.extend(succ_m.iter().map(|&v| (-1.0, v)));
                self.rows.push(Row {
                    name: format!("lin_d2_{i}_{j}"),
                    terms: t,
                    sense: Sense::Le,
                    rhs: 0.0,
                });
                let mut t = vec![(1.0, c)];
                t.extend(succ_m.iter().map(|&v| (1.0, v)));
                t.push((-1.0, d));
                self.rows.push(Row {
                    name: format!("lin_d3_{i}_{j}"),
                    terms: t,
                    sense: Sense::Le,
                    rhs: 1.0,
                });
            }
        }
    }

    pub fn binary_count(&self) -> usize {
        self.vars.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    /// 0/1 assignment induced by a schedule's maximal runs.
    pub fn assignment_for(&self, schedule: &Schedule) -> Result<Vec<f64>> {
        schedule.validate_tiling(self.n)?;
        let mut x = vec![0.0; self.vars.len()];
        let segs = &schedule.segments;
        for (idx, s) in segs.iter().enumerate() {
            let fam = match s.platform {
                Platform::Mobile => 'm',
                Platform::Cloud => 'c',
            };
            x[self.vid(fam, s.start, s.end)] = 1.0;
            if let Some(next) = segs.get(idx + 1) {
                match (s.platform, next.platform) {
                    (Platform::Mobile, Platform::Cloud) => {
                        x[self.vid('u', s.start, s.end)] = 1.0;
                    }
                    (Platform::Cloud, Platform::Mobile) => {
                        x[self.vid('d', s.start, s.end)] = 1.0;
                    }
                    _ => {}
                }
            }
        }
        Ok(x)
    }

    /// Objective value at an assignment, including the exported constant.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.obj_constant
            + self
                .objective
                .iter()
                .map(|&(coef, vid)| coef * x[vid])
                .sum::<f64>()
    }

    /// Cost terms the export deliberately leaves out for this schedule
    /// (training final download, residual skip transfers).
    pub fn omitted_terms(&self, schedule: &Schedule) -> f64 {
        let m = self.objective_metric;
        let mut omitted = 0.0;
        if self.mode == Mode::Training
            && schedule.segments.last().map(|s| s.platform) == Some(Platform::Cloud)
        {
            omitted += self.costs.download(m, self.n) + self.costs.overhead(m, self.n);
        }
        for block in &self.blocks {
            let find = |layer: usize| {
                schedule
                    .segments
                    .iter()
                    .find(|s| s.start <= layer && layer <= s.end)
                    .map(|s| s.platform)
            };
            let (src, snk) = match (find(block.source_layer), find(block.sink_layer)) {
                (Some(a), Some(b)) => (a, b),
                _ => continue,
            };
            omitted += match (src, snk) {
                (Platform::Mobile, Platform::Cloud) => {
                    self.costs.upload(m, block.source_layer)
                        + self.costs.overhead(m, block.source_layer)
                }
                (Platform::Cloud, Platform::Mobile) => {
                    self.costs.download(m, block.source_layer)
                        + self.costs.overhead(m, block.source_layer)
                }
                _ => 0.0,
            };
        }
        omitted
    }

    /// Verifies the schedule's binaries satisfy every row and that the
    /// objective reproduces `expected` within 1e-6 relative.
    pub fn check(&self, schedule: &Schedule, expected: f64) -> Result<()> {
        let x = self.assignment_for(schedule)?;
        for row in &self.rows {
            let lhs: f64 = row.terms.iter().map(|&(coef, vid)| coef * x[vid]).sum();
            let tol = 1e-9 * row.rhs.abs().max(1.0);
            let ok = match row.sense {
                Sense::Le => lhs <= row.rhs + tol,
                Sense::Eq => (lhs - row.rhs).abs() <= tol,
            };
            if !ok {
                return Err(Error::InternalConsistency(format!(
                    "ILP row '{}' violated: lhs {} vs rhs {}",
                    row.name, lhs, row.rhs
                )));
            }
        }
        let value = self.objective_value(&x) + self.omitted_terms(schedule);
        if (value - expected).abs() > 1e-6 * expected.abs().max(1.0) {
            return Err(Error::InternalConsistency(format!(
                "ILP objective {} disagrees with evaluated total {}",
                value, expected
            )));
        }
        Ok(())
    }

    /// Serializes the model as LP text.
    pub fn to_lp(&self) -> String {
        let mut out = String::new();
        writeln!(out, "\\Problem name: {}", self.name).unwrap();
        for c in &self.comments {
            writeln!(out, "\\ {c}").unwrap();
        }
        writeln!(out, "Minimize").unwrap();
        let mut line = String::from(" obj:");
        let mut first = true;
        for &(coef, vid) in &self.objective {
            push_term(&mut out, &mut line, coef, Some(&self.vars[vid]), &mut first);
        }
        if self.obj_constant != 0.0 || first {
            push_term(&mut out, &mut line, self.obj_constant, None, &mut first);
        }
        out.push_str(&line);
        out.push('\n');
        writeln!(out, "Subject To").unwrap();
        for row in &self.rows {
            let mut line = format!(" {}:", row.name);
            let mut first = true;
            for &(coef, vid) in &row.terms {
                push_term(&mut out, &mut line, coef, Some(&self.vars[vid]), &mut first);
            }
            let sense = match row.sense {
                Sense::Le => "<=",
                Sense::Eq => "=",
            };
            write!(line, " {} {}", sense, sig9(row.rhs)).unwrap();
            out.push_str(&line);
            out.push('\n');
        }
        writeln!(out, "Binary").unwrap();
        let mut line = String::new();
        for name in &self.vars {
            if line.len() + name.len() + 1 > 72 {
                writeln!(out, " {}", line.trim_end()).unwrap();
                line.clear();
            }
            line.push_str(name);
            line.push(' ');
        }
        if !line.is_empty() {
            writeln!(out, " {}", line.trim_end()).unwrap();
        }
        writeln!(out, "End").unwrap();
        out
    }
}

fn push_term(out: &mut String, line: &mut String, coef: f64, var: Option<&str>, first: &mut bool) {
    if line.len() > 200 {
        out.push_str(line);
        out.push('\n');
        line.clear();
        line.push(' ');
    }
    let sign = if coef < 0.0 {
        " - "
    } else if *first {
        " "
    } else {
        " + "
    };
    *first = false;
    match var {
        Some(v) => write!(line, "{sign}{} {v}", sig9(coef.abs())).unwrap(),
        None => write!(line, "{sign}{}", sig9(coef.abs())).unwrap(),
    }
}

/// Formats with 9 significant digits, plain decimal where reasonable.
pub(crate) fn sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
        if s.is_empty() || s == "-" {
            "0".to_string()
        } else {
            s
        }
    } else {
        format!("{v:.8e}")
    }
}

/// Emits the scenario's ILP as LP text.
pub fn export_ilp(instance: &ProblemInstance, scenario: &ScenarioSpec) -> Result<String> {
    Ok(IlpModel::build(instance, scenario)?.to_lp())
}
