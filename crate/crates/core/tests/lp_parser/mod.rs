//! Minimal LP-format reader used to verify exports from the outside.
//!
//! Deliberately independent of the production model builder: it only sees
//! the emitted text, so serialization bugs cannot hide.

use std::collections::BTreeMap;

use offload_core::{Platform, Schedule};

#[derive(Debug, Clone, PartialEq)]
pub enum Sense {
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub struct ParsedRow {
    pub name: String,
    pub terms: Vec<(f64, String)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl ParsedRow {
    pub fn eval(&self, assignment: &BTreeMap<String, f64>) -> f64 {
        self.terms
            .iter()
            .map(|(coef, var)| coef * assignment.get(var).copied().unwrap_or(0.0))
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct ParsedModel {
    pub objective_terms: Vec<(f64, String)>,
    pub objective_constant: f64,
    pub rows: Vec<ParsedRow>,
    pub binaries: Vec<String>,
}

impl ParsedModel {
    pub fn objective_value(&self, assignment: &BTreeMap<String, f64>) -> f64 {
        self.objective_constant
            + self
                .objective_terms
                .iter()
                .map(|(coef, var)| coef * assignment.get(var).copied().unwrap_or(0.0))
                .sum::<f64>()
    }

    pub fn check_rows(&self, assignment: &BTreeMap<String, f64>) -> Result<(), String> {
        for row in &self.rows {
            let lhs = row.eval(assignment);
            let tol = 1e-9 * row.rhs.abs().max(1.0);
            let ok = match row.sense {
                Sense::Le => lhs <= row.rhs + tol,
                Sense::Eq => (lhs - row.rhs).abs() <= tol,
            };
            if !ok {
                return Err(format!(
                    "row '{}' violated: lhs {lhs} vs rhs {}",
                    row.name, row.rhs
                ));
            }
        }
        Ok(())
    }
}

/// Parses the subset of LP format the exporter emits.
pub fn parse(text: &str) -> ParsedModel {
    #[derive(PartialEq)]
    enum Section {
        Preamble,
        Objective,
        Constraints,
        Binary,
        Done,
    }
    let mut section = Section::Preamble;
    let mut objective_text = String::new();
    let mut constraint_text = String::new();
    let mut binaries = Vec::new();

    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.starts_with('\\') || trimmed.is_empty() {
            continue;
        }
        match trimmed {
            "Minimize" => {
                section = Section::Objective;
                continue;
            }
            "Subject To" => {
                section = Section::Constraints;
                continue;
            }
            "Binary" => {
                section = Section::Binary;
                continue;
            }
            "End" => {
                section = Section::Done;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Objective => {
                objective_text.push(' ');
                objective_text.push_str(trimmed);
            }
            Section::Constraints => {
                constraint_text.push(' ');
                constraint_text.push_str(trimmed);
            }
            Section::Binary => {
                binaries.extend(trimmed.split_whitespace().map(str::to_string));
            }
            Section::Preamble | Section::Done => {}
        }
    }

    let objective_body = objective_text
        .trim()
        .strip_prefix("obj:")
        .expect("objective labeled obj:")
        .to_string();
    let (objective_terms, objective_constant) = parse_expression(&objective_body);

    // Rows: `name: expr <= rhs` back to back; a token ending in ':' starts
    // a new row.
    let mut rows = Vec::new();
    let tokens: Vec<&str> = constraint_text.split_whitespace().collect();
    let mut idx = 0;
    while idx < tokens.len() {
        let name = tokens[idx]
            .strip_suffix(':')
            .unwrap_or_else(|| panic!("expected row name, got '{}'", tokens[idx]))
            .to_string();
        idx += 1;
        let mut expr = String::new();
        let mut sense = None;
        while idx < tokens.len() {
            match tokens[idx] {
                "<=" => {
                    sense = Some(Sense::Le);
                    idx += 1;
                    break;
                }
                "=" => {
                    sense = Some(Sense::Eq);
                    idx += 1;
                    break;
                }
                t => {
                    expr.push(' ');
                    expr.push_str(t);
                    idx += 1;
                }
            }
        }
        let rhs: f64 = tokens[idx].parse().expect("rhs is a number");
        idx += 1;
        let (terms, constant) = parse_expression(&expr);
        assert_eq!(constant, 0.0, "rows must not carry constants");
        rows.push(ParsedRow {
            name,
            terms,
            sense: sense.expect("row has a sense"),
            rhs,
        });
    }

    ParsedModel {
        objective_terms,
        objective_constant,
        rows,
        binaries,
    }
}

/// `+ 2.5 x_1_2 - 3 y + 7` → terms and constant.
fn parse_expression(expr: &str) -> (Vec<(f64, String)>, f64) {
    let mut terms = Vec::new();
    let mut constant = 0.0;
    let tokens: Vec<&str> = expr.split_whitespace().collect();
    let mut idx = 0;
    let mut sign = 1.0;
    while idx < tokens.len() {
        match tokens[idx] {
            "+" => {
                sign = 1.0;
                idx += 1;
            }
            "-" => {
                sign = -1.0;
                idx += 1;
            }
            tok => {
                let value: f64 = tok
                    .parse()
                    .unwrap_or_else(|_| panic!("expected a coefficient, got '{tok}' in '{expr}'"));
                idx += 1;
                if idx < tokens.len() && !matches!(tokens[idx], "+" | "-") {
                    terms.push((sign * value, tokens[idx].to_string()));
                    idx += 1;
                } else {
                    constant += sign * value;
                }
                sign = 1.0;
            }
        }
    }
    (terms, constant)
}

/// The binaries a schedule's maximal runs switch on, rebuilt from scratch.
pub fn assignment_from_schedule(schedule: &Schedule) -> BTreeMap<String, f64> {
    let mut x = BTreeMap::new();
    for (idx, s) in schedule.segments.iter().enumerate() {
        let fam = match s.platform {
            Platform::Mobile => 'm',
            Platform::Cloud => 'c',
        };
        x.insert(format!("{fam}_{}_{}", s.start, s.end), 1.0);
        if let Some(next) = schedule.segments.get(idx + 1) {
            match (s.platform, next.platform) {
                (Platform::Mobile, Platform::Cloud) => {
                    x.insert(format!("u_{}_{}", s.start, s.end), 1.0);
                }
                (Platform::Cloud, Platform::Mobile) => {
                    x.insert(format!("d_{}_{}", s.start, s.end), 1.0);
                }
                _ => {}
            }
        }
    }
    x
}
