//! Line-based text formats for systems (`.pks`) and joint distributions.
//!
//! ```text
//! descriptor X1 2
//! descriptor X2 2
//! absolute X1 : 0.5 0.5
//! conditional X2 given X1 : 0.9 0.1  0.2 0.8
//! ```
//!
//! Tables are lexicographic over the listed descriptors with the first one
//! most significant. Conditional tables list one row per given state, each
//! row over the target states. `#` starts a comment.

use crate::error::{Error, Result};
use crate::event_space::{Descriptor, EventSpace, JointDistribution};
use crate::system::{ComponentTable, ProbabilitySystem, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Debug, Clone)]
struct Token<'a> {
    text: &'a str,
    pos: Pos,
}

fn parse_err(pos: Pos, message: impl Into<String>) -> Error {
    Error::Parse {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

/// Splits a line into whitespace-separated tokens with 1-based columns,
/// dropping everything after `#`.
fn tokenize(line: &str, line_no: usize) -> Vec<Token<'_>> {
    let content = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in content.char_indices().chain(std::iter::once((content.len(), ' '))) {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(Token {
                    text: &content[s..i],
                    pos: Pos {
                        line: line_no,
                        column: content[..s].chars().count() + 1,
                    },
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    out
}

fn parse_probability(tok: &Token<'_>) -> Result<f64> {
    let t = tok.text;
    let well_formed = !t.is_empty()
        && t.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))
        && t.chars().any(|c| c.is_ascii_digit());
    match t.parse::<f64>() {
        Ok(v) if well_formed && v.is_finite() => Ok(v),
        _ => Err(parse_err(tok.pos, format!("malformed number '{t}'"))),
    }
}

/// A parsed system together with where each component came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemFile {
    pub system: ProbabilitySystem,
    /// Source line of each component, in system order.
    pub component_lines: Vec<usize>,
}

pub fn parse_system(text: &str, table_tol: f64) -> Result<ProbabilitySystem> {
    parse_system_file(text, table_tol).map(|f| f.system)
}

pub fn parse_system_file(text: &str, table_tol: f64) -> Result<SystemFile> {
    let lines: Vec<Vec<Token<'_>>> = text
        .lines()
        .enumerate()
        .map(|(i, l)| tokenize(l, i + 1))
        .collect();

    let mut descriptors: Vec<(Descriptor, Pos)> = Vec::new();
    for toks in &lines {
        let Some(head) = toks.first() else { continue };
        if head.text != "descriptor" {
            continue;
        }
        if toks.len() != 3 {
            return Err(parse_err(head.pos, "expected 'descriptor <name> <arity>'"));
        }
        let name = toks[1].text;
        if descriptors.iter().any(|(d, _)| d.name == name) {
            return Err(parse_err(toks[1].pos, format!("descriptor {name} declared twice")));
        }
        if matches!(name, "given" | "descriptor" | "absolute" | "conditional" | ":") {
            return Err(parse_err(toks[1].pos, format!("'{name}' is reserved")));
        }
        let arity: usize = toks[2]
            .text
            .parse()
            .map_err(|_| parse_err(toks[2].pos, format!("malformed arity '{}'", toks[2].text)))?;
        if arity < 2 {
            return Err(parse_err(toks[2].pos, format!("arity of {name} must be at least 2")));
        }
        descriptors.push((Descriptor::new(name, arity), toks[0].pos));
    }
    if descriptors.is_empty() {
        return Err(parse_err(Pos { line: 1, column: 1 }, "no descriptors declared"));
    }
    let space = EventSpace::new(descriptors.iter().map(|(d, _)| d.clone()).collect())
        .map_err(|e| match e {
            Error::Capacity { .. } => e,
            e => parse_err(descriptors[0].1, e.to_string()),
        })?;

    let lookup = |tok: &Token<'_>| -> Result<usize> {
        space
            .position(tok.text)
            .ok_or_else(|| parse_err(tok.pos, format!("undeclared descriptor {}", tok.text)))
    };

    let mut entries = Vec::new();
    let mut component_lines = Vec::new();
    for toks in &lines {
        let Some(head) = toks.first() else { continue };
        let entry = match head.text {
            "descriptor" => continue,
            "absolute" | "conditional" => {
                let colon = toks
                    .iter()
                    .position(|t| t.text == ":")
                    .ok_or_else(|| parse_err(head.pos, "missing ':' before the table"))?;
                let names = &toks[1..colon];
                let numbers = toks[colon + 1..]
                    .iter()
                    .map(parse_probability)
                    .collect::<Result<Vec<f64>>>()?;
                let after_colon = toks.get(colon + 1).map_or(toks[colon].pos, |t| t.pos);
                let built = if head.text == "absolute" {
                    if names.is_empty() {
                        return Err(parse_err(head.pos, "absolute component lists no descriptors"));
                    }
                    let vars = names.iter().map(lookup).collect::<Result<Vec<_>>>()?;
                    ComponentTable::marginal(&space, vars, numbers)
                } else {
                    let g = names
                        .iter()
                        .position(|t| t.text == "given")
                        .ok_or_else(|| parse_err(head.pos, "conditional is missing 'given'"))?;
                    if g == 0 {
                        return Err(parse_err(names[0].pos, "conditional lists no targets"));
                    }
                    if g + 1 == names.len() {
                        return Err(parse_err(names[g].pos, "conditional lists no givens"));
                    }
                    let targets = names[..g].iter().map(lookup).collect::<Result<Vec<_>>>()?;
                    let givens = names[g + 1..].iter().map(lookup).collect::<Result<Vec<_>>>()?;
                    ComponentTable::conditional(&space, targets, givens, numbers)
                };
                built.map_err(|e| match e {
                    Error::Domain(msg) => parse_err(after_colon, msg),
                    other => other,
                })?
            }
            other => {
                return Err(parse_err(head.pos, format!("unknown directive '{other}'")));
            }
        };
        if let Some(j) = entries
            .iter()
            .position(|e: &ComponentTable| e.component.same_as(&entry.component))
        {
            return Err(parse_err(
                head.pos,
                format!("duplicates the component on line {}", component_lines[j]),
            ));
        }
        entries.push(entry);
        component_lines.push(head.pos.line);
    }

    let system = ProbabilitySystem::new(space, entries)?;
    let mut violations = system.validate(table_tol);
    if !violations.is_empty() {
        for v in &mut violations {
            v.line = component_lines.get(v.component).copied();
        }
        return Err(Error::Validation(violations));
    }
    Ok(SystemFile {
        system,
        component_lines,
    })
}

/// Writes a system in the format [`parse_system`] reads. Undefined
/// conditional rows have no textual form and are written as uniform rows.
pub fn write_system(pc: &ProbabilitySystem) -> String {
    let space = pc.space();
    let mut out = String::new();
    for d in space.descriptors() {
        out.push_str(&format!("descriptor {} {}\n", d.name, d.arity));
    }
    for e in pc.entries() {
        match &e.table {
            Table::Marginal(t) => {
                out.push_str(&format!(
                    "absolute {} : {}\n",
                    space.names(&t.vars).join(" "),
                    join_numbers(&t.probs)
                ));
            }
            Table::Conditional(t) => {
                let rows: Vec<String> = t
                    .rows
                    .iter()
                    .map(|r| match r {
                        Some(r) => join_numbers(r),
                        None => join_numbers(&vec![1.0 / t.target_size as f64; t.target_size]),
                    })
                    .collect();
                out.push_str(&format!(
                    "conditional {} given {} : {}\n",
                    space.names(&t.targets).join(" "),
                    space.names(&t.givens).join(" "),
                    rows.join("  ")
                ));
            }
        }
    }
    out
}

fn join_numbers(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ")
}

/// Parses the `joint` format written by [`write_joint`].
pub fn parse_joint(text: &str, tol: f64) -> Result<JointDistribution> {
    let lines: Vec<Vec<Token<'_>>> = text
        .lines()
        .enumerate()
        .map(|(i, l)| tokenize(l, i + 1))
        .filter(|t| !t.is_empty())
        .collect();
    let mut it = lines.iter();
    let head = it
        .next()
        .ok_or_else(|| parse_err(Pos { line: 1, column: 1 }, "empty joint file"))?;
    if head[0].text != "joint" || head.len() != 1 {
        return Err(parse_err(head[0].pos, "expected 'joint' header"));
    }
    let mut descriptors = Vec::new();
    let mut values: Option<(Vec<f64>, Pos)> = None;
    for toks in it {
        match toks[0].text {
            "descriptor" if values.is_none() => {
                if toks.len() != 3 {
                    return Err(parse_err(toks[0].pos, "expected 'descriptor <name> <arity>'"));
                }
                let arity: usize = toks[2].text.parse().map_err(|_| {
                    parse_err(toks[2].pos, format!("malformed arity '{}'", toks[2].text))
                })?;
                descriptors.push(Descriptor::new(toks[1].text, arity));
            }
            "values" if values.is_none() => {
                if toks.get(1).map(|t| t.text) != Some(":") {
                    return Err(parse_err(toks[0].pos, "expected 'values : ...'"));
                }
                let v = toks[2..].iter().map(parse_probability).collect::<Result<Vec<_>>>()?;
                values = Some((v, toks[0].pos));
            }
            other => {
                return Err(parse_err(toks[0].pos, format!("unexpected '{other}'")));
            }
        }
    }
    let (values, pos) =
        values.ok_or_else(|| parse_err(head[0].pos, "joint file has no 'values' line"))?;
    let space = EventSpace::new(descriptors).map_err(|e| match e {
        Error::Capacity { .. } => e,
        e => parse_err(head[0].pos, e.to_string()),
    })?;
    JointDistribution::with_tolerance(space, values, tol).map_err(|e| parse_err(pos, e.to_string()))
}

pub fn write_joint(p: &JointDistribution) -> String {
    let mut out = String::from("joint\n");
    for d in p.space().descriptors() {
        out.push_str(&format!("descriptor {} {}\n", d.name, d.arity));
    }
    out.push_str(&format!("values : {}\n", join_numbers(p.probabilities())));
    out
}
