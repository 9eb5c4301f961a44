//! Probability systems: a structure together with one table per component.
//!
//! The set of joint distributions compatible with a system is a polytope.
//! [`ProbabilitySystem::constraints`] writes it out as linear equalities over
//! the joint-state probabilities, and [`ProbabilitySystem::is_consistent`]
//! decides whether it is empty.

use std::fmt;

use crate::error::{Error, Result};
use crate::event_space::{ConditionalTable, EventSpace, JointDistribution, MarginalTable};
use crate::extension::{self, SolverConfig};
use crate::simplex;
use crate::structure::{Component, Structure};

/// Phase-one objective at or below which a system counts as feasible.
pub const FEASIBLE_TOL: f64 = 1e-8;
/// Phase-one objective at or above which a system counts as infeasible.
pub const INFEASIBLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Marginal(MarginalTable),
    Conditional(ConditionalTable),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentTable {
    pub component: Component,
    pub table: Table,
}

impl ComponentTable {
    pub fn marginal(space: &EventSpace, vars: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        Ok(Self::from_marginal(MarginalTable::new(space, vars, probs)?))
    }

    /// `flat` holds one row per given state (lexicographic), each over the
    /// target states.
    pub fn conditional(
        space: &EventSpace,
        targets: Vec<usize>,
        givens: Vec<usize>,
        flat: Vec<f64>,
    ) -> Result<Self> {
        Ok(Self::from_conditional(ConditionalTable::new(
            space, targets, givens, flat,
        )?))
    }

    pub fn from_marginal(table: MarginalTable) -> Self {
        ComponentTable {
            component: Component::absolute(table.vars.clone())
                .expect("marginal tables have nonempty distinct vars"),
            table: Table::Marginal(table),
        }
    }

    pub fn from_conditional(table: ConditionalTable) -> Self {
        ComponentTable {
            component: Component::conditional(table.targets.clone(), table.givens.clone())
                .expect("conditional tables have valid target/given sets"),
            table: Table::Conditional(table),
        }
    }
}

/// One problem found by [`ProbabilitySystem::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub component: usize,
    /// Source line, when the system came from a file.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}, component {}: {}", self.component, self.message),
            None => write!(f, "component {}: {}", self.component, self.message),
        }
    }
}

/// Which table cell a linear constraint came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintTag {
    Marginal { component: usize, state: usize },
    Conditional { component: usize, given: usize, target: usize },
    Normalization,
}

impl fmt::Display for ConstraintTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintTag::Marginal { component, state } => {
                write!(f, "component {component} state {state}")
            }
            ConstraintTag::Conditional {
                component,
                given,
                target,
            } => write!(f, "component {component} given-state {given} target-state {target}"),
            ConstraintTag::Normalization => write!(f, "normalization"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub tag: ConstraintTag,
}

impl ConstraintRow {
    pub fn residual(&self, p: &[f64]) -> f64 {
        self.coeffs.iter().zip(p).map(|(a, x)| a * x).sum::<f64>() - self.rhs
    }
}

/// `rows · p = rhs` together with `p >= 0`. The last row is normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    pub variables: usize,
    pub rows: Vec<ConstraintRow>,
}

impl ConstraintSet {
    pub fn residuals(&self, p: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.residual(p)).collect()
    }

    pub fn max_residual(&self, p: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|r| r.residual(p).abs())
            .fold(0.0, f64::max)
    }

    pub fn count(&self, pred: impl Fn(&ConstraintTag) -> bool) -> usize {
        self.rows.iter().filter(|r| pred(&r.tag)).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compatibility {
    pub compatible: bool,
    pub max_residual: f64,
    pub worst: Option<ConstraintTag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConsistencyStatus {
    Consistent,
    Inconsistent,
    /// The phase-one objective fell between the two thresholds.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub status: ConsistencyStatus,
    pub witness: Option<JointDistribution>,
    /// Largest residual of the witness over every table cell, or the
    /// phase-one objective when there is no witness.
    pub max_residual: f64,
    /// Least total absolute violation any nonnegative table can achieve.
    pub phase_one_objective: f64,
    pub witness_is_maxent: bool,
    /// Constraints with nonzero Farkas multiplier; nonempty only when inconsistent.
    pub certificate: Vec<ConstraintTag>,
    /// Lower bound on the largest residual of any joint distribution,
    /// derived from the certificate.
    pub residual_lower_bound: f64,
    /// (component, given state) pairs whose conditioning event has zero
    /// probability under the witness, so the row constrains nothing.
    pub vacuous_rows: Vec<(usize, usize)>,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.status == ConsistencyStatus::Consistent
    }

    pub fn summary(&self) -> String {
        match self.status {
            ConsistencyStatus::Consistent => {
                format!("consistent (witness residual {:e})", self.max_residual)
            }
            ConsistencyStatus::Inconsistent => format!(
                "inconsistent (least L1 violation {:e}, {} constraints in certificate)",
                self.phase_one_objective,
                self.certificate.len()
            ),
            ConsistencyStatus::Indeterminate => format!(
                "indeterminate (least L1 violation {:e})",
                self.phase_one_objective
            ),
        }
    }
}

/// Per-component index maps used when evaluating tables against a joint.
pub(crate) enum CompiledTable<'a> {
    Marginal {
        proj: Vec<usize>,
        table: &'a MarginalTable,
    },
    Conditional {
        tproj: Vec<usize>,
        gproj: Vec<usize>,
        table: &'a ConditionalTable,
    },
}

impl CompiledTable<'_> {
    /// Homogeneous residuals of every cell, paired with their tags.
    pub(crate) fn residuals(&self, component: usize, p: &[f64], out: &mut Vec<(f64, ConstraintTag)>) {
        match self {
            CompiledTable::Marginal { proj, table } => {
                let mut sums = vec![0.0; table.probs.len()];
                for (x, &k) in p.iter().zip(proj) {
                    sums[k] += x;
                }
                for (state, (s, t)) in sums.iter().zip(&table.probs).enumerate() {
                    out.push(((s - t).abs(), ConstraintTag::Marginal { component, state }));
                }
            }
            CompiledTable::Conditional { tproj, gproj, table } => {
                let ts = table.target_size;
                let mut cells = vec![0.0; ts * table.rows.len()];
                for (i, x) in p.iter().enumerate() {
                    cells[gproj[i] * ts + tproj[i]] += x;
                }
                for (given, row) in table.rows.iter().enumerate() {
                    let Some(row) = row else { continue };
                    let slice = &cells[given * ts..(given + 1) * ts];
                    let pw: f64 = slice.iter().sum();
                    for (target, (pzw, r)) in slice.iter().zip(row).enumerate() {
                        out.push((
                            (pzw - r * pw).abs(),
                            ConstraintTag::Conditional {
                                component,
                                given,
                                target,
                            },
                        ));
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilitySystem {
    space: EventSpace,
    entries: Vec<ComponentTable>,
}

impl ProbabilitySystem {
    pub fn new(space: EventSpace, entries: Vec<ComponentTable>) -> Result<Self> {
        // Reuses the structure checks (descriptors in range, no duplicates).
        Structure::new(
            space.clone(),
            entries.iter().map(|e| e.component.clone()).collect(),
        )?;
        for e in &entries {
            let shape_ok = match &e.table {
                Table::Marginal(t) => {
                    t.probs.len() == space.sub_size(&t.vars) && t.vars == e.component.targets()
                }
                Table::Conditional(t) => {
                    t.rows.len() == space.sub_size(&t.givens)
                        && t.target_size == space.sub_size(&t.targets)
                        && t.targets == e.component.targets()
                        && t.givens == e.component.givens()
                        && t.rows.iter().flatten().all(|r| r.len() == t.target_size)
                }
            };
            if !shape_ok {
                return Err(Error::domain(format!(
                    "table shape does not match component {}",
                    e.component.label(&space)
                )));
            }
        }
        Ok(ProbabilitySystem { space, entries })
    }

    /// Reads every component's table off `p`.
    pub fn read_off(p: &JointDistribution, structure: &Structure) -> Result<Self> {
        let entries = structure
            .components()
            .iter()
            .map(|c| {
                Ok(if c.is_absolute() {
                    ComponentTable::from_marginal(p.marginalize(c.targets())?)
                } else {
                    ComponentTable::from_conditional(p.conditionalize(c.targets(), c.givens())?)
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(p.space().clone(), entries)
    }

    pub fn space(&self) -> &EventSpace {
        &self.space
    }

    pub fn entries(&self) -> &[ComponentTable] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn structure(&self) -> Structure {
        Structure::new(
            self.space.clone(),
            self.entries.iter().map(|e| e.component.clone()).collect(),
        )
        .expect("checked at construction")
    }

    /// The system made of the listed entries.
    pub fn restrict(&self, indices: &[usize]) -> ProbabilitySystem {
        ProbabilitySystem {
            space: self.space.clone(),
            entries: indices.iter().map(|&i| self.entries[i].clone()).collect(),
        }
    }

    /// Normalization problems in the tables; empty means valid.
    pub fn validate(&self, tol: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |component: usize, message: String| {
            out.push(Violation {
                component,
                line: None,
                message,
            })
        };
        for (i, e) in self.entries.iter().enumerate() {
            match &e.table {
                Table::Marginal(t) => {
                    if let Some(msg) = row_problem(&t.probs, tol) {
                        push(i, msg);
                    }
                }
                Table::Conditional(t) => {
                    for (w, row) in t.rows.iter().enumerate() {
                        if let Some(msg) = row.as_deref().and_then(|r| row_problem(r, tol)) {
                            push(i, format!("given-state {w}: {msg}"));
                        }
                    }
                }
            }
        }
        out
    }

    pub(crate) fn compile(&self) -> Vec<CompiledTable<'_>> {
        self.entries
            .iter()
            .map(|e| match &e.table {
                Table::Marginal(t) => CompiledTable::Marginal {
                    proj: self.space.projection(&t.vars),
                    table: t,
                },
                Table::Conditional(t) => CompiledTable::Conditional {
                    tproj: self.space.projection(&t.targets),
                    gproj: self.space.projection(&t.givens),
                    table: t,
                },
            })
            .collect()
    }

    /// Worst residual over every table cell. Conditional cells use the
    /// multiplied-through form `|P(z,w) - P(z|w)·P(w)|`, which is at most
    /// `P(w)` and so vanishes on zero-probability conditioning events.
    pub(crate) fn worst_residual(&self, compiled: &[CompiledTable<'_>], p: &[f64]) -> (f64, Option<ConstraintTag>) {
        let mut cells = Vec::new();
        for (i, c) in compiled.iter().enumerate() {
            c.residuals(i, p, &mut cells);
        }
        let total: f64 = p.iter().sum();
        cells.push(((total - 1.0).abs(), ConstraintTag::Normalization));
        cells
            .into_iter()
            .fold((0.0, None), |(best, tag), (r, t)| {
                if r > best {
                    (r, Some(t))
                } else {
                    (best, tag)
                }
            })
    }

    pub fn compatible(&self, p: &JointDistribution, tol: f64) -> Result<Compatibility> {
        if p.space() != &self.space {
            return Err(Error::domain("distribution and system use different event spaces"));
        }
        let (max_residual, worst) = self.worst_residual(&self.compile(), p.probabilities());
        Ok(Compatibility {
            compatible: max_residual <= tol,
            max_residual,
            worst,
        })
    }

    /// Linear equalities whose nonnegative solutions are the compatible
    /// distributions. The last state of every marginal table and of every
    /// conditional row is implied by the others and is left out.
    pub fn constraints(&self) -> ConstraintSet {
        let m = self.space.state_count();
        let mut rows = Vec::new();
        for (component, (e, compiled)) in self.entries.iter().zip(self.compile()).enumerate() {
            match compiled {
                CompiledTable::Marginal { proj, table } => {
                    for state in 0..table.probs.len() - 1 {
                        let coeffs = proj.iter().map(|&k| f64::from(k == state)).collect();
                        rows.push(ConstraintRow {
                            coeffs,
                            rhs: table.probs[state],
                            tag: ConstraintTag::Marginal { component, state },
                        });
                    }
                }
                CompiledTable::Conditional { tproj, gproj, table } => {
                    debug_assert!(!e.component.is_absolute());
                    for (given, row) in table.rows.iter().enumerate() {
                        let Some(row) = row else { continue };
                        for target in 0..table.target_size - 1 {
                            let coeffs = (0..m)
                                .map(|i| {
                                    if gproj[i] != given {
                                        0.0
                                    } else {
                                        f64::from(tproj[i] == target) - row[target]
                                    }
                                })
                                .collect();
                            rows.push(ConstraintRow {
                                coeffs,
                                rhs: 0.0,
                                tag: ConstraintTag::Conditional {
                                    component,
                                    given,
                                    target,
                                },
                            });
                        }
                    }
                }
            }
        }
        rows.push(ConstraintRow {
            coeffs: vec![1.0; m],
            rhs: 1.0,
            tag: ConstraintTag::Normalization,
        });
        ConstraintSet { variables: m, rows }
    }

    /// Runs phase one only: no witness search.
    pub(crate) fn feasibility(&self, cfg: &SolverConfig) -> Result<Feasibility> {
        let m = self.space.state_count();
        if m > cfg.max_states {
            return Err(Error::Capacity {
                what: "joint states",
                requested: m as u128,
                limit: cfg.max_states as u128,
            });
        }
        let cs = self.constraints();
        let a: Vec<Vec<f64>> = cs.rows.iter().map(|r| r.coeffs.clone()).collect();
        let b: Vec<f64> = cs.rows.iter().map(|r| r.rhs).collect();
        let lp = simplex::phase_one(&a, &b)?;
        let status = if !lp.finished {
            ConsistencyStatus::Indeterminate
        } else if lp.objective <= FEASIBLE_TOL {
            ConsistencyStatus::Consistent
        } else if lp.objective >= INFEASIBLE_TOL {
            ConsistencyStatus::Inconsistent
        } else {
            ConsistencyStatus::Indeterminate
        };
        let (certificate, lower_bound) = if status == ConsistencyStatus::Inconsistent {
            let ymax = lp.dual.iter().fold(0.0f64, |a, y| a.max(y.abs()));
            let tags = cs
                .rows
                .iter()
                .zip(&lp.dual)
                .filter(|(_, y)| y.abs() > 1e-9)
                .map(|(r, _)| r.tag)
                .collect();
            let by: f64 = b.iter().zip(&lp.dual).map(|(b, y)| b * y).sum();
            // For p >= 0, yᵀ(Ap - b) <= -yᵀb, so some row is off by at least
            // yᵀb / ‖y‖₁.
            let y1: f64 = lp.dual.iter().map(|y| y.abs()).sum();
            (tags, if ymax > 0.0 { (by / y1).max(0.0) } else { 0.0 })
        } else {
            (Vec::new(), 0.0)
        };
        Ok(Feasibility {
            status,
            objective: lp.objective,
            vertex: lp.x,
            certificate,
            lower_bound,
        })
    }

    /// Decides whether any joint distribution is compatible with the system.
    /// A consistent report carries the maximum-entropy compatible
    /// distribution as witness.
    pub fn is_consistent(&self, cfg: &SolverConfig) -> Result<ConsistencyReport> {
        cfg.check()?;
        let feas = self.feasibility(cfg)?;
        let mut report = ConsistencyReport {
            status: feas.status,
            witness: None,
            max_residual: feas.objective,
            phase_one_objective: feas.objective,
            witness_is_maxent: false,
            certificate: feas.certificate,
            residual_lower_bound: feas.lower_bound,
            vacuous_rows: Vec::new(),
        };
        if feas.status != ConsistencyStatus::Consistent {
            return Ok(report);
        }
        let compiled = self.compile();
        let witness = match extension::scale_to_maxent(self, cfg) {
            Ok(run) => {
                report.witness_is_maxent = true;
                run.distribution
            }
            Err(Error::NonConvergence { .. }) => {
                let total: f64 = feas.vertex.iter().sum();
                let probs = feas.vertex.iter().map(|x| x / total).collect();
                JointDistribution::from_parts(self.space.clone(), probs)
            }
            Err(e) => return Err(e),
        };
        report.max_residual = self.worst_residual(&compiled, witness.probabilities()).0;
        report.vacuous_rows = self.vacuous_rows(&witness);
        report.witness = Some(witness);
        Ok(report)
    }

    /// Conditional rows whose conditioning event has zero mass under `p`.
    pub fn vacuous_rows(&self, p: &JointDistribution) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            if let Table::Conditional(t) = &e.table {
                let Ok(m) = p.marginalize(&t.givens) else { continue };
                for (w, row) in t.rows.iter().enumerate() {
                    if row.is_some() && m.probs[w] <= 0.0 {
                        out.push((i, w));
                    }
                }
            }
        }
        out
    }
}

pub(crate) struct Feasibility {
    pub status: ConsistencyStatus,
    pub objective: f64,
    pub vertex: Vec<f64>,
    pub certificate: Vec<ConstraintTag>,
    pub lower_bound: f64,
}

fn row_problem(row: &[f64], tol: f64) -> Option<String> {
    if let Some(v) = row.iter().find(|v| !v.is_finite()) {
        return Some(format!("non-finite entry {v}"));
    }
    if let Some(v) = row.iter().find(|v| **v < 0.0) {
        return Some(format!("negative entry {v}"));
    }
    let sum: f64 = row.iter().sum();
    ((sum - 1.0).abs() > tol).then(|| format!("row sums to {sum}"))
}
