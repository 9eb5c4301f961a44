//! Extensions of a probability system to a full joint distribution.
//!
//! * The product extension multiplies the component tables together. For a
//!   conditional web it is a distribution and is compatible with the system.
//! * The maximum-entropy extension is the compatible distribution of largest
//!   entropy. It is found by cyclic I-projection (iterative scaling) starting
//!   from the uniform distribution: each component in turn is matched exactly
//!   by the smallest relative-entropy change. On a forest the two coincide.

use crate::error::{Error, Result};
use crate::event_space::{entropy_of, ConditionalTable, JointDistribution};
use crate::structure::{Component, Structure};
use crate::system::{
    CompiledTable, ComponentTable, ConsistencyReport, ConsistencyStatus, ProbabilitySystem, Table,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Largest allowed cell residual at convergence.
    pub residual_tol: f64,
    /// Largest relative entropy change between sweeps at convergence.
    pub entropy_tol: f64,
    pub max_iterations: usize,
    /// Exponent applied to every scaling factor, in (0, 1].
    pub damping: f64,
    pub max_states: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            residual_tol: 1e-8,
            entropy_tol: 1e-9,
            max_iterations: 100_000,
            damping: 1.0,
            max_states: crate::event_space::DEFAULT_STATE_CAP,
        }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.residual_tol > 0.0 && self.entropy_tol > 0.0) {
            return Err(Error::domain("solver tolerances must be positive"));
        }
        if self.max_iterations < 1 {
            return Err(Error::domain("max_iterations must be at least 1"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::domain("damping must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Product,
    MaxEnt,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Product => "product",
            Method::MaxEnt => "maxent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionResult {
    pub distribution: JointDistribution,
    pub method: Method,
    /// Full sweeps over the components; zero for the product.
    pub iterations: usize,
    pub max_residual: f64,
    /// Nats.
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfoReport {
    /// Largest entropy over the compatible distributions, in nats.
    pub value: f64,
    pub distribution: JointDistribution,
    pub iterations: usize,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubforestValue {
    pub components: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestSearchResult {
    /// Indices into the searched system.
    pub best_components: Vec<usize>,
    pub best: Structure,
    pub best_value: f64,
    /// Information value of the whole system, when it is consistent.
    pub full_value: Option<f64>,
    /// `best_value - full_value`.
    pub information_loss: Option<f64>,
    pub evaluated: Vec<SubforestValue>,
}

/// Values closer than this are treated as tied when ranking subforests.
pub const FOREST_TIE_TOL: f64 = 1e-6;

/// Product of the component tables at every joint state. Requires a
/// conditional web.
pub fn product_extension(pc: &ProbabilitySystem) -> Result<ExtensionResult> {
    let structure = pc.structure();
    if structure.is_empty() {
        return Err(Error::Precondition("system has no components".into()));
    }
    let class = structure.classify()?;
    if !class.is_web {
        return Err(Error::Precondition(
            "product extension needs a conditional web; structure is not a web".into(),
        ));
    }
    if !class.is_conditional_web {
        return Err(Error::Precondition(
            "product extension needs a conditional web; absolute components overlap \
             (see conditional_form)"
                .into(),
        ));
    }
    let compiled = pc.compile();
    let m = pc.space().state_count();
    let mut probs = vec![1.0; m];
    for c in &compiled {
        match c {
            CompiledTable::Marginal { proj, table } => {
                for (p, &k) in probs.iter_mut().zip(proj) {
                    *p *= table.probs[k];
                }
            }
            CompiledTable::Conditional { tproj, gproj, table } => {
                for (i, p) in probs.iter_mut().enumerate() {
                    *p *= table.entry(tproj[i], gproj[i]);
                }
            }
        }
    }
    let max_residual = pc.worst_residual(&compiled, &probs).0;
    let distribution = JointDistribution::from_parts(pc.space().clone(), probs);
    Ok(ExtensionResult {
        entropy: distribution.entropy(),
        distribution,
        method: Method::Product,
        iterations: 0,
        max_residual,
    })
}

/// Rewrites a web so that its absolute components are disjoint: every
/// absolute component that shares descriptors with components built before it
/// becomes `(fresh | shared)` with its table conditioned on the shared part.
/// Returns the new system and the indices of the converted components.
pub fn conditional_form(pc: &ProbabilitySystem) -> Result<(ProbabilitySystem, Vec<usize>)> {
    let peels = pc.structure().unpack()?;
    let space = pc.space();
    let mut entries = pc.entries().to_vec();
    let mut converted = Vec::new();
    for split in &peels {
        let i = split.component;
        let Table::Marginal(table) = &pc.entries()[i].table else {
            continue;
        };
        if split.connector.is_empty() {
            continue;
        }
        let (fresh, shared) = (&split.fresh, &split.connector);
        let tsize = space.sub_size(fresh);
        let gsize = space.sub_size(shared);
        let mut cells = vec![0.0; tsize * gsize];
        let pos = |v: usize| table.vars.iter().position(|&u| u == v).expect("var in table");
        for (k, p) in table.probs.iter().enumerate() {
            let states = space.sub_assignment(&table.vars, k);
            let sub = |vars: &[usize]| {
                vars.iter()
                    .fold(0, |acc, &v| acc * space.arity(v) + states[pos(v)])
            };
            cells[sub(shared) * tsize + sub(fresh)] += p;
        }
        let rows = cells
            .chunks(tsize)
            .map(|r| {
                let d: f64 = r.iter().sum();
                (d > 0.0).then(|| r.iter().map(|x| x / d).collect())
            })
            .collect();
        entries[i] = ComponentTable {
            component: Component::conditional(fresh.clone(), shared.clone())?,
            table: Table::Conditional(ConditionalTable {
                targets: fresh.clone(),
                givens: shared.clone(),
                target_size: tsize,
                rows,
            }),
        };
        converted.push(i);
    }
    converted.sort_unstable();
    Ok((ProbabilitySystem::new(space.clone(), entries)?, converted))
}

/// Iterative scaling without the feasibility pre-check.
pub(crate) fn scale_to_maxent(
    pc: &ProbabilitySystem,
    cfg: &SolverConfig,
) -> Result<ExtensionResult> {
    let compiled = pc.compile();
    let m = pc.space().state_count();
    let mut p = vec![1.0 / m as f64; m];
    let mut entropy = entropy_of(&p);
    let mut residual = pc.worst_residual(&compiled, &p).0;
    if residual <= cfg.residual_tol {
        return Ok(maxent_result(pc, p, 0, residual));
    }
    for sweep in 1..=cfg.max_iterations {
        for c in &compiled {
            project(c, &mut p, cfg.damping);
        }
        residual = pc.worst_residual(&compiled, &p).0;
        let next = entropy_of(&p);
        let settled = (next - entropy).abs() <= cfg.entropy_tol * next.abs().max(1.0);
        entropy = next;
        if residual <= cfg.residual_tol && settled {
            return Ok(maxent_result(pc, p, sweep, residual));
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iterations,
        residual,
        last: Box::new(JointDistribution::from_parts(pc.space().clone(), p)),
    })
}

fn maxent_result(pc: &ProbabilitySystem, p: Vec<f64>, iterations: usize, residual: f64) -> ExtensionResult {
    let distribution = JointDistribution::from_parts(pc.space().clone(), p);
    ExtensionResult {
        entropy: distribution.entropy(),
        distribution,
        method: Method::MaxEnt,
        iterations,
        max_residual: residual,
    }
}

/// I-projection of `p` onto the distributions matching one component.
///
/// Marginal: rescale each cell to its target mass. Conditional: inside the
/// slice of given state `w`, multiply target state `z` by
/// `r(z)/q(z|w) · exp(-KL(r ‖ q(·|w)))`, then renormalize globally. The
/// exponential factor is what makes the step a projection rather than a
/// mass-preserving rescale.
fn project(c: &CompiledTable<'_>, p: &mut [f64], damping: f64) {
    let damp = |f: f64| if damping == 1.0 { f } else { f.powf(damping) };
    match c {
        CompiledTable::Marginal { proj, table } => {
            let mut sums = vec![0.0; table.probs.len()];
            for (x, &k) in p.iter().zip(proj.iter()) {
                sums[k] += x;
            }
            let factors: Vec<f64> = sums
                .iter()
                .zip(&table.probs)
                .map(|(&s, &t)| if s > 0.0 { damp(t / s) } else { 0.0 })
                .collect();
            for (x, &k) in p.iter_mut().zip(proj.iter()) {
                *x *= factors[k];
            }
        }
        CompiledTable::Conditional { tproj, gproj, table } => {
            let ts = table.target_size;
            let mut cells = vec![0.0; ts * table.rows.len()];
            for (i, x) in p.iter().enumerate() {
                cells[gproj[i] * ts + tproj[i]] += x;
            }
            let mut factors = vec![1.0; cells.len()];
            for (given, row) in table.rows.iter().enumerate() {
                let Some(row) = row else { continue };
                let slice = &cells[given * ts..(given + 1) * ts];
                let pw: f64 = slice.iter().sum();
                if pw <= 0.0 {
                    continue;
                }
                let mut kl = 0.0;
                let mut reachable = true;
                for (&q, &r) in slice.iter().zip(row) {
                    if r > 0.0 {
                        if q <= 0.0 {
                            reachable = false;
                            break;
                        }
                        kl += r * (r * pw / q).ln();
                    }
                }
                let scale = if reachable { (-kl).exp() } else { 0.0 };
                for (z, (&q, &r)) in slice.iter().zip(row).enumerate() {
                    let f = if r > 0.0 && q > 0.0 {
                        scale * r * pw / q
                    } else {
                        0.0
                    };
                    factors[given * ts + z] = damp(f);
                }
            }
            for (i, x) in p.iter_mut().enumerate() {
                *x *= factors[gproj[i] * ts + tproj[i]];
            }
        }
    }
    let total: f64 = p.iter().sum();
    if total > 0.0 {
        for x in p.iter_mut() {
            *x /= total;
        }
    }
}

/// The entropy-maximizing distribution among those compatible with `pc`.
pub fn maxent_extension(pc: &ProbabilitySystem, cfg: &SolverConfig) -> Result<ExtensionResult> {
    cfg.check()?;
    let feas = pc.feasibility(cfg)?;
    if feas.status == ConsistencyStatus::Inconsistent {
        return Err(Error::Infeasible(Box::new(ConsistencyReport {
            status: feas.status,
            witness: None,
            max_residual: feas.objective,
            phase_one_objective: feas.objective,
            witness_is_maxent: false,
            certificate: feas.certificate,
            residual_lower_bound: feas.lower_bound,
            vacuous_rows: Vec::new(),
        })));
    }
    scale_to_maxent(pc, cfg)
}

/// Information value: the largest entropy any compatible distribution attains.
pub fn information(pc: &ProbabilitySystem, cfg: &SolverConfig) -> Result<InfoReport> {
    let r = maxent_extension(pc, cfg)?;
    Ok(InfoReport {
        value: r.entropy,
        distribution: r.distribution,
        iterations: r.iterations,
        max_residual: r.max_residual,
    })
}

/// Evaluates every subforest of `pc` and returns the one with the smallest
/// information value (the tightest bound on residual uncertainty). Ties go to
/// the subforest with more components, then to the lower subset mask.
pub fn most_informative_forest(
    pc: &ProbabilitySystem,
    cfg: &SolverConfig,
) -> Result<ForestSearchResult> {
    let structure = pc.structure();
    let candidates = structure.subforest_indices()?;
    if candidates.is_empty() {
        return Err(Error::Precondition("structure contains no forest".into()));
    }
    let mut evaluated = Vec::with_capacity(candidates.len());
    for ix in candidates {
        let value = information(&pc.restrict(&ix), cfg)?.value;
        evaluated.push(SubforestValue {
            components: ix,
            value,
        });
    }
    let mut best = &evaluated[0];
    for cand in &evaluated[1..] {
        let better = cand.value < best.value - FOREST_TIE_TOL
            || ((cand.value - best.value).abs() <= FOREST_TIE_TOL
                && cand.components.len() > best.components.len());
        if better {
            best = cand;
        }
    }
    let full_value = match information(pc, cfg) {
        Ok(r) => Some(r.value),
        Err(Error::Infeasible(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ForestSearchResult {
        best_components: best.components.clone(),
        best: structure.subset(&best.components),
        best_value: best.value,
        information_loss: full_value.map(|f| best.value - f),
        full_value,
        evaluated,
    })
}
