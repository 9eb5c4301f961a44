//! Finite event spaces and dense distributions over their joint states.
//!
//! Joint states are numbered in mixed radix with the first descriptor most
//! significant, so for three binary descriptors `(1, 0, 1)` is index 5.
//! Sub-tables over an ordered descriptor list follow the same convention
//! relative to that list.

use std::fmt;

use crate::error::{Error, Result};

/// Default cap on the number of joint states a space may have.
pub const DEFAULT_STATE_CAP: usize = 1 << 20;

/// Default tolerance for "sums to one" checks.
pub const DEFAULT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Descriptor {
    pub name: String,
    pub arity: usize,
}

impl Descriptor {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        Descriptor {
            name: name.into(),
            arity,
        }
    }
}

/// An ordered list of descriptors. Descriptors are referred to by position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSpace {
    descriptors: Vec<Descriptor>,
    strides: Vec<usize>,
    size: usize,
}

impl EventSpace {
    pub fn new(descriptors: Vec<Descriptor>) -> Result<Self> {
        Self::with_cap(descriptors, DEFAULT_STATE_CAP)
    }

    /// Builds a space, rejecting it if the joint-state count exceeds `cap`.
    pub fn with_cap(descriptors: Vec<Descriptor>, cap: usize) -> Result<Self> {
        if descriptors.is_empty() {
            return Err(Error::domain("an event space needs at least one descriptor"));
        }
        for (i, d) in descriptors.iter().enumerate() {
            if d.name.is_empty() {
                return Err(Error::domain(format!("descriptor {i} has an empty name")));
            }
            if d.arity < 2 {
                return Err(Error::domain(format!(
                    "descriptor {} has arity {}, need at least 2",
                    d.name, d.arity
                )));
            }
            if descriptors[..i].iter().any(|o| o.name == d.name) {
                return Err(Error::domain(format!("duplicate descriptor name {}", d.name)));
            }
        }
        let mut size: u128 = 1;
        for d in &descriptors {
            size = size.saturating_mul(d.arity as u128);
        }
        if size > cap as u128 {
            return Err(Error::Capacity {
                what: "joint states",
                requested: size,
                limit: cap as u128,
            });
        }
        let size = size as usize;
        let mut strides = vec![1; descriptors.len()];
        for i in (0..descriptors.len() - 1).rev() {
            strides[i] = strides[i + 1] * descriptors[i + 1].arity;
        }
        Ok(EventSpace {
            descriptors,
            strides,
            size,
        })
    }

    /// Convenience constructor for all-binary spaces.
    pub fn binary(names: &[&str]) -> Result<Self> {
        Self::new(names.iter().map(|n| Descriptor::new(*n, 2)).collect())
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn descriptors(&self) -> &[Descriptor] {
        &self.descriptors
    }

    pub fn descriptor(&self, i: usize) -> &Descriptor {
        &self.descriptors[i]
    }

    pub fn arity(&self, i: usize) -> usize {
        self.descriptors[i].arity
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.descriptors.iter().position(|d| d.name == name)
    }

    /// Number of joint states.
    pub fn state_count(&self) -> usize {
        self.size
    }

    pub fn names(&self, vars: &[usize]) -> Vec<&str> {
        vars.iter()
            .map(|&v| self.descriptors[v].name.as_str())
            .collect()
    }

    pub fn index_of(&self, states: &[usize]) -> Result<usize> {
        if states.len() != self.len() {
            return Err(Error::domain(format!(
                "assignment has {} states, space has {} descriptors",
                states.len(),
                self.len()
            )));
        }
        let mut index = 0;
        for (i, &s) in states.iter().enumerate() {
            if s >= self.arity(i) {
                return Err(Error::domain(format!(
                    "state {s} out of range for {} (arity {})",
                    self.descriptors[i].name,
                    self.arity(i)
                )));
            }
            index += s * self.strides[i];
        }
        Ok(index)
    }

    pub fn assignment_of(&self, index: usize) -> Result<Vec<usize>> {
        if index >= self.size {
            return Err(Error::domain(format!(
                "joint index {index} out of range ({} states)",
                self.size
            )));
        }
        Ok((0..self.len()).map(|i| self.digit(index, i)).collect())
    }

    /// State of descriptor `var` in joint state `index`.
    #[inline]
    pub fn digit(&self, index: usize, var: usize) -> usize {
        (index / self.strides[var]) % self.descriptors[var].arity
    }

    /// Checks that `vars` lists known descriptors without repetition.
    pub fn check_vars(&self, vars: &[usize]) -> Result<()> {
        for (k, &v) in vars.iter().enumerate() {
            if v >= self.len() {
                return Err(Error::domain(format!("unknown descriptor index {v}")));
            }
            if vars[..k].contains(&v) {
                return Err(Error::domain(format!(
                    "descriptor {} listed twice",
                    self.descriptors[v].name
                )));
            }
        }
        Ok(())
    }

    /// Number of joint states of the sub-space spanned by `vars`.
    pub fn sub_size(&self, vars: &[usize]) -> usize {
        vars.iter().map(|&v| self.arity(v)).product()
    }

    /// Maps every joint state to its index within the sub-space `vars`.
    pub fn projection(&self, vars: &[usize]) -> Vec<usize> {
        let mut sub_strides = vec![1; vars.len()];
        for k in (0..vars.len().saturating_sub(1)).rev() {
            sub_strides[k] = sub_strides[k + 1] * self.arity(vars[k + 1]);
        }
        (0..self.size)
            .map(|idx| {
                vars.iter()
                    .zip(&sub_strides)
                    .map(|(&v, &s)| self.digit(idx, v) * s)
                    .sum()
            })
            .collect()
    }

    /// States of `vars` encoded by `sub_index`.
    pub fn sub_assignment(&self, vars: &[usize], mut sub_index: usize) -> Vec<usize> {
        let mut out = vec![0; vars.len()];
        for k in (0..vars.len()).rev() {
            let a = self.arity(vars[k]);
            out[k] = sub_index % a;
            sub_index /= a;
        }
        out
    }
}

fn check_probabilities(probs: &[f64], tol: f64, what: &str) -> Result<()> {
    if let Some((i, p)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_finite() || **p < 0.0)
    {
        return Err(Error::domain(format!("{what}: entry {i} is {p}, must be >= 0")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(Error::domain(format!("{what}: entries sum to {sum}")));
    }
    Ok(())
}

/// A dense probability table over all joint states of a space.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    space: EventSpace,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(space: EventSpace, probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(space, probs, DEFAULT_SUM_TOL)
    }

    pub fn with_tolerance(space: EventSpace, probs: Vec<f64>, tol: f64) -> Result<Self> {
        if probs.len() != space.state_count() {
            return Err(Error::domain(format!(
                "distribution has {} entries, space has {} joint states",
                probs.len(),
                space.state_count()
            )));
        }
        check_probabilities(&probs, tol, "joint distribution")?;
        Ok(JointDistribution { space, probs })
    }

    /// Skips validation. Callers guarantee a nonnegative table of the right size.
    pub(crate) fn from_parts(space: EventSpace, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), space.state_count());
        JointDistribution { space, probs }
    }

    pub fn uniform(space: EventSpace) -> Self {
        let m = space.state_count();
        JointDistribution {
            probs: vec![1.0 / m as f64; m],
            space,
        }
    }

    pub fn space(&self) -> &EventSpace {
        &self.space
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probabilities(self) -> Vec<f64> {
        self.probs
    }

    pub fn get(&self, states: &[usize]) -> Result<f64> {
        Ok(self.probs[self.space.index_of(states)?])
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &JointDistribution) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Shannon entropy in nats; zero entries contribute nothing.
    pub fn entropy(&self) -> f64 {
        entropy_of(&self.probs)
    }

    /// Sums over the descriptors not in `vars`.
    pub fn marginalize(&self, vars: &[usize]) -> Result<MarginalTable> {
        if vars.is_empty() {
            return Err(Error::domain("cannot marginalize onto an empty descriptor set"));
        }
        self.space.check_vars(vars)?;
        let proj = self.space.projection(vars);
        let mut probs = vec![0.0; self.space.sub_size(vars)];
        for (p, &k) in self.probs.iter().zip(&proj) {
            probs[k] += p;
        }
        Ok(MarginalTable {
            vars: vars.to_vec(),
            arities: vars.iter().map(|&v| self.space.arity(v)).collect(),
            probs,
        })
    }

    /// P(targets | givens); rows whose conditioning event has probability
    /// zero are left undefined.
    pub fn conditionalize(&self, targets: &[usize], givens: &[usize]) -> Result<ConditionalTable> {
        if targets.is_empty() || givens.is_empty() {
            return Err(Error::domain("conditional needs nonempty target and given sets"));
        }
        if let Some(v) = targets.iter().find(|v| givens.contains(v)) {
            return Err(Error::domain(format!(
                "descriptor {} is both target and given",
                self.space.descriptor(*v).name
            )));
        }
        self.space.check_vars(targets)?;
        self.space.check_vars(givens)?;
        let tsize = self.space.sub_size(targets);
        let gsize = self.space.sub_size(givens);
        let tproj = self.space.projection(targets);
        let gproj = self.space.projection(givens);
        let mut joint = vec![0.0; tsize * gsize];
        for i in 0..self.probs.len() {
            joint[gproj[i] * tsize + tproj[i]] += self.probs[i];
        }
        let rows = joint
            .chunks(tsize)
            .map(|row| {
                let denom: f64 = row.iter().sum();
                (denom > 0.0).then(|| row.iter().map(|p| p / denom).collect())
            })
            .collect();
        Ok(ConditionalTable {
            targets: targets.to_vec(),
            givens: givens.to_vec(),
            target_size: tsize,
            rows,
        })
    }

    /// Whether descriptors `i` and `j` are independent given the joint state
    /// of all remaining descriptors. Conditioning states of probability zero
    /// are skipped.
    pub fn conditionally_independent(&self, i: usize, j: usize, tol: f64) -> Result<bool> {
        self.space.check_vars(&[i, j])?;
        let rest: Vec<usize> = (0..self.space.len()).filter(|&v| v != i && v != j).collect();
        let (ai, aj) = (self.space.arity(i), self.space.arity(j));
        let rsize = self.space.sub_size(&rest);
        let rproj = self.space.projection(&rest);
        let mut cube = vec![0.0; rsize * ai * aj];
        for (idx, p) in self.probs.iter().enumerate() {
            let (si, sj) = (self.space.digit(idx, i), self.space.digit(idx, j));
            cube[(rproj[idx] * ai + si) * aj + sj] += p;
        }
        for block in cube.chunks(ai * aj) {
            let pr: f64 = block.iter().sum();
            if pr <= 0.0 {
                continue;
            }
            let pi: Vec<f64> = (0..ai)
                .map(|a| (0..aj).map(|b| block[a * aj + b]).sum::<f64>() / pr)
                .collect();
            let pj: Vec<f64> = (0..aj)
                .map(|b| (0..ai).map(|a| block[a * aj + b]).sum::<f64>() / pr)
                .collect();
            for a in 0..ai {
                for b in 0..aj {
                    if (block[a * aj + b] / pr - pi[a] * pj[b]).abs() > tol {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

impl fmt::Display for JointDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (idx, p) in self.probs.iter().enumerate() {
            let states = self.space.assignment_of(idx).map_err(|_| fmt::Error)?;
            let s: Vec<String> = states.iter().map(|s| s.to_string()).collect();
            writeln!(f, "({}) {p}", s.join(","))?;
        }
        Ok(())
    }
}

pub fn entropy_of(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// P(Y) over an ordered descriptor list.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTable {
    pub vars: Vec<usize>,
    pub arities: Vec<usize>,
    pub probs: Vec<f64>,
}

impl MarginalTable {
    /// Builds a table; only the shape is checked here.
    pub fn new(space: &EventSpace, vars: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        space.check_vars(&vars)?;
        if vars.is_empty() {
            return Err(Error::domain("marginal table over no descriptors"));
        }
        let n = space.sub_size(&vars);
        if probs.len() != n {
            return Err(Error::domain(format!(
                "marginal over {:?} needs {n} entries, got {}",
                space.names(&vars),
                probs.len()
            )));
        }
        Ok(MarginalTable {
            arities: vars.iter().map(|&v| space.arity(v)).collect(),
            vars,
            probs,
        })
    }

    pub fn check(&self, tol: f64) -> Result<()> {
        check_probabilities(&self.probs, tol, "marginal table")
    }
}

/// P(Z | W): one row over the joint states of Z per joint state of W.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    pub targets: Vec<usize>,
    pub givens: Vec<usize>,
    pub target_size: usize,
    /// `None` marks an undefined row (zero-probability conditioning event).
    pub rows: Vec<Option<Vec<f64>>>,
}

impl ConditionalTable {
    /// Builds a table from given-state-major flat data; only the shape is checked.
    pub fn new(
        space: &EventSpace,
        targets: Vec<usize>,
        givens: Vec<usize>,
        flat: Vec<f64>,
    ) -> Result<Self> {
        if targets.is_empty() || givens.is_empty() {
            return Err(Error::domain("conditional needs nonempty target and given sets"));
        }
        space.check_vars(&targets)?;
        space.check_vars(&givens)?;
        if targets.iter().any(|t| givens.contains(t)) {
            return Err(Error::domain("target and given sets overlap"));
        }
        let tsize = space.sub_size(&targets);
        let gsize = space.sub_size(&givens);
        if flat.len() != tsize * gsize {
            return Err(Error::domain(format!(
                "conditional {:?} | {:?} needs {} entries, got {}",
                space.names(&targets),
                space.names(&givens),
                tsize * gsize,
                flat.len()
            )));
        }
        Ok(ConditionalTable {
            targets,
            givens,
            target_size: tsize,
            rows: flat.chunks(tsize).map(|r| Some(r.to_vec())).collect(),
        })
    }

    pub fn row(&self, given_state: usize) -> Option<&[f64]> {
        self.rows[given_state].as_deref()
    }

    /// Entry for (target state, given state); undefined rows read as zero.
    pub fn entry(&self, target_state: usize, given_state: usize) -> f64 {
        self.rows[given_state]
            .as_ref()
            .map_or(0.0, |r| r[target_state])
    }

    pub fn check(&self, tol: f64) -> Result<()> {
        for (w, row) in self.rows.iter().enumerate() {
            if let Some(row) = row {
                check_probabilities(row, tol, &format!("conditional row {w}"))?;
            }
        }
        Ok(())
    }
}
