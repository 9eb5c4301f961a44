//! Components, structures and their classification into webs and forests.
//!
//! A structure is classified by peeling: repeatedly remove a terminal
//! component until a single absolute component is left. The search
//! backtracks over peel choices, so the answer does not depend on which
//! terminal happens to be tried first.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::event_space::EventSpace;

/// Largest structure `enumerate_subforests` will expand.
pub const MAX_ENUMERATED_COMPONENTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ComponentKind {
    Absolute,
    Conditional,
}

/// An absolute component `Y` or a conditional component `(Z|W)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    targets: Vec<usize>,
    givens: Vec<usize>,
}

impl Component {
    pub fn absolute(vars: Vec<usize>) -> Result<Self> {
        Self::build(vars, Vec::new())
    }

    pub fn conditional(targets: Vec<usize>, givens: Vec<usize>) -> Result<Self> {
        if givens.is_empty() {
            return Err(Error::domain("a conditional component needs a nonempty given set"));
        }
        Self::build(targets, givens)
    }

    fn build(targets: Vec<usize>, givens: Vec<usize>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::domain("a component needs at least one target descriptor"));
        }
        let mut seen = BTreeSet::new();
        for &v in targets.iter().chain(&givens) {
            if !seen.insert(v) {
                return Err(Error::domain(format!(
                    "descriptor index {v} appears twice in one component"
                )));
            }
        }
        Ok(Component { targets, givens })
    }

    pub fn kind(&self) -> ComponentKind {
        if self.givens.is_empty() {
            ComponentKind::Absolute
        } else {
            ComponentKind::Conditional
        }
    }

    pub fn is_absolute(&self) -> bool {
        self.givens.is_empty()
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn givens(&self) -> &[usize] {
        &self.givens
    }

    /// Targets followed by givens.
    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.targets.iter().chain(&self.givens).copied()
    }

    /// Equality as sets, ignoring listing order.
    pub fn same_as(&self, other: &Component) -> bool {
        let set = |v: &[usize]| v.iter().copied().collect::<BTreeSet<_>>();
        self.kind() == other.kind()
            && set(&self.targets) == set(&other.targets)
            && set(&self.givens) == set(&other.givens)
    }

    pub fn label(&self, space: &EventSpace) -> String {
        let t = space.names(&self.targets).join(",");
        if self.is_absolute() {
            format!("({t})")
        } else {
            format!("({t}|{})", space.names(&self.givens).join(","))
        }
    }
}

/// How a terminal component attaches to the rest of its structure: `fresh`
/// descriptors appear nowhere else, `connector` descriptors are covered by the
/// remainder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerminalSplit {
    pub component: usize,
    pub fresh: Vec<usize>,
    pub connector: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub is_web: bool,
    pub is_forest: bool,
    pub is_conditional_web: bool,
    pub is_bayes_net_shape: bool,
    /// Component indices in build order (reverse of peel order); present iff
    /// the structure is a web.
    pub unpack_order: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    space: EventSpace,
    components: Vec<Component>,
}

impl Structure {
    pub fn new(space: EventSpace, components: Vec<Component>) -> Result<Self> {
        for (i, c) in components.iter().enumerate() {
            space.check_vars(&c.vars().collect::<Vec<_>>())?;
            if let Some(j) = components[..i].iter().position(|o| o.same_as(c)) {
                return Err(Error::domain(format!(
                    "components {j} and {i} are identical: {}",
                    c.label(&space)
                )));
            }
        }
        Ok(Structure { space, components })
    }

    pub fn space(&self) -> &EventSpace {
        &self.space
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Every descriptor mentioned by some component.
    pub fn covered(&self) -> BTreeSet<usize> {
        self.components.iter().flat_map(|c| c.vars()).collect()
    }

    /// The structure with component `index` removed.
    pub fn without(&self, index: usize) -> Structure {
        let mut components = self.components.clone();
        components.remove(index);
        Structure {
            space: self.space.clone(),
            components,
        }
    }

    /// The sub-structure made of the listed components, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Structure {
        Structure {
            space: self.space.clone(),
            components: indices.iter().map(|&i| self.components[i].clone()).collect(),
        }
    }

    pub fn terminal_split(&self, index: usize) -> Result<Option<TerminalSplit>> {
        if index >= self.len() {
            return Err(Error::domain(format!(
                "component {index} is not in a structure of {} components",
                self.len()
            )));
        }
        Ok(self.split_within(&vec![true; self.len()], index))
    }

    fn covered_within(&self, active: &[bool], skip: usize) -> BTreeSet<usize> {
        self.components
            .iter()
            .enumerate()
            .filter(|&(i, _)| active[i] && i != skip)
            .flat_map(|(_, c)| c.vars())
            .collect()
    }

    fn split_within(&self, active: &[bool], index: usize) -> Option<TerminalSplit> {
        let rest = self.covered_within(active, index);
        let c = &self.components[index];
        if c.is_absolute() {
            let (connector, fresh): (Vec<usize>, Vec<usize>) =
                c.targets.iter().partition(|v| rest.contains(v));
            (!fresh.is_empty()).then_some(TerminalSplit {
                component: index,
                fresh,
                connector,
            })
        } else {
            let ok = c.targets.iter().all(|v| !rest.contains(v))
                && c.givens.iter().all(|v| rest.contains(v));
            ok.then(|| TerminalSplit {
                component: index,
                fresh: c.targets.clone(),
                connector: c.givens.clone(),
            })
        }
    }

    /// The connector lies inside a single other active component.
    fn connector_in_one(&self, active: &[bool], split: &TerminalSplit) -> bool {
        self.components.iter().enumerate().any(|(i, c)| {
            active[i]
                && i != split.component
                && split.connector.iter().all(|v| c.vars().any(|u| u == *v))
        })
    }

    /// A peel candidate for `index` under `active`, if one is allowed.
    fn peel_candidate(&self, active: &[bool], index: usize, forest: bool) -> Option<TerminalSplit> {
        let split = self.split_within(active, index)?;
        if forest && !self.connector_in_one(active, &split) {
            return None;
        }
        // A web always keeps at least one absolute component.
        let absolute_left = self
            .components
            .iter()
            .enumerate()
            .any(|(i, c)| active[i] && i != index && c.is_absolute());
        absolute_left.then_some(split)
    }

    fn base_case(&self, active: &[bool]) -> Option<Option<TerminalSplit>> {
        let mut live = (0..self.len()).filter(|&i| active[i]);
        let first = live.next()?;
        if live.next().is_some() {
            return None;
        }
        let c = &self.components[first];
        Some(c.is_absolute().then(|| TerminalSplit {
            component: first,
            fresh: c.targets.clone(),
            connector: Vec::new(),
        }))
    }

    fn search(
        &self,
        active: &mut Vec<bool>,
        forest: bool,
        failed: &mut HashSet<Vec<bool>>,
        peels: &mut Vec<TerminalSplit>,
    ) -> bool {
        if let Some(base) = self.base_case(active) {
            return match base {
                Some(split) => {
                    peels.push(split);
                    true
                }
                None => false,
            };
        }
        if failed.contains(active.as_slice()) {
            return false;
        }
        for i in 0..self.len() {
            if !active[i] {
                continue;
            }
            if let Some(split) = self.peel_candidate(active, i, forest) {
                active[i] = false;
                peels.push(split);
                if self.search(active, forest, failed, peels) {
                    return true;
                }
                peels.pop();
                active[i] = true;
            }
        }
        failed.insert(active.clone());
        false
    }

    /// Full peel sequence (first peeled first, base component last), or
    /// `None` if no sequence exists.
    fn peel_sequence(&self, forest: bool) -> Option<Vec<TerminalSplit>> {
        if self.is_empty() {
            return None;
        }
        let mut active = vec![true; self.len()];
        let mut peels = Vec::with_capacity(self.len());
        self.search(&mut active, forest, &mut HashSet::new(), &mut peels)
            .then_some(peels)
    }

    /// Single-pass peeling that commits to the first allowed terminal at
    /// every step. Used to cross-check the backtracking search. Success
    /// implies a web, but failure does not: see `peeling_order_matters`.
    fn greedy_peel_sequence(&self, forest: bool) -> Option<Vec<TerminalSplit>> {
        if self.is_empty() {
            return None;
        }
        let mut active = vec![true; self.len()];
        let mut peels = Vec::with_capacity(self.len());
        loop {
            if let Some(base) = self.base_case(&active) {
                peels.push(base?);
                return Some(peels);
            }
            let split = (0..self.len())
                .filter(|&i| active[i])
                .find_map(|i| self.peel_candidate(&active, i, forest))?;
            active[split.component] = false;
            peels.push(split);
        }
    }

    fn classification_from(
        &self,
        web: Option<Vec<TerminalSplit>>,
        forest: bool,
    ) -> Classification {
        let is_web = web.is_some();
        let absolutes: Vec<&Component> =
            self.components.iter().filter(|c| c.is_absolute()).collect();
        let disjoint = absolutes.iter().enumerate().all(|(i, a)| {
            absolutes[..i]
                .iter()
                .all(|b| a.targets.iter().all(|v| !b.targets.contains(v)))
        });
        let is_conditional_web = is_web && disjoint;
        let is_bayes_net_shape = is_conditional_web
            && self
                .components
                .iter()
                .all(|c| c.is_absolute() || c.targets.len() == 1);
        Classification {
            is_web,
            is_forest: is_web && forest,
            is_conditional_web,
            is_bayes_net_shape,
            unpack_order: web.map(|p| p.iter().rev().map(|s| s.component).collect()),
        }
    }

    pub fn classify(&self) -> Result<Classification> {
        if self.is_empty() {
            return Err(Error::domain("cannot classify an empty structure"));
        }
        let web = self.peel_sequence(false);
        let forest = web.is_some() && self.peel_sequence(true).is_some();
        Ok(self.classification_from(web, forest))
    }

    /// Like [`Structure::classify`] but without backtracking.
    pub fn classify_greedy(&self) -> Result<Classification> {
        if self.is_empty() {
            return Err(Error::domain("cannot classify an empty structure"));
        }
        let web = self.greedy_peel_sequence(false);
        let forest = web.is_some() && self.greedy_peel_sequence(true).is_some();
        Ok(self.classification_from(web, forest))
    }

    /// A peel sequence witnessing that the structure is a web. Each entry
    /// carries the split valid at the moment it is peeled; the last entry is
    /// the base absolute component with an empty connector.
    pub fn unpack(&self) -> Result<Vec<TerminalSplit>> {
        self.peel_sequence(false)
            .ok_or_else(|| Error::Precondition("structure is not a web".into()))
    }

    /// Index lists of every nonempty sub-structure that is a forest, in
    /// ascending subset-mask order (bit `i` = component `i`).
    pub fn subforest_indices(&self) -> Result<Vec<Vec<usize>>> {
        if self.len() > MAX_ENUMERATED_COMPONENTS {
            return Err(Error::Capacity {
                what: "components for subforest enumeration",
                requested: self.len() as u128,
                limit: MAX_ENUMERATED_COMPONENTS as u128,
            });
        }
        let mut out = Vec::new();
        for mask in 1u32..(1u32 << self.len()) {
            let indices: Vec<usize> = (0..self.len()).filter(|i| mask & (1 << i) != 0).collect();
            if self.subset(&indices).classify()?.is_forest {
                out.push(indices);
            }
        }
        Ok(out)
    }

    pub fn enumerate_subforests(&self) -> Result<Vec<Structure>> {
        Ok(self
            .subforest_indices()?
            .iter()
            .map(|ix| self.subset(ix))
            .collect())
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.components.iter().map(|c| c.label(&self.space)).collect();
        write!(f, "{{{}}}", labels.join(", "))
    }
}
