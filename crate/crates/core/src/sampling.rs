//! Random spaces, tables, structures and systems for property checks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::event_space::{Descriptor, EventSpace, JointDistribution};
use crate::structure::{Component, Structure};
use crate::system::{ComponentTable, ProbabilitySystem};

/// A point on the simplex from the flat Dirichlet, with each entry zeroed
/// independently with probability `zero_prob` (at least one entry survives).
pub fn random_table<R: Rng + ?Sized>(rng: &mut R, n: usize, zero_prob: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| -(1.0 - rng.gen::<f64>()).ln())
        .collect();
    if zero_prob > 0.0 {
        let keep = rng.gen_range(0..n);
        for (i, x) in v.iter_mut().enumerate() {
            if i != keep && rng.gen_bool(zero_prob) {
                *x = 0.0;
            }
        }
    }
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

pub fn random_space<R: Rng + ?Sized>(rng: &mut R, max_descriptors: usize, max_arity: usize) -> EventSpace {
    let n = rng.gen_range(1..=max_descriptors);
    let descriptors = (0..n)
        .map(|i| Descriptor::new(format!("X{}", i + 1), rng.gen_range(2..=max_arity)))
        .collect();
    EventSpace::new(descriptors).expect("small random space")
}

pub fn random_joint<R: Rng + ?Sized>(rng: &mut R, space: &EventSpace, zero_prob: f64) -> JointDistribution {
    let probs = random_table(rng, space.state_count(), zero_prob);
    JointDistribution::from_parts(space.clone(), probs)
}

fn random_subset<R: Rng + ?Sized>(rng: &mut R, from: &[usize], min: usize, max: usize) -> Vec<usize> {
    let mut pool = from.to_vec();
    pool.shuffle(rng);
    let k = rng.gen_range(min..=max.min(pool.len()));
    pool.truncate(k);
    pool
}

/// Shape of a random conditional web.
#[derive(Debug, Clone, Copy)]
pub struct WebShape {
    /// Restrict every connector to a single earlier component.
    pub forest: bool,
    /// Chance that a new block of descriptors starts a fresh absolute
    /// component instead of attaching conditionally.
    pub new_root_prob: f64,
    pub zero_prob: f64,
}

/// Builds a random conditional web covering every descriptor of `space`,
/// with random tables, and shuffles the component order.
pub fn random_conditional_web<R: Rng + ?Sized>(
    rng: &mut R,
    space: &EventSpace,
    shape: WebShape,
) -> ProbabilitySystem {
    let mut unused: Vec<usize> = (0..space.len()).collect();
    unused.shuffle(rng);
    let mut components: Vec<Component> = Vec::new();
    let mut covered: Vec<usize> = Vec::new();
    while !unused.is_empty() {
        let k = rng.gen_range(1..=unused.len().min(2));
        let fresh: Vec<usize> = unused.drain(..k).collect();
        let root = components.is_empty() || rng.gen_bool(shape.new_root_prob);
        let comp = if root {
            Component::absolute(fresh.clone())
        } else {
            let pool: Vec<usize> = if shape.forest {
                components
                    .choose(rng)
                    .expect("nonempty")
                    .vars()
                    .collect()
            } else {
                covered.clone()
            };
            let givens = random_subset(rng, &pool, 1, 3);
            Component::conditional(fresh.clone(), givens)
        }
        .expect("valid component");
        covered.extend(&fresh);
        components.push(comp);
    }
    components.shuffle(rng);
    let entries = components
        .into_iter()
        .map(|c| {
            let tsize = space.sub_size(c.targets());
            if c.is_absolute() {
                let probs = random_table(rng, tsize, shape.zero_prob);
                ComponentTable::marginal(space, c.targets().to_vec(), probs)
            } else {
                let gsize = space.sub_size(c.givens());
                let flat = (0..gsize)
                    .flat_map(|_| random_table(rng, tsize, shape.zero_prob))
                    .collect();
                ComponentTable::conditional(space, c.targets().to_vec(), c.givens().to_vec(), flat)
            }
            .expect("shape matches")
        })
        .collect();
    ProbabilitySystem::new(space.clone(), entries).expect("valid system")
}

/// An arbitrary structure: each component is absolute or conditional over
/// random descriptor subsets. Duplicates are skipped, so the result may have
/// fewer than `max_components` components (but at least one).
pub fn random_structure<R: Rng + ?Sized>(
    rng: &mut R,
    space: &EventSpace,
    max_components: usize,
) -> Structure {
    let all: Vec<usize> = (0..space.len()).collect();
    let want = rng.gen_range(1..=max_components);
    let mut comps: Vec<Component> = Vec::new();
    for _ in 0..want * 4 {
        if comps.len() == want {
            break;
        }
        let conditional = space.len() >= 2 && rng.gen_bool(0.5);
        let c = if conditional {
            let mut pool = all.clone();
            pool.shuffle(rng);
            let split = rng.gen_range(1..pool.len());
            let targets = random_subset(rng, &pool[..split], 1, 2);
            let givens = random_subset(rng, &pool[split..], 1, 3);
            Component::conditional(targets, givens)
        } else {
            Component::absolute(random_subset(rng, &all, 1, 3))
        }
        .expect("valid component");
        if !comps.iter().any(|o| o.same_as(&c)) {
            comps.push(c);
        }
    }
    Structure::new(space.clone(), comps).expect("distinct components")
}
