//! Brute-force maximum-entropy reference, independent of the scaling solver.
//!
//! The compatible set is written as `A p = b, p >= 0` straight from the
//! tables. Coordinates that nonnegativity forces to zero are removed, the
//! rest is parameterized as `p0 + N t` with `N` an orthonormal null-space
//! basis, and entropy is maximized by cyclic 1-D grid refinement along the
//! basis directions.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use pks_core::{
    ComponentTable, Descriptor, EventSpace, JointDistribution, ProbabilitySystem, Structure,
    Table,
};
use pks_core::structure::Component;

fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>()
}

/// Every table cell as an equation over joint states, plus normalization.
fn equations(pc: &ProbabilitySystem) -> (Vec<Vec<f64>>, Vec<f64>) {
    let space = pc.space();
    let m = space.state_count();
    let states: Vec<Vec<usize>> = (0..m).map(|i| space.assignment_of(i).unwrap()).collect();
    let sub = |x: &[usize], vars: &[usize]| {
        vars.iter().fold(0, |acc, &v| acc * space.arity(v) + x[v])
    };
    let mut a = Vec::new();
    let mut b = Vec::new();
    for e in pc.entries() {
        match &e.table {
            Table::Marginal(t) => {
                for (cell, &target) in t.probs.iter().enumerate() {
                    a.push(states.iter().map(|x| f64::from(sub(x, &t.vars) == cell)).collect());
                    b.push(target);
                }
            }
            Table::Conditional(t) => {
                for (w, row) in t.rows.iter().enumerate() {
                    let Some(row) = row else { continue };
                    for (z, &r) in row.iter().enumerate() {
                        a.push(
                            states
                                .iter()
                                .map(|x| {
                                    if sub(x, &t.givens) != w {
                                        0.0
                                    } else {
                                        f64::from(sub(x, &t.targets) == z) - r
                                    }
                                })
                                .collect(),
                        );
                        b.push(0.0);
                    }
                }
            }
        }
    }
    a.push(vec![1.0; m]);
    b.push(1.0);
    (a, b)
}

/// Coordinates forced to zero: a zero-rhs row whose live coefficients all
/// share one sign pins every coordinate it touches.
fn forced_zeros(a: &[Vec<f64>], b: &[f64], m: usize) -> Vec<bool> {
    let mut dead = vec![false; m];
    loop {
        let mut changed = false;
        for (row, &rhs) in a.iter().zip(b) {
            if rhs != 0.0 {
                continue;
            }
            let live: Vec<usize> = (0..m).filter(|&j| !dead[j] && row[j].abs() > 1e-15).collect();
            let pos = live.iter().all(|&j| row[j] > 0.0);
            let neg = live.iter().all(|&j| row[j] < 0.0);
            if (pos || neg) && !live.is_empty() {
                for j in live {
                    dead[j] = true;
                }
                changed = true;
            }
        }
        if !changed {
            return dead;
        }
    }
}

fn null_space(a: &[Vec<f64>], cols: &[usize]) -> Vec<Vec<f64>> {
    let n = cols.len();
    let ata = DMatrix::from_fn(n, n, |i, j| {
        a.iter().map(|r| r[cols[i]] * r[cols[j]]).sum::<f64>()
    });
    let eig = SymmetricEigen::new(ata);
    let scale = eig.eigenvalues.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    (0..n)
        .filter(|&k| eig.eigenvalues[k].abs() < 1e-10 * scale)
        .map(|k| eig.eigenvectors.column(k).iter().copied().collect())
        .collect()
}

/// Maximizes entropy along `p + t·d` over the feasible interval by grid
/// refinement. Returns the step taken.
fn line_search(p: &mut [f64], d: &[f64]) -> f64 {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (&x, &dx) in p.iter().zip(d) {
        if dx > 1e-15 {
            lo = lo.max(-x / dx);
        } else if dx < -1e-15 {
            hi = hi.min(-x / dx);
        }
    }
    if !(lo.is_finite() && hi.is_finite()) || hi - lo < 1e-300 {
        return 0.0;
    }
    let eval = |t: f64| {
        let q: Vec<f64> = p.iter().zip(d).map(|(x, dx)| (x + t * dx).max(0.0)).collect();
        entropy(&q)
    };
    const POINTS: usize = 10;
    let mut best_t = 0.0;
    let mut best_h = eval(0.0);
    for _ in 0..80 {
        let step = (hi - lo) / POINTS as f64;
        let mut k_best = 0;
        let mut h_best = f64::NEG_INFINITY;
        for k in 0..=POINTS {
            let h = eval(lo + k as f64 * step);
            if h > h_best {
                h_best = h;
                k_best = k;
            }
        }
        if h_best > best_h {
            best_h = h_best;
            best_t = lo + k_best as f64 * step;
        }
        let centre = lo + k_best as f64 * step;
        lo = centre - step;
        hi = centre + step;
        if step < 1e-15 {
            break;
        }
        // keep the bracket feasible
        let (flo, fhi) = feasible_interval(p, d);
        lo = lo.max(flo);
        hi = hi.min(fhi);
    }
    for (x, dx) in p.iter_mut().zip(d) {
        *x = (*x + best_t * dx).max(0.0);
    }
    best_t
}

fn feasible_interval(p: &[f64], d: &[f64]) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (&x, &dx) in p.iter().zip(d) {
        if dx > 1e-15 {
            lo = lo.max(-x / dx);
        } else if dx < -1e-15 {
            hi = hi.min(-x / dx);
        }
    }
    (lo, hi)
}

/// `start` must be compatible with `pc` and positive off the forced zeros.
pub fn brute_force_maxent(pc: &ProbabilitySystem, start: &[f64]) -> Vec<f64> {
    let m = pc.space().state_count();
    let (a, b) = equations(pc);
    let dead = forced_zeros(&a, &b, m);
    let live: Vec<usize> = (0..m).filter(|&j| !dead[j]).collect();
    for (j, &x) in start.iter().enumerate() {
        assert!(dead[j] || x > 0.0, "start must be positive on free coordinates");
    }
    let basis = null_space(&a, &live);
    let mut q: Vec<f64> = live.iter().map(|&j| start[j]).collect();
    for _sweep in 0..20_000 {
        let before = q.clone();
        for d in &basis {
            line_search(&mut q, d);
        }
        let moved: Vec<f64> = q.iter().zip(&before).map(|(x, y)| x - y).collect();
        let size = moved.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if size < 1e-14 {
            break;
        }
        let norm = moved.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dir: Vec<f64> = moved.iter().map(|v| v / norm).collect();
        line_search(&mut q, &dir);
    }
    let mut out = vec![0.0; m];
    for (k, &j) in live.iter().enumerate() {
        out[j] = q[k];
    }
    out
}

/// Maximizer of the one-parameter family left by the counterexample:
/// P(1,1,1) = P(0,0,0) = a, the four mixed states b = (0.5 - a)/2.
pub fn counterexample_parameter() -> f64 {
    let f = |a: f64| {
        let b = (0.5 - a) / 2.0;
        let term = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
        2.0 * term(a) + 4.0 * term(b)
    };
    let (mut lo, mut hi) = (0.0, 0.5);
    for _ in 0..60 {
        let step = (hi - lo) / 20.0;
        let k = (0..=20)
            .max_by(|&i, &j| f(lo + i as f64 * step).total_cmp(&f(lo + j as f64 * step)))
            .unwrap();
        let c = lo + k as f64 * step;
        lo = (c - step).max(0.0);
        hi = (c + step).min(0.5);
    }
    (lo + hi) / 2.0
}

/// A regression system paired with a compatible start point for the oracle.
pub struct CorpusEntry {
    pub name: String,
    pub system: ProbabilitySystem,
    pub start: Vec<f64>,
}

fn binary_space(n: usize) -> EventSpace {
    EventSpace::new((1..=n).map(|i| Descriptor::new(format!("X{i}"), 2)).collect()).unwrap()
}

fn abs(v: &[usize]) -> Component {
    Component::absolute(v.to_vec()).unwrap()
}

fn cond(z: &[usize], w: &[usize]) -> Component {
    Component::conditional(z.to_vec(), w.to_vec()).unwrap()
}

/// Deterministic strictly positive joint with a little structure.
fn positive_joint(m: usize, seed: u64) -> Vec<f64> {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut v: Vec<f64> = (0..m)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            0.2 + ((state >> 33) as f64 / (1u64 << 31) as f64)
        })
        .collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// 25 systems over at most three binary descriptors.
pub fn corpus() -> Vec<CorpusEntry> {
    let mut out = Vec::new();

    let ce = pks_core::counterexample::system();
    out.push(CorpusEntry {
        name: "counterexample".into(),
        start: pks_core::counterexample::PRODUCT_TABLE.to_vec(),
        system: ce,
    });

    let shapes3: Vec<(&str, Vec<Component>)> = vec![
        ("single marginal", vec![abs(&[0])]),
        ("two marginals", vec![abs(&[0]), abs(&[2])]),
        ("pair marginal", vec![abs(&[0, 1])]),
        ("chain of pairs", vec![abs(&[0, 1]), abs(&[1, 2])]),
        ("triangle of pairs", vec![abs(&[0, 1]), abs(&[1, 2]), abs(&[0, 2])]),
        ("collider", vec![abs(&[0]), abs(&[1]), cond(&[2], &[0, 1])]),
        ("chain", vec![abs(&[0]), cond(&[1], &[0]), cond(&[2], &[1])]),
        ("fork", vec![abs(&[1]), cond(&[0], &[1]), cond(&[2], &[1])]),
        ("lone conditional", vec![cond(&[2], &[0])]),
        ("two conditionals", vec![cond(&[1], &[0]), cond(&[2], &[0])]),
        ("conditional pair target", vec![abs(&[2]), cond(&[0, 1], &[2])]),
        ("pair plus conditional", vec![abs(&[0, 1]), cond(&[2], &[0])]),
        ("marginal and reverse conditional", vec![abs(&[2]), cond(&[2], &[0, 1])]),
        ("all singletons", vec![abs(&[0]), abs(&[1]), abs(&[2])]),
        ("pair and crossing conditional", vec![abs(&[0, 2]), cond(&[1], &[0, 2])]),
        ("conditional loop", vec![abs(&[0]), cond(&[1], &[0]), cond(&[2], &[0, 1]), abs(&[1, 2])]),
    ];
    for (k, (name, comps)) in shapes3.into_iter().enumerate() {
        let space = binary_space(3);
        let joint = positive_joint(8, 100 + k as u64);
        let st = Structure::new(space.clone(), comps).unwrap();
        let p = JointDistribution::new(space, joint.clone()).unwrap();
        out.push(CorpusEntry {
            name: name.into(),
            system: ProbabilitySystem::read_off(&p, &st).unwrap(),
            start: joint,
        });
    }

    let shapes2: Vec<(&str, Vec<Component>)> = vec![
        ("2d marginal", vec![abs(&[0])]),
        ("2d both marginals", vec![abs(&[0]), abs(&[1])]),
        ("2d conditional", vec![abs(&[0]), cond(&[1], &[0])]),
        ("2d lone conditional", vec![cond(&[1], &[0])]),
    ];
    for (k, (name, comps)) in shapes2.into_iter().enumerate() {
        let space = binary_space(2);
        let joint = positive_joint(4, 200 + k as u64);
        let st = Structure::new(space.clone(), comps).unwrap();
        let p = JointDistribution::new(space, joint.clone()).unwrap();
        out.push(CorpusEntry {
            name: name.into(),
            system: ProbabilitySystem::read_off(&p, &st).unwrap(),
            start: joint,
        });
    }

    // Exact zeros exposed by a table: joint vanishes on X1=1, X2=0.
    let zero_shapes: Vec<(&str, Vec<Component>)> = vec![
        ("zero cell in pair marginal", vec![abs(&[0, 1]), abs(&[2])]),
        ("zero row entry", vec![abs(&[0]), cond(&[1], &[0]), abs(&[1, 2])]),
        ("zero cell with conditional", vec![abs(&[0, 1]), cond(&[2], &[0, 1])]),
    ];
    for (k, (name, comps)) in zero_shapes.into_iter().enumerate() {
        let space = binary_space(3);
        let mut joint = positive_joint(8, 300 + k as u64);
        joint[4] = 0.0;
        joint[5] = 0.0;
        let s: f64 = joint.iter().sum();
        joint.iter_mut().for_each(|x| *x /= s);
        let st = Structure::new(space.clone(), comps).unwrap();
        let p = JointDistribution::new(space, joint.clone()).unwrap();
        let pc = ProbabilitySystem::read_off(&p, &st).unwrap();
        out.push(CorpusEntry {
            name: name.into(),
            system: pc,
            start: joint,
        });
    }

    // Hand-written table with a deterministic row.
    let space = binary_space(2);
    let pc = ProbabilitySystem::new(
        space.clone(),
        vec![
            ComponentTable::marginal(&space, vec![0], vec![0.3, 0.7]).unwrap(),
            ComponentTable::conditional(&space, vec![1], vec![0], vec![1.0, 0.0, 0.4, 0.6])
                .unwrap(),
        ],
    )
    .unwrap();
    out.push(CorpusEntry {
        name: "deterministic row".into(),
        system: pc,
        start: vec![0.3, 0.0, 0.28, 0.42],
    });

    assert_eq!(out.len(), 25);
    out
}
