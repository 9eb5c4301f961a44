//! The three-descriptor web `{(X1), (X2), (X3|X1,X2)}` whose product
//! extension is not its maximum-entropy extension.
//!
//! With fair marginals for X1 and X2 and `P(X3=1 | X1, X2)` equal to 1, .5,
//! .5, 0 for (1,1), (1,0), (0,1), (0,0), the product puts .25 on (1,1,1)
//! while the maximum-entropy extension is uniform on the six states the
//! constraints leave open. [`verify`] recomputes both and checks every
//! reference number.

use crate::error::Result;
use crate::event_space::EventSpace;
use crate::extension::{maxent_extension, product_extension, ExtensionResult, SolverConfig};
use crate::structure::Classification;
use crate::system::{ComponentTable, ProbabilitySystem};

/// Reference product extension in joint-index order (000 … 111).
pub const PRODUCT_TABLE: [f64; 8] = [0.25, 0.0, 0.125, 0.125, 0.125, 0.125, 0.0, 0.25];
/// Joint indices that every compatible distribution sets to zero: (0,0,1), (1,1,0).
pub const FORCED_ZEROS: [usize; 2] = [1, 6];
pub const PRODUCT_ENTROPY: f64 = 1.7329;
pub const MAXENT_ENTROPY: f64 = 1.7918;

pub fn space() -> EventSpace {
    EventSpace::binary(&["X1", "X2", "X3"]).expect("valid space")
}

pub fn system() -> ProbabilitySystem {
    let s = space();
    ProbabilitySystem::new(
        s.clone(),
        vec![
            ComponentTable::marginal(&s, vec![0], vec![0.5, 0.5]).expect("shape"),
            ComponentTable::marginal(&s, vec![1], vec![0.5, 0.5]).expect("shape"),
            // Rows for (X1,X2) = 00, 01, 10, 11; each row is (P(X3=0), P(X3=1)).
            ComponentTable::conditional(
                &s,
                vec![2],
                vec![0, 1],
                vec![1.0, 0.0, 0.5, 0.5, 0.5, 0.5, 0.0, 1.0],
            )
            .expect("shape"),
        ],
    )
    .expect("valid system")
}

/// Reference maximum-entropy extension: 1/6 everywhere except the forced zeros.
pub fn maxent_table() -> [f64; 8] {
    let mut t = [1.0 / 6.0; 8];
    for z in FORCED_ZEROS {
        t[z] = 0.0;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub product_entries: f64,
    pub maxent_entries: f64,
    pub product_entropy: f64,
    pub maxent_entropy: f64,
    pub conditionals: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            product_entries: 1e-12,
            maxent_entries: 1e-3,
            product_entropy: 5e-5,
            maxent_entropy: 1e-3,
            conditionals: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    /// `|actual - expected| <= tolerance`
    Within,
    /// `actual >= expected`
    AtLeast,
    /// `actual <= expected`
    AtMost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub actual: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, expected: f64, actual: f64, tolerance: f64, comparison: Comparison) -> Self {
        let passed = match comparison {
            Comparison::Within => (actual - expected).abs() <= tolerance,
            Comparison::AtLeast => actual >= expected,
            Comparison::AtMost => actual <= expected,
        };
        Check {
            name: name.into(),
            expected,
            actual,
            tolerance,
            comparison,
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub system: ProbabilitySystem,
    pub classification: Classification,
    pub product: ExtensionResult,
    pub maxent: ExtensionResult,
    /// P̂(X1=1 | X3=1)
    pub x1_given_x3: f64,
    /// P̂(X2=1 | X3=1)
    pub x2_given_x3: f64,
    /// P̂(X1=1, X2=1 | X3=1)
    pub x1x2_given_x3: f64,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn state_label(index: usize) -> String {
    format!("({},{},{})", (index >> 2) & 1, (index >> 1) & 1, index & 1)
}

pub fn verify(tol: &Tolerances, cfg: &SolverConfig) -> Result<Report> {
    use Comparison::*;
    let pc = system();
    let classification = pc.structure().classify()?;
    let product = product_extension(&pc)?;
    let maxent = maxent_extension(&pc, cfg)?;
    let mut checks = Vec::new();

    checks.push(Check::new("web", 1.0, f64::from(classification.is_web), 0.0, Within));
    checks.push(Check::new("forest", 0.0, f64::from(classification.is_forest), 0.0, Within));
    for (i, (&expected, &actual)) in PRODUCT_TABLE
        .iter()
        .zip(product.distribution.probabilities())
        .enumerate()
    {
        checks.push(Check::new(
            format!("P*{}", state_label(i)),
            expected,
            actual,
            tol.product_entries,
            Within,
        ));
    }
    for (i, (&expected, &actual)) in maxent_table()
        .iter()
        .zip(maxent.distribution.probabilities())
        .enumerate()
    {
        checks.push(Check::new(
            format!("P^{}", state_label(i)),
            expected,
            actual,
            tol.maxent_entries,
            Within,
        ));
    }
    checks.push(Check::new(
        "entropy(P*)",
        PRODUCT_ENTROPY,
        product.entropy,
        tol.product_entropy,
        Within,
    ));
    checks.push(Check::new(
        "entropy(P^)",
        MAXENT_ENTROPY,
        maxent.entropy,
        tol.maxent_entropy,
        Within,
    ));
    checks.push(Check::new(
        "P* residual",
        1e-9,
        product.max_residual,
        0.0,
        AtMost,
    ));
    checks.push(Check::new(
        "P^ residual",
        cfg.residual_tol,
        maxent.max_residual,
        0.0,
        AtMost,
    ));

    let p = &maxent.distribution;
    let x1 = p.conditionalize(&[0], &[2])?.entry(1, 1);
    let x2 = p.conditionalize(&[1], &[2])?.entry(1, 1);
    let x12 = p.conditionalize(&[0, 1], &[2])?.entry(3, 1);
    checks.push(Check::new("P^(x1|x3)", 2.0 / 3.0, x1, tol.conditionals, Within));
    checks.push(Check::new("P^(x2|x3)", 2.0 / 3.0, x2, tol.conditionals, Within));
    checks.push(Check::new("P^(x1,x2|x3)", 1.0 / 3.0, x12, tol.conditionals, Within));
    checks.push(Check::new(
        "|P^(x1,x2|x3) - P^(x1|x3)P^(x2|x3)|",
        0.1,
        (x12 - x1 * x2).abs(),
        0.0,
        AtLeast,
    ));
    checks.push(Check::new(
        "entropy(P^) - entropy(P*)",
        0.05,
        maxent.entropy - product.entropy,
        0.0,
        AtLeast,
    ));

    Ok(Report {
        system: pc,
        classification,
        product,
        maxent,
        x1_given_x3: x1,
        x2_given_x3: x2,
        x1x2_given_x3: x12,
        checks,
    })
}
