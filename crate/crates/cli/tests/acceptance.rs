//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Command-level criteria drive the built `pks` binary; property
//! criteria call the library directly.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use pks_core::sampling::{random_conditional_web, random_space, random_structure, WebShape};
use pks_core::{maxent_extension, product_extension, ProbabilitySystem, SolverConfig};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/counterexample.pks");
const INCONSISTENT: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/inconsistent.pks");

type Outcome = Result<String, String>;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn pks(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_pks"))
        .args(args)
        .output()
        .expect("pks binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn pks_json(args: &[&str]) -> Result<Value, String> {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let r = pks(&full);
    if r.code != 0 {
        return Err(format!("pks {args:?} exited {}: {}", r.code, r.stderr.trim()));
    }
    serde_json::from_str(&r.stdout).map_err(|e| format!("bad JSON from pks {args:?}: {e}"))
}

fn values(v: &Value) -> Vec<f64> {
    v["outputs"]["distribution"]["values"]
        .as_array()
        .expect("distribution values")
        .iter()
        .map(|x| x.as_f64().expect("number"))
        .collect()
}

fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const PRODUCT: [f64; 8] = [0.25, 0.0, 0.125, 0.125, 0.125, 0.125, 0.0, 0.25];

fn c1_product_table() -> Outcome {
    let v = pks_json(&["extend", "--method", "product", FIXTURE])?;
    let p = values(&v);
    ensure(p.len() == 8, || format!("{} states", p.len()))?;
    let worst = p.iter().zip(PRODUCT).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(worst <= 1e-12, || format!("max entry error {worst:e}"))?;
    Ok(format!("{p:?}, max error {worst:e}"))
}

fn c2_product_entropy() -> Outcome {
    let r = pks(&["extend", "--method", "product", FIXTURE]);
    ensure(r.code == 0, || r.stderr.clone())?;
    let file = scratch("product.joint");
    std::fs::write(&file, &r.stdout).map_err(|e| e.to_string())?;
    let v = pks_json(&["entropy", file.to_str().unwrap()])?;
    let h = v["outputs"]["entropy"].as_f64().ok_or("no entropy")?;
    let direct = entropy(&PRODUCT);
    ensure((h - direct).abs() <= 1e-12, || format!("CLI {h} vs direct {direct}"))?;
    ensure((h - 1.7329).abs() <= 5e-5, || format!("entropy {h}"))?;
    Ok(format!("H = {h} nats"))
}

fn c3_maxent() -> Outcome {
    let v = pks_json(&["extend", "--method", "maxent", FIXTURE])?;
    let p = values(&v);
    let residual = v["diagnostics"]["max_residual"].as_f64().ok_or("no residual")?;
    ensure(residual <= 1e-8, || format!("residual {residual:e}"))?;
    let target = [1.0 / 6.0, 0.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.0, 1.0 / 6.0];
    let linf = p.iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(linf <= 1e-3, || format!("L-inf {linf:e}"))?;
    ensure(p[6] <= 1e-6 && p[1] <= 1e-6, || format!("zeros {} {}", p[6], p[1]))?;
    let h = entropy(&p);
    ensure((h - 1.7918).abs() <= 1e-3, || format!("entropy {h}"))?;
    // The compatible set is the segment P(a) with a in [0, 1/4]; the 1-D
    // oracle places the entropy maximum at a = 1/6.
    let a = oracle::counterexample_parameter();
    ensure((a - 1.0 / 6.0).abs() <= 1e-6, || format!("1-D oracle optimum {a}"))?;
    ensure((p[2] - a).abs() <= 1e-3, || format!("solver a = {} vs oracle {a}", p[2]))?;
    Ok(format!("residual {residual:e}, L-inf {linf:e}, H = {h}, oracle a = {a:.9}"))
}

fn c4_ci_failure() -> Outcome {
    let p = values(&pks_json(&["extend", "--method", "maxent", FIXTURE])?);
    // Index bits are (x1, x2, x3) with x1 most significant.
    let x3 = p[1] + p[3] + p[5] + p[7];
    let x1 = (p[5] + p[7]) / x3;
    let x2 = (p[3] + p[7]) / x3;
    let x12 = p[7] / x3;
    ensure((x1 - 2.0 / 3.0).abs() <= 1e-3, || format!("P(x1|x3) = {x1}"))?;
    ensure((x2 - 2.0 / 3.0).abs() <= 1e-3, || format!("P(x2|x3) = {x2}"))?;
    ensure((x12 - 1.0 / 3.0).abs() <= 1e-3, || format!("P(x1,x2|x3) = {x12}"))?;
    ensure((x12 - x1 * x2).abs() > 0.1, || format!("gap {}", (x12 - x1 * x2).abs()))?;
    Ok(format!("{x1:.6}, {x2:.6}, {x12:.6} vs product {:.6}", x1 * x2))
}

fn c5_entropy_gap() -> Outcome {
    let hp = entropy(&values(&pks_json(&["extend", "--method", "product", FIXTURE])?));
    let hm = entropy(&values(&pks_json(&["extend", "--method", "maxent", FIXTURE])?));
    let gap = hm - hp;
    ensure((gap - 0.0589).abs() <= 2e-3, || format!("gap {gap}"))?;
    Ok(format!("gap {gap} nats"))
}

fn sample_webs(seed: u64, count: usize, forest: bool) -> Vec<ProbabilitySystem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = WebShape {
        forest,
        new_root_prob: 0.25,
        zero_prob: 0.1,
    };
    (0..count)
        .map(|_| {
            let space = random_space(&mut rng, 4, 3);
            random_conditional_web(&mut rng, &space, shape)
        })
        .collect()
}

/// Dominance violations found while running criteria 6 and 7.
struct Dominance {
    checked: usize,
    worst: f64,
}

fn c6_forest_theorem(dom: &mut Dominance) -> Outcome {
    let cfg = SolverConfig::default();
    let webs = sample_webs(6, 200, true);
    let (mut linf, mut dh) = (0.0f64, 0.0f64);
    for (i, pc) in webs.iter().enumerate() {
        ensure(pc.structure().classify().map_err(|e| e.to_string())?.is_forest, || {
            format!("sample {i} is not a forest")
        })?;
        let prod = product_extension(pc).map_err(|e| format!("sample {i}: {e}"))?;
        let me = maxent_extension(pc, &cfg).map_err(|e| format!("sample {i}: {e}"))?;
        linf = linf.max(prod.distribution.max_abs_diff(&me.distribution));
        dh = dh.max((prod.entropy - me.entropy).abs());
        dom.checked += 1;
        dom.worst = dom.worst.max(prod.entropy - me.entropy);
    }
    ensure(linf <= 1e-4 && dh <= 1e-5, || format!("L-inf {linf:e}, entropy {dh:e}"))?;
    Ok(format!("200 forests, worst L-inf {linf:e}, worst entropy gap {dh:e}"))
}

fn c7_web_properties(dom: &mut Dominance) -> Outcome {
    let cfg = SolverConfig::default();
    let webs = sample_webs(7, 500, false);
    let (mut sum_err, mut residual) = (0.0f64, 0.0f64);
    for (i, pc) in webs.iter().enumerate() {
        let prod = product_extension(pc).map_err(|e| format!("sample {i}: {e}"))?;
        let total: f64 = prod.distribution.probabilities().iter().sum();
        sum_err = sum_err.max((total - 1.0).abs());
        let c = pc.compatible(&prod.distribution, 1e-9).map_err(|e| e.to_string())?;
        ensure(c.compatible, || format!("sample {i}: residual {:e}", c.max_residual))?;
        residual = residual.max(c.max_residual);
        let me = maxent_extension(pc, &cfg).map_err(|e| format!("sample {i}: {e}"))?;
        dom.checked += 1;
        dom.worst = dom.worst.max(prod.entropy - me.entropy);
    }
    ensure(sum_err <= 1e-10, || format!("sum error {sum_err:e}"))?;
    Ok(format!("500 webs, worst sum error {sum_err:e}, worst residual {residual:e}"))
}

fn c8_dominance(dom: &Dominance) -> Outcome {
    ensure(dom.checked >= 700, || format!("only {} samples", dom.checked))?;
    ensure(dom.worst <= 1e-6, || format!("product beats maxent by {:e}", dom.worst))?;
    Ok(format!("{} webs, max H(product) - H(maxent) = {:e}", dom.checked, dom.worst))
}

fn c9_consistency() -> Outcome {
    let v = pks_json(&["check", FIXTURE])?;
    ensure(v["outputs"]["status"] == "consistent", || format!("fixture: {}", v["outputs"]))?;
    let r = v["diagnostics"]["max_residual"].as_f64().ok_or("no residual")?;
    ensure(r <= 1e-8, || format!("witness residual {r:e}"))?;
    let w = pks_json(&["check", INCONSISTENT])?;
    ensure(w["outputs"]["status"] == "inconsistent", || format!("contradiction: {}", w["outputs"]))?;
    let bound = w["diagnostics"]["residual_lower_bound"].as_f64().unwrap_or(0.0);
    Ok(format!("witness residual {r:e}; contradiction lower bound {bound:e}"))
}

fn c10_oracle() -> Outcome {
    let cfg = SolverConfig::default();
    let corpus = oracle::corpus();
    ensure(corpus.len() == 25, || format!("corpus has {}", corpus.len()))?;
    let mut worst = 0.0f64;
    for e in &corpus {
        let o = oracle::brute_force_maxent(&e.system, &e.start);
        let s = maxent_extension(&e.system, &cfg).map_err(|err| format!("{}: {err}", e.name))?;
        let d = s
            .distribution
            .probabilities()
            .iter()
            .zip(&o)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        ensure(d <= 1e-3, || format!("{}: L-inf {d:e}", e.name))?;
        worst = worst.max(d);
    }
    Ok(format!("25 systems, worst L-inf {worst:e}"))
}

fn c11_prune() -> Outcome {
    let v = pks_json(&["prune", FIXTURE])?;
    let o = &v["outputs"];
    let labels: Vec<&str> = o["best_labels"]
        .as_array()
        .ok_or("no labels")?
        .iter()
        .filter_map(|x| x.as_str())
        .collect();
    ensure(labels == ["(X1)", "(X2)"], || format!("best {labels:?}"))?;
    let value = o["information"].as_f64().ok_or("no value")?;
    let loss = o["information_loss"].as_f64().ok_or("no loss")?;
    ensure((value - 8f64.ln()).abs() <= 1e-4, || format!("value {value}"))?;
    ensure((loss - (4.0f64 / 3.0).ln()).abs() <= 1e-3, || format!("loss {loss}"))?;
    Ok(format!("{{(X1),(X2)}}, value {value}, loss {loss}"))
}

fn c12_classification() -> Outcome {
    let r = pks(&["classify", FIXTURE]);
    ensure(r.code == 0, || r.stderr.clone())?;
    let line = r.stdout.lines().next().unwrap_or("");
    ensure(line == "web: yes, forest: no, conditional-web: yes, bayes-net: yes", || line.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut webs, mut forests) = (0, 0);
    let mut disagreements = Vec::new();
    for i in 0..1000 {
        let space = random_space(&mut rng, 5, 3);
        let st = random_structure(&mut rng, &space, 6);
        let a = st.classify().map_err(|e| e.to_string())?;
        let b = st.classify_greedy().map_err(|e| e.to_string())?;
        if (a.is_web, a.is_forest) != (b.is_web, b.is_forest) {
            disagreements.push(format!(
                "#{i} {st} (backtracking web {} forest {}, greedy web {} forest {})",
                a.is_web, a.is_forest, b.is_web, b.is_forest
            ));
        }
        webs += usize::from(a.is_web);
        forests += usize::from(a.is_forest);
    }
    ensure(disagreements.is_empty(), || {
        format!(
            "greedy and backtracking disagree on {} of 1000 structures: {}",
            disagreements.len(),
            disagreements.join("; ")
        )
    })?;
    Ok(format!("fixture line ok; 1000 structures agree ({webs} webs, {forests} forests)"))
}

fn main() {
    let mut dom = Dominance {
        checked: 0,
        worst: f64::NEG_INFINITY,
    };
    let mut failed = 0;
    let mut report = |n: usize, title: &str, limit: Duration, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let result = f();
        let took = start.elapsed();
        let result = result.and_then(|d| {
            if took <= limit {
                Ok(d)
            } else {
                Err(format!("took {took:?}, limit {limit:?}"))
            }
        });
        match result {
            Ok(detail) => println!("PASS {n:>2} {title}: {detail} ({:.3} s)", took.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {n:>2} {title}: {why} ({:.3} s)", took.as_secs_f64());
            }
        }
    };
    let s = Duration::from_secs;
    report(1, "product extension of the counterexample", s(1), &mut c1_product_table);
    report(2, "product entropy", s(1), &mut c2_product_entropy);
    report(3, "maximum-entropy extension", s(5), &mut c3_maxent);
    report(4, "conditional independence fails under maxent", s(1), &mut c4_ci_failure);
    report(5, "entropy gap", s(5), &mut c5_entropy_gap);
    report(6, "forest product equals maxent", s(60), &mut || c6_forest_theorem(&mut dom));
    report(7, "conditional web product properties", s(30), &mut || c7_web_properties(&mut dom));
    report(8, "maxent dominates product", s(1), &mut || c8_dominance(&dom));
    report(9, "consistency check", s(2), &mut c9_consistency);
    report(10, "solver matches brute-force oracle", s(60), &mut c10_oracle);
    report(11, "most informative subforest", s(5), &mut c11_prune);
    report(12, "classification", s(30), &mut c12_classification);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 12 criteria passed");
}
