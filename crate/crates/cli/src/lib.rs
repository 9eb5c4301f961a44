//! The `pks` command-line tool as a library, so it can be driven in-process.
//!
//! [`run`] takes the argument vector and returns the exit code together with
//! everything that would go to standard output and standard error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use pks_core::counterexample::{self, Comparison, Tolerances};
use pks_core::format;
use pks_core::{
    information, maxent_extension, most_informative_forest, product_extension, ConsistencyReport,
    ConsistencyStatus, Error, ExtensionResult, JointDistribution, Method, ProbabilitySystem,
    SolverConfig, Structure,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INCONSISTENT: i32 = 3;
pub const EXIT_NONCONVERGENCE: i32 = 4;
pub const EXIT_CAPACITY: i32 = 5;
/// `demo` ran, but a reproduced number missed its reference value.
pub const EXIT_CHECK_FAILED: i32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Product,
    Maxent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    Counterexample,
}

#[derive(Debug, Parser)]
#[command(name = "pks", version, about = "Partially specified probabilistic knowledge systems")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "text")]
    pub format: OutputFormat,

    /// Tolerance on table row sums when reading files.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub table_tol: f64,

    /// Include wall-clock timings in JSON output (makes output nondeterministic).
    #[arg(long, global = true)]
    pub timings: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report web, forest, conditional-web and Bayes-net shape.
    Classify { file: PathBuf },
    /// Extend a system to a full joint distribution.
    Extend {
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Residual tolerance for the maximum-entropy solver.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Rewrite overlapping absolute components as conditionals first
        /// (product method only).
        #[arg(long)]
        convert: bool,
        file: PathBuf,
    },
    /// Decide whether any joint distribution satisfies the system.
    Check { file: PathBuf },
    /// Information value: the maximum entropy over compatible distributions.
    Info { file: PathBuf },
    /// Find the most informative subforest.
    Prune { file: PathBuf },
    /// Reproduce a worked example and check it against reference values.
    Demo {
        #[arg(value_enum)]
        name: DemoName,
        /// Override the entropy tolerances.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Entropy (nats) of a joint distribution file.
    Entropy { file: PathBuf },
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// What a command produced: text for people, JSON for machines, and the
/// exit code to use when the command itself went through.
struct Output {
    text: String,
    outputs: Value,
    diagnostics: Value,
    code: i32,
}

struct Failure {
    code: i32,
    message: String,
    diagnostics: Value,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Infeasible(_) => EXIT_INCONSISTENT,
            Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
            Error::Capacity { .. } => EXIT_CAPACITY,
            Error::Domain(_) | Error::Precondition(_) | Error::Parse { .. } | Error::Validation(_) => {
                EXIT_INPUT
            }
        };
        let diagnostics = match &e {
            Error::Infeasible(r) => consistency_json(r),
            Error::NonConvergence {
                iterations,
                residual,
                ..
            } => json!({ "iterations": iterations, "max_residual": residual }),
            Error::Parse {
                line,
                column,
                message,
            } => json!({ "line": line, "column": column, "message": message }),
            Error::Validation(v) => Value::Array(
                v.iter()
                    .map(|v| json!({ "component": v.component, "line": v.line, "message": v.message }))
                    .collect(),
            ),
            _ => Value::Null,
        };
        Failure {
            code,
            message: e.to_string(),
            diagnostics,
        }
    }
}

struct Input {
    path: String,
    sha256: String,
    text: String,
}

fn read_input(path: &Path) -> Result<Input, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure {
        code: EXIT_INPUT,
        message: format!("{}: {e}", path.display()),
        diagnostics: Value::Null,
    })?;
    let sha256 = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|e| Failure {
        code: EXIT_INPUT,
        message: format!("{}: not UTF-8: {e}", path.display()),
        diagnostics: Value::Null,
    })?;
    Ok(Input {
        path: path.display().to_string(),
        sha256,
        text,
    })
}

fn with_path(input: &Input, f: Failure) -> Failure {
    Failure {
        message: format!("{}: {}", input.path, f.message),
        ..f
    }
}

/// Runs `pks` with `args` (including the program name).
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Outcome {
                    code: EXIT_OK,
                    stdout: rendered,
                    stderr: String::new(),
                },
                _ => Outcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: rendered,
                },
            };
        }
    };
    execute(&cli)
}

pub fn execute(cli: &Cli) -> Outcome {
    let start = Instant::now();
    let mut inputs = Vec::new();
    let result = dispatch(cli, &mut inputs);
    let elapsed = start.elapsed().as_secs_f64();
    let input_json: Vec<Value> = inputs
        .iter()
        .map(|i| json!({ "path": i.path, "sha256": i.sha256 }))
        .collect();
    let command = command_name(&cli.command);

    let (code, text, report, stderr) = match result {
        Ok(out) => {
            let report = json!({
                "command": command,
                "inputs": input_json,
                "outputs": out.outputs,
                "diagnostics": out.diagnostics,
            });
            (out.code, out.text, report, String::new())
        }
        Err(f) => {
            let report = json!({
                "command": command,
                "inputs": input_json,
                "error": { "code": f.code, "message": f.message },
                "diagnostics": f.diagnostics,
            });
            (f.code, String::new(), report, format!("pks: {}\n", f.message))
        }
    };
    let stdout = match cli.format {
        OutputFormat::Text => text,
        OutputFormat::Json => {
            let mut report = report;
            if cli.timings {
                report["timings"] = json!({ "total_seconds": elapsed });
            }
            let mut s = serde_json::to_string_pretty(&report).expect("json values serialize");
            s.push('\n');
            s
        }
    };
    Outcome {
        code,
        stdout,
        stderr,
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Classify { .. } => "classify",
        Command::Extend { .. } => "extend",
        Command::Check { .. } => "check",
        Command::Info { .. } => "info",
        Command::Prune { .. } => "prune",
        Command::Demo { .. } => "demo",
        Command::Entropy { .. } => "entropy",
    }
}

fn solver_config(tol: Option<f64>, max_iter: Option<usize>) -> SolverConfig {
    let mut cfg = SolverConfig::default();
    if let Some(t) = tol {
        cfg.residual_tol = t;
    }
    if let Some(n) = max_iter {
        cfg.max_iterations = n;
    }
    cfg
}

fn load_system(cli: &Cli, path: &Path, inputs: &mut Vec<Input>) -> Result<ProbabilitySystem, Failure> {
    let input = read_input(path)?;
    let parsed = format::parse_system(&input.text, cli.table_tol).map_err(|e| with_path(&input, e.into()));
    inputs.push(input);
    parsed
}

fn dispatch(cli: &Cli, inputs: &mut Vec<Input>) -> Result<Output, Failure> {
    match &cli.command {
        Command::Classify { file } => classify(&load_system(cli, file, inputs)?),
        Command::Extend {
            method,
            tol,
            max_iter,
            convert,
            file,
        } => {
            let pc = load_system(cli, file, inputs)?;
            extend(&pc, *method, &solver_config(*tol, *max_iter), *convert)
        }
        Command::Check { file } => check(&load_system(cli, file, inputs)?),
        Command::Info { file } => info(&load_system(cli, file, inputs)?),
        Command::Prune { file } => prune(&load_system(cli, file, inputs)?),
        Command::Demo { name: DemoName::Counterexample, tol } => demo(*tol),
        Command::Entropy { file } => {
            let input = read_input(file)?;
            let parsed = format::parse_joint(&input.text, cli.table_tol).map_err(|e| with_path(&input, e.into()));
            inputs.push(input);
            entropy(&parsed?)
        }
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn labels(structure: &Structure, indices: &[usize]) -> Vec<String> {
    indices
        .iter()
        .map(|&i| structure.components()[i].label(structure.space()))
        .collect()
}

fn classify(pc: &ProbabilitySystem) -> Result<Output, Failure> {
    let st = pc.structure();
    let k = st.classify()?;
    let mut text = format!(
        "web: {}, forest: {}, conditional-web: {}, bayes-net: {}\n",
        yes_no(k.is_web),
        yes_no(k.is_forest),
        yes_no(k.is_conditional_web),
        yes_no(k.is_bayes_net_shape)
    );
    let order = k.unpack_order.as_ref().map(|o| labels(&st, o));
    if let Some(o) = &order {
        writeln!(text, "unpack order: {}", o.join(", ")).unwrap();
    }
    Ok(Output {
        text,
        outputs: json!({
            "structure": st.to_string(),
            "web": k.is_web,
            "forest": k.is_forest,
            "conditional_web": k.is_conditional_web,
            "bayes_net": k.is_bayes_net_shape,
            "unpack_order": k.unpack_order,
            "unpack_labels": order,
        }),
        diagnostics: Value::Null,
        code: EXIT_OK,
    })
}

fn joint_json(p: &JointDistribution) -> Value {
    let descriptors: Vec<Value> = p
        .space()
        .descriptors()
        .iter()
        .map(|d| json!({ "name": d.name, "arity": d.arity }))
        .collect();
    json!({ "descriptors": descriptors, "values": p.probabilities() })
}

fn extend(pc: &ProbabilitySystem, method: MethodArg, cfg: &SolverConfig, convert: bool) -> Result<Output, Failure> {
    let (result, converted): (ExtensionResult, Vec<usize>) = match method {
        MethodArg::Product if convert => {
            let (conv, ix) = pks_core::extension::conditional_form(pc)?;
            (product_extension(&conv)?, ix)
        }
        MethodArg::Product => (product_extension(pc)?, Vec::new()),
        MethodArg::Maxent => (maxent_extension(pc, cfg)?, Vec::new()),
    };
    let mut text = String::new();
    writeln!(text, "# method {}", result.method.name()).unwrap();
    writeln!(text, "# entropy {}", result.entropy).unwrap();
    writeln!(text, "# max-residual {:e}", result.max_residual).unwrap();
    if result.method == Method::MaxEnt {
        writeln!(text, "# iterations {}", result.iterations).unwrap();
    }
    if !converted.is_empty() {
        writeln!(text, "# converted components {converted:?}").unwrap();
    }
    text.push_str(&format::write_joint(&result.distribution));
    Ok(Output {
        text,
        outputs: json!({
            "method": result.method.name(),
            "distribution": joint_json(&result.distribution),
            "entropy": result.entropy,
        }),
        diagnostics: json!({
            "iterations": result.iterations,
            "max_residual": result.max_residual,
            "converted_components": converted,
        }),
        code: EXIT_OK,
    })
}

fn status_name(s: ConsistencyStatus) -> &'static str {
    match s {
        ConsistencyStatus::Consistent => "consistent",
        ConsistencyStatus::Inconsistent => "inconsistent",
        ConsistencyStatus::Indeterminate => "indeterminate",
    }
}

fn consistency_json(r: &ConsistencyReport) -> Value {
    json!({
        "status": status_name(r.status),
        "max_residual": r.max_residual,
        "phase_one_objective": r.phase_one_objective,
        "witness_is_maxent": r.witness_is_maxent,
        "residual_lower_bound": r.residual_lower_bound,
        "certificate": r.certificate.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
        "vacuous_rows": r.vacuous_rows,
        "witness": r.witness.as_ref().map(joint_json),
    })
}

fn check(pc: &ProbabilitySystem) -> Result<Output, Failure> {
    let r = pc.is_consistent(&SolverConfig::default())?;
    let mut text = format!("{}\n", r.summary());
    match r.status {
        ConsistencyStatus::Consistent => {
            if !r.vacuous_rows.is_empty() {
                writeln!(text, "vacuous conditional rows (component, given-state): {:?}", r.vacuous_rows).unwrap();
            }
            if let Some(w) = &r.witness {
                writeln!(
                    text,
                    "# witness ({})",
                    if r.witness_is_maxent { "maximum entropy" } else { "LP vertex" }
                )
                .unwrap();
                text.push_str(&format::write_joint(w));
            }
        }
        ConsistencyStatus::Inconsistent => {
            writeln!(text, "every joint misses some constraint by at least {:e}", r.residual_lower_bound).unwrap();
            writeln!(text, "certificate:").unwrap();
            for t in &r.certificate {
                writeln!(text, "  {t}").unwrap();
            }
        }
        ConsistencyStatus::Indeterminate => {}
    }
    let code = if r.status == ConsistencyStatus::Indeterminate {
        EXIT_NONCONVERGENCE
    } else {
        EXIT_OK
    };
    Ok(Output {
        text,
        outputs: json!({ "consistent": r.is_consistent(), "status": status_name(r.status) }),
        diagnostics: consistency_json(&r),
        code,
    })
}

fn info(pc: &ProbabilitySystem) -> Result<Output, Failure> {
    let r = information(pc, &SolverConfig::default())?;
    let text = format!(
        "information: {} nats (maximum entropy over compatible distributions)\n\
         iterations: {}\nmax residual: {:e}\n",
        r.value, r.iterations, r.max_residual
    );
    Ok(Output {
        text,
        outputs: json!({
            "information": r.value,
            "convention": "maximum entropy over compatible distributions; smaller means more informative",
            "distribution": joint_json(&r.distribution),
        }),
        diagnostics: json!({ "iterations": r.iterations, "max_residual": r.max_residual }),
        code: EXIT_OK,
    })
}

fn prune(pc: &ProbabilitySystem) -> Result<Output, Failure> {
    let r = most_informative_forest(pc, &SolverConfig::default())?;
    let st = pc.structure();
    let best = labels(&st, &r.best_components);
    let mut text = format!("best subforest: {}\n", best.join(", "));
    writeln!(text, "information: {}", r.best_value).unwrap();
    match (r.full_value, r.information_loss) {
        (Some(full), Some(loss)) => {
            writeln!(text, "full system: {full}").unwrap();
            writeln!(text, "information loss: {loss}").unwrap();
        }
        _ => writeln!(text, "full system: inconsistent").unwrap(),
    }
    writeln!(text, "evaluated:").unwrap();
    let mut evaluated = Vec::new();
    for e in &r.evaluated {
        let l = labels(&st, &e.components);
        writeln!(text, "  {}: {}", l.join(", "), e.value).unwrap();
        evaluated.push(json!({ "components": e.components, "labels": l, "information": e.value }));
    }
    Ok(Output {
        text,
        outputs: json!({
            "best_components": r.best_components,
            "best_labels": best,
            "information": r.best_value,
            "full_information": r.full_value,
            "information_loss": r.information_loss,
            "evaluated": evaluated,
        }),
        diagnostics: json!({ "tie_tolerance": pks_core::extension::FOREST_TIE_TOL }),
        code: EXIT_OK,
    })
}

fn demo(tol: Option<f64>) -> Result<Output, Failure> {
    let mut tols = Tolerances::default();
    if let Some(t) = tol {
        tols.product_entropy = t;
        tols.maxent_entropy = t;
    }
    let r = counterexample::verify(&tols, &SolverConfig::default())?;
    let reference = counterexample::maxent_table();
    let product = r.product.distribution.probabilities();
    let maxent = r.maxent.distribution.probabilities();
    let space = r.system.space();

    let mut text = String::new();
    writeln!(text, "system: {}", r.system.structure()).unwrap();
    writeln!(
        text,
        "web: {}, forest: {}",
        yes_no(r.classification.is_web),
        yes_no(r.classification.is_forest)
    )
    .unwrap();
    writeln!(text, "\n{:<10} {:>8} {:>22} {:>22}", "x1 x2 x3", "P*", "P^ (computed)", "P^ (ref)").unwrap();
    let mut rows = Vec::new();
    for i in 0..space.state_count() {
        let a = space.assignment_of(i).expect("index in range");
        let state = a.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("  ");
        writeln!(text, "{state:<10} {:>8} {:>22} {:>22}", product[i], maxent[i], reference[i]).unwrap();
        rows.push(json!({ "state": a, "product": product[i], "maxent": maxent[i], "maxent_reference": reference[i] }));
    }
    writeln!(
        text,
        "\nentropy(P*) = {} (reference {})",
        r.product.entropy,
        counterexample::PRODUCT_ENTROPY
    )
    .unwrap();
    writeln!(
        text,
        "entropy(P^) = {} (reference {})",
        r.maxent.entropy,
        counterexample::MAXENT_ENTROPY
    )
    .unwrap();
    let indep = r.x1_given_x3 * r.x2_given_x3;
    writeln!(
        text,
        "P^(x1=1|x3=1) = {}, P^(x2=1|x3=1) = {}, P^(x1=1,x2=1|x3=1) = {} vs product {}",
        r.x1_given_x3, r.x2_given_x3, r.x1x2_given_x3, indep
    )
    .unwrap();
    writeln!(text).unwrap();
    let mut checks = Vec::new();
    for c in &r.checks {
        let rel = match c.comparison {
            Comparison::Within => format!("within {:e} of {}", c.tolerance, c.expected),
            Comparison::AtLeast => format!(">= {}", c.expected),
            Comparison::AtMost => format!("<= {:e}", c.expected),
        };
        let actual = match c.comparison {
            Comparison::AtMost => format!("{:e}", c.actual),
            _ => c.actual.to_string(),
        };
        writeln!(text, "{} {}: {actual} ({rel})", if c.passed { "PASS" } else { "FAIL" }, c.name).unwrap();
        checks.push(json!({
            "name": c.name,
            "expected": c.expected,
            "actual": c.actual,
            "tolerance": c.tolerance,
            "comparison": format!("{:?}", c.comparison).to_lowercase(),
            "passed": c.passed,
        }));
    }
    let passed = r.passed();
    writeln!(text, "{}", if passed { "PASS" } else { "FAIL" }).unwrap();
    Ok(Output {
        text,
        outputs: json!({
            "web": r.classification.is_web,
            "forest": r.classification.is_forest,
            "table": rows,
            "product_entropy": r.product.entropy,
            "maxent_entropy": r.maxent.entropy,
            "x1_given_x3": r.x1_given_x3,
            "x2_given_x3": r.x2_given_x3,
            "x1x2_given_x3": r.x1x2_given_x3,
            "independent_product": indep,
            "checks": checks,
            "passed": passed,
        }),
        diagnostics: json!({
            "maxent_iterations": r.maxent.iterations,
            "maxent_max_residual": r.maxent.max_residual,
            "product_max_residual": r.product.max_residual,
        }),
        code: if passed { EXIT_OK } else { EXIT_CHECK_FAILED },
    })
}

fn entropy(p: &JointDistribution) -> Result<Output, Failure> {
    let h = p.entropy();
    Ok(Output {
        text: format!("{h}\n"),
        outputs: json!({ "entropy": h, "states": p.space().state_count() }),
        diagnostics: Value::Null,
        code: EXIT_OK,
    })
}
