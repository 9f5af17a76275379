//! Command-line front end: load or build a representation, run checks and
//! decompositions, and assemble one JSON document per run.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::hypotheses::{
    check_concavity, check_doubly_twisted, check_isometric, check_near_isometric, check_twist_family, check_twisted,
    check_twisted_forms, ConcavityCondition, Scope,
};
use crate::linalg::{c64, Frame, ToleranceConfig};
use crate::report::CheckReport;
use crate::repn::{
    check_covariance, check_covariance_product, gen_block_direct_sum, gen_random_unitary, gen_scaled_isometry,
    gen_truncated_fock, gen_twisted_fock_pair, gen_weighted_cyclic_shift, load_representation, CovariantRep,
    ProductSystemRep, Representation,
};
use crate::structure::verify_structure_identities;
use crate::wold::{compare_with_oracle, wold_multi, wold_single, MultiDecomposition, SingleDecomposition};

#[derive(Parser, Debug)]
#[command(name = "wold", version, about = "Wold-type decompositions of finite-dimensional covariant representations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run every applicable hypothesis checker.
    Check(SourceArgs),
    /// Single-correspondence decomposition `K = K1 ⊕ K2`.
    Decompose(SourceArgs),
    /// Multi-direction decomposition into `2^k` summands, compared with the oracle.
    Multi(SourceArgs),
    /// Build a named example and run the whole pipeline on it.
    Demo {
        name: DemoName,
        #[command(flatten)]
        options: Options,
    },
}

#[derive(Args, Debug)]
pub struct SourceArgs {
    /// Representation file (JSON).
    #[arg(long, required_unless_present = "demo", conflicts_with = "demo")]
    pub input: Option<PathBuf>,
    /// Use a built-in example instead of a file.
    #[arg(long)]
    pub demo: Option<DemoName>,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Args, Debug, Clone)]
pub struct Options {
    /// Level cap for spans, intersections and projection grids.
    #[arg(long, default_value_t = 6)]
    pub cap: usize,
    #[arg(long)]
    pub rank_tol: Option<f64>,
    #[arg(long)]
    pub eq_tol: Option<f64>,
    /// Write the JSON document here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Suppress the human-readable summary.
    #[arg(long)]
    pub json_only: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    /// Random unitary on C⁴ scaled by 0.5.
    ScaledIsometry,
    /// Cyclic weighted shift on C⁵, weights (0, 0.5, 1, 0.5, 1).
    WeightedCyclic,
    /// Truncated Fock space, d = 2, levels 0..=3.
    TruncatedFock,
    /// Twisted creation pair, ω = e^{2πi/5}, N = 3.
    TwistedFockPair,
    /// Truncated shift on C³ ⊕ random unitary on C².
    BlockMixed,
}

impl DemoName {
    pub const ALL: [DemoName; 5] = [
        DemoName::ScaledIsometry,
        DemoName::WeightedCyclic,
        DemoName::TruncatedFock,
        DemoName::TwistedFockPair,
        DemoName::BlockMixed,
    ];

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.label() == label)
    }

    pub fn label(self) -> &'static str {
        match self {
            DemoName::ScaledIsometry => "scaled-isometry",
            DemoName::WeightedCyclic => "weighted-cyclic",
            DemoName::TruncatedFock => "truncated-fock",
            DemoName::TwistedFockPair => "twisted-fock-pair",
            DemoName::BlockMixed => "block-mixed",
        }
    }

    pub fn build(self, tol: &ToleranceConfig) -> Result<Representation> {
        const SEED: u64 = 7;
        Ok(match self {
            DemoName::ScaledIsometry => {
                let base = CovariantRep::from_operator(gen_random_unitary(4, SEED))?;
                Representation::Single(gen_scaled_isometry(&base, 0.5, tol)?)
            }
            DemoName::WeightedCyclic => {
                let w = [0.0, 0.5, 1.0, 0.5, 1.0].map(|x| c64(x, 0.0)).to_vec();
                Representation::Single(gen_weighted_cyclic_shift(1, 5, &[w])?)
            }
            DemoName::TruncatedFock => Representation::Single(gen_truncated_fock(2, 3, 1)?),
            DemoName::TwistedFockPair => {
                let t = 2.0 * std::f64::consts::PI / 5.0;
                Representation::Product(gen_twisted_fock_pair(c64(t.cos(), t.sin()), 3, 1, tol)?)
            }
            DemoName::BlockMixed => {
                let shift = gen_truncated_fock(1, 2, 1)?;
                let unitary = CovariantRep::from_operator(gen_random_unitary(2, SEED))?;
                Representation::Single(gen_block_direct_sum(&[shift, unitary])?)
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Check,
    Decompose,
    Multi,
    /// Checks plus the decomposition that fits the representation.
    Pipeline,
}

#[derive(Clone, Debug)]
pub enum Source {
    File(PathBuf),
    Demo(DemoName),
    /// An already-built representation (library callers).
    Given(Representation),
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub task: Task,
    pub source: Source,
    pub level_cap: usize,
    pub tol: ToleranceConfig,
    pub output: Option<PathBuf>,
    pub json_only: bool,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self> {
        let (task, source, options) = match cli.command {
            Command::Check(a) => (Task::Check, source_of(&a)?, a.options),
            Command::Decompose(a) => (Task::Decompose, source_of(&a)?, a.options),
            Command::Multi(a) => (Task::Multi, source_of(&a)?, a.options),
            Command::Demo { name, options } => (Task::Pipeline, Source::Demo(name), options),
        };
        let mut tol = ToleranceConfig::default();
        if let Some(x) = options.rank_tol {
            tol.rank_tol = x;
        }
        if let Some(x) = options.eq_tol {
            tol.eq_tol = x;
        }
        tol.validate()?;
        Ok(RunConfig {
            task,
            source,
            level_cap: options.cap,
            tol,
            output: options.out,
            json_only: options.json_only,
        })
    }
}

fn source_of(a: &SourceArgs) -> Result<Source> {
    match (&a.input, a.demo) {
        (Some(p), None) => Ok(Source::File(p.clone())),
        (None, Some(d)) => Ok(Source::Demo(d)),
        _ => Err(Error::BadParams("exactly one of --input and --demo is required".into())),
    }
}

/// A finished run: the JSON document, a text summary and the verdict.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub document: Value,
    pub summary: String,
    pub passed: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

struct Entry {
    report: CheckReport,
    required: bool,
}

#[derive(Default)]
struct Sections {
    hypotheses: Vec<Entry>,
    structure: Vec<Entry>,
    residuals: Vec<Entry>,
    decomposition: Value,
}

fn required(reports: impl IntoIterator<Item = CheckReport>) -> impl Iterator<Item = Entry> {
    reports.into_iter().map(|report| Entry { report, required: true })
}

fn scope_for(window: bool) -> Scope {
    if window {
        Scope::Window
    } else {
        Scope::Full
    }
}

/// Covariance and near-isometry are required (on the window when there is
/// one); isometry and the concavity conditions are informational.
fn single_hypotheses(rep: &CovariantRep, cap: usize, tol: &ToleranceConfig) -> Result<Vec<Entry>> {
    let windowed = rep.window_mask().is_some();
    let mut out = vec![Entry {
        report: check_covariance(rep, tol)?,
        required: true,
    }];
    let mut scopes = vec![Scope::Full];
    if windowed {
        scopes.push(Scope::Window);
    }
    for scope in scopes {
        let primary = scope == scope_for(windowed);
        out.push(Entry {
            report: check_isometric(rep, scope, tol)?,
            required: false,
        });
        let (a, b) = check_near_isometric(rep, cap.clamp(1, 4), scope, tol)?;
        out.push(Entry { report: a, required: primary });
        out.push(Entry { report: b, required: primary });
    }
    for cond in [
        ConcavityCondition::Concave,
        ConcavityCondition::BlockNorm,
        ConcavityCondition::GramSquare,
    ] {
        out.push(Entry {
            report: check_concavity(rep, &cond, Scope::Full, tol)?,
            required: false,
        });
    }
    Ok(out)
}

fn product_hypotheses(psr: &ProductSystemRep, tol: &ToleranceConfig) -> Result<Vec<Entry>> {
    let scope = scope_for(psr.window_mask().is_some());
    Ok(required([
        check_covariance_product(psr, tol)?,
        check_twist_family(psr, tol)?,
        check_twisted(psr, scope, tol)?,
        check_twisted_forms(psr, scope, tol)?,
        check_doubly_twisted(psr, scope, tol)?,
    ])
    .collect())
}

fn structure_checks(psr: &ProductSystemRep, cap: usize, tol: &ToleranceConfig) -> Result<Vec<Entry>> {
    let scope = scope_for(psr.window_mask().is_some());
    Ok(required(verify_structure_identities(psr, cap.min(4), scope, tol)?).collect())
}

fn frame_json(f: &Frame) -> Value {
    let b = f.canonical_basis();
    let vectors: Vec<Value> = b
        .column_iter()
        .map(|c| Value::Array(c.iter().map(|z| json!([z.re, z.im])).collect()))
        .collect();
    json!({ "rank": f.rank(), "basis": vectors })
}

fn single_json(dec: &SingleDecomposition) -> Value {
    json!({
        "kind": "single",
        "level_cap": dec.level_cap,
        "stabilized": dec.stabilized,
        "K1_stabilized": dec.k1_stabilized,
        "K2_stabilized": dec.k2_stabilized,
        "ranks": {
            "wandering": dec.wandering.rank(),
            "grades": dec.grades.iter().map(Frame::rank).collect::<Vec<_>>(),
            "K1": dec.k1.rank(),
            "K2": dec.k2.rank(),
        },
        "wandering": frame_json(&dec.wandering),
        "grades": dec.grades.iter().map(frame_json).collect::<Vec<_>>(),
        "K1": frame_json(&dec.k1),
        "K2": frame_json(&dec.k2),
        "residuals": dec.residuals,
    })
}

fn multi_json(dec: &MultiDecomposition, oracle: &[crate::wold::OracleComparison]) -> Value {
    let summands: Vec<Value> = dec
        .summands
        .iter()
        .map(|s| {
            let classification: Vec<Value> = s
                .classification
                .iter()
                .map(|c| {
                    json!({
                        "direction": c.direction + 1,
                        "expected": c.expected,
                        "observed": c.observed,
                        "surjectivity_margin": c.surjectivity_margin,
                        "grade_overlap": c.grade_overlap,
                        "ok": c.ok,
                    })
                })
                .collect();
            json!({
                "beta": s.beta.iter().map(|i| i + 1).collect::<Vec<_>>(),
                "label": s.label,
                "rank": s.frame.rank(),
                "stabilized": s.stabilized,
                "reducing_defect": s.reducing_defect,
                "classification": classification,
                "frame": frame_json(&s.frame),
            })
        })
        .collect();
    json!({
        "kind": "multi",
        "level_caps": dec.level_caps,
        "stabilized": dec.stabilized,
        "summands": summands,
        "residuals": dec.residuals,
        "oracle": oracle,
    })
}

fn run_single_decomposition(rep: &CovariantRep, cfg: &RunConfig, out: &mut Sections) -> Result<()> {
    let dec = wold_single(rep, cfg.level_cap, &cfg.tol)?;
    out.residuals.extend(required(dec.residual_reports(&cfg.tol)));
    out.decomposition = single_json(&dec);
    Ok(())
}

fn run_multi_decomposition(psr: &ProductSystemRep, cfg: &RunConfig, out: &mut Sections) -> Result<()> {
    let caps = vec![cfg.level_cap; psr.k()];
    let dec = wold_multi(psr, &caps, &cfg.tol)?;
    let oracle = compare_with_oracle(psr, &dec, &cfg.tol)?;
    out.residuals.extend(required(dec.residual_reports(&cfg.tol)));
    let worst = oracle.iter().map(|c| c.max_angle).fold(0.0, f64::max);
    let mut agreement = CheckReport::new("oracle_agreement", worst, cfg.tol.eq_tol, false);
    for c in oracle.iter().filter(|c| c.engine_rank != c.oracle_rank) {
        agreement = agreement.fail_with(format!(
            "K{}: engine rank {}, oracle rank {}",
            c.label, c.engine_rank, c.oracle_rank
        ));
    }
    out.residuals.push(Entry {
        report: agreement,
        required: true,
    });
    out.decomposition = multi_json(&dec, &oracle);
    Ok(())
}

fn load(source: &Source, tol: &ToleranceConfig) -> Result<Representation> {
    match source {
        Source::File(p) => load_representation(p),
        Source::Demo(d) => d.build(tol),
        Source::Given(r) => Ok(r.clone()),
    }
}

fn entries_json(entries: &[Entry]) -> Value {
    Value::Array(
        entries
            .iter()
            .map(|e| {
                let mut v = serde_json::to_value(&e.report).expect("reports serialize");
                if let Value::Object(map) = &mut v {
                    map.insert("required".into(), json!(e.required));
                }
                v
            })
            .collect(),
    )
}

fn summary_line(e: &Entry) -> String {
    let r = &e.report;
    let verdict = match (r.passed, e.required) {
        (true, _) => "PASS",
        (false, true) => "FAIL",
        (false, false) => "fail",
    };
    let scope = if r.window_restricted { " [window]" } else { "" };
    let mut line = format!("{verdict} {}{scope} residual={:e} tol={:e}", r.name, r.residual, r.tolerance);
    if let Some(w) = &r.worst {
        line.push_str(&format!(" worst={w}"));
    }
    line
}

/// Execute one run. Errors mean the input could not be processed at all;
/// failed checks are reported in the outcome.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    cfg.tol.validate()?;
    let rep = load(&cfg.source, &cfg.tol)?;
    let mut s = Sections {
        decomposition: Value::Null,
        ..Default::default()
    };
    match (&rep, cfg.task) {
        (Representation::Single(r), Task::Check) => s.hypotheses = single_hypotheses(r, cfg.level_cap, &cfg.tol)?,
        (Representation::Single(r), Task::Decompose | Task::Pipeline) => {
            s.hypotheses = single_hypotheses(r, cfg.level_cap, &cfg.tol)?;
            run_single_decomposition(r, cfg, &mut s)?;
        }
        (Representation::Single(r), Task::Multi) => {
            s.hypotheses = single_hypotheses(r, cfg.level_cap, &cfg.tol)?;
            run_multi_decomposition(&ProductSystemRep::from_single(r), cfg, &mut s)?;
        }
        (Representation::Product(p), Task::Decompose) => {
            if p.k() != 1 {
                return Err(Error::BadParams(format!(
                    "decompose needs a single direction, the input has {}; use multi",
                    p.k()
                )));
            }
            let r = p.direction(0);
            s.hypotheses = single_hypotheses(&r, cfg.level_cap, &cfg.tol)?;
            run_single_decomposition(&r, cfg, &mut s)?;
        }
        (Representation::Product(p), task) => {
            s.hypotheses = product_hypotheses(p, &cfg.tol)?;
            s.structure = structure_checks(p, cfg.level_cap, &cfg.tol)?;
            if task != Task::Check {
                run_multi_decomposition(p, cfg, &mut s)?;
            }
        }
    }

    let all = || s.hypotheses.iter().chain(&s.structure).chain(&s.residuals);
    let failed: Vec<&str> = all()
        .filter(|e| e.required && !e.report.passed)
        .map(|e| e.report.name.as_str())
        .collect();
    let passed = failed.is_empty();

    let source = match &cfg.source {
        Source::File(p) => json!({ "input": p.display().to_string() }),
        Source::Demo(d) => json!({ "demo": d.label() }),
        Source::Given(_) => json!({ "given": true }),
    };
    let mut meta = Map::new();
    meta.insert("tool".into(), json!(env!("CARGO_PKG_NAME")));
    meta.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    meta.insert("command".into(), json!(format!("{:?}", cfg.task).to_lowercase()));
    meta.insert("source".into(), source);
    meta.insert("level_cap".into(), json!(cfg.level_cap));
    meta.insert("tolerances".into(), json!(cfg.tol));
    meta.insert("passed".into(), json!(passed));
    meta.insert("failed".into(), json!(failed));

    let document = json!({
        "hypotheses": entries_json(&s.hypotheses),
        "structure_identities": entries_json(&s.structure),
        "decomposition": s.decomposition,
        "residuals": entries_json(&s.residuals),
        "meta": Value::Object(meta),
    });

    let mut summary = String::new();
    for (title, entries) in [
        ("hypotheses", &s.hypotheses),
        ("structure identities", &s.structure),
        ("residuals", &s.residuals),
    ] {
        if entries.is_empty() {
            continue;
        }
        summary.push_str(&format!("{title}:\n"));
        for e in entries {
            summary.push_str(&format!("  {}\n", summary_line(e)));
        }
    }
    if let Some(line) = decomposition_line(&s.decomposition) {
        summary.push_str(&line);
    }
    summary.push_str(if passed { "overall: PASS\n" } else { "overall: FAIL\n" });
    Ok(Outcome {
        document,
        summary,
        passed,
    })
}

fn decomposition_line(d: &Value) -> Option<String> {
    match d.get("kind")?.as_str()? {
        "single" => Some(format!(
            "decomposition: rank K1 = {}, rank K2 = {}, grade ranks {}\n",
            d["ranks"]["K1"], d["ranks"]["K2"], d["ranks"]["grades"]
        )),
        _ => {
            let parts: Vec<String> = d["summands"]
                .as_array()?
                .iter()
                .map(|s| format!("K{} rank {}", s["label"].as_str().unwrap_or("?"), s["rank"]))
                .collect();
            Some(format!("decomposition: {}\n", parts.join(", ")))
        }
    }
}

/// Write the document to `path` (pretty-printed, trailing newline).
pub fn write_document(doc: &Value, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc).expect("documents serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Parse arguments, run, print, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let cfg = match RunConfig::from_cli(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let outcome = match run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match &cfg.output {
        Some(path) => {
            if let Err(e) = write_document(&outcome.document, path) {
                eprintln!("error: {e}");
                return 2;
            }
            if !cfg.json_only {
                print!("{}", outcome.summary);
            }
        }
        None => {
            if !cfg.json_only {
                eprint!("{}", outcome.summary);
            }
            println!("{}", serde_json::to_string_pretty(&outcome.document).expect("documents serialize"));
        }
    }
    outcome.exit_code()
}
