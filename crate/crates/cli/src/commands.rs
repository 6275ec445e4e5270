use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::Args;
use serde_json::{json, Map, Value};

use kemplab::expansion::{deficit as deficit_report, nonexpander_probe};
use kemplab::group::{cyclic_subgroup, make_cyclic, GroupModel};
use kemplab::hom::{inverse_pipeline, GammaPolicy, LambdaPolicy, PipelineConfig};
use kemplab::io::{self, SubsetFormat};
use kemplab::plant::{plant_spec, PlantSpec};
use kemplab::pseudometric::{
    alpha_lambda, ball_growth_check, gamma_linearity, kernel, pseudometric_from_set, verify_pseudometric, AlphaMode, PseudometricTable,
    SignContext,
};
use kemplab::quotient::transfer as transfer_pair;
use kemplab::rational::{fmt_q, parse_q};
use kemplab::suites::{run_suite, Suite, SuiteConfig};
use kemplab::sumset::{fast_product_set, kernel_for, product_set};
use kemplab::{Error, Side, Subset, Q};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Format, Inputs, Output};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    /// A library error, tagged with the command stage that raised it.
    Stage(&'static str, Error),
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Stage(_, e) if is_input_error(e) => 2,
            CliError::Stage(..) => 1,
            CliError::Internal(_) => 3,
        }
    }
}

fn is_input_error(e: &Error) -> bool {
    matches!(e, Error::Parse { .. } | Error::Io(_) | Error::ParentMismatch { .. } | Error::OutOfRange(_) | Error::BadTable(_))
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Stage(s, e) => write!(f, "{s}: {e}"),
            CliError::Internal(m) => write!(f, "internal: {m}"),
        }
    }
}

trait StageExt<T> {
    fn stage(self, s: &'static str) -> Result<T, CliError>;
}

impl<T> StageExt<T> for kemplab::Result<T> {
    fn stage(self, s: &'static str) -> Result<T, CliError> {
        self.map_err(|e| CliError::Stage(s, e))
    }
}

pub struct Outcome {
    pub pass: bool,
    report: Value,
    csv: String,
    out: Option<PathBuf>,
    format: Format,
}

impl Outcome {
    pub fn emit(&self) -> Result<(), CliError> {
        let text = match self.format {
            Format::Json => serde_json::to_string_pretty(&self.report).map_err(|e| CliError::Internal(e.to_string()))? + "\n",
            Format::Csv => self.csv.clone(),
        };
        match &self.out {
            Some(p) => io::write_file(p, &text).stage("output"),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

/// Report skeleton: command, config echo, result, verdict, timings.
struct Report {
    command: &'static str,
    seed: u64,
    config: Map<String, Value>,
    timings: Map<String, Value>,
    start: Instant,
}

impl Report {
    fn new(command: &'static str, seed: u64) -> Self {
        Report { command, seed, config: Map::new(), timings: Map::new(), start: Instant::now() }
    }

    fn config(mut self, k: &str, v: impl Into<Value>) -> Self {
        self.config.insert(k.into(), v.into());
        self
    }

    fn time<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let r = f();
        self.timings.insert(label.into(), json!(ms(t)));
        r
    }

    fn finish(mut self, o: &Output, result: Value, pass: bool, detail: String, csv: String) -> Outcome {
        self.timings.insert("total".into(), json!(ms(self.start)));
        let report = json!({
            "command": self.command,
            "seed": self.seed,
            "config": self.config,
            "result": result,
            "verdict": { "pass": pass, "detail": detail },
            "timings_ms": self.timings,
        });
        Outcome { pass, report, csv, out: o.out.clone(), format: o.format }
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn q(x: Q) -> Value {
    Value::String(fmt_q(&x))
}

fn set_json(s: &Subset) -> Value {
    json!({ "n": s.universe(), "size": s.len(), "indices": s.indices() })
}

fn to_value<T: serde::Serialize>(x: &T) -> Result<Value, CliError> {
    serde_json::to_value(x).map_err(|e| CliError::Internal(e.to_string()))
}

fn path_str(p: &Path) -> Value {
    Value::String(p.display().to_string())
}

fn parse_rational(flag: &str, s: &str) -> Result<Q, CliError> {
    parse_q(s).map_err(|_| CliError::Usage(format!("--{flag} expects P/Q, got {s:?}")))
}

/// `--lambda P/Q|auto`.
#[derive(Clone, Copy, Debug)]
pub struct LambdaArg(Option<Q>);

impl FromStr for LambdaArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(LambdaArg(None));
        }
        parse_q(s).map(|x| LambdaArg(Some(x))).map_err(|e| e.to_string())
    }
}

/// `--gamma P/Q|exact|fitted`.
#[derive(Clone, Copy, Debug)]
pub struct GammaArg(GammaPolicy);

impl FromStr for GammaArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(GammaArg(GammaPolicy::Exact)),
            "fitted" => Ok(GammaArg(GammaPolicy::Fitted)),
            _ => parse_q(s).map(|x| GammaArg(GammaPolicy::Fixed(x))).map_err(|e| e.to_string()),
        }
    }
}

impl GammaArg {
    fn value(self) -> Q {
        match self.0 {
            GammaPolicy::Fixed(x) => x,
            _ => Q::from_integer(0),
        }
    }

    fn label(self) -> String {
        match self.0 {
            GammaPolicy::Exact => "exact".into(),
            GammaPolicy::Fitted => "fitted".into(),
            GammaPolicy::Fixed(x) => fmt_q(&x),
        }
    }
}

fn load_pair(i: &Inputs) -> Result<(GroupModel, Subset, Subset), CliError> {
    let g = io::load_group(&i.group).stage("load group")?;
    let a = io::load_subset(&i.set_a, &g).stage("load set A")?;
    let b = match &i.set_b {
        Some(p) => io::load_subset(p, &g).stage("load set B")?,
        None => return Err(CliError::Usage("--set-b is required".into())),
    };
    Ok((g, a, b))
}

fn inputs_config(r: Report, i: &Inputs) -> Report {
    let r = r.config("group", path_str(&i.group)).config("set_a", path_str(&i.set_a));
    match &i.set_b {
        Some(b) => r.config("set_b", path_str(b)),
        None => r,
    }
}

// gen

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Planting spec file (`dims`, `len_a`, `len_b`, `noise`).
    #[arg(long, conflicts_with = "dims")]
    spec: Option<PathBuf>,
    /// Torus dimensions, e.g. `48,5`.
    #[arg(long, value_delimiter = ',', requires_all = ["len_a", "len_b"])]
    dims: Option<Vec<usize>>,
    #[arg(long = "len-a")]
    len_a: Option<usize>,
    #[arg(long = "len-b")]
    len_b: Option<usize>,
    /// Cells moved out of the arc of A (0 to 4).
    #[arg(long, default_value_t = 0)]
    noise: usize,
    /// Output directory for `group.txt`, `a.txt` and `b.txt`.
    #[arg(long)]
    out: PathBuf,
    /// Write sets as hex masks instead of index lists.
    #[arg(long)]
    mask: bool,
}

pub fn gen(a: GenArgs) -> Result<Outcome, CliError> {
    let spec = match (&a.spec, &a.dims) {
        (Some(p), _) => io::parse_plant_spec(&io::read_to_string(p).stage("read spec")?).stage("parse spec")?,
        (None, Some(d)) => PlantSpec { dims: d.clone(), len_a: a.len_a.unwrap_or(0), len_b: a.len_b.unwrap_or(0), noise: a.noise },
        (None, None) => return Err(CliError::Usage("give --spec FILE or --dims with --len-a and --len-b".into())),
    };
    let mut r = Report::new("gen", 0).config("spec", to_value(&spec)?);
    let p = r.time("plant", || plant_spec(&spec)).stage("plant")?;
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::Stage("output", Error::Io(e.to_string())))?;
    let fmt = if a.mask { SubsetFormat::Mask } else { SubsetFormat::Indices };
    let files = [
        ("group", a.out.join("group.txt"), io::group_to_text(&p.group)),
        ("set_a", a.out.join("a.txt"), io::subset_to_text(&p.a, fmt)),
        ("set_b", a.out.join("b.txt"), io::subset_to_text(&p.b, fmt)),
    ];
    let mut written = Map::new();
    for (k, path, text) in &files {
        io::write_file(path, text).stage("output")?;
        written.insert(k.to_string(), path_str(path));
    }
    let result = json!({
        "files": written,
        "character_modulus": p.chi.modulus,
        "arc_a": to_value(&p.arc_a)?,
        "arc_b": to_value(&p.arc_b)?,
        "mu_a": q(p.a.measure()),
        "mu_b": q(p.b.measure()),
    });
    let o = Output { out: None, format: Format::Json, seed: 0 };
    Ok(r.finish(&o, result, true, "files written".into(), String::new()))
}

// deficit

#[derive(Args, Debug)]
pub struct DeficitArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Also test the nearly-minimal predicate at this δ; failing it is a verdict failure.
    #[arg(long)]
    delta: Option<String>,
    #[command(flatten)]
    output: Output,
}

pub fn deficit(a: DeficitArgs) -> Result<Outcome, CliError> {
    let (g, sa, sb) = load_pair(&a.inputs)?;
    let delta = a.delta.as_deref().map(|s| parse_rational("delta", s)).transpose()?;
    let mut r = inputs_config(Report::new("deficit", a.output.seed), &a.inputs);
    if let Some(d) = delta {
        r = r.config("delta", q(d));
    }
    let rep = r.time("deficit", || deficit_report(&g, &sa, &sb)).stage("deficit")?;
    let ab = r.time("product", || fast_product_set(&g, &sa, &sb)).stage("product")?;
    let (pass, detail) = match delta {
        Some(d) => {
            let ok = rep.nearly_minimal(d);
            (ok, format!("nearly minimal at δ = {}: {ok}", fmt_q(&d)))
        }
        None => (true, format!("deficit {}", fmt_q(&rep.deficit))),
    };
    let mut csv = String::from("element,in_a,in_b,in_ab\n");
    for x in 0..g.order() {
        csv.push_str(&format!("{x},{},{},{}\n", sa.contains(x) as u8, sb.contains(x) as u8, ab.contains(x) as u8));
    }
    let result = json!({ "group": g.label(), "order": g.order(), "report": to_value(&rep)?, "product_size": ab.len() });
    Ok(r.finish(&a.output, result, pass, detail, csv))
}

// transfer

#[derive(Args, Debug)]
pub struct TransferArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Generator of the cyclic subgroup H: an element index, or coordinates like `0,1`.
    #[arg(long)]
    generator: String,
    /// Additive δ; defaults to the measured lifted excess.
    #[arg(long)]
    delta: Option<String>,
    #[command(flatten)]
    output: Output,
}

fn parse_element(g: &GroupModel, s: &str) -> Result<usize, CliError> {
    let bad = || CliError::Usage(format!("--generator {s:?} is not an element of {}", g.label()));
    let x = if s.contains(',') {
        let c: Vec<usize> = s.split(',').map(|t| t.trim().parse()).collect::<Result<_, _>>().map_err(|_| bad())?;
        g.from_coords(&c).ok_or_else(bad)?
    } else {
        s.trim().parse().map_err(|_| bad())?
    };
    if x >= g.order() {
        return Err(bad());
    }
    Ok(x)
}

pub fn transfer(a: TransferArgs) -> Result<Outcome, CliError> {
    let (g, sa, sb) = load_pair(&a.inputs)?;
    let x = parse_element(&g, &a.generator)?;
    let h = cyclic_subgroup(&g, x);
    let delta = match a.delta.as_deref() {
        Some(s) => parse_rational("delta", s)?,
        None => deficit_report(&g, &sa, &sb).stage("deficit")?.excess.max(Q::from_integer(0)),
    };
    let mut r = inputs_config(Report::new("transfer", a.output.seed), &a.inputs)
        .config("generator", x)
        .config("delta", q(delta));
    let (res, map) = r.time("transfer", || transfer_pair(&g, &h, &sa, &sb, delta)).stage("transfer")?;
    let pass = res.gaps_certified && res.deficit_certified;
    let detail = format!(
        "gaps {} / {} against 5δ, quotient deficit {} against 9δ",
        fmt_q(&res.gap_a),
        fmt_q(&res.gap_b),
        fmt_q(&res.quotient_deficit)
    );
    let mut counts = vec![(0usize, 0usize); map.count];
    for x in sa.iter() {
        counts[map.proj[x]].0 += 1;
    }
    for x in sb.iter() {
        counts[map.proj[x]].1 += 1;
    }
    let mut csv = String::from("coset,fiber,count_a,count_b,in_a_q,in_b_q\n");
    for (c, (ca, cb)) in counts.iter().enumerate() {
        csv.push_str(&format!("{c},{},{ca},{cb},{},{}\n", map.fiber, res.a_q.contains(c) as u8, res.b_q.contains(c) as u8));
    }
    let result = json!({
        "subgroup_order": h.order(),
        "quotient_order": map.count,
        "a_q": set_json(&res.a_q),
        "b_q": set_json(&res.b_q),
        "gap_a": q(res.gap_a),
        "gap_b": q(res.gap_b),
        "quotient_deficit": q(res.quotient_deficit),
        "gaps_certified": res.gaps_certified,
        "deficit_certified": res.deficit_certified,
        "strict": res.strict,
        "lifted": res.lifted,
    });
    Ok(r.finish(&a.output, result, pass, detail, csv))
}

// pseudo

#[derive(Args, Debug)]
pub struct PseudoArgs {
    #[arg(long)]
    group: PathBuf,
    #[arg(long = "set-a")]
    set_a: PathBuf,
    #[arg(long, default_value = "exact")]
    gamma: GammaArg,
    /// Radius for the ball-growth check.
    #[arg(long, default_value = "auto")]
    lambda: LambdaArg,
    #[command(flatten)]
    output: Output,
}

fn metric(group: &Path, set_a: &Path) -> Result<PseudometricTable, CliError> {
    let g = io::load_group(group).stage("load group")?;
    let a = io::load_subset(set_a, &g).stage("load set A")?;
    if a.is_empty() {
        return Err(CliError::Stage("metric", Error::EmptyInput));
    }
    pseudometric_from_set(&g, &a, Side::Left).stage("metric")
}

fn auto_lambda(d: &PseudometricTable, l: LambdaArg) -> Q {
    l.0.unwrap_or_else(|| d.rho() / 32)
}

pub fn pseudo(a: PseudoArgs) -> Result<Outcome, CliError> {
    let mut r = Report::new("pseudo", a.output.seed)
        .config("group", path_str(&a.group))
        .config("set_a", path_str(&a.set_a))
        .config("gamma", a.gamma.label());
    let d = r.time("metric", || metric(&a.group, &a.set_a))?;
    let (gamma, lambda) = (a.gamma.value(), auto_lambda(&d, a.lambda));
    r = r.config("lambda", q(lambda));
    let rep = r.time("axioms", || verify_pseudometric(&d));
    let lin = r.time("linearity", || gamma_linearity(&d, gamma));
    let growth = ball_growth_check(&d, lambda, gamma);
    // d_A is only left-invariant in general; right invariance is reported but not required.
    let pass = rep.reflexive && rep.symmetric && rep.triangle && rep.left_invariant && rep.kernel_is_subgroup;
    let mut csv = String::from("element,norm_num,norm_den\n");
    for x in 0..d.order() {
        let n = d.norm(x);
        csv.push_str(&format!("{x},{},{}\n", n.numer(), n.denom()));
    }
    let result = json!({
        "order": d.order(),
        "rho": q(d.rho()),
        "kernel_order": kernel(&d).len(),
        "axioms": to_value(&rep)?,
        "linearity": to_value(&lin)?,
        "ball_growth": to_value(&growth)?,
    });
    let detail = if pass { "pseudometric axioms hold".into() } else { format!("axiom failure at {:?}", rep.witness) };
    Ok(r.finish(&a.output, result, pass, detail, csv))
}

// alpha

#[derive(Args, Debug)]
pub struct AlphaArgs {
    #[arg(long)]
    group: PathBuf,
    #[arg(long = "set-a")]
    set_a: PathBuf,
    #[arg(long, default_value = "auto")]
    lambda: LambdaArg,
    #[arg(long, default_value = "exact")]
    gamma: GammaArg,
    #[arg(long, value_parser = ["auto", "exhaustive", "beam"], default_value = "auto")]
    mode: String,
    /// Beam width.
    #[arg(long, default_value_t = 64)]
    width: usize,
    #[command(flatten)]
    output: Output,
}

pub fn alpha(a: AlphaArgs) -> Result<Outcome, CliError> {
    let mode = match a.mode.as_str() {
        "exhaustive" => AlphaMode::Exhaustive,
        "beam" => AlphaMode::Beam,
        _ => AlphaMode::Auto,
    };
    let mut r = Report::new("alpha", a.output.seed)
        .config("group", path_str(&a.group))
        .config("set_a", path_str(&a.set_a))
        .config("gamma", a.gamma.label())
        .config("mode", a.mode.clone())
        .config("width", a.width);
    let d = r.time("metric", || metric(&a.group, &a.set_a))?;
    let (gamma, lambda) = (a.gamma.value(), auto_lambda(&d, a.lambda));
    r = r.config("lambda", q(lambda));
    let ctx = SignContext::new(&d, gamma).stage("reference")?;
    let res = r.time("search", || alpha_lambda(&ctx, lambda, mode, a.width, a.output.seed)).stage("alpha")?;
    let mut csv = String::from("step,element,norm_num,norm_den\n");
    for (i, &x) in res.witness.entries.iter().enumerate() {
        let n = d.norm(x);
        csv.push_str(&format!("{i},{x},{},{}\n", n.numer(), n.denom()));
    }
    let in_bracket = res.lower <= res.alpha && res.alpha <= res.upper;
    let detail = format!("α = {} in [{}, {}]", fmt_q(&res.alpha), fmt_q(&res.lower), fmt_q(&res.upper));
    let result = json!({ "reference": ctx.g0, "alpha": to_value(&res)? });
    Ok(r.finish(&a.output, result, in_bracket, detail, csv))
}

// pipeline

#[derive(Args, Debug)]
pub struct PipelineArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// JSON pipeline config; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    lambda: Option<LambdaArg>,
    #[arg(long)]
    gamma: Option<GammaArg>,
    /// Target modulus for the snapped character.
    #[arg(long)]
    modulus: Option<usize>,
    #[command(flatten)]
    output: Output,
}

/// Regression constant for perturbed recovery: `ε ≤ 50·δ`.
const RECOVERY_CONSTANT: i64 = 50;

pub fn pipeline(a: PipelineArgs) -> Result<Outcome, CliError> {
    let (g, sa, sb) = load_pair(&a.inputs)?;
    let mut cfg = match &a.config {
        Some(p) => {
            let text = io::read_to_string(p).stage("read config")?;
            serde_json::from_str::<PipelineConfig>(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
        }
        None => PipelineConfig::default(),
    };
    cfg.seed = a.output.seed;
    if let Some(d) = &a.delta {
        cfg.delta = parse_rational("delta", d)?;
    }
    if let Some(l) = a.lambda {
        cfg.lambda = l.0.map(LambdaPolicy::Fixed).unwrap_or(LambdaPolicy::Auto);
    }
    if let Some(gm) = a.gamma {
        cfg.gamma = gm.0;
    }
    if a.modulus.is_some() {
        cfg.modulus = a.modulus;
    }
    let mut r = inputs_config(Report::new("pipeline", cfg.seed), &a.inputs).config("pipeline", to_value(&cfg)?);
    let fit = r.time("pipeline", || inverse_pipeline(&g, &sa, &sb, &cfg)).stage("pipeline")?;
    let eps = fit.gap_a.max(fit.gap_b);
    let dm = fit.diagnostics.delta_measured;
    let pass = eps <= dm * RECOVERY_CONSTANT && fit.diagnostics.kernel.holds;
    let detail = format!("ε = {} with δ = {}, kernel check {}", fmt_q(&eps), fmt_q(&dm), fit.diagnostics.kernel.holds);
    let mut csv = String::from("element,chi,in_a,in_b,in_arc_a,in_arc_b\n");
    for x in 0..g.order() {
        let c = fit.character.eval(x);
        csv.push_str(&format!(
            "{x},{c},{},{},{},{}\n",
            sa.contains(x) as u8,
            sb.contains(x) as u8,
            fit.arc_a.contains(c) as u8,
            fit.arc_b.contains(c) as u8
        ));
    }
    let mut result = to_value(&fit)?;
    result["epsilon"] = q(eps);
    Ok(r.finish(&a.output, result, pass, detail, csv))
}

// probe

#[derive(Args, Debug)]
pub struct ProbeArgs {
    #[arg(long)]
    group: PathBuf,
    /// Expansion constant K.
    #[arg(long, default_value = "2")]
    k: String,
    #[arg(long, default_value_t = 40_000)]
    budget: usize,
    /// Verdict threshold: fail if a nonexpander of smaller measure is found.
    #[arg(long = "min-measure", default_value = "1/4")]
    min_measure: String,
    #[command(flatten)]
    output: Output,
}

pub fn probe(a: ProbeArgs) -> Result<Outcome, CliError> {
    let g = io::load_group(&a.group).stage("load group")?;
    let k = parse_rational("k", &a.k)?;
    let floor = parse_rational("min-measure", &a.min_measure)?;
    let mut r = Report::new("probe", a.output.seed)
        .config("group", path_str(&a.group))
        .config("k", q(k))
        .config("budget", a.budget)
        .config("min_measure", q(floor));
    let rep = r.time("probe", || nonexpander_probe(&g, k, a.budget, a.output.seed)).stage("probe")?;
    let pass = rep.best_measure >= floor;
    let detail = format!("smallest {}-nonexpander found has measure {}", fmt_q(&k), fmt_q(&rep.best_measure));
    let mut csv = String::from("element,in_best\n");
    for x in 0..g.order() {
        csv.push_str(&format!("{x},{}\n", rep.best_set.contains(x) as u8));
    }
    let mut result = to_value(&rep)?;
    result["best_set"] = set_json(&rep.best_set);
    Ok(r.finish(&a.output, result, pass, detail, csv))
}

// suite

#[derive(Args, Debug)]
pub struct SuiteArgs {
    /// Suite name, or `all`.
    #[arg(long)]
    suite: String,
    /// Instance count override.
    #[arg(long)]
    budget: Option<usize>,
    #[command(flatten)]
    output: Output,
}

pub fn suite(a: SuiteArgs) -> Result<Outcome, CliError> {
    let suites: Vec<Suite> = if a.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![a.suite.parse().map_err(|_| {
            let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
            CliError::Usage(format!("unknown suite {:?}; known: {}, all", a.suite, names.join(", ")))
        })?]
    };
    let cfg = SuiteConfig { seed: a.output.seed, instances: a.budget };
    let mut r = Report::new("suite", cfg.seed).config("suite", a.suite.clone());
    if let Some(b) = a.budget {
        r = r.config("budget", b);
    }
    let mut outcomes = Vec::new();
    let mut csv = String::from("suite,key,value\n");
    for s in suites {
        let o = r.time(s.name(), || run_suite(s, &cfg)).stage(s.name())?;
        csv.push_str(&format!("{},checked,{}\n{},violations,{}\n", s, o.checked, s, o.violations));
        for (k, v) in &o.facts {
            csv.push_str(&format!("{s},{k},{v}\n"));
        }
        outcomes.push(o);
    }
    let pass = outcomes.iter().all(|o| o.pass);
    let detail = outcomes.iter().map(|o| o.to_string()).collect::<Vec<_>>().join("; ");
    let result = json!({ "suites": to_value(&outcomes)? });
    Ok(r.finish(&a.output, result, pass, detail, csv))
}

// bench

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Cyclic group order.
    #[arg(long, default_value_t = 1 << 16)]
    n: usize,
    /// Size of each random set.
    #[arg(long, default_value_t = 10_000)]
    size: usize,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[command(flatten)]
    output: Output,
}

pub fn bench(a: BenchArgs) -> Result<Outcome, CliError> {
    if a.size == 0 || a.size > a.n || a.reps == 0 {
        return Err(CliError::Usage("need 0 < size ≤ n and reps > 0".into()));
    }
    let mut r = Report::new("bench", a.output.seed).config("n", a.n).config("size", a.size).config("reps", a.reps);
    let g = make_cyclic(a.n);
    let mut rng = ChaCha8Rng::seed_from_u64(a.output.seed);
    let sa = Subset::from_indices(a.n, sample(&mut rng, a.n, a.size));
    let sb = Subset::from_indices(a.n, sample(&mut rng, a.n, a.size));
    let best = |f: &dyn Fn() -> kemplab::Result<Subset>| -> Result<(f64, Subset), CliError> {
        let mut t_min = f64::INFINITY;
        let mut out = None;
        for _ in 0..a.reps {
            let t = Instant::now();
            let s = f().stage("bench")?;
            t_min = t_min.min(ms(t));
            out = Some(s);
        }
        Ok((t_min, out.expect("reps > 0")))
    };
    let (t_naive, naive) = best(&|| product_set(&g, &sa, &sb))?;
    let (t_fast, fast) = best(&|| fast_product_set(&g, &sa, &sb))?;
    r.timings.insert("naive_best".into(), json!(t_naive));
    r.timings.insert("fast_best".into(), json!(t_fast));
    let equal = naive == fast;
    let speedup = t_naive / t_fast.max(1e-9);
    let csv = format!("kernel,best_ms\nnaive,{t_naive}\n{:?},{t_fast}\n", kernel_for(&g));
    let result = json!({
        "kernel": format!("{:?}", kernel_for(&g)),
        "product_size": fast.len(),
        "bit_exact": equal,
        "speedup_float": speedup,
    });
    let detail = format!("fast kernel {speedup:.1}x faster, bit-exact {equal}");
    Ok(r.finish(&a.output, result, equal, detail, csv))
}
