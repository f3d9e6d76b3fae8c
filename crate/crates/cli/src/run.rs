use std::time::Instant;

use aggrahull_core::certificates::{self, RnStatus};
use aggrahull_core::engine::{self, Evidence, HullDescription};
use aggrahull_core::hhc::{self, FalsifyConfig, HyperplaneProbe};
use aggrahull_core::oracle::{self, HullStatus, SamplerConfig};
use aggrahull_core::special;
use aggrahull_core::{Error, QuadraticSystem};
use serde_json::json;

use crate::format::InputError;
use crate::report::{Command, InputInfo, Mode, Report, RunOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COUNTEREXAMPLE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;

/// Largest m for which `check` tabulates every triple.
const TRIPLE_TABLE_MAX_M: usize = 12;

#[derive(Debug)]
pub enum Failure {
    Input(String),
    Precondition(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => EXIT_INPUT,
            Self::Precondition(_) => EXIT_PRECONDITION,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Input(m) => write!(f, "input error: {m}"),
            Self::Precondition(m) => write!(f, "{m}"),
        }
    }
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::DimensionMismatch { .. } | Error::Asymmetric { .. } | Error::EmptySystem => {
                Self::Input(e.to_string())
            }
            Error::StrictnessMismatch { required } => Self::Precondition(format!(
                "this mode needs {required} constraints; set \"strict\" accordingly in the input or pick another --mode"
            )),
            Error::NotSphereType => {
                Self::Precondition(format!("{e}; use --mode pairwise or --mode auto"))
            }
            Error::NotDiagonal => Self::Precondition(format!("{e}; use --mode pairwise or --mode auto")),
            other => Self::Precondition(other.to_string()),
        }
    }
}

pub fn sampler(opts: &RunOptions) -> SamplerConfig {
    SamplerConfig { margin: opts.tol, ..SamplerConfig::default().with_seed(opts.seed).with_samples(opts.samples) }
}

struct Timer(Instant);

impl Timer {
    fn lap(&mut self, r: &mut Report, key: &str) {
        let now = Instant::now();
        r.timings_ms.insert(key.to_string(), (now - self.0).as_secs_f64() * 1e3);
        self.0 = now;
    }
}

/// Runs a command; the report carries the exit code.
pub fn execute(command: Command, input: InputInfo, opts: RunOptions) -> Result<Report, Failure> {
    let sys = input.system.to_system()?;
    let mut r = Report::new(command, opts, input);
    let t0 = Instant::now();
    match command {
        Command::Check => check(&sys, &mut r)?,
        Command::Hull => hull(&sys, &mut r)?,
        Command::FalsifyHhc => falsify(&sys, &mut r)?,
    }
    r.timings_ms.insert("total".into(), t0.elapsed().as_secs_f64() * 1e3);
    Ok(r)
}

/// Parses the text and runs the command on it.
pub fn execute_text(command: Command, text: &str, path: Option<String>, opts: RunOptions) -> Result<Report, Failure> {
    let system = crate::format::parse(text)?;
    let input = InputInfo { path, sha256: crate::report::digest(text.as_bytes()), system };
    execute(command, input, opts)
}

/// Re-runs the report's command from its embedded system and options.
pub fn replay(original: &Report) -> Result<(Report, Vec<String>), Failure> {
    let fresh = execute(original.command, original.input.clone(), original.options.clone())?;
    let diffs = original.differences(&fresh);
    Ok((fresh, diffs))
}

fn record_error<T>(r: &mut Report, key: &str, res: aggrahull_core::Result<T>) -> Option<T> {
    match res {
        Ok(v) => Some(v),
        Err(e) => {
            r.verdict(key, json!({ "error": e.to_string() }));
            r.warnings.push(format!("{key}: {e}"));
            None
        }
    }
}

fn check(sys: &QuadraticSystem, r: &mut Report) -> Result<(), Failure> {
    let mut t = Timer(Instant::now());
    let opts = r.options.clone();
    let interior = sys.with_strictness(true);
    if !sys.all_strict() {
        r.warnings.push("emptiness tested on the strict interior; a certificate also rules out T".into());
    }
    let sys_closed = sys;
    let sys = &interior;
    if let Some(e) = record_error(r, "emptiness", certificates::emptiness_certificate(sys)) {
        match e {
            Some(cert) => {
                r.verdict("s", "empty");
                r.certificate("emptiness", cert);
            }
            None => {
                let cfg = SamplerConfig { adaptive: true, ..sampler(&opts).with_samples(1) };
                match oracle::sample_s(sys, &cfg) {
                    Ok(s) => {
                        r.verdict("s", "nonempty");
                        r.certificate("point_in_s", &s.points[0]);
                    }
                    Err(_) => r.verdict("s", "unknown"),
                }
            }
        }
    }
    t.lap(r, "emptiness");
    let sys = sys_closed;
    if let Some(p) = record_error(r, "pdlc", certificates::pdlc_witness(sys)) {
        r.verdict("pdlc", p.is_some());
        if let Some(w) = p {
            r.certificate("pdlc", w);
        }
    }
    t.lap(r, "pdlc");
    if sys.m() >= 3 {
        if sys.m() <= TRIPLE_TABLE_MAX_M {
            if let Some(tab) = record_error(r, "triple_pdlc", certificates::triple_pdlc_table(sys)) {
                r.verdict("triple_pdlc", json!({ "complete": tab.is_complete(), "failed": tab.failed() }));
                r.certificate("triple_pdlc", tab);
            }
        } else {
            r.warnings.push(format!("triple table skipped for m = {} > {TRIPLE_TABLE_MAX_M}", sys.m()));
        }
        t.lap(r, "triple_pdlc");
    }
    if let Some(rn) = record_error(r, "hull_is_rn", certificates::hull_is_rn(sys)) {
        let label = match &rn {
            RnStatus::NotRn { .. } => "not-rn",
            RnStatus::Rn { .. } => "rn",
            RnStatus::RnUnderHiddenConvexity { .. } => "rn-under-hidden-convexity",
            RnStatus::Undetermined { .. } => "undetermined",
        };
        r.verdict("hull_is_rn", label);
        r.certificate("hull_is_rn", rn);
    }
    t.lap(r, "hull_is_rn");
    let fcfg = falsify_config(sys, &opts)?;
    let qs = sys.homogenized();
    if let Some(h) = record_error(r, "hhc", hhc::hhc_status(&qs, opts.falsify.then_some(&fcfg))) {
        r.verdict("hhc", h.verdict);
        r.certificate("hhc", h.evidence);
    }
    t.lap(r, "hhc");
    Ok(())
}

fn route(sys: &QuadraticSystem, mode: Mode) -> Mode {
    match mode {
        Mode::Auto if sys.all_closed() => Mode::Closed,
        Mode::Auto if sys.detect_diagonal() => Mode::Diagonal,
        Mode::Auto if sys.detect_sphere_structure().is_some() => Mode::Sphere,
        Mode::Auto => Mode::Pairwise,
        m => m,
    }
}

fn pairwise(sys: &QuadraticSystem, r: &mut Report, cfg: &SamplerConfig) -> Result<HullDescription, Failure> {
    sys.require_strict()?;
    if certificates::pdlc_witness(sys)?.is_none() && sys.m() > 2 {
        r.warnings.push(
            "PDLC absent; pairwise completeness not guaranteed, emitting candidates with warning".to_string(),
        );
    }
    let s = oracle::sample_s(sys, cfg)?;
    Ok(engine::enumerate_hull(sys, Evidence::open(&s.points))?)
}

fn aggregation_table(sys: &QuadraticSystem, d: &HullDescription) -> Vec<serde_json::Value> {
    d.aggregations
        .iter()
        .map(|a| {
            let f = a.function(sys);
            let n = sys.n();
            json!({
                "lambda": a.lambda,
                "provenance": a.provenance,
                "kind": a.kind,
                "inertia": a.inertia,
                "pair": a.pair,
                "alpha": a.alpha,
                "A": (0..n).map(|i| f.a().row(i).to_vec()).collect::<Vec<_>>(),
                "linear": f.linear(),
                "c": f.c(),
            })
        })
        .collect()
}

fn hull(sys: &QuadraticSystem, r: &mut Report) -> Result<(), Failure> {
    let mut t = Timer(Instant::now());
    let opts = r.options.clone();
    let cfg = sampler(&opts);
    let mode = route(sys, opts.mode);
    r.verdict("mode", mode);
    if mode != Mode::Closed {
        if let Some(cert) = certificates::emptiness_certificate(sys)? {
            r.verdict("s", "empty");
            r.certificate("emptiness", cert);
            r.verdict("aggregations", 0);
            t.lap(r, "emptiness");
            return Ok(());
        }
        t.lap(r, "emptiness");
    }
    let mut t_points = None;
    let desc = match mode {
        Mode::Pairwise => pairwise(sys, r, &cfg)?,
        Mode::Sphere => {
            let d = special::sphere_hull(sys)?;
            r.verdict("rn", !special::sphere_rn_test(sys)?);
            r.certificate("omega", special::sphere_omega(sys)?);
            if opts.mode == Mode::Auto {
                t.lap(r, "sphere");
                let cross = pairwise(sys, r, &cfg)?;
                let agree = cross.aggregations.len() == d.aggregations.len()
                    && cross.aggregations.iter().all(|a| d.position(&a.lambda, 1e-8).is_some());
                r.verdict("pairwise_cross_check", json!({ "agrees": agree, "pairwise": cross.lambdas() }));
            }
            d
        }
        Mode::Diagonal => {
            let h = special::diagonal_hull(sys)?;
            r.verdict("rn", special::diagonal_rn(sys)?);
            r.certificate("projection", &h.projection);
            h.description
        }
        Mode::Closed => {
            let c = special::closed_hull(sys, &cfg)?;
            r.verdict("zero_aggregation_check", c.zero_aggregation_check);
            r.certificate("t_minimizers", &c.samples.minimizers);
            t_points = Some(c.samples.all().cloned().collect::<Vec<_>>());
            c.aggregations
        }
        Mode::Auto => unreachable!("routed above"),
    };
    t.lap(r, "hull");
    r.warnings.extend(desc.warnings.iter().cloned());
    r.verdict("aggregations", desc.aggregations.len());
    r.certificate("aggregations", aggregation_table(sys, &desc));
    r.certificate("pencils", &desc.pencils);
    r.certificate("pruned", &desc.pruned);
    if opts.verify {
        if let Some(points) = &t_points {
            closed_verify(sys, &desc, points, &opts, r);
        } else {
            let v = oracle::verify_hull(sys, &desc.lambdas(), &cfg, &[])?;
            r.verdict("verification", v.status);
            r.certificate(
                "verification",
                json!({
                    "inside_checked": v.inside_checked,
                    "attacked": v.attacked,
                    "certified_inside": v.certified_inside,
                    "unresolved": v.unresolved,
                }),
            );
            for w in &v.witnesses {
                r.witnesses.push(serde_json::to_value(w).expect("witness serializes"));
            }
        }
        if r.verdicts["verification"] != json!(HullStatus::Consistent) {
            r.exit_code = EXIT_COUNTEREXAMPLE;
        }
        t.lap(r, "verify");
    }
    Ok(())
}

/// Convex combinations of T-samples must satisfy every aggregation. The
/// opposite inclusion is not sampled for closed systems.
fn closed_verify(sys: &QuadraticSystem, desc: &HullDescription, points: &[Vec<f64>], opts: &RunOptions, r: &mut Report) {
    use rand::{Rng, SeedableRng};
    let aggs = desc.functions(sys);
    let tol = opts.tol * oracle::system_scale(sys);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed ^ 0xc105ed);
    let mut bad = Vec::new();
    for _ in 0..opts.samples {
        let (p, q) = (&points[rng.gen_range(0..points.len())], &points[rng.gen_range(0..points.len())]);
        let w: f64 = rng.gen();
        let x: Vec<f64> = p.iter().zip(q).map(|(a, b)| w * a + (1.0 - w) * b).collect();
        if let Some((i, v)) = aggs.iter().enumerate().map(|(i, g)| (i, g.eval(&x))).find(|(_, v)| *v > tol) {
            bad.push(json!({ "kind": "in-hull-not-in-agg", "point": x, "ends": [p, q], "weight": w, "aggregation": i, "value": v }));
        }
    }
    let status =
        if bad.is_empty() { HullStatus::Consistent } else { HullStatus::CounterexampleInHullNotInAgg };
    r.verdict("verification", status);
    r.certificate("verification", json!({ "inside_checked": opts.samples, "t_points": points.len() }));
    r.warnings.push("closed system: only conv(T) ⊆ ⋂ T_λ is sampled".into());
    r.witnesses.extend(bad.into_iter().take(5));
}

fn falsify_config(sys: &QuadraticSystem, opts: &RunOptions) -> Result<FalsifyConfig, Failure> {
    let k = sys.n() + 1;
    let probes = opts
        .hyperplanes
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let mut normal = h.clone();
            if normal.len() == k - 1 {
                normal.push(0.0);
            }
            if normal.len() != k || normal.iter().all(|v| *v == 0.0) {
                return Err(Failure::Input(format!(
                    "--hyperplane #{}: expected a nonzero normal with {} or {k} entries, found {}",
                    i + 1,
                    k - 1,
                    h.len()
                )));
            }
            Ok(HyperplaneProbe { normal, pairs: vec![] })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FalsifyConfig { trials: opts.trials, seed: opts.seed, probes, ..FalsifyConfig::default() })
}

fn falsify(sys: &QuadraticSystem, r: &mut Report) -> Result<(), Failure> {
    let mut t = Timer(Instant::now());
    let opts = r.options.clone();
    let qs = sys.homogenized();
    let cfg = falsify_config(sys, &opts)?;
    let structural = hhc::hhc_structural(&qs)?;
    r.verdict("structural", structural.verdict);
    r.certificate("structural", &structural.evidence);
    t.lap(r, "structural");
    let found = hhc::hhc_falsify(&qs, &cfg)?;
    t.lap(r, "falsify");
    match found {
        Some(w) => {
            r.verdict("hhc", "falsified");
            if structural.verdict.holds() {
                r.warnings.push(format!(
                    "structural verdict {:?} contradicts the witness; residual {:.3e} against threshold {:.3e}",
                    structural.verdict, w.residual, w.threshold
                ));
            }
            r.witnesses.push(serde_json::to_value(&w).expect("witness serializes"));
            r.exit_code = EXIT_COUNTEREXAMPLE;
        }
        None => r.verdict("hhc", if structural.verdict.holds() { "holds" } else { "no-witness" }),
    }
    Ok(())
}

/// One-paragraph human summary of a report.
pub fn summary(r: &Report) -> String {
    let mut s = format!("{:?} on {}", r.command, r.input.path.as_deref().unwrap_or("<stdin>"));
    s.push_str(&format!(" (seed {}, sha256 {})\n", r.options.seed, &r.input.sha256[..12]));
    for (k, v) in &r.verdicts {
        s.push_str(&format!("  {k}: {v}\n"));
    }
    if let Some(aggs) = r.certificates.get("aggregations").and_then(|v| v.as_array()) {
        for a in aggs {
            s.push_str(&format!("  aggregation λ = {}\n", a["lambda"]));
        }
    }
    for w in &r.witnesses {
        s.push_str(&format!("  witness: {w}\n"));
    }
    for w in &r.warnings {
        s.push_str(&format!("  warning: {w}\n"));
    }
    s
}
