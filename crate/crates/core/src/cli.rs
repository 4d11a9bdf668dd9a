//! Command-line front end. `run` returns the text and exit code instead of
//! printing, so the binary and the tests share one path.
//!
//! Exit codes: 0 all checks pass, 1 mathematical mismatch, 2 usage or
//! configuration error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::gf::{build_tower, Level};
use crate::gnq::criterion::criterion_check;
use crate::gnq::expr::Env;
use crate::gnq::registry::{Registry, RegistryError};
use crate::gnq::{gnq_is_pp, GnqEvaluator, GnqSpec};
use crate::linop::{lin_gcd, LinPoly};
use crate::transition::{self, TransitionInput};

/// Environment variable overriding the bundled table manifest.
pub const MANIFEST_ENV: &str = "LINTRANS_TABLE_MANIFEST";
const BUNDLED_MANIFEST: &str = include_str!("../data/desirable_triples_q4.csv");

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "lintrans", version, about = "Linearized-polynomial transition and g_{n,q} permutation checks")]
pub struct Cli {
    #[arg(long, value_enum, default_value = "json", global = true)]
    pub format: Format,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = 1, global = true)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Difference classes and det M versus its expansion for a random input.
    Expansion {
        #[arg(long)]
        m: usize,
    },
    /// Base-4 digits, weight and PP verdict of g_{n,4} on F_{4^e}.
    VerifyTriple {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        e: u32,
        /// Exit 1 unless the verdict matches.
        #[arg(long)]
        expect: Option<Expect>,
    },
    /// Re-verify every row of the desirable-triples manifest.
    ReproduceTable {
        #[arg(long, default_value_t = 6)]
        e_max: u32,
        /// Manifest path; overrides the environment variable.
        #[arg(long)]
        manifest: Option<std::path::PathBuf>,
    },
    /// Criterion check for a registry family.
    CheckProp {
        #[arg(long)]
        id: String,
        /// Parameter binding `name=value`; repeatable.
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, i64)>,
    },
    /// Quick randomized run over every module.
    Selftest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Expect {
    Pp,
    NotPp,
}

fn parse_param(s: &str) -> Result<(String, i64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    let v = v.trim().parse::<i64>().map_err(|e| format!("{v:?}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String, pass: bool) -> Self {
        Outcome { stdout, stderr: String::new(), code: if pass { EXIT_OK } else { EXIT_MISMATCH } }
    }

    fn usage(msg: impl Into<String>) -> Self {
        Outcome { stdout: String::new(), stderr: msg.into(), code: EXIT_USAGE }
    }
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome { stdout: text, stderr: String::new(), code }
            } else {
                Outcome::usage(text)
            };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.workers.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => return Outcome::usage(e.to_string()),
    };
    pool.install(|| dispatch(&cli))
}

fn dispatch(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Expansion { m } => cmd_expansion(*m, cli.seed, cli.format),
        Command::VerifyTriple { n, e, expect } => cmd_verify_triple(*n, *e, *expect, cli.seed, cli.format),
        Command::ReproduceTable { e_max, manifest } => {
            let text = match manifest_text(manifest.as_deref()) {
                Ok(t) => t,
                Err(e) => return Outcome::usage(e),
            };
            cmd_reproduce_table(&text, *e_max, cli.seed, cli.format)
        }
        Command::CheckProp { id, params } => cmd_check_prop(id, params, cli.seed, cli.format),
        Command::Selftest => cmd_selftest(cli.seed, cli.format),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn to_csv<T: Serialize>(rows: &[T], header: &[&str]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(header).expect("in-memory write");
    }
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

#[derive(Serialize)]
struct ClassRow {
    seed: u64,
    m: usize,
    mu: String,
    index_tuple: String,
    permutations: usize,
    coeff: String,
    verdict: &'static str,
}

pub fn cmd_expansion(m: usize, seed: u64, format: Format) -> Outcome {
    if m == 0 || m > transition::MAX_M {
        return Outcome::usage(format!("--m must be in 1..={}", transition::MAX_M));
    }
    let tower = match build_tower(2, 1, m as u32, 1, 1) {
        Ok(t) => t,
        Err(e) => return Outcome::usage(e.to_string()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input = TransitionInput::random(&tower, 2, &mut rng);
    let (det, exp, classes) = match (
        transition::det_m(&input),
        transition::expansion_det(&input),
        transition::all_classes(input.a(), &tower),
    ) {
        (Ok(d), Ok(x), Ok(c)) => (d, x, c),
        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
            return Outcome { stdout: String::new(), stderr: e.to_string(), code: EXIT_MISMATCH }
        }
    };
    let agree = det == exp;
    let rows: Vec<ClassRow> = classes
        .iter()
        .map(|c| ClassRow {
            seed,
            m,
            mu: c.mu.iter().map(u32::to_string).collect::<Vec<_>>().join(","),
            index_tuple: c.index_tuple().iter().map(usize::to_string).collect(),
            permutations: c.perms.len(),
            coeff: c.coeff.to_string(),
            verdict: if agree { "agree" } else { "disagree" },
        })
        .collect();
    let out = match format {
        Format::Csv => to_csv(&rows, &["seed", "m", "mu", "index_tuple", "permutations", "coeff", "verdict"]),
        Format::Json => to_json(&json!({
            "command": "expansion",
            "seed": seed,
            "m": m,
            "tower": {"p": 2, "r": 2, "q": tower.q()},
            "a": input.a().iter().map(|x| x.to_string()).collect::<Vec<_>>(),
            "f": input.f().iter().map(|x| x.to_string()).collect::<Vec<_>>(),
            "class_count": classes.len(),
            "classes": rows.iter().map(|r| json!({
                "mu": r.mu, "index_tuple": r.index_tuple,
                "permutations": r.permutations, "coeff": r.coeff,
            })).collect::<Vec<_>>(),
            "det": det.to_string(),
            "verdict": if agree { "agree" } else { "disagree" },
        })),
    };
    Outcome::ok(out, agree)
}

/// One manifest row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub e: u32,
    pub n: u64,
    pub digits: String,
    #[serde(default)]
    pub reference: String,
}

pub fn bundled_manifest() -> &'static str {
    BUNDLED_MANIFEST
}

/// `--manifest`, else the environment variable, else the bundled table.
pub fn manifest_text(path: Option<&std::path::Path>) -> Result<String, String> {
    let env_path = std::env::var_os(MANIFEST_ENV).map(std::path::PathBuf::from);
    match path.map(|p| p.to_path_buf()).or(env_path) {
        Some(p) => std::fs::read_to_string(&p).map_err(|e| format!("manifest missing: {}: {e}", p.display())),
        None => Ok(BUNDLED_MANIFEST.to_string()),
    }
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestRow>, String> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    r.deserialize().collect::<Result<Vec<ManifestRow>, _>>().map_err(|e| format!("bad manifest: {e}"))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TripleRecord {
    pub seed: u64,
    pub e: u32,
    pub n: u64,
    pub digits: String,
    pub weight: u64,
    pub pp: bool,
}

/// Evaluators for q = 4 keyed by e, built once and shared.
#[derive(Default)]
pub struct EvaluatorCache {
    by_e: BTreeMap<u32, Arc<GnqEvaluator>>,
}

impl EvaluatorCache {
    pub fn get(&mut self, e: u32) -> Result<Arc<GnqEvaluator>, String> {
        if let Some(ev) = self.by_e.get(&e) {
            return Ok(ev.clone());
        }
        let t = build_tower(2, 1, 2, e, 2).map_err(|er| er.to_string())?;
        let ev = Arc::new(GnqEvaluator::new(&t).map_err(|er| er.to_string())?);
        self.by_e.insert(e, ev.clone());
        Ok(ev)
    }
}

/// Largest e accepted by the triple commands.
pub const MAX_TRIPLE_E: u32 = 6;

pub fn verify_triple(n: u64, ev: &GnqEvaluator, seed: u64) -> Result<TripleRecord, String> {
    let spec = GnqSpec::new(n, 4).map_err(|e| e.to_string())?;
    let pp = gnq_is_pp(n, ev).map_err(|e| e.to_string())?;
    Ok(TripleRecord { seed, e: ev.tower().e(), n, digits: spec.digit_string(), weight: spec.weight, pp })
}

pub fn cmd_verify_triple(n: u64, e: u32, expect: Option<Expect>, seed: u64, format: Format) -> Outcome {
    if e == 0 || e > MAX_TRIPLE_E {
        return Outcome::usage(format!("--e must be in 1..={MAX_TRIPLE_E}"));
    }
    let rec = match EvaluatorCache::default().get(e).and_then(|ev| verify_triple(n, &ev, seed)) {
        Ok(r) => r,
        Err(er) => return Outcome::usage(er),
    };
    let pass = match expect {
        None => true,
        Some(Expect::Pp) => rec.pp,
        Some(Expect::NotPp) => !rec.pp,
    };
    let out = match format {
        Format::Json => to_json(&rec),
        Format::Csv => to_csv(std::slice::from_ref(&rec), &[]),
    };
    Outcome::ok(out, pass)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TableRow {
    pub seed: u64,
    pub e: u32,
    pub n: u64,
    pub digits: String,
    pub reference: String,
    pub digits_ok: bool,
    pub pp: bool,
    pub status: &'static str,
}

/// Verifies every manifest row with e ≤ `e_max`, in manifest order.
pub fn reproduce_table(rows: &[ManifestRow], e_max: u32, seed: u64) -> Result<Vec<TableRow>, String> {
    let rows: Vec<&ManifestRow> = rows.iter().filter(|r| r.e <= e_max).collect();
    let mut cache = EvaluatorCache::default();
    for r in &rows {
        if r.e == 0 || r.e > MAX_TRIPLE_E {
            return Err(format!("row n={} has e={} outside 1..={MAX_TRIPLE_E}", r.n, r.e));
        }
        cache.get(r.e)?;
    }
    rows.par_iter()
        .map(|r| {
            let ev = cache.by_e[&r.e].clone();
            let rec = verify_triple(r.n, &ev, seed)?;
            let digits_ok = rec.digits == r.digits.replace(' ', "");
            Ok(TableRow {
                seed,
                e: r.e,
                n: r.n,
                digits: rec.digits,
                reference: r.reference.clone(),
                digits_ok,
                pp: rec.pp,
                status: if digits_ok && rec.pp { "ok" } else { "mismatch" },
            })
        })
        .collect()
}

pub fn cmd_reproduce_table(text: &str, e_max: u32, seed: u64, format: Format) -> Outcome {
    let rows = match parse_manifest(text) {
        Ok(r) => r,
        Err(e) => return Outcome::usage(e),
    };
    let out = match reproduce_table(&rows, e_max, seed) {
        Ok(o) => o,
        Err(e) => return Outcome::usage(e),
    };
    let pass = out.iter().all(|r| r.status == "ok");
    let text = match format {
        Format::Csv => to_csv(&out, &["seed", "e", "n", "digits", "reference", "digits_ok", "pp", "status"]),
        Format::Json => to_json(&json!({
            "command": "reproduce-table",
            "seed": seed,
            "e_max": e_max,
            "rows": out,
            "mismatches": out.iter().filter(|r| r.status != "ok").count(),
        })),
    };
    Outcome::ok(text, pass)
}

pub fn cmd_check_prop(id: &str, params: &[(String, i64)], seed: u64, format: Format) -> Outcome {
    let reg = Registry::builtin();
    let env: Env = params.iter().cloned().collect();
    let e = match env.get("e") {
        Some(&e) if (1..=MAX_TRIPLE_E as i64).contains(&e) => e as u32,
        Some(_) => return Outcome::usage(format!("e must be in 1..={MAX_TRIPLE_E}")),
        None => return Outcome::usage(RegistryError::MissingParam("e".into()).to_string()),
    };
    let res = reg.tower_for(id, e).and_then(|t| reg.instance(id, &env, &t).map(|i| (t, i)));
    let (tower, inst) = match res {
        Ok(x) => x,
        Err(er) => return Outcome::usage(er.to_string()),
    };
    let rep = match criterion_check(&inst, &tower, None) {
        Ok(r) => r,
        Err(er) => return Outcome { stdout: String::new(), stderr: er.to_string(), code: EXIT_MISMATCH },
    };
    let text = match format {
        Format::Json => to_json(&json!({"command": "check-prop", "seed": seed, "report": rep})),
        Format::Csv => {
            #[derive(Serialize)]
            struct Row<'a> {
                seed: u64,
                id: &'a str,
                n: Option<u64>,
                fbar_is_pp: bool,
                condition_i: bool,
                condition_ii: bool,
                condition_iii: bool,
                det_closed_form: bool,
                congruence: Option<bool>,
                f_is_pp: bool,
                g_is_pp: Option<bool>,
                passed: bool,
            }
            to_csv(
                &[Row {
                    seed,
                    id: &rep.id,
                    n: rep.n,
                    fbar_is_pp: rep.fbar_is_pp,
                    condition_i: rep.condition_i,
                    condition_ii: rep.condition_ii,
                    condition_iii: rep.condition_iii,
                    det_closed_form: rep.det_closed_form,
                    congruence: rep.congruence,
                    f_is_pp: rep.f_is_pp,
                    g_is_pp: rep.g_is_pp,
                    passed: rep.passed,
                }],
                &[],
            )
        }
    };
    Outcome::ok(text, rep.passed)
}

#[derive(Serialize)]
struct SelftestRow {
    seed: u64,
    check: &'static str,
    cases: u64,
    failures: u64,
}

/// A few seeded random cases per module; deterministic for a given seed.
pub fn cmd_selftest(seed: u64, format: Format) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();

    let mut fails = 0;
    let mut cases = 0;
    for (p, m) in [(2, 1), (2, 2), (2, 3), (3, 2)] {
        let t = build_tower(p, 1, m, 1, 1).expect("small tower");
        for _ in 0..3 {
            let inp = TransitionInput::random(&t, 2, &mut rng);
            cases += 1;
            if transition::det_m(&inp).ok() != transition::expansion_det(&inp).ok() {
                fails += 1;
            }
        }
    }
    rows.push(SelftestRow { seed, check: "expansion_identity", cases, failures: fails });

    let t = build_tower(2, 1, 2, 3, 1).expect("small tower");
    let (mut fails, mut cases) = (0, 0);
    for _ in 0..3 {
        let inp = TransitionInput::random(&t, 3, &mut rng);
        cases += 1;
        match transition::verify_root_transfer(&inp, Level::Working) {
            Ok(r) if r.violations == 0 => {}
            _ => fails += 1,
        }
    }
    rows.push(SelftestRow { seed, check: "root_transfer", cases, failures: fails });

    let (mut fails, mut cases) = (0, 0);
    for _ in 0..3 {
        let mk = |rng: &mut ChaCha8Rng| {
            let c = (0..3).map(|_| t.random(Level::Q, rng)).collect();
            LinPoly::new(&t, 2, c).expect("valid")
        };
        let (f, g) = (mk(&mut rng), mk(&mut rng));
        cases += 1;
        let Ok(h) = lin_gcd(&f, &g) else { continue };
        let ok = t.enumerate(Level::Working).expect("small").all(|z| {
            let both = f.eval_unchecked(&z).is_zero() && g.eval_unchecked(&z).is_zero();
            both == h.eval_unchecked(&z).is_zero()
        });
        if !ok {
            fails += 1;
        }
    }
    rows.push(SelftestRow { seed, check: "linearized_gcd_roots", cases, failures: fails });

    let t = build_tower(2, 1, 2, 2, 2).expect("small tower");
    let ev = GnqEvaluator::new(&t).expect("aux present");
    let (mut fails, mut cases) = (0, 0);
    for _ in 0..5 {
        let n = rand::Rng::random_range(&mut rng, 0..500u64);
        cases += 1;
        let g = crate::gnq::gnq_coeffs(n, &t).expect("small n");
        let ok = t
            .enumerate(Level::Working)
            .expect("small")
            .all(|y| g.eval_unchecked(&y) == ev.eval(n, &y).expect("preimage"));
        if !ok {
            fails += 1;
        }
    }
    rows.push(SelftestRow { seed, check: "gnq_oracles", cases, failures: fails });

    let pass = rows.iter().all(|r| r.failures == 0);
    let text = match format {
        Format::Csv => to_csv(&rows, &[]),
        Format::Json => to_json(&json!({"command": "selftest", "seed": seed, "checks": rows, "passed": pass})),
    };
    Outcome::ok(text, pass)
}
