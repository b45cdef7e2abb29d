//! `lacunae` command line front-end.
//!
//! Exit codes: 0 when every verdict passes, 1 when a verdict fails, 2 on
//! input errors, 3 when an order comparison is undecided or a budget is hit.

mod input;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lacunae::budget::Budget;
use lacunae::cnd_kernels::{cnd_gram_test, schoenberg_test};
use lacunae::free_words::{ball, ball_size};
use lacunae::lacunarity::{prop51_check, psi_lacunary_delta, rudin_lacunarity_estimate, DEFAULT_RUDIN_RADIUS};
use lacunae::magnus::{
    closed_form_profile, default_degree, distinguish, j_coefficient, j_profile, magnus_embed,
    subgroup_membership, transference_check, Monomial, Separation,
};
use lacunae::magnus_order::{order_compare, order_compare_default, positive_part_split, sort_words, Relation};
use lacunae::norm_estimation::{
    bmo_norm_estimate, h1_norm_estimate, operator_norm_estimate, NormConfig, DEFAULT_KRYLOV_STEPS,
    DEFAULT_RADIUS,
};
use lacunae::paley::{jab_decomposition, jab_functional, lambda4_check, paley_split, theorem1_check, PaleyConfig};
use lacunae::{Error, LengthFunction, Word};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "lacunae", version, about = "Lacunary Fourier series on free groups")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Rank of the free group (input files may override it).
    #[arg(long, global = true, default_value_t = 2)]
    rank: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel loops.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for Lanczos start vectors.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Normal forms, products, lengths and balls.
    #[command(subcommand)]
    Words(WordsCmd),
    /// Truncated Magnus series and J-coefficients.
    #[command(subcommand)]
    Magnus(MagnusCmd),
    /// Magnus order comparisons.
    #[command(subcommand)]
    Order(OrderCmd),
    /// Conditional negativity test on a ball or word set.
    Cnd(CndArgs),
    /// Lacunarity certificates.
    #[command(subcommand)]
    Certify(CertifyCmd),
    /// Norm estimates by compression to a ball.
    #[command(subcommand)]
    Norm(NormCmd),
    /// Coefficient-side versus analytic-side checks.
    #[command(subcommand)]
    Paley(PaleyCmd),
}

#[derive(Subcommand, Debug)]
enum WordsCmd {
    Reduce { words: Vec<String> },
    Multiply { words: Vec<String> },
    Inverse { word: String },
    Length {
        words: Vec<String>,
        #[arg(long, default_value = "word")]
        length: String,
    },
    Ball {
        #[arg(long)]
        radius: usize,
    },
}

#[derive(Subcommand, Debug)]
enum MagnusCmd {
    Embed {
        word: String,
        #[arg(long)]
        degree: Option<usize>,
    },
    J {
        word: String,
        #[arg(long)]
        monomial: String,
    },
    /// Degree ≤ 2 profile, closed forms, subgroup membership and torus eigenvalue (rank 2).
    Profile { word: String },
    Distinguish {
        g: String,
        h: String,
        #[arg(long)]
        degree: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
enum OrderCmd {
    Compare {
        g: String,
        h: String,
        #[arg(long)]
        max_degree: Option<usize>,
    },
    /// Sort a word file ascending.
    Sort { file: PathBuf },
    /// Split a Fourier element into its positive and negative parts.
    Split { file: PathBuf },
}

#[derive(Args, Debug)]
struct CndArgs {
    #[arg(long, default_value = "word")]
    length: String,
    /// Test on ball(rank, R) unless --words is given.
    #[arg(long, default_value_t = 2)]
    radius: usize,
    #[arg(long)]
    words: Option<PathBuf>,
    /// Comma-separated t values for the Schoenberg check.
    #[arg(long)]
    schoenberg: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum CertifyCmd {
    Psi {
        #[arg(long)]
        words: PathBuf,
        #[arg(long, default_value = "word")]
        length: String,
    },
    Rudin {
        #[arg(long)]
        words: PathBuf,
        #[arg(long)]
        candidates: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_RUDIN_RADIUS)]
        search_radius: usize,
    },
    Prop51 {
        #[arg(long)]
        words: PathBuf,
    },
}

#[derive(Args, Debug)]
struct NormArgs {
    /// Fourier element JSON file.
    #[arg(long)]
    input: PathBuf,
    /// Ball radii, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [DEFAULT_RADIUS])]
    radius: Vec<usize>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_KRYLOV_STEPS)]
    steps: usize,
}

#[derive(Subcommand, Debug)]
enum NormCmd {
    Op(NormArgs),
    Bmo {
        #[command(flatten)]
        common: NormArgs,
        #[arg(long, default_value = "word")]
        length: String,
        /// Comma-separated t values or log:<start>:<end>:<points>.
        #[arg(long)]
        tgrid: Option<String>,
    },
    H1 {
        #[command(flatten)]
        common: NormArgs,
        #[arg(long, default_value = "word")]
        length: String,
    },
}

#[derive(Subcommand, Debug)]
enum PaleyCmd {
    Theorem1 {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    Lambda4 {
        #[arg(long)]
        input: PathBuf,
    },
    Split {
        #[arg(long)]
        input: PathBuf,
    },
    Jab {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RADIUS)]
        radius: usize,
    },
}

/// Resolved job parameters, embedded in every report.
#[derive(Clone, Debug, Serialize)]
struct JobConfig {
    command: String,
    rank: usize,
    length: Option<String>,
    degree: Option<usize>,
    radius: Option<Vec<usize>>,
    t_grid: Option<String>,
    tolerance: Option<f64>,
    seed: u64,
    format: Format,
    jobs: Option<usize>,
    budget_mb: u64,
    inputs: Vec<String>,
}

enum Outcome {
    Pass,
    Fail,
    Undecided,
}

impl Outcome {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    fn label(&self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Fail => "fail",
            Outcome::Undecided => "undecided",
        }
    }

    fn code(&self) -> u8 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::Undecided => 3,
        }
    }
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Undecided { .. } | Error::BudgetExceeded { .. } | Error::NonConvergence { .. } => 3,
        Error::NotLacunary(_) | Error::PositivityViolation { .. } => 1,
        _ => 2,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Parse { .. } => "parse",
        Error::Schema(_) => "schema",
        Error::Undecided { .. } => "undecided",
        Error::BudgetExceeded { .. } => "budget",
        Error::NonConvergence { .. } => "non_convergence",
        Error::NotLacunary(_) => "not_lacunary",
        Error::PositivityViolation { .. } => "positivity_violation",
        _ => "input",
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn word(rank: usize, s: &str) -> lacunae::Result<Word> {
    Word::parse(rank, s)
}

fn words(rank: usize, list: &[String]) -> lacunae::Result<Vec<Word>> {
    list.iter().map(|s| word(rank, s)).collect()
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

struct Job {
    config: JobConfig,
}

impl Job {
    fn new(cli: &Cli, command: &str) -> Job {
        Job {
            config: JobConfig {
                command: command.to_string(),
                rank: cli.global.rank,
                length: None,
                degree: None,
                radius: None,
                t_grid: None,
                tolerance: None,
                seed: cli.global.seed,
                format: cli.global.format,
                jobs: cli.global.jobs,
                budget_mb: Budget::from_env().bytes >> 20,
                inputs: Vec::new(),
            },
        }
    }
}

fn norm_config(seed: u64, tol: f64, steps: usize) -> NormConfig {
    NormConfig {
        tol,
        krylov_steps: steps,
        seed,
        ..NormConfig::default()
    }
}

/// Applies `{"radius", "t_grid", "tol", "seed", "krylov_steps", "max_iterations"}`.
fn paley_config(path: Option<&Path>, seed: u64) -> lacunae::Result<PaleyConfig> {
    let mut cfg = PaleyConfig::default();
    cfg.norm.seed = seed;
    let Some(path) = path else { return Ok(cfg) };
    let v = input::read_json(path)?;
    let obj = v
        .as_object()
        .ok_or_else(|| Error::Schema("config must be a JSON object".into()))?;
    let uint = |k: &str| -> lacunae::Result<Option<usize>> {
        match obj.get(k) {
            None => Ok(None),
            Some(x) => x
                .as_u64()
                .map(|u| Some(u as usize))
                .ok_or_else(|| Error::Schema(format!("\"{k}\" must be a nonnegative integer"))),
        }
    };
    if let Some(r) = uint("radius")? {
        cfg.radius = r;
    }
    if let Some(s) = uint("krylov_steps")? {
        cfg.norm.krylov_steps = s;
    }
    if let Some(m) = uint("max_iterations")? {
        cfg.norm.max_iterations = m;
    }
    if let Some(s) = uint("seed")? {
        cfg.norm.seed = s as u64;
    }
    if let Some(t) = obj.get("tol") {
        cfg.norm.tol = t
            .as_f64()
            .ok_or_else(|| Error::Schema("\"tol\" must be a number".into()))?;
    }
    match obj.get("t_grid") {
        None => {}
        Some(Value::String(s)) => cfg.t_grid = Some(input::parse_t_grid(s)?),
        Some(Value::Array(a)) => {
            cfg.t_grid = Some(
                a.iter()
                    .map(|x| x.as_f64().filter(|t| *t > 0.0))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| Error::Schema("\"t_grid\" entries must be positive numbers".into()))?,
            )
        }
        Some(_) => return Err(Error::Schema("\"t_grid\" must be an array or a string".into())),
    }
    Ok(cfg)
}

fn run(cli: &Cli, job: &mut Job) -> lacunae::Result<(Value, Outcome)> {
    let rank = cli.global.rank;
    let seed = cli.global.seed;
    let cfg = &mut job.config;
    match &cli.command {
        Command::Words(cmd) => match cmd {
            WordsCmd::Reduce { words: list } => {
                cfg.inputs = list.clone();
                let ws = words(rank, list)?;
                let rows: Vec<Value> = ws
                    .iter()
                    .map(|w| json!({"word": w.to_string(), "syllables": w.to_json(), "length": w.word_length().to_string()}))
                    .collect();
                Ok((Value::Array(rows), Outcome::Pass))
            }
            WordsCmd::Multiply { words: list } => {
                cfg.inputs = list.clone();
                let mut acc = Word::identity(rank);
                for w in words(rank, list)? {
                    acc = acc.multiply(&w)?;
                }
                Ok((json!({"product": acc.to_string(), "syllables": acc.to_json()}), Outcome::Pass))
            }
            WordsCmd::Inverse { word: s } => {
                cfg.inputs = vec![s.clone()];
                let w = word(rank, s)?.inverse();
                Ok((json!({"inverse": w.to_string(), "syllables": w.to_json()}), Outcome::Pass))
            }
            WordsCmd::Length { words: list, length } => {
                cfg.inputs = list.clone();
                let psi = LengthFunction::parse(rank, length)?;
                cfg.length = Some(psi.to_string());
                let rows = words(rank, list)?
                    .iter()
                    .map(|w| Ok(json!({"word": w.to_string(), "value": to_value(&psi.evaluate(w)?)})))
                    .collect::<lacunae::Result<Vec<_>>>()?;
                Ok((Value::Array(rows), Outcome::Pass))
            }
            WordsCmd::Ball { radius } => {
                cfg.radius = Some(vec![*radius]);
                let b = ball(rank, *radius)?;
                Ok((
                    json!({"size": ball_size(rank, *radius).to_string(), "words": to_value(&b)}),
                    Outcome::Pass,
                ))
            }
        },
        Command::Magnus(cmd) => match cmd {
            MagnusCmd::Embed { word: s, degree } => {
                cfg.inputs = vec![s.clone()];
                let g = word(rank, s)?;
                let d = degree.unwrap_or_else(|| default_degree(&g));
                cfg.degree = Some(d);
                let mu = magnus_embed(&g, d);
                Ok((json!({"word": g.to_string(), "series": mu.to_json(), "text": mu.to_string()}), Outcome::Pass))
            }
            MagnusCmd::J { word: s, monomial } => {
                cfg.inputs = vec![s.clone(), monomial.clone()];
                let g = word(rank, s)?;
                let m = Monomial::parse(rank, monomial)?;
                cfg.degree = Some(m.degree());
                let c = j_coefficient(&g, &m)?;
                Ok((
                    json!({"word": g.to_string(), "monomial": m.display(rank), "coefficient": c.to_string()}),
                    Outcome::Pass,
                ))
            }
            MagnusCmd::Profile { word: s } => {
                cfg.inputs = vec![s.clone()];
                cfg.degree = Some(2);
                let g = word(rank, s)?;
                let series = j_profile(&g)?;
                let closed = closed_form_profile(&g)?;
                let transference = transference_check(&g)?;
                let ok = series == closed && series.identity_holds() && transference.holds;
                Ok((
                    json!({
                        "word": g.to_string(),
                        "series": to_value(&series),
                        "closed_form": to_value(&closed),
                        "product_identity": series.identity_holds(),
                        "membership": to_value(&subgroup_membership(&g)?),
                        "transference": to_value(&transference),
                    }),
                    Outcome::from_bool(ok),
                ))
            }
            MagnusCmd::Distinguish { g, h, degree } => {
                cfg.inputs = vec![g.clone(), h.clone()];
                let (g, h) = (word(rank, g)?, word(rank, h)?);
                let d = degree.unwrap_or_else(|| default_degree(&g).max(default_degree(&h)));
                cfg.degree = Some(d);
                let (v, out) = match distinguish(&g, &h, d)? {
                    Separation::Equal => (json!({"result": "equal"}), Outcome::Pass),
                    Separation::Distinguished { monomial, degree } => (
                        json!({"result": "distinguished", "monomial": monomial.display(rank), "degree": degree}),
                        Outcome::Pass,
                    ),
                    Separation::IndistinguishableUpTo(d) => {
                        (json!({"result": "indistinguishable", "degree": d}), Outcome::Undecided)
                    }
                };
                Ok((v, out))
            }
        },
        Command::Order(cmd) => match cmd {
            OrderCmd::Compare { g, h, max_degree } => {
                cfg.inputs = vec![g.clone(), h.clone()];
                let (g, h) = (word(rank, g)?, word(rank, h)?);
                let v = match max_degree {
                    Some(d) => {
                        cfg.degree = Some(*d);
                        order_compare(&g, &h, *d)?
                    }
                    None => {
                        cfg.degree = Some(lacunae::magnus_order::default_max_degree(&g, &h));
                        order_compare_default(&g, &h)?
                    }
                };
                let out = match v.relation {
                    Relation::Undecided { .. } => Outcome::Undecided,
                    _ => Outcome::Pass,
                };
                Ok((to_value(&v), out))
            }
            OrderCmd::Sort { file } => {
                cfg.inputs = vec![path_str(file)];
                let (r, mut ws) = input::read_words(file, rank)?;
                cfg.rank = r;
                sort_words(&mut ws)?;
                Ok((json!({"sorted": to_value(&ws)}), Outcome::Pass))
            }
            OrderCmd::Split { file } => {
                cfg.inputs = vec![path_str(file)];
                let x = input::read_fourier(file)?;
                cfg.rank = x.rank();
                let (p, n) = positive_part_split(&x)?;
                Ok((json!({"positive": p.to_json(), "negative": n.to_json()}), Outcome::Pass))
            }
        },
        Command::Cnd(args) => {
            let (r, set) = match &args.words {
                Some(p) => {
                    cfg.inputs = vec![path_str(p)];
                    input::read_words(p, rank)?
                }
                None => {
                    cfg.radius = Some(vec![args.radius]);
                    (rank, ball(rank, args.radius)?)
                }
            };
            cfg.rank = r;
            let psi = LengthFunction::parse(r, &args.length)?;
            cfg.length = Some(psi.to_string());
            cfg.tolerance = args.tol;
            let gram = cnd_gram_test(&psi, &set, args.tol)?;
            let mut ok = gram.verdict.passed();
            let mut report = json!({"gram": to_value(&gram)});
            if let Some(spec) = &args.schoenberg {
                cfg.t_grid = Some(spec.clone());
                let ts = input::parse_t_grid(spec)?;
                let s = schoenberg_test(&psi, &set, &ts, args.tol)?;
                ok &= s.verdict.passed();
                report["schoenberg"] = to_value(&s);
            }
            Ok((report, Outcome::from_bool(ok)))
        }
        Command::Certify(cmd) => match cmd {
            CertifyCmd::Psi { words: p, length } => {
                cfg.inputs = vec![path_str(p)];
                let (r, seq) = input::read_words(p, rank)?;
                cfg.rank = r;
                let psi = LengthFunction::parse(r, length)?;
                cfg.length = Some(psi.to_string());
                let c = psi_lacunary_delta(&psi, &seq)?;
                let ok = c.verdict.passed();
                Ok((to_value(&c), Outcome::from_bool(ok)))
            }
            CertifyCmd::Rudin {
                words: p,
                candidates,
                search_radius,
            } => {
                cfg.inputs = vec![path_str(p)];
                cfg.radius = Some(vec![*search_radius]);
                let (r, set) = input::read_words(p, rank)?;
                cfg.rank = r;
                let cands = match candidates {
                    Some(c) => {
                        cfg.inputs.push(path_str(c));
                        Some(input::read_words(c, r)?.1)
                    }
                    None => None,
                };
                let c = rudin_lacunarity_estimate(&set, r, cands.as_deref(), *search_radius)?;
                Ok((to_value(&c), Outcome::Pass))
            }
            CertifyCmd::Prop51 { words: p } => {
                cfg.inputs = vec![path_str(p)];
                let (r, seq) = input::read_words(p, rank)?;
                cfg.rank = r;
                let c = prop51_check(&seq)?;
                let ok = c.verdict.passed();
                Ok((to_value(&c), Outcome::from_bool(ok)))
            }
        },
        Command::Norm(cmd) => {
            let common = match cmd {
                NormCmd::Op(c) | NormCmd::Bmo { common: c, .. } | NormCmd::H1 { common: c, .. } => c,
            };
            cfg.inputs = vec![path_str(&common.input)];
            cfg.radius = Some(common.radius.clone());
            cfg.tolerance = Some(common.tol);
            let x = input::read_fourier(&common.input)?;
            cfg.rank = x.rank();
            let ncfg = norm_config(seed, common.tol, common.steps);
            let mut ladder = Vec::new();
            match cmd {
                NormCmd::Op(_) => {
                    for &r in &common.radius {
                        ladder.push(to_value(&operator_norm_estimate(&x, r, &ncfg)?));
                    }
                }
                NormCmd::Bmo { length, tgrid, .. } => {
                    let psi = LengthFunction::parse(x.rank(), length)?;
                    cfg.length = Some(psi.to_string());
                    cfg.t_grid = Some(tgrid.clone().unwrap_or_else(|| "default".into()));
                    let grid = tgrid.as_deref().map(input::parse_t_grid).transpose()?;
                    for &r in &common.radius {
                        ladder.push(to_value(&bmo_norm_estimate(&x, &psi, grid.as_deref(), r, &ncfg)?));
                    }
                }
                NormCmd::H1 { length, .. } => {
                    let psi = LengthFunction::parse(x.rank(), length)?;
                    cfg.length = Some(psi.to_string());
                    for &r in &common.radius {
                        ladder.push(to_value(&h1_norm_estimate(&x, &psi, r, &ncfg)?));
                    }
                }
            }
            Ok((json!({"ladder": ladder}), Outcome::Pass))
        }
        Command::Paley(cmd) => match cmd {
            PaleyCmd::Theorem1 { input: p, config } => {
                cfg.inputs = vec![path_str(p)];
                let seq = input::read_sequence(p, rank)?;
                cfg.rank = seq.rank;
                let psi = LengthFunction::parse(seq.rank, seq.length.as_deref().unwrap_or("word"))?;
                cfg.length = Some(psi.to_string());
                if let Some(c) = config {
                    cfg.inputs.push(path_str(c));
                }
                let pc = paley_config(config.as_deref(), seed)?;
                cfg.radius = Some(vec![pc.radius]);
                cfg.tolerance = Some(pc.norm.tol);
                cfg.seed = pc.norm.seed;
                cfg.t_grid = Some(match &pc.t_grid {
                    Some(g) => g.iter().map(|t| format!("{t:e}")).collect::<Vec<_>>().join(","),
                    None => "default".into(),
                });
                let r = theorem1_check(seq.rank, &seq.words, &seq.coeffs, &psi, &pc)?;
                let ok = r.passed;
                Ok((to_value(&r), Outcome::from_bool(ok)))
            }
            PaleyCmd::Lambda4 { input: p } => {
                cfg.inputs = vec![path_str(p)];
                let seq = input::read_sequence(p, rank)?;
                cfg.rank = seq.rank;
                let psi = LengthFunction::parse(seq.rank, seq.length.as_deref().unwrap_or("word"))?;
                cfg.length = Some(psi.to_string());
                let r = lambda4_check(seq.rank, &seq.words, &seq.coeffs, &psi)?;
                let ok = r.passed;
                Ok((to_value(&r), Outcome::from_bool(ok)))
            }
            PaleyCmd::Split { input: p } => {
                cfg.inputs = vec![path_str(p)];
                let (y, z, targets) = input::read_split(p)?;
                cfg.rank = y.rank();
                let r = paley_split(&y, &z, &targets)?;
                let ok = r.passed;
                Ok((to_value(&r), Outcome::from_bool(ok)))
            }
            PaleyCmd::Jab { input: p, radius } => {
                cfg.inputs = vec![path_str(p)];
                cfg.radius = Some(vec![*radius]);
                let x = input::read_fourier(p)?;
                cfg.rank = x.rank();
                let d = jab_decomposition(&x)?;
                let f = jab_functional(&x, *radius, &norm_config(seed, 1e-6, DEFAULT_KRYLOV_STEPS))?;
                Ok((json!({"decomposition": to_value(&d), "functional": to_value(&f)}), Outcome::Pass))
            }
        },
    }
}

fn command_name(c: &Command) -> String {
    let (verb, sub) = match c {
        Command::Words(w) => ("words", format!("{w:?}")),
        Command::Magnus(m) => ("magnus", format!("{m:?}")),
        Command::Order(o) => ("order", format!("{o:?}")),
        Command::Cnd(_) => ("cnd", String::new()),
        Command::Certify(x) => ("certify", format!("{x:?}")),
        Command::Norm(n) => ("norm", format!("{n:?}")),
        Command::Paley(p) => ("paley", format!("{p:?}")),
    };
    let sub: String = sub
        .chars()
        .take_while(|ch| ch.is_alphanumeric())
        .collect::<String>()
        .to_lowercase();
    if sub.is_empty() {
        verb.to_string()
    } else {
        format!("{verb} {sub}")
    }
}

fn emit(cli: &Cli, doc: &Value) -> std::io::Result<()> {
    let text = match cli.global.format {
        Format::Json => output::to_json_string(doc),
        Format::Csv => output::to_csv_string(doc),
    };
    match &cli.global.out {
        Some(p) => std::fs::write(p, text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("lacunae: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let mut job = Job::new(&cli, &command_name(&cli.command));
    let (doc, code) = match run(&cli, &mut job) {
        Ok((report, outcome)) => (
            json!({"config": to_value(&job.config), "verdict": outcome.label(), "report": report}),
            outcome.code(),
        ),
        Err(e) => {
            eprintln!("lacunae: {e}");
            let mut err = json!({"kind": error_kind(&e), "message": e.to_string()});
            if let Error::Parse { position, .. } = &e {
                err["position"] = json!(position);
            }
            (
                json!({"config": to_value(&job.config), "verdict": "error", "error": err}),
                error_code(&e),
            )
        }
    };
    if let Err(e) = emit(&cli, &doc) {
        eprintln!("lacunae: cannot write report: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
