use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use taskcode::cost::{cost_converse_bound, universal_cost_moment, CostFn};
use taskcode::encoder::{build_encoder, build_mismatched_encoder, moment, moment_bounds, si_bounds};
use taskcode::lossy::{build_lossy_codec, lossy_moment};
use taskcode::measures::{
    binary_hamming_renyi_rd, conditional_renyi, kl_divergence, renyi_divergence, renyi_entropy, renyi_rd_with,
    sundaresan_divergence, Distortion, RenyiRdConfig,
};
use taskcode::oracle::exact_min_moment;
use taskcode::prob::{product_pmf, JointPmf, Pmf};
use taskcode::universal::{
    build_universal_encoder, build_universal_si_encoder, universal_moment_bound, universal_si_moment_bound,
    BlockCodeParams, ChunkPolicy,
};
use taskcode::{selftest, Error};

#[derive(Parser)]
#[command(name = "taskcode", version, about = "Task encoders and Renyi information measures")]
struct Cli {
    /// Seed for every randomized routine.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Rescale PMF and joint files whose mass is not 1 instead of rejecting them.
    #[arg(long, global = true)]
    normalize: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum DivKind {
    Sundaresan,
    Renyi,
    Kl,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    ProofCap,
    FillBudget,
}

impl From<Policy> for ChunkPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::ProofCap => ChunkPolicy::ProofCap,
            Policy::FillBudget => ChunkPolicy::FillBudget,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Renyi entropy of order 1/(1+rho), or the conditional one for a joint.
    #[command(group(ArgGroup::new("src").required(true).args(["pmf", "joint"])))]
    Entropy {
        #[arg(long)]
        pmf: Option<PathBuf>,
        #[arg(long)]
        joint: Option<PathBuf>,
        #[arg(long)]
        rho: f64,
    },
    /// Divergence between two laws on one alphabet.
    Divergence {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "sundaresan")]
        kind: DivKind,
    },
    /// Build a single-shot encoder and report its moment and bounds.
    Encode {
        #[arg(long)]
        pmf: PathBuf,
        #[arg(long)]
        rho: f64,
        #[arg(long = "max-descriptions")]
        max_descriptions: u64,
        /// Design the encoder for this law instead of the true one.
        #[arg(long)]
        design: Option<PathBuf>,
        /// Write the encoder table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact minimum moment by exhaustive search.
    Oracle {
        #[arg(long)]
        pmf: PathBuf,
        #[arg(long)]
        rho: f64,
        #[arg(long = "max-descriptions")]
        max_descriptions: u64,
    },
    /// Constructed and universal moments against their bounds across n.
    SweepRate {
        #[arg(long)]
        pmf: PathBuf,
        #[arg(long)]
        rho: f64,
        #[arg(long, value_parser = parse_list)]
        n: Blocks,
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Renyi rate-distortion curves for a Bernoulli source under Hamming distortion.
    RdCurve {
        #[arg(long)]
        p: f64,
        #[arg(long, required = true)]
        rho: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        dmax: f64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Universal encoders evaluated under a given source.
    #[command(group(ArgGroup::new("src").required(true).args(["pmf", "si"])))]
    UniversalSim {
        #[arg(long, value_parser = parse_list)]
        n: Blocks,
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        pmf: Option<PathBuf>,
        /// Joint law; builds the side-information encoders instead.
        #[arg(long)]
        si: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "fill-budget")]
        policy: Policy,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Lossy codecs across n at a fixed distortion level.
    LossySim {
        #[arg(long, value_parser = parse_list)]
        n: Blocks,
        #[arg(long)]
        rate: f64,
        /// Per-letter distortion level D.
        #[arg(long)]
        distortion: f64,
        /// Distortion matrix (default: Hamming on the source alphabet).
        #[arg(long)]
        dist: Option<PathBuf>,
        #[arg(long)]
        pmf: PathBuf,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Expected cost of the performed tasks for universal encoders, n = 1..nmax.
    CostSim {
        #[arg(long)]
        pmf: PathBuf,
        #[arg(long)]
        costs: PathBuf,
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        nmax: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the invariant suite of every module.
    Selftest,
}

type Blocks = Vec<usize>;

/// `5`, `2..12` (inclusive) or `2,4,8`.
fn parse_list(s: &str) -> Result<Blocks, String> {
    let bad = || format!("expected N, A..B or a comma list, got '{s}'");
    let v: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if v.is_empty() || v.contains(&0) {
        return Err("block lengths must be a nonempty list of positive integers".into());
    }
    Ok(v)
}

enum Failure {
    Lib(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Run = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

struct Inputs {
    normalize: bool,
}

impl Inputs {
    fn pmf(&self, path: &Path) -> Result<Pmf, Failure> {
        Ok(Pmf::from_json_str(&read(path)?, self.normalize)?)
    }

    fn joint(&self, path: &Path) -> Result<JointPmf, Failure> {
        Ok(JointPmf::from_json_str(&read(path)?, self.normalize)?)
    }
}

/// Six significant digits; scientific outside a readable range.
fn sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    // the exponent after rounding to six digits, so 9.999996 counts as 10
    let sci = format!("{x:.5e}");
    let mag: i32 = sci.split_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    if !(-4..15).contains(&mag) {
        return sci;
    }
    let prec = (5 - mag).max(0) as usize;
    format!("{x:.prec$}")
}

fn product_joint(j: &JointPmf, n: usize) -> Result<JointPmf, Failure> {
    Ok(j.product(n)?)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".into(), sig)
}

fn write_csv(path: Option<&Path>, header: &[String], rows: &[Vec<String>]) -> Run {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(
            fs::File::create(p).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display())))?,
        ),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    let io_err = |e: csv::Error| Failure::Usage(format!("csv output failed: {e}"));
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(r).map_err(io_err)?;
    }
    w.flush().map_err(|e| Failure::Usage(format!("csv output failed: {e}")))?;
    Ok(())
}

/// A sweep whose every row failed numerically is a numeric failure.
fn finish(path: Option<&Path>, cols: &[&str], rows: &[Vec<String>], value_col: usize) -> Run {
    write_csv(path, &header(cols), rows)?;
    if rows.iter().all(|r| r[value_col] == "nan") {
        return Err(Failure::Lib(Error::Infeasible("no block length in the sweep is feasible".into())));
    }
    Ok(())
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

/// Numeric failures of one sweep cell become `nan`; anything else aborts.
fn cell<T>(r: taskcode::Result<T>) -> Result<Option<T>, Failure> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_numeric() || matches!(e, Error::Precondition(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn run(cli: Cli) -> Run {
    let inp = Inputs { normalize: cli.normalize };
    match cli.cmd {
        Cmd::Entropy { pmf, joint, rho } => {
            if !(rho > 0.0) {
                return Err(Failure::Usage(format!("--rho must be positive, got {rho}")));
            }
            let v = match (pmf, joint) {
                (Some(p), _) => renyi_entropy(&inp.pmf(&p)?, rho),
                (None, Some(j)) => conditional_renyi(&inp.joint(&j)?, rho),
                (None, None) => unreachable!("clap enforces one source"),
            };
            println!("{}", sig(v));
        }
        Cmd::Divergence { p, q, alpha, kind } => {
            let (p, q) = (inp.pmf(&p)?, inp.pmf(&q)?);
            p.same_alphabet(&q)?;
            let v = match kind {
                DivKind::Sundaresan => sundaresan_divergence(&p, &q, alpha),
                DivKind::Renyi => renyi_divergence(&p, &q, alpha),
                DivKind::Kl => kl_divergence(p.probs(), q.probs()),
            };
            println!("{}", sig(v));
        }
        Cmd::Encode { pmf, rho, max_descriptions: m, design, out } => {
            let p = inp.pmf(&pmf)?;
            let b = moment_bounds(&p, rho, m);
            let (enc, bound) = match design {
                Some(q) => {
                    let (enc, bound) = build_mismatched_encoder(&p, &inp.pmf(&q)?, rho, m)?;
                    (enc, Some(bound))
                }
                None => (build_encoder(&p, rho, m)?, b.upper),
            };
            println!("moment {}", sig(moment(&enc, &p, rho)?));
            println!("lower_bound {}", sig(b.lower));
            println!("upper_bound {}", opt(bound));
            println!("descriptions_used {}", enc.descriptions_used());
            let table = enc.to_json().to_string();
            match out {
                Some(path) => fs::write(&path, table + "\n")
                    .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?,
                None => println!("{table}"),
            }
        }
        Cmd::Oracle { pmf, rho, max_descriptions: m } => {
            let p = inp.pmf(&pmf)?;
            let r = exact_min_moment(&p, rho, m)?;
            println!("min_moment {}", sig(r.min_moment));
            println!("blocks_used {}", r.blocks_used);
            println!("{}", r.argmin.to_json());
        }
        Cmd::SweepRate { pmf, rho, n, rate, csv } => {
            let p = inp.pmf(&pmf)?;
            let rows = n
                .iter()
                .map(|&n| {
                    let params = BlockCodeParams::new(n, rate)?;
                    let m = params.m();
                    let pn = product_pmf(&p, n)?;
                    let built = cell(build_encoder(&pn, rho, m).and_then(|e| moment(&e, &pn, rho)))?;
                    let uni = cell(
                        build_universal_encoder(params, p.alphabet(), ChunkPolicy::default())
                            .and_then(|e| e.moment(&p, rho)),
                    )?;
                    Ok(vec![
                        n.to_string(),
                        m.to_string(),
                        opt(built),
                        opt(uni),
                        sig(moment_bounds(&pn, rho, m).lower),
                        sig(universal_moment_bound(n, rate, rho, &p)),
                    ])
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            let cols = ["n", "M", "constructed_moment", "universal_moment", "lower_bound", "universal_bound"];
            write_csv(csv.as_deref(), &header(&cols), &rows)?;
        }
        Cmd::RdCurve { p, rho, dmax, steps, csv } => {
            if !(p > 0.0 && p < 1.0) || steps == 0 || !(dmax >= 0.0) || rho.iter().any(|r| !(*r > 0.0)) {
                return Err(Failure::Usage("need 0 < p < 1, rho > 0, dmax >= 0 and steps >= 1".into()));
            }
            let mut cols = vec!["D".to_string()];
            cols.extend(rho.iter().map(|r| format!("R_rho_{r}")));
            let rows: Vec<Vec<String>> = (0..=steps)
                .map(|i| {
                    let d = dmax * i as f64 / steps as f64;
                    let mut row = vec![sig(d)];
                    row.extend(rho.iter().map(|&r| sig(binary_hamming_renyi_rd(p, d, r))));
                    row
                })
                .collect();
            write_csv(csv.as_deref(), &cols, &rows)?;
        }
        Cmd::UniversalSim { n, rate, rho, pmf, si, policy, csv } => {
            let policy = ChunkPolicy::from(policy);
            let mut rows = Vec::new();
            if let Some(path) = si {
                let j = inp.joint(&path)?;
                for &n in &n {
                    let params = BlockCodeParams::new(n, rate)?;
                    let enc = cell(build_universal_si_encoder(params, j.x_alphabet(), j.y_alphabet(), policy))?;
                    let used = enc.as_ref().map(|e| e.descriptions_used().to_string()).unwrap_or_else(|| "nan".into());
                    let v = match &enc {
                        Some(e) => Some(e.moment(&j, rho)?),
                        None => None,
                    };
                    rows.push(vec![
                        n.to_string(),
                        params.m().to_string(),
                        used,
                        opt(v),
                        sig(universal_si_moment_bound(n, rate, rho, &j)),
                        sig(si_bounds(&product_joint(&j, n)?, rho, params.m()).lower),
                    ]);
                }
            } else {
                let p = inp.pmf(pmf.as_deref().expect("clap enforces one source"))?;
                for &n in &n {
                    let params = BlockCodeParams::new(n, rate)?;
                    let enc = cell(build_universal_encoder(params, p.alphabet(), policy))?;
                    let used = enc.as_ref().map(|e| e.descriptions_used().to_string()).unwrap_or_else(|| "nan".into());
                    let v = match &enc {
                        Some(e) => Some(e.moment(&p, rho)?),
                        None => None,
                    };
                    let lower = moment_bounds(&product_pmf(&p, n)?, rho, params.m()).lower;
                    rows.push(vec![
                        n.to_string(),
                        params.m().to_string(),
                        used,
                        opt(v),
                        sig(universal_moment_bound(n, rate, rho, &p)),
                        sig(lower),
                    ]);
                }
            }
            let cols = ["n", "M", "descriptions_used", "moment", "universal_bound", "lower_bound"];
            finish(csv.as_deref(), &cols, &rows, 3)?;
        }
        Cmd::LossySim { n, rate, distortion, dist, pmf, rho, csv } => {
            let p = inp.pmf(&pmf)?;
            let d = match dist {
                Some(path) => Distortion::from_json_str(&read(&path)?)?,
                None => Distortion::hamming(p.alphabet()),
            };
            let cfg = RenyiRdConfig { seed: cli.seed, ..RenyiRdConfig::default() };
            let threshold = renyi_rd_with(&p, &d, distortion, rho, cfg)?.value;
            let mut rows = Vec::new();
            for &n in &n {
                let codec = cell(build_lossy_codec(n, rate, &d, distortion))?;
                let (used, v) = match &codec {
                    Some(c) => (c.descriptions_used().to_string(), Some(lossy_moment(c, &p, rho)?)),
                    None => ("nan".into(), None),
                };
                rows.push(vec![
                    n.to_string(),
                    BlockCodeParams::new(n, rate)?.m().to_string(),
                    used,
                    opt(v),
                    opt(v.map(|v| v.log2() / n as f64)),
                    sig(threshold),
                ]);
            }
            let cols = ["n", "M", "descriptions_used", "moment", "log_moment_per_task", "renyi_rd"];
            finish(csv.as_deref(), &cols, &rows, 3)?;
        }
        Cmd::CostSim { pmf, costs, rate, nmax, csv } => {
            let p = inp.pmf(&pmf)?;
            let c = CostFn::from_json_str(&read(&costs)?)?;
            let e = c.expected(&p)?;
            let mut rows = Vec::new();
            for n in 1..=nmax {
                let params = BlockCodeParams::new(n, rate)?;
                let enc = cell(build_universal_encoder(params, p.alphabet(), ChunkPolicy::default()))?;
                let v = match &enc {
                    Some(enc) => Some(universal_cost_moment(enc, &p, &c)?),
                    None => None,
                };
                rows.push(vec![
                    n.to_string(),
                    params.m().to_string(),
                    opt(v),
                    sig(e),
                    sig(cost_converse_bound(&p, &c, rate, n)?),
                ]);
            }
            let cols = ["n", "M", "cost_moment", "expected_cost", "converse_bound"];
            finish(csv.as_deref(), &cols, &rows, 2)?;
        }
        Cmd::Selftest => {
            let report = selftest::run(cli.seed);
            println!("{report}");
            if !report.passed() {
                return Err(Failure::Lib(Error::Infeasible("selftest found violations".into())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 2 } else { 1 })
        }
    }
}
