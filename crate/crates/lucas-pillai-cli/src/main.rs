use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde_json::json;

use lucas_pillai::padic::{first_exception, hensel_valuation_bound};
use lucas_pillai::pipeline::{self, BoundChainReport, Config, PipelineError, TableReport};
use lucas_pillai::reduction::{cf_log_ratio, legendre_denominator_bound};
use lucas_pillai::bigreal::LogBase;
use lucas_pillai::search::{csv_rows, display_line, multi_rep_search, naive_search, RepRecord, Sign};

#[derive(Parser)]
#[command(name = "lucas-pillai", version, about = "Integers c with several representations L_n - 2^x 3^y")]
struct Cli {
    /// key = value file; built-in defaults match config/default.conf
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. --set precision_digits=200
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write a JSON-lines report here
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write representation tables as CSV (c,n,x,y)
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Pos,
    Neg,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solutions of L_n = 2^x 3^y
    CaseZero {
        #[arg(long)]
        n_max: Option<u64>,
    },
    /// Bound chain for c > 0
    ChainPositive,
    /// Bound chain for c < 0
    ChainNegative,
    /// All c with at least k_min representations in a box
    Search {
        #[arg(long, value_enum)]
        sign: SignArg,
        #[arg(long)]
        n_max: u64,
        #[arg(long)]
        x_max: u32,
        #[arg(long)]
        y_max: u32,
        #[arg(long)]
        k_min: Option<usize>,
        /// Use the quadratic reference search instead
        #[arg(long)]
        naive: bool,
    },
    /// Bound nu_p(L_(n+d) - L_n) over n <= n_cap
    Hensel {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        d: u64,
        #[arg(long, default_value = "3200000000000000000000000000000000")]
        n_cap: String,
    },
    /// Continued fraction of log 3 / log 2: first q_N > M and a(M)
    CfReduce {
        #[arg(long = "M", value_name = "M")]
        m: String,
    },
    /// Case zero plus both tables against the reference lists
    VerifyTables,
    /// Everything: case zero, both chains, both tables, the crossover search
    RunAll,
}

struct Sink(Option<BufWriter<File>>);

impl Sink {
    fn open(path: &Option<PathBuf>) -> Result<Self> {
        Ok(Sink(match path {
            Some(p) => Some(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
            None => None,
        }))
    }

    fn line(&mut self, v: serde_json::Value) -> Result<()> {
        if let Some(w) = self.0.as_mut() {
            serde_json::to_writer(&mut *w, &v)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    fn chain(&mut self, r: &BoundChainReport) -> Result<()> {
        for s in &r.stages {
            let mut v = serde_json::to_value(s)?;
            v["kind"] = "stage".into();
            v["case"] = r.case.clone().into();
            self.line(v)?;
        }
        self.line(json!({
            "kind": "chain",
            "case": r.case,
            "final_n": r.final_n,
            "threshold": r.threshold,
            "contradiction": r.contradiction,
            "boxes": r.boxes,
        }))
    }

    fn table(&mut self, kind: &str, recs: &[RepRecord]) -> Result<()> {
        for r in recs {
            let mut v = serde_json::to_value(r)?;
            v["kind"] = kind.into();
            self.line(v)?;
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        if let Some(w) = self.0.as_mut() {
            w.flush()?;
        }
        Ok(())
    }
}

fn write_csv(path: &Path, recs: &[RepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["c", "n", "x", "y"])?;
    for (c, n, x, y) in csv_rows(recs) {
        w.write_record([c, n.to_string(), x.to_string(), y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Peak resident set size in KiB, from /proc/self/status.
fn peak_rss_kib() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn load_config(cli: &Cli) -> Result<Config, PipelineError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    cfg.apply(&cli.set)?;
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    Ok(cfg)
}

/// 1e8, 10^8 or plain digits.
fn parse_big(s: &str) -> Result<BigInt> {
    let s = s.trim();
    for sep in ["e", "E", "^"] {
        if let Some((a, b)) = s.split_once(sep) {
            let mant: BigInt = if sep == "^" {
                if a != "10" {
                    bail!("only 10^k is accepted, got {}", s);
                }
                BigInt::from(1)
            } else {
                a.parse()?
            };
            let e: u32 = b.parse()?;
            return Ok(mant * BigInt::from(10).pow(e));
        }
    }
    Ok(s.parse()?)
}

fn print_table(t: &TableReport) {
    println!("{:?} search: n <= {}, x <= {}, y <= {}", t.sign, t.n_max, t.x_max, t.y_max);
    for r in &t.found {
        println!("  {}", display_line(r));
    }
    if t.diff.is_empty() {
        println!("  matches the reference table ({} values)", t.found.len());
    } else {
        for m in &t.diff.missing {
            println!("  missing: {}", m);
        }
        for e in &t.diff.extra {
            println!("  extra:   {}", e);
        }
    }
}

fn run(cli: &Cli) -> Result<i32> {
    let cfg = match load_config(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e);
            return Ok(e.exit_code());
        }
    };
    pipeline::init_threads(cfg.threads);
    let mut sink = Sink::open(&cli.out)?;
    let code = match &cli.cmd {
        Cmd::CaseZero { n_max } => {
            let mut c = cfg.clone();
            if let Some(n) = n_max {
                c.case_zero_n_max = *n;
            }
            let r = pipeline::case_zero(&c);
            println!("L_n = 2^x 3^y with n <= {}:", r.n_max);
            for (n, x, y) in &r.solutions {
                println!("  (n, x, y) = ({}, {}, {})", n, x, y);
            }
            println!("{} solutions; matches the reference list: {}", r.solutions.len(), r.matches);
            sink.line(serde_json::to_value(&r)?)?;
            0
        }
        Cmd::ChainPositive | Cmd::ChainNegative => {
            let res = if matches!(cli.cmd, Cmd::ChainPositive) { pipeline::chain_positive(&cfg) } else { pipeline::chain_negative(&cfg) };
            match res {
                Ok(r) => {
                    print!("{}", r);
                    sink.chain(&r)?;
                    if r.contradiction {
                        0
                    } else {
                        1
                    }
                }
                Err(e) => {
                    eprintln!("error: {}", e);
                    e.exit_code()
                }
            }
        }
        Cmd::Search { sign, n_max, x_max, y_max, k_min, naive } => {
            let sign = match sign {
                SignArg::Pos => Sign::Pos,
                SignArg::Neg => Sign::Neg,
            };
            let k = k_min.unwrap_or(cfg.k_min);
            let recs = if *naive {
                naive_search(*n_max, *x_max, *y_max, k, sign)
            } else {
                multi_rep_search(*n_max, *x_max, *y_max, k, sign, &cfg.search_options())
            };
            for r in &recs {
                println!("{}", display_line(r));
            }
            println!("{} values of c", recs.len());
            sink.table("representations", &recs)?;
            if let Some(p) = &cli.csv {
                write_csv(p, &recs)?;
            }
            0
        }
        Cmd::Hensel { p, d, n_cap } => {
            let n_cap: BigInt = n_cap.parse().context("n_cap")?;
            let opts = cfg.hensel_options();
            match first_exception(*p, *d, opts.threshold) {
                Ok(fe) => println!("p = {}, d = {}: first n with p^{} | L_(n+d) - L_n is {} (all in one period: {:?})", p, d, opts.threshold, fe.first, fe.all),
                Err(e) => println!("p = {}, d = {}: {}", p, d, e),
            }
            match hensel_valuation_bound(*p, *d, &n_cap, &opts) {
                Ok(r) => {
                    println!("nu_{}(L_(n+{}) - L_n) < {} for 0 <= n <= {}", p, d, r.v_bound, n_cap);
                    for res in &r.residues {
                        println!(
                            "  n0 = {}: best {:?} on z = {} mod {}^{}, {} leaves, {} pruned",
                            res.n0, res.best, res.best_r, p, res.best_m, res.resolved, res.pruned
                        );
                    }
                    sink.line(serde_json::to_value(&r)?)?;
                    0
                }
                Err(e) => {
                    eprintln!("error: {}", e);
                    if matches!(e, lucas_pillai::padic::PadicError::Precision { .. }) {
                        3
                    } else {
                        1
                    }
                }
            }
        }
        Cmd::CfReduce { m } => {
            let m = parse_big(m)?;
            let cf = match cf_log_ratio(&LogBase::int(3), &LogBase::int(2), cfg.cf_terms, cfg.precision_digits) {
                Ok(cf) => cf,
                Err(e) => {
                    eprintln!("error: {}", e);
                    return Ok(3);
                }
            };
            match legendre_denominator_bound(&cf, &m) {
                Ok((n, a)) => {
                    println!("log 3 / log 2 = [{}]", cf.a.iter().take(n + 1).map(|x| x.to_string()).collect::<Vec<_>>().join(", "));
                    println!("q_{} = {} > M = {}", n, cf.q[n], m);
                    println!("a(M) = {}", a);
                    sink.line(json!({ "M": m.to_string(), "N": n, "q_N": cf.q[n].to_string(), "a_M": a.to_string() }))?;
                    0
                }
                Err(e) => {
                    eprintln!("error: {}", e);
                    1
                }
            }
        }
        Cmd::VerifyTables => {
            let z = pipeline::case_zero(&cfg);
            println!("case zero: {} solutions, matches: {}", z.solutions.len(), z.matches);
            let pos = pipeline::positive_table(&cfg);
            print_table(&pos);
            let neg = pipeline::negative_table(&cfg);
            print_table(&neg);
            sink.line(serde_json::to_value(&z)?)?;
            sink.line(serde_json::to_value(&pos)?)?;
            sink.line(serde_json::to_value(&neg)?)?;
            if let Some(p) = &cli.csv {
                let mut all = pos.found.clone();
                all.extend(neg.found.iter().cloned());
                write_csv(p, &all)?;
            }
            if z.matches && pos.diff.is_empty() && neg.diff.is_empty() {
                0
            } else {
                2
            }
        }
        Cmd::RunAll => {
            let r = pipeline::run_all(&cfg);
            println!("case zero: {} solutions, matches: {}", r.case_zero.solutions.len(), r.case_zero.matches);
            sink.line(json!({ "kind": "case_zero", "report": r.case_zero }))?;
            for oc in [&r.positive_chain, &r.negative_chain] {
                if let Some(rep) = &oc.report {
                    print!("{}", rep);
                    sink.chain(rep)?;
                }
                if let Some(e) = &oc.error {
                    println!("chain error: {}", e);
                    sink.line(json!({ "kind": "chain_error", "error": e, "exit_code": oc.exit_code }))?;
                }
            }
            print_table(&r.positive_table);
            print_table(&r.negative_table);
            sink.table("positive", &r.positive_table.found)?;
            sink.table("negative", &r.negative_table.found)?;
            if let Some(cov) = r.negative_box_covered {
                println!("configured negative box contains the proven one: {}", cov);
            }
            if let Some(c) = &r.crossover {
                println!(
                    "crossover: {} candidates from n <= {}, extended over {} <= n <= {} (x <= {}, y <= {}): {} with >= {} representations",
                    c.candidates, c.small.n_max, c.cross.n_min, c.cross.n_max, c.cross.x_max, c.cross.y_max, c.found.len(), cfg.k_min
                );
                for f in &c.found {
                    println!("  {}", display_line(f));
                }
                sink.line(json!({ "kind": "crossover", "report": c }))?;
            }
            if let Some(p) = &cli.csv {
                let mut all = r.positive_table.found.clone();
                all.extend(r.negative_table.found.iter().cloned());
                write_csv(p, &all)?;
            }
            println!("exit status {}", r.exit_code);
            sink.line(json!({ "kind": "summary", "exit_code": r.exit_code, "negative_box_covered": r.negative_box_covered }))?;
            r.exit_code
        }
    };
    sink.finish()?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let code = match run(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {:#}", e);
            1
        }
    };
    let rss = peak_rss_kib().map(|k| format!("{:.1} MiB", k as f64 / 1024.0)).unwrap_or_else(|| "n/a".into());
    eprintln!("elapsed {:.3} s, peak rss {}", start.elapsed().as_secs_f64(), rss);
    ExitCode::from(code as u8)
}
