//! Bound chains for c > 0 and c < 0, the small-range searches, and the
//! end-to-end run that ties them together.
//!
//! Every stage records our certified value next to the reference value. Downstream
//! stages consume `used = max(ours, stated)` for upper-bound stages, which is
//! sound because any larger upper bound is still an upper bound.

use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bigreal::{ln2, ln3, ln_alpha, pow10, BigFixed, LogBase, RealError};
use crate::bounds::{
    bl_padic_bound, fint, fx, guzman_luca, l2, l3, la, ln, lmn_bound, matveev_bound, max_fx, strict_int_bound,
    sunit_gap_interval, up, BBound, BoundError, LinearFormSpec, LogPoly, TermData, SCALE,
};
use crate::padic::{hensel_table, nu_alpha_shift, HenselOptions, PadicError};
use crate::quadring::lucas;
use crate::reduction::{
    c_grid, cf_log_ratio, dw_best, legendre_denominator_bound, legendre_sunit_bound, log_alpha_shift,
    smooth_unit_form, ApproxLattice, CFExpansion, DwRecord, ReductionError,
};
use crate::search::{
    crossover_search, display_line, multi_rep_search, pure_power_solutions, Rep, RepRecord, SearchOptions, Sign,
};

pub const ANALYTIC_TOL: f64 = 0.02;
pub const REDUCTION_TOL: f64 = 0.10;
/// Tolerance for the crossover-case reduction (n1 <= 500 < n).
pub const CROSSOVER_TOL: f64 = 0.05;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{stage}: insufficient precision: {msg}")]
    Precision { stage: String, msg: String },
    #[error("{stage}: {msg}")]
    Stage { stage: String, msg: String },
}

impl PipelineError {
    /// 1 for chain failures, 3 for precision failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Precision { .. } => 3,
            _ => 1,
        }
    }
}

trait At<T> {
    fn at(self, stage: &str) -> Result<T, PipelineError>;
}

impl<T> At<T> for Result<T, ReductionError> {
    fn at(self, stage: &str) -> Result<T, PipelineError> {
        self.map_err(|e| match e {
            ReductionError::Real(_) | ReductionError::Unstable { .. } => {
                PipelineError::Precision { stage: stage.into(), msg: e.to_string() }
            }
            _ => PipelineError::Stage { stage: stage.into(), msg: e.to_string() },
        })
    }
}

impl<T> At<T> for Result<T, RealError> {
    fn at(self, stage: &str) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::Precision { stage: stage.into(), msg: e.to_string() })
    }
}

impl<T> At<T> for Result<T, BoundError> {
    fn at(self, stage: &str) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::Stage { stage: stage.into(), msg: e.to_string() })
    }
}

impl<T> At<T> for Result<T, PadicError> {
    fn at(self, stage: &str) -> Result<T, PipelineError> {
        self.map_err(|e| match e {
            PadicError::Precision { .. } => PipelineError::Precision { stage: stage.into(), msg: e.to_string() },
            _ => PipelineError::Stage { stage: stage.into(), msg: e.to_string() },
        })
    }
}

// ---------------------------------------------------------------- config

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Config {
    /// Fraction digits for log 2, log 3, log α and the shifted logs.
    pub precision_digits: u32,
    pub passes: usize,
    /// `None` uses every core.
    pub threads: Option<usize>,
    pub k_min: usize,
    pub case_zero_n_max: u64,
    pub pos_n_max: u64,
    /// `None` takes the largest exponent with 2^x (resp. 3^y) <= L_{pos_n_max}.
    pub pos_x_max: Option<u32>,
    pub pos_y_max: Option<u32>,
    pub neg_n_max: u64,
    pub neg_x_max: u32,
    pub neg_y_max: u32,
    pub hensel_threshold: u32,
    pub hensel_precision: u32,
    pub branch_limit: usize,
    /// Decades in the C grid above the automatic start.
    pub c_grid_span: u32,
    pub cf_terms: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            precision_digits: 150,
            passes: 16,
            threads: None,
            k_min: 3,
            case_zero_n_max: 1500,
            pos_n_max: 1500,
            pos_x_max: None,
            pos_y_max: None,
            neg_n_max: 500,
            neg_x_max: 381,
            neg_y_max: 240,
            hensel_threshold: 8,
            hensel_precision: 128,
            branch_limit: 200_000,
            c_grid_span: 8,
            cf_terms: 80,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, PipelineError> {
    v.parse().map_err(|_| PipelineError::Config(format!("bad value for {}: {:?}", key, v)))
}

fn parse_auto<T: std::str::FromStr>(key: &str, v: &str) -> Result<Option<T>, PipelineError> {
    if v == "auto" {
        Ok(None)
    } else {
        parse_num(key, v).map(Some)
    }
}

impl Config {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        let v = value.trim();
        match key.trim() {
            "precision_digits" => self.precision_digits = parse_num(key, v)?,
            "passes" => self.passes = parse_num(key, v)?,
            "threads" => self.threads = parse_auto(key, v)?,
            "k_min" => self.k_min = parse_num(key, v)?,
            "case_zero_n_max" => self.case_zero_n_max = parse_num(key, v)?,
            "pos_n_max" => self.pos_n_max = parse_num(key, v)?,
            "pos_x_max" => self.pos_x_max = parse_auto(key, v)?,
            "pos_y_max" => self.pos_y_max = parse_auto(key, v)?,
            "neg_n_max" => self.neg_n_max = parse_num(key, v)?,
            "neg_x_max" => self.neg_x_max = parse_num(key, v)?,
            "neg_y_max" => self.neg_y_max = parse_num(key, v)?,
            "hensel_threshold" => self.hensel_threshold = parse_num(key, v)?,
            "hensel_precision" => self.hensel_precision = parse_num(key, v)?,
            "branch_limit" => self.branch_limit = parse_num(key, v)?,
            "c_grid_span" => self.c_grid_span = parse_num(key, v)?,
            "cf_terms" => self.cf_terms = parse_num(key, v)?,
            other => return Err(PipelineError::Config(format!("unknown key {:?}", other))),
        }
        if self.passes == 0 || self.k_min < 2 || self.precision_digits == 0 {
            return Err(PipelineError::Config("passes >= 1, k_min >= 2, precision_digits >= 1".into()));
        }
        Ok(())
    }

    /// `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| PipelineError::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {}", path.display(), e)))?;
        Self::parse(&text)
    }

    /// Applies `key=value` overrides in order.
    pub fn apply(&mut self, overrides: &[String]) -> Result<(), PipelineError> {
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| PipelineError::Config(format!("expected key=value, got {:?}", o)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn search_options(&self) -> SearchOptions {
        SearchOptions { passes: self.passes, threads: self.threads }
    }

    pub fn hensel_options(&self) -> HenselOptions {
        HenselOptions { threshold: self.hensel_threshold, precision: self.hensel_precision, branch_limit: self.branch_limit }
    }

    /// Largest x and y with 2^x <= L_n and 3^y <= L_n.
    pub fn positive_box(&self) -> (u32, u32) {
        let (ax, ay) = exponent_envelope(self.pos_n_max);
        (self.pos_x_max.unwrap_or(ax), self.pos_y_max.unwrap_or(ay))
    }
}

/// Sizes the global worker pool; a no-op when `threads` is `None` or the pool exists.
pub fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn exponent_envelope(n: u64) -> (u32, u32) {
    let l = lucas(n);
    let x = l.bits().saturating_sub(1) as u32;
    let mut y = 0u32;
    let mut p = BigInt::from(3);
    while p <= l {
        p *= 3;
        y += 1;
    }
    (x, y)
}

// ---------------------------------------------------------------- stages

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// |ours − stated| <= tol·stated
    Match,
    /// ours <= stated·(1 + tol); the reference value is a rounded-up bound.
    Upper,
    /// Recorded only.
    Info,
}

#[derive(Clone, Debug, Serialize)]
pub struct Stage {
    pub id: String,
    pub label: String,
    pub inputs: Vec<String>,
    pub ours: f64,
    pub stated: Option<f64>,
    pub deviation: Option<f64>,
    pub check: Check,
    pub tolerance: f64,
    pub within: Option<bool>,
    /// The value passed to later stages.
    pub used: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchBox {
    pub id: String,
    pub n_min: u64,
    pub n_max: u64,
    pub x_max: u32,
    pub y_max: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundChainReport {
    pub case: String,
    pub stages: Vec<Stage>,
    /// n < final_n in the region the chain covers.
    pub final_n: f64,
    pub threshold: u64,
    pub contradiction: bool,
    pub boxes: Vec<SearchBox>,
}

impl BoundChainReport {
    pub fn stage(&self, id: &str) -> Option<&Stage> {
        self.stages.iter().find(|s| s.id == id)
    }

    pub fn jsonl(&self) -> String {
        self.stages.iter().map(|s| serde_json::to_string(s).unwrap() + "\n").collect()
    }
}

impl fmt::Display for BoundChainReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} chain", self.case)?;
        for s in &self.stages {
            let stated = s.stated.map(|v| format!("{:.4e}", v)).unwrap_or_else(|| "-".into());
            let dev = s.deviation.map(|d| format!("{:+.2}%", 100.0 * d)).unwrap_or_default();
            let mark = match s.within {
                Some(true) => "ok",
                Some(false) => "DIFF",
                None => "",
            };
            writeln!(f, "  {:<22} {:>12.4e} {:>12} {:>9} {:<4} {}", s.id, s.ours, stated, dev, mark, s.label)?;
        }
        writeln!(
            f,
            "  final n < {:.1}, threshold {}: {}",
            self.final_n,
            self.threshold,
            if self.contradiction { "contradiction reached" } else { "no contradiction" }
        )
    }
}

struct Chain {
    case: String,
    stages: Vec<Stage>,
}

impl Chain {
    fn new(case: &str) -> Self {
        Chain { case: case.into(), stages: Vec::new() }
    }

    #[allow(clippy::too_many_arguments)]
    fn rec_full(
        &mut self,
        id: &str,
        label: &str,
        inputs: &[&str],
        ours: &BigFixed,
        stated: Option<f64>,
        check: Check,
        tol: f64,
        detail: Option<serde_json::Value>,
    ) -> BigFixed {
        let o = ours.upper_f64();
        let deviation = stated.map(|s| (o - s) / s);
        let within = match (deviation, check) {
            (Some(d), Check::Match) => Some(d.abs() <= tol),
            (Some(d), Check::Upper) => Some(d <= tol),
            _ => None,
        };
        let used = match (stated, check) {
            (Some(s), Check::Match | Check::Upper) => max_fx(&up(ours), &BigFixed::from_f64_str(s, SCALE)),
            _ => up(ours),
        };
        self.stages.push(Stage {
            id: id.into(),
            label: label.into(),
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            ours: o,
            stated,
            deviation,
            check,
            tolerance: if check == Check::Info { 0.0 } else { tol },
            within,
            used: used.upper_f64(),
            detail,
        });
        used
    }

    fn rec(&mut self, id: &str, label: &str, inputs: &[&str], ours: &BigFixed, stated: Option<f64>, check: Check, tol: f64) -> BigFixed {
        self.rec_full(id, label, inputs, ours, stated, check, tol, None)
    }

    fn info(&mut self, id: &str, label: &str, inputs: &[&str], ours: &BigFixed, stated: Option<f64>) -> BigFixed {
        self.rec(id, label, inputs, ours, stated, Check::Info, 0.0)
    }

    fn finish(self, final_n: f64, threshold: u64, boxes: Vec<SearchBox>) -> BoundChainReport {
        BoundChainReport { case: self.case, stages: self.stages, final_n, threshold, contradiction: final_n <= threshold as f64, boxes }
    }
}

fn fu(n: u64) -> BigFixed {
    fint(n)
}

fn to_u64(v: &BigInt) -> u64 {
    v.to_u64().unwrap_or(u64::MAX)
}

/// 1/e from above.
fn inv_e() -> BigFixed {
    fx("0.36787944117144233")
}

// ---------------------------------------------------------------- analytic helpers

/// Coefficient C with |n log α − x log 2 − y log 3| > exp(−C log n) for n >= n_min.
fn matveev3(n_min: u64) -> Result<BigFixed, BoundError> {
    let spec = LinearFormSpec {
        d: 2,
        b: BBound::LogN { n_min },
        terms: vec![
            LinearFormSpec::const_term(2, l2(), l2()),
            LinearFormSpec::const_term(2, l3(), l3()),
            LinearFormSpec::const_term(2, la().div_int(&2.into()), la()),
        ],
    };
    let p = matveev_bound(&spec)?;
    Ok(p.fold_to_degree(1, n_min)?)
}

/// Four-term form with γ4 = α^d − 1, where 2 h(γ4) <= d log α + 2 log 2 <= A4 log n.
fn matveev4(k1: &BigFixed, a4: &BigFixed, n_min: u64) -> Result<LogPoly, BoundError> {
    let kla = k1.mul(&la());
    let g4 = TermData {
        height: LogPoly::new(vec![l2(), kla.div_int(&2.into())]),
        abs_log: LogPoly::new(vec![la(), kla]),
        a: LogPoly::new(vec![l2().mul_int(&2.into()), a4.clone()]),
    };
    let spec = LinearFormSpec {
        d: 2,
        b: BBound::LogN { n_min },
        terms: vec![
            LinearFormSpec::const_term(2, l2(), l2()),
            LinearFormSpec::const_term(2, l3(), l3()),
            LinearFormSpec::const_term(2, la().div_int(&2.into()), la()),
            g4,
        ],
    };
    matveev_bound(&spec)
}

/// Bound on x_min (p = 2) or y_min (p = 3) as a polynomial in log n, given
/// d = n − n1 < k (log n)^e. Covers the odd case through the p-adic bound and
/// the even case through the valuation lemma; returns the larger folded value.
fn padic_min_bound(p: u32, k: &BigFixed, e: usize, n_min: u64, fold: usize) -> Result<BigFixed, BoundError> {
    let lp = ln(&fu(p as u64));
    let (g, h1) = if p == 2 { (3, la()) } else { (4, l3().div_int(&2.into())) };
    let mut h2 = vec![ln(&fu(4))];
    h2.resize(e, fint(0));
    h2.push(k.mul(&la()));
    // ν_p(β^d − 1) <= 1 + log d / log p and log log n <= log n / e
    let mut add = vec![fint(1).add(&ln(k).div(&lp).unwrap())];
    add.push(inv_e().mul_int(&BigInt::from(e)).div(&lp).unwrap());
    let additive = LogPoly::new(add.clone());
    let odd = bl_padic_bound(p, g, &h1, &LogPoly::new(h2), 2, n_min, &additive)?.fold_to_degree(fold, n_min)?;
    // 1 + log(2n)/log p plus the same ν_p(β^d − 1) term
    let even = LogPoly::new(vec![fint(1).add(&l2().div(&lp).unwrap()), fint(1).div(&lp).unwrap()])
        .add(&additive)
        .fold_to_degree(fold, n_min)?;
    Ok(max_fx(&odd, &even))
}

// ---------------------------------------------------------------- reduction helpers

fn etas(digits: u32) -> Vec<BigFixed> {
    vec![ln2(digits), ln3(digits), ln_alpha(digits)]
}

/// Start decade for the C grid: roughly 3·log10(max A) − 2.
fn auto_e0(a: &[BigFixed]) -> u32 {
    let amax = a.iter().map(|x| x.upper_f64()).fold(1.0f64, f64::max);
    ((3.0 * amax.log10()).floor() as i64 - 2).max(1) as u32
}

fn lattices_at(cfg: &Config, e0: u32, stage: &str) -> Result<Vec<ApproxLattice>, PipelineError> {
    let et = etas(cfg.precision_digits);
    c_grid(e0, cfg.c_grid_span).par_iter().map(|c| ApproxLattice::new(c, &et)).collect::<Result<Vec<_>, _>>().at(stage)
}

fn lattice_cache(cfg: &Config, a: &[BigFixed], stage: &str) -> Result<Vec<ApproxLattice>, PipelineError> {
    lattices_at(cfg, auto_e0(a), stage)
}

fn dw_detail(r: &DwRecord) -> serde_json::Value {
    serde_json::to_value(r).unwrap()
}

/// Largest H over d = 1..=d_max of the inhomogeneous form
/// log(α^d − 1) + n1 log α − x log 2 − y log 3. The d with α^d − 1 = 2^a 3^b α^e
/// fold into a homogeneous form with enlarged coefficient bounds.
fn shifted_round(
    cfg: &Config,
    cache: &[ApproxLattice],
    d_max: u64,
    a: &[BigFixed],
    c3: &BigFixed,
    c4: &BigFixed,
    stage: &str,
) -> Result<(u64, DwRecord), PipelineError> {
    let digits = cfg.precision_digits;
    // shifts whose target sits too close to the lattice at every C in the grid retry one grid higher
    let higher: OnceLock<Result<Vec<ApproxLattice>, String>> = OnceLock::new();
    let e_next = auto_e0(a) + cfg.c_grid_span + 1;
    let recs: Vec<(u64, DwRecord)> = (1..=d_max)
        .into_par_iter()
        .map(|d| -> Result<(u64, DwRecord), PipelineError> {
            let at = format!("{} (d = {})", stage, d);
            let (eta0, a2) = match smooth_unit_form(d) {
                Some(su) => (None, vec![a[0].add(&fu(su.a as u64)), a[1].add(&fu(su.b as u64)), a[2].add(&fu(su.e.unsigned_abs()))]),
                None => (Some(log_alpha_shift(d, digits).at(&at)?), a.to_vec()),
            };
            let r = match dw_best(cache, eta0.as_ref(), &a2, c3, c4) {
                Err(ReductionError::NoCandidate) => {
                    let more = higher
                        .get_or_init(|| lattices_at(cfg, e_next, stage).map_err(|e| e.to_string()))
                        .as_ref()
                        .map_err(|m| PipelineError::Precision { stage: at.clone(), msg: m.clone() })?;
                    dw_best(more, eta0.as_ref(), &a2, c3, c4).at(&at)?
                }
                other => other.at(&at)?,
            };
            Ok((d, r))
        })
        .collect::<Result<_, _>>()?;
    Ok(recs.into_iter().max_by(|x, y| x.1.h.total_cmp(&y.1.h)).unwrap())
}

struct ValStated {
    a: [Option<f64>; 2],
    b: [Option<f64>; 2],
    v: [Option<f64>; 2],
    cap: [Option<f64>; 2],
}

/// Strict caps on x_min and y_min from the valuations of L_n − L_{n1},
/// with d = n − n1 <= d_max and n < n_cap.
fn valuation_caps(
    ch: &mut Chain,
    cfg: &Config,
    tag: &str,
    inputs: &[&str],
    d_max: u64,
    n_cap: &BigInt,
    st: &ValStated,
) -> Result<[BigFixed; 2], PipelineError> {
    let mut caps = [fint(0), fint(0)];
    for (i, p) in [2u32, 3].into_iter().enumerate() {
        let lp = ln(&fu(p as u64));
        let id_a = format!("{}.even{}", tag, p);
        let a = fint(1).add(&ln(&fint(n_cap.clone() * 2)).div(&lp).at(&id_a)?);
        let a = ch.rec(&id_a, &format!("nu_{} of alpha^(2n1+d) + 1 < 1 + log(2n)/log {}", p, p), inputs, &a, st.a[i], Check::Upper, ANALYTIC_TOL);
        let id_b = format!("{}.shift{}", tag, p);
        let b = (1..=d_max)
            .map(|d| nu_alpha_shift(d, -1, p).map(|v| v.finite().unwrap_or(0)))
            .collect::<Result<Vec<_>, _>>()
            .at(&id_b)?
            .into_iter()
            .max()
            .unwrap_or(0);
        let b = ch.rec(&id_b, &format!("max nu_{} of beta^d - 1 over d <= {}", p, d_max), inputs, &fint(b), st.b[i], Check::Upper, ANALYTIC_TOL);
        let even_cap = strict_int_bound(&a.add(&b));

        let id_v = format!("{}.hensel{}", tag, p);
        let opts = cfg.hensel_options();
        let table = if d_max >= 5 { hensel_table(p, 5..d_max + 1, n_cap, &opts).at(&id_v)? } else { Vec::new() };
        let worst = table.iter().max_by_key(|r| r.v_bound);
        let v = worst.map_or(opts.threshold, |r| r.v_bound).max(opts.threshold);
        let detail = serde_json::json!({
            "p": p,
            "d_max": d_max,
            "n_cap": n_cap.to_string(),
            "screened": table.len(),
            "worst_d": worst.map(|r| r.d),
            "any_pruned": table.iter().any(|r| r.exceeds),
            "nodes": table.iter().map(|r| r.nodes).sum::<usize>(),
        });
        // the reference cap is shared by both primes, so only our own V feeds the chain
        ch.rec_full(
            &id_v,
            &format!("nu_{}(L_(n+d) - L_n) < V for odd d in [5, {}]", p, d_max),
            inputs,
            &fu(v as u64),
            st.v[i],
            Check::Upper,
            0.0,
            Some(detail),
        );
        let cap = max_fx(&fint(even_cap), &fu(v as u64));
        let name = if p == 2 { "x_min" } else { "y_min" };
        let id = format!("{}.{}", tag, name);
        caps[i] = ch.rec(&id, &format!("{} < cap", name), &[&id_a, &id_b, &id_v], &cap, st.cap[i], Check::Upper, ANALYTIC_TOL);
    }
    Ok(caps)
}

struct FinalStated {
    x: Option<f64>,
    n: Option<f64>,
    xc: Option<f64>,
    yc: Option<f64>,
}

/// Reduction tolerance applies: these inherit the reduced bounds.
/// X < (x_min cap − 1) log 2 + (y_min cap − 1) log 3 + 2 c_X and n < (X − log 0.38)/log α.
fn final_bounds(ch: &mut Chain, tag: &str, caps: &[BigFixed; 2], cx: &BigFixed, cx_id: &str, st: &FinalStated) -> Result<(BigFixed, BigFixed, BigFixed, BigFixed), PipelineError> {
    let id_x = format!("{}.final.X", tag);
    let xm = fint(strict_int_bound(&caps[0]) - 1);
    let ym = fint(strict_int_bound(&caps[1]) - 1);
    let x = xm.mul(&l2()).add(&ym.mul(&l3())).add(&cx.mul_int(&2.into()));
    let ins = [format!("{}.x_min", tag), format!("{}.y_min", tag), cx_id.to_string()];
    let ins: Vec<&str> = ins.iter().map(|s| s.as_str()).collect();
    let x = ch.rec(&id_x, "X = x log 2 + y log 3 <", &ins, &x, st.x, Check::Upper, REDUCTION_TOL);
    let n = x.sub(&ln(&fx("0.38"))).div(&la()).at(&id_x)?;
    let n = ch.rec(&format!("{}.final.n", tag), "n <", &[&id_x], &n, st.n, Check::Upper, REDUCTION_TOL);
    let xc = ch.rec(&format!("{}.final.x", tag), "x <", &[&id_x], &x.div(&l2()).at(&id_x)?, st.xc, Check::Upper, REDUCTION_TOL);
    let yc = ch.rec(&format!("{}.final.y", tag), "y <", &[&id_x], &x.div(&l3()).at(&id_x)?, st.yc, Check::Upper, REDUCTION_TOL);
    Ok((x, n, xc, yc))
}

// ---------------------------------------------------------------- c > 0

pub fn chain_positive(cfg: &Config) -> Result<BoundChainReport, PipelineError> {
    let mut ch = Chain::new("positive");
    let threshold = cfg.pos_n_max;

    let c41 = matveev3(1500).at("pos.matveev3")?;
    let c41 = ch.rec("pos.matveev3", "|Lambda| > exp(-C log n), three logarithms, n > 1500", &[], &c41, Some(1.62e12), Check::Match, ANALYTIC_TOL);
    let k1 = c41.div(&la()).at("pos.k1")?;
    let k1 = ch.rec("pos.k1", "n - n1 < k1 log n", &["pos.matveev3"], &k1, Some(4e12), Check::Upper, ANALYTIC_TOL);

    let a4 = LogPoly::new(vec![l2().mul_int(&2.into()), k1.mul(&la())]).fold_to_degree(1, 1500).at("pos.A4")?;
    let a4 = ch.rec("pos.A4", "2 h(alpha^d - 1) < A4 log n", &["pos.k1"], &a4, Some(2e12), Check::Upper, ANALYTIC_TOL);
    let m4 = matveev4(&k1, &a4, 1500).at("pos.matveev4")?;
    let c4 = m4.fold_to_degree(2, 1500).at("pos.matveev4")?;
    ch.rec("pos.matveev4", "four logarithms with gamma4 = alpha^d - 1, coefficient of (log n)^2", &["pos.A4"], &c4, Some(3.54e26), Check::Match, ANALYTIC_TOL);
    let c42 = m4.add(&LogPoly::constant(l2())).fold_to_degree(2, 1500).at("pos.gap")?;
    let c42 = ch.rec("pos.gap", "X - X1 < C (log n)^2", &["pos.matveev4"], &c42, Some(3.6e26), Check::Upper, ANALYTIC_TOL);

    let mut cmin = Vec::new();
    for p in [2u32, 3] {
        let id = format!("pos.padic{}", p);
        let c = padic_min_bound(p, &k1, 1, 60000, 3).at(&id)?;
        let name = if p == 2 { "x_min" } else { "y_min" };
        cmin.push(ch.rec(&id, &format!("{} < C (log n)^3 for n > 60000", name), &["pos.k1"], &c, Some(3e15), Check::Upper, ANALYTIC_TOL));
    }
    // n log α + log 0.38 < X < X2 + 2·gap
    let lead = cmin[0].mul(&l2()).add(&cmin[1].mul(&l3()));
    let poly = LogPoly::new(vec![ln(&fx("0.38")).neg(), fint(0), c42.mul_int(&2.into()), lead]).scale(&fint(1).div(&la()).unwrap());
    let t = poly.fold_to_degree(3, 60000).at("pos.T")?;
    let t = ch.rec("pos.T", "n < T (log n)^3", &["pos.padic2", "pos.padic3", "pos.gap"], &t, Some(1.6e27), Check::Upper, ANALYTIC_TOL);
    let n_gl = guzman_luca(3, &t).at("pos.n")?;
    let n_gl = ch.rec("pos.n", "n < 8 T (log T)^3", &["pos.T"], &n_gl, Some(3.2e33), Check::Match, ANALYTIC_TOL);
    let n_cap = strict_int_bound(&max_fx(&n_gl, &fu(60000)));
    let (_, xhi) = sunit_gap_interval(&n_cap).at("pos.X")?;
    let xhi = ch.rec("pos.X", "X < 2 + n log alpha + 60 (log(n log alpha))^2", &["pos.n"], &xhi, Some(1.6e33), Check::Match, ANALYTIC_TOL);
    let x_cap = ch.rec("pos.xcap", "x < X / log 2", &["pos.X"], &xhi.div(&l2()).at("pos.xcap")?, Some(2.4e33), Check::Match, ANALYTIC_TOL);
    let y_cap = ch.rec("pos.ycap", "y < X / log 3", &["pos.X"], &xhi.div(&l3()).at("pos.ycap")?, Some(1.5e33), Check::Match, ANALYTIC_TOL);

    // n − n1 from |n log α − x log 2 − y log 3| < 1.5 α^{−(n−n1)}
    let a = [x_cap, y_cap, fint(n_cap.clone())];
    let cache = lattice_cache(cfg, &a, "pos.lll1")?;
    let r1 = dw_best(&cache, None, &a, &fx("1.5"), &la()).at("pos.lll1")?;
    let d1 = (r1.h_int.saturating_sub(1)).max(2);
    let d1 = ch.rec_full("pos.lll1", "n - n1 <=", &["pos.xcap", "pos.ycap", "pos.n"], &fu(d1), Some(321.0), Check::Match, REDUCTION_TOL, Some(dw_detail(&r1)));
    let d1 = to_u64(&d1.floor_lower());

    // X − X1 from |log(α^d − 1) + n1 log α − x1 log 2 − y1 log 3| < 3 e^{−(X−X1)}
    let (worst_d, r2) = shifted_round(cfg, &cache, d1, &a, &fint(3), &fint(1), "pos.lll2")?;
    let cx = max_fx(&fu(r2.h_int), &ln(&fu(4)));
    let mut det = dw_detail(&r2);
    det["worst_d"] = worst_d.into();
    let cx = ch.rec_full("pos.lll2", "X - X1 <=", &["pos.lll1"], &cx, Some(157.0), Check::Match, REDUCTION_TOL, Some(det));

    let st = ValStated {
        a: [Some(114.0), Some(72.0)],
        b: [Some(10.0), Some(7.0)],
        v: [Some(114.0), Some(114.0)],
        cap: [Some(124.0), Some(79.0)],
    };
    let caps = valuation_caps(&mut ch, cfg, "pos", &["pos.lll1", "pos.n"], d1, &n_cap, &st)?;
    let fs = FinalStated { x: Some(487.0), n: Some(1013.0), xc: Some(703.0), yc: Some(444.0) };
    let (_, n, _, _) = final_bounds(&mut ch, "pos", &caps, &cx, "pos.lll2", &fs)?;
    let final_n = n.upper_f64();
    let (bx, by) = cfg.positive_box();
    let boxes = vec![SearchBox { id: "pos.search".into(), n_min: 0, n_max: cfg.pos_n_max, x_max: bx, y_max: by }];
    Ok(ch.finish(final_n, threshold, boxes))
}

// ---------------------------------------------------------------- c < 0

struct BoxStated {
    cap_exp: f64,
    x_lmn: f64,
    t_b: f64,
    x_gl: f64,
    xc: f64,
    yc: f64,
    m_min: u32,
    a_m: f64,
    n_q: f64,
    xb: f64,
    yb: f64,
    xf: f64,
    yf: f64,
}

struct BoxCaps {
    x_b: u64,
    y_b: u64,
}

fn decimal_digits(v: &BigInt) -> u32 {
    v.to_string().trim_start_matches('-').len() as u32
}

/// Caps x < x_b, y < y_b when |2^x 3^y − 2^{x1} 3^{y1}| < L_{n_top}: two-logarithm
/// bound, then Legendre's criterion for log 3/log 2.
fn sunit_box(ch: &mut Chain, cf: &CFExpansion, tag: &str, input: &str, n_top: u64, st: &BoxStated) -> Result<BoxCaps, PipelineError> {
    let cap_exp = decimal_digits(&lucas(n_top));
    let id_cap = format!("{}.cap", tag);
    ch.info(&id_cap, &format!("L_{} < 10^e", n_top), &[input], &fu(cap_exp as u64), Some(st.cap_exp));
    let log_cap = fu(cap_exp as u64).mul(&ln(&fu(10)));

    // log A1 = log A2 = 2, D = 1
    let two = fint(2);
    let lmn21 = lmn_bound(&fint(0), &fint(0), &two, &two, 1);
    let id_a = format!("{}.lmn", tag);
    let xa = ch.rec(&id_a, "X < 24.34 (21)^2 log A1 log A2 + log 10^e", &[&id_cap], &lmn21.add(&log_cap), Some(st.x_lmn), Check::Match, ANALYTIC_TOL);

    // log b' + 0.14 > 21 makes log X > 21 − 0.14 + log log 2, and log b' + 0.14 <= 2 log X
    let k = fx("24.34").mul(&fint(16));
    let lx_min = fint(21).sub(&fx("0.14")).add(&ln(&l2()));
    let t = k.add(&log_cap.div(&lx_min.mul(&lx_min)).at(&id_a)?);
    let id_t = format!("{}.T", tag);
    let t = ch.rec(&id_t, "X < T (log X)^2", &[&id_cap], &t, Some(st.t_b), Check::Upper, ANALYTIC_TOL);
    let id_gl = format!("{}.gl", tag);
    let xb = guzman_luca(2, &t).at(&id_gl)?;
    let xb = ch.rec(&id_gl, "X < 4 T (log T)^2", &[&id_t], &xb, Some(st.x_gl), Check::Upper, ANALYTIC_TOL);
    let x_all = max_fx(&xa, &xb);
    let id_xc = format!("{}.xcap", tag);
    let id_yc = format!("{}.ycap", tag);
    ch.rec(&id_xc, "x < X / log 2", &[&id_a, &id_gl], &x_all.div(&l2()).at(&id_xc)?, Some(st.xc), Check::Upper, ANALYTIC_TOL);
    let yc = ch.rec(&id_yc, "y < X / log 3", &[&id_a, &id_gl], &x_all.div(&l3()).at(&id_yc)?, Some(st.yc), Check::Upper, ANALYTIC_TOL);
    let y_cap = strict_int_bound(&yc);

    let m = pow10(st.m_min).max(pow10(decimal_digits(&y_cap)));
    let id_m = format!("{}.aM", tag);
    let (nq, am) = legendre_denominator_bound(cf, &m).at(&id_m)?;
    ch.info(&format!("{}.qN", tag), &format!("first q_N > M = 10^{}", decimal_digits(&m) - 1), &[&id_yc], &fu(nq as u64), Some(st.n_q));
    ch.rec(&id_m, "a(M) = max partial quotient up to N", &[&id_yc], &fint(am.clone()), Some(st.a_m), Check::Match, 0.0);
    let lb = legendre_sunit_bound(&m, &am, &fint(pow10(cap_exp)), &y_cap).at(&id_m)?;
    let det = serde_json::to_value(&lb).unwrap();
    ch.info(&format!("{}.xfb", tag), "x < , when 10^e / 2^x 3^y >= 1/2", &[&id_cap], &fu(lb.x_fallback), Some(st.xf));
    ch.info(&format!("{}.yfb", tag), "y < , when 10^e / 2^x 3^y >= 1/2", &[&id_cap], &fu(lb.y_fallback), Some(st.yf));
    let xb = ch.rec_full(&format!("{}.x", tag), "x <", &[&id_m], &fu(lb.x_bound), Some(st.xb), Check::Upper, ANALYTIC_TOL, Some(det));
    let yb = ch.rec(&format!("{}.y", tag), "y <", &[&id_m], &fu(lb.y_bound), Some(st.yb), Check::Upper, ANALYTIC_TOL);
    // the box is what we proved, not the rounded reference cap
    let _ = (xb, yb);
    Ok(BoxCaps { x_b: lb.x_bound, y_b: lb.y_bound })
}

struct NegStated {
    r1: f64,
    k1: Option<f64>,
    c3: Option<f64>,
    m_min: Option<u32>,
    r2: f64,
    val: ValStated,
    fin: FinalStated,
}

struct Caps {
    x: BigFixed,
    y: BigFixed,
    n: BigInt,
}

/// One pass of the reduction for n > n1 > 500: X − X1, then n − n1, then the
/// valuation caps and the new bound on n.
fn neg_reduce(ch: &mut Chain, cfg: &Config, cf: &CFExpansion, tag: &str, input: &str, caps: &Caps, st: &NegStated) -> Result<(Caps, f64), PipelineError> {
    let a = [caps.x.clone(), caps.y.clone(), fint(caps.n.clone())];
    let id1 = format!("{}.lll1", tag);
    let cache = lattice_cache(cfg, &a, &id1)?;
    // |2^{−x}3^{−y}α^n − 1| <= 2 e^{−(X−X1)} gives |Λ| < 3 e^{−(X−X1)} once X − X1 > log 4
    let r1 = dw_best(&cache, None, &a, &fint(3), &fint(1)).at(&id1)?;
    let cx = max_fx(&fu(r1.h_int), &ln(&fu(4)));
    let cx = ch.rec_full(&id1, "X - X1 <=", &[input], &cx, Some(st.r1), Check::Match, REDUCTION_TOL, Some(dw_detail(&r1)));

    let y_cap = strict_int_bound(&caps.y);
    let m_exp = st.m_min.unwrap_or(0).max(decimal_digits(&y_cap));
    let m = pow10(m_exp);
    let id_k = format!("{}.K1", tag);
    let (nq, am) = legendre_denominator_bound(cf, &m).at(&id_k)?;
    ch.info(&format!("{}.qN", tag), &format!("first q_N > M = 10^{}", m_exp), &[input], &fu(nq as u64), None);
    // 2^x 3^y < K1 α^n from 1/((a+2)|y1−y|) < 1.51 α^n / (2^x 3^y log 2)
    let k1 = fx("1.51").mul(&fint(am + 2)).mul(&fint(y_cap)).div(&l2()).at(&id_k)?;
    let k1 = ch.rec(&id_k, "2^x 3^y < K1 alpha^n", &[input], &k1, st.k1, Check::Upper, ANALYTIC_TOL);
    let c3 = k1.mul_int(&3.into());
    let id_c3 = format!("{}.c3", tag);
    let c3 = ch.rec(&id_c3, "|Lambda| < c3 alpha^-(n - n1)", &[&id_k], &c3, st.c3, Check::Upper, ANALYTIC_TOL);
    let id2 = format!("{}.lll2", tag);
    let r2 = dw_best(&cache, None, &a, &c3, &la()).at(&id2)?;
    let gate = ln(&k1.mul_int(&4.into())).div(&la()).at(&id2)?;
    let d = max_fx(&fu(r2.h_int.saturating_sub(1)), &gate);
    let d = ch.rec_full(&id2, "n - n1 <=", &[&id_c3], &d, Some(st.r2), Check::Match, REDUCTION_TOL, Some(dw_detail(&r2)));
    let d_max = to_u64(&d.floor_lower());

    let vc = valuation_caps(ch, cfg, tag, &[&id2, input], d_max, &caps.n, &st.val)?;
    let (_, n, xc, yc) = final_bounds(ch, tag, &vc, &cx, &id1, &st.fin)?;
    let final_n = n.upper_f64();
    Ok((Caps { x: xc, y: yc, n: strict_int_bound(&n) }, final_n))
}

pub fn chain_negative(cfg: &Config) -> Result<BoundChainReport, PipelineError> {
    let mut ch = Chain::new("negative");
    let small = cfg.neg_n_max;
    let cf = cf_log_ratio(&LogBase::int(3), &LogBase::int(2), cfg.cf_terms, cfg.precision_digits).at("neg.cf")?;

    // n1 < n <= 500
    let b51 = sunit_box(
        &mut ch,
        &cf,
        "neg.small",
        "neg.cf",
        small,
        &BoxStated {
            cap_exp: 105.0,
            x_lmn: 43460.0,
            t_b: 94864.0,
            x_gl: 5e7,
            xc: 7.3e7,
            yc: 4.6e7,
            m_min: 8,
            a_m: 55.0,
            n_q: 17.0,
            xb: 382.0,
            yb: 241.0,
            xf: 350.0,
            yf: 221.0,
        },
    )?;

    // n1 <= 500 < n: |2^x 3^y − α^n| < 2^{x1} 3^{y1} + 1 < 3^{x1 + y1 + 1} =: K
    let k_exp = b51.x_b + b51.y_b - 1;
    let log_k = fu(k_exp).mul(&l3());
    ch.info("neg.cross.K", "K = 3^k with 2^x1 3^y1 + 1 < K", &["neg.small.x", "neg.small.y"], &fu(k_exp), Some(624.0));
    let c500 = matveev3(small).at("neg.cross.matveev3")?;
    let c500 = ch.rec("neg.cross.matveev3", "three logarithms, n > 500", &[], &c500, Some(1.62e12), Check::Match, ANALYTIC_TOL);
    let t52 = LogPoly::new(vec![log_k.clone(), c500]).scale(&fint(1).div(&la()).unwrap()).fold_to_degree(1, small).at("neg.cross.T")?;
    let t52 = ch.rec("neg.cross.T", "n < T log n", &["neg.cross.K", "neg.cross.matveev3"], &t52, Some(3.4e12), Check::Upper, ANALYTIC_TOL);
    let n52a = guzman_luca(1, &t52).at("neg.cross.n")?;
    let n52a = ch.rec("neg.cross.n", "n < 2 T log T", &["neg.cross.T"], &n52a, Some(2e14), Check::Match, ANALYTIC_TOL);
    // 2^x 3^y < α^n + K <= 2 max(α^n, K)
    let xx = n52a.mul(&la()).add(&log_k).add(&l2());
    let a = [xx.div(&l2()).at("neg.cross.lll")?, xx.div(&l3()).at("neg.cross.lll")?, up(&n52a)];
    let cache = lattice_cache(cfg, &a, "neg.cross.lll")?;
    let big_k = fint(BigInt::from(3).pow(k_exp as u32));
    let r = dw_best(&cache, None, &a, &fx("1.5").mul(&big_k), &la()).at("neg.cross.lll")?;
    // K α^{−n} < 1/2 fails only when n <= log(2K)/log α
    let gate = ln(&big_k.mul_int(&2.into())).div(&la()).at("neg.cross.lll")?;
    ch.info("neg.cross.gate", "n <= log(2K)/log alpha when K alpha^-n >= 1/2", &["neg.cross.K"], &gate, Some(1427.0));
    let n52 = max_fx(&fu(r.h_int), &gate);
    let n52 = ch.rec_full("neg.cross.lll", "n <", &["neg.cross.n", "neg.cross.K"], &n52, Some(1557.0), Check::Match, CROSSOVER_TOL, Some(dw_detail(&r)));
    let n52 = to_u64(&n52.floor_lower());
    let b52 = sunit_box(
        &mut ch,
        &cf,
        "neg.cross",
        "neg.cross.lll",
        n52,
        &BoxStated {
            cap_exp: 326.0,
            x_lmn: 43969.0,
            t_b: 294392.0,
            x_gl: 2e8,
            xc: 3e8,
            yc: 1.9e8,
            m_min: 9,
            a_m: 55.0,
            n_q: 20.0,
            xb: 1118.0,
            yb: 706.0,
            xf: 1084.0,
            yf: 684.0,
        },
    )?;

    // n > n1 > 500
    let c51m = matveev3(small).at("neg.matveev3")?;
    let c51m = ch.rec("neg.matveev3", "three logarithms, n > 500", &[], &c51m, Some(1.66e12), Check::Upper, ANALYTIC_TOL);
    let c51 = LogPoly::new(vec![l2(), c51m]).fold_to_degree(1, small).at("neg.gap")?;
    let c51 = ch.rec("neg.gap", "X - X1 < C log n", &["neg.matveev3"], &c51, Some(1.7e12), Check::Upper, ANALYTIC_TOL);
    // (n − n1) log α < log 2.01 + 60 (log n)^2 + C log n
    let k52 = LogPoly::new(vec![ln(&fx("2.01")), c51.clone(), fint(60)]).scale(&fint(1).div(&la()).unwrap()).fold_to_degree(2, small).at("neg.d")?;
    let k52 = ch.rec("neg.d", "n - n1 < k (log n)^2", &["neg.gap"], &k52, Some(8e13), Check::Upper, ANALYTIC_TOL);
    let mut cmin = Vec::new();
    for p in [2u32, 3] {
        let id = format!("neg.padic{}", p);
        let c = padic_min_bound(p, &k52, 2, 60000, 4).at(&id)?;
        let name = if p == 2 { "x_min" } else { "y_min" };
        cmin.push(ch.rec(&id, &format!("{} < C (log n)^4 for n > 60000", name), &["neg.d"], &c, Some(2.4e17), Check::Upper, ANALYTIC_TOL));
    }
    let lead = cmin[0].mul(&l2()).add(&cmin[1].mul(&l3()));
    let lead = ch.rec("neg.X2", "X2 < C (log n)^4", &["neg.padic2", "neg.padic3"], &lead, Some(4.31e17), Check::Upper, ANALYTIC_TOL);
    let poly = LogPoly::new(vec![ln(&fx("0.38")).neg(), c51.mul_int(&2.into()), fint(0), fint(0), lead]).scale(&fint(1).div(&la()).unwrap());
    let t = poly.fold_to_degree(4, 60000).at("neg.T")?;
    let t = ch.rec("neg.T", "n < T (log n)^4", &["neg.X2", "neg.gap"], &t, Some(4.32e17), Check::Upper, ANALYTIC_TOL);
    let n_gl = guzman_luca(4, &t).at("neg.n")?;
    let n_gl = ch.rec("neg.n", "n < 16 T (log T)^4", &["neg.T"], &n_gl, Some(2e25), Check::Match, ANALYTIC_TOL);
    let n_cap = strict_int_bound(&max_fx(&n_gl, &fu(60000)));
    let (_, xhi) = sunit_gap_interval(&n_cap).at("neg.X")?;
    let xhi = ch.rec("neg.X", "X < 2 + n log alpha + 60 (log(n log alpha))^2", &["neg.n"], &xhi, Some(9.7e24), Check::Match, ANALYTIC_TOL);
    let xc = ch.rec("neg.xcap", "x < X / log 2", &["neg.X"], &xhi.div(&l2()).at("neg.xcap")?, Some(1.4e25), Check::Match, ANALYTIC_TOL);
    let yc = ch.rec("neg.ycap", "y < X / log 3", &["neg.X"], &xhi.div(&l3()).at("neg.ycap")?, Some(8.9e24), Check::Match, ANALYTIC_TOL);

    let it1 = NegStated {
        r1: 114.0,
        k1: Some(1.2e27),
        c3: Some(3.6e27),
        m_min: Some(25),
        r2: 375.0,
        val: ValStated { a: [Some(87.0), Some(55.0)], b: [Some(10.0), Some(7.0)], v: [None, None], cap: [Some(98.0), Some(63.0)] },
        fin: FinalStated { x: Some(364.0), n: Some(757.0), xc: Some(526.0), yc: Some(332.0) },
    };
    let caps = Caps { x: xc, y: yc, n: n_cap };
    let (caps, _) = neg_reduce(&mut ch, cfg, &cf, "neg.it1", "neg.n", &caps, &it1)?;
    let it2 = NegStated {
        r1: 12.0,
        k1: None,
        c3: None,
        m_min: None,
        r2: 157.0,
        val: ValStated { a: [None, None], b: [None, None], v: [None, None], cap: [Some(20.0), Some(14.0)] },
        fin: FinalStated { x: Some(54.0), n: Some(113.0), xc: None, yc: None },
    };
    let (_, final_n) = neg_reduce(&mut ch, cfg, &cf, "neg.it2", "neg.it1.final.n", &caps, &it2)?;

    let boxes = vec![
        SearchBox { id: "neg.small".into(), n_min: 0, n_max: small, x_max: b51.x_b as u32 - 1, y_max: b51.y_b as u32 - 1 },
        SearchBox { id: "neg.cross".into(), n_min: small + 1, n_max: n52, x_max: b52.x_b as u32 - 1, y_max: b52.y_b as u32 - 1 },
    ];
    Ok(ch.finish(final_n, small, boxes))
}

// ---------------------------------------------------------------- tables and the full run

pub const EXPECTED_CASE_ZERO: [Rep; 5] = [(0, 1, 0), (1, 0, 0), (2, 0, 1), (3, 2, 0), (6, 1, 2)];

const POSITIVE_TABLE: &str = "\
1 = L_0 - 2^0 3^0 = L_2 - 2^1 3^0 = L_3 - 2^0 3^1 = L_4 - 2^1 3^1
2 = L_2 - 2^0 3^0 = L_3 - 2^1 3^0 = L_5 - 2^0 3^2 = L_6 - 2^4 3^0 = L_7 - 2^0 3^3
3 = L_3 - 2^0 3^0 = L_4 - 2^2 3^0 = L_5 - 2^3 3^0
5 = L_4 - 2^1 3^0 = L_5 - 2^1 3^1 = L_7 - 2^3 3^1
9 = L_5 - 2^1 3^0 = L_6 - 2^0 3^2 = L_13 - 2^9 3^0
15 = L_6 - 2^0 3^1 = L_8 - 2^5 3^0 = L_10 - 2^2 3^3
20 = L_7 - 2^0 3^2 = L_8 - 2^0 3^3 = L_16 - 2^0 3^7
75 = L_9 - 2^0 3^0 = L_10 - 2^4 3^1 = L_14 - 2^8 3^1";

const NEGATIVE_TABLE: &str = "\
-133 = L_5 - 2^4 3^2 = L_7 - 2^1 3^4 = L_10 - 2^8 3^0
-97 = L_5 - 2^2 3^3 = L_8 - 2^4 3^2 = L_16 - 2^8 3^2
-61 = L_2 - 2^6 3^0 = L_5 - 2^3 3^2 = L_8 - 2^2 3^3
-52 = L_0 - 2^1 3^3 = L_7 - 2^0 3^4 = L_9 - 2^7 3^0
-25 = L_0 - 2^0 3^3 = L_4 - 2^5 3^0 = L_5 - 2^2 3^2 = L_7 - 2^1 3^3 = L_8 - 2^3 3^2
-21 = L_2 - 2^3 3^1 = L_5 - 2^5 3^0 = L_10 - 2^4 3^2 = L_14 - 2^5 3^3
-20 = L_3 - 2^3 3^1 = L_4 - 2^0 3^3 = L_9 - 2^5 3^1
-17 = L_1 - 2^1 3^2 = L_4 - 2^3 3^1 = L_8 - 2^6 3^0 = L_11 - 2^3 3^3
-14 = L_0 - 2^4 3^0 = L_3 - 2^1 3^2 = L_6 - 2^5 3^0
-9 = L_2 - 2^2 3^1 = L_4 - 2^4 3^0 = L_6 - 2^0 3^3
-7 = L_0 - 2^0 3^2 = L_1 - 2^3 3^0 = L_5 - 2^1 3^2 = L_7 - 2^2 3^2 = L_8 - 2^1 3^3
-6 = L_0 - 2^3 3^0 = L_2 - 2^0 3^2 = L_6 - 2^3 3^1
-5 = L_1 - 2^1 3^1 = L_2 - 2^3 3^0 = L_3 - 2^0 3^2 = L_4 - 2^2 3^1 = L_5 - 2^4 3^0 = L_9 - 2^0 3^4 = L_10 - 2^7 3^0
-3 = L_1 - 2^2 3^0 = L_2 - 2^1 3^1 = L_7 - 2^5 3^0
-2 = L_0 - 2^2 3^0 = L_1 - 2^0 3^1 = L_3 - 2^1 3^1 = L_4 - 2^0 3^2 = L_12 - 2^2 3^4
-1 = L_0 - 2^0 3^1 = L_1 - 2^1 3^0 = L_2 - 2^2 3^0 = L_4 - 2^3 3^0 = L_5 - 2^2 3^1 = L_8 - 2^4 3^1";

fn parse_table(text: &str) -> Vec<RepRecord> {
    let mut out: Vec<RepRecord> = text
        .lines()
        .map(|line| {
            let mut parts = line.split(" = ");
            let c: BigInt = parts.next().unwrap().parse().unwrap();
            let mut reps: Vec<Rep> = parts
                .map(|p| {
                    let nums: Vec<u64> = p
                        .split(|ch: char| !ch.is_ascii_digit())
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse().unwrap())
                        .collect();
                    // "L_n - 2^x 3^y" yields [n, 2, x, 3, y]
                    (nums[0], nums[2] as u32, nums[4] as u32)
                })
                .collect();
            reps.sort();
            RepRecord { c, reps }
        })
        .collect();
    out.sort_by(|a, b| a.c.cmp(&b.c));
    out
}

/// Reference list of c > 0 with at least three representations.
pub fn expected_positive() -> Vec<RepRecord> {
    parse_table(POSITIVE_TABLE)
}

/// Reference list of c < 0 with at least three representations.
pub fn expected_negative() -> Vec<RepRecord> {
    parse_table(NEGATIVE_TABLE)
}

#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct TableDiff {
    pub missing: Vec<String>,
    pub extra: Vec<String>,
}

impl TableDiff {
    pub fn is_empty(&self) -> bool {
        self.missing.is_empty() && self.extra.is_empty()
    }
}

pub fn diff_tables(found: &[RepRecord], expected: &[RepRecord]) -> TableDiff {
    let f: Vec<String> = found.iter().map(display_line).collect();
    let e: Vec<String> = expected.iter().map(display_line).collect();
    TableDiff {
        missing: e.iter().filter(|l| !f.contains(l)).cloned().collect(),
        extra: f.iter().filter(|l| !e.contains(l)).cloned().collect(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseZeroReport {
    pub n_max: u64,
    pub solutions: Vec<Rep>,
    pub matches: bool,
}

pub fn case_zero(cfg: &Config) -> CaseZeroReport {
    let solutions = pure_power_solutions(cfg.case_zero_n_max);
    let matches = solutions == EXPECTED_CASE_ZERO;
    CaseZeroReport { n_max: cfg.case_zero_n_max, solutions, matches }
}

#[derive(Clone, Debug, Serialize)]
pub struct TableReport {
    pub sign: Sign,
    pub n_max: u64,
    pub x_max: u32,
    pub y_max: u32,
    pub found: Vec<RepRecord>,
    pub diff: TableDiff,
}

pub fn positive_table(cfg: &Config) -> TableReport {
    let (x, y) = cfg.positive_box();
    let found = multi_rep_search(cfg.pos_n_max, x, y, cfg.k_min, Sign::Pos, &cfg.search_options());
    let diff = diff_tables(&found, &expected_positive());
    TableReport { sign: Sign::Pos, n_max: cfg.pos_n_max, x_max: x, y_max: y, found, diff }
}

pub fn negative_table(cfg: &Config) -> TableReport {
    let found = multi_rep_search(cfg.neg_n_max, cfg.neg_x_max, cfg.neg_y_max, cfg.k_min, Sign::Neg, &cfg.search_options());
    let diff = diff_tables(&found, &expected_negative());
    TableReport { sign: Sign::Neg, n_max: cfg.neg_n_max, x_max: cfg.neg_x_max, y_max: cfg.neg_y_max, found, diff }
}

/// c < 0 with k_min representations where some n exceeds 500 and some n1 <= 500.
#[derive(Clone, Debug, Serialize)]
pub struct CrossoverReport {
    pub small: SearchBox,
    pub cross: SearchBox,
    pub candidates: usize,
    pub found: Vec<RepRecord>,
}

pub fn crossover(cfg: &Config, small: &SearchBox, cross: &SearchBox) -> CrossoverReport {
    // any c with a pair in the small range appears with >= 2 representations there
    let cands = multi_rep_search(small.n_max, small.x_max, small.y_max, 2, Sign::Neg, &cfg.search_options());
    let found = crossover_search(&cands, cross.n_min..=cross.n_max, cross.x_max, cross.y_max, cfg.k_min);
    CrossoverReport { small: small.clone(), cross: cross.clone(), candidates: cands.len(), found }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainOutcome {
    pub report: Option<BoundChainReport>,
    pub error: Option<String>,
    pub exit_code: i32,
}

impl ChainOutcome {
    fn from(r: Result<BoundChainReport, PipelineError>) -> Self {
        match r {
            Ok(rep) => {
                let code = if rep.contradiction { 0 } else { 1 };
                ChainOutcome { report: Some(rep), error: None, exit_code: code }
            }
            Err(e) => ChainOutcome { report: None, error: Some(e.to_string()), exit_code: e.exit_code() },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub config: Config,
    pub case_zero: CaseZeroReport,
    pub positive_chain: ChainOutcome,
    pub negative_chain: ChainOutcome,
    pub positive_table: TableReport,
    pub negative_table: TableReport,
    /// Whether the configured negative search box contains the proven one.
    pub negative_box_covered: Option<bool>,
    pub crossover: Option<CrossoverReport>,
    pub exit_code: i32,
}

/// Exit status: 3 on a precision failure, else 1 on a chain failure, else 2 on a
/// table mismatch, else 0.
pub fn run_all(cfg: &Config) -> RunReport {
    let case_zero = case_zero(cfg);
    let positive_chain = ChainOutcome::from(chain_positive(cfg));
    let negative_chain = ChainOutcome::from(chain_negative(cfg));
    let positive_table = positive_table(cfg);
    let negative_table = negative_table(cfg);
    let boxes = negative_chain.report.as_ref().map(|r| (r.boxes[0].clone(), r.boxes[1].clone()));
    let negative_box_covered = boxes.as_ref().map(|(s, _)| s.x_max <= cfg.neg_x_max && s.y_max <= cfg.neg_y_max && s.n_max <= cfg.neg_n_max);
    let crossover = boxes.map(|(s, c)| crossover(cfg, &s, &c));

    let codes = [positive_chain.exit_code, negative_chain.exit_code];
    let chain_failed = codes.iter().any(|&c| c != 0)
        || negative_box_covered == Some(false)
        || crossover.as_ref().map_or(false, |c| !c.found.is_empty());
    let exit_code = if codes.contains(&3) {
        3
    } else if chain_failed {
        1
    } else if !case_zero.matches || !positive_table.diff.is_empty() || !negative_table.diff.is_empty() {
        2
    } else {
        0
    };
    RunReport { config: cfg.clone(), case_zero, positive_chain, negative_chain, positive_table, negative_table, negative_box_covered, crossover, exit_code }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_roundtrip() {
        let cfg = Config::parse("# comment\nprecision_digits = 80\nthreads = 2 # inline\npos_x_max = auto\n").unwrap();
        assert_eq!(cfg.precision_digits, 80);
        assert_eq!(cfg.threads, Some(2));
        assert_eq!(cfg.pos_x_max, None);
        assert!(Config::parse("bogus = 1").is_err());
        assert!(Config::parse("passes = 0").is_err());
        let mut c = Config::default();
        c.apply(&["k_min=4".into()]).unwrap();
        assert_eq!(c.k_min, 4);
    }

    #[test]
    fn envelope_small() {
        // L_10 = 123
        assert_eq!(exponent_envelope(10), (6, 4));
        let (x, y) = exponent_envelope(1500);
        assert_eq!((x, y), (1041, 657));
    }

    #[test]
    fn tables_parse() {
        let pos = expected_positive();
        assert_eq!(pos.len(), 8);
        assert_eq!(pos.iter().map(|r| r.reps.len()).sum::<usize>(), 27);
        let neg = expected_negative();
        assert_eq!(neg.len(), 16);
        for r in pos.iter().chain(&neg) {
            for &(n, x, y) in &r.reps {
                assert!(crate::search::verify_representation(&r.c, n, x, y), "{} {:?}", r.c, (n, x, y));
            }
        }
        assert!(diff_tables(&pos, &pos).is_empty());
        let d = diff_tables(&pos[1..], &pos);
        assert_eq!(d.missing.len(), 1);
    }

    #[test]
    fn matveev_three_term() {
        let c = matveev3(1500).unwrap().to_f64();
        assert!((c / 1.6158e12 - 1.0).abs() < 1e-3, "{}", c);
    }

    #[test]
    fn stage_checks() {
        let mut ch = Chain::new("t");
        let u = ch.rec("a", "", &[], &fint(103), Some(100.0), Check::Match, 0.02);
        assert!(!ch.stages[0].within.unwrap());
        assert_eq!(u.to_f64(), 103.0);
        let u = ch.rec("b", "", &[], &fint(90), Some(100.0), Check::Upper, 0.02);
        assert!(ch.stages[1].within.unwrap());
        assert_eq!(u.to_f64(), 100.0);
        ch.info("c", "", &[], &fint(5), Some(1.0));
        assert_eq!(ch.stages[2].within, None);
    }

    #[test]
    fn low_precision_maps_to_exit_three() {
        let mut cfg = Config::default();
        cfg.precision_digits = 20;
        let e = chain_positive(&cfg).unwrap_err();
        assert_eq!(e.exit_code(), 3, "{}", e);
    }
}
