//! p-adic valuations and p-adic analysis over Z[ω] for p ∈ {2, 3}.
//!
//! Both primes are inert in Z[ω], so ν_p(a + bω) = min(ν_p(a), ν_p(b)) and an
//! element is a unit iff p does not divide both coordinates.

use std::ops::Range;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::quadring::{alpha_pow, alpha_pow_signed, lucas_mod, lucas_period, QuadInt};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PadicError {
    #[error("unsupported prime {0}")]
    UnsupportedPrime(u32),
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("argument outside the convergence domain")]
    Domain,
    #[error("no n in one period with p^{threshold} | L(n+{d}) - L(n)")]
    NoException { d: u64, threshold: u32 },
    #[error("precision exhausted while lifting (p={p}, d={d}, n0={n0})")]
    Precision { p: u32, d: u64, n0: u64 },
    #[error("branch count exceeded {0}")]
    BranchLimit(usize),
}

/// A p-adic valuation, possibly infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Val {
    Fin(i64),
    Inf,
}

impl Val {
    pub fn finite(self) -> Option<i64> {
        match self {
            Val::Fin(v) => Some(v),
            Val::Inf => None,
        }
    }
}

fn check_prime(p: u32) -> Result<(), PadicError> {
    if p == 2 || p == 3 {
        Ok(())
    } else {
        Err(PadicError::UnsupportedPrime(p))
    }
}

/// ν_p of a non-zero integer; `Inf` for zero.
pub fn nu_big(x: &BigInt, p: u32) -> Val {
    if x.is_zero() {
        return Val::Inf;
    }
    if p == 2 {
        return Val::Fin(x.trailing_zeros().unwrap() as i64);
    }
    let pb = BigInt::from(p);
    let mut v = 0;
    let mut y = x.clone();
    loop {
        let (q, r) = y.div_rem(&pb);
        if !r.is_zero() {
            return Val::Fin(v);
        }
        v += 1;
        y = q;
    }
}

pub fn nu_u64(x: u64, p: u64) -> u32 {
    assert!(x != 0);
    let mut v = 0;
    let mut y = x;
    while y % p == 0 {
        y /= p;
        v += 1;
    }
    v
}

/// ν_p(num/den).
pub fn nu_int(num: &BigInt, den: &BigInt, p: u32) -> Result<Val, PadicError> {
    if den.is_zero() {
        return Err(PadicError::ZeroDenominator);
    }
    match (nu_big(num, p), nu_big(den, p)) {
        (Val::Inf, _) => Ok(Val::Inf),
        (Val::Fin(a), Val::Fin(b)) => Ok(Val::Fin(a - b)),
        (Val::Fin(_), Val::Inf) => unreachable!(),
    }
}

/// ν_p(ξ) = ν_p(N(ξ))/2 for p inert.
pub fn nu_quad(xi: &QuadInt, p: u32) -> Result<Val, PadicError> {
    check_prime(p)?;
    Ok(match nu_big(&xi.norm(), p) {
        Val::Inf => Val::Inf,
        Val::Fin(v) => {
            debug_assert!(v % 2 == 0);
            Val::Fin(v / 2)
        }
    })
}

/// Closed form for ν_p(α^x + sign).
pub fn nu_alpha_shift(x: u64, sign: i8, p: u32) -> Result<Val, PadicError> {
    check_prime(p)?;
    assert!(sign == 1 || sign == -1);
    let one_plus = |q: u64| if x == 0 { Val::Inf } else { Val::Fin(1 + nu_u64(x, q) as i64) };
    Ok(match (p, sign) {
        (2, -1) => {
            if x % 3 == 0 {
                one_plus(2)
            } else {
                Val::Fin(0)
            }
        }
        (2, _) => Val::Fin(if x % 3 == 0 { 1 } else { 0 }),
        (3, -1) => {
            if x % 8 == 0 {
                one_plus(3)
            } else {
                Val::Fin(0)
            }
        }
        (_, _) => {
            if x % 8 == 4 {
                Val::Fin(1 + nu_u64(x, 3) as i64)
            } else {
                Val::Fin(0)
            }
        }
    })
}

/// Residue of a + bω modulo p^k.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadicQuad {
    pub p: u32,
    pub k: u32,
    pub a: BigInt,
    pub b: BigInt,
}

impl PadicQuad {
    pub fn modulus(p: u32, k: u32) -> BigInt {
        num_traits::pow(BigInt::from(p), k as usize)
    }

    pub fn new(p: u32, k: u32, a: BigInt, b: BigInt) -> Self {
        let m = Self::modulus(p, k);
        PadicQuad { p, k, a: a.mod_floor(&m), b: b.mod_floor(&m) }
    }

    pub fn from_quad(x: &QuadInt, p: u32, k: u32) -> Self {
        Self::new(p, k, x.a.clone(), x.b.clone())
    }

    pub fn from_int(x: impl Into<BigInt>, p: u32, k: u32) -> Self {
        Self::new(p, k, x.into(), BigInt::zero())
    }

    pub fn zero(p: u32, k: u32) -> Self {
        Self::from_int(0, p, k)
    }

    pub fn one(p: u32, k: u32) -> Self {
        Self::from_int(1, p, k)
    }

    pub fn add(&self, o: &Self) -> Self {
        debug_assert!(self.p == o.p && self.k == o.k);
        Self::new(self.p, self.k, &self.a + &o.a, &self.b + &o.b)
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(self.p, self.k, &self.a - &o.a, &self.b - &o.b)
    }

    pub fn neg(&self) -> Self {
        Self::new(self.p, self.k, -&self.a, -&self.b)
    }

    pub fn mul(&self, o: &Self) -> Self {
        let bd = &self.b * &o.b;
        Self::new(self.p, self.k, &self.a * &o.a + &bd, &self.a * &o.b + &self.b * &o.a + bd)
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        Self::new(self.p, self.k, &self.a * c, &self.b * c)
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.p, self.k);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    pub fn conj(&self) -> Self {
        Self::new(self.p, self.k, &self.a + &self.b, -&self.b)
    }

    /// ν_p of the residue, reported as `Inf` when it vanishes mod p^k.
    pub fn valuation(&self) -> Val {
        match (nu_big(&self.a, self.p), nu_big(&self.b, self.p)) {
            (Val::Inf, Val::Inf) => Val::Inf,
            (x, y) => x.min(y),
        }
    }

    pub fn is_unit(&self) -> bool {
        self.valuation() == Val::Fin(0)
    }

    /// Lowers the precision to p^k (k <= self.k).
    pub fn reduce(&self, k: u32) -> Self {
        assert!(k <= self.k);
        Self::new(self.p, k, self.a.clone(), self.b.clone())
    }

    /// Divides by the integer n: exact division by p^ν(n) (precision drops by ν(n)),
    /// then multiplication by the inverse of the unit part.
    pub fn div_int(&self, n: &BigInt) -> Self {
        let v = match nu_big(n, self.p) {
            Val::Fin(v) => v as u32,
            Val::Inf => panic!("division by zero"),
        };
        let pv = Self::modulus(self.p, v);
        let (a, ra) = self.a.div_rem(&pv);
        let (b, rb) = self.b.div_rem(&pv);
        assert!(ra.is_zero() && rb.is_zero(), "inexact p-adic division");
        let k = self.k - v;
        let m = Self::modulus(self.p, k);
        let unit = (n / &pv).mod_floor(&m);
        let inv = mod_inverse(&unit, &m);
        Self::new(self.p, k, a * &inv, b * &inv)
    }
}

pub fn mod_inverse(a: &BigInt, m: &BigInt) -> BigInt {
    let g = a.extended_gcd(m);
    assert!(g.gcd.is_one(), "not invertible");
    g.x.mod_floor(m)
}

/// Smallest N with i·v − ν_p(i) >= target for every i > N.
pub fn log_truncation(p: u32, v: u32, target: u32) -> u64 {
    assert!(v >= 1);
    let pf = p as f64;
    // ν_p(i) <= log_p(i): find a start of the region where i·v − log_p(i) >= target
    let mut i0: u64 = 1;
    while (i0 as f64) * v as f64 - (i0 as f64).ln() / pf.ln() < target as f64 + 1e-9 {
        i0 += 1;
    }
    (1..i0).filter(|&i| i * v as u64 - (nu_u64(i, p as u64) as u64) < target as u64).max().unwrap_or(0)
}

/// ν_p(k!) via Legendre's formula.
pub fn nu_factorial(k: u64, p: u64) -> u64 {
    let mut s = 0;
    let mut q = p;
    while q <= k {
        s += k / q;
        q = q.saturating_mul(p);
    }
    s
}

/// Smallest N with k·w − ν_p(k!) >= target for every k > N.
pub fn exp_truncation(p: u32, w: u32, target: u32) -> u64 {
    let p = p as u64;
    // ν_p(k!) <= (k−1)/(p−1), so k·w − (k−1)/(p−1) >= target bounds the region
    let slope = w as f64 - 1.0 / (p as f64 - 1.0);
    assert!(slope > 0.0, "exponential does not converge");
    let k0 = ((target as f64 - 1.0 / (p as f64 - 1.0)) / slope).ceil().max(1.0) as u64 + 1;
    (1..k0).filter(|&k| k * w as u64 - nu_factorial(k, p) < target as u64).max().unwrap_or(0)
}

const GUARD: u32 = 40;

/// log_p ξ = −Σ (1−ξ)^i / i, truncated so the tail vanishes mod p^k.
pub fn padic_log(xi: &PadicQuad, k: u32) -> Result<PadicQuad, PadicError> {
    let p = xi.p;
    check_prime(p)?;
    let w = k + GUARD;
    let x = if xi.k >= w { xi.reduce(w) } else { PadicQuad::new(p, w, xi.a.clone(), xi.b.clone()) };
    let one = PadicQuad::one(p, w);
    let t = one.sub(&x);
    let v = match t.valuation() {
        Val::Inf => return Ok(PadicQuad::zero(p, k)),
        Val::Fin(0) => return Err(PadicError::Domain),
        Val::Fin(v) => v as u32,
    };
    let n = log_truncation(p, v, k);
    let mut pw = PadicQuad::one(p, w);
    let mut sum = PadicQuad::zero(p, k);
    for i in 1..=n {
        pw = pw.mul(&t);
        let term = pw.div_int(&BigInt::from(i));
        sum = sum.sub(&term.reduce(k));
    }
    Ok(sum)
}

/// exp_p y = Σ y^j / j!, truncated so the tail vanishes mod p^k.
pub fn padic_exp(y: &PadicQuad, k: u32) -> Result<PadicQuad, PadicError> {
    let p = y.p;
    check_prime(p)?;
    let v = match y.valuation() {
        Val::Inf => return Ok(PadicQuad::one(p, k)),
        Val::Fin(v) => v as u32,
    };
    let need = if p == 2 { 2 } else { 1 };
    if v < need {
        return Err(PadicError::Domain);
    }
    let n = exp_truncation(p, v, k);
    // dividing by j! costs ν_p(j!) digits
    let w = k + nu_factorial(n, p as u64) as u32 + 1;
    let yy = if y.k >= w { y.reduce(w) } else { PadicQuad::new(p, w, y.a.clone(), y.b.clone()) };
    let mut pw = PadicQuad::one(p, w);
    let mut fact = BigInt::one();
    let mut sum = PadicQuad::one(p, k);
    for j in 1..=n {
        pw = pw.mul(&yy);
        fact *= j;
        sum = sum.add(&pw.div_int(&fact).reduce(k));
    }
    Ok(sum)
}

/// Period of L_n modulo p^threshold.
pub fn screen_period(p: u32, threshold: u32) -> Result<u64, PadicError> {
    assert!(threshold >= 1);
    lucas_period(p, threshold - 1).map_err(|e| PadicError::UnsupportedPrime(e.0))
}

fn lucas_residues(p: u32, threshold: u32, len: u64) -> Vec<u64> {
    let m = (p as u64).pow(threshold);
    let mut v = Vec::with_capacity(len as usize);
    v.push(2 % m);
    v.push(1 % m);
    for i in 2..len as usize {
        v.push((v[i - 1] + v[i - 2]) % m);
    }
    v
}

/// Odd d in `d_range` for which p^threshold | L_{n+d} − L_n for some n in one period.
pub fn screen_d(p: u32, d_range: Range<u64>, threshold: u32) -> Result<Vec<u64>, PadicError> {
    let period = screen_period(p, threshold)?;
    if d_range.is_empty() {
        return Ok(vec![]);
    }
    let res = lucas_residues(p, threshold, period + d_range.end + 1);
    Ok(d_range.filter(|d| d % 2 == 1).filter(|&d| (0..period).any(|n| res[(n + d) as usize] == res[n as usize])).collect())
}

/// All n in [0, period) with p^threshold | L_{n+d} − L_n.
pub fn exception_residues(p: u32, d: u64, threshold: u32) -> Result<Vec<u64>, PadicError> {
    let period = screen_period(p, threshold)?;
    let res = lucas_residues(p, threshold, period + d + 1);
    Ok((0..period).filter(|&n| res[(n + d) as usize] == res[n as usize]).collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FirstException {
    pub first: u64,
    pub all: Vec<u64>,
    pub unique: bool,
}

/// Minimal n in [1, period] with p^threshold | L_{n+d} − L_n, plus every such n.
pub fn first_exception(p: u32, d: u64, threshold: u32) -> Result<FirstException, PadicError> {
    let period = screen_period(p, threshold)?;
    let mut all: Vec<u64> = exception_residues(p, d, threshold)?.into_iter().map(|n| if n == 0 { period } else { n }).collect();
    all.sort_unstable();
    match all.first() {
        None => Err(PadicError::NoException { d, threshold }),
        Some(&first) => Ok(FirstException { first, unique: all.len() == 1, all }),
    }
}

/// Order of α modulo p: α^e ≡ 1 (mod p).
fn alpha_order(p: u32) -> u64 {
    if p == 2 {
        3
    } else {
        8
    }
}

/// The lifting polynomial f(z) ≡ L_{n0+d+period·z} − L_{n0+period·z} (mod p^k).
#[derive(Clone, Debug)]
pub struct LiftPoly {
    pub p: u32,
    pub k: u32,
    pub d: u64,
    pub n0: u64,
    pub period: u64,
    /// Coefficients of z^j, reduced mod p^k.
    pub coeffs: Vec<BigInt>,
    pub log_terms: u64,
    pub exp_terms: u64,
}

/// P = log_p(α^e) and Q = log_p(β^e), with their truncation lengths.
pub struct LogPair {
    pub p: u32,
    pub step: u32,
    pub k: u32,
    pub pp: PadicQuad,
    pub qq: PadicQuad,
    pub log_terms: u64,
    pub exp_terms: u64,
}

pub fn log_pair(p: u32, threshold: u32, k: u32) -> Result<LogPair, PadicError> {
    check_prime(p)?;
    let step = threshold - 1;
    let w = k + GUARD;
    let e = alpha_order(p);
    let xi = PadicQuad::from_quad(&alpha_pow(e), p, w);
    let xb = xi.conj();
    let v = match PadicQuad::one(p, w).sub(&xi).valuation() {
        Val::Fin(v) if v >= 1 => v as u32,
        _ => return Err(PadicError::Domain),
    };
    // tail of the log must vanish after multiplication by p^step
    let log_terms = log_truncation(p, v, k - step);
    let pp = padic_log(&xi, w)?;
    let qq = padic_log(&xb, w)?;
    let vp = match pp.valuation() {
        Val::Fin(x) => x as u32,
        Val::Inf => return Err(PadicError::Domain),
    };
    let exp_terms = exp_truncation(p, step + vp, k);
    Ok(LogPair { p, step, k, pp, qq, log_terms, exp_terms })
}

/// Builds f via u_k = c_α P^k + c_β Q^k, computed from u_{k+2} = A u_{k+1} − B u_k.
pub fn lift_poly(lp: &LogPair, d: u64, n0: u64, period: u64) -> LiftPoly {
    let (p, k) = (lp.p, lp.k);
    let w = k + GUARD;
    let ca = PadicQuad::from_quad(&(&(&alpha_pow(d) - &QuadInt::one()) * &alpha_pow(n0)), p, w);
    let cb = ca.conj();
    let aa = lp.pp.add(&lp.qq);
    let bb = lp.pp.mul(&lp.qq);
    let n = lp.exp_terms as usize;
    let mut u = vec![ca.add(&cb), ca.mul(&lp.pp).add(&cb.mul(&lp.qq))];
    while u.len() < n + 1 {
        let l = u.len();
        u.push(aa.mul(&u[l - 1]).sub(&bb.mul(&u[l - 2])));
    }
    u.truncate(n + 1);
    let mk = PadicQuad::modulus(p, k);
    let pstep = BigInt::from(p).pow(lp.step);
    let mut coeffs = Vec::with_capacity(n + 1);
    let mut pk = BigInt::one();
    let mut fact = BigInt::one();
    for (j, uj) in u.iter().enumerate() {
        if j > 0 {
            fact *= j;
            pk *= &pstep;
        }
        let t = uj.scale(&pk).div_int(&fact).reduce(k);
        debug_assert!(t.b.mod_floor(&mk).is_zero(), "u_k must be rational");
        coeffs.push(t.a.mod_floor(&mk));
    }
    LiftPoly { p, k, d, n0, period, coeffs, log_terms: lp.log_terms, exp_terms: lp.exp_terms }
}

fn binom_row(n: usize) -> Vec<Vec<BigInt>> {
    let mut c = vec![vec![BigInt::one()]];
    for i in 1..=n {
        let mut row = vec![BigInt::one(); i + 1];
        for j in 1..i {
            row[j] = &c[i - 1][j - 1] + &c[i - 1][j];
        }
        c.push(row);
    }
    c
}

impl LiftPoly {
    pub fn eval(&self, z: &BigInt) -> BigInt {
        let m = PadicQuad::modulus(self.p, self.k);
        let mut r = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            r = (r * z + c).mod_floor(&m);
        }
        r
    }

    /// Coefficients h_i with f(r + p^m t) ≡ Σ h_i t^i (mod p^modexp).
    pub fn class_poly(&self, r: &BigInt, m: u32, modexp: u32) -> Vec<BigInt> {
        let md = PadicQuad::modulus(self.p, modexp.min(self.k));
        let n = self.coeffs.len();
        let c = binom_row(n);
        let pm = BigInt::from(self.p).pow(m);
        let mut out = Vec::with_capacity(n);
        let mut pmi = BigInt::one();
        for i in 0..n {
            let mut s = BigInt::zero();
            let mut rp = BigInt::one();
            for kk in i..n {
                s += &self.coeffs[kk] * &c[kk][i] * &rp;
                rp = (&rp * r).mod_floor(&md);
            }
            out.push((s * &pmi).mod_floor(&md));
            pmi *= &pm;
        }
        out
    }
}

fn val_capped(x: &BigInt, p: u32, cap: u32) -> u32 {
    match nu_big(x, p) {
        Val::Inf => cap,
        Val::Fin(v) => (v as u32).min(cap),
    }
}

/// h'_j for the child class t = δ + p t': h'_j = p^j Σ_{i>=j} C(i,j) δ^{i−j} h_i.
fn child_poly(h: &[BigInt], delta: u32, p: u32, modulus: &BigInt, binom: &[Vec<BigInt>]) -> Vec<BigInt> {
    let n = h.len();
    let mut out = Vec::with_capacity(n);
    let pb = BigInt::from(p);
    let mut pj = BigInt::one();
    for j in 0..n {
        let mut s = BigInt::zero();
        let mut dp = BigInt::one();
        for i in j..n {
            if !h[i].is_zero() {
                s += &h[i] * &binom[i][j] * &dp;
            }
            dp *= delta;
        }
        out.push((s * &pj).mod_floor(modulus));
        pj *= &pb;
    }
    while out.len() > 1 && out.last().unwrap().is_zero() {
        out.pop();
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidueReport {
    pub n0: u64,
    /// Largest valuation forced on a class reachable with n <= n_cap.
    pub best: Option<u32>,
    /// Class z ≡ best_r (mod p^best_m) realizing `best`.
    pub best_r: String,
    pub best_m: u32,
    pub resolved: usize,
    pub pruned: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct HenselReport {
    pub p: u32,
    pub d: u64,
    pub threshold: u32,
    pub n_cap: String,
    pub residues: Vec<ResidueReport>,
    /// ν_p(L_{n+d} − L_n) < v_bound for all 0 <= n <= n_cap.
    pub v_bound: u32,
    pub exceeds: bool,
    pub nodes: usize,
}

#[derive(Clone, Debug)]
pub struct HenselOptions {
    pub threshold: u32,
    pub precision: u32,
    pub branch_limit: usize,
}

impl Default for HenselOptions {
    fn default() -> Self {
        HenselOptions { threshold: 8, precision: 128, branch_limit: 200_000 }
    }
}

/// Branch-and-bound over classes z mod p^m for one residue n0.
pub fn lift_residue(poly: &LiftPoly, n_cap: &BigInt, branch_limit: usize) -> Result<(ResidueReport, usize), PadicError> {
    let p = poly.p;
    let k = poly.k;
    let modulus = PadicQuad::modulus(p, k);
    let z_cap = if *n_cap < BigInt::from(poly.n0) { BigInt::from(-1) } else { (n_cap - poly.n0) / poly.period };
    let binom = binom_row(poly.coeffs.len());
    let mut report = ResidueReport { n0: poly.n0, best: None, best_r: String::new(), best_m: 0, resolved: 0, pruned: 0 };
    if z_cap.is_negative() {
        return Ok((report, 0));
    }
    let mut stack: Vec<(BigInt, u32, Vec<BigInt>)> = vec![(BigInt::zero(), 0, poly.coeffs.clone())];
    let mut nodes = 0usize;
    let pm_cache: Vec<BigInt> = (0..=k).map(|m| BigInt::from(p).pow(m)).collect();
    while let Some((r, m, h)) = stack.pop() {
        nodes += 1;
        if nodes > branch_limit {
            return Err(PadicError::BranchLimit(branch_limit));
        }
        if r > z_cap {
            report.pruned += 1;
            continue;
        }
        let v0 = val_capped(&h[0], p, k);
        let gb = h.iter().skip(1).map(|c| val_capped(c, p, k)).min().unwrap_or(k);
        if v0 < gb {
            if v0 >= k {
                return Err(PadicError::Precision { p, d: poly.d, n0: poly.n0 });
            }
            report.resolved += 1;
            if report.best.map_or(true, |b| v0 > b) {
                report.best = Some(v0);
                report.best_r = r.to_string();
                report.best_m = m;
            }
            continue;
        }
        if m >= k {
            return Err(PadicError::Precision { p, d: poly.d, n0: poly.n0 });
        }
        for delta in (0..p).rev() {
            let child = child_poly(&h, delta, p, &modulus, &binom);
            stack.push((&r + &pm_cache[m as usize] * delta, m + 1, child));
        }
    }
    Ok((report, nodes))
}

/// Follows the digits of z down the branch tree to the class where the
/// valuation is forced. Returns (m, v): every z' ≡ z (mod p^m) has ν_p f(z') = v.
pub fn forced_valuation(poly: &LiftPoly, z: &BigInt) -> Result<(u32, u32), PadicError> {
    let (p, k) = (poly.p, poly.k);
    let modulus = PadicQuad::modulus(p, k);
    let binom = binom_row(poly.coeffs.len());
    let pb = BigInt::from(p);
    let mut rest = z.clone();
    let mut h = poly.coeffs.clone();
    for m in 0..k {
        let v0 = val_capped(&h[0], p, k);
        let gb = h.iter().skip(1).map(|c| val_capped(c, p, k)).min().unwrap_or(k);
        if v0 < gb {
            if v0 >= k {
                break;
            }
            return Ok((m, v0));
        }
        let (q, r) = rest.div_mod_floor(&pb);
        h = child_poly(&h, r.to_u32().unwrap(), p, &modulus, &binom);
        rest = q;
    }
    Err(PadicError::Precision { p, d: poly.d, n0: poly.n0 })
}

/// Bound V with ν_p(L_{n+d} − L_n) < V for every 0 <= n <= n_cap.
pub fn hensel_valuation_bound(p: u32, d: u64, n_cap: &BigInt, opts: &HenselOptions) -> Result<HenselReport, PadicError> {
    let lp = log_pair(p, opts.threshold, opts.precision)?;
    hensel_with_logs(&lp, d, n_cap, opts)
}

pub fn hensel_with_logs(lp: &LogPair, d: u64, n_cap: &BigInt, opts: &HenselOptions) -> Result<HenselReport, PadicError> {
    let p = lp.p;
    let period = screen_period(p, opts.threshold)?;
    debug_assert_eq!(period, alpha_order(p) * (p as u64).pow(lp.step));
    let residues = exception_residues(p, d, opts.threshold)?;
    let mut reports = Vec::new();
    let mut nodes = 0;
    let mut v_bound = opts.threshold;
    let mut exceeds = false;
    for n0 in residues {
        let poly = lift_poly(lp, d, n0, period);
        let (rep, nn) = lift_residue(&poly, n_cap, opts.branch_limit)?;
        nodes += nn;
        if let Some(b) = rep.best {
            v_bound = v_bound.max(b + 1);
        }
        exceeds |= rep.pruned > 0;
        reports.push(rep);
    }
    Ok(HenselReport { p, d, threshold: opts.threshold, n_cap: n_cap.to_string(), residues: reports, v_bound, exceeds, nodes })
}

/// Hensel reports for every screened odd d in `d_range`, in increasing d.
pub fn hensel_table(p: u32, d_range: Range<u64>, n_cap: &BigInt, opts: &HenselOptions) -> Result<Vec<HenselReport>, PadicError> {
    let ds = screen_d(p, d_range, opts.threshold)?;
    let lp = log_pair(p, opts.threshold, opts.precision)?;
    ds.par_iter().map(|&d| hensel_with_logs(&lp, d, n_cap, opts)).collect()
}

/// Writes the class polynomial f(r + p^m t) mod p^modexp as p^e (c0 + c1 t), dropping t² and higher.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResidueShape {
    pub exponent: u32,
    pub c0: BigInt,
    pub c1: BigInt,
    pub modexp: u32,
}

pub fn residue_shape(poly: &LiftPoly, r: &BigInt, m: u32, modexp: u32) -> ResidueShape {
    let h = poly.class_poly(r, m, modexp);
    let p = poly.p;
    let e = h.iter().take(2).map(|c| val_capped(c, p, modexp)).min().unwrap_or(modexp);
    let pe = BigInt::from(p).pow(e);
    let md = BigInt::from(p).pow(modexp - e);
    let c0 = (&h[0] / &pe).mod_floor(&md);
    let c1 = h.get(1).map(|c| (c / &pe).mod_floor(&md)).unwrap_or_default();
    ResidueShape { exponent: e, c0, c1, modexp }
}

/// Exact ν_p(L_{n+d} − L_n) for small n, by residues mod p^cap.
pub fn nu_lucas_gap(p: u32, n: u64, d: u64, cap: u32) -> u32 {
    let m = PadicQuad::modulus(p, cap);
    let diff = (lucas_mod(n + d, &m) - lucas_mod(n, &m)).mod_floor(&m);
    val_capped(&diff, p, cap)
}

/// τ(t) = ±α^e when α and τ(t) = (α^t − 1)/(β^t − 1) are multiplicatively dependent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DependenceWitness {
    pub sign: i8,
    pub alpha_exp: i64,
}

/// Decides dependence exactly: α is a fundamental unit, so dependence holds iff
/// τ(t) is a unit of Z[ω], i.e. (β^t − 1) divides (α^t − 1).
pub fn mult_dependent(t: u64) -> (bool, Option<DependenceWitness>) {
    assert!(t >= 1);
    let num = &alpha_pow(t) - &QuadInt::one();
    let den = num.conj();
    let tau = match num.div_exact(&den) {
        None => return (false, None),
        Some(q) => q,
    };
    // τ is a unit; find ±α^e (|e| <= t + 2 suffices since |τ| = α^t/|β^t − 1|·(1 − α^-t))
    let bound = t as i64 + 4;
    for e in -bound..=bound {
        let ae = alpha_pow_signed(e);
        if ae == tau {
            return (true, Some(DependenceWitness { sign: 1, alpha_exp: e }));
        }
        if -ae.clone() == tau {
            return (true, Some(DependenceWitness { sign: -1, alpha_exp: e }));
        }
    }
    unreachable!("unit of Z[omega] that is not ±alpha^e")
}

/// Checks a witness: (α^t − 1) = sign·α^e·(β^t − 1) exactly.
pub fn verify_witness(t: u64, w: &DependenceWitness) -> bool {
    let num = &alpha_pow(t) - &QuadInt::one();
    let den = num.conj();
    let mut rhs = &alpha_pow_signed(w.alpha_exp) * &den;
    if w.sign < 0 {
        rhs = -rhs;
    }
    rhs == num
}

pub fn to_u32(v: &BigInt) -> u32 {
    v.to_u32().expect("small integer")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadring::lucas;

    #[test]
    fn nu_int_examples() {
        assert_eq!(nu_int(&9.into(), &8.into(), 2).unwrap(), Val::Fin(-3));
        assert_eq!(nu_int(&0.into(), &1.into(), 3).unwrap(), Val::Inf);
        assert_eq!(nu_int(&12.into(), &1.into(), 2).unwrap(), Val::Fin(2));
        assert_eq!(nu_int(&1.into(), &0.into(), 2), Err(PadicError::ZeroDenominator));
    }

    #[test]
    fn nu_quad_examples() {
        let a3m1 = &alpha_pow(3) - &QuadInt::one();
        assert_eq!(nu_quad(&a3m1, 2).unwrap(), Val::Fin(1));
        assert_eq!(nu_quad(&QuadInt::omega(), 2).unwrap(), Val::Fin(0));
        let a6m1 = &alpha_pow(6) - &QuadInt::one();
        assert_eq!(nu_quad(&a6m1, 2).unwrap(), Val::Fin(2));
    }

    #[test]
    fn nu_alpha_shift_examples() {
        assert_eq!(nu_alpha_shift(12, -1, 2).unwrap(), Val::Fin(3));
        assert_eq!(nu_alpha_shift(5, -1, 2).unwrap(), Val::Fin(0));
        assert_eq!(nu_alpha_shift(4, 1, 3).unwrap(), Val::Fin(1));
        assert_eq!(nu_alpha_shift(0, -1, 3).unwrap(), Val::Inf);
    }

    #[test]
    fn truncation_lengths() {
        assert_eq!(log_truncation(2, 1, 121), 120);
        // exact count is 17; 18 terms are therefore enough as well
        assert_eq!(exp_truncation(2, 8, 128), 17);
        for k in 18..40u64 {
            assert!(k * 8 - nu_factorial(k, 2) >= 128);
        }
    }

    #[test]
    fn log_of_one_and_alpha_cubed() {
        let one = PadicQuad::one(2, 128);
        assert_eq!(padic_log(&one, 128).unwrap(), PadicQuad::zero(2, 128));
        let a3 = PadicQuad::from_quad(&alpha_pow(3), 2, 128);
        let b3 = PadicQuad::from_quad(&QuadInt::beta().pow(3), 2, 128);
        let la = padic_log(&a3, 128).unwrap();
        assert_eq!(la.valuation(), Val::Fin(1));
        let lb = padic_log(&b3, 128).unwrap();
        assert_eq!(la.add(&lb).reduce(120).valuation(), Val::Inf);
        assert_eq!(lb, la.conj());
    }

    #[test]
    fn log_domain_error() {
        let a = PadicQuad::from_quad(&QuadInt::alpha(), 2, 64);
        assert_eq!(padic_log(&a, 64), Err(PadicError::Domain));
    }

    #[test]
    fn exp_examples() {
        assert_eq!(padic_exp(&PadicQuad::zero(2, 64), 64).unwrap(), PadicQuad::one(2, 64));
        let xi = PadicQuad::from_quad(&alpha_pow(384), 2, 64);
        let back = padic_exp(&padic_log(&xi, 64).unwrap(), 64).unwrap();
        assert_eq!(back, xi);
        let y = PadicQuad::from_int(2, 2, 64);
        assert_eq!(padic_exp(&y, 64), Err(PadicError::Domain));
    }

    #[test]
    fn screen_counts() {
        let ds = screen_d(2, 5..321, 8).unwrap();
        assert_eq!(ds.len(), 80);
        assert_eq!(&ds[..10], &[5, 7, 9, 15, 17, 19, 29, 31, 33, 39]);
        assert!(!ds.contains(&11));
        // 321 itself also qualifies when the interval is closed
        assert_eq!(screen_d(2, 5..322, 8).unwrap().len(), 81);
        assert!(screen_d(2, 7..7, 8).unwrap().is_empty());
    }

    #[test]
    fn missing_d_has_small_valuation() {
        let period = screen_period(2, 8).unwrap();
        for n in 0..period {
            assert!(nu_lucas_gap(2, n, 11, 64) <= 7);
        }
    }

    #[test]
    fn first_exception_d17() {
        let fe = first_exception(2, 17, 8).unwrap();
        assert_eq!(fe.first, 71);
        assert_eq!(fe.all, vec![71, 263]);
        assert!(!fe.unique);
        let fe5 = first_exception(2, 5, 8).unwrap();
        assert!(fe5.first >= 1 && fe5.first <= 384);
        let d = screen_d(3, 5..40, 8).unwrap()[0];
        let fe3 = first_exception(3, d, 8).unwrap();
        assert!(fe3.first >= 1 && fe3.first <= 8 * 3u64.pow(7));
        assert!(first_exception(2, 11, 8).is_err());
    }

    #[test]
    fn direct_valuation_at_first_exception() {
        let diff = lucas(88) - lucas(71);
        assert!(nu_big(&diff, 2) >= Val::Fin(8));
    }

    #[test]
    fn lift_poly_reproduces_lucas_gaps() {
        let lp = log_pair(2, 8, 128).unwrap();
        assert_eq!(lp.log_terms, 120);
        let poly = lift_poly(&lp, 17, 71, 384);
        let m = PadicQuad::modulus(2, 128);
        for z in 0..20u64 {
            let n = 71 + 384 * z;
            let want = (lucas_mod(n + 17, &m) - lucas_mod(n, &m)).mod_floor(&m);
            assert_eq!(poly.eval(&BigInt::from(z)), want, "z = {}", z);
        }
        let lp3 = log_pair(3, 8, 128).unwrap();
        let d3 = screen_d(3, 5..20, 8).unwrap()[0];
        let n0 = exception_residues(3, d3, 8).unwrap()[0];
        let period = screen_period(3, 8).unwrap();
        let poly3 = lift_poly(&lp3, d3, n0, period);
        let m3 = PadicQuad::modulus(3, 128);
        for z in 0..5u64 {
            let n = n0 + period * z;
            let want = (lucas_mod(n + d3, &m3) - lucas_mod(n, &m3)).mod_floor(&m3);
            assert_eq!(poly3.eval(&BigInt::from(z)), want);
        }
    }

    #[test]
    fn recurrence_matches_direct_powers() {
        let lp = log_pair(2, 8, 128).unwrap();
        let w = 128 + GUARD;
        let ca = PadicQuad::from_quad(&(&(&alpha_pow(17) - &QuadInt::one()) * &alpha_pow(71)), 2, w);
        let cb = ca.conj();
        let aa = lp.pp.add(&lp.qq);
        let bb = lp.pp.mul(&lp.qq);
        assert_eq!(aa.b, BigInt::zero());
        let mut u0 = ca.add(&cb);
        let mut u1 = ca.mul(&lp.pp).add(&cb.mul(&lp.qq));
        for j in 2..10u64 {
            let u2 = aa.mul(&u1).sub(&bb.mul(&u0));
            let direct = ca.mul(&lp.pp.pow(j)).add(&cb.mul(&lp.qq.pow(j)));
            assert_eq!(u2.reduce(120), direct.reduce(120));
            u0 = u1;
            u1 = u2;
        }
    }

    #[test]
    fn hensel_d17() {
        let cap: BigInt = "3200000000000000000000000000000000".parse().unwrap();
        let rep = hensel_valuation_bound(2, 17, &cap, &HenselOptions::default()).unwrap();
        assert_eq!(rep.residues.len(), 2);
        assert_eq!(rep.v_bound, 117);
        assert!(rep.exceeds);
        // the smallest member of the best class attains the reported valuation
        let lp = log_pair(2, 8, 128).unwrap();
        for r in &rep.residues {
            let z: BigInt = r.best_r.parse().unwrap();
            let poly = lift_poly(&lp, 17, r.n0, 384);
            assert_eq!(val_capped(&poly.eval(&z), 2, 128), r.best.unwrap());
        }
    }

    #[test]
    fn dependence() {
        let (dep, w) = mult_dependent(1);
        assert!(dep);
        assert_eq!(w, Some(DependenceWitness { sign: -1, alpha_exp: -2 }));
        let (dep3, w3) = mult_dependent(3);
        assert!(dep3);
        assert_eq!(w3, Some(DependenceWitness { sign: -1, alpha_exp: 2 }));
        let (dep4, w4) = mult_dependent(4);
        assert!(dep4);
        assert_eq!(w4, Some(DependenceWitness { sign: -1, alpha_exp: 4 }));
        assert!(verify_witness(4, &w4.unwrap()));
        assert_eq!(mult_dependent(5), (false, None));
        for t in 1..60u64 {
            let (d, w) = mult_dependent(t);
            assert_eq!(d, t == 1 || t == 3 || t % 2 == 0, "t = {}", t);
            if let Some(w) = w {
                assert!(verify_witness(t, &w));
            }
        }
    }
}
