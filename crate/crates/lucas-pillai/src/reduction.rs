//! Exact LLL, the lattice lower bound and de Weger reduction step, and
//! continued-fraction (Legendre) reduction.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bigreal::{floor_scaled, log_const, pow10, BigFixed, LogBase, RealError};
use crate::bounds::{fint, fx, ln, up, SCALE};
use crate::quadring::{alpha_pow, alpha_pow_signed, QuadInt};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error("basis vectors are linearly dependent")]
    Dependent,
    #[error("target coordinate is integral but the target is off the lattice; enlarge C")]
    Degenerate,
    #[error("c2² < T² + S at C = {c}; enlarge C")]
    Precondition { c: String },
    #[error("no candidate C satisfied the reduction precondition")]
    NoCandidate,
    #[error(transparent)]
    Real(#[from] RealError),
    #[error("continued fraction only stable for {stable} quotients, {wanted} requested")]
    Unstable { stable: usize, wanted: usize },
    #[error("no convergent denominator exceeds M among the computed quotients")]
    NeedMoreTerms,
    #[error("Legendre step needs |y − y1| < M, but the y cap {y_cap} is not below M = {m}")]
    CapAboveM { y_cap: String, m: String },
}

fn q(n: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Lattice spanned by the given columns (each of length k).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerLattice {
    pub basis: Vec<Vec<BigInt>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GSOData {
    /// mu[i][j] for j < i
    pub mu: Vec<Vec<BigRational>>,
    /// ‖b*_i‖²
    pub bstar_sq: Vec<BigRational>,
}

fn dot(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).fold(q(0), |acc, (x, y)| acc + x * y)
}

fn to_rat(v: &[BigInt]) -> Vec<BigRational> {
    v.iter().map(|x| q(x.clone())).collect()
}

pub fn gso(basis: &[Vec<BigInt>]) -> Result<GSOData, ReductionError> {
    let k = basis.len();
    let mut stars: Vec<Vec<BigRational>> = Vec::with_capacity(k);
    let mut mu = vec![vec![q(0); k]; k];
    let mut bsq = Vec::with_capacity(k);
    for i in 0..k {
        let bi = to_rat(&basis[i]);
        let mut s = bi.clone();
        for j in 0..i {
            let m = dot(&bi, &stars[j]) / &bsq[j];
            for (t, sj) in s.iter_mut().zip(&stars[j]) {
                *t -= &m * sj;
            }
            mu[i][j] = m;
        }
        let n = dot(&s, &s);
        if n.is_zero() {
            return Err(ReductionError::Dependent);
        }
        bsq.push(n);
        stars.push(s);
    }
    Ok(GSOData { mu, bstar_sq: bsq })
}

fn round_rat(x: &BigRational) -> BigInt {
    // nearest integer, halves rounded down
    (x - BigRational::new(1.into(), 2.into())).ceil().to_integer()
}

/// LLL reduction with Lovász factor `delta`, in exact rational arithmetic.
pub fn lll_reduce_with(l: &IntegerLattice, delta: &BigRational) -> Result<(IntegerLattice, GSOData), ReductionError> {
    let mut b = l.basis.clone();
    let k = b.len();
    let mut g = gso(&b)?;
    let mut i = 1;
    while i < k {
        for j in (0..i).rev() {
            let r = round_rat(&g.mu[i][j]);
            if !r.is_zero() {
                let bj = b[j].clone();
                for (t, s) in b[i].iter_mut().zip(&bj) {
                    *t -= &r * s;
                }
                let rr = q(r.clone());
                for l in 0..j {
                    let d = &rr * &g.mu[j][l];
                    g.mu[i][l] -= d;
                }
                g.mu[i][j] -= rr;
            }
        }
        let m = &g.mu[i][i - 1];
        let lhs = &g.bstar_sq[i] + m * m * &g.bstar_sq[i - 1];
        if lhs >= delta * &g.bstar_sq[i - 1] {
            i += 1;
        } else {
            b.swap(i, i - 1);
            g = gso(&b)?;
            i = (i - 1).max(1);
        }
    }
    Ok((IntegerLattice { basis: b }, g))
}

pub fn lll_reduce(l: &IntegerLattice) -> Result<(IntegerLattice, GSOData), ReductionError> {
    lll_reduce_with(l, &BigRational::new(3.into(), 4.into()))
}

/// Checks size reduction and the Lovász condition.
pub fn is_lll_reduced(g: &GSOData, delta: &BigRational) -> bool {
    let k = g.bstar_sq.len();
    let half = BigRational::new(1.into(), 2.into());
    for i in 0..k {
        for j in 0..i {
            if g.mu[i][j].abs() > half {
                return false;
            }
        }
        if i > 0 {
            let m = &g.mu[i][i - 1];
            if &g.bstar_sq[i] + m * m * &g.bstar_sq[i - 1] < delta * &g.bstar_sq[i - 1] {
                return false;
            }
        }
    }
    true
}

/// Exact determinant (Bareiss elimination) of the matrix with the given columns.
pub fn determinant(cols: &[Vec<BigInt>]) -> BigInt {
    let k = cols.len();
    let mut m: Vec<Vec<BigInt>> = (0..k).map(|r| (0..k).map(|c| cols[c][r].clone()).collect()).collect();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for p in 0..k {
        if m[p][p].is_zero() {
            match (p + 1..k).find(|&r| !m[r][p].is_zero()) {
                None => return BigInt::zero(),
                Some(r) => {
                    m.swap(p, r);
                    sign = -sign;
                }
            }
        }
        for r in p + 1..k {
            for c in p + 1..k {
                let v = (&m[r][c] * &m[p][p] - &m[r][p] * &m[p][c]) / &prev;
                m[r][c] = v;
            }
        }
        prev = m[p][p].clone();
    }
    sign * &m[k - 1][k - 1]
}

/// z with B z = v, exactly.
pub fn solve_coords(basis: &[Vec<BigInt>], v: &[BigInt]) -> Result<Vec<BigRational>, ReductionError> {
    let k = basis.len();
    let mut m: Vec<Vec<BigRational>> = (0..k).map(|r| {
        let mut row: Vec<BigRational> = (0..k).map(|c| q(basis[c][r].clone())).collect();
        row.push(q(v[r].clone()));
        row
    }).collect();
    for p in 0..k {
        let piv = (p..k).find(|&r| !m[r][p].is_zero()).ok_or(ReductionError::Dependent)?;
        m.swap(p, piv);
        let inv = m[p][p].recip();
        for c in p..=k {
            m[p][c] = &m[p][c] * &inv;
        }
        for r in 0..k {
            if r != p && !m[r][p].is_zero() {
                let f = m[r][p].clone();
                for c in p..=k {
                    let d = &f * &m[p][c];
                    m[r][c] -= d;
                }
            }
        }
    }
    Ok((0..k).map(|r| m[r][k].clone()).collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LowerBound {
    pub sigma: BigRational,
    /// c1² = max_j ‖b1‖²/‖b*_j‖²
    pub c1_sq: BigRational,
    /// c2² = σ² ‖b1‖² / c1² = σ² min_j ‖b*_j‖²
    pub c2_sq: BigRational,
}

fn dist_to_int(x: &BigRational) -> BigRational {
    let f = x - x.floor();
    let g = q(1) - &f;
    if f < g {
        f
    } else {
        g
    }
}

/// Lower bound c2 for the distance from v to the lattice (or shortest vector when v ∈ 𝓛).
pub fn lattice_lower_bound(reduced: &IntegerLattice, g: &GSOData, v: &[BigInt]) -> Result<LowerBound, ReductionError> {
    let z = solve_coords(&reduced.basis, v)?;
    let on_lattice = z.iter().all(|c| c.is_integer());
    let sigma = if on_lattice {
        q(1)
    } else {
        let i0 = z.iter().rposition(|c| !c.is_zero()).unwrap();
        let s = dist_to_int(&z[i0]);
        if s.is_zero() {
            return Err(ReductionError::Degenerate);
        }
        s
    };
    let b1 = &g.bstar_sq[0];
    let min = g.bstar_sq.iter().min().unwrap().clone();
    let c1_sq = b1 / &min;
    let c2_sq = &sigma * &sigma * &min;
    Ok(LowerBound { sigma, c1_sq, c2_sq })
}

pub fn rat_to_fixed(r: &BigRational) -> BigFixed {
    BigFixed::from_rational(r, SCALE)
}

/// The approximation lattice for η_1..η_k at constant C, reduced once and reused.
#[derive(Clone, Debug)]
pub struct ApproxLattice {
    pub c: BigInt,
    pub floors: Vec<BigInt>,
    pub reduced: IntegerLattice,
    pub gso: GSOData,
    pub digest: String,
}

impl ApproxLattice {
    pub fn new(c: &BigInt, etas: &[BigFixed]) -> Result<Self, ReductionError> {
        let k = etas.len();
        let floors: Vec<BigInt> = etas.iter().map(|e| floor_scaled(e, c)).collect::<Result<_, _>>()?;
        let mut cols = Vec::with_capacity(k);
        for i in 0..k {
            let mut col = vec![BigInt::zero(); k];
            if i < k - 1 {
                col[i] = BigInt::one();
            }
            col[k - 1] = floors[i].clone();
            cols.push(col);
        }
        let mut h = Sha256::new();
        for f in &floors {
            h.update(f.to_string().as_bytes());
            h.update(b";");
        }
        let digest = h.finalize().iter().take(8).map(|b| format!("{:02x}", b)).collect();
        let (reduced, gso) = lll_reduce(&IntegerLattice { basis: cols })?;
        Ok(ApproxLattice { c: c.clone(), floors, reduced, gso, digest })
    }
}

/// One reduction round's record.
#[derive(Clone, Debug, Serialize)]
pub struct DwRecord {
    pub c: String,
    pub digest: String,
    pub c1: f64,
    pub c2: f64,
    pub s: f64,
    pub t: f64,
    pub h: f64,
    /// Strict integer bound: the reduced quantity is < h_int.
    pub h_int: u64,
    /// Whether the exceptional solution a_1 = … = a_{k−1} = 0 is arithmetically possible.
    pub exceptional_possible: bool,
}

/// H <= (log(C c3) − log(√(c2² − S) − T)) / c4, given c2² >= T² + S.
pub fn dw_bound(al: &ApproxLattice, eta0: Option<&BigFixed>, a: &[BigFixed], c3: &BigFixed, c4: &BigFixed) -> Result<DwRecord, ReductionError> {
    let k = a.len();
    assert_eq!(k, al.floors.len());
    let f0 = match eta0 {
        Some(e) => floor_scaled(e, &al.c)?,
        None => BigInt::zero(),
    };
    let mut v = vec![BigInt::zero(); k];
    v[k - 1] = -f0.clone();
    let lb = lattice_lower_bound(&al.reduced, &al.gso, &v)?;
    let ar: Vec<BigRational> = a.iter().map(|x| x.upper()).collect();
    let s: BigRational = ar[..k - 1].iter().fold(q(0), |acc, x| acc + x * x);
    let t: BigRational = (ar.iter().fold(q(1), |acc, x| acc + x)) / q(2);
    if lb.c2_sq < &t * &t + &s {
        return Err(ReductionError::Precondition { c: al.c.to_string() });
    }
    let root = rat_to_fixed(&(&lb.c2_sq - &s)).sqrt();
    let gap = root.sub(&rat_to_fixed(&t));
    if !gap.certainly_positive() {
        return Err(ReductionError::Precondition { c: al.c.to_string() });
    }
    let num = ln(&fint(al.c.clone()).mul(c3)).sub(&ln(&gap));
    let h = up(&num.div(c4)?);
    let h_int = h.ceil_upper().to_u64().unwrap_or(u64::MAX);
    let last = &al.floors[k - 1];
    let exceptional_possible = !f0.is_zero() && (&f0 % last).is_zero() && (&f0 / last).abs() <= a[k - 1].ceil_upper();
    let c2 = rat_to_fixed(&lb.c2_sq).sqrt().to_f64();
    let c1 = rat_to_fixed(&lb.c1_sq).sqrt().to_f64();
    Ok(DwRecord {
        c: format!("{:e}", fint(al.c.clone()).to_f64()),
        digest: al.digest.clone(),
        c1,
        c2,
        s: rat_to_fixed(&s).to_f64(),
        t: rat_to_fixed(&t).to_f64(),
        h: h.to_f64(),
        h_int,
        exceptional_possible,
    })
}

pub fn dw_reduce(c: &BigInt, eta0: Option<&BigFixed>, etas: &[BigFixed], a: &[BigFixed], c3: &BigFixed, c4: &BigFixed) -> Result<DwRecord, ReductionError> {
    let al = ApproxLattice::new(c, etas)?;
    dw_bound(&al, eta0, a, c3, c4)
}

/// Candidate constants {1, 2, 5}·10^e for e in [e0, e0 + span].
pub fn c_grid(e0: u32, span: u32) -> Vec<BigInt> {
    let mut v = Vec::new();
    for e in e0..=e0 + span {
        for m in [1u32, 2, 5] {
            v.push(pow10(e) * m);
        }
    }
    v
}

/// Smallest H over the cached lattices that satisfy the precondition.
pub fn dw_best(cache: &[ApproxLattice], eta0: Option<&BigFixed>, a: &[BigFixed], c3: &BigFixed, c4: &BigFixed) -> Result<DwRecord, ReductionError> {
    let mut best: Option<DwRecord> = None;
    for al in cache {
        match dw_bound(al, eta0, a, c3, c4) {
            Ok(r) => {
                if best.as_ref().map_or(true, |b| r.h < b.h) {
                    best = Some(r);
                }
            }
            Err(ReductionError::Precondition { .. }) | Err(ReductionError::Degenerate) => {}
            Err(e) => return Err(e),
        }
    }
    best.ok_or(ReductionError::NoCandidate)
}

/// α^d − 1 = 2^a 3^b α^e exactly, when it is a 3-smooth multiple of a unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SmoothUnit {
    pub a: u32,
    pub b: u32,
    pub e: i64,
}

pub fn smooth_unit_form(d: u64) -> Option<SmoothUnit> {
    let mut x = &alpha_pow(d) - &QuadInt::one();
    if x.is_zero() {
        return None;
    }
    let mut exps = [0u32; 2];
    for (i, p) in [2, 3].iter().enumerate() {
        let pb = BigInt::from(*p);
        while let Some(y) = x.div_exact_int(&pb) {
            x = y;
            exps[i] += 1;
        }
    }
    if x.norm().abs() != BigInt::one() {
        return None;
    }
    let bound = 2 * d as i64 + 4;
    (-bound..=bound).find(|&e| alpha_pow_signed(e) == x).map(|e| SmoothUnit { a: exps[0], b: exps[1], e })
}

/// Partial quotients, convergents p_i/q_i.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CFExpansion {
    pub a: Vec<BigInt>,
    pub p: Vec<BigInt>,
    pub q: Vec<BigInt>,
}

impl CFExpansion {
    pub fn from_quotients(a: Vec<BigInt>) -> Self {
        let mut p = Vec::with_capacity(a.len());
        let mut qq = Vec::with_capacity(a.len());
        let (mut p1, mut p2) = (BigInt::one(), BigInt::zero());
        let (mut q1, mut q2) = (BigInt::zero(), BigInt::one());
        for ai in &a {
            let pn = ai * &p1 + &p2;
            let qn = ai * &q1 + &q2;
            p2 = p1;
            p1 = pn.clone();
            q2 = q1;
            q1 = qn.clone();
            p.push(pn);
            qq.push(qn);
        }
        CFExpansion { a, p, q: qq }
    }
}

/// Quotients shared by every real in [lo, hi].
pub fn cf_of_interval(lo: &BigRational, hi: &BigRational, max: usize) -> Vec<BigInt> {
    let mut out = Vec::new();
    let (mut x, mut y) = (lo.clone(), hi.clone());
    while out.len() < max {
        let (fx_, fy) = (x.floor(), y.floor());
        if fx_ != fy {
            break;
        }
        out.push(fx_.to_integer());
        let (rx, ry) = (&x - &fx_, &y - &fy);
        if rx.is_zero() || ry.is_zero() {
            break;
        }
        // 1/t reverses the order; the pair still brackets the next complete quotient
        let (nx, ny) = (ry.recip(), rx.recip());
        x = nx;
        y = ny;
    }
    out
}

/// The first `count` quotients of a certified real, or `Unstable`.
pub fn cf_convergents(mu: &BigFixed, count: usize) -> Result<CFExpansion, ReductionError> {
    let a = cf_of_interval(&mu.lower(), &mu.upper(), count);
    if a.len() < count {
        return Err(ReductionError::Unstable { stable: a.len(), wanted: count });
    }
    Ok(CFExpansion::from_quotients(a))
}

/// log(num)/log(den) expanded to `count` quotients; digits are raised until two
/// precisions agree on every quotient.
pub fn cf_log_ratio(num: &LogBase, den: &LogBase, count: usize, start_digits: u32) -> Result<CFExpansion, ReductionError> {
    let mut digits = start_digits.max(10);
    let ratio = |d: u32| -> Result<BigFixed, ReductionError> {
        let a = log_const(num, d)?;
        let b = log_const(den, d)?;
        Ok(a.div(&b)?)
    };
    loop {
        let lo = ratio(digits).and_then(|m| cf_convergents(&m, count));
        if let Ok(first) = lo {
            let second = cf_convergents(&ratio(digits + 20)?, count)?;
            assert_eq!(first, second, "continued fraction changed with precision");
            return Ok(first);
        }
        digits += 20;
        if digits > 5000 {
            return Err(ReductionError::Unstable { stable: 0, wanted: count });
        }
    }
}

/// N minimal with q_N > M, and a(M) = max{a_0, …, a_N}.
pub fn legendre_denominator_bound(cf: &CFExpansion, m: &BigInt) -> Result<(usize, BigInt), ReductionError> {
    let n = cf.q.iter().position(|qi| qi > m).ok_or(ReductionError::NeedMoreTerms)?;
    Ok((n, cf.a[..=n].iter().max().unwrap().clone()))
}

/// Caps on (x, y) from |(x1−x) log 2 + (y1−y) log 3| < 1.5 δ / 2^x 3^y.
#[derive(Clone, Debug, Serialize)]
pub struct LegendreBound {
    /// Upper bound on log(2^x 3^y) in the main branch.
    pub log_main: f64,
    pub x_main: u64,
    pub y_main: u64,
    /// Caps when δ/2^x3^y >= 1/2.
    pub x_fallback: u64,
    pub y_fallback: u64,
    pub x_bound: u64,
    pub y_bound: u64,
}

/// `delta_cap` bounds |2^x 3^y − 2^{x1} 3^{y1}|, `a` is a(M) for log 3/log 2.
pub fn legendre_sunit_bound(m: &BigInt, a: &BigInt, delta_cap: &BigFixed, y_cap: &BigInt) -> Result<LegendreBound, ReductionError> {
    if y_cap >= m {
        return Err(ReductionError::CapAboveM { y_cap: y_cap.to_string(), m: m.to_string() });
    }
    let (l2, l3) = (crate::bounds::l2(), crate::bounds::l3());
    let k = fx("1.5").div(&l2)?.mul(&fint(a + 2));
    let main = ln(&k.mul(delta_cap).mul(&fint(y_cap.clone())));
    let fb = ln(&fint(2).mul(delta_cap));
    let cap = |v: &BigFixed, l: &BigFixed| -> Result<u64, ReductionError> { Ok(v.div(l)?.ceil_upper().to_u64().unwrap()) };
    let (xm, ym) = (cap(&main, &l2)?, cap(&main, &l3)?);
    // x·log 2 <= log(2δ) gives x <= floor(log(2δ)/log 2)
    let (xf, yf) = (cap(&fb, &l2)?, cap(&fb, &l3)?);
    Ok(LegendreBound { log_main: main.to_f64(), x_main: xm, y_main: ym, x_fallback: xf, y_fallback: yf, x_bound: xm.max(xf), y_bound: ym.max(yf) })
}

/// log(α^d − 1) at `digits` fraction digits.
pub fn log_alpha_shift(d: u64, digits: u32) -> Result<BigFixed, RealError> {
    let x = &alpha_pow(d) - &QuadInt::one();
    // a + bω = (2a + b + b√5)/2
    let base = LogBase::Surd { p: &x.a * 2 + &x.b, q: x.b.clone(), r: 2.into() };
    log_const(&base, digits)
}

pub fn gcd_all(v: &[BigInt]) -> BigInt {
    v.iter().fold(BigInt::zero(), |g, x| g.gcd(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigreal::{ln2, ln3, ln_alpha};

    fn lat(cols: &[&[i64]]) -> IntegerLattice {
        IntegerLattice { basis: cols.iter().map(|c| c.iter().map(|&x| BigInt::from(x)).collect()).collect() }
    }

    #[test]
    fn identity_is_fixed() {
        let l = lat(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        let (r, g) = lll_reduce(&l).unwrap();
        assert_eq!(r, l);
        let lb = lattice_lower_bound(&r, &g, &[0.into(), 0.into(), 0.into()]).unwrap();
        assert_eq!(lb.c1_sq, q(1));
        assert_eq!(lb.c2_sq, q(1));
    }

    #[test]
    fn dependent_columns_rejected() {
        let l = lat(&[&[1, 2], &[2, 4]]);
        assert_eq!(lll_reduce(&l), Err(ReductionError::Dependent));
    }

    #[test]
    fn two_dim_shortest_vector() {
        let l = lat(&[&[201, 37], &[1648, 297]]);
        let (r, g) = lll_reduce(&l).unwrap();
        assert!(is_lll_reduced(&g, &BigRational::new(3.into(), 4.into())));
        let n1: BigInt = r.basis[0].iter().map(|x| x * x).sum();
        let mut best: Option<BigInt> = None;
        for i in -50i64..=50 {
            for j in -50i64..=50 {
                if i == 0 && j == 0 {
                    continue;
                }
                let v: Vec<BigInt> = (0..2).map(|t| &l.basis[0][t] * i + &l.basis[1][t] * j).collect();
                let n: BigInt = v.iter().map(|x| x * x).sum();
                if best.as_ref().map_or(true, |b| &n < b) {
                    best = Some(n);
                }
            }
        }
        assert_eq!(n1, best.unwrap());
        assert_eq!(determinant(&r.basis).abs(), determinant(&l.basis).abs());
    }

    #[test]
    fn sigma_from_last_coordinate() {
        let l = lat(&[&[2, 0], &[0, 2]]);
        let (r, g) = lll_reduce(&l).unwrap();
        let lb = lattice_lower_bound(&r, &g, &[0.into(), 1.into()]).unwrap();
        assert_eq!(lb.sigma, BigRational::new(1.into(), 2.into()));
        assert_eq!(lb.c2_sq, q(1));
        // z = (1/2, 1): last non-zero coordinate integral although v is off the lattice
        assert_eq!(lattice_lower_bound(&r, &g, &[1.into(), 2.into()]), Err(ReductionError::Degenerate));
    }

    fn etas(digits: u32) -> Vec<BigFixed> {
        vec![ln2(digits), ln3(digits), ln_alpha(digits)]
    }

    #[test]
    fn positive_case_lattice() {
        let al = ApproxLattice::new(&pow10(101), &etas(150)).unwrap();
        assert!(is_lll_reduced(&al.gso, &BigRational::new(3.into(), 4.into())));
        let lb = lattice_lower_bound(&al.reduced, &al.gso, &[0.into(), 0.into(), 0.into()]).unwrap();
        let c2 = rat_to_fixed(&lb.c2_sq).sqrt().to_f64();
        // Minkowski caps the shortest vector near det^(1/3) = 10^(101/3)
        assert!(c2 > 1e33 && c2 < 2.5e34, "{}", c2);
    }

    #[test]
    fn low_precision_is_ambiguous() {
        let r = ApproxLattice::new(&pow10(101), &etas(20));
        assert!(matches!(r, Err(ReductionError::Real(RealError::AmbiguousFloor))));
    }

    #[test]
    fn negative_case_small_lattice() {
        let al = ApproxLattice::new(&pow10(43), &etas(80)).unwrap();
        let lb = lattice_lower_bound(&al.reduced, &al.gso, &[0.into(), 0.into(), 0.into()]).unwrap();
        // Hermite in dimension 3: λ1⁶ <= 2 det²
        let det = q(determinant(&al.reduced.basis));
        assert!(&lb.c2_sq * &lb.c2_sq * &lb.c2_sq <= q(2) * &det * &det);
        let c2 = rat_to_fixed(&lb.c2_sq).sqrt().to_f64();
        assert!(c2 > 1e13 && c2 < 2.4e14, "{}", c2);
    }

    #[test]
    fn dw_reduce_positive_round_one() {
        let a = vec![fx("2.4e33"), fx("1.5e33"), fx("3.2e33")];
        let (c3, c4) = (fx("1.5"), crate::bounds::la());
        // 10^101 gives too short a lattice for these A_i
        assert!(matches!(dw_reduce(&pow10(101), None, &etas(150), &a, &c3, &c4), Err(ReductionError::Precondition { .. })));
        let r = dw_reduce(&pow10(103), None, &etas(150), &a, &c3, &c4).unwrap();
        assert!(r.h > 300.0 && r.h < 353.1, "{}", r.h);
        assert!((r.s - 8.01e66).abs() / 8.01e66 < 1e-3);
        assert!(!r.exceptional_possible);
    }

    #[test]
    fn grid() {
        let g = c_grid(101, 1);
        assert_eq!(g.len(), 6);
        assert_eq!(g[1], pow10(101) * 2);
    }

    #[test]
    fn smooth_units() {
        assert_eq!(smooth_unit_form(1), Some(SmoothUnit { a: 0, b: 0, e: -1 }));
        assert_eq!(smooth_unit_form(2), Some(SmoothUnit { a: 0, b: 0, e: 1 }));
        assert_eq!(smooth_unit_form(3), Some(SmoothUnit { a: 1, b: 0, e: 1 }));
        assert_eq!(smooth_unit_form(6), Some(SmoothUnit { a: 2, b: 0, e: 3 }));
        let others: Vec<u64> = (1..400).filter(|&d| smooth_unit_form(d).is_some()).collect();
        assert_eq!(others, vec![1, 2, 3, 6]);
    }

    #[test]
    fn log_shift_matches() {
        let v = log_alpha_shift(3, 30).unwrap();
        let w = ln2(30).add(&ln_alpha(30));
        assert!((v.to_f64() - w.to_f64()).abs() < 1e-25);
    }

    #[test]
    fn golden_ratio_cf() {
        let phi = crate::bigreal::alpha(60);
        let cf = cf_convergents(&phi, 40).unwrap();
        assert!(cf.a.iter().all(|x| x.is_one()));
        assert_eq!(legendre_denominator_bound(&cf, &pow10(6)).unwrap().1, BigInt::one());
    }

    #[test]
    fn log3_over_log2() {
        let cf = cf_log_ratio(&LogBase::int(3), &LogBase::int(2), 60, 40).unwrap();
        let head: Vec<u32> = cf.a[..15].iter().map(|x| x.to_u32().unwrap()).collect();
        assert_eq!(head, vec![1, 1, 1, 2, 2, 3, 1, 5, 2, 23, 2, 2, 1, 1, 55]);
        for i in 1..cf.a.len() {
            let det = &cf.p[i] * &cf.q[i - 1] - &cf.p[i - 1] * &cf.q[i];
            assert_eq!(det.abs(), BigInt::one());
            assert!(cf.q[i] >= cf.q[i - 1]);
        }
        assert!(cf.q[17] > pow10(8) && cf.q[16] <= pow10(8));
        let (n, a) = legendre_denominator_bound(&cf, &pow10(8)).unwrap();
        assert_eq!((n, a), (17, BigInt::from(55)));
        assert!(cf.q[49] > pow10(25));
        let (_, a25) = legendre_denominator_bound(&cf, &pow10(25)).unwrap();
        assert_eq!(a25, BigInt::from(55));
    }

    #[test]
    fn unstable_cf_reported() {
        let r = cf_convergents(&fx("1.5").div(&fint(1)).unwrap().rescale(3), 40);
        assert!(matches!(r, Err(ReductionError::Unstable { .. })));
    }

    #[test]
    fn legendre_caps() {
        let b = legendre_sunit_bound(&pow10(8), &55.into(), &BigFixed::from_int(pow10(105), SCALE), &46_000_000.into()).unwrap();
        assert!(b.x_main <= 382 && b.y_main <= 241, "{:?}", b);
        assert_eq!((b.x_fallback, b.y_fallback), (350, 221));
        let b2 = legendre_sunit_bound(&pow10(9), &55.into(), &BigFixed::from_int(pow10(326), SCALE), &190_000_000.into()).unwrap();
        assert!(b2.x_main <= 1118 && b2.y_main <= 706, "{:?}", b2);
        assert!(legendre_sunit_bound(&pow10(7), &55.into(), &fint(1), &46_000_000.into()).is_err());
    }
}
