//! Analytic bound evaluators: heights, Matveev, Laurent–Mignotte–Nesterenko,
//! Bugeaud–Laurent, the Gúzman–Luca inversion lemma and the S-unit gap envelope.
//!
//! All values are certified [`BigFixed`] numbers; bounds that grow with n are
//! polynomials in log n ([`LogPoly`]). Every returned quantity is the *upper*
//! end of its certified interval, so comparisons stay one-sided and sound.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::bigreal::{ln2, ln3, ln_alpha, pow10, BigFixed};
use crate::quadring::lucas;

/// Fraction digits used by all bound evaluations.
pub const SCALE: u32 = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("n_min must exceed 1 (got {0})")]
    NMin(u64),
    #[error("Gúzman–Luca precondition T > (4m²)^m fails for m = {m}")]
    GuzmanLuca { m: u32 },
    #[error("S-unit envelope needs n > 500 (got {0})")]
    SmallN(String),
    #[error("height input is not supported: {0}")]
    Unsupported(String),
    #[error("A_{index} is below max(D·h, |log γ|, 0.16)")]
    WeakA { index: usize },
    #[error("log A_{index} is below max(h, |log γ|/D, 1/D)")]
    WeakLogA { index: usize },
    #[error("the E-folding E <= log n + {offset} is not valid at n_min = {n_min}")]
    EFold { offset: f64, n_min: u64 },
}

pub fn fx(s: &str) -> BigFixed {
    BigFixed::from_decimal(s, SCALE)
}

pub fn fint(n: impl Into<BigInt>) -> BigFixed {
    BigFixed::from_int(n, SCALE)
}

pub fn ln(x: &BigFixed) -> BigFixed {
    x.ln().expect("log of a positive bound")
}

pub fn l2() -> BigFixed {
    ln2(SCALE)
}
pub fn l3() -> BigFixed {
    ln3(SCALE)
}
pub fn la() -> BigFixed {
    ln_alpha(SCALE)
}

/// The upper end of the certified interval, as an exact point.
pub fn up(x: &BigFixed) -> BigFixed {
    BigFixed::from_parts(x.mantissa() + x.err(), x.scale(), BigInt::zero())
}

pub fn max_fx(a: &BigFixed, b: &BigFixed) -> BigFixed {
    if a.upper() >= b.upper() {
        up(a)
    } else {
        up(b)
    }
}

/// Σ c_i (log n)^i with non-negative coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogPoly {
    pub coeffs: Vec<BigFixed>,
}

impl LogPoly {
    pub fn new(coeffs: Vec<BigFixed>) -> Self {
        for c in &coeffs {
            assert!(!c.mantissa().is_negative(), "LogPoly coefficients must be non-negative");
        }
        let mut p = LogPoly { coeffs: coeffs.iter().map(up).collect() };
        p.trim();
        p
    }

    pub fn constant(c: BigFixed) -> Self {
        Self::new(vec![c])
    }

    /// c·(log n)^k
    pub fn monomial(c: BigFixed, k: usize) -> Self {
        let mut v = vec![fint(0); k + 1];
        v[k] = c;
        Self::new(v)
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && self.coeffs.last().unwrap().mantissa().is_zero() {
            self.coeffs.pop();
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> &BigFixed {
        self.coeffs.last().unwrap()
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        let z = fint(0);
        Self::new((0..n).map(|i| self.coeffs.get(i).unwrap_or(&z).add(o.coeffs.get(i).unwrap_or(&z))).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut v = vec![fint(0); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                v[i + j] = v[i + j].add(&a.mul(b));
            }
        }
        Self::new(v)
    }

    pub fn scale(&self, c: &BigFixed) -> Self {
        Self::new(self.coeffs.iter().map(|a| a.mul(c)).collect())
    }

    pub fn eval_log(&self, logn: &BigFixed) -> BigFixed {
        let mut acc = fint(0);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(logn).add(c);
        }
        up(&acc)
    }

    pub fn eval(&self, n: &BigInt) -> BigFixed {
        self.eval_log(&ln(&fint(n.clone())))
    }

    /// Upper bound for P(log n)/(log n)^m valid for all n >= n_min (requires deg P <= m).
    pub fn fold_to_degree(&self, m: usize, n_min: u64) -> Result<BigFixed, BoundError> {
        assert!(self.degree() <= m);
        if n_min < 3 {
            return Err(BoundError::NMin(n_min));
        }
        let lmin = ln(&fint(n_min));
        let mut acc = fint(0);
        for (i, c) in self.coeffs.iter().enumerate() {
            let mut t = c.clone();
            for _ in i..m {
                t = t.div(&lmin).unwrap();
            }
            acc = acc.add(&t);
        }
        Ok(up(&acc))
    }

    pub fn to_f64s(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.upper_f64()).collect()
    }
}

/// Expressions whose height the chains need.
#[derive(Clone, Debug)]
pub enum HeightExpr {
    Rational(BigInt, BigInt),
    Alpha,
    /// α^t + ξ with ξ = ±1
    AlphaPowShift { t: i64, xi: i8 },
}

/// Upper bound on the absolute logarithmic height.
pub fn height_special(e: &HeightExpr) -> Result<BigFixed, BoundError> {
    match e {
        HeightExpr::Rational(p, q) => {
            if q.is_zero() {
                return Err(BoundError::Unsupported("zero denominator".into()));
            }
            let g = num_integer::Integer::gcd(p, q);
            let (p, q) = (p / &g, (q / &g).abs());
            let m = p.abs().max(q);
            Ok(up(&ln(&fint(m))))
        }
        HeightExpr::Alpha => Ok(up(&la().div_int(&2.into()))),
        HeightExpr::AlphaPowShift { t, xi } => {
            if *xi != 1 && *xi != -1 {
                return Err(BoundError::Unsupported(format!("shift {}", xi)));
            }
            let v = la().mul_int(&BigInt::from(t.unsigned_abs())).div_int(&2.into()).add(&l2());
            Ok(up(&v))
        }
    }
}

/// Bound on B in Matveev's theorem.
#[derive(Clone, Debug)]
pub enum BBound {
    Const(BigFixed),
    /// B = n, folded as 1 + log n <= (1 + 1/log n_min) log n
    LogN { n_min: u64 },
}

#[derive(Clone, Debug)]
pub struct TermData {
    pub height: LogPoly,
    pub abs_log: LogPoly,
    pub a: LogPoly,
}

#[derive(Clone, Debug)]
pub struct LinearFormSpec {
    pub d: u32,
    pub b: BBound,
    pub terms: Vec<TermData>,
}

impl LinearFormSpec {
    pub fn t(&self) -> usize {
        self.terms.len()
    }

    /// A term with A_i = max(D h, |log γ|, 0.16) for constant data.
    pub fn const_term(d: u32, h: BigFixed, abs_log: BigFixed) -> TermData {
        let dh = h.mul_int(&BigInt::from(d));
        let a = max_fx(&max_fx(&dh, &abs_log), &fx("0.16"));
        TermData { height: LogPoly::constant(h), abs_log: LogPoly::constant(abs_log), a: LogPoly::constant(a) }
    }

    fn check(&self) -> Result<(), BoundError> {
        assert!(self.t() >= 2 && self.d >= 1);
        for (i, term) in self.terms.iter().enumerate() {
            let need = term.height.scale(&fint(self.d));
            let n = term.a.coeffs.len().max(need.coeffs.len()).max(term.abs_log.coeffs.len());
            for k in 0..n {
                let a = term.a.coeffs.get(k).cloned().unwrap_or_else(|| fint(0));
                let h = need.coeffs.get(k).cloned().unwrap_or_else(|| fint(0));
                let l = term.abs_log.coeffs.get(k).cloned().unwrap_or_else(|| fint(0));
                if a.upper() < h.lower() || a.upper() < l.lower() {
                    return Err(BoundError::WeakA { index: i + 1 });
                }
            }
            if term.a.coeffs[0].upper() < fx("0.16").lower() && term.a.degree() == 0 {
                return Err(BoundError::WeakA { index: i + 1 });
            }
        }
        Ok(())
    }
}

/// 1.4·30^{t+3}·t^{4.5}·D²(1 + log D), the Matveev prefactor.
pub fn matveev_prefactor(t: usize, d: u32) -> BigFixed {
    let tf = fint(t as u64);
    let t45 = tf.pow_u32(4).mul(&tf.sqrt());
    let df = fint(d);
    let one = fint(1);
    fx("1.4").mul(&fint(30u64.pow(t as u32 + 3))).mul(&t45).mul(&df.mul(&df)).mul(&one.add(&ln(&df)))
}

/// Cst with log|Γ| > −Cst, as a polynomial in log n.
pub fn matveev_bound(spec: &LinearFormSpec) -> Result<LogPoly, BoundError> {
    spec.check()?;
    let mut p = LogPoly::constant(matveev_prefactor(spec.t(), spec.d));
    for term in &spec.terms {
        p = p.mul(&term.a);
    }
    let one = fint(1);
    let blog = match &spec.b {
        BBound::Const(b) => LogPoly::constant(one.add(&ln(b))),
        BBound::LogN { n_min } => {
            if *n_min <= 2 {
                return Err(BoundError::NMin(*n_min));
            }
            LogPoly::monomial(one.add(&one.div(&ln(&fint(*n_min))).unwrap()), 1)
        }
    };
    Ok(p.mul(&blog))
}

/// Positive magnitude of the two-logarithm lower bound:
/// 24.34 D^4 (max{log b' + 0.14, 21/D, 1/2})² log A1 log A2.
pub fn lmn_bound(b1: &BigFixed, b2: &BigFixed, log_a1: &BigFixed, log_a2: &BigFixed, d: u32) -> BigFixed {
    let df = fint(d);
    let bp = b1.abs().div(&df.mul(log_a2)).unwrap().add(&b2.abs().div(&df.mul(log_a1)).unwrap());
    let mut m = fint(21).div(&df).unwrap();
    m = max_fx(&m, &fx("0.5"));
    if bp.certainly_positive() {
        m = max_fx(&m, &ln(&bp).add(&fx("0.14")));
    }
    up(&fx("24.34").mul(&df.pow_u32(4)).mul(&m.mul(&m)).mul(log_a1).mul(log_a2))
}

/// Checks log A_i >= max{h, |log γ|/D, 1/D}.
pub fn lmn_check(log_a: &BigFixed, h: &BigFixed, abs_log: &BigFixed, d: u32, index: usize) -> Result<(), BoundError> {
    let df = fint(d);
    let need = max_fx(&max_fx(h, &abs_log.div(&df).unwrap()), &fint(1).div(&df).unwrap());
    if log_a.upper() < need.lower() {
        Err(BoundError::WeakLogA { index })
    } else {
        Ok(())
    }
}

/// Bugeaud–Laurent bound on ν_p(γ1^b1 γ2^b2 − 1) plus an additive valuation term.
///
/// Uses E' <= n/h'(γ1), so E <= log n + e0 with e0 = log log p + 0.4 − log h'(γ1),
/// and E² <= (1 + e0/log n_min)² (log n)² for n >= n_min.
pub fn bl_padic_bound(p: u32, g: u32, h1: &BigFixed, h2: &LogPoly, d: u32, n_min: u64, additive: &LogPoly) -> Result<LogPoly, BoundError> {
    if n_min <= 2 {
        return Err(BoundError::NMin(n_min));
    }
    let pf = fint(p);
    let lp = ln(&pf);
    let lmin = ln(&fint(n_min));
    let e0 = ln(&lp).add(&fx("0.4")).sub(&ln(h1));
    let clamp = max_fx(&fint(10), &lp.mul_int(&10.into()));
    if lmin.add(&e0).upper() < clamp.lower() {
        return Err(BoundError::EFold { offset: e0.to_f64(), n_min });
    }
    let one = fint(1);
    let fold = if e0.mantissa().is_negative() { one.clone() } else { one.add(&e0.div(&lmin).unwrap()) };
    let pre = fint(24u64 * p as u64 * g as u64).div(&fint(p - 1).mul(&lp.pow_u32(4))).unwrap();
    let c = pre.mul(&fold.mul(&fold)).mul(&fint(d).pow_u32(4)).mul(h1);
    let main = LogPoly::monomial(c, 2).mul(h2);
    Ok(main.add(additive))
}

/// 2^m T (log T)^m, after checking T > (4m²)^m.
pub fn guzman_luca(m: u32, t: &BigFixed) -> Result<BigFixed, BoundError> {
    assert!(m >= 1);
    let thr = fint(BigInt::from(4 * m * m).pow(m));
    if !thr.certainly_lt(t) {
        return Err(BoundError::GuzmanLuca { m });
    }
    let lt = ln(t);
    Ok(up(&fint(BigInt::from(2u32).pow(m)).mul(t).mul(&lt.pow_u32(m))))
}

/// Envelope for X = x log 2 + y log 3 from L_n − L_{n1} = 2^x 3^y − 2^{x1} 3^{y1}, n > 500.
///
/// X_hi = 2 + n log α + 60 (log(n log α))²; X_lo = n log α + log 0.38, which is
/// what 0.38 α^n < exp(X) gives.
pub fn sunit_gap_interval(n: &BigInt) -> Result<(BigFixed, BigFixed), BoundError> {
    if *n <= BigInt::from(500) {
        return Err(BoundError::SmallN(n.to_string()));
    }
    debug_assert!(lucas(498) > pow10(80));
    let nla = fint(n.clone()).mul(&la());
    let lg = ln(&nla);
    let hi = fint(2).add(&nla).add(&fint(60).mul(&lg.mul(&lg)));
    let lo = nla.add(&ln(&fx("0.38")));
    Ok((lo, up(&hi)))
}

/// Smallest integer N with N > v for every v in the certified interval.
pub fn strict_int_bound(v: &BigFixed) -> BigInt {
    v.ceil_upper()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(x: f64, want: f64, rel: f64) -> bool {
        ((x - want) / want).abs() <= rel
    }

    fn pos_spec(extra: Option<LogPoly>) -> LinearFormSpec {
        let mut terms = vec![
            LinearFormSpec::const_term(2, l2(), l2()),
            LinearFormSpec::const_term(2, l3(), l3()),
            LinearFormSpec::const_term(2, height_special(&HeightExpr::Alpha).unwrap(), la()),
        ];
        if let Some(a4) = extra {
            terms.push(TermData { height: LogPoly::constant(fint(0)), abs_log: LogPoly::constant(fint(0)), a: a4 });
        }
        LinearFormSpec { d: 2, b: BBound::LogN { n_min: 1500 }, terms }
    }

    #[test]
    fn heights() {
        let h = height_special(&HeightExpr::Alpha).unwrap();
        assert!(close(h.to_f64(), 0.4812118250596 / 2.0, 1e-12));
        let h2 = height_special(&HeightExpr::Rational(2.into(), 1.into())).unwrap();
        assert!(close(h2.to_f64(), std::f64::consts::LN_2, 1e-12));
        let h5 = height_special(&HeightExpr::AlphaPowShift { t: 5, xi: -1 }).unwrap();
        assert!(close(h5.to_f64(), 5.0 * 0.4812118250596 / 2.0 + std::f64::consts::LN_2, 1e-12));
        assert!(h5.to_f64() < 1.897);
        assert!(height_special(&HeightExpr::AlphaPowShift { t: 5, xi: 2 }).is_err());
        let h34 = height_special(&HeightExpr::Rational(9.into(), (-12).into())).unwrap();
        assert!(close(h34.to_f64(), 4f64.ln(), 1e-12));
    }

    #[test]
    fn matveev_three_terms() {
        let p = matveev_bound(&pos_spec(None)).unwrap();
        assert_eq!(p.degree(), 1);
        let c = p.leading().to_f64();
        assert!(c <= 1.62e12 && c > 1.6e12, "{}", c);
    }

    #[test]
    fn matveev_four_terms() {
        let a4 = LogPoly::monomial(fx("2e12"), 1);
        let p = matveev_bound(&pos_spec(Some(a4))).unwrap();
        assert_eq!(p.degree(), 2);
        let c = p.leading().to_f64();
        assert!(c <= 3.54e26 && c > 3.5e26, "{}", c);
    }

    #[test]
    fn matveev_is_linear_in_a1() {
        let base = matveev_bound(&pos_spec(None)).unwrap().leading().to_f64();
        let mut spec = pos_spec(None);
        spec.terms[0].a = spec.terms[0].a.scale(&fint(2));
        let doubled = matveev_bound(&spec).unwrap().leading().to_f64();
        assert!(close(doubled, 2.0 * base, 1e-12));
    }

    #[test]
    fn matveev_rejects_small_a() {
        let mut spec = pos_spec(None);
        spec.terms[0].a = LogPoly::constant(fx("0.5"));
        assert_eq!(matveev_bound(&spec), Err(BoundError::WeakA { index: 1 }));
        let spec2 = LinearFormSpec { b: BBound::LogN { n_min: 1 }, ..pos_spec(None) };
        assert!(matveev_bound(&spec2).is_err());
    }

    #[test]
    fn lmn_values() {
        let two = fint(2);
        let v = lmn_bound(&fint(10), &fint(10), &two, &two, 1);
        assert!(close(v.to_f64(), 42935.76, 1e-9));
        let a = lmn_bound(&fx("1e20"), &fx("3e15"), &fx("2"), &fx("3"), 1);
        let b = lmn_bound(&fx("3e15"), &fx("1e20"), &fx("3"), &fx("2"), 1);
        assert!(close(a.to_f64(), b.to_f64(), 1e-12));
        assert!(lmn_check(&two, &l2(), &l2(), 1, 1).is_ok());
        assert!(lmn_check(&fx("0.5"), &l2(), &l2(), 1, 1).is_err());
    }

    #[test]
    fn bl_bounds() {
        let h2 = LogPoly::monomial(fx("2e12"), 1);
        let add2 = LogPoly::new(vec![fint(1), fint(5).div(&l2()).unwrap()]);
        let b2 = bl_padic_bound(2, 3, &la(), &h2, 2, 60000, &add2).unwrap();
        assert_eq!(b2.degree(), 3);
        // the p = 2 constant is about 1.1e16, well above 3e15
        let c2 = b2.leading().to_f64();
        assert!(c2 > 1.0e16 && c2 < 1.2e16, "{}", c2);
        let h1 = l3().div_int(&2.into());
        let add3 = LogPoly::new(vec![fint(1), fint(5).div(&l3()).unwrap()]);
        let b3 = bl_padic_bound(3, 4, &h1, &h2, 2, 60000, &add3).unwrap();
        let c3 = b3.leading().to_f64();
        assert!(c3 < 3e15 && c3 > 2e15, "{}", c3);
        assert!(bl_padic_bound(3, 4, &h1, &h2, 2, 100, &add3).is_err());
    }

    #[test]
    fn guzman_luca_values() {
        let a = guzman_luca(3, &fx("1.6e27")).unwrap().to_f64();
        assert!(a < 3.2e33 && a > 3.1e33, "{}", a);
        let b = guzman_luca(1, &fx("3.4e12")).unwrap().to_f64();
        assert!(b < 2e14 && b > 1.9e14, "{}", b);
        let c = guzman_luca(4, &fx("4.32e17")).unwrap().to_f64();
        assert!(c < 2e25 && c > 1.8e25, "{}", c);
        assert_eq!(guzman_luca(3, &fint(46656)), Err(BoundError::GuzmanLuca { m: 3 }));
    }

    #[test]
    fn gap_interval() {
        let (_, hi) = sunit_gap_interval(&"3200000000000000000000000000000000".parse().unwrap()).unwrap();
        assert!(hi.to_f64() < 1.6e33);
        let (_, hi2) = sunit_gap_interval(&(BigInt::from(2u32) * pow10(25))).unwrap();
        assert!(hi2.to_f64() < 9.7e24);
        let (lo, _) = sunit_gap_interval(&BigInt::from(501)).unwrap();
        assert!(close(lo.to_f64(), 501.0 * 0.4812118250596 + 0.38f64.ln(), 1e-12));
        assert!(sunit_gap_interval(&BigInt::from(500)).is_err());
    }

    #[test]
    fn lucas_498_exceeds_1e80() {
        assert!(lucas(498) > pow10(80));
    }

    #[test]
    fn fold_divides_lower_terms() {
        let p = LogPoly::new(vec![fint(0), fint(0), fx("3.6e26")]);
        let f = p.fold_to_degree(3, 60000).unwrap().to_f64();
        assert!(close(f, 3.6e26 / 60000f64.ln(), 1e-9));
    }
}
