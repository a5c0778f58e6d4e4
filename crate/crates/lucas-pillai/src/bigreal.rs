//! Certified decimal fixed-point reals.
//!
//! A [`BigFixed`] is `mantissa * 10^-scale` together with an error bound
//! `err` in units of the last place. Every operation truncates toward zero
//! and widens `err` so that the true value always lies in
//! `[(mantissa - err) 10^-scale, (mantissa + err) 10^-scale]`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub const DEFAULT_DIGITS: u32 = 150;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RealError {
    #[error("logarithm of a non-positive number")]
    Domain,
    #[error("certified interval straddles an integer; increase precision")]
    AmbiguousFloor,
    #[error("division by an interval containing zero")]
    DivByZero,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigFixed {
    mantissa: BigInt,
    scale: u32,
    err: BigInt,
}

pub fn pow10(e: u32) -> BigInt {
    num_traits::pow(BigInt::from(10u32), e as usize)
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    // both non-negative
    let (q, r) = a.div_rem(b);
    if r.is_zero() {
        q
    } else {
        q + 1
    }
}

/// Truncating division toward zero together with an exactness flag.
fn trunc_div(a: &BigInt, b: &BigInt) -> (BigInt, bool) {
    let (q, r) = (a / b, a % b);
    (q, r.is_zero())
}

impl BigFixed {
    pub fn zero(scale: u32) -> Self {
        BigFixed { mantissa: BigInt::zero(), scale, err: BigInt::zero() }
    }

    pub fn from_int(n: impl Into<BigInt>, scale: u32) -> Self {
        BigFixed { mantissa: n.into() * pow10(scale), scale, err: BigInt::zero() }
    }

    pub fn from_parts(mantissa: BigInt, scale: u32, err: BigInt) -> Self {
        assert!(!err.is_negative());
        BigFixed { mantissa, scale, err }
    }

    /// `num / den` truncated to `scale` digits.
    pub fn from_ratio(num: &BigInt, den: &BigInt, scale: u32) -> Self {
        assert!(!den.is_zero());
        let (q, exact) = trunc_div(&(num * pow10(scale)), den);
        BigFixed { mantissa: q, scale, err: if exact { BigInt::zero() } else { BigInt::one() } }
    }

    pub fn from_rational(r: &BigRational, scale: u32) -> Self {
        Self::from_ratio(r.numer(), r.denom(), scale)
    }

    /// Parses a decimal literal such as `"1.62e12"` exactly (then truncates to `scale`).
    pub fn from_decimal(s: &str, scale: u32) -> Self {
        let r = parse_decimal(s);
        Self::from_rational(&r, scale)
    }

    pub fn from_f64_str(x: f64, scale: u32) -> Self {
        Self::from_decimal(&format!("{:e}", x), scale)
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }
    pub fn scale(&self) -> u32 {
        self.scale
    }
    pub fn err(&self) -> &BigInt {
        &self.err
    }

    pub fn is_exact(&self) -> bool {
        self.err.is_zero()
    }

    pub fn lower(&self) -> BigRational {
        BigRational::new(&self.mantissa - &self.err, pow10(self.scale))
    }
    pub fn upper(&self) -> BigRational {
        BigRational::new(&self.mantissa + &self.err, pow10(self.scale))
    }

    pub fn contains(&self, r: &BigRational) -> bool {
        &self.lower() <= r && r <= &self.upper()
    }

    pub fn to_f64(&self) -> f64 {
        let r = BigRational::new(self.mantissa.clone(), pow10(self.scale));
        rational_to_f64(&r)
    }

    pub fn upper_f64(&self) -> f64 {
        rational_to_f64(&self.upper())
    }

    /// Changes the number of fraction digits, widening `err` when digits are dropped.
    pub fn rescale(&self, scale: u32) -> Self {
        match scale.cmp(&self.scale) {
            Ordering::Equal => self.clone(),
            Ordering::Greater => {
                let f = pow10(scale - self.scale);
                BigFixed { mantissa: &self.mantissa * &f, scale, err: &self.err * &f }
            }
            Ordering::Less => {
                let f = pow10(self.scale - scale);
                let (q, exact) = trunc_div(&self.mantissa, &f);
                let mut err = ceil_div(&self.err, &f);
                if !exact {
                    err += 1;
                }
                BigFixed { mantissa: q, scale, err }
            }
        }
    }

    fn aligned(&self, other: &Self) -> (Self, Self) {
        let s = self.scale.max(other.scale);
        (self.rescale(s), other.rescale(s))
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = self.aligned(other);
        BigFixed { mantissa: a.mantissa + b.mantissa, scale: a.scale, err: a.err + b.err }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let (a, b) = self.aligned(other);
        BigFixed { mantissa: a.mantissa - b.mantissa, scale: a.scale, err: a.err + b.err }
    }

    pub fn neg(&self) -> Self {
        BigFixed { mantissa: -&self.mantissa, scale: self.scale, err: self.err.clone() }
    }

    pub fn abs(&self) -> Self {
        BigFixed { mantissa: self.mantissa.abs(), scale: self.scale, err: self.err.clone() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = self.aligned(other);
        let s = a.scale;
        let f = pow10(s);
        let prod = &a.mantissa * &b.mantissa;
        let spread = a.mantissa.abs() * &b.err + b.mantissa.abs() * &a.err + &a.err * &b.err;
        let (q, exact) = trunc_div(&prod, &f);
        let mut err = ceil_div(&spread, &f);
        if !exact {
            err += 1;
        }
        BigFixed { mantissa: q, scale: s, err }
    }

    pub fn mul_int(&self, n: &BigInt) -> Self {
        BigFixed { mantissa: &self.mantissa * n, scale: self.scale, err: &self.err * n.abs() }
    }

    pub fn div_int(&self, n: &BigInt) -> Self {
        assert!(!n.is_zero());
        let (q, exact) = trunc_div(&self.mantissa, n);
        let mut err = ceil_div(&self.err, &n.abs());
        if !exact {
            err += 1;
        }
        BigFixed { mantissa: q, scale: self.scale, err }
    }

    pub fn div(&self, other: &Self) -> Result<Self, RealError> {
        let (a, b) = self.aligned(other);
        let s = a.scale;
        let mb = b.mantissa.abs();
        if mb <= b.err {
            return Err(RealError::DivByZero);
        }
        let f = pow10(s);
        let (q, exact) = trunc_div(&(&a.mantissa * &f), &b.mantissa);
        // |a/b - ma/mb| <= (ea|mb| + |ma|eb) / ((|mb|-eb)|mb|)
        let num = (&a.err * &mb + a.mantissa.abs() * &b.err) * &f;
        let den = (&mb - &b.err) * &mb;
        let mut err = ceil_div(&num, &den);
        if !exact {
            err += 1;
        }
        Ok(BigFixed { mantissa: q, scale: s, err })
    }

    pub fn sqrt(&self) -> Self {
        assert!(!self.upper().is_negative(), "sqrt of a negative interval");
        let s = self.scale;
        let m = if self.mantissa.is_negative() { BigInt::zero() } else { self.mantissa.clone() };
        let root = (&m * pow10(s)).sqrt();
        // |sqrt x - sqrt y| <= sqrt|x-y|, and <= |x-y|/sqrt(min) when min > 0
        let crude = (&self.err * pow10(s)).sqrt() + 1;
        let mut err = crude;
        let lo = &m - &self.err;
        if lo.is_positive() {
            let fine = &self.err * ((pow10(s) / &lo).sqrt() + 1);
            if fine < err {
                err = fine;
            }
        }
        err += 1;
        BigFixed { mantissa: root, scale: s, err }
    }

    pub fn pow_u32(&self, e: u32) -> Self {
        let mut acc = BigFixed::from_int(1, self.scale);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Natural logarithm of a certainly positive value.
    pub fn ln(&self) -> Result<Self, RealError> {
        ln_fixed(self)
    }

    pub fn certainly_positive(&self) -> bool {
        self.mantissa > self.err
    }

    pub fn certainly_lt(&self, other: &Self) -> bool {
        self.upper() < other.lower()
    }

    pub fn certainly_le(&self, other: &Self) -> bool {
        self.upper() <= other.lower()
    }

    /// Smallest integer strictly above the certified interval.
    pub fn ceil_upper(&self) -> BigInt {
        let u = self.upper();
        u.floor().to_integer() + 1
    }

    pub fn floor_lower(&self) -> BigInt {
        self.lower().floor().to_integer()
    }
}

impl fmt::Display for BigFixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let neg = self.mantissa.is_negative();
        let digits = self.mantissa.abs().to_string();
        let s = self.scale as usize;
        let padded = if digits.len() <= s { format!("{}{}", "0".repeat(s + 1 - digits.len()), digits) } else { digits };
        let (ip, fp) = padded.split_at(padded.len() - s);
        write!(f, "{}{}", if neg { "-" } else { "" }, ip)?;
        if s > 0 {
            write!(f, ".{}", fp)?;
        }
        write!(f, " ± {} ulp", self.err)
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let n = r.numer();
    let d = r.denom();
    let shift = n.bits() as i64 - d.bits() as i64 - 60;
    let q: BigInt = if shift > 0 { n / (d << (shift as usize)) } else { (n << ((-shift) as usize)) / d };
    q.to_f64().unwrap_or(f64::NAN) * 2f64.powi(shift as i32)
}

/// Exact rational value of a decimal literal like `-1.5e105` or `94864`.
pub fn parse_decimal(s: &str) -> BigRational {
    let s = s.trim();
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().expect("bad exponent")),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = match mant.find('.') {
        Some(i) => (&mant[..i], &mant[i + 1..]),
        None => (mant, ""),
    };
    let digits: BigInt = format!("{}{}", ip, fp).parse().expect("bad mantissa");
    let e = exp - fp.len() as i64;
    let mut r = if e >= 0 {
        BigRational::from_integer(digits * pow10(e as u32))
    } else {
        BigRational::new(digits, pow10((-e) as u32))
    };
    if neg {
        r = -r;
    }
    r
}

/// Positive real arguments accepted by [`log_const`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LogBase {
    Int(BigInt),
    Ratio(BigInt, BigInt),
    /// `(p + q*sqrt(5)) / r`
    Surd { p: BigInt, q: BigInt, r: BigInt },
}

impl LogBase {
    pub fn int(n: i64) -> Self {
        LogBase::Int(BigInt::from(n))
    }

    pub fn alpha() -> Self {
        LogBase::Surd { p: 1.into(), q: 1.into(), r: 2.into() }
    }

    fn is_positive(&self) -> bool {
        match self {
            LogBase::Int(n) => n.is_positive(),
            LogBase::Ratio(a, b) => !a.is_zero() && a.sign() == b.sign(),
            LogBase::Surd { p, q, r } => {
                if r.is_zero() {
                    return false;
                }
                let num_sign = surd_sign(p, q);
                num_sign != Sign::NoSign && (num_sign == Sign::Plus) == r.is_positive()
            }
        }
    }

    fn is_one(&self) -> bool {
        match self {
            LogBase::Int(n) => n.is_one(),
            LogBase::Ratio(a, b) => a == b,
            LogBase::Surd { p, q, r } => q.is_zero() && p == r,
        }
    }

    fn approx(&self, scale: u32) -> BigFixed {
        match self {
            LogBase::Int(n) => BigFixed::from_int(n.clone(), scale),
            LogBase::Ratio(a, b) => BigFixed::from_ratio(a, b, scale),
            LogBase::Surd { p, q, r } => {
                let s5 = sqrt5(scale);
                BigFixed::from_int(p.clone(), scale).add(&s5.mul_int(q)).div_int(r)
            }
        }
    }
}

/// Sign of `p + q*sqrt(5)`, decided exactly.
fn surd_sign(p: &BigInt, q: &BigInt) -> Sign {
    let ps = p.sign();
    let qs = q.sign();
    if qs == Sign::NoSign {
        return ps;
    }
    if ps == Sign::NoSign || ps == qs {
        return qs;
    }
    // opposite signs: compare p^2 with 5 q^2
    match (p * p).cmp(&(BigInt::from(5) * q * q)) {
        Ordering::Greater => ps,
        Ordering::Less => qs,
        Ordering::Equal => Sign::NoSign,
    }
}

/// sqrt(5) truncated to `scale` digits (err 1 ulp).
pub fn sqrt5(scale: u32) -> BigFixed {
    let m = (BigInt::from(5) * pow10(2 * scale)).sqrt();
    BigFixed { mantissa: m, scale, err: BigInt::one() }
}

/// atanh(1/q) for an integer q >= 2, as (mantissa, err) at `scale`.
fn atanh_recip(q: &BigInt, scale: u32) -> BigFixed {
    let q2 = q * q;
    // floor(floor(x)/n) == floor(x/n), so every power is an exact floor.
    let mut pw = pow10(scale) / q;
    let mut sum = BigInt::zero();
    let mut k = 0u64;
    while !pw.is_zero() {
        sum += &pw / BigInt::from(2 * k + 1);
        pw /= &q2;
        k += 1;
    }
    // one ulp per term plus a geometric tail below two ulps
    BigFixed { mantissa: sum, scale, err: BigInt::from(k + 2) }
}

/// atanh(t) for a certified |t| <= 1/3.
fn atanh_fixed(t: &BigFixed) -> BigFixed {
    let s = t.scale;
    let t2 = t.mul(t);
    let mut pw = t.clone();
    let mut sum = BigFixed::zero(s);
    let mut k: u64 = 0;
    loop {
        sum = sum.add(&pw.div_int(&BigInt::from(2 * k + 1)));
        pw = pw.mul(&t2);
        k += 1;
        let mag = pw.mantissa.abs() + &pw.err;
        if mag <= BigInt::one() {
            // remaining terms: |t|^(2k+1) / (1 - t^2) <= (9/8) * mag
            let tail = ceil_div(&(mag * 9), &BigInt::from(8));
            sum.err += tail;
            return sum;
        }
    }
}

fn ln2_fixed(scale: u32) -> BigFixed {
    atanh_recip(&BigInt::from(3), scale).mul_int(&BigInt::from(2))
}

/// ln(y) for certified y > 0, computed at y's scale.
fn ln_fixed(y: &BigFixed) -> Result<BigFixed, RealError> {
    if !y.certainly_positive() {
        return Err(RealError::Domain);
    }
    let s = y.scale;
    let one = pow10(s);
    // y / 2^k lands in [2/3, 4/3]
    let mut k: i64 = y.mantissa.bits() as i64 - one.bits() as i64;
    let three_y = |m: &BigInt| m * 3;
    let mut z;
    loop {
        z = if k >= 0 { y.div_int(&(BigInt::one() << k as usize)) } else { y.mul_int(&(BigInt::one() << (-k) as usize)) };
        if three_y(&z.mantissa) > &one * 4 {
            k += 1;
        } else if three_y(&z.mantissa) < &one * 2 {
            k -= 1;
        } else {
            break;
        }
    }
    let onef = BigFixed::from_int(1, s);
    let t = z.sub(&onef).div(&z.add(&onef))?;
    let mut r = atanh_fixed(&t).mul_int(&BigInt::from(2));
    if k != 0 {
        r = r.add(&ln2_fixed(s).mul_int(&BigInt::from(k)));
    }
    Ok(r)
}

/// log(base) with error at most 2 ulp at `digits` fraction digits.
pub fn log_const(base: &LogBase, digits: u32) -> Result<BigFixed, RealError> {
    assert!(digits >= 1);
    if !base.is_positive() {
        return Err(RealError::Domain);
    }
    if base.is_one() {
        return Ok(BigFixed::zero(digits));
    }
    let mut guard = 12u32;
    loop {
        let w = digits + guard;
        let y = base.approx(w + magnitude_digits(base));
        let r = ln_fixed(&y)?.rescale(w);
        if r.err <= pow10(guard) {
            let out = r.rescale(digits);
            if out.err <= BigInt::from(2) {
                return Ok(out);
            }
        }
        guard += 12;
    }
}

/// Extra digits so that tiny surd values keep full relative precision.
fn magnitude_digits(base: &LogBase) -> u32 {
    match base {
        LogBase::Int(_) => 0,
        LogBase::Ratio(a, b) => (b.bits().saturating_sub(a.bits()) as f64 * 0.302) as u32 + 2,
        LogBase::Surd { p, q, r } => {
            let top = p.bits().max(q.bits()) + 3;
            (top.max(r.bits()) as f64 * 0.302) as u32 + 2
        }
    }
}

/// ⌊C·eta⌋, or `AmbiguousFloor` when the certified interval straddles an integer.
pub fn floor_scaled(eta: &BigFixed, c: &BigInt) -> Result<BigInt, RealError> {
    assert!(c.is_positive());
    let den = pow10(eta.scale);
    let lo = (c * (&eta.mantissa - &eta.err)).div_floor(&den);
    let hi = (c * (&eta.mantissa + &eta.err)).div_floor(&den);
    if lo == hi {
        Ok(lo)
    } else {
        Err(RealError::AmbiguousFloor)
    }
}

pub fn ln2(digits: u32) -> BigFixed {
    log_const(&LogBase::int(2), digits).expect("ln 2")
}

pub fn ln3(digits: u32) -> BigFixed {
    log_const(&LogBase::int(3), digits).expect("ln 3")
}

pub fn ln_alpha(digits: u32) -> BigFixed {
    log_const(&LogBase::alpha(), digits).expect("ln alpha")
}

/// alpha = (1 + sqrt 5)/2 at `digits` fraction digits.
pub fn alpha(digits: u32) -> BigFixed {
    LogBase::alpha().approx(digits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dec(s: &str) -> BigRational {
        parse_decimal(s)
    }

    // Machin-like decomposition, independent of the 2·atanh(1/3) used above.
    fn ln2_oracle(scale: u32) -> BigFixed {
        let a = atanh_recip(&26.into(), scale).mul_int(&18.into());
        let b = atanh_recip(&4801.into(), scale).mul_int(&2.into());
        let c = atanh_recip(&8749.into(), scale).mul_int(&8.into());
        a.sub(&b).add(&c)
    }

    // asinh(1/2) = log alpha, summed as an exact rational series.
    fn ln_alpha_oracle(scale: u32) -> BigFixed {
        let mut sum = BigRational::zero();
        let mut coef = BigRational::one();
        let x = BigRational::new(1.into(), 2.into());
        let mut xp = x.clone();
        let x2 = &x * &x;
        for k in 0..(scale as usize * 2 + 10) {
            let term = &coef * &xp / BigRational::from_integer(BigInt::from(2 * k + 1));
            if k % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
            let kk = BigInt::from(k as u64);
            coef = coef * BigRational::new((&kk * 2 + 1) * (&kk * 2 + 2), (&kk + 1) * (&kk + 1) * 4);
            xp = xp * &x2;
        }
        // alternating series: tail below the first omitted term, < 4^-(2 scale)
        let mut f = BigFixed::from_rational(&sum, scale);
        f.err += 1;
        f
    }

    fn agree(a: &BigFixed, b: &BigFixed) -> bool {
        let (a, b) = a.aligned(b);
        (a.mantissa - b.mantissa).abs() <= a.err + b.err
    }

    #[test]
    fn log2_matches_two_series() {
        let got = log_const(&LogBase::int(2), 10).unwrap();
        assert_eq!(got.mantissa, BigInt::from(6931471805u64));
        assert!(got.err <= BigInt::from(2));
        assert!(agree(&log_const(&LogBase::int(2), 14).unwrap(), &ln2_oracle(14)));
        assert!(agree(&ln2(150), &ln2_oracle(160)));
    }

    #[test]
    fn log_one_is_exact_zero() {
        let z = log_const(&LogBase::int(1), 10).unwrap();
        assert!(z.mantissa.is_zero() && z.err.is_zero());
    }

    #[test]
    fn log_alpha_matches_asinh_series() {
        let got = log_const(&LogBase::alpha(), 10).unwrap();
        assert!((got.mantissa.clone() - BigInt::from(4812118250u64)).abs() <= BigInt::from(2));
        assert!(agree(&ln_alpha(120), &ln_alpha_oracle(130)));
    }

    #[test]
    fn log_rejects_non_positive() {
        assert_eq!(log_const(&LogBase::int(0), 10), Err(RealError::Domain));
        assert_eq!(log_const(&LogBase::int(-3), 10), Err(RealError::Domain));
        let neg = LogBase::Surd { p: 1.into(), q: (-1).into(), r: 2.into() };
        assert_eq!(log_const(&neg, 10), Err(RealError::Domain));
    }

    #[test]
    fn floor_scaled_examples() {
        let l2 = log_const(&LogBase::int(2), 12).unwrap();
        assert_eq!(floor_scaled(&l2, &100.into()).unwrap(), BigInt::from(69));
        let l3 = log_const(&LogBase::int(3), 12).unwrap();
        assert_eq!(floor_scaled(&l3, &1000.into()).unwrap(), BigInt::from(1098));
        assert_eq!(floor_scaled(&BigFixed::zero(5), &pow10(101)).unwrap(), BigInt::zero());
    }

    #[test]
    fn floor_scaled_refuses_low_precision() {
        let l2 = log_const(&LogBase::int(2), 20).unwrap();
        assert_eq!(floor_scaled(&l2, &pow10(101)), Err(RealError::AmbiguousFloor));
    }

    #[test]
    fn surd_sign_cases() {
        assert_eq!(surd_sign(&BigInt::from(-2), &BigInt::from(1)), Sign::Plus);
        assert_eq!(surd_sign(&BigInt::from(-3), &BigInt::from(1)), Sign::Minus);
        assert_eq!(surd_sign(&BigInt::from(0), &BigInt::from(0)), Sign::NoSign);
    }

    #[test]
    fn arithmetic_brackets_truth() {
        let third = BigFixed::from_ratio(&1.into(), &3.into(), 30);
        let seventh = BigFixed::from_ratio(&1.into(), &7.into(), 30);
        let p = third.mul(&seventh);
        assert!(p.contains(&BigRational::new(1.into(), 21.into())));
        let q = third.div(&seventh).unwrap();
        assert!(q.contains(&BigRational::new(7.into(), 3.into())));
        let r = BigFixed::from_int(2, 30).sqrt();
        let lo = dec("1.414213562373095048801688724209");
        let hi = dec("1.414213562373095048801688724210");
        assert!(r.lower() <= hi && r.upper() >= lo);
    }

    #[test]
    fn decimal_literals_parse_exactly() {
        assert_eq!(parse_decimal("1.5e3"), BigRational::from_integer(1500.into()));
        assert_eq!(parse_decimal("-2.5"), BigRational::new((-5).into(), 2.into()));
        assert_eq!(parse_decimal("4.1e-16"), BigRational::new(41.into(), pow10(17)));
    }

    #[test]
    fn surd_log_of_alpha_power_minus_one() {
        // alpha^3 - 1 = 2 alpha, so log(alpha^3 - 1) = log 2 + log alpha
        let b = LogBase::Surd { p: 2.into(), q: 2.into(), r: 2.into() };
        let got = log_const(&b, 60).unwrap();
        let want = ln2(60).add(&ln_alpha(60));
        assert!(agree(&got, &want));
    }
}
