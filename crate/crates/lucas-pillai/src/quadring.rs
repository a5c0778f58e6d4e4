//! Integers of Q(sqrt 5) written as a + b·ω with ω² = ω + 1, and the Lucas sequence.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadInt {
    pub a: BigInt,
    pub b: BigInt,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unsupported prime {0}; only 2 and 3 are handled")]
pub struct UnsupportedPrime(pub u32);

impl QuadInt {
    pub fn new(a: impl Into<BigInt>, b: impl Into<BigInt>) -> Self {
        QuadInt { a: a.into(), b: b.into() }
    }

    pub fn from_int(a: impl Into<BigInt>) -> Self {
        QuadInt { a: a.into(), b: BigInt::zero() }
    }

    pub fn one() -> Self {
        Self::new(1, 0)
    }

    pub fn omega() -> Self {
        Self::new(0, 1)
    }

    /// α = ω.
    pub fn alpha() -> Self {
        Self::omega()
    }

    /// β = 1 − ω.
    pub fn beta() -> Self {
        Self::new(1, -1)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn conj(&self) -> Self {
        QuadInt { a: &self.a + &self.b, b: -&self.b }
    }

    /// N(a + bω) = a² + ab − b².
    pub fn norm(&self) -> BigInt {
        &self.a * &self.a + &self.a * &self.b - &self.b * &self.b
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        QuadInt { a: &self.a * k, b: &self.b * k }
    }

    /// Exact division by a rational integer, if it divides both coordinates.
    pub fn div_exact_int(&self, k: &BigInt) -> Option<Self> {
        let (qa, ra) = self.a.div_rem(k);
        let (qb, rb) = self.b.div_rem(k);
        (ra.is_zero() && rb.is_zero()).then_some(QuadInt { a: qa, b: qb })
    }

    /// Exact quotient `self / other` in the ring, if it exists.
    pub fn div_exact(&self, other: &Self) -> Option<Self> {
        let n = other.norm();
        if n.is_zero() {
            return None;
        }
        (self * &other.conj()).div_exact_int(&n)
    }

    /// The sign of the real embedding a + b(1+√5)/2, decided exactly.
    pub fn real_sign(&self) -> std::cmp::Ordering {
        // 2a + b + b√5
        let p: BigInt = &self.a * 2 + &self.b;
        let q = self.b.clone();
        let zero = BigInt::zero();
        match (p.cmp(&zero), q.cmp(&zero)) {
            (x, y) if x == y => x,
            (x, std::cmp::Ordering::Equal) => x,
            (std::cmp::Ordering::Equal, y) => y,
            (x, _) => match (&p * &p).cmp(&(BigInt::from(5) * &q * &q)) {
                std::cmp::Ordering::Greater => x,
                std::cmp::Ordering::Less => x.reverse(),
                std::cmp::Ordering::Equal => std::cmp::Ordering::Equal,
            },
        }
    }
}

impl<'a> Add<&'a QuadInt> for &'a QuadInt {
    type Output = QuadInt;
    fn add(self, o: &QuadInt) -> QuadInt {
        QuadInt { a: &self.a + &o.a, b: &self.b + &o.b }
    }
}

impl<'a> Sub<&'a QuadInt> for &'a QuadInt {
    type Output = QuadInt;
    fn sub(self, o: &QuadInt) -> QuadInt {
        QuadInt { a: &self.a - &o.a, b: &self.b - &o.b }
    }
}

impl<'a> Mul<&'a QuadInt> for &'a QuadInt {
    type Output = QuadInt;
    fn mul(self, o: &QuadInt) -> QuadInt {
        // (a + bω)(c + dω) = ac + bd + (ad + bc + bd)ω
        let bd = &self.b * &o.b;
        QuadInt { a: &self.a * &o.a + &bd, b: &self.a * &o.b + &self.b * &o.a + bd }
    }
}

impl Neg for QuadInt {
    type Output = QuadInt;
    fn neg(self) -> QuadInt {
        QuadInt { a: -self.a, b: -self.b }
    }
}

/// α^n; for negative n uses α^{-1} = ω − 1.
pub fn alpha_pow(n: u64) -> QuadInt {
    QuadInt::alpha().pow(n)
}

pub fn alpha_pow_signed(n: i64) -> QuadInt {
    if n >= 0 {
        alpha_pow(n as u64)
    } else {
        QuadInt::new(-1, 1).pow(n.unsigned_abs())
    }
}

/// (L_k, L_{k+1}) by fast doubling.
fn lucas_pair(n: u64) -> (BigInt, BigInt) {
    if n == 0 {
        return (BigInt::from(2), BigInt::one());
    }
    let (l, l1) = lucas_pair(n / 2);
    let k = n / 2;
    let sgn = if k % 2 == 0 { BigInt::one() } else { -BigInt::one() };
    // L_2k = L_k² − 2(−1)^k, L_2k+1 = L_k L_k+1 − (−1)^k
    let even = &l * &l - &sgn * 2;
    let odd = &l * &l1 - &sgn;
    if n % 2 == 0 {
        (even, odd)
    } else {
        let next = &even + &odd;
        (odd, next)
    }
}

pub fn lucas(n: u64) -> BigInt {
    lucas_pair(n).0
}

/// L_0..=L_n.
pub fn lucas_table(n: usize) -> Vec<BigInt> {
    let mut v = Vec::with_capacity(n + 1);
    v.push(BigInt::from(2));
    if n >= 1 {
        v.push(BigInt::one());
    }
    for i in 2..=n {
        let next = &v[i - 1] + &v[i - 2];
        v.push(next);
    }
    v
}

/// L_n mod m via fast doubling on residues.
pub fn lucas_mod(n: u64, m: &BigInt) -> BigInt {
    assert!(*m >= BigInt::from(2));
    fn pair(n: u64, m: &BigInt) -> (BigInt, BigInt) {
        if n == 0 {
            return (BigInt::from(2).mod_floor(m), BigInt::one().mod_floor(m));
        }
        let (l, l1) = pair(n / 2, m);
        let k = n / 2;
        let sgn: i32 = if k % 2 == 0 { 1 } else { -1 };
        let even = (&l * &l - BigInt::from(2 * sgn)).mod_floor(m);
        let odd = (&l * &l1 - BigInt::from(sgn)).mod_floor(m);
        if n % 2 == 0 {
            (even, odd)
        } else {
            let next = (&even + &odd).mod_floor(m);
            (odd, next)
        }
    }
    pair(n, m).0
}

/// L_n mod m for u64 moduli.
pub fn lucas_mod_u64(n: u64, m: u64) -> u64 {
    lucas_mod(n, &BigInt::from(m)).try_into().unwrap()
}

/// Period of (L_n mod p^{k+1}).
///
/// For p = 2 this is 3·2^k. For p = 3 the period is 8·3^k: already
/// mod 3 the sequence 2,1,0,1,1,2,0,2 has length 8.
pub fn lucas_period(p: u32, k: u32) -> Result<u64, UnsupportedPrime> {
    match p {
        2 => Ok(3 * (1u64 << k)),
        3 => Ok(8 * 3u64.pow(k)),
        _ => Err(UnsupportedPrime(p)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_squared() {
        assert_eq!(&QuadInt::omega() * &QuadInt::omega(), QuadInt::new(1, 1));
    }

    #[test]
    fn alpha_beta_relations() {
        let a = QuadInt::alpha();
        let b = QuadInt::beta();
        assert_eq!(&a * &b, QuadInt::new(-1, 0));
        assert_eq!(&a + &b, QuadInt::new(1, 0));
        assert_eq!(a.conj(), b);
    }

    #[test]
    fn lucas_values() {
        assert_eq!(lucas(0), 2.into());
        assert_eq!(lucas(1), 1.into());
        assert_eq!(lucas(10), 123.into());
        let t = lucas_table(60);
        for n in 0..=60 {
            assert_eq!(lucas(n as u64), t[n]);
        }
    }

    #[test]
    fn alpha_powers() {
        assert_eq!(alpha_pow(1), QuadInt::new(0, 1));
        assert_eq!(alpha_pow(2), QuadInt::new(1, 1));
        assert_eq!(alpha_pow(6), QuadInt::new(5, 8));
        assert_eq!(alpha_pow(6).norm(), 1.into());
        assert_eq!(&alpha_pow_signed(-3) * &alpha_pow(3), QuadInt::one());
    }

    #[test]
    fn lucas_mod_examples() {
        assert_eq!(lucas_mod(0, &5.into()), 2.into());
        assert_eq!(lucas_mod(10, &8.into()), 3.into());
        assert_eq!(lucas_mod(5 + 384, &256.into()), lucas_mod(5, &256.into()));
    }

    #[test]
    fn periods() {
        assert_eq!(lucas_period(2, 7).unwrap(), 384);
        assert_eq!(lucas_period(2, 0).unwrap(), 3);
        assert_eq!(lucas_period(3, 1).unwrap(), 24);
        assert!(lucas_period(5, 1).is_err());
        // 12 is not a period mod 9
        let m = BigInt::from(9);
        assert!((0..40u64).any(|n| lucas_mod(n + 12, &m) != lucas_mod(n, &m)));
    }

    #[test]
    fn exact_division() {
        let x = &alpha_pow(17) - &QuadInt::one();
        let y = &x * &QuadInt::new(3, 7);
        assert_eq!(y.div_exact(&x), Some(QuadInt::new(3, 7)));
        assert_eq!(QuadInt::new(3, 1).div_exact(&QuadInt::new(2, 0)), None);
    }

    #[test]
    fn real_sign() {
        use std::cmp::Ordering::*;
        assert_eq!(QuadInt::beta().real_sign(), Less);
        assert_eq!(QuadInt::alpha().real_sign(), Greater);
        assert_eq!(QuadInt::new(0, 0).real_sign(), Equal);
        assert_eq!(QuadInt::new(-1, 1).real_sign(), Greater);
    }
}
