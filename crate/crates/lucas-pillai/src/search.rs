//! Exhaustive searches over L_n − 2^x·3^y = c.
//!
//! The multi-representation sweep never materialises c. Each triple is reduced
//! to a 128-bit fingerprint (c mod two fixed primes), the fingerprint space is
//! cut into passes to bound memory, and only fingerprints reaching `k_min` hits
//! are re-verified with exact integers.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::quadring::{lucas, lucas_table};

/// (n, x, y)
pub type Rep = (u64, u32, u32);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SUnit {
    pub x: u32,
    pub y: u32,
    pub value: BigInt,
}

fn ser_big<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RepRecord {
    #[serde(serialize_with = "ser_big")]
    pub c: BigInt,
    pub reps: Vec<Rep>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sign {
    Pos,
    Neg,
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub passes: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { passes: 16, threads: None }
    }
}

/// All 2^x 3^y <= limit, ascending.
pub fn enumerate_sunits(limit: &BigInt) -> Vec<SUnit> {
    enumerate_box(u32::MAX, u32::MAX, Some(limit))
}

/// 2^x 3^y with x <= x_max, y <= y_max (and <= limit if given), ascending.
pub fn enumerate_box(x_max: u32, y_max: u32, limit: Option<&BigInt>) -> Vec<SUnit> {
    assert!(limit.is_some() || (x_max < u32::MAX && y_max < u32::MAX));
    let mut out = Vec::new();
    let mut p3 = BigInt::one();
    let mut y = 0u32;
    loop {
        if y > y_max || limit.is_some_and(|l| &p3 > l) {
            break;
        }
        let mut v = p3.clone();
        let mut x = 0u32;
        while x <= x_max && limit.map_or(true, |l| &v <= l) {
            out.push(SUnit { x, y, value: v.clone() });
            v <<= 1;
            x += 1;
        }
        p3 *= 3;
        y += 1;
    }
    out.sort_by(|a, b| a.value.cmp(&b.value));
    out
}

/// 3-smooth exponents of m, if m = 2^x 3^y.
pub fn smooth_exponents(m: &BigInt) -> Option<(u32, u32)> {
    if *m <= BigInt::zero() {
        return None;
    }
    let mut v = m.clone();
    let mut e = [0u32; 2];
    for (i, p) in [2u32, 3].iter().enumerate() {
        let pb = BigInt::from(*p);
        loop {
            let (q, r) = v.div_rem(&pb);
            if !r.is_zero() {
                break;
            }
            v = q;
            e[i] += 1;
        }
    }
    v.is_one().then_some((e[0], e[1]))
}

/// Solutions of L_n = 2^x 3^y with n <= n_max.
pub fn pure_power_solutions(n_max: u64) -> Vec<Rep> {
    lucas_table(n_max as usize)
        .iter()
        .enumerate()
        .filter_map(|(n, l)| smooth_exponents(l).map(|(x, y)| (n as u64, x, y)))
        .collect()
}

pub fn verify_representation(c: &BigInt, n: u64, x: u32, y: u32) -> bool {
    let s = (BigInt::one() << x) * BigInt::from(3u32).pow(y);
    lucas(n) - s == *c
}

const P1: u64 = (1u64 << 61) - 1;
const P2: u64 = 18_446_744_073_709_551_557; // 2^64 − 59

fn residue(v: &BigInt, p: u64) -> u64 {
    v.mod_floor(&BigInt::from(p)).to_u64().unwrap()
}

fn submod(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        (a as u128 + p as u128 - b as u128) as u64
    }
}

fn mix(mut z: u64) -> u64 {
    // splitmix64 finaliser
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Residue tables shared by every pass.
struct Sweep {
    sign: Sign,
    units: Vec<SUnit>,
    u1: Vec<u64>,
    u2: Vec<u64>,
    l1: Vec<u64>,
    l2: Vec<u64>,
    /// slice of `units` paired with each n
    ranges: Vec<(usize, usize)>,
}

impl Sweep {
    fn new(n_max: u64, x_max: u32, y_max: u32, sign: Sign) -> Self {
        let lucas = lucas_table(n_max as usize);
        let units = match sign {
            Sign::Pos => enumerate_box(x_max, y_max, lucas.iter().max()),
            Sign::Neg => enumerate_box(x_max, y_max, None),
        };
        let u1 = units.iter().map(|u| residue(&u.value, P1)).collect();
        let u2 = units.iter().map(|u| residue(&u.value, P2)).collect();
        let l1 = lucas.iter().map(|l| residue(l, P1)).collect();
        let l2 = lucas.iter().map(|l| residue(l, P2)).collect();
        let ranges = lucas
            .iter()
            .map(|l| match sign {
                Sign::Pos => (0, units.partition_point(|u| &u.value < l)),
                Sign::Neg => (units.partition_point(|u| &u.value <= l), units.len()),
            })
            .collect();
        Sweep { sign, units, u1, u2, l1, l2, ranges }
    }

    fn key(&self, n: usize, i: usize) -> u128 {
        let r1 = submod(self.l1[n], self.u1[i], P1);
        let r2 = submod(self.l2[n], self.u2[i], P2);
        ((r1 as u128) << 64) | r2 as u128
    }

    fn pass_of(key: u128, passes: usize) -> usize {
        (mix((key >> 64) as u64 ^ (key as u64).rotate_left(17)) % passes as u64) as usize
    }

    fn run_pass(&self, pass: usize, passes: usize, k_min: usize) -> Vec<RepRecord> {
        let chunks: Vec<Vec<u128>> = (0..self.ranges.len())
            .into_par_iter()
            .map(|n| {
                let (a, b) = self.ranges[n];
                (a..b).map(|i| self.key(n, i)).filter(|&k| Self::pass_of(k, passes) == pass).collect()
            })
            .collect();
        let total = chunks.iter().map(Vec::len).sum();
        let mut keys = Vec::with_capacity(total);
        for c in chunks {
            keys.extend(c);
        }
        keys.par_sort_unstable();
        let mut hot = HashSet::new();
        let mut i = 0;
        while i < keys.len() {
            let mut j = i + 1;
            while j < keys.len() && keys[j] == keys[i] {
                j += 1;
            }
            if j - i >= k_min {
                hot.insert(keys[i]);
            }
            i = j;
        }
        drop(keys);
        if hot.is_empty() {
            return Vec::new();
        }
        let hits: Vec<(usize, usize)> = (0..self.ranges.len())
            .into_par_iter()
            .flat_map_iter(|n| {
                let (a, b) = self.ranges[n];
                let hot = &hot;
                (a..b).filter(move |&i| hot.contains(&self.key(n, i))).map(move |i| (n, i))
            })
            .collect();
        let lucas = lucas_table(self.ranges.len() - 1);
        let mut groups: BTreeMap<BigInt, Vec<Rep>> = BTreeMap::new();
        for (n, i) in hits {
            let u = &self.units[i];
            let c = &lucas[n] - &u.value;
            debug_assert!(match self.sign {
                Sign::Pos => c > BigInt::zero(),
                Sign::Neg => c < BigInt::zero(),
            });
            groups.entry(c).or_default().push((n as u64, u.x, u.y));
        }
        finish(groups, k_min)
    }
}

fn finish(groups: BTreeMap<BigInt, Vec<Rep>>, k_min: usize) -> Vec<RepRecord> {
    groups
        .into_iter()
        .filter(|(_, r)| r.len() >= k_min)
        .map(|(c, mut reps)| {
            reps.sort();
            RepRecord { c, reps }
        })
        .collect()
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        None => f(),
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build().expect("thread pool").install(f),
    }
}

/// All c of the given sign with at least `k_min` representations in the box.
pub fn multi_rep_search(n_max: u64, x_max: u32, y_max: u32, k_min: usize, sign: Sign, opts: &SearchOptions) -> Vec<RepRecord> {
    assert!(k_min >= 1 && opts.passes >= 1);
    with_pool(opts.threads, || {
        let sweep = Sweep::new(n_max, x_max, y_max, sign);
        let mut out: Vec<RepRecord> = (0..opts.passes).flat_map(|p| sweep.run_pass(p, opts.passes, k_min)).collect();
        out.sort_by(|a, b| a.c.cmp(&b.c));
        out
    })
}

/// Reference triple loop with exact integers.
pub fn naive_search(n_max: u64, x_max: u32, y_max: u32, k_min: usize, sign: Sign) -> Vec<RepRecord> {
    let lucas = lucas_table(n_max as usize);
    let mut groups: BTreeMap<BigInt, Vec<Rep>> = BTreeMap::new();
    for (n, l) in lucas.iter().enumerate() {
        for x in 0..=x_max {
            for y in 0..=y_max {
                let c = l - (BigInt::one() << x) * BigInt::from(3u32).pow(y);
                let keep = match sign {
                    Sign::Pos => c > BigInt::zero(),
                    Sign::Neg => c < BigInt::zero(),
                };
                if keep {
                    groups.entry(c).or_default().push((n as u64, x, y));
                }
            }
        }
    }
    finish(groups, k_min)
}

/// Extends `candidates` (negative c) with representations whose n lies in
/// `n_range`, S-units restricted to x <= x_max, y <= y_max. Returns the records
/// that gained at least one representation and now have >= k_min.
pub fn crossover_search(candidates: &[RepRecord], n_range: RangeInclusive<u64>, x_max: u32, y_max: u32, k_min: usize) -> Vec<RepRecord> {
    if candidates.is_empty() || n_range.is_empty() {
        return Vec::new();
    }
    let by_key: HashMap<(u64, u64), Vec<usize>> = candidates.iter().enumerate().fold(HashMap::new(), |mut m, (i, r)| {
        m.entry((residue(&r.c, P1), residue(&r.c, P2))).or_default().push(i);
        m
    });
    let c_min = candidates.iter().map(|r| r.c.clone()).min().unwrap();
    let (lo, hi) = (*n_range.start(), *n_range.end());
    let lucas = lucas_table(hi as usize);
    // no S-unit above L_hi − c_min can pair with any n in range
    let units = enumerate_box(x_max, y_max, Some(&(&lucas[hi as usize] - &c_min)));
    let u1: Vec<u64> = units.iter().map(|u| residue(&u.value, P1)).collect();
    let u2: Vec<u64> = units.iter().map(|u| residue(&u.value, P2)).collect();
    let hits: Vec<(usize, Rep)> = (lo..=hi)
        .into_par_iter()
        .flat_map_iter(|n| {
            let l = &lucas[n as usize];
            // c = L_n − s in [c_min, −1]  ⇔  L_n < s <= L_n − c_min
            let a = units.partition_point(|u| &u.value <= l);
            let top = l - &c_min;
            let b = units.partition_point(|u| u.value <= top);
            let (r1, r2) = (residue(l, P1), residue(l, P2));
            let (units, u1, u2, by_key) = (&units, &u1, &u2, &by_key);
            (a..b).flat_map(move |i| {
                let key = (submod(r1, u1[i], P1), submod(r2, u2[i], P2));
                let exact = l - &units[i].value;
                by_key
                    .get(&key)
                    .into_iter()
                    .flatten()
                    .filter(move |&&j| candidates[j].c == exact)
                    .map(move |&j| (j, (n, units[i].x, units[i].y)))
                    .collect::<Vec<_>>()
            })
        })
        .collect();
    let mut extra: BTreeMap<usize, Vec<Rep>> = BTreeMap::new();
    for (j, rep) in hits {
        extra.entry(j).or_default().push(rep);
    }
    let mut out: Vec<RepRecord> = extra
        .into_iter()
        .filter_map(|(j, add)| {
            let mut reps = candidates[j].reps.clone();
            reps.extend(add);
            reps.sort();
            reps.dedup();
            (reps.len() >= k_min).then(|| RepRecord { c: candidates[j].c.clone(), reps })
        })
        .collect();
    out.sort_by(|a, b| a.c.cmp(&b.c));
    out
}

/// CSV rows (c, n, x, y) in canonical order.
pub fn csv_rows(records: &[RepRecord]) -> Vec<(String, u64, u32, u32)> {
    records.iter().flat_map(|r| r.reps.iter().map(move |&(n, x, y)| (r.c.to_string(), n, x, y))).collect()
}

/// One line per c in the display layout, e.g. `2 = L_2 - 2^0 3^0 = L_3 - 2^1 3^0`.
pub fn display_line(r: &RepRecord) -> String {
    let parts: Vec<String> = r.reps.iter().map(|(n, x, y)| format!("L_{} - 2^{} 3^{}", n, x, y)).collect();
    format!("{} = {}", r.c, parts.join(" = "))
}
