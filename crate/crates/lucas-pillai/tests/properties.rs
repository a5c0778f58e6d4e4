use std::collections::{HashMap, HashSet};
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

use lucas_pillai::padic::{
    exception_residues, forced_valuation, lift_poly, log_pair, nu_alpha_shift, nu_lucas_gap, nu_quad,
    padic_exp, padic_log, screen_d, screen_period, PadicQuad, Val,
};
use lucas_pillai::pipeline::Config;
use lucas_pillai::quadring::{alpha_pow, QuadInt};
use lucas_pillai::reduction::{
    determinant, is_lll_reduced, lattice_lower_bound, lll_reduce, solve_coords, IntegerLattice, ReductionError,
};
use lucas_pillai::search::{multi_rep_search, naive_search, verify_representation, SearchOptions, Sign};

fn norm_sq(v: &[BigInt]) -> BigInt {
    v.iter().map(|x| x * x).sum()
}

fn cols(raw: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    raw.iter().map(|c| c.iter().map(|&x| BigInt::from(x)).collect()).collect()
}

fn basis_strategy(max_dim: usize, bound: i64) -> impl Strategy<Value = Vec<Vec<i64>>> {
    (2..=max_dim).prop_flat_map(move |k| prop::collection::vec(prop::collection::vec(-bound..=bound, k), k))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lll_output_is_reduced_basis_of_same_lattice(raw in basis_strategy(4, 10_000)) {
        let b = cols(&raw);
        let det = determinant(&b);
        prop_assume!(!det.is_zero());
        let (red, g) = lll_reduce(&IntegerLattice { basis: b.clone() }).unwrap();
        let delta = BigRational::new(3.into(), 4.into());
        prop_assert!(is_lll_reduced(&g, &delta));
        prop_assert_eq!(determinant(&red.basis).abs(), det.abs());
        // every reduced vector has integral coordinates in the original basis
        for v in &red.basis {
            let z = solve_coords(&b, v).unwrap();
            prop_assert!(z.iter().all(|c| c.is_integer()));
        }
        // ‖b1‖² <= 2^{k−1} ‖v‖² for every nonzero lattice vector; test on the input vectors
        let k = b.len() as u32;
        let b1 = norm_sq(&red.basis[0]);
        for v in &b {
            prop_assert!(&b1 <= &(norm_sq(v) << (k - 1)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn lattice_lower_bound_is_sound(raw in prop::collection::vec(prop::collection::vec(-1_000_000i64..=1_000_000, 3), 3),
                                    target in prop::collection::vec(-1_000_000i64..=1_000_000, 3)) {
        let b = cols(&raw);
        prop_assume!(!determinant(&b).is_zero());
        let v: Vec<BigInt> = target.iter().map(|&x| BigInt::from(x)).collect();
        let (red, g) = lll_reduce(&IntegerLattice { basis: b }).unwrap();
        let lb = match lattice_lower_bound(&red, &g, &v) {
            Err(ReductionError::Degenerate) => return Err(TestCaseError::reject("degenerate")),
            r => r.unwrap(),
        };
        let r: Vec<Vec<i128>> = raw.iter().map(|c| c.iter().map(|&x| x as i128).collect()).collect();
        let t: Vec<i128> = target.iter().map(|&x| x as i128).collect();
        let mut best: Option<i128> = None;
        for k0 in -40i128..=40 {
            for k1 in -40i128..=40 {
                for k2 in -40i128..=40 {
                    let mut s = 0i128;
                    for row in 0..3 {
                        let w = k0 * r[0][row] + k1 * r[1][row] + k2 * r[2][row] - t[row];
                        s += w * w;
                    }
                    if s > 0 && best.map_or(true, |b| s < b) {
                        best = Some(s);
                    }
                }
            }
        }
        let best = BigRational::from_integer(BigInt::from(best.unwrap()));
        prop_assert!(lb.c2_sq <= best, "c2² = {} exceeds a distance² {}", lb.c2_sq, best);
    }
}

fn unit_part(a: i64, b: i64, p: u32) -> (BigInt, BigInt) {
    // make a + bω a p-adic unit by forcing a ≢ 0 mod p
    let a = if a.rem_euclid(p as i64) == 0 { a + 1 } else { a };
    (BigInt::from(a), BigInt::from(b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn exp_log_roundtrip(p in prop::sample::select(vec![2u32, 3]), a in -1_000_000i64..1_000_000, b in -1_000_000i64..1_000_000, extra in 0u32..6) {
        const K: u32 = 64;
        let s = if p == 2 { 2 } else { 1 } + extra;
        let ps = BigInt::from(p).pow(s);
        let xi = PadicQuad::new(p, K, BigInt::one() + &ps * a, &ps * b);
        let l = padic_log(&xi, K).unwrap();
        let back = padic_exp(&l, K).unwrap();
        prop_assert_eq!(back.reduce(K - 8), xi.reduce(K - 8));
        let y = PadicQuad::new(p, K, &ps * a, &ps * b);
        let again = padic_log(&padic_exp(&y, K).unwrap(), K).unwrap();
        prop_assert_eq!(again.reduce(K - 8), y.reduce(K - 8));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn log_preserves_valuation(p in prop::sample::select(vec![2u32, 3]), a in -1_000_000i64..1_000_000, b in -1_000_000i64..1_000_000, v in 0u32..20) {
        let (ua, ub) = unit_part(a, b, p);
        let s = if p == 2 { 2 } else { 1 } + v;
        let ps = BigInt::from(p).pow(s);
        let xi = PadicQuad::new(p, 96, BigInt::one() + &ps * ua, &ps * ub);
        prop_assert_eq!(xi.sub(&PadicQuad::one(p, 96)).valuation(), Val::Fin(s as i64));
        prop_assert_eq!(padic_log(&xi, 96).unwrap().valuation(), Val::Fin(s as i64));
    }

    #[test]
    fn closed_form_shift_valuation(x in 0u64..=5000, p in prop::sample::select(vec![2u32, 3]), plus in any::<bool>()) {
        let sign: i8 = if plus { 1 } else { -1 };
        let xi = &alpha_pow(x) + &QuadInt::from_int(sign as i64);
        prop_assert_eq!(nu_alpha_shift(x, sign, p).unwrap(), nu_quad(&xi, p).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn search_agrees_with_naive(n_max in 5u64..=60, x_max in 0u32..=40, y_max in 0u32..=40, k_min in 1usize..=3, neg in any::<bool>()) {
        let sign = if neg { Sign::Neg } else { Sign::Pos };
        let fast = multi_rep_search(n_max, x_max, y_max, k_min, sign, &SearchOptions::default());
        let slow = naive_search(n_max, x_max, y_max, k_min, sign);
        prop_assert_eq!(&fast, &slow);
        for r in &fast {
            prop_assert_eq!(r.c.is_negative(), neg);
            prop_assert!(r.reps.len() >= k_min);
            for &(n, x, y) in &r.reps {
                prop_assert!(n <= n_max && x <= x_max && y <= y_max);
                prop_assert!(verify_representation(&r.c, n, x, y));
            }
        }
    }
}

#[test]
fn search_is_deterministic_across_partitions() {
    let reference = multi_rep_search(200, 90, 60, 2, Sign::Pos, &SearchOptions { passes: 1, threads: Some(1) });
    for (passes, threads) in [(3, Some(2)), (16, Some(4)), (7, None)] {
        for sign in [Sign::Pos, Sign::Neg] {
            let base = if sign == Sign::Pos {
                reference.clone()
            } else {
                multi_rep_search(200, 90, 60, 2, sign, &SearchOptions { passes: 1, threads: Some(1) })
            };
            assert_eq!(multi_rep_search(200, 90, 60, 2, sign, &SearchOptions { passes, threads }), base, "passes {passes} threads {threads:?}");
        }
    }
}

/// Every n <= 10^6 with p^8 | L_{n+d} − L_n lies in a screened residue class, and
/// its exact valuation is the one forced at the leaf its digits reach.
#[test]
fn hensel_leaves_predict_exact_valuations() {
    const N: u64 = 1_000_000;
    const T: u32 = 8;
    let mut cases: Vec<(u32, u64)> = screen_d(2, 3..200, T).unwrap().into_iter().take(3).map(|d| (2, d)).collect();
    cases.extend(screen_d(3, 3..200, T).unwrap().into_iter().take(2).map(|d| (3, d)));
    assert_eq!(cases.len(), 5);
    for (p, d) in cases {
        let lp = log_pair(p, T, 128).unwrap();
        let period = screen_period(p, T).unwrap();
        let residues: HashSet<u64> = exception_residues(p, d, T).unwrap().into_iter().collect();
        let m = (p as u64).pow(T);
        let mut l = vec![2 % m, 1 % m];
        for i in 2..=(N + d) as usize {
            l.push((l[i - 1] + l[i - 2]) % m);
        }
        let mut polys = HashMap::new();
        let mut hits = 0;
        for n in 0..=N {
            if l[(n + d) as usize] != l[n as usize] {
                continue;
            }
            let n0 = n % period;
            assert!(residues.contains(&n0), "p {p} d {d}: n = {n} escaped the screen");
            let poly = polys.entry(n0).or_insert_with(|| lift_poly(&lp, d, n0, period));
            let (_, v) = forced_valuation(poly, &BigInt::from(n / period)).unwrap();
            assert_eq!(nu_lucas_gap(p, n, d, 128), v, "p {p} d {d} n {n}");
            hits += 1;
        }
        assert!(hits > 0, "p {p} d {d}: no exceptional n below 10^6");
    }
}

#[test]
fn shipped_config_matches_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/default.conf");
    assert_eq!(Config::load(&path).unwrap(), Config::default());
}
