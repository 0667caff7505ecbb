//! Independent reference computations checked against the library.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pvaudit::model::parse_dataset;
use pvaudit::stats::{
    dataset_effects, derive_and_rank, loo_influence, normal_sf, pool_dl, Conversion, Effect, Scale,
};

// ---- normal tail ----------------------------------------------------------

/// erfc by the positive-term series `erf(x) = 2/sqrt(pi) e^{-x^2} sum 2^n x^{2n+1} / (2n+1)!!`
/// for small x, and a Lentz continued fraction for the tail.
fn erfc_oracle(x: f64) -> f64 {
    assert!(x >= 0.0);
    let pi = std::f64::consts::PI;
    if x < 2.0 {
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        while term > 1e-20 * sum {
            n += 1.0;
            term *= 2.0 * x * x / (2.0 * n + 1.0);
            sum += term;
        }
        1.0 - 2.0 / pi.sqrt() * (-x * x).exp() * sum
    } else {
        // erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
        let tiny = 1e-300;
        let mut f = x;
        let mut c = x;
        let mut d = 0.0;
        for k in 1..500 {
            let a = k as f64 / 2.0;
            d = x + a * d;
            d = if d.abs() < tiny { tiny } else { d };
            c = x + a / c;
            c = if c.abs() < tiny { tiny } else { c };
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-17 {
                break;
            }
        }
        (-x * x).exp() / pi.sqrt() / f
    }
}

fn sf_oracle(z: f64) -> f64 {
    if z >= 0.0 {
        0.5 * erfc_oracle(z / std::f64::consts::SQRT_2)
    } else {
        1.0 - sf_oracle(-z)
    }
}

/// Composite Simpson integration of the standard normal density over [z, z + 12].
fn sf_quadrature(z: f64) -> f64 {
    let n = 200_000;
    let h = 12.0 / n as f64;
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = phi(z) + phi(z + 12.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * phi(z + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn oracles_agree_with_each_other() {
    for z in [0.0, 0.5, 1.0, 1.959964, 2.5, 3.3, 5.1416] {
        let a = sf_oracle(z);
        let b = sf_quadrature(z);
        assert!((a - b).abs() / a < 1e-9, "z={z}: {a} vs {b}");
    }
}

#[test]
fn normal_sf_relative_error() {
    let mut z = -8.0;
    while z <= 8.0 {
        let got = normal_sf(z).unwrap();
        let want = sf_oracle(z);
        assert!((got - want).abs() / want <= 1e-12, "z={z}: {got} vs {want}");
        z += 0.01;
    }
}

#[test]
fn critical_tail() {
    let tail = normal_sf(1.959964).unwrap();
    assert!((tail - 0.025).abs() < 1e-9, "{tail}");
    assert!((sf_oracle(1.959964) - 0.025).abs() < 1e-9);
}

#[test]
fn smallest_table_p() {
    let p = 2.0 * normal_sf(5.1416).unwrap();
    assert!((p - 2.0 * sf_oracle(5.1416)).abs() / p < 1e-12);
    assert!((p - 2.72e-7).abs() / 2.72e-7 < 0.005);
}

// ---- DerSimonian–Laird ----------------------------------------------------

struct ExactPool {
    fixed_mean: BigRational,
    q: BigRational,
    tau2: BigRational,
    random_mean: BigRational,
    random_var: BigRational,
}

fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).unwrap()
}

fn exact_dl(effects: &[(f64, f64)]) -> ExactPool {
    let k = BigRational::from_integer(BigInt::from(effects.len()));
    let one = BigRational::from_integer(BigInt::from(1));
    let x: Vec<BigRational> = effects.iter().map(|e| exact(e.0)).collect();
    let v: Vec<BigRational> = effects.iter().map(|e| exact(e.1) * exact(e.1)).collect();
    let w: Vec<BigRational> = v.iter().map(|v| one.clone() / v).collect();
    let sw: BigRational = w.iter().cloned().fold(BigRational::zero(), |a, b| a + b);
    let sw2: BigRational = w.iter().map(|w| w * w).fold(BigRational::zero(), |a, b| a + b);
    let fixed_mean = w.iter().zip(&x).map(|(w, x)| w * x).fold(BigRational::zero(), |a, b| a + b) / &sw;
    let q = w
        .iter()
        .zip(&x)
        .map(|(w, x)| w * (x - &fixed_mean) * (x - &fixed_mean))
        .fold(BigRational::zero(), |a, b| a + b);
    let excess = &q - (&k - &one);
    let tau2 = if excess > BigRational::zero() {
        excess / (&sw - &sw2 / &sw)
    } else {
        BigRational::zero()
    };
    let ws: Vec<BigRational> = v.iter().map(|v| one.clone() / (v + &tau2)).collect();
    let sws = ws.iter().cloned().fold(BigRational::zero(), |a, b| a + b);
    let random_mean = ws.iter().zip(&x).map(|(w, x)| w * x).fold(BigRational::zero(), |a, b| a + b) / &sws;
    ExactPool {
        fixed_mean,
        q,
        tau2,
        random_mean,
        random_var: one / sws,
    }
}

fn close(got: f64, want: &BigRational, rel: f64) -> bool {
    let want = want.to_f64().unwrap();
    (got - want).abs() <= rel * want.abs().max(1e-300) || got == want
}

#[test]
fn dl_matches_exact_arithmetic() {
    let mut rng = ChaCha8Rng::seed_from_u64(20260101);
    for case in 0..100 {
        let k = rng.gen_range(2..=10);
        let effects: Vec<(f64, f64)> = (0..k)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.02..0.5)))
            .collect();
        let e: Vec<Effect> = effects.iter().map(|&(x, s)| Effect::new(x, s)).collect();
        let got = pool_dl(&e).unwrap();
        let want = exact_dl(&effects);
        assert!(close(got.fixed_mean, &want.fixed_mean, 1e-10), "case {case} fixed");
        assert!(close(got.q, &want.q, 1e-10), "case {case} q");
        assert!(close(got.tau2, &want.tau2, 1e-10), "case {case} tau2");
        assert!(close(got.random_mean, &want.random_mean, 1e-10), "case {case} mean");
        assert!(close(got.random_se * got.random_se, &want.random_var, 1e-10), "case {case} var");
    }
}

#[test]
fn two_study_case_exact() {
    let want = exact_dl(&[(0.0, 0.1), (1.0, 0.1)]);
    let got = pool_dl(&[Effect::new(0.0, 0.1), Effect::new(1.0, 0.1)]).unwrap();
    assert!(close(got.q, &want.q, 1e-12));
    assert!(close(got.tau2, &want.tau2, 1e-12));
    assert!(close(got.random_mean, &want.random_mean, 1e-12));
}

#[test]
fn homogeneous_tau_is_exactly_zero() {
    let got = pool_dl(&[Effect::new(0.5, 0.1); 3]).unwrap();
    assert_eq!(got.tau2, 0.0);
    assert!(exact_dl(&[(0.5, 0.1); 3]).tau2.is_zero());
}

/// Plain floating-point DL mean and standard error, written out independently
/// of the library. The 50-study exact-rational version is too slow.
fn dl_mean_f64(pairs: &[(f64, f64)]) -> (f64, f64) {
    let k = pairs.len() as f64;
    let w: Vec<f64> = pairs.iter().map(|p| 1.0 / (p.1 * p.1)).collect();
    let sw: f64 = w.iter().sum();
    let sw2: f64 = w.iter().map(|w| w * w).sum();
    let m: f64 = pairs.iter().zip(&w).map(|(p, w)| p.0 * w).sum::<f64>() / sw;
    let q: f64 = pairs.iter().zip(&w).map(|(p, w)| w * (p.0 - m).powi(2)).sum();
    let tau2 = ((q - (k - 1.0)) / (sw - sw2 / sw)).max(0.0);
    let ws: Vec<f64> = pairs.iter().map(|p| 1.0 / (p.1 * p.1 + tau2)).collect();
    let sws: f64 = ws.iter().sum();
    let mean = pairs.iter().zip(&ws).map(|(p, w)| p.0 * w).sum::<f64>() / sws;
    (mean, sws.powf(-0.5))
}

#[test]
fn leave_one_out_brute_force() {
    let ds = derive_and_rank(
        &parse_dataset(include_str!("../data/soy_ldl_trials.csv")).unwrap(),
        &Conversion::default(),
    )
    .unwrap();
    let effects = dataset_effects(&ds, Scale::Linear).unwrap();
    let pairs: Vec<(f64, f64)> = effects.iter().map(|e| (e.estimate, e.se)).collect();
    let (mean_all, se_all) = dl_mean_f64(&pairs);
    let got = loo_influence(&effects).unwrap();
    let mut brute = Vec::new();
    for i in 0..pairs.len() {
        let mut rest = pairs.clone();
        rest.remove(i);
        brute.push((mean_all - dl_mean_f64(&rest).0).abs() / se_all);
    }
    for (g, b) in got.iter().zip(&brute) {
        assert!((g - b).abs() < 1e-9, "{g} vs {b}");
    }
    let hori = ds.records.iter().position(|r| r.author == "Hori").unwrap();
    let mut order: Vec<usize> = (0..brute.len()).collect();
    order.sort_by(|&a, &b| brute[b].total_cmp(&brute[a]));
    assert!(order[..2].contains(&hori));
}
