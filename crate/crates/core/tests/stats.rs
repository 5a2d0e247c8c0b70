use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tokeval::stats::{
    bonferroni, chi2_sf, mcnemar, mcnemar_from_counts, pearson, McNemarMethod, MethodChoice,
    PairedPredictions,
};

/// Chi-square survival values from an external statistics package:
/// (x, degrees of freedom, P[X > x]).
const CHI2_TABLE: &[(f64, f64, f64)] = &[
    (0.1, 1.0, 0.7518296340458492),
    (1.0, 1.0, 0.31731050786291115),
    (3.841458820694124, 1.0, 0.04999999999999989),
    (7.5, 1.0, 0.0061698993205441645),
    (20.0, 1.0, 7.744216431044088e-06),
    (60.0, 1.0, 9.485737571073857e-15),
    (0.1, 2.0, 0.951229424500714),
    (1.0, 2.0, 0.6065306597126334),
    (3.841458820694124, 2.0, 0.1465000644860843),
    (7.5, 2.0, 0.023517745856009114),
    (20.0, 2.0, 4.539992976248486e-05),
    (1.0, 3.0, 0.8012519569012009),
    (3.841458820694124, 3.0, 0.27910046378359765),
    (7.5, 3.0, 0.0575584519726364),
    (20.0, 3.0, 0.00016974243555282632),
    (1.0, 5.0, 0.9625657732472964),
    (7.5, 5.0, 0.186029833602867),
    (20.0, 5.0, 0.0012497305630313773),
    (0.1, 10.0, 0.9999999975020487),
    (7.5, 10.0, 0.6775476361045434),
    (20.0, 10.0, 0.029252688076961124),
    (60.0, 10.0, 3.6243009520614924e-09),
    (20.0, 30.0, 0.9165415270653372),
    (60.0, 30.0, 0.0009206823961486636),
];

#[test]
fn chi2_matches_table() {
    for &(x, k, want) in CHI2_TABLE {
        let got = chi2_sf(x, k);
        assert!(
            (got - want).abs() < 1e-10,
            "sf({x}, {k}) = {got}, want {want}"
        );
    }
}

/// P[chi2_1 > x] = 2 * P[Z > sqrt(x)], integrated with composite Simpson.
fn chi2_1_by_quadrature(x: f64) -> f64 {
    let (a, b) = (x.sqrt(), 40.0);
    let n = 20_000;
    let h = (b - a) / n as f64;
    let phi = |z: f64| (-z * z / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = phi(a) + phi(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * phi(a + i as f64 * h);
    }
    2.0 * s * h / 3.0
}

#[test]
fn chi2_one_dof_matches_normal_tail_quadrature() {
    for x in [0.01, 0.5, 1.0, 2.0, 4.05, 6.0, 10.0, 15.0] {
        let want = chi2_1_by_quadrature(x);
        assert!((chi2_sf(x, 1.0) - want).abs() < 1e-10, "x = {x}");
    }
}

#[test]
fn mcnemar_fifteen_five_chi_square() {
    let r =
        mcnemar_from_counts(15, 5, MethodChoice::Fixed(McNemarMethod::Chi2Corrected), 1).unwrap();
    assert!((r.statistic - 4.05).abs() < 1e-12);
    assert!((r.p_raw - chi2_1_by_quadrature(4.05)).abs() < 1e-10);
    assert!((r.p_raw - 0.0442).abs() < 5e-4);
}

#[test]
fn mcnemar_fifteen_five_auto_uses_exact_test() {
    let r = mcnemar_from_counts(15, 5, MethodChoice::default(), 1).unwrap();
    assert_eq!(r.method, McNemarMethod::ExactBinomial);
    // 2 * sum_{k<=5} C(20, k) / 2^20
    assert!((r.p_raw - 43_400.0 / 1_048_576.0).abs() < 1e-15);
}

#[test]
fn mcnemar_degenerate_cases() {
    let r = mcnemar_from_counts(0, 0, MethodChoice::default(), 26).unwrap();
    assert_eq!((r.statistic, r.p_raw, r.p_adjusted), (0.0, 1.0, 1.0));
    for method in [McNemarMethod::Chi2Corrected, McNemarMethod::ExactBinomial] {
        let r = mcnemar_from_counts(40, 40, MethodChoice::Fixed(method), 1).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_raw, 1.0);
    }
}

#[test]
fn paired_predictions_validation() {
    assert!(PairedPredictions::new(vec![1], vec![1, 2], vec![1]).is_err());
    assert!(PairedPredictions::<u8>::new(vec![], vec![], vec![]).is_err());
    let pp = PairedPredictions::new(
        vec!["a", "b", "c"],
        vec!["a", "x", "c"],
        vec!["x", "b", "c"],
    )
    .unwrap();
    assert_eq!(pp.discordant(), (1, 1));
}

#[test]
fn bonferroni_examples() {
    assert!((bonferroni(0.001, 26).unwrap() - 0.026).abs() < 1e-15);
    assert_eq!(bonferroni(0.05, 26).unwrap(), 1.0);
    assert_eq!(bonferroni(0.0123, 1).unwrap(), 0.0123);
    assert!(bonferroni(1.5, 2).is_err());
    assert!(bonferroni(0.5, 0).is_err());
}

#[test]
fn pearson_examples() {
    let x = [1.0, 2.0, 3.0];
    assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-12);
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
    assert!((pearson(&x, &[2.0, 4.0, 6.1]).unwrap() - 0.99986).abs() < 1e-4);
    assert!(pearson(&x, &[1.0, 1.0, 1.0]).is_err());
    assert!(pearson(&[1.0], &[1.0]).is_err());
}

#[test]
fn random_symmetry_and_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..1000 {
        let b = rng.gen_range(0..200);
        let c = rng.gen_range(0..200);
        let choice = MethodChoice::default();
        let ab = mcnemar_from_counts(b, c, choice, 26).unwrap();
        let ba = mcnemar_from_counts(c, b, choice, 26).unwrap();
        assert_eq!(ab.p_raw, ba.p_raw);
        assert_eq!(ab.statistic, ba.statistic);
        let tie = mcnemar_from_counts(b, b, choice, 26).unwrap();
        assert_eq!(tie.p_raw, 1.0);
    }
}

proptest! {
    #[test]
    fn swapping_systems_keeps_p(
        rows in prop::collection::vec((0u8..3, 0u8..3, 0u8..3), 1..200)
    ) {
        let gold: Vec<u8> = rows.iter().map(|r| r.0).collect();
        let a: Vec<u8> = rows.iter().map(|r| r.1).collect();
        let b: Vec<u8> = rows.iter().map(|r| r.2).collect();
        let ab = mcnemar(&PairedPredictions::new(gold.clone(), a.clone(), b.clone()).unwrap(), MethodChoice::default(), 3).unwrap();
        let ba = mcnemar(&PairedPredictions::new(gold, b, a).unwrap(), MethodChoice::default(), 3).unwrap();
        prop_assert_eq!((ab.b, ab.c), (ba.c, ba.b));
        prop_assert_eq!(ab.p_raw, ba.p_raw);
        prop_assert!((0.0..=1.0).contains(&ab.p_adjusted));
        prop_assert!(ab.p_adjusted >= ab.p_raw);
    }

    #[test]
    fn pooling_seeds_adds_counts(
        seeds in prop::collection::vec(prop::collection::vec((0u8..2, 0u8..2, 0u8..2), 1..50), 1..5)
    ) {
        let mut pooled = (Vec::new(), Vec::new(), Vec::new());
        let (mut b_sum, mut c_sum) = (0, 0);
        for rows in &seeds {
            let g: Vec<u8> = rows.iter().map(|r| r.0).collect();
            let a: Vec<u8> = rows.iter().map(|r| r.1).collect();
            let b: Vec<u8> = rows.iter().map(|r| r.2).collect();
            let (db, dc) = PairedPredictions::new(g.clone(), a.clone(), b.clone()).unwrap().discordant();
            b_sum += db;
            c_sum += dc;
            pooled.0.extend(g);
            pooled.1.extend(a);
            pooled.2.extend(b);
        }
        let pp = PairedPredictions::new(pooled.0, pooled.1, pooled.2).unwrap();
        let direct = mcnemar(&pp, MethodChoice::default(), 1).unwrap();
        let summed = mcnemar_from_counts(b_sum, c_sum, MethodChoice::default(), 1).unwrap();
        prop_assert_eq!(direct, summed);
    }

    #[test]
    fn bonferroni_is_monotone(p in 0.0f64..=1.0, q in 0.0f64..=1.0, m in 1u64..100, k in 1u64..100) {
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        prop_assert!(bonferroni(lo, m).unwrap() <= bonferroni(hi, m).unwrap());
        let (m1, m2) = (m.min(k), m.max(k));
        prop_assert!(bonferroni(p, m1).unwrap() <= bonferroni(p, m2).unwrap());
        let v = bonferroni(p, m).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(v, (m as f64 * p).min(1.0));
    }

    #[test]
    fn pearson_affine_invariance(
        xs in prop::collection::vec(-100.0f64..100.0, 3..30),
        noise in prop::collection::vec(-100.0f64..100.0, 30),
        scale in 0.01f64..100.0,
        shift in -1000.0f64..1000.0,
    ) {
        let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, n)| x + n).collect();
        let Ok(r) = pearson(&xs, &ys) else { return Ok(()) };
        let xt: Vec<f64> = xs.iter().map(|x| scale * x + shift).collect();
        let yt: Vec<f64> = ys.iter().map(|y| y / scale - shift).collect();
        prop_assert!((pearson(&xt, &ys).unwrap() - r).abs() < 1e-12);
        prop_assert!((pearson(&xs, &yt).unwrap() - r).abs() < 1e-12);
        prop_assert!((pearson(&xs, &xs).unwrap() - 1.0).abs() < 1e-12);
    }
}
