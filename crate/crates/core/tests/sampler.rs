mod common;

use common::{chi_square, ks_critical, ks_statistic};
use psskit::approx::{fit_points, outer_pss, ApproxSettings, SemialgSet};
use psskit::fixtures;
use psskit::moments::BoundingBox;
use psskit::poly::MultiPoly;
use psskit::rng::stream_rng;
use psskit::sampler::*;

fn draws(pd: &PolyDensity, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, 0);
    (0..n).map(|_| pd.draw(&mut rng).unwrap()).collect()
}

#[test]
fn constant_density_is_uniform_per_axis() {
    let b = BoundingBox::new(vec![0.0, -1.0], vec![1.0, 2.0]).unwrap();
    let pd = PolyDensity::trusted(MultiPoly::constant(2, 1.0), b.clone()).unwrap();
    let xs = draws(&pd, 10_000, 11);
    for j in 0..2 {
        let (lo, hi) = (b.lo()[j], b.hi()[j]);
        let col: Vec<f64> = xs.iter().map(|x| x[j]).collect();
        let d = ks_statistic(&col, |t| (t - lo) / (hi - lo));
        assert!(d < ks_critical(col.len(), 0.01), "axis {j}: {d}");
    }
}

#[test]
fn linear_density_square_is_uniform() {
    let p = MultiPoly::from_terms(1, [(vec![1], 2.0)]).unwrap();
    let pd = PolyDensity::trusted(p, BoundingBox::new(vec![0.0], vec![1.0]).unwrap()).unwrap();
    let sq: Vec<f64> = draws(&pd, 10_000, 12).iter().map(|x| x[0] * x[0]).collect();
    let d = ks_statistic(&sq, |t| t);
    assert!(d < ks_critical(sq.len(), 0.01), "{d}");
}

#[test]
fn product_density_first_marginal() {
    // p = (1 + x1)(1 + x2^2) on [0,1]^2: x1 has density (1 + x1) / 1.5
    let p = MultiPoly::from_terms(
        2,
        [(vec![0, 0], 1.0), (vec![1, 0], 1.0), (vec![0, 2], 1.0), (vec![1, 2], 1.0)],
    )
    .unwrap();
    let pd = PolyDensity::trusted(p, BoundingBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()).unwrap();
    let n = 10_000;
    let xs = draws(&pd, n, 13);
    let cdf = |t: f64| (t + t * t / 2.0) / 1.5;
    let bins = 20;
    let mut obs = vec![0.0; bins];
    for x in &xs {
        obs[((x[0] * bins as f64) as usize).min(bins - 1)] += 1.0;
    }
    let exp: Vec<f64> = (0..bins)
        .map(|k| n as f64 * (cdf((k + 1) as f64 / bins as f64) - cdf(k as f64 / bins as f64)))
        .collect();
    let (stat, crit) = chi_square(&obs, &exp, 0.01);
    assert!(stat < crit, "{stat} >= {crit}");
    // second coordinate: density (1 + x2^2) / (4/3)
    let col: Vec<f64> = xs.iter().map(|x| x[1]).collect();
    let d = ks_statistic(&col, |t| (t + t * t * t / 3.0) * 0.75);
    assert!(d < ks_critical(n, 0.01), "{d}");
}

#[test]
fn one_d_rejection_sampler() {
    let k = fixtures::one_d();
    let r = outer_pss(&k, &ApproxSettings::degree(6)).unwrap();
    let pd = PolyDensity::from_result(&r).unwrap();
    let batch = uniform_sample(&k, &pd, 4000, 7).unwrap();
    assert_eq!(batch.samples.len(), 4000);
    assert!(batch.samples.iter().all(|x| k.contains(x)));
    let (a, b) = (1.0 + 0.5f64.sqrt(), 3.0);
    let col: Vec<f64> = batch.samples.iter().map(|x| x[0]).collect();
    let d = ks_statistic(&col, |t| ((t - a) / (b - a)).clamp(0.0, 1.0));
    assert!(d < ks_critical(col.len(), 0.01), "{d}");
    assert!(batch.rejected_inside > 0);
    assert_eq!(batch.proposals, batch.accepted + batch.rejected_inside + batch.rejected_outside);

    let gamma = acceptance_rate(&k, &pd, |_| b - a);
    let n = batch.proposals as f64;
    let sigma = (gamma * (1.0 - gamma) / n).sqrt();
    assert!((batch.empirical_rate - gamma).abs() < 3.0 * sigma, "{} vs {gamma}", batch.empirical_rate);
    assert_eq!(batch, uniform_sample(&k, &pd, 4000, 7).unwrap());
}

#[test]
fn fit_results_are_not_densities() {
    let b = BoundingBox::symmetric_unit(2);
    let r = fit_points(&[vec![0.0, 0.0]], &b, 5, &ApproxSettings::degree(2)).unwrap();
    assert!(PolyDensity::from_result(&r).is_err());
}

#[test]
fn acceptance_rate_grows_with_degree_on_disk() {
    let k = fixtures::unit_disk();
    let rates: Vec<f64> = [2, 4, 6]
        .iter()
        .map(|&d| {
            let r = outer_pss(&k, &ApproxSettings::degree(d)).unwrap();
            acceptance_rate(&k, &PolyDensity::from_result(&r).unwrap(), |_| std::f64::consts::PI)
        })
        .collect();
    assert!(rates[0] <= rates[1] + 1e-9 && rates[1] <= rates[2] + 1e-9, "{rates:?}");
}

#[test]
fn trivial_set_rate_is_one() {
    let b = BoundingBox::symmetric_unit(1);
    let k = SemialgSet::new(vec![], b.clone()).unwrap();
    let r = outer_pss(&k, &ApproxSettings::degree(2)).unwrap();
    let pd = PolyDensity::from_result(&r).unwrap();
    assert!((acceptance_rate(&k, &pd, |k| k.bbox().volume()) - 1.0).abs() < 1e-6);
}
