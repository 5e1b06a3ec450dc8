//! Distributional checks of the encoder against independent references.

use grc_core::engine::{encode, node_randoms};
use grc_core::partition::{HeapIndex, SplitRule};
use grc_core::{gaussian_pair_for_targets, Distribution1D, DistributionPair};
use grc_testkit::{gaussian_pdf, HarshaRecursion};

/// Kolmogorov–Smirnov statistic of `xs` against `cdf`.
fn ks(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).max((i as f64 + 1.0) / n - c)
        })
        .fold(0.0, f64::max)
}

/// 0.1% critical value of the Kolmogorov distribution, scaled.
fn critical(n: usize) -> f64 {
    1.9495 / (n as f64).sqrt()
}

#[test]
fn samples_follow_the_target() {
    let pairs = [
        DistributionPair::new(Distribution1D::gaussian(1.0, 0.25).unwrap(), Distribution1D::standard_gaussian()).unwrap(),
        gaussian_pair_for_targets(2.0, 4.0).unwrap(),
    ];
    let n = 20_000;
    for pair in &pairs {
        for rule in SplitRule::ALL {
            let xs: Vec<f64> = (0..n as u64).map(|s| encode(pair, rule, s, None).unwrap().sample).collect();
            let d = ks(xs, |x| pair.target().cdf(x));
            assert!(d < critical(n), "{rule}: D = {d}");
        }
    }
}

#[test]
fn wrong_seed_breaks_the_target_law() {
    let pair = DistributionPair::new(Distribution1D::gaussian(1.0, 0.25).unwrap(), Distribution1D::standard_gaussian()).unwrap();
    let n = 20_000;
    let xs: Vec<f64> = (0..n as u64)
        .map(|s| {
            let r = encode(&pair, SplitRule::Dyadic, s, None).unwrap();
            grc_core::decode(pair.proposal(), SplitRule::Dyadic, s ^ 0xFFFF, &r.heap_index).unwrap()
        })
        .collect();
    assert!(ks(xs, |x| pair.target().cdf(x)) > critical(n));
}

#[test]
fn global_rule_matches_direct_recursion() {
    let pair = gaussian_pair_for_targets(2.0, 4.0).unwrap();
    let (q, p) = (*pair.target(), *pair.proposal());
    let r = |x: f64| gaussian_pdf(x, q.location(), q.scale()) / gaussian_pdf(x, p.location(), p.scale());
    let reference = HarshaRecursion::tabulate(r, |x| gaussian_pdf(x, p.location(), p.scale()), -12.0, 12.0, 40_000, 400);
    for seed in 0..200u64 {
        let got = encode(&pair, SplitRule::Global, seed, None).unwrap();
        let want = reference
            .run(r, |d| {
                let nr = node_randoms(seed, &HeapIndex::from_path(&vec![false; d]));
                (p.quantile(nr.u_sample), nr.u_accept)
            })
            .unwrap();
        assert_eq!(got.depth as usize, want.0, "seed {seed}");
        assert_eq!(got.sample, want.1);
    }
}
