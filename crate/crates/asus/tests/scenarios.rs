use asus::harness::generate_replication;
use asus::sim::{Family, ScenarioSpec};

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0, 0usize);
    for x in v {
        s += x;
        c += 1;
    }
    s / c as f64
}

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a.iter().copied()), mean(b.iter().copied()));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[test]
fn replications_are_reproducible_and_distinct() {
    let spec = ScenarioSpec::new(Family::OneSampleS2, 3)
        .with_n(1000)
        .with_m(20);
    let a = generate_replication(&spec, 7).unwrap();
    assert_eq!(a, generate_replication(&spec, 7).unwrap());
    assert_ne!(a.y, generate_replication(&spec, 8).unwrap().y);
}

#[test]
fn one_sample_design() {
    let spec = ScenarioSpec::new(Family::OneSampleS1, 1).with_m(50);
    let sc = generate_replication(&spec, 0).unwrap();
    assert_eq!(sc.n(), 5000);
    assert_eq!(sc.aux.len(), 4);
    assert!(sc.xi[..50].iter().all(|&v| (6.0..7.0).contains(&v)));
    assert!(sc.xi[50..250].iter().all(|&v| (2.0..3.0).contains(&v)));
    assert!(sc.xi[250..].iter().all(|&v| v == 0.0));
    // bumps at rate n^{-1/2}: about 67 among the 4750 nulls
    let bumps = sc.theta[250..].iter().filter(|&&v| v != 0.0).count();
    assert!((40..100).contains(&bumps), "{bumps}");
    let residual: Vec<f64> = sc.y.iter().zip(&sc.theta).map(|(y, t)| y - t).collect();
    let var = mean(residual.iter().map(|r| r * r));
    assert!((var - 1.0).abs() < 0.06, "{var}");
    // chi-square(10) means concentrate at 10 on the nulls
    let s2 = mean(sc.aux[1][250..].iter().copied());
    assert!((s2 - 10.0).abs() < 0.1, "{s2}");
}

#[test]
fn two_sample_s1_primary_and_aux_are_uncorrelated() {
    let spec = ScenarioSpec::new(Family::TwoSampleS1, 2).with_n(40_000);
    let sc = generate_replication(&spec, 0).unwrap();
    assert!(sc.sigma.iter().all(|&s| (s - 2f64.sqrt()).abs() < 1e-15));
    let nulls: Vec<usize> = (0..sc.n()).filter(|&i| sc.xi[i] == 0.0).collect();
    let y: Vec<f64> = nulls.iter().map(|&i| sc.y[i]).collect();
    let y2: Vec<f64> = y.iter().map(|v| v * v).collect();
    let s: Vec<f64> = nulls.iter().map(|&i| sc.aux[0][i]).collect();
    // |r| of independent samples is about n^{-1/2} ~ 0.005
    assert!(corr(&y, &s).abs() < 0.03);
    assert!(corr(&y2, &s).abs() < 0.03);
}

#[test]
fn two_sample_signal_rates() {
    let n = 5000usize;
    let spec = ScenarioSpec::new(Family::TwoSampleS2, 4);
    let sc = generate_replication(&spec, 0).unwrap();
    let signals = sc.xi.iter().filter(|&&v| v != 0.0).count() as f64;
    let p1 = (n as f64).powf(-0.6);
    let p2 = (n as f64).powf(-0.3);
    let expected = n as f64 * (1.0 - (1.0 - p1) * (1.0 - p2));
    assert!(
        (signals - expected).abs() < 4.0 * expected.sqrt(),
        "{signals} vs {expected}"
    );
    assert!(sc
        .sigma
        .iter()
        .all(|&s| s > 0.2f64.sqrt() - 1e-12 && s < 2f64.sqrt()));
}

#[test]
fn asymptotic_blocks_and_aux_separation() {
    let spec = ScenarioSpec::new(Family::AsymptoticS1, 6);
    let sc = generate_replication(&spec, 0).unwrap();
    assert_eq!(sc.xi.iter().filter(|&&v| v != 0.0).count(), 250);
    assert_eq!(sc.aux.len(), 2);
    let signal_mean = |s: &[f64]| mean((0..250).map(|i| s[i]));
    let null_mean = |s: &[f64]| mean((250..5000).map(|i| s[i]));
    let gaps: Vec<f64> = sc
        .aux
        .iter()
        .map(|s| null_mean(s) - signal_mean(s))
        .collect();
    assert!(gaps[0] > 0.0 && gaps[1] > gaps[0], "{gaps:?}");

    let dense = generate_replication(&ScenarioSpec::new(Family::AsymptoticS2, 6), 0).unwrap();
    assert_eq!(dense.xi.iter().filter(|&&v| v != 0.0).count(), 1000);
    assert!(dense
        .sigma
        .iter()
        .all(|&s| (0.1f64.sqrt()..=1.0).contains(&s)));
}

#[test]
fn toy_design() {
    let sc = generate_replication(&ScenarioSpec::new(Family::Toy, 8), 0).unwrap();
    assert_eq!(sc.n(), 10_000);
    assert!(sc.sigma.iter().all(|&s| s == 0.5f64.sqrt()));
    let signals = sc.theta.iter().filter(|&&v| v != 0.0).count();
    assert_eq!(signals, 4000);
    assert!(sc.xi.iter().all(|&v| v == 0.0 || v == 1.0));
}
