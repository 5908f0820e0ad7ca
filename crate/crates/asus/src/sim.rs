//! Scenario generators for the simulation studies.
//!
//! Every generator draws from the caller's RNG in a fixed order, so a
//! scenario is a pure function of its spec and the RNG state.

use std::fmt;
use std::str::FromStr;

use asus_core::DataBatch;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, LogNormal, Normal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{AsusError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    OneSampleS1,
    OneSampleS2,
    TwoSampleS1,
    TwoSampleS2,
    AsymptoticS1,
    AsymptoticS2,
    Toy,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::OneSampleS1,
        Family::OneSampleS2,
        Family::TwoSampleS1,
        Family::TwoSampleS2,
        Family::AsymptoticS1,
        Family::AsymptoticS2,
        Family::Toy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::OneSampleS1 => "one-sample-s1",
            Family::OneSampleS2 => "one-sample-s2",
            Family::TwoSampleS1 => "two-sample-s1",
            Family::TwoSampleS2 => "two-sample-s2",
            Family::AsymptoticS1 => "asymptotic-s1",
            Family::AsymptoticS2 => "asymptotic-s2",
            Family::Toy => "toy",
        }
    }

    pub fn default_n(self) -> usize {
        match self {
            Family::Toy => 10_000,
            _ => 5000,
        }
    }

    /// Default number of auxiliary samples averaged, if the family uses one.
    pub fn default_m(self) -> Option<usize> {
        match self {
            Family::OneSampleS1 | Family::OneSampleS2 => Some(200),
            Family::AsymptoticS1 | Family::AsymptoticS2 => Some(50),
            _ => None,
        }
    }

    /// Number of auxiliary sequences the generator emits.
    pub fn aux_variants(self) -> usize {
        match self {
            Family::OneSampleS1 | Family::OneSampleS2 => 4,
            Family::AsymptoticS1 | Family::AsymptoticS2 => 2,
            _ => 1,
        }
    }

    /// Estimators reported for the family when none are requested.
    pub fn default_estimators(self) -> Vec<String> {
        let mut out = vec![String::from("or")];
        let v = self.aux_variants();
        if v == 1 {
            out.push("asus".into());
            if self != Family::Toy {
                out.push("auxscr".into());
            }
        } else {
            out.extend((1..=v).map(|j| format!("asus.{j}")));
            out.extend((1..=v).map(|j| format!("auxscr.{j}")));
        }
        out.push("sureshrink".into());
        if self != Family::Toy {
            out.push("ejs".into());
        }
        out
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = AsusError;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| AsusError::Spec(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub family: Family,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Auxiliary sequence used by the unsuffixed `asus`/`auxscr`/`ol` labels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux_variant: Option<usize>,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(family: Family, seed: u64) -> Self {
        Self {
            family,
            n: family.default_n(),
            m: family.default_m(),
            aux_variant: None,
            seed,
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    pub fn m_or_default(&self) -> Option<usize> {
        self.m.or(self.family.default_m())
    }

    pub fn variant(&self) -> usize {
        self.aux_variant.unwrap_or(1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(AsusError::Spec(msg));
        let min_n = match self.family {
            Family::TwoSampleS1 | Family::TwoSampleS2 | Family::Toy => 4,
            _ => 20,
        };
        if self.n < min_n {
            return bad(format!("{} needs n >= {min_n}", self.family));
        }
        match self.family {
            Family::OneSampleS1 | Family::OneSampleS2 => {
                let m = self.m_or_default().unwrap_or(0);
                if m < 10 {
                    return bad(format!("{} needs m >= 10", self.family));
                }
                let signals = if self.family == Family::OneSampleS1 {
                    250
                } else {
                    1000
                };
                if self.n < signals {
                    return bad(format!("{} needs n >= {signals}", self.family));
                }
            }
            Family::AsymptoticS1 | Family::AsymptoticS2 => {
                if self.m_or_default().unwrap_or(0) == 0 {
                    return bad(format!("{} needs m >= 1", self.family));
                }
            }
            _ => {
                if self.m.is_some() {
                    return bad(format!("{} takes no m", self.family));
                }
            }
        }
        if let Some(v) = self.aux_variant {
            if v == 0 || v > self.family.aux_variants() {
                return bad(format!(
                    "{} has auxiliary variants 1..={}",
                    self.family,
                    self.family.aux_variants()
                ));
            }
        }
        Ok(())
    }
}

/// One simulated instance: truth, latent side information, the primary
/// statistics and every auxiliary sequence the design defines.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub theta: Vec<f64>,
    pub xi: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Vec<f64>,
    /// `aux[j - 1]` is auxiliary variant `j`.
    pub aux: Vec<Vec<f64>>,
}

impl Scenario {
    pub fn generate<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let m = spec.m_or_default();
        Ok(match spec.family {
            Family::OneSampleS1 => one_sample(spec.n, m.unwrap_or(200), &ONE_SAMPLE_S1, rng),
            Family::OneSampleS2 => one_sample(spec.n, m.unwrap_or(200), &ONE_SAMPLE_S2, rng),
            Family::TwoSampleS1 => two_sample(spec.n, false, rng),
            Family::TwoSampleS2 => two_sample(spec.n, true, rng),
            Family::AsymptoticS1 => asymptotic(spec.n, m.unwrap_or(50), false, rng),
            Family::AsymptoticS2 => asymptotic(spec.n, m.unwrap_or(50), true, rng),
            Family::Toy => toy(spec.n, rng),
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Batch with auxiliary variant `variant` (1-based), carrying `theta`
    /// and `xi`.
    pub fn batch(&self, variant: usize) -> Result<DataBatch> {
        let s = self
            .aux
            .get(variant.wrapping_sub(1))
            .ok_or_else(|| AsusError::Spec(format!("no auxiliary variant {variant}")))?;
        Ok(
            DataBatch::new(self.y.clone(), self.sigma.clone(), s.clone())?
                .with_theta(self.theta.clone())?
                .with_xi(self.xi.clone())?,
        )
    }
}

/// Block layout of the latent means: `(count, lo, hi)` uniform blocks
/// followed by zeros.
struct Blocks {
    blocks: [(usize, f64, f64); 2],
}

const ONE_SAMPLE_S1: Blocks = Blocks {
    blocks: [(50, 6.0, 7.0), (200, 2.0, 3.0)],
};

const ONE_SAMPLE_S2: Blocks = Blocks {
    blocks: [(200, 4.0, 8.0), (800, 1.0, 3.0)],
};

fn latent_blocks<R: Rng + ?Sized>(n: usize, blocks: &[(usize, f64, f64)], rng: &mut R) -> Vec<f64> {
    let mut xi = Vec::with_capacity(n);
    for &(count, lo, hi) in blocks {
        xi.extend((0..count).map(|_| rng.random_range(lo..hi)));
    }
    xi.resize(n, 0.0);
    xi
}

fn normal(mean: f64, sd: f64) -> Normal<f64> {
    Normal::new(mean, sd).expect("finite positive standard deviation")
}

/// `(1 - n^{-1/2}) delta_0 + n^{-1/2} N(2, 0.01)`.
fn sparse_bump<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let p = 1.0 / (n as f64).sqrt();
    let bump = normal(2.0, 0.1);
    (0..n)
        .map(|_| {
            if rng.random_bool(p) {
                bump.sample(rng)
            } else {
                0.0
            }
        })
        .collect()
}

/// Laplace with location 0 and scale `b`, as a scaled difference of
/// standard exponentials.
fn laplace<R: Rng + ?Sized>(b: f64, rng: &mut R) -> f64 {
    let e1: f64 = Exp1.sample(rng);
    let e2: f64 = Exp1.sample(rng);
    b * (e1 - e2)
}

fn chi_squared(df: f64) -> Gamma<f64> {
    Gamma::new(0.5 * df, 2.0).expect("positive degrees of freedom")
}

fn one_sample<R: Rng + ?Sized>(n: usize, m: usize, design: &Blocks, rng: &mut R) -> Scenario {
    let xi = latent_blocks(n, &design.blocks, rng);
    let bump = sparse_bump(n, rng);
    let theta: Vec<f64> = xi.iter().zip(&bump).map(|(a, b)| a + b).collect();
    let unit = normal(0.0, 1.0);
    let y: Vec<f64> = theta.iter().map(|t| t + unit.sample(rng)).collect();

    let mf = m as f64;
    // mean of m Laplace(0, 4) draws
    let eta1: Vec<f64> = (0..n)
        .map(|_| (0..m).map(|_| laplace(4.0, rng)).sum::<f64>() / mf)
        .collect();
    // the mean of m chi-square(10) draws is exactly Gamma(5m, 2/m)
    let chi_mean = Gamma::new(5.0 * mf, 2.0 / mf).expect("valid gamma");
    let eta2: Vec<f64> = (0..n).map(|_| chi_mean.sample(rng)).collect();

    let s1 = xi.iter().zip(&eta1).map(|(x, e)| (x + e).abs()).collect();
    let s2 = xi.iter().zip(&eta2).map(|(x, e)| (x + e).abs()).collect();

    let lognormal = LogNormal::new(0.0, 5.0 / mf.sqrt()).expect("valid lognormal");
    let s3 = (0..n)
        .map(|i| {
            let base = if xi[i] != 0.0 {
                xi[i]
            } else {
                lognormal.sample(rng)
            };
            let rho = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            (base + rho * eta1[i]).abs()
        })
        .collect();

    let df = (2.0 * mf / 10.0).round().max(1.0);
    let student = StudentT::new(df).expect("positive degrees of freedom");
    let s4 = (0..n)
        .map(|i| {
            let base = if xi[i] != 0.0 {
                xi[i]
            } else {
                student.sample(rng)
            };
            let rho = if rng.random_bool(0.75) { 1.0 } else { -1.0 };
            (base - rho * eta2[i]).abs()
        })
        .collect();

    Scenario {
        theta,
        xi,
        y,
        sigma: vec![1.0; n],
        aux: vec![s1, s2, s3, s4],
    }
}

fn two_sample<R: Rng + ?Sized>(n: usize, unequal: bool, rng: &mut R) -> Scenario {
    let nf = n as f64;
    let p1 = nf.powf(-0.6);
    let p2 = nf.powf(-0.3);
    let jitter = normal(0.0, 0.1);
    let unit = normal(0.0, 1.0);
    let mut sc = Scenario {
        theta: Vec::with_capacity(n),
        xi: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        sigma: Vec::with_capacity(n),
        aux: vec![Vec::with_capacity(n)],
    };
    for _ in 0..n {
        let xi1 = if rng.random_bool(p1) {
            rng.random_range(3.0..7.0)
        } else {
            0.0
        };
        let xi2 = if rng.random_bool(p2) { 4.0 } else { 0.0 };
        let mu1 = xi1 + jitter.sample(rng);
        let mu2 = xi2 + jitter.sample(rng);
        let (sd1, sd2) = if unequal {
            let v1: f64 = rng.random_range(0.1..1.0);
            let v2: f64 = rng.random_range(0.1..1.0);
            (v1.sqrt(), v2.sqrt())
        } else {
            (1.0, 1.0)
        };
        let u = mu1 + sd1 * unit.sample(rng);
        let v = mu2 + sd2 * unit.sample(rng);
        let kappa = sd1 / sd2;
        sc.theta.push(mu1 - mu2);
        // the oracle splits on the size of the latent difference
        sc.xi.push((xi1 - xi2).abs());
        sc.y.push(u - v);
        sc.sigma.push((sd1 * sd1 + sd2 * sd2).sqrt());
        sc.aux[0].push((u + kappa * v).abs());
    }
    sc
}

fn percent(n: usize, pct: f64) -> usize {
    (n as f64 * pct / 100.0).round() as usize
}

fn asymptotic<R: Rng + ?Sized>(n: usize, m: usize, dense: bool, rng: &mut R) -> Scenario {
    let blocks = if dense {
        [(percent(n, 4.0), 4.0, 8.0), (percent(n, 16.0), 1.0, 3.0)]
    } else {
        [(percent(n, 1.0), 6.0, 7.0), (percent(n, 4.0), 2.0, 3.0)]
    };
    let xi = latent_blocks(n, &blocks, rng);
    let bump = sparse_bump(n, rng);
    let theta: Vec<f64> = xi.iter().zip(&bump).map(|(a, b)| a + b).collect();
    let sigma: Vec<f64> = if dense {
        (0..n)
            .map(|_| rng.random_range(0.1f64..1.0).sqrt())
            .collect()
    } else {
        vec![1.0; n]
    };
    let unit = normal(0.0, 1.0);
    let y: Vec<f64> = theta
        .iter()
        .zip(&sigma)
        .map(|(t, s)| t + s * unit.sample(rng))
        .collect();

    let k_n = (n as f64).ln();
    let mean_noise = normal(0.0, 0.1 / (m as f64).sqrt());
    let eta: Vec<f64> = (0..n).map(|_| mean_noise.sample(rng)).collect();
    let null = |i: usize| xi[i] == 0.0;

    let (s1, s2) = if dense {
        let weak = chi_squared(1.0 + k_n.ln().sqrt());
        let strong = chi_squared(1.0 + k_n);
        let base = chi_squared(1.0);
        let mut s1 = Vec::with_capacity(n);
        let mut s2 = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = if null(i) {
                (weak.sample(rng), strong.sample(rng))
            } else {
                (base.sample(rng), base.sample(rng))
            };
            s1.push((a + eta[i]).abs());
            s2.push((b + eta[i]).abs());
        }
        (s1, s2)
    } else {
        let mu_weak = k_n.ln().sqrt();
        let mu_strong = k_n.sqrt();
        let mut s1 = Vec::with_capacity(n);
        let mut s2 = Vec::with_capacity(n);
        for i in 0..n {
            let sd = rng.random_range(0.1f64..1.0).sqrt();
            let (m1, m2) = if null(i) {
                (mu_weak, mu_strong)
            } else {
                (0.0, 0.0)
            };
            let z: f64 = unit.sample(rng);
            s1.push((m1 + sd * z + eta[i]).abs());
            s2.push((m2 + sd * z + eta[i]).abs());
        }
        (s1, s2)
    };

    Scenario {
        theta,
        xi,
        y,
        sigma,
        aux: vec![s1, s2],
    }
}

fn toy<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Scenario {
    let fifth = percent(n, 20.0);
    let mu1 = latent_blocks(n, &[(fifth, 4.0, 6.0), (fifth, 2.0, 3.0)], rng);
    let mu2 = latent_blocks(n, &[(fifth, 1.0, 2.0), (fifth, 1.0, 6.0)], rng);
    let half = normal(0.0, 0.5);
    let mut sc = Scenario {
        theta: Vec::with_capacity(n),
        xi: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        sigma: vec![0.5f64.sqrt(); n],
        aux: vec![Vec::with_capacity(n)],
    };
    for i in 0..n {
        let a = mu1[i] + half.sample(rng);
        let b = mu2[i] + half.sample(rng);
        let theta = mu1[i] - mu2[i];
        sc.theta.push(theta);
        sc.xi.push(if theta != 0.0 { 1.0 } else { 0.0 });
        sc.y.push(a - b);
        sc.aux[0].push((a + b).abs());
    }
    sc
}
