//! Monte Carlo risk driver.
//!
//! Replication `r` draws from a ChaCha20 stream `r` keyed by the master
//! seed, so replications are independent and can run in any order; results
//! are collected and reduced in replication order.

use std::fmt;
use std::str::FromStr;

use asus_core::{estimators, tuner, DataBatch, FitResult, SearchConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{AsusError, Result};
use crate::format::{sig12, sig12_opt, sig12_opt_vec};
use crate::sim::{Family, Scenario, ScenarioSpec};

/// An estimator label as used in configs and reports.
///
/// Variant-bearing labels take an optional `.j` suffix selecting auxiliary
/// sequence `j`; without it the spec's `aux_variant` applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    SureShrink,
    Ejs,
    Asus(Option<usize>),
    AuxScr(Option<usize>),
    OracleLoss(Option<usize>),
    /// Latent-split oracle with one `(tau, t)` shared by all replications.
    Oracle,
    /// Latent-split oracle refit on every replication.
    OracleRep,
}

impl FromStr for Estimator {
    type Err = AsusError;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || AsusError::UnknownEstimator(s.to_string());
        let (base, variant) = match s.split_once('.') {
            Some((b, v)) => {
                let v: usize = v.parse().map_err(|_| unknown())?;
                (b, Some(v))
            }
            None => (s, None),
        };
        let est = match base {
            "sureshrink" => Estimator::SureShrink,
            "ejs" => Estimator::Ejs,
            "or" => Estimator::Oracle,
            "or-rep" => Estimator::OracleRep,
            "asus" => Estimator::Asus(variant),
            "auxscr" => Estimator::AuxScr(variant),
            "ol" => Estimator::OracleLoss(variant),
            _ => return Err(unknown()),
        };
        if variant.is_some() && est.variant().is_none() {
            return Err(unknown());
        }
        Ok(est)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (base, v) = match *self {
            Estimator::SureShrink => ("sureshrink", None),
            Estimator::Ejs => ("ejs", None),
            Estimator::Oracle => ("or", None),
            Estimator::OracleRep => ("or-rep", None),
            Estimator::Asus(v) => ("asus", v),
            Estimator::AuxScr(v) => ("auxscr", v),
            Estimator::OracleLoss(v) => ("ol", v),
        };
        match v {
            Some(j) => write!(f, "{base}.{j}"),
            None => f.write_str(base),
        }
    }
}

impl Estimator {
    fn variant(self) -> Option<Option<usize>> {
        match self {
            Estimator::Asus(v) | Estimator::AuxScr(v) | Estimator::OracleLoss(v) => Some(v),
            _ => None,
        }
    }

    fn check(self, family: Family) -> Result<()> {
        if let Some(Some(j)) = self.variant() {
            if j == 0 || j > family.aux_variants() {
                return Err(AsusError::Spec(format!(
                    "{family} has no auxiliary variant {j} (estimator `{self}`)"
                )));
            }
        }
        Ok(())
    }

    /// Fits one replication. `None` for the pooled oracle, which is
    /// finished after all replications are in.
    fn fit(self, sc: &Scenario, spec: &ScenarioSpec) -> Result<Option<FitResult>> {
        let batch = |v: Option<usize>| sc.batch(v.unwrap_or_else(|| spec.variant()));
        let cfg = SearchConfig::new(2);
        let fit = match self {
            Estimator::SureShrink => tuner::fit_sureshrink(&batch(None)?)?,
            Estimator::Ejs => estimators::fit_ejs(&batch(None)?)?,
            Estimator::Asus(v) => tuner::fit_asus(&batch(v)?, &cfg)?,
            Estimator::AuxScr(v) => estimators::fit_auxscr(&batch(v)?)?,
            Estimator::OracleLoss(v) => estimators::fit_oracle_loss(&batch(v)?, &cfg)?,
            Estimator::OracleRep => estimators::fit_oracle_side(&batch(None)?)?,
            Estimator::Oracle => return Ok(None),
        };
        Ok(Some(fit))
    }
}

pub fn parse_estimators(labels: &[String], family: Family) -> Result<Vec<Estimator>> {
    labels
        .iter()
        .map(|l| {
            let e: Estimator = l.parse()?;
            e.check(family)?;
            Ok(e)
        })
        .collect()
}

/// RNG for replication `rep` under master seed `seed`.
pub fn child_rng(seed: u64, rep: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

pub fn generate_replication(spec: &ScenarioSpec, rep: usize) -> Result<Scenario> {
    Scenario::generate(spec, &mut child_rng(spec.seed, rep))
}

/// Hyperparameters and loss of one estimator on one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct RepRecord {
    pub loss: f64,
    pub tau: Vec<f64>,
    pub t: Vec<f64>,
    pub sizes: Vec<usize>,
}

impl RepRecord {
    fn from_fit(fit: &FitResult) -> Result<Self> {
        let loss = fit.loss_value.ok_or(asus_core::Error::Missing("theta"))?;
        let (tau, t) = match &fit.hp {
            Some(hp) => (hp.tau().to_vec(), hp.t().to_vec()),
            None => (Vec::new(), Vec::new()),
        };
        Ok(Self {
            loss,
            tau,
            t,
            sizes: fit.group_sizes.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorSummary {
    pub estimator: String,
    #[serde(serialize_with = "sig12")]
    pub risk: f64,
    #[serde(serialize_with = "sig12")]
    pub sd: f64,
    /// Absent for a single replication.
    #[serde(serialize_with = "sig12_opt")]
    pub se: Option<f64>,
    #[serde(serialize_with = "sig12_opt_vec")]
    pub mean_tau: Option<Vec<f64>>,
    #[serde(serialize_with = "sig12_opt_vec")]
    pub mean_t: Option<Vec<f64>>,
    #[serde(serialize_with = "sig12_opt_vec")]
    pub mean_sizes: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    pub scenario: ScenarioSpec,
    pub reps: usize,
    pub estimators: Vec<EstimatorSummary>,
    /// `records[e][r]`: estimator `e` on replication `r`.
    #[serde(skip)]
    pub records: Vec<Vec<RepRecord>>,
}

impl RiskReport {
    pub fn get(&self, estimator: &str) -> Option<&EstimatorSummary> {
        self.estimators.iter().find(|e| e.estimator == estimator)
    }

    pub fn risk(&self, estimator: &str) -> Option<f64> {
        self.get(estimator).map(|e| e.risk)
    }

    pub fn losses(&self, estimator: &str) -> Option<Vec<f64>> {
        let i = self
            .estimators
            .iter()
            .position(|e| e.estimator == estimator)?;
        Some(self.records[i].iter().map(|r| r.loss).collect())
    }
}

fn mean_vectors<'a>(rows: impl Iterator<Item = &'a [f64]> + Clone) -> Option<Vec<f64>> {
    let first = rows.clone().next()?;
    let len = first.len();
    if len == 0 || rows.clone().any(|r| r.len() != len) {
        return None;
    }
    let mut acc = vec![0.0; len];
    let mut count = 0usize;
    for r in rows {
        for (a, v) in acc.iter_mut().zip(r) {
            *a += v;
        }
        count += 1;
    }
    Some(acc.into_iter().map(|a| a / count as f64).collect())
}

fn summarize(name: String, records: &[RepRecord]) -> EstimatorSummary {
    let n = records.len() as f64;
    let risk = records.iter().map(|r| r.loss).sum::<f64>() / n;
    let sd = if records.len() > 1 {
        let ss: f64 = records
            .iter()
            .map(|r| (r.loss - risk) * (r.loss - risk))
            .sum();
        (ss / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let sizes: Vec<Vec<f64>> = records
        .iter()
        .map(|r| r.sizes.iter().map(|&s| s as f64).collect())
        .collect();
    EstimatorSummary {
        estimator: name,
        risk,
        sd,
        se: (records.len() > 1).then(|| sd / n.sqrt()),
        mean_tau: mean_vectors(records.iter().map(|r| r.tau.as_slice())),
        mean_t: mean_vectors(records.iter().map(|r| r.t.as_slice())),
        mean_sizes: mean_vectors(sizes.iter().map(|s| s.as_slice())),
    }
}

struct RepOutcome {
    records: Vec<Option<RepRecord>>,
    latent: Option<DataBatch>,
}

/// Runs `reps` replications of `spec`, fitting every estimator on each.
pub fn run_risk_experiment(
    spec: &ScenarioSpec,
    estimators: &[Estimator],
    reps: usize,
) -> Result<RiskReport> {
    spec.validate()?;
    if reps == 0 {
        return Err(AsusError::Spec(
            "at least one replication is required".into(),
        ));
    }
    if estimators.is_empty() {
        return Err(AsusError::Spec("no estimators requested".into()));
    }
    for e in estimators {
        e.check(spec.family)?;
    }
    let pooled = estimators.contains(&Estimator::Oracle);

    let outcomes: Vec<Result<RepOutcome>> = (0..reps)
        .into_par_iter()
        .map(|r| -> Result<RepOutcome> {
            let sc = generate_replication(spec, r)?;
            let mut records = Vec::with_capacity(estimators.len());
            for e in estimators {
                records.push(match e.fit(&sc, spec)? {
                    Some(fit) => Some(RepRecord::from_fit(&fit)?),
                    None => None,
                });
            }
            let latent = if pooled { Some(sc.batch(1)?) } else { None };
            Ok(RepOutcome { records, latent })
        })
        .collect();
    let mut reps_out = Vec::with_capacity(reps);
    for (index, o) in outcomes.into_iter().enumerate() {
        reps_out.push(o.map_err(|e| AsusError::Replication {
            index,
            source: Box::new(e),
        })?);
    }

    if pooled {
        let batches: Vec<DataBatch> = reps_out
            .iter_mut()
            .map(|o| {
                o.latent
                    .take()
                    .expect("latent batches kept for the pooled oracle")
            })
            .collect();
        let hp = estimators::fit_oracle_side_pooled(&batches)?;
        let fitted: Vec<RepRecord> = batches
            .par_iter()
            .map(|b| {
                let fit = estimators::apply_on_latent(b, &hp, "or")?;
                RepRecord::from_fit(&fit)
            })
            .collect::<Result<_>>()?;
        let slot = estimators
            .iter()
            .position(|e| *e == Estimator::Oracle)
            .expect("pooled oracle requested");
        for (o, rec) in reps_out.iter_mut().zip(fitted) {
            o.records[slot] = Some(rec);
        }
    }

    let mut records: Vec<Vec<RepRecord>> = vec![Vec::with_capacity(reps); estimators.len()];
    for o in reps_out {
        for (slot, rec) in o.records.into_iter().enumerate() {
            records[slot].push(rec.expect("every estimator produced a record"));
        }
    }
    let summaries = estimators
        .iter()
        .zip(&records)
        .map(|(e, r)| summarize(e.to_string(), r))
        .collect();
    Ok(RiskReport {
        scenario: spec.clone(),
        reps,
        estimators: summaries,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for l in [
            "sureshrink",
            "ejs",
            "or",
            "or-rep",
            "asus",
            "asus.3",
            "auxscr.2",
            "ol",
            "ol.1",
        ] {
            assert_eq!(l.parse::<Estimator>().unwrap().to_string(), l);
        }
        for l in ["ebt", "ejs.1", "asus.x", "or.2"] {
            assert!(l.parse::<Estimator>().is_err(), "{l}");
        }
    }

    #[test]
    fn variant_must_exist() {
        let labels = vec!["asus.3".to_string()];
        assert!(parse_estimators(&labels, Family::TwoSampleS1).is_err());
        assert!(parse_estimators(&labels, Family::OneSampleS1).is_ok());
    }

    #[test]
    fn child_streams_differ() {
        use rand::Rng;
        let a: u64 = child_rng(1, 0).random();
        let b: u64 = child_rng(1, 1).random();
        let c: u64 = child_rng(1, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn single_replication_has_no_standard_error() {
        let spec = ScenarioSpec::new(Family::TwoSampleS1, 3).with_n(200);
        let ests = [Estimator::SureShrink, Estimator::Asus(None)];
        let report = run_risk_experiment(&spec, &ests, 1).unwrap();
        let ss = report.get("sureshrink").unwrap();
        assert_eq!(ss.se, None);
        assert_eq!(ss.risk, report.records[0][0].loss);
        assert_eq!(ss.mean_t.as_ref().unwrap().len(), 1);
        assert_eq!(
            report.get("asus").unwrap().mean_tau.as_ref().unwrap().len(),
            1
        );
    }

    #[test]
    fn reports_are_reproducible() {
        let spec = ScenarioSpec::new(Family::TwoSampleS2, 11).with_n(300);
        let ests = parse_estimators(
            &[
                "or".into(),
                "asus".into(),
                "auxscr".into(),
                "sureshrink".into(),
                "ejs".into(),
            ],
            spec.family,
        )
        .unwrap();
        let a = run_risk_experiment(&spec, &ests, 4).unwrap();
        let b = run_risk_experiment(&spec, &ests, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.estimators.iter().all(|e| e.risk >= 0.0 && e.se.is_some()));
    }
}
