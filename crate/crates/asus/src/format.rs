//! File formats: the coordinate CSV, estimate and report outputs, and
//! all-or-nothing writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use asus_core::{kernel, DataBatch, FitResult, GroupBasis};
use serde::{Serialize, Serializer};

use crate::error::{AsusError, Result};

/// A parsed input table: row identifiers and the batch.
#[derive(Debug, Clone, PartialEq)]
pub struct InputTable {
    pub ids: Vec<String>,
    pub batch: DataBatch,
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

/// Reads `id,y,sigma,s[,xi,theta]`. `y` and `s` are required; a missing
/// `sigma` column means unit noise and a missing `id` column numbers rows
/// from 1. Extra columns are ignored.
pub fn read_input(path: &Path) -> Result<InputTable> {
    let file = fs::File::open(path).map_err(|source| AsusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_input_from(file, path)
}

pub fn read_input_from<R: std::io::Read>(reader: R, path: &Path) -> Result<InputTable> {
    let csv_err = |source| AsusError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let missing = |name: &str| AsusError::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: format!("missing required column `{name}`"),
    };
    let y_col = column(&headers, "y").ok_or_else(|| missing("y"))?;
    let s_col = column(&headers, "s").ok_or_else(|| missing("s"))?;
    let id_col = column(&headers, "id");
    let sigma_col = column(&headers, "sigma");
    let xi_col = column(&headers, "xi");
    let theta_col = column(&headers, "theta");

    let mut ids = Vec::new();
    let (mut y, mut sigma, mut s) = (Vec::new(), Vec::new(), Vec::new());
    let (mut xi, mut theta) = (Vec::new(), Vec::new());
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(row as u64 + 2, |p| p.line());
        let num = |col: usize, name: &str| -> Result<f64> {
            let raw = rec.get(col).unwrap_or("").trim();
            raw.parse::<f64>().map_err(|_| AsusError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("column `{name}`: cannot parse `{raw}` as a number"),
            })
        };
        ids.push(match id_col {
            Some(c) => rec.get(c).unwrap_or("").to_string(),
            None => (row + 1).to_string(),
        });
        y.push(num(y_col, "y")?);
        s.push(num(s_col, "s")?);
        sigma.push(match sigma_col {
            Some(c) => num(c, "sigma")?,
            None => 1.0,
        });
        if let Some(c) = xi_col {
            xi.push(num(c, "xi")?);
        }
        if let Some(c) = theta_col {
            theta.push(num(c, "theta")?);
        }
    }
    let mut batch = DataBatch::new(y, sigma, s)?;
    if theta_col.is_some() {
        batch = batch.with_theta(theta)?;
    }
    if xi_col.is_some() {
        batch = batch.with_xi(xi)?;
    }
    Ok(InputTable { ids, batch })
}

/// The sequence a fit's breakpoints refer to.
pub fn basis_values(batch: &DataBatch, basis: GroupBasis) -> Result<Vec<f64>> {
    Ok(match basis {
        GroupBasis::Aux | GroupBasis::None => batch.s().to_vec(),
        GroupBasis::AbsAux => batch.s().iter().map(|v| v.abs()).collect(),
        GroupBasis::Latent => batch.xi().ok_or(asus_core::Error::Missing("xi"))?.to_vec(),
    })
}

/// One-based group of every coordinate under `fit`.
pub fn fit_groups(batch: &DataBatch, fit: &FitResult) -> Result<Vec<usize>> {
    match &fit.hp {
        Some(hp) => {
            let basis = basis_values(batch, fit.basis)?;
            let g = kernel::partition(&basis, hp.tau())?;
            Ok(g.assignment.into_iter().map(|k| k + 1).collect())
        }
        None => Ok(vec![1; batch.len()]),
    }
}

/// `id,y,sigma,s,theta_hat,group` with shortest round-trip floats.
pub fn estimates_csv(table: &InputTable, fit: &FitResult) -> Result<Vec<u8>> {
    let groups = fit_groups(&table.batch, fit)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let b = &table.batch;
    let to_csv = |source: csv::Error| AsusError::Csv {
        path: PathBuf::from("<estimates>"),
        source,
    };
    w.write_record(["id", "y", "sigma", "s", "theta_hat", "group"])
        .map_err(to_csv)?;
    for i in 0..b.len() {
        w.write_record([
            table.ids[i].clone(),
            b.y()[i].to_string(),
            b.sigma()[i].to_string(),
            b.s()[i].to_string(),
            fit.theta_hat[i].to_string(),
            groups[i].to_string(),
        ])
        .map_err(to_csv)?;
    }
    w.into_inner().map_err(|e| AsusError::Io {
        path: PathBuf::from("<estimates>"),
        source: e.into_error(),
    })
}

/// Summary of one fit. Values are kept at full precision so the SURE can be
/// recomputed exactly from the estimates file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub method: String,
    pub n: usize,
    pub k: usize,
    pub basis: &'static str,
    pub tau: Vec<f64>,
    pub t: Vec<f64>,
    pub group_sizes: Vec<usize>,
    pub sure: Option<f64>,
    pub loss: Option<f64>,
    pub mn_factor: f64,
    pub hybrid: bool,
}

impl EstimateReport {
    pub fn new(fit: &FitResult, n: usize, mn_factor: f64, hybrid: bool) -> Self {
        let (tau, t) = match &fit.hp {
            Some(hp) => (hp.tau().to_vec(), hp.t().to_vec()),
            None => (Vec::new(), Vec::new()),
        };
        Self {
            method: fit.estimator.clone(),
            n,
            k: fit.group_sizes.len(),
            basis: match fit.basis {
                GroupBasis::Aux => "s",
                GroupBasis::AbsAux => "abs-s",
                GroupBasis::Latent => "xi",
                GroupBasis::None => "none",
            },
            tau,
            t,
            group_sizes: fit.group_sizes.clone(),
            sure: fit.sure_value,
            loss: fit.loss_value,
            mn_factor,
            hybrid,
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("report types serialize");
    out.push(b'\n');
    out
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

pub fn sig12<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round12(*x))
}

pub fn sig12_opt<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&round12(*v)),
        None => s.serialize_none(),
    }
}

pub fn sig12_opt_vec<S: Serializer>(
    x: &Option<Vec<f64>>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&v.iter().map(|&a| round12(a)).collect::<Vec<_>>()),
        None => s.serialize_none(),
    }
}

fn temp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".tmp-{}", std::process::id()));
    path.with_file_name(name)
}

/// Writes every file or none of them: contents go to temporary siblings
/// first and are renamed into place only after all writes succeed.
pub fn write_all_atomic(files: &[(PathBuf, Vec<u8>)]) -> Result<()> {
    let mut temps: Vec<PathBuf> = Vec::with_capacity(files.len());
    let cleanup = |temps: &[PathBuf]| {
        for t in temps {
            let _ = fs::remove_file(t);
        }
    };
    for (path, bytes) in files {
        let tmp = temp_path(path);
        let res = fs::File::create(&tmp).and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        });
        temps.push(tmp);
        if let Err(source) = res {
            cleanup(&temps);
            return Err(AsusError::Io {
                path: path.clone(),
                source,
            });
        }
    }
    for (i, (path, _)) in files.iter().enumerate() {
        if let Err(source) = fs::rename(&temps[i], path) {
            for (done, _) in &files[..i] {
                let _ = fs::remove_file(done);
            }
            cleanup(&temps[i..]);
            return Err(AsusError::Io {
                path: path.clone(),
                source,
            });
        }
    }
    Ok(())
}
