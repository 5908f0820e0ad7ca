use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One observed problem instance.
///
/// `y` holds the primary statistics, `sigma` their known noise standard
/// deviations and `s` the auxiliary sequence. Simulated batches also carry
/// the true means `theta` and the latent side information `xi`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataBatch {
    y: Vec<f64>,
    sigma: Vec<f64>,
    s: Vec<f64>,
    theta: Option<Vec<f64>>,
    xi: Option<Vec<f64>>,
}

fn check_finite(field: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { field, index }),
        None => Ok(()),
    }
}

fn check_len(field: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch {
            field,
            expected,
            actual,
        });
    }
    Ok(())
}

impl DataBatch {
    pub fn new(y: Vec<f64>, sigma: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::EmptyBatch);
        }
        check_len("sigma", y.len(), sigma.len())?;
        check_len("s", y.len(), s.len())?;
        check_finite("y", &y)?;
        check_finite("s", &s)?;
        if let Some(index) = sigma.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidSigma {
                index,
                value: sigma[index],
            });
        }
        Ok(Self {
            y,
            sigma,
            s,
            theta: None,
            xi: None,
        })
    }

    pub fn with_theta(mut self, theta: Vec<f64>) -> Result<Self> {
        check_len("theta", self.len(), theta.len())?;
        check_finite("theta", &theta)?;
        self.theta = Some(theta);
        Ok(self)
    }

    pub fn with_xi(mut self, xi: Vec<f64>) -> Result<Self> {
        check_len("xi", self.len(), xi.len())?;
        check_finite("xi", &xi)?;
        self.xi = Some(xi);
        Ok(self)
    }

    /// Same statistics with a different auxiliary sequence.
    pub fn with_aux(&self, s: Vec<f64>) -> Result<Self> {
        check_len("s", self.len(), s.len())?;
        check_finite("s", &s)?;
        let mut out = self.clone();
        out.s = s;
        Ok(out)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.y.len()
    }

    /// Always false: construction rejects empty batches.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn theta(&self) -> Option<&[f64]> {
        self.theta.as_deref()
    }

    pub fn xi(&self) -> Option<&[f64]> {
        self.xi.as_deref()
    }

    pub(crate) fn require_theta(&self) -> Result<&[f64]> {
        self.theta().ok_or(Error::Missing("theta"))
    }

    pub(crate) fn require_xi(&self) -> Result<&[f64]> {
        self.xi().ok_or(Error::Missing("xi"))
    }

    /// Standardized magnitude `|y_i / sigma_i|`.
    #[inline]
    pub fn z(&self, i: usize) -> f64 {
        (self.y[i] / self.sigma[i]).abs()
    }
}

/// Group breakpoints `tau` and one soft threshold per group.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    tau: Vec<f64>,
    t: Vec<f64>,
}

impl HyperParams {
    pub fn new(tau: Vec<f64>, t: Vec<f64>) -> Result<Self> {
        check_breakpoints(&tau)?;
        if t.len() != tau.len() + 1 {
            return Err(Error::ThresholdCount {
                groups: tau.len() + 1,
                actual: t.len(),
            });
        }
        if let Some(group) = t.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidThreshold {
                group,
                value: t[group],
            });
        }
        Ok(Self { tau, t })
    }

    /// A single group with threshold `t`.
    pub fn single(t: f64) -> Result<Self> {
        Self::new(Vec::new(), alloc::vec![t])
    }

    pub fn k(&self) -> usize {
        self.t.len()
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    /// Checks every threshold against the universal threshold for `n`.
    pub fn check_range(&self, n: usize) -> Result<()> {
        let t_n = crate::kernel::universal_threshold(n)?;
        match self.t.iter().position(|&t| t > t_n) {
            Some(group) => Err(Error::InvalidThreshold {
                group,
                value: self.t[group],
            }),
            None => Ok(()),
        }
    }
}

pub(crate) fn check_breakpoints(tau: &[f64]) -> Result<()> {
    if tau.iter().any(|v| !v.is_finite()) || tau.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::UnsortedBreakpoints);
    }
    Ok(())
}

/// Assignment of coordinates to groups `0..k`.
///
/// Group indices are zero-based here; group `k` holds the coordinates with
/// `tau[k-1] < s <= tau[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grouping {
    pub assignment: Vec<usize>,
    pub sizes: Vec<usize>,
}

impl Grouping {
    pub fn k(&self) -> usize {
        self.sizes.len()
    }
}
