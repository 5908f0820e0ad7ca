//! Closed-form evaluators: the optimal-threshold expansion, the leading
//! term of the risk gap between thresholding without and with ideal side
//! information, efficiency diagnostics and misclassification rates.

use core::f64::consts::TAU;

use crate::batch::DataBatch;
use crate::error::{Error, Result};
use crate::math;

fn f_squared(t: f64) -> Result<f64> {
    if !(t.is_finite() && t > 1.0) {
        return Err(Error::Domain("threshold expansion needs a finite t > 1"));
    }
    // 2 ln phi(0) = -ln(2 pi)
    let arg = t * t - 6.0 * math::ln(t) - math::ln(TAU);
    if arg <= 0.0 {
        return Err(Error::Domain("t^2 - 6 ln t + 2 ln phi(0) must be positive"));
    }
    Ok(arg)
}

/// `f(t) = sqrt(t^2 - 6 ln t + 2 ln phi(0))`, the leading-order optimal
/// threshold for a sparse group at universal level `t`.
pub fn opt_threshold_f(t: f64) -> Result<f64> {
    f_squared(t).map(math::sqrt)
}

/// `h(t) = f(t)^2 + 5`.
pub fn opt_threshold_h(t: f64) -> Result<f64> {
    f_squared(t).map(|v| v + 5.0)
}

/// Sparsity regime: group-1 signal proportion `n^-alpha`, group-2
/// proportion `n^-beta`, group-1 share `pi1` and mean noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeParams {
    pub alpha: f64,
    pub beta: f64,
    pub pi1: f64,
    pub sigma_bar_sq: f64,
    pub n: usize,
}

impl RegimeParams {
    pub fn new(alpha: f64, beta: f64, pi1: f64, sigma_bar_sq: f64, n: usize) -> Result<Self> {
        let rp = Self {
            alpha,
            beta,
            pi1,
            sigma_bar_sq,
            n,
        };
        rp.validate()?;
        Ok(rp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < self.beta && self.beta <= 1.0) {
            return Err(Error::Domain(
                "sparsity exponents need 0 < alpha < beta <= 1",
            ));
        }
        if !(self.pi1 > 0.0 && self.pi1 < 1.0) {
            return Err(Error::Domain(
                "pi1 must lie strictly inside (0, 1); at pi1 = 1 ln(1/pi1) = 0 and the gap degenerates",
            ));
        }
        if !(self.sigma_bar_sq.is_finite() && self.sigma_bar_sq > 0.0) {
            return Err(Error::Domain("average noise variance must be positive"));
        }
        if self.n < 2 {
            return Err(Error::Domain("n must be at least 2"));
        }
        Ok(())
    }

    /// `k_n = ln n`.
    pub fn k_n(&self) -> f64 {
        math::ln(self.n as f64)
    }

    /// `pi2 / pi1`.
    pub fn rho(&self) -> f64 {
        (1.0 - self.pi1) / self.pi1
    }
}

/// Leading-order `R^NS - R^OS`:
/// `pi1 n^-alpha sigma_bar^2 ln(1/pi1) (2 - 3 / (alpha ln n))`.
///
/// The remainder and the group-2 contribution are dropped, so this is an
/// order-of-magnitude guide rather than a precise prediction.
pub fn risk_gap_first_order(rp: &RegimeParams) -> Result<f64> {
    rp.validate()?;
    let k_n = rp.k_n();
    if rp.alpha * k_n <= 1.5 {
        return Err(Error::Domain("alpha ln n must exceed 3/2"));
    }
    let p1 = math::pow(rp.n as f64, -rp.alpha);
    Ok(rp.pi1 * p1 * rp.sigma_bar_sq * math::ln(1.0 / rp.pi1) * (2.0 - 3.0 / (rp.alpha * k_n)))
}

/// Risk improvement `RI` and efficiency ratio `E` of a side-information
/// estimator relative to the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiency {
    /// `None` when the baseline already matches the oracle.
    pub ri: Option<f64>,
    /// `+inf` when the estimator matches the oracle; `None` when RI is.
    pub e: Option<f64>,
    /// True when `r_as` fell below `r_os` and was raised to it.
    pub clamped: bool,
}

/// `E = (r_ns - r_os) / (r_as - r_os)` and `RI = 1 - 1/E`, which equals
/// `(r_ns - r_as) / (r_ns - r_os)`. A Monte Carlo `r_as` below `r_os` is
/// clamped to `r_os`.
pub fn efficiency_diagnostics(r_ns: f64, r_as: f64, r_os: f64) -> Result<Efficiency> {
    if !(r_ns.is_finite() && r_as.is_finite() && r_os.is_finite()) {
        return Err(Error::Domain("risks must be finite"));
    }
    let clamped = r_as < r_os;
    let d_as = if clamped { 0.0 } else { r_as - r_os };
    let d_ns = r_ns - r_os;
    if d_ns <= 0.0 {
        return Ok(Efficiency {
            ri: None,
            e: None,
            clamped,
        });
    }
    let e = d_ns / d_as;
    Ok(Efficiency {
        ri: Some(1.0 - 1.0 / e),
        e: Some(e),
        clamped,
    })
}

/// Empirical, `sigma^2`-weighted misclassification rates of the split
/// `S <= tau` against the oracle split `xi <= tau_star`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Misclassification {
    /// Oracle group 1 sent to group 2.
    pub q21: f64,
    /// Oracle group 2 sent to group 1.
    pub q12: f64,
    pub group1_empty: bool,
    pub group2_empty: bool,
}

impl Misclassification {
    /// Rates with the two estimated labels exchanged.
    pub fn swapped(&self) -> (f64, f64) {
        let flip = |q: f64, empty: bool| if empty { 0.0 } else { 1.0 - q };
        (
            flip(self.q21, self.group1_empty),
            flip(self.q12, self.group2_empty),
        )
    }
}

pub fn misclass_rates(batch: &DataBatch, tau: f64, tau_star: f64) -> Result<Misclassification> {
    let xi = batch.require_xi()?;
    let (mut w1, mut m1, mut w2, mut m2) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..batch.len() {
        let w = batch.sigma()[i] * batch.sigma()[i];
        let in_low = batch.s()[i] <= tau;
        if xi[i] <= tau_star {
            w1 += w;
            if !in_low {
                m1 += w;
            }
        } else {
            w2 += w;
            if in_low {
                m2 += w;
            }
        }
    }
    let rate = |m: f64, w: f64| if w > 0.0 { m / w } else { 0.0 };
    Ok(Misclassification {
        q21: rate(m1, w1),
        q12: rate(m2, w2),
        group1_empty: w1 == 0.0,
        group2_empty: w2 == 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn f_and_h_at_three() {
        // mpmath, 40 digits: sqrt(9 - 6 ln 3 - ln(2 pi))
        let f = opt_threshold_f(3.0).unwrap();
        assert!((f - 0.755_280_875_954_102_5).abs() < 1e-13, "{f}");
        let h = opt_threshold_h(3.0).unwrap();
        assert!((h - 5.570_449_201_581_996).abs() < 1e-12, "{h}");
        assert!(opt_threshold_f(1.5).is_err());
        assert!(opt_threshold_f(0.5).is_err());
    }

    #[test]
    fn f_over_t_tends_to_one() {
        let r = opt_threshold_f(1e6).unwrap() / 1e6;
        assert!((r - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gap_value_and_scaling() {
        let rp = RegimeParams::new(0.6, 0.9, 0.95, 1.0, 5000).unwrap();
        let g = risk_gap_first_order(&rp).unwrap();
        // mpmath, 40 digits
        assert!((g / 4.154_604_131_840_329e-4 - 1.0).abs() < 1e-12, "{g}");
        let doubled = RegimeParams {
            sigma_bar_sq: 2.0,
            ..rp
        };
        assert_eq!(risk_gap_first_order(&doubled).unwrap(), 2.0 * g);
        assert!(RegimeParams::new(0.6, 0.9, 1.0, 1.0, 5000).is_err());
        let small = RegimeParams { alpha: 0.1, ..rp };
        assert!(risk_gap_first_order(&small).is_err());
    }

    #[test]
    fn efficiency_cases() {
        let d = efficiency_diagnostics(0.191, 0.095, 0.095).unwrap();
        assert_eq!(d.ri, Some(1.0));
        assert_eq!(d.e, Some(f64::INFINITY));
        let d = efficiency_diagnostics(0.3, 0.3, 0.1).unwrap();
        assert_eq!(d.ri, Some(0.0));
        assert_eq!(d.e, Some(1.0));
        let d = efficiency_diagnostics(0.1, 0.2, 0.1).unwrap();
        assert_eq!(d.ri, None);
        let d = efficiency_diagnostics(0.3, 0.09, 0.1).unwrap();
        assert!(d.clamped);
        assert_eq!(d.ri, Some(1.0));
    }

    #[test]
    fn misclassification_extremes() {
        let xi = vec![0.0, 0.0, 3.0, 4.0];
        let b = DataBatch::new(vec![0.0; 4], vec![1.0; 4], xi.clone())
            .unwrap()
            .with_xi(xi)
            .unwrap();
        let m = misclass_rates(&b, 1.0, 1.0).unwrap();
        assert_eq!((m.q21, m.q12), (0.0, 0.0));
        let m = misclass_rates(&b, f64::NEG_INFINITY, 1.0).unwrap();
        assert_eq!((m.q21, m.q12), (1.0, 0.0));
        assert_eq!(m.swapped(), (0.0, 1.0));
        let m = misclass_rates(&b, 0.0, 10.0).unwrap();
        assert!(m.group2_empty);
        assert_eq!(m.q12, 0.0);
    }
}
