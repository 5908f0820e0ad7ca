use alloc::string::String;
use alloc::vec::Vec;

use crate::batch::HyperParams;

/// Which sequence the breakpoints of a fit refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBasis {
    /// The auxiliary sequence `s`.
    Aux,
    /// The magnitudes `|s|` (auxiliary screening).
    AbsAux,
    /// The latent side information `xi` (oracle only).
    Latent,
    /// No grouping; the estimator is not a thresholding rule.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub estimator: String,
    pub theta_hat: Vec<f64>,
    /// `None` for estimators outside the thresholding family.
    pub hp: Option<HyperParams>,
    pub basis: GroupBasis,
    pub group_sizes: Vec<usize>,
    /// SURE at the fitted hyperparameters, when defined.
    pub sure_value: Option<f64>,
    /// Realized loss, present when the batch carries `theta`.
    pub loss_value: Option<f64>,
}
