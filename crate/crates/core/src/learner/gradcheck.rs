//! Central finite-difference check of the analytic gradient.

use rand::Rng;

use super::net::{backward, forward_trace};
use super::{loss_and_grad_probs, Example, LearnerConfig, ModelState};
use crate::rng;
use crate::Result;

pub const FD_STEP: f64 = 1e-5;

/// ReLU signs and max-pool winners of one forward pass.
type ActivationPattern = (Vec<bool>, Vec<usize>);

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Draws rejected because ±h crossed a ReLU or max-pool switch.
    pub kinks_skipped: usize,
    pub loss: f64,
}

/// Relative error with a floor that scales with the loss, so that weights
/// with vanishing gradient are judged against finite-difference roundoff
/// instead of against zero.
pub fn relative_error(analytic: f64, numeric: f64, loss: f64) -> f64 {
    let floor = 1e-6 * loss.abs().max(1.0);
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Compare the analytic gradient to central differences on `n_weights`
/// uniformly drawn parameters.
pub fn gradcheck(model: &ModelState, ex: &Example, config: &LearnerConfig, n_weights: usize, seed: u64) -> Result<GradcheckReport> {
    let eval = |params: &[f64]| -> Result<(f64, ActivationPattern)> {
        let m = ModelState { params: params.to_vec(), ..model.clone() };
        let t = forward_trace(&m, &ex.pixels, ex.height, ex.width)?;
        let l = loss_and_grad_probs(config, &t.probs, &ex.target).0.value;
        Ok((l, t.pattern()))
    };

    let trace = forward_trace(model, &ex.pixels, ex.height, ex.width)?;
    let (loss, gprobs) = loss_and_grad_probs(config, &trace.probs, &ex.target);
    let analytic = backward(model, &trace, &gprobs);
    let base_pattern = trace.pattern();

    let mut rng = rng::seeded(seed);
    let mut params = model.params.clone();
    let mut report = GradcheckReport { max_rel_error: 0.0, checked: 0, kinks_skipped: 0, loss: loss.value };
    let max_draws = n_weights * 20;
    let mut draws = 0;
    while report.checked < n_weights && draws < max_draws {
        draws += 1;
        let i = rng.random_range(0..params.len());
        let orig = params[i];
        params[i] = orig + FD_STEP;
        let (lp, pp) = eval(&params)?;
        params[i] = orig - FD_STEP;
        let (lm, pm) = eval(&params)?;
        params[i] = orig;
        if pp != base_pattern || pm != base_pattern {
            report.kinks_skipped += 1;
            continue;
        }
        let numeric = (lp - lm) / (2.0 * FD_STEP);
        let err = relative_error(analytic[i], numeric, loss.value);
        report.max_rel_error = report.max_rel_error.max(err);
        report.checked += 1;
    }
    Ok(report)
}
