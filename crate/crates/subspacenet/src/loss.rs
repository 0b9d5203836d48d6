//! Root mean squared periodic error.

use std::f64::consts::PI;

use doa_core::{DoaError, Result};
use ssn_autodiff::{concat, Tensor, Var};

/// `d - π·round(d/π)`.
pub fn wrap_pi(d: f64) -> f64 {
    d - PI * (d / PI).round()
}

fn check_truth(truth: &[f64]) -> Result<()> {
    if truth.is_empty() {
        return Err(DoaError::Domain("RMSPE needs at least one true angle".into()));
    }
    Ok(())
}

/// Prediction index assigned to each true angle by the best injective
/// matching, with its RMSPE. `pred` must be at least as long as `truth`.
fn best_assignment(pred: &[f64], truth: &[f64]) -> (Vec<usize>, f64) {
    fn search(pred: &[f64], truth: &[f64], used: &mut [bool], cur: &mut Vec<usize>, acc: f64, best: &mut (Vec<usize>, f64)) {
        if acc >= best.1 {
            return;
        }
        let k = cur.len();
        if k == truth.len() {
            *best = (cur.clone(), acc);
            return;
        }
        for j in 0..pred.len() {
            if used[j] {
                continue;
            }
            let e = wrap_pi(truth[k] - pred[j]);
            used[j] = true;
            cur.push(j);
            search(pred, truth, used, cur, acc + e * e, best);
            cur.pop();
            used[j] = false;
        }
    }
    let mut best = (Vec::new(), f64::INFINITY);
    search(pred, truth, &mut vec![false; pred.len()], &mut Vec::new(), 0.0, &mut best);
    let rmspe = (best.1 / truth.len() as f64).sqrt();
    (best.0, rmspe)
}

fn padded(pred: &[f64], m: usize) -> Vec<f64> {
    let mut p = pred.to_vec();
    if p.len() < m {
        p.resize(m, 0.0);
    }
    p
}

/// Minimum over assignments of `sqrt(mean(wrap(θ - θ̂)²))`. Missing
/// predictions count as zero.
pub fn rmspe(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_truth(truth)?;
    Ok(best_assignment(&padded(pred, truth.len()), truth).1)
}

/// [`rmspe`] on a tape. The assignment is chosen from the forward values and
/// held fixed for the backward pass.
pub fn rmspe_loss<'t>(pred: Var<'t>, truth: &[f64]) -> Result<Var<'t>> {
    check_truth(truth)?;
    let tape = pred.tape();
    let m = truth.len();
    let p = pred.shape()[0];
    let full = if p < m { concat(&[pred, tape.constant(Tensor::zeros(&[m - p]))]) } else { pred };
    let values = full.value();
    let (assign, _) = best_assignment(values.data(), truth);
    let picked = full.gather(assign, &[m]);
    let t = tape.constant(Tensor::new(&[m], truth.to_vec()));
    Ok(t.sub(picked).wrap_pi().square().mean().sqrt())
}

/// Mean and standard deviation of per-sample RMSPE values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmspeStats {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl RmspeStats {
    pub fn from_values(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Self { mean: f64::NAN, std: f64::NAN, count };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count as f64;
        Self { mean, std: var.sqrt(), count }
    }
}
