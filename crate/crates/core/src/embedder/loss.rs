//! Batch contrastive (InfoNCE) loss over cosine similarities.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Added to every row norm before dividing, so zero rows stay finite.
pub const NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub loss: f64,
    pub accuracy: f64,
    /// Gradient of the loss with respect to the raw (unnormalized) first view.
    pub grad_view1: Array2<f64>,
    pub grad_view2: Array2<f64>,
}

fn normalize_rows(v: ArrayView2<f64>) -> (Array2<f64>, Array1<f64>) {
    let norms = v.map_axis(Axis(1), |r| r.dot(&r).sqrt());
    let mut u = v.to_owned();
    for (mut row, &n) in u.outer_iter_mut().zip(norms.iter()) {
        row /= n + NORM_EPS;
    }
    (u, norms)
}

/// Back-propagates through row normalization u = v / (‖v‖ + ε).
fn normalize_backward(v: ArrayView2<f64>, norms: &Array1<f64>, grad_u: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(v.raw_dim());
    for (i, mut row) in out.outer_iter_mut().enumerate() {
        let n = norms[i];
        let g = grad_u.row(i);
        let vi = v.row(i);
        let denom = n + NORM_EPS;
        row.assign(&(&g / denom));
        if n > 0.0 {
            let proj = vi.dot(&g) / (n * denom * denom);
            row.scaled_add(-proj, &vi);
        }
    }
    out
}

/// Loss, accuracy and gradients. Row i of `view1` is the anchor whose
/// positive is row i of `view2`; the other rows of `view2` are its
/// negatives.
pub fn contrastive_loss_with_grad(
    view1: ArrayView2<f64>,
    view2: ArrayView2<f64>,
    temperature: f64,
) -> Result<LossOutput> {
    let b = view1.nrows();
    if b < 2 {
        return Err(Error::Parameter(format!(
            "contrastive loss needs at least 2 rows, got {b}"
        )));
    }
    if view2.dim() != view1.dim() {
        return Err(Error::Parameter("views differ in shape".into()));
    }
    if !(temperature > 0.0) {
        return Err(Error::Parameter("temperature must be positive".into()));
    }
    let (u, nu) = normalize_rows(view1);
    let (w, nw) = normalize_rows(view2);
    let mut probs = u.dot(&w.t()) / temperature;

    let mut loss = 0.0;
    let mut correct = 0usize;
    for (i, mut row) in probs.outer_iter_mut().enumerate() {
        let mut argmax = 0;
        for j in 1..b {
            if row[j] > row[argmax] {
                argmax = j;
            }
        }
        if argmax == i {
            correct += 1;
        }
        let max = row[argmax];
        let target = row[i];
        let mut sum = 0.0;
        for s in row.iter_mut() {
            *s = (*s - max).exp();
            sum += *s;
        }
        loss += sum.ln() + max - target;
        row /= sum;
    }
    let bf = b as f64;
    loss /= bf;

    // probs now holds softmax rows; subtract the targets to get dL/dS · B.
    for i in 0..b {
        probs[[i, i]] -= 1.0;
    }
    let g = probs / (bf * temperature);
    let grad_u = g.dot(&w);
    let grad_w = g.t().dot(&u);
    Ok(LossOutput {
        loss,
        accuracy: correct as f64 / bf,
        grad_view1: normalize_backward(view1, &nu, &grad_u),
        grad_view2: normalize_backward(view2, &nw, &grad_w),
    })
}

/// Mean cross-entropy of each anchor against its own second view, and the
/// fraction of anchors whose most similar candidate is that second view.
pub fn contrastive_loss(
    view1: ArrayView2<f64>,
    view2: ArrayView2<f64>,
    temperature: f64,
) -> Result<(f64, f64)> {
    let out = contrastive_loss_with_grad(view1, view2, temperature)?;
    Ok((out.loss, out.accuracy))
}
