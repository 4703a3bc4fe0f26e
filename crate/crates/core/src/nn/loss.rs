use super::NnError;
use crate::numeric::{softmax_in_place, RealMatrix};

/// `−log softmax(logits)[label]` and its gradient `softmax(logits) − onehot(label)`.
pub fn softmax_cross_entropy(logits: &RealMatrix, label: usize) -> Result<(f64, RealMatrix), NnError> {
    if logits.rows() != 1 || logits.cols() == 0 {
        return Err(NnError::Dimension(format!(
            "logits must be a 1xC row, got {}x{}",
            logits.rows(),
            logits.cols()
        )));
    }
    if label >= logits.cols() {
        return Err(NnError::InvalidLabel {
            label,
            classes: logits.cols(),
        });
    }
    let (loss, grad) = row_loss(logits.as_slice(), label);
    Ok((loss, RealMatrix::row_vector(&grad)))
}

pub(crate) fn row_loss(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    let loss = log_z - logits[label];
    let mut p = logits.to_vec();
    softmax_in_place(&mut p);
    p[label] -= 1.0;
    (loss, p)
}

/// Mean loss over a `B × C` batch and the gradient of that mean.
pub fn batch_cross_entropy(logits: &RealMatrix, labels: &[usize]) -> Result<(f64, RealMatrix), NnError> {
    if logits.rows() != labels.len() || labels.is_empty() {
        return Err(NnError::Dimension(format!(
            "{} logit rows for {} labels",
            logits.rows(),
            labels.len()
        )));
    }
    let c = logits.cols();
    let b = labels.len() as f64;
    let mut total = 0.0;
    let mut grad = RealMatrix::zeros(logits.rows(), c);
    for (r, &label) in labels.iter().enumerate() {
        if label >= c {
            return Err(NnError::InvalidLabel { label, classes: c });
        }
        let (l, g) = row_loss(logits.row(r), label);
        total += l;
        for (dst, v) in grad.row_mut(r).iter_mut().zip(g) {
            *dst = v / b;
        }
    }
    Ok((total / b, grad))
}
