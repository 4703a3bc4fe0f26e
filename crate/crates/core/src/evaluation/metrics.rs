use std::fmt::Write as _;

use super::EvalError;

/// `C × C` counts, rows true class, columns predicted class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    /// Row-major `C × C` counts.
    pub fn from_counts(classes: usize, counts: Vec<u64>) -> Result<Self, EvalError> {
        if counts.len() != classes * classes {
            return Err(EvalError::Usage(format!(
                "{} counts for a {classes}x{classes} matrix",
                counts.len()
            )));
        }
        Ok(Self { classes, counts })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.classes + pred]
    }

    pub fn add(&mut self, truth: usize, pred: usize) {
        self.counts[truth * self.classes + pred] += 1;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes).map(|k| self.get(k, k)).sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.chunks(self.classes).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.classes)
            .map(|p| (0..self.classes).map(|t| self.get(t, p)).sum())
            .collect()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.classes, other.classes, "confusion matrices of different size");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    /// Relabels classes: entry `(t, p)` moves to `(perm[t], perm[p])`.
    pub fn permuted(&self, perm: &[usize]) -> ConfusionMatrix {
        let mut out = ConfusionMatrix::new(self.classes);
        for t in 0..self.classes {
            for p in 0..self.classes {
                out.counts[perm[t] * self.classes + perm[p]] = self.get(t, p);
            }
        }
        out
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.trace() as f64 / total as f64
        }
    }

    /// Integer grid with a class-name header row and column.
    pub fn to_csv(&self, class_names: &[String]) -> String {
        let mut out = String::from("true\\predicted");
        for name in class_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (t, name) in class_names.iter().enumerate() {
            out.push_str(name);
            for p in 0..self.classes {
                let _ = write!(out, ",{}", self.get(t, p));
            }
            out.push('\n');
        }
        out
    }
}

pub fn confusion(truths: &[usize], preds: &[usize], classes: usize) -> Result<ConfusionMatrix, EvalError> {
    if truths.len() != preds.len() {
        return Err(EvalError::Usage(format!(
            "{} truths but {} predictions",
            truths.len(),
            preds.len()
        )));
    }
    let mut cm = ConfusionMatrix::new(classes);
    for (&t, &p) in truths.iter().zip(preds) {
        if t >= classes || p >= classes {
            return Err(EvalError::Usage(format!(
                "label pair ({t}, {p}) out of range for {classes} classes"
            )));
        }
        cm.add(t, p);
    }
    Ok(cm)
}

/// Multiclass Matthews correlation (Gorodkin's R_K). Zero when either
/// marginal is concentrated in a single class.
pub fn mcc(cm: &ConfusionMatrix) -> f64 {
    let s = cm.total() as i128;
    let c = cm.trace() as i128;
    let t = cm.row_sums();
    let p = cm.col_sums();
    let pt: i128 = t.iter().zip(&p).map(|(&a, &b)| a as i128 * b as i128).sum();
    let pp: i128 = p.iter().map(|&v| v as i128 * v as i128).sum();
    let tt: i128 = t.iter().map(|&v| v as i128 * v as i128).sum();
    let den_p = s * s - pp;
    let den_t = s * s - tt;
    if den_p == 0 || den_t == 0 {
        return 0.0;
    }
    let num = (c * s - pt) as f64;
    (num / ((den_p * den_t) as f64).sqrt()).clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_diagonal() {
        let cm = confusion(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        assert_eq!(cm.counts(), &[1, 0, 0, 0, 1, 0, 0, 0, 1]);
        assert_eq!(mcc(&cm), 1.0);
    }

    #[test]
    fn empty_input() {
        let cm = confusion(&[], &[], 4).unwrap();
        assert_eq!(cm.total(), 0);
        assert_eq!(mcc(&cm), 0.0);
    }

    #[test]
    fn out_of_range_label() {
        assert!(confusion(&[0, 3], &[0, 1], 3).is_err());
        assert!(confusion(&[0], &[0, 1], 3).is_err());
    }

    #[test]
    fn single_predicted_column() {
        let cm = confusion(&[0, 1, 2, 1], &[1, 1, 1, 1], 3).unwrap();
        assert_eq!(mcc(&cm), 0.0);
    }

    #[test]
    fn classic_binary_case() {
        let cm = ConfusionMatrix::from_counts(2, vec![6, 2, 1, 3]).unwrap();
        let want = 16.0 / 1120f64.sqrt();
        assert!((mcc(&cm) - want).abs() < 1e-15);
        assert!((mcc(&cm) - 0.4781).abs() < 1e-4);
    }

    #[test]
    fn csv_grid() {
        let cm = confusion(&[0, 1, 1], &[0, 1, 0], 2).unwrap();
        let names = vec!["a".to_owned(), "b".to_owned()];
        assert_eq!(cm.to_csv(&names), "true\\predicted,a,b\na,1,0\nb,1,1\n");
    }
}
