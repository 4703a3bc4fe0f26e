use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{CVReport, ConfusionMatrix, EvalError};

fn cm_markdown(cm: &ConfusionMatrix, names: &[String]) -> String {
    let mut out = String::from("| true \\ predicted |");
    for n in names {
        let _ = write!(out, " {n} |");
    }
    out.push_str("\n|---|");
    for _ in names {
        out.push_str("---:|");
    }
    out.push('\n');
    for (t, n) in names.iter().enumerate() {
        let _ = write!(out, "| {n} |");
        for p in 0..cm.classes() {
            let _ = write!(out, " {} |", cm.get(t, p));
        }
        out.push('\n');
    }
    out
}

/// Markdown summary. Wall-clock times are left out so that the document is
/// a pure function of data, model and config.
pub fn render_report(r: &CVReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Leave-one-animal-out cross-validation: {}", r.model);
    out.push('\n');
    let _ = writeln!(out, "config: `{}`", r.config);
    out.push('\n');
    out.push_str("| fold | held-out animal | seed | train segments | test segments | MCC |\n");
    out.push_str("|---:|---|---:|---:|---:|---:|\n");
    for f in &r.folds {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {:.4} |",
            f.index, f.test_id, f.seed, f.n_train, f.n_test, f.mcc
        );
    }
    out.push('\n');
    let _ = writeln!(out, "pooled MCC: {:.4}", r.pooled_mcc);
    let _ = writeln!(out, "mean per-fold MCC: {:.4}", r.mean_fold_mcc());
    let _ = writeln!(out, "pooled accuracy: {:.4}", r.pooled.accuracy());
    out.push('\n');
    out.push_str("## Pooled confusion matrix\n\n");
    out.push_str(&cm_markdown(&r.pooled, &r.class_names));
    out
}

/// Per-fold wall-clock as CSV (`fold,animal,seconds`).
pub fn render_timings(r: &CVReport) -> String {
    let mut out = String::from("fold,animal,seconds\n");
    for f in &r.folds {
        let _ = writeln!(out, "{},{},{:.3}", f.index, f.test_id, f.seconds);
    }
    out
}

/// Writes `report.md`, `cm_fold_<animal>.csv` for every fold and
/// `cm_pooled.csv` into `dir`, creating it if needed. Returns the paths.
pub fn write_report(r: &CVReport, dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| EvalError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut files: Vec<(PathBuf, String)> = vec![(dir.join("report.md"), render_report(r))];
    for f in &r.folds {
        files.push((
            dir.join(format!("cm_fold_{}.csv", f.test_id)),
            f.confusion.to_csv(&r.class_names),
        ));
    }
    files.push((dir.join("cm_pooled.csv"), r.pooled.to_csv(&r.class_names)));
    let mut written = Vec::with_capacity(files.len());
    for (path, text) in files {
        fs::write(&path, text).map_err(io(&path))?;
        written.push(path);
    }
    Ok(written)
}
