use std::fmt::Write as _;

use super::ComplexityReport;

pub const CSV_HEADER: &str = "model,operations_M,parameters_K,memory_MB";

pub fn render_csv(reports: &[ComplexityReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.model,
            r.ops_display(),
            r.params_display(),
            r.memory_display()
        );
    }
    out
}

pub fn render_markdown(reports: &[ComplexityReport]) -> String {
    let mut out = String::from("| model | operations (M) | parameters (K) | memory (MB) |\n");
    out.push_str("|---|---:|---:|---:|\n");
    for r in reports {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            r.model,
            r.ops_display(),
            r.params_display(),
            r.memory_display()
        );
    }
    out
}

/// Exact per-layer counts of one report.
pub fn render_breakdown_markdown(r: &ComplexityReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "### {} (L={}, C={})", r.model, r.seq_len, r.num_classes);
    out.push('\n');
    out.push_str("| layer | mults | mults (true input width) | params | activations |\n");
    out.push_str("|---|---:|---:|---:|---:|\n");
    for l in &r.layers {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            l.name, l.mult_ops, l.mult_ops_true_input, l.params, l.activations
        );
    }
    let _ = writeln!(
        out,
        "| total | {} | {} | {} | {} |",
        r.mult_ops,
        r.mult_ops_true_input,
        r.params,
        r.activations()
    );
    out.push('\n');
    let _ = writeln!(out, "memory estimate: {} bytes", r.memory_bytes);
    out
}
