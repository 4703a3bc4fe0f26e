//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --release --test acceptance`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use herdrnn::cli::run;
use herdrnn::complexity::{analyze_name, LengthConvention};
use herdrnn::evaluation::{mcc, ConfusionMatrix};
use herdrnn::model::{ClassifierParams, ModelSpec};
use herdrnn::nn::ParamTensors;
use herdrnn::numeric::{RealMatrix, RngStream};

/// Published complexity table: model, operations (M), parameters (K), memory (MB).
const PUBLISHED: [(&str, f64, f64, f64); 26] = [
    ("bi-LSTM-2-128", 134.7, 661.0, 3.3),
    ("bi-LSTM-2-64", 33.8, 166.7, 1.0),
    ("bi-LSTM-2-32", 8.5, 42.3, 0.4),
    ("bi-LSTM-1-128", 67.4, 265.7, 1.8),
    ("bi-LSTM-1-64", 16.9, 67.3, 0.7),
    ("bi-LSTM-1-32", 4.3, 17.3, 0.3),
    ("uni-LSTM-2-128", 67.4, 265.2, 1.5),
    ("uni-LSTM-2-64", 16.9, 67.1, 0.5),
    ("uni-LSTM-2-32", 4.3, 17.2, 0.2),
    ("uni-LSTM-1-128", 33.8, 133.1, 1.0),
    ("uni-LSTM-1-64", 8.5, 33.8, 0.4),
    ("uni-LSTM-1-32", 2.1, 8.7, 0.2),
    ("bi-GRU-2-128", 101.2, 496.1, 2.7),
    ("bi-GRU-2-64", 25.4, 125.2, 0.9),
    ("bi-GRU-2-32", 6.4, 31.9, 0.3),
    ("bi-GRU-1-128", 50.6, 199.7, 1.5),
    ("bi-GRU-1-64", 12.7, 50.7, 0.6),
    ("bi-GRU-1-32", 3.2, 13.1, 0.3),
    ("uni-GRU-2-128", 50.7, 199.2, 1.3),
    ("uni-GRU-2-64", 12.7, 50.4, 0.5),
    ("uni-GRU-2-32", 3.2, 12.9, 0.2),
    ("uni-GRU-1-128", 25.4, 100.1, 0.9),
    ("uni-GRU-1-64", 6.4, 25.5, 0.4),
    ("uni-GRU-1-32", 1.6, 6.6, 0.2),
    ("FCN", 67.9, 267.3, 3.0),
    ("ResNet", 132.6, 520.2, 4.6),
];

/// Cells where the published table disagrees with its own arithmetic:
/// uni-GRU-2-128 has exactly the operation count of bi-GRU-1-128 (shown as
/// 50.6) yet is printed as 50.7; bi-LSTM-2-32 has 42,372 parameters, which
/// rounds to 42.4. These are reported as failures; any other mismatch also
/// fails the run.
const TABLE_INCONSISTENCIES: [&str; 2] = ["uni-GRU-2-128 operations", "bi-LSTM-2-32 parameters"];

struct Outcome {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
    /// Failure limited to documented table inconsistencies.
    tolerated: bool,
}

fn herd(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("herdrnn").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn tenths(v: f64) -> i64 {
    (v * 10.0).round() as i64
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (code, csv, _) = herd(&["complexity", "--all", "--classes", "4", "--seq-len", "256", "--format", "csv"]);
    let elapsed = start.elapsed().as_secs_f64();
    let mut mismatches = Vec::new();
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let Some(&(_, ops, params, _)) = PUBLISHED[..24].iter().find(|r| r.0 == f[0]) else {
            continue;
        };
        rows += 1;
        let got_ops: f64 = f[1].parse().unwrap();
        let got_params: f64 = f[2].parse().unwrap();
        if tenths(got_ops) != tenths(ops) {
            mismatches.push((format!("{} operations", f[0]), format!("{got_ops} vs {ops}")));
        }
        if tenths(got_params) != tenths(params) {
            mismatches.push((format!("{} parameters", f[0]), format!("{got_params} vs {params}")));
        }
    }
    let pass = code == 0 && rows == 24 && mismatches.is_empty() && elapsed < 1.0;
    let names: BTreeSet<&str> = mismatches.iter().map(|m| m.0.as_str()).collect();
    let known: BTreeSet<&str> = TABLE_INCONSISTENCIES.into_iter().collect();
    let tolerated = !pass && code == 0 && rows == 24 && elapsed < 1.0 && names == known;
    let listed: Vec<String> = mismatches.iter().map(|(n, d)| format!("{n} {d}")).collect();
    Outcome {
        id: 1,
        title: "Complexity golden grid",
        pass,
        detail: format!(
            "{}/48 cells match, {:.3} s; mismatches: [{}]",
            48 - mismatches.len(),
            elapsed,
            listed.join("; ")
        ),
        tolerated,
    }
}

fn within(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want
}

fn criterion_2() -> Outcome {
    let fcn = analyze_name("FCN", 256, 4, LengthConvention::Padded).unwrap();
    let res = analyze_name("ResNet", 256, 4, LengthConvention::Padded).unwrap();
    let valid = analyze_name("FCN", 256, 4, LengthConvention::Valid).unwrap();
    let (_, md, _) = herd(&["complexity", "--all", "--classes", "4"]);
    let checks = [
        within(fcn.params as f64, 267.3e3, 0.01),
        within(fcn.mult_ops as f64, 67.9e6, 0.01),
        within(res.params as f64, 520.2e3, 0.02),
        within(res.mult_ops as f64, 132.6e6, 0.01),
        valid.ops_display() == "67.0" && md.contains("67.0M"),
    ];
    Outcome {
        id: 2,
        title: "CNN baselines complexity",
        pass: checks.iter().all(|&c| c),
        detail: format!(
            "FCN {} params ({:+.2}%), {} ops ({:+.2}%); ResNet {} params ({:+.2}%), {} ops ({:+.2}%); FCN valid {} ops",
            fcn.params,
            100.0 * (fcn.params as f64 / 267.3e3 - 1.0),
            fcn.mult_ops,
            100.0 * (fcn.mult_ops as f64 / 67.9e6 - 1.0),
            res.params,
            100.0 * (res.params as f64 / 520.2e3 - 1.0),
            res.mult_ops,
            100.0 * (res.mult_ops as f64 / 132.6e6 - 1.0),
            valid.mult_ops
        ),
        tolerated: false,
    }
}

fn criterion_3() -> Outcome {
    let mut worst = (String::new(), 1.0f64);
    let mut fails = Vec::new();
    for &(name, _, _, mem) in &PUBLISHED[..24] {
        let r = analyze_name(name, 256, 4, LengthConvention::Padded).unwrap();
        let ratio = r.memory_mb() / mem;
        if (ratio - 1.0).abs() > (worst.1 - 1.0).abs() {
            worst = (name.to_owned(), ratio);
        }
        if !(0.5..=1.5).contains(&ratio) {
            fails.push(format!("{name} {:.3}", ratio));
        }
    }
    Outcome {
        id: 3,
        title: "Memory model within ±50%",
        pass: fails.is_empty(),
        detail: format!(
            "worst ratio {:.3} ({}); out of band: [{}]",
            worst.1,
            worst.0,
            fails.join(", ")
        ),
        tolerated: false,
    }
}

/// `|a − f| / max(|a|, |f|, 1e-6)`; the floor keeps vanishing gradients from
/// turning round-off into large ratios.
fn rel_err(a: f64, f: f64) -> f64 {
    (a - f).abs() / a.abs().max(f.abs()).max(1e-6)
}

const GRAD_SAMPLES_PER_TENSOR: usize = 32;

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let eps = 1e-5;
    let mut worst = (String::new(), 0.0f64);
    let mut checked = 0usize;
    for (i, spec) in ModelSpec::grid(4).into_iter().enumerate() {
        let mut rng = RngStream::new(4000 + i as u64);
        let params = ClassifierParams::init_with(spec, &mut rng);
        let seqs: Vec<RealMatrix> = (0..3).map(|_| rng.uniform_matrix(8, 3, -1.0, 1.0).unwrap()).collect();
        let refs: Vec<&RealMatrix> = seqs.iter().collect();
        let labels: Vec<usize> = (0..3).map(|_| rng.below(4)).collect();
        let (_, grad) = params.loss_and_grad(&refs, &labels).unwrap();
        let mut probe = params.clone();
        for ti in 0..params.tensors().len() {
            let len = params.tensors()[ti].len();
            let mut idx: Vec<usize> = (0..len).collect();
            rng.shuffle(&mut idx);
            idx.truncate(GRAD_SAMPLES_PER_TENSOR);
            for k in idx {
                let orig = params.tensors()[ti].as_slice()[k];
                probe.tensors_mut()[ti].as_mut_slice()[k] = orig + eps;
                let lp = probe.loss(&refs, &labels).unwrap();
                probe.tensors_mut()[ti].as_mut_slice()[k] = orig - eps;
                let lm = probe.loss(&refs, &labels).unwrap();
                probe.tensors_mut()[ti].as_mut_slice()[k] = orig;
                let e = rel_err(grad.tensors()[ti].as_slice()[k], (lp - lm) / (2.0 * eps));
                if e > worst.1 {
                    worst = (format!("{spec} {}[{k}]", params.param_names()[ti]), e);
                }
                checked += 1;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    Outcome {
        id: 4,
        title: "Gradient correctness (BPTT vs central differences, L=8, C=4)",
        pass: worst.1 <= 1e-4 && elapsed < 120.0,
        detail: format!(
            "24 models, {checked} coordinates (up to {GRAD_SAMPLES_PER_TENSOR} per tensor), worst rel err {:.2e} at {}, {:.1} s",
            worst.1, worst.0, elapsed
        ),
        tolerated: false,
    }
}

fn criterion_5() -> Outcome {
    let mut bad = 0usize;
    let mut degenerate = 0usize;
    let mut compared = 0usize;
    for tp in 0..=20u64 {
        for fn_ in 0..=20u64 {
            for fp in 0..=20u64 {
                for tn in 0..=20u64 {
                    // rows true (positive, negative), columns predicted
                    let cm = ConfusionMatrix::from_counts(2, vec![tp, fn_, fp, tn]).unwrap();
                    let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)) as f64;
                    let got = mcc(&cm);
                    if den == 0.0 {
                        degenerate += 1;
                        if got != 0.0 {
                            bad += 1;
                        }
                    } else {
                        compared += 1;
                        let want = ((tp * tn) as f64 - (fp * fn_) as f64) / den.sqrt();
                        if (got - want).abs() > 1e-12 {
                            bad += 1;
                        }
                    }
                }
            }
        }
    }
    let mut rng = RngStream::new(55);
    let mut perm_bad = 0;
    for _ in 0..1000 {
        let counts: Vec<u64> = (0..16).map(|_| rng.below(30) as u64).collect();
        let cm = ConfusionMatrix::from_counts(4, counts).unwrap();
        let mut perm: Vec<usize> = (0..4).collect();
        rng.shuffle(&mut perm);
        if (mcc(&cm) - mcc(&cm.permuted(&perm))).abs() > 1e-12 {
            perm_bad += 1;
        }
    }
    Outcome {
        id: 5,
        title: "MCC oracle equivalence",
        pass: bad == 0 && perm_bad == 0,
        detail: format!(
            "{compared} nondegenerate + {degenerate} degenerate 2x2 matrices, {bad} disagreements; 1000 permuted C=4 matrices, {perm_bad} changed"
        ),
        tolerated: false,
    }
}

fn mcc_from_stdout(s: &str) -> f64 {
    s.lines()
        .find_map(|l| l.strip_prefix("MCC="))
        .and_then(|v| v.parse().ok())
        .expect("MCC line")
}

fn median3(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[1]
}

struct Workdir {
    root: PathBuf,
    data: String,
}

fn crossval(w: &Workdir, model: &str, seed: u64, parallel: usize, tag: &str) -> (f64, f64, PathBuf) {
    let dir = w.root.join(tag);
    let start = Instant::now();
    let (code, out, err) = herd(&[
        "crossval",
        "--data",
        &w.data,
        "--model",
        model,
        "--seed",
        &seed.to_string(),
        "--parallel-folds",
        &parallel.to_string(),
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    (mcc_from_stdout(&out), start.elapsed().as_secs_f64(), dir)
}

fn criterion_6(w: &Workdir) -> (Outcome, PathBuf) {
    let mut m64 = Vec::new();
    let mut m32 = Vec::new();
    let mut t64 = 0.0;
    let mut first_dir = PathBuf::new();
    for seed in 0..3u64 {
        let (m, t, dir) = crossval(w, "uni-GRU-1-64", seed, 1, &format!("cv64_s{seed}"));
        if seed == 0 {
            t64 = t;
            first_dir = dir;
        }
        m64.push(m);
        m32.push(crossval(w, "uni-GRU-1-32", seed, 1, &format!("cv32_s{seed}")).0);
    }
    let (med64, med32) = (median3(m64.clone()), median3(m32.clone()));
    let pass = m64[0] >= 0.9 && t64 < 600.0 && med64 >= med32;
    (
        Outcome {
            id: 6,
            title: "End-to-end desk-scale pipeline",
            pass,
            detail: format!(
                "uni-GRU-1-64 pooled MCC {:.4} in {:.1} s (seed 0); seeds 0-2: 64 {:?}, 32 {:?}; median 64 {:.4} >= median 32 {:.4}",
                m64[0], t64, fmt4(&m64), fmt4(&m32), med64, med32
            ),
            tolerated: false,
        },
        first_dir,
    )
}

fn fmt4(v: &[f64]) -> Vec<String> {
    v.iter().map(|x| format!("{x:.4}")).collect()
}

fn same_tree(a: &Path, b: &Path) -> Result<usize, String> {
    let list = |d: &Path| -> Vec<String> {
        let mut v: Vec<String> = fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        v.sort();
        v
    };
    let (la, lb) = (list(a), list(b));
    if la != lb {
        return Err(format!("file lists differ: {la:?} vs {lb:?}"));
    }
    for n in &la {
        if fs::read(a.join(n)).unwrap() != fs::read(b.join(n)).unwrap() {
            return Err(format!("{n} differs"));
        }
    }
    Ok(la.len())
}

fn criterion_7(w: &Workdir, sequential_report: &Path) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let weights: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let path = w.root.join(format!("w{i}.json"));
            let (code, _, err) = herd(&[
                "train", "--data", &w.data, "--model", "bi-GRU-1-32", "--iterations", "5", "--seed", "3", "--out",
                path.to_str().unwrap(),
            ]);
            assert_eq!(code, 0, "{err}");
            fs::read(path).unwrap()
        })
        .collect();
    if weights[0] == weights[1] {
        notes.push(format!("weight files identical ({} bytes)", weights[0].len()));
    } else {
        pass = false;
        notes.push("weight files differ".into());
    }
    let (_, _, par_dir) = crossval(w, "uni-GRU-1-64", 0, 4, "cv64_s0_par4");
    match same_tree(sequential_report, &par_dir) {
        Ok(n) => notes.push(format!("{n} report files identical for --parallel-folds 1 vs 4")),
        Err(e) => {
            pass = false;
            notes.push(e);
        }
    }
    Outcome {
        id: 7,
        title: "Determinism",
        pass,
        detail: notes.join("; "),
        tolerated: false,
    }
}

fn criterion_8() -> Outcome {
    let readme = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md");
    let text = fs::read_to_string(&readme).unwrap_or_default();
    let pass = text.contains("Table 2") && text.contains("Figs. 4–5") && text.contains("private");
    Outcome {
        id: 8,
        title: "Non-reproducible disclosure",
        pass,
        detail: if pass {
            "README states that Table 2 MCCs and Figs. 4–5 confusion matrices need the private datasets; no check here claims them".into()
        } else {
            format!("disclosure missing from {}", readme.display())
        },
        tolerated: false,
    }
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("synthetic.csv");
    let (code, _, err) = herd(&[
"synth", "--out", data.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let w = Workdir {
        root: tmp.path().to_path_buf(),
        data: data.to_str().unwrap().to_owned(),
    };

    let mut outcomes = vec![criterion_1(), criterion_2(), criterion_3(), criterion_4(), criterion_5()];
    let (c6, seq_dir) = criterion_6(&w);
    outcomes.push(c6);
    outcomes.push(criterion_7(&w, &seq_dir));
    outcomes.push(criterion_8());

    for o in &outcomes {
        let status = if o.pass { "PASS" } else { "FAIL" };
        let note = if o.tolerated { " (published table is internally inconsistent in these cells)" } else { "" };
        println!("{status} [{}] {}: {}{}", o.id, o.title, o.detail, note);
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("acceptance: {passed}/{} criteria pass", outcomes.len());
    if outcomes.iter().any(|o| !o.pass && !o.tolerated) {
        std::process::exit(1);
    }
}
