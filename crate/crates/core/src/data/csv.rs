//! Segment CSV format.
//!
//! ```text
//! #classes=grazing,ruminating,resting,other
//! #rate_hz=50
//! animal_id,label,ax0,ay0,az0,ax1,...,az255
//! A01,0,9.81234567e-1,...
//! ```
//!
//! `label` is the integer class index. Readings are written in scientific
//! notation with 9 significant digits (`{:.8e}`). LF line endings.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{DataError, Dataset, LabeledSegment, Segment, AXES, SEGMENT_LEN};
use crate::numeric::RealMatrix;

const CLASSES_PREFIX: &str = "#classes=";
const RATE_PREFIX: &str = "#rate_hz=";
const VALUES_PER_ROW: usize = SEGMENT_LEN * AXES;

fn header_line() -> String {
    let mut h = String::from("animal_id,label");
    for t in 0..SEGMENT_LEN {
        for axis in ["ax", "ay", "az"] {
            let _ = write!(h, ",{axis}{t}");
        }
    }
    h
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_csv(&text)
}

pub fn parse_csv(text: &str) -> Result<Dataset, DataError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let err = |line: usize, msg: String| DataError::Parse { line, msg };

    let (n, first) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let classes = first
        .strip_prefix(CLASSES_PREFIX)
        .ok_or_else(|| err(n, format!("expected `{CLASSES_PREFIX}...`")))?;
    let class_names: Vec<String> = classes.split(',').map(str::to_owned).collect();
    if class_names.len() < 2 || class_names.iter().any(String::is_empty) {
        return Err(err(n, "need at least 2 non-empty class names".into()));
    }

    let (n, second) = lines
        .next()
        .ok_or_else(|| err(2, format!("missing `{RATE_PREFIX}` line")))?;
    let rate = second
        .strip_prefix(RATE_PREFIX)
        .ok_or_else(|| err(n, format!("expected `{RATE_PREFIX}...`")))?;
    let sample_rate_hz: f64 = rate
        .parse()
        .ok()
        .filter(|r: &f64| r.is_finite() && *r > 0.0)
        .ok_or_else(|| err(n, format!("invalid sample rate `{rate}`")))?;

    let (n, header) = lines.next().ok_or_else(|| err(3, "missing column header".into()))?;
    if header != header_line() {
        return Err(err(n, "column header does not match the segment format".into()));
    }

    let num_classes = class_names.len();
    let mut segments = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let animal_id = fields.next().unwrap_or_default();
        if animal_id.is_empty() {
            return Err(err(n, "empty animal_id".into()));
        }
        let label_text = fields.next().ok_or_else(|| err(n, "missing label".into()))?;
        let label: usize = label_text
            .parse()
            .map_err(|_| err(n, format!("unknown label `{label_text}`")))?;
        if label >= num_classes {
            return Err(err(
                n,
                format!("unknown label {label} ({num_classes} classes declared)"),
            ));
        }
        let mut values = Vec::with_capacity(VALUES_PER_ROW);
        for f in fields {
            let v: f64 = f
                .parse()
                .map_err(|_| err(n, format!("malformed value `{f}`")))?;
            if !v.is_finite() {
                return Err(err(n, format!("non-finite value `{f}`")));
            }
            values.push(v);
        }
        if values.len() != VALUES_PER_ROW {
            return Err(err(
                n,
                format!(
                    "expected {} columns, found {}",
                    VALUES_PER_ROW + 2,
                    values.len() + 2
                ),
            ));
        }
        let samples = RealMatrix::from_vec(SEGMENT_LEN, AXES, values)
            .expect("length checked above");
        segments.push(LabeledSegment {
            segment: Segment::new(samples).map_err(|e| err(n, e.to_string()))?,
            label,
            animal_id: animal_id.to_owned(),
        });
    }

    Ok(Dataset {
        class_names,
        segments,
        sample_rate_hz,
    })
}

pub fn write_csv(dataset: &Dataset, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{CLASSES_PREFIX}{}", dataset.class_names.join(","))?;
    writeln!(out, "{RATE_PREFIX}{}", dataset.sample_rate_hz)?;
    writeln!(out, "{}", header_line())?;
    let mut row = String::with_capacity(VALUES_PER_ROW * 16);
    for s in &dataset.segments {
        row.clear();
        let _ = write!(row, "{},{}", s.animal_id, s.label);
        for v in s.segment.samples().as_slice() {
            let _ = write!(row, ",{v:.8e}");
        }
        row.push('\n');
        out.write_all(row.as_bytes())?;
    }
    Ok(())
}

pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let io_err = |source| DataError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    write_csv(dataset, &mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_dataset, SynthSpec};

    fn to_string(ds: &Dataset) -> String {
        let mut buf = Vec::new();
        write_csv(ds, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    fn small() -> Dataset {
        synth_dataset(&SynthSpec {
            n_animals: 2,
            segments_per_animal: 1,
            ..SynthSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn header_has_770_columns() {
        let h = header_line();
        assert_eq!(h.split(',').count(), 2 + 768);
        assert!(h.starts_with("animal_id,label,ax0,ay0,az0,ax1,"));
        assert!(h.ends_with(",az255"));
    }

    #[test]
    fn two_rows_load() {
        let ds = small();
        let text = to_string(&ds);
        assert_eq!(text.lines().count(), 5);
        let back = parse_csv(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.class_names, ds.class_names);
        assert_eq!(back.animal_ids(), ds.animal_ids());
    }

    #[test]
    fn empty_dataset_is_header_only() {
        let mut ds = small();
        ds.segments.clear();
        let text = to_string(&ds);
        assert_eq!(text.lines().count(), 3);
        assert!(parse_csv(&text).unwrap().is_empty());
    }

    #[test]
    fn one_segment_adds_one_line() {
        let mut ds = small();
        ds.segments.truncate(1);
        assert_eq!(to_string(&ds).lines().count(), 4);
    }

    #[test]
    fn short_row_reports_its_line() {
        let text = to_string(&small());
        let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
        // drop the last reading of the second data row: 767 values
        let cut = lines[4].rfind(',').unwrap();
        lines[4].truncate(cut);
        let broken = lines.join("\n");
        match parse_csv(&broken) {
            Err(DataError::Parse { line, msg }) => {
                assert_eq!(line, 5);
                assert!(msg.contains("769"), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_label_is_rejected() {
        let text = to_string(&small());
        let broken = text.replacen("\nA01,", "\nA01,9", 1);
        let e = parse_csv(&broken).unwrap_err();
        assert!(matches!(e, DataError::Parse { line: 4, .. }), "{e}");
        let named = text.replacen("\nA01,", "\nA01,grazing", 1);
        assert!(parse_csv(&named).is_err());
    }

    #[test]
    fn bad_metadata_lines() {
        assert!(matches!(
            parse_csv("classes=a,b\n"),
            Err(DataError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_csv("#classes=a,b\n#rate_hz=fast\n"),
            Err(DataError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_csv("#classes=a,b\n#rate_hz=50\nanimal_id,label\n"),
            Err(DataError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn missing_file_names_path() {
        let e = load_csv("/nonexistent/dir/d.csv").unwrap_err();
        assert!(e.to_string().contains("/nonexistent/dir/d.csv"));
    }
}
