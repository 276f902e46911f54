//! Field files: one CSV row per space-time site plus a JSON sidecar.
//!
//! Rows run over slices `0..=n_max` and every window site, so a file holds
//! `(n_max + 1) x (2R + 1)^d` rows. Values are written with 17 significant
//! digits, which reload bit for bit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpaceTimeField;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub d: usize,
    #[serde(rename = "L")]
    pub range: usize,
    pub eps: f64,
    pub lambda: f64,
    pub n_max: usize,
    #[serde(rename = "R")]
    pub radius: usize,
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    /// What the field holds, e.g. `tau` or `pi`.
    pub kind: String,
    pub config_hash: Option<String>,
    pub code_version: Option<String>,
}

#[derive(Debug, Clone)]
pub struct FieldFile {
    pub meta: FieldMeta,
    pub field: SpaceTimeField,
    pub stderr: Option<SpaceTimeField>,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn header(d: usize, with_err: bool) -> String {
    let mut h = String::from("t_index");
    for i in 1..=d {
        write!(h, ",x{i}").unwrap();
    }
    h.push_str(",value");
    if with_err {
        h.push_str(",stderr");
    }
    h
}

impl FieldFile {
    pub fn new(meta: FieldMeta, field: SpaceTimeField) -> Self {
        FieldFile {
            meta,
            field,
            stderr: None,
        }
    }

    pub fn csv_string(&self) -> String {
        let f = &self.field;
        let w = f.window();
        let offsets = w.offsets();
        let mut s = header(f.d, self.stderr.is_some());
        s.push('\n');
        for n in 0..=f.n_max {
            for (i, x) in offsets.iter().enumerate() {
                write!(s, "{n}").unwrap();
                for c in x {
                    write!(s, ",{c}").unwrap();
                }
                write!(s, ",{:.16e}", f.slice(n)[i]).unwrap();
                if let Some(e) = &self.stderr {
                    write!(s, ",{:.16e}", e.slice(n)[i]).unwrap();
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn meta_string(&self) -> String {
        serde_json::to_string_pretty(&self.meta).expect("meta serializes") + "\n"
    }

    pub fn write(&self, csv: &Path) -> Result<()> {
        if !self.field.is_finite() {
            return Err(Error::Invariant(format!("{} holds non-finite values", self.meta.kind)));
        }
        std::fs::write(csv, self.csv_string())?;
        std::fs::write(sidecar_path(csv), self.meta_string())?;
        Ok(())
    }

    pub fn read(csv: &Path) -> Result<Self> {
        let meta_text = std::fs::read_to_string(sidecar_path(csv))?;
        let meta: FieldMeta = serde_json::from_str(&meta_text)?;
        let text = std::fs::read_to_string(csv)?;
        Self::parse(&text, meta, csv)
    }

    /// Parses CSV text against its metadata; errors carry the line number.
    pub fn parse(text: &str, meta: FieldMeta, path: &Path) -> Result<Self> {
        let err = |line: usize, reason: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let mut lines = text.lines().enumerate();
        let (_, head) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
        let with_err = if head == header(meta.d, true) {
            true
        } else if head == header(meta.d, false) {
            false
        } else {
            return Err(err(1, format!("header does not match d = {}", meta.d)));
        };
        let mut field = SpaceTimeField::zeros(meta.d, meta.eps, meta.n_max, meta.radius);
        let mut stderr = with_err.then(|| field.zeros_like());
        let w = field.window();
        let cols = meta.d + 2 + with_err as usize;
        let mut rows = 0;
        for (ln, line) in lines {
            let ln = ln + 1;
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != cols {
                return Err(err(ln, format!("expected {cols} columns, found {}", parts.len())));
            }
            let n: usize = parts[0].parse().map_err(|e| err(ln, format!("t_index: {e}")))?;
            let x: Vec<i64> = parts[1..=meta.d]
                .iter()
                .map(|p| p.parse::<i64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| err(ln, format!("offset: {e}")))?;
            let i = w
                .index(&x)
                .filter(|_| n <= meta.n_max)
                .ok_or_else(|| err(ln, format!("({n}, {x:?}) outside the window")))?;
            let s = w.size();
            field.data[n * s + i] = parts[meta.d + 1]
                .parse()
                .map_err(|e| err(ln, format!("value: {e}")))?;
            if let Some(e) = stderr.as_mut() {
                e.data[n * s + i] = parts[meta.d + 2]
                    .parse()
                    .map_err(|e| err(ln, format!("stderr: {e}")))?;
            }
            rows += 1;
        }
        let want = field.data.len();
        if rows != want {
            return Err(err(0, format!("{rows} rows, expected {want}")));
        }
        Ok(FieldFile {
            meta,
            field,
            stderr,
        })
    }
}

/// The config hash shared by every file; files from different runs, or
/// without a hash, are refused.
pub fn common_hash(metas: &[&FieldMeta]) -> Result<String> {
    let mut hash: Option<&str> = None;
    for m in metas {
        let h = m
            .config_hash
            .as_deref()
            .ok_or_else(|| Error::Mismatch(format!("{} field carries no config hash", m.kind)))?;
        match hash {
            Some(prev) if prev != h => {
                return Err(Error::Mismatch(format!("mixed config hashes {prev} and {h}")));
            }
            _ => hash = Some(h),
        }
    }
    hash.map(str::to_string)
        .ok_or_else(|| Error::validation("inputs", "no field files"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn meta(d: usize, n_max: usize, radius: usize) -> FieldMeta {
        FieldMeta {
            d,
            range: 1,
            eps: 0.5,
            lambda: 0.9,
            n_max,
            radius,
            seed: Some(1),
            samples: None,
            kind: "tau".into(),
            config_hash: None,
            code_version: None,
        }
    }

    #[test]
    fn delta_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let f = FieldFile::new(meta(2, 2, 1), SpaceTimeField::delta(2, 0.5, 2, 1));
        f.write(&p).unwrap();
        let g = FieldFile::read(&p).unwrap();
        assert_eq!(g.field, f.field);
        assert_eq!(g.meta, f.meta);
        assert_eq!(f.csv_string().lines().count(), 1 + 3 * 9);
    }

    #[test]
    fn wrong_dimension_rejected() {
        let f = FieldFile::new(meta(1, 1, 1), SpaceTimeField::delta(1, 0.5, 1, 1));
        let e = FieldFile::parse(&f.csv_string(), meta(2, 1, 1), Path::new("x.csv")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn malformed_row_reports_line() {
        let f = FieldFile::new(meta(1, 1, 1), SpaceTimeField::delta(1, 0.5, 1, 1));
        let text = f.csv_string().replacen("0,-1,", "0,-1,abc", 1);
        let e = FieldFile::parse(&text, meta(1, 1, 1), Path::new("x.csv")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e:?}");
    }

    #[test]
    fn mixed_hashes_refused() {
        let mut a = meta(1, 1, 1);
        a.config_hash = Some("aa".into());
        let mut b = a.clone();
        assert_eq!(common_hash(&[&a, &b]).unwrap(), "aa");
        b.config_hash = Some("bb".into());
        assert!(matches!(common_hash(&[&a, &b]), Err(Error::Mismatch(_))));
        b.config_hash = None;
        assert!(common_hash(&[&a, &b]).is_err());
    }

    proptest! {
        #[test]
        fn random_fields_reload_exactly(vals in proptest::collection::vec(-1e300f64..1e300, 15), errs in proptest::collection::vec(0.0f64..1.0, 15)) {
            let mut field = SpaceTimeField::zeros(1, 0.5, 2, 2);
            field.data.copy_from_slice(&vals);
            let mut se = field.zeros_like();
            se.data.copy_from_slice(&errs);
            let f = FieldFile { meta: meta(1, 2, 2), field, stderr: Some(se) };
            let g = FieldFile::parse(&f.csv_string(), meta(1, 2, 2), Path::new("x.csv")).unwrap();
            prop_assert_eq!(g.field.max_abs_diff(&f.field).unwrap(), 0.0);
            prop_assert_eq!(g.field.data, f.field.data);
            prop_assert_eq!(g.stderr.unwrap().data, f.stderr.unwrap().data);
        }
    }
}
