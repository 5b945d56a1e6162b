//! Dataset CSV ingestion, the synthetic dataset generator, and the
//! versioned model file.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::evaluation::rng_for;
use crate::gas::{FaultLabel, GasSample};
use crate::gbt::GbtModel;
use crate::ranking::RankOrder;
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 7] = ["id", "h2", "ch4", "c2h6", "c2h4", "c2h2", "label"];

/// Per-class sample counts of the reference study (PD, D1, D2, T1, T2, T3).
pub const DEFAULT_CLASS_COUNTS: [usize; 6] = [42, 67, 113, 80, 21, 53];

/// Six labelled reference transformers bundled with the crate.
pub const REFERENCE_SAMPLES_CSV: &str = include_str!("../data/reference_samples.csv");

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses dataset CSV from `reader`; `origin` names the source in errors.
pub fn parse_dataset<R: Read>(reader: R, origin: &Path) -> Result<Vec<GasSample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };

    let headers = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(parse_err(1, "missing header row".into()));
    }
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let mut cols = [0usize; 6];
    for (slot, name) in cols.iter_mut().zip(&CSV_HEADER[..6]) {
        *slot =
            column(name).ok_or_else(|| parse_err(1, format!("header lacks column {name:?}")))?;
    }
    let label_col = column("label");

    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let mut gases = [0.0; 5];
        for (g, (&col, name)) in gases
            .iter_mut()
            .zip(cols[1..].iter().zip(&CSV_HEADER[1..6]))
        {
            let raw = field(col);
            *g = raw
                .parse::<f64>()
                .map_err(|_| parse_err(line, format!("{name} = {raw:?} is not a number")))?;
            if !g.is_finite() || *g < 0.0 {
                return Err(parse_err(
                    line,
                    format!("{name} = {raw} must be a non-negative finite value"),
                ));
            }
        }
        let label = match label_col.map(field).unwrap_or("") {
            "" => None,
            s => Some(
                s.parse::<FaultLabel>()
                    .map_err(|_| parse_err(line, format!("unknown label {s:?}")))?,
            ),
        };
        let id = match field(cols[0]) {
            "" => format!("row{line}"),
            s => s.to_string(),
        };
        out.push(GasSample::new(id, gases, label)?);
    }
    Ok(out)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<GasSample>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(io_err(path))?;
    parse_dataset(file, path)
}

/// The bundled reference samples, parsed.
pub fn reference_samples() -> Vec<GasSample> {
    parse_dataset(
        REFERENCE_SAMPLES_CSV.as_bytes(),
        Path::new("reference_samples.csv"),
    )
    .expect("bundled dataset parses")
}

pub fn dataset_to_csv(samples: &[GasSample]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for s in samples {
        let g = s.gases().map(|v| v.to_string());
        let label = s.label.map_or("", FaultLabel::as_str);
        w.write_record([s.id.as_str(), &g[0], &g[1], &g[2], &g[3], &g[4], label])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush to Vec")).expect("csv output is UTF-8")
}

/// Writes `contents` to a temporary file beside `path`, then renames it
/// into place.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err(path))?;
    tmp.write_all(contents).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

pub fn write_dataset(path: impl AsRef<Path>, samples: &[GasSample]) -> Result<()> {
    write_atomic(path, dataset_to_csv(samples).as_bytes())
}

/// Log-uniform concentration ranges (ppm) of one synthetic class, in the
/// order H2, CH4, C2H6, C2H4, C2H2.
#[derive(Debug, Clone, Copy)]
pub struct ClassProfile {
    pub ranges: [(f64, f64); 5],
}

/// Generator profiles, one per class in canonical order. The CH4, C2H4 and
/// C2H2 ranges place most draws inside the class's Duval zone; H2 and C2H6
/// follow the usual tendencies (H2 dominant for PD, C2H6 high for low
/// temperature overheating).
pub const SYNTHETIC_PROFILES: [ClassProfile; 6] = [
    // PD
    ClassProfile {
        ranges: [
            (200.0, 3000.0),
            (20.0, 200.0),
            (2.0, 40.0),
            (0.001, 0.3),
            (0.001, 0.1),
        ],
    },
    // D1
    ClassProfile {
        ranges: [
            (50.0, 600.0),
            (5.0, 40.0),
            (1.0, 20.0),
            (1.0, 10.0),
            (25.0, 200.0),
        ],
    },
    // D2
    ClassProfile {
        ranges: [
            (100.0, 800.0),
            (25.0, 80.0),
            (5.0, 40.0),
            (50.0, 110.0),
            (60.0, 200.0),
        ],
    },
    // T1
    ClassProfile {
        ranges: [
            (10.0, 200.0),
            (60.0, 300.0),
            (40.0, 400.0),
            (1.0, 12.0),
            (0.001, 1.0),
        ],
    },
    // T2
    ClassProfile {
        ranges: [
            (20.0, 300.0),
            (50.0, 150.0),
            (15.0, 80.0),
            (35.0, 90.0),
            (0.001, 2.0),
        ],
    },
    // T3
    ClassProfile {
        ranges: [
            (30.0, 400.0),
            (30.0, 120.0),
            (10.0, 60.0),
            (150.0, 600.0),
            (0.001, 8.0),
        ],
    },
];

fn draw_log_uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    let v = rng.gen_range(lo.ln()..hi.ln()).exp();
    // Three decimals, as reported by laboratories, with the 0.001 ppm floor.
    ((v * 1000.0).round() / 1000.0).max(0.001)
}

/// Seeded synthetic dataset with `counts[c]` samples of class `c`.
pub fn generate_synthetic(seed: u64, counts: &[usize; 6]) -> Vec<GasSample> {
    let mut out = Vec::with_capacity(counts.iter().sum());
    for (c, (&n, profile)) in counts.iter().zip(&SYNTHETIC_PROFILES).enumerate() {
        let mut rng = rng_for(seed, c as u64);
        let label = FaultLabel::ALL[c];
        for i in 0..n {
            let gases = profile.ranges.map(|r| draw_log_uniform(&mut rng, r));
            out.push(GasSample {
                id: format!("syn-{label}-{:03}", i + 1),
                h2: gases[0],
                ch4: gases[1],
                c2h6: gases[2],
                c2h4: gases[3],
                c2h2: gases[4],
                label: Some(label),
            });
        }
    }
    out
}

pub const MODEL_FORMAT_VERSION: u64 = 1;

/// Everything needed to featurize and classify a new sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u64,
    pub rank_order: RankOrder,
    pub k: usize,
    pub model: GbtModel,
}

impl ModelFile {
    pub fn new(model: GbtModel, rank_order: RankOrder, k: usize) -> Self {
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            rank_order,
            k,
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::ModelFormat("missing format_version".into()))?;
        if version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelVersion {
                found: version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let file: ModelFile =
            serde_json::from_value(value).map_err(|e| Error::ModelFormat(e.to_string()))?;
        file.check()?;
        Ok(file)
    }

    fn check(&self) -> Result<()> {
        let m = &self.model;
        if m.n_features != self.k {
            return Err(Error::ModelFormat(format!(
                "model has {} features but k = {}",
                m.n_features, self.k
            )));
        }
        if m.class_order != FaultLabel::ALL {
            return Err(Error::ModelFormat("unexpected class order".into()));
        }
        m.config
            .validate()
            .map_err(|e| Error::ModelFormat(e.to_string()))?;
        for tree in m.trees.iter().flatten() {
            let n = tree.nodes.len();
            if n == 0 {
                return Err(Error::ModelFormat("empty tree".into()));
            }
            for (i, node) in tree.nodes.iter().enumerate() {
                let ok = match *node {
                    crate::gbt::Node::Leaf { weight } => weight.is_finite(),
                    crate::gbt::Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                        ..
                    } => {
                        feature < m.n_features
                            && !threshold.is_nan()
                            && left > i
                            && right > i
                            && left < n
                            && right < n
                    }
                };
                if !ok {
                    return Err(Error::ModelFormat(format!("invalid tree node {i}")));
                }
            }
        }
        if m.trees.iter().any(|r| r.len() != FaultLabel::COUNT) {
            return Err(Error::ModelFormat(
                "round without one tree per class".into(),
            ));
        }
        Ok(())
    }
}

pub fn save_model(path: impl AsRef<Path>, file: &ModelFile) -> Result<()> {
    write_atomic(path, file.to_json().as_bytes())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    ModelFile::from_json(&text)
}
