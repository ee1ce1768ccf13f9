//! File formats for sequences and pyramids.
//!
//! Sequence JSON:
//!
//! ```json
//! {"kind": "gaussian", "level": 2, "grid_origin": 0.0,
//!  "elements": [{"mean": 0.0, "variance": 1.0}, ...]}
//! {"kind": "discrete", "level": 1, "grid_origin": 0.0,
//!  "elements": [{"atoms": [[0.0, 1.0], [2.0, 0.5]], "weights": [0.5, 0.5]}, ...]}
//! ```
//!
//! `level` defaults to [`default_levels`] and `grid_origin` to 0. Sequence CSV
//! holds one-dimensional discrete measures on a shared support: a header row
//! of support points, then one row of weights per element.
//!
//! Pyramid JSON stores `p`, `kind`, the coarse sequence, the detail layers and
//! the cached detail norms. Reals are written in shortest round-trip form, so
//! reading back a written file reproduces every value bit for bit.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::discrete_ot::Coupling;
use crate::error::{Error, Result};
use crate::gaussian_ot::AffineMap;
use crate::measures::{default_levels, DiscreteMeasure, GaussianMeasure, Measure, MeasureKind, MeasureSequence};
use crate::multiscale::Pyramid;
use crate::scalar::Real;
use crate::transport_ops::{Detail, DetailLayer, TransportDetail};

/// On-disk sequence format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::BadParameter(format!("unknown format {other:?}"))),
        }
    }
}

impl Format {
    /// Guesses from the file extension; anything but `.csv` is JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
struct SequenceFile<T> {
    kind: MeasureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    level: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid_origin: Option<T>,
    elements: Vec<ElementFile<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real", untagged, deny_unknown_fields)]
enum ElementFile<T> {
    Gaussian { mean: T, variance: T },
    Discrete { atoms: Vec<Vec<T>>, weights: Vec<T> },
}

impl<T: Real> ElementFile<T> {
    fn from_measure(m: &Measure<T>) -> Self {
        match m {
            Measure::Gaussian(g) => ElementFile::Gaussian {
                mean: g.mean(),
                variance: g.variance(),
            },
            Measure::Discrete(d) => ElementFile::Discrete {
                atoms: d.atoms().map(<[T]>::to_vec).collect(),
                weights: d.weights().to_vec(),
            },
        }
    }

    fn into_measure(self, kind: MeasureKind) -> Result<Measure<T>> {
        match (self, kind) {
            (ElementFile::Gaussian { mean, variance }, MeasureKind::Gaussian) => {
                Ok(Measure::Gaussian(GaussianMeasure::new(mean, variance)?))
            }
            (ElementFile::Discrete { atoms, weights }, MeasureKind::Discrete) => {
                if atoms.len() != weights.len() {
                    return Err(Error::BadMeasure(format!(
                        "{} atoms but {} weights",
                        atoms.len(),
                        weights.len()
                    )));
                }
                Ok(Measure::Discrete(DiscreteMeasure::new(atoms, weights)?))
            }
            _ => Err(Error::MixedKinds),
        }
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    }
}

/// Parses a sequence from JSON text.
pub fn parse_sequence_json<T: Real>(text: &str) -> Result<MeasureSequence<T>> {
    let file: SequenceFile<T> = serde_json::from_str(text).map_err(json_error)?;
    let n = file.elements.len();
    let elements = file
        .elements
        .into_iter()
        .map(|e| e.into_measure(file.kind))
        .collect::<Result<Vec<_>>>()?;
    let level = file.level.unwrap_or_else(|| default_levels(n));
    MeasureSequence::new(elements, level, file.grid_origin.unwrap_or_else(T::zero))
}

/// Serializes a sequence as pretty-printed JSON.
pub fn sequence_to_json<T: Real>(seq: &MeasureSequence<T>) -> String {
    let file = SequenceFile {
        kind: seq.kind().unwrap_or(MeasureKind::Discrete),
        level: Some(seq.level()),
        grid_origin: Some(seq.grid_origin()),
        elements: seq.elements().iter().map(ElementFile::from_measure).collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("sequence values serialize");
    s.push('\n');
    s
}

fn parse_cell<T: Real>(cell: &str, line: usize, what: &str) -> Result<T> {
    cell.trim()
        .parse::<f64>()
        .ok()
        .and_then(T::from_f64)
        .ok_or_else(|| Error::Parse {
            line,
            msg: format!("{what}: cannot parse {cell:?} as a number"),
        })
}

/// Parses a one-dimensional discrete sequence from CSV text.
pub fn parse_sequence_csv<T: Real>(text: &str) -> Result<MeasureSequence<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut support: Option<Vec<T>> = None;
    let mut elements = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        match &support {
            None => {
                let s = record
                    .iter()
                    .enumerate()
                    .map(|(c, x)| parse_cell(x, line, &format!("support column {}", c + 1)))
                    .collect::<Result<Vec<T>>>()?;
                support = Some(s);
            }
            Some(s) => {
                if record.len() != s.len() {
                    return Err(Error::Parse {
                        line,
                        msg: format!("expected {} weights, found {}", s.len(), record.len()),
                    });
                }
                let w = record
                    .iter()
                    .enumerate()
                    .map(|(c, x)| parse_cell(x, line, &format!("weight column {}", c + 1)))
                    .collect::<Result<Vec<T>>>()?;
                let atoms = s.iter().map(|&x| vec![x]).collect();
                elements.push(Measure::Discrete(DiscreteMeasure::new(atoms, w)?));
            }
        }
    }
    if support.is_none() {
        return Err(Error::Parse {
            line: 1,
            msg: "empty input: expected a header row of support points".into(),
        });
    }
    if elements.is_empty() {
        return Err(Error::Parse {
            line: 2,
            msg: "no weight rows after the header".into(),
        });
    }
    let level = default_levels(elements.len());
    MeasureSequence::new(elements, level, T::zero())
}

/// Serializes a one-dimensional discrete sequence as CSV over the union of
/// all supports (sorted ascending).
pub fn sequence_to_csv<T: Real>(seq: &MeasureSequence<T>) -> Result<String> {
    let mut support: Vec<T> = Vec::new();
    for m in seq.elements() {
        let d = m.as_discrete().ok_or_else(|| {
            Error::BadParameter("CSV output holds discrete sequences only".into())
        })?;
        if d.dim() != 1 {
            return Err(Error::BadParameter("CSV output holds one-dimensional measures only".into()));
        }
        support.extend_from_slice(d.points());
    }
    support.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    support.dedup();
    let mut out = String::new();
    let header: Vec<String> = support.iter().map(|x| x.to_string()).collect();
    writeln!(out, "{}", header.join(",")).expect("writing to a String");
    for m in seq.elements() {
        let d = m.as_discrete().expect("checked above");
        let mut row = vec![T::zero(); support.len()];
        for (x, &w) in d.points().iter().zip(d.weights()) {
            let k = support
                .binary_search_by(|s| s.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal))
                .expect("support holds every atom");
            row[k] = w;
        }
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        writeln!(out, "{}", cells.join(",")).expect("writing to a String");
    }
    Ok(out)
}

/// Reads a sequence file.
pub fn read_sequence<T: Real>(path: &Path, format: Format) -> Result<MeasureSequence<T>> {
    let text = std::fs::read_to_string(path)?;
    match format {
        Format::Json => parse_sequence_json(&text),
        Format::Csv => parse_sequence_csv(&text),
    }
}

/// Writes a sequence file atomically.
pub fn write_sequence<T: Real>(seq: &MeasureSequence<T>, path: &Path, format: Format) -> Result<()> {
    let text = match format {
        Format::Json => sequence_to_json(seq),
        Format::Csv => sequence_to_csv(seq)?,
    };
    write_atomic(path, text.as_bytes())
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
struct PyramidFile<T> {
    p: T,
    kind: MeasureKind,
    coarse: SequenceFile<T>,
    layers: Vec<LayerFile<T>>,
    norms: Vec<Vec<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
struct LayerFile<T> {
    level: u32,
    details: Vec<DetailFile<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real", tag = "type", rename_all = "lowercase")]
enum DetailFile<T> {
    Zero,
    Affine {
        #[serde(rename = "A")]
        a: T,
        #[serde(rename = "B")]
        b: T,
    },
    Plan {
        displacements: Vec<Vec<Vec<T>>>,
        coupling: CouplingFile<T>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
struct CouplingFile<T> {
    rows: usize,
    cols: usize,
    matrix: Vec<Vec<T>>,
}

impl<T: Real> DetailFile<T> {
    fn from_detail(d: &Detail<T>) -> Self {
        match d {
            Detail::Zero => DetailFile::Zero,
            Detail::Affine(a) => DetailFile::Affine {
                a: a.slope,
                b: a.intercept,
            },
            Detail::Transport(t) => {
                let plan = t.plan();
                DetailFile::Plan {
                    displacements: (0..t.rows())
                        .map(|i| (0..t.cols()).map(|j| t.displacement(i, j).to_vec()).collect())
                        .collect(),
                    coupling: CouplingFile {
                        rows: plan.rows(),
                        cols: plan.cols(),
                        matrix: (0..plan.rows()).map(|i| plan.row(i).to_vec()).collect(),
                    },
                }
            }
        }
    }

    fn into_detail(self, p: T) -> Result<Detail<T>> {
        match self {
            DetailFile::Zero => Ok(Detail::Zero),
            DetailFile::Affine { a, b } => {
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::IncompatibleDetail("non-finite affine coefficient".into()));
                }
                Ok(Detail::Affine(AffineMap::new(a, b)))
            }
            DetailFile::Plan {
                displacements,
                coupling,
            } => {
                let CouplingFile { rows, cols, matrix } = coupling;
                if matrix.len() != rows || matrix.iter().any(|r| r.len() != cols) {
                    return Err(Error::IncompatibleDetail(format!(
                        "coupling matrix is not {rows}x{cols}"
                    )));
                }
                let plan = Coupling::new(rows, cols, matrix.concat(), p)?;
                if displacements.len() != rows || displacements.iter().any(|r| r.len() != cols) {
                    return Err(Error::IncompatibleDetail(format!(
                        "displacement tensor is not {rows}x{cols}"
                    )));
                }
                let dim = displacements
                    .first()
                    .and_then(|r| r.first())
                    .map_or(0, Vec::len);
                let mut flat = Vec::with_capacity(rows * cols * dim);
                for v in displacements.iter().flatten() {
                    if v.len() != dim {
                        return Err(Error::IncompatibleDetail("ragged displacement tensor".into()));
                    }
                    flat.extend_from_slice(v);
                }
                Ok(Detail::Transport(TransportDetail::new(dim, flat, plan)?))
            }
        }
    }
}

/// Serializes a pyramid as JSON.
pub fn pyramid_to_json<T: Real>(pyr: &Pyramid<T>) -> String {
    let c = pyr.coarse();
    let file = PyramidFile {
        p: pyr.p(),
        kind: pyr.kind(),
        coarse: SequenceFile {
            kind: pyr.kind(),
            level: Some(c.level()),
            grid_origin: Some(c.grid_origin()),
            elements: c.elements().iter().map(ElementFile::from_measure).collect(),
        },
        layers: pyr
            .layers()
            .iter()
            .map(|l| LayerFile {
                level: l.level,
                details: l.details.iter().map(DetailFile::from_detail).collect(),
            })
            .collect(),
        norms: pyr.norms().to_vec(),
    };
    let mut s = serde_json::to_string(&file).expect("pyramid values serialize");
    s.push('\n');
    s
}

/// Parses and validates a pyramid from JSON text.
pub fn parse_pyramid_json<T: Real>(text: &str) -> Result<Pyramid<T>> {
    let file: PyramidFile<T> = serde_json::from_str(text).map_err(json_error)?;
    if file.coarse.kind != file.kind {
        return Err(Error::MixedKinds);
    }
    let elements = file
        .coarse
        .elements
        .into_iter()
        .map(|e| e.into_measure(file.kind))
        .collect::<Result<Vec<_>>>()?;
    let coarse = MeasureSequence::new(
        elements,
        file.coarse.level.unwrap_or(0),
        file.coarse.grid_origin.unwrap_or_else(T::zero),
    )?;
    let p = file.p;
    let layers = file
        .layers
        .into_iter()
        .map(|l| {
            Ok(DetailLayer {
                level: l.level,
                details: l
                    .details
                    .into_iter()
                    .map(|d| d.into_detail(p))
                    .collect::<Result<_>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Pyramid::with_norms(coarse, layers, p, file.norms)
}

pub fn read_pyramid<T: Real>(path: &Path) -> Result<Pyramid<T>> {
    parse_pyramid_json(&std::fs::read_to_string(path)?)
}

pub fn write_pyramid<T: Real>(pyr: &Pyramid<T>, path: &Path) -> Result<()> {
    write_atomic(path, pyramid_to_json(pyr).as_bytes())
}
