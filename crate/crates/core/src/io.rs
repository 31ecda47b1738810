//! Raw volume ingestion and text output (CSV / JSON).
//!
//! Every writer goes through a temporary file renamed into place, so an
//! interrupted run never leaves a truncated output behind.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::critical::{CriticalPoint, CriticalType, LevelStats};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::lifetime::ExtremumTrack;
use crate::metrics::ConvergenceRow;
use crate::persistence::{PairClass, PersistenceDiagram, PersistencePair};

/// Element type of a raw volume (always little-endian).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    U8,
    I16,
    U16,
    F32,
    F64,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::U8 => 1,
            Dtype::I16 | Dtype::U16 => 2,
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Dtype::U8 => "u8",
            Dtype::I16 => "i16",
            Dtype::U16 => "u16",
            Dtype::F32 => "f32",
            Dtype::F64 => "f64",
        }
    }
}

impl FromStr for Dtype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "u8" | "uint8" => Ok(Dtype::U8),
            "i16" | "int16" => Ok(Dtype::I16),
            "u16" | "uint16" => Ok(Dtype::U16),
            "f32" | "float32" | "float" => Ok(Dtype::F32),
            "f64" | "float64" | "double" => Ok(Dtype::F64),
            _ => Err(Error::UnknownDtype(s.to_string())),
        }
    }
}

/// Layout of a raw volume: vertex counts per axis, x fastest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VolumeHeader {
    pub dims: [usize; 3],
    pub dtype: Dtype,
}

#[derive(Deserialize)]
struct Sidecar {
    dims: Vec<usize>,
    dtype: String,
}

impl VolumeHeader {
    pub fn payload_len(&self) -> u64 {
        self.dims.iter().product::<usize>() as u64 * self.dtype.size() as u64
    }

    /// Parses a JSON sidecar such as `{"dims": [64, 64, 64], "dtype": "f32"}`.
    /// Two dims describe a 2D image.
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Sidecar = serde_json::from_str(text)?;
        let dims = match s.dims.as_slice() {
            [x, y] => [*x, *y, 1],
            [x, y, z] => [*x, *y, *z],
            other => {
                return Err(Error::Malformed {
                    what: "volume sidecar",
                    detail: format!("expected 2 or 3 dims, got {}", other.len()),
                })
            }
        };
        Ok(VolumeHeader {
            dims,
            dtype: s.dtype.parse()?,
        })
    }

    pub fn read_sidecar(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let dims = if self.dims[2] == 1 {
            format!("[{}, {}]", self.dims[0], self.dims[1])
        } else {
            format!("[{}, {}, {}]", self.dims[0], self.dims[1], self.dims[2])
        };
        format!("{{\"dims\": {dims}, \"dtype\": \"{}\"}}\n", self.dtype.as_str())
    }
}

/// Default sidecar location: `<volume>.json`.
pub fn sidecar_path(volume: &Path) -> PathBuf {
    let mut s = volume.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Decodes a raw payload into a field.
pub fn decode_volume(bytes: &[u8], header: &VolumeHeader) -> Result<ScalarField> {
    let n: usize = header.dims.iter().product();
    let values: Vec<f64> = match header.dtype {
        Dtype::U8 => bytes.iter().map(|&b| b as f64).collect(),
        Dtype::I16 => bytes
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64)
            .collect(),
        Dtype::U16 => bytes
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]) as f64)
            .collect(),
        Dtype::F32 => bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        Dtype::F64 => bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };
    debug_assert_eq!(values.len(), n);
    ScalarField::new(header.dims, values)
}

/// Reads a raw little-endian volume; the file size must match the header.
pub fn read_raw_volume(path: &Path, header: &VolumeHeader) -> Result<ScalarField> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = header.payload_len();
    if bytes.len() as u64 != expected {
        return Err(Error::LengthMismatch {
            path: path.to_path_buf(),
            expected,
            found: bytes.len() as u64,
        });
    }
    decode_volume(&bytes, header)
}

/// Encodes a field with the given element type (values are cast).
pub fn encode_volume(field: &ScalarField, dtype: Dtype) -> Vec<u8> {
    let mut out = Vec::with_capacity(field.len() * dtype.size());
    for &v in field.values() {
        match dtype {
            Dtype::U8 => out.push(v as u8),
            Dtype::I16 => out.extend_from_slice(&(v as i16).to_le_bytes()),
            Dtype::U16 => out.extend_from_slice(&(v as u16).to_le_bytes()),
            Dtype::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            Dtype::F64 => out.extend_from_slice(&v.to_le_bytes()),
        }
    }
    out
}

pub fn write_raw_volume(path: &Path, field: &ScalarField, dtype: Dtype) -> Result<()> {
    write_atomic(path, &encode_volume(field, dtype))
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagramFormat {
    Csv,
    Json,
}

impl DiagramFormat {
    pub fn extension(self) -> &'static str {
        match self {
            DiagramFormat::Csv => "csv",
            DiagramFormat::Json => "json",
        }
    }
}

impl FromStr for DiagramFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(DiagramFormat::Csv),
            "json" => Ok(DiagramFormat::Json),
            _ => Err(Error::invalid(format!("unknown diagram format `{s}`"))),
        }
    }
}

pub const DIAGRAM_CSV_HEADER: &str = "class,birth_vertex_x,birth_vertex_y,birth_vertex_z,\
death_vertex_x,death_vertex_y,death_vertex_z,birth,death,persistence";

/// CSV text of a diagram, rows in the diagram's order. Values use the
/// shortest decimal form that reads back to the same `f64`.
pub fn diagram_to_csv(diagram: &PersistenceDiagram) -> String {
    let mut s = String::with_capacity(64 * (diagram.len() + 1));
    s.push_str(DIAGRAM_CSV_HEADER);
    s.push('\n');
    for p in &diagram.pairs {
        let (b, d) = (p.birth_vertex, p.death_vertex);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            p.class,
            b[0],
            b[1],
            b[2],
            d[0],
            d[1],
            d[2],
            p.birth,
            p.death,
            p.persistence()
        );
    }
    s
}

fn malformed(detail: impl Into<String>) -> Error {
    Error::Malformed {
        what: "diagram",
        detail: detail.into(),
    }
}

/// Parses CSV produced by [`diagram_to_csv`]. The level is not stored in
/// CSV and is set to `level`.
pub fn diagram_from_csv(text: &str, level: usize) -> Result<PersistenceDiagram> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == DIAGRAM_CSV_HEADER => {}
        other => return Err(malformed(format!("unexpected header {other:?}"))),
    }
    let mut pairs = Vec::new();
    for (no, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(malformed(format!("line {}: expected 10 fields", no + 2)));
        }
        let u = |i: usize| -> Result<usize> {
            f[i].parse()
                .map_err(|_| malformed(format!("line {}: bad integer `{}`", no + 2, f[i])))
        };
        let x = |i: usize| -> Result<f64> {
            f[i].parse()
                .map_err(|_| malformed(format!("line {}: bad number `{}`", no + 2, f[i])))
        };
        pairs.push(PersistencePair {
            class: f[0].parse::<PairClass>()?,
            birth_vertex: [u(1)?, u(2)?, u(3)?],
            death_vertex: [u(4)?, u(5)?, u(6)?],
            birth: x(7)?,
            death: x(8)?,
        });
    }
    Ok(PersistenceDiagram { level, pairs })
}

#[derive(Serialize, Deserialize)]
struct JsonPair {
    class: PairClass,
    birth_vertex: [usize; 3],
    death_vertex: [usize; 3],
    birth: f64,
    death: f64,
    persistence: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonDiagram {
    level: usize,
    pairs: Vec<JsonPair>,
}

pub fn diagram_to_json(diagram: &PersistenceDiagram) -> String {
    let doc = JsonDiagram {
        level: diagram.level,
        pairs: diagram
            .pairs
            .iter()
            .map(|p| JsonPair {
                class: p.class,
                birth_vertex: p.birth_vertex,
                death_vertex: p.death_vertex,
                birth: p.birth,
                death: p.death,
                persistence: p.persistence(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("diagram serializes");
    s.push('\n');
    s
}

pub fn diagram_from_json(text: &str) -> Result<PersistenceDiagram> {
    let doc: JsonDiagram = serde_json::from_str(text)?;
    Ok(PersistenceDiagram {
        level: doc.level,
        pairs: doc
            .pairs
            .into_iter()
            .map(|p| PersistencePair {
                class: p.class,
                birth_vertex: p.birth_vertex,
                death_vertex: p.death_vertex,
                birth: p.birth,
                death: p.death,
            })
            .collect(),
    })
}

pub fn write_diagram(diagram: &PersistenceDiagram, path: &Path, format: DiagramFormat) -> Result<()> {
    let text = match format {
        DiagramFormat::Csv => diagram_to_csv(diagram),
        DiagramFormat::Json => diagram_to_json(diagram),
    };
    write_atomic(path, text.as_bytes())
}

pub fn read_diagram(path: &Path, format: DiagramFormat) -> Result<PersistenceDiagram> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        DiagramFormat::Csv => diagram_from_csv(&text, 0),
        DiagramFormat::Json => diagram_from_json(&text),
    }
}

pub fn critical_points_to_csv(points: &[CriticalPoint]) -> String {
    let mut s = String::from("level,x,y,z,value,type,lower_components,upper_components\n");
    for p in points {
        let (lo, up) = match p.kind {
            CriticalType::Minimum => (0, 1),
            CriticalType::Maximum => (1, 0),
            CriticalType::Regular => (1, 1),
            CriticalType::Saddle {
                lower_components,
                upper_components,
            } => (lower_components, upper_components),
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            p.level,
            p.grid0[0],
            p.grid0[1],
            p.grid0[2],
            p.value,
            p.kind.label(),
            lo,
            up
        );
    }
    s
}

pub fn write_critical_points(points: &[CriticalPoint], path: &Path) -> Result<()> {
    write_atomic(path, critical_points_to_csv(points).as_bytes())
}

pub fn level_stats_to_csv(stats: &[LevelStats]) -> String {
    let mut s = String::from(
        "level,vertices,old_vertices,new_vertices,invariant_old,invariant_new,\
invariant_fraction,minima,maxima,saddles\n",
    );
    for st in stats {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            st.level,
            st.vertices,
            st.old_vertices,
            st.new_vertices,
            st.invariant_old,
            st.invariant_new,
            st.invariant_fraction(),
            st.minima,
            st.maxima,
            st.saddles
        );
    }
    s
}

pub fn tracks_to_csv(tracks: &[ExtremumTrack]) -> String {
    let mut s = String::from("track_id,level,x,y,z,value,l_a,l_d\n");
    for t in tracks {
        let l_d = t.l_d.map(|d| d.to_string()).unwrap_or_default();
        for p in &t.trajectory {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                t.id, p.level, p.grid0[0], p.grid0[1], p.grid0[2], p.value, t.l_a, l_d
            );
        }
    }
    s
}

pub fn write_tracks(tracks: &[ExtremumTrack], path: &Path) -> Result<()> {
    write_atomic(path, tracks_to_csv(tracks).as_bytes())
}

pub fn convergence_to_csv(rows: &[ConvergenceRow]) -> String {
    let mut s =
        String::from("level,elapsed_ms,normalized_W2,sig_ratio,avg_persistence_ratio,avg_defined\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.level, r.elapsed_ms, r.normalized_w2, r.sig_ratio, r.avg_persistence_ratio, r.avg_defined
        );
    }
    s
}

pub fn write_convergence(rows: &[ConvergenceRow], path: &Path) -> Result<()> {
    write_atomic(path, convergence_to_csv(rows).as_bytes())
}
