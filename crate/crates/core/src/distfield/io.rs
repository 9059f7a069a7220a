//! File formats: ASCII OFF meshes, JSON-headed raw label volumes and
//! distance-map CSV.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DistError, DistanceEntry, DistanceMap, Label, LabeledVolume, SurfaceMesh, DEFAULT_VOXEL_MM};

fn io_err(path: &Path, source: std::io::Error) -> DistError {
    DistError::Io { path: path.display().to_string(), source }
}

fn parse_err(line: usize, msg: impl Into<String>) -> DistError {
    DistError::Parse { line, msg: msg.into() }
}

/// Parses an ASCII OFF mesh. Polygonal faces are fan-triangulated.
pub fn parse_off(reader: impl Read) -> Result<SurfaceMesh, DistError> {
    let mut lines = BufReader::new(reader)
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter_map(|(n, l)| match l {
            Ok(s) => {
                let body = s.split('#').next().unwrap_or("").trim().to_string();
                (!body.is_empty()).then_some(Ok((n, body)))
            }
            Err(e) => Some(Err(parse_err(n, e.to_string()))),
        });

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty file, expected OFF header"))??;
    let mut head_tokens = header.split_whitespace();
    if head_tokens.next() != Some("OFF") {
        return Err(parse_err(hline, format!("expected OFF header, found {header:?}")));
    }
    let rest: Vec<&str> = head_tokens.collect();
    let (cline, counts) = if rest.is_empty() {
        let (n, l) = lines.next().ok_or_else(|| parse_err(hline + 1, "missing element counts"))??;
        (n, l)
    } else {
        (hline, rest.join(" "))
    };
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(cline, format!("bad count {t:?}"))))
        .collect::<Result<_, _>>()?;
    if counts.len() < 2 {
        return Err(parse_err(cline, "expected vertex and face counts"));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    for k in 0..nv {
        let (n, l) = lines.next().ok_or_else(|| parse_err(cline, format!("file ends after {k} of {nv} vertices")))??;
        let coords: Vec<f64> = l
            .split_whitespace()
            .take(3)
            .map(|t| t.parse().map_err(|_| parse_err(n, format!("bad coordinate {t:?}"))))
            .collect::<Result<_, _>>()?;
        if coords.len() != 3 {
            return Err(parse_err(n, "vertex needs 3 coordinates"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(parse_err(n, "non-finite coordinate"));
        }
        vertices.push([coords[0], coords[1], coords[2]]);
    }

    let mut triangles = Vec::with_capacity(nf);
    for k in 0..nf {
        let (n, l) = lines.next().ok_or_else(|| parse_err(cline, format!("file ends after {k} of {nf} faces")))??;
        let mut toks = l.split_whitespace();
        let arity: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(n, "bad face vertex count"))?;
        if arity < 3 {
            return Err(parse_err(n, format!("face with {arity} vertices")));
        }
        let idx: Vec<usize> = toks
            .take(arity)
            .map(|t| t.parse().map_err(|_| parse_err(n, format!("bad vertex index {t:?}"))))
            .collect::<Result<_, _>>()?;
        if idx.len() != arity {
            return Err(parse_err(n, format!("face declares {arity} vertices, lists {}", idx.len())));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= nv) {
            return Err(parse_err(n, format!("vertex index {bad} out of range (mesh has {nv})")));
        }
        for j in 1..arity - 1 {
            triangles.push([idx[0], idx[j], idx[j + 1]]);
        }
    }
    SurfaceMesh::new(vertices, triangles)
}

pub fn read_off(path: &Path) -> Result<SurfaceMesh, DistError> {
    let f = fs::File::open(path).map_err(|e| io_err(path, e))?;
    parse_off(f)
}

pub fn write_off(mut w: impl Write, mesh: &SurfaceMesh) -> std::io::Result<()> {
    writeln!(w, "OFF")?;
    writeln!(w, "{} {} 0", mesh.vertices.len(), mesh.triangles.len())?;
    for v in &mesh.vertices {
        writeln!(w, "{} {} {}", v[0], v[1], v[2])?;
    }
    for t in &mesh.triangles {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

/// JSON sidecar describing a raw label volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeHeader {
    pub dims: [usize; 3],
    #[serde(default = "default_voxel")]
    pub voxel_mm: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_mm: Option<[f64; 3]>,
    /// Raw file path, relative to the header's directory.
    pub data: PathBuf,
    /// Byte value for each label name; defaults to BG=0, GM=1, WM=2, CSF=3.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_codes: Option<HashMap<String, u8>>,
}

fn default_voxel() -> [f64; 3] {
    [DEFAULT_VOXEL_MM; 3]
}

impl VolumeHeader {
    fn decode_table(&self) -> Result<[Option<Label>; 256], DistError> {
        let mut table = [None; 256];
        match &self.label_codes {
            None => {
                for l in [Label::Bg, Label::Gm, Label::Wm, Label::Csf] {
                    table[l.code() as usize] = Some(l);
                }
            }
            Some(map) => {
                for (name, &code) in map {
                    let l = Label::from_name(name)
                        .ok_or_else(|| DistError::InvalidVolume(format!("unknown label name {name:?}")))?;
                    if table[code as usize].is_some_and(|prev| prev != l) {
                        return Err(DistError::InvalidVolume(format!("code {code} assigned twice")));
                    }
                    table[code as usize] = Some(l);
                }
            }
        }
        Ok(table)
    }
}

/// Reads a volume from its JSON header and the raw byte file it names
/// (one byte per voxel, x fastest).
pub fn read_volume(header_path: &Path) -> Result<LabeledVolume, DistError> {
    let text = fs::read_to_string(header_path).map_err(|e| io_err(header_path, e))?;
    let header: VolumeHeader = serde_json::from_str(&text)
        .map_err(|e| DistError::Parse { line: e.line(), msg: format!("volume header: {e}") })?;
    let raw_path = header_path.parent().unwrap_or(Path::new(".")).join(&header.data);
    let raw = fs::read(&raw_path).map_err(|e| io_err(&raw_path, e))?;
    let table = header.decode_table()?;
    let labels = raw
        .iter()
        .map(|&b| table[b as usize].ok_or(DistError::UnknownLabel(b)))
        .collect::<Result<Vec<_>, _>>()?;
    LabeledVolume::with_origin(header.dims, header.voxel_mm, header.origin_mm.unwrap_or([0.0; 3]), labels)
}

/// Writes `volume` as a JSON header plus a raw file next to it.
pub fn write_volume(header_path: &Path, volume: &LabeledVolume) -> Result<(), DistError> {
    let raw_name = header_path.with_extension("raw");
    let header = VolumeHeader {
        dims: volume.dims(),
        voxel_mm: volume.voxel_mm(),
        origin_mm: (volume.origin_mm() != [0.0; 3]).then(|| volume.origin_mm()),
        data: PathBuf::from(raw_name.file_name().expect("header path has a file name")),
        label_codes: None,
    };
    let raw: Vec<u8> = volume.labels().iter().map(|l| l.code()).collect();
    fs::write(&raw_name, raw).map_err(|e| io_err(&raw_name, e))?;
    let json = serde_json::to_string_pretty(&header).expect("header serializes");
    fs::write(header_path, json + "\n").map_err(|e| io_err(header_path, e))
}

pub const DISTANCE_MAP_HEADER: &str = "voxel_index,label,distance_mm";

pub fn write_distance_map(mut w: impl Write, map: &DistanceMap) -> std::io::Result<()> {
    writeln!(w, "{DISTANCE_MAP_HEADER}")?;
    for e in &map.entries {
        writeln!(w, "{},{},{}", e.voxel_index, e.label.name(), e.distance_mm)?;
    }
    Ok(())
}

/// Parses a distance-map CSV. Labels may be given by name or numeric code.
pub fn parse_distance_map(reader: impl Read) -> Result<DistanceMap, DistError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(1, format!("missing column {name:?}")))
    };
    let (ci, cl, cd) = (col("voxel_index")?, col("label")?, col("distance_mm")?);
    let mut entries = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let voxel_index = rec[ci].parse().map_err(|_| parse_err(line, format!("bad voxel index {:?}", &rec[ci])))?;
        let label = Label::from_name(&rec[cl])
            .or_else(|| rec[cl].parse().ok().and_then(|c| Label::from_code(c).ok()))
            .ok_or_else(|| parse_err(line, format!("bad label {:?}", &rec[cl])))?;
        let distance_mm: f64 = rec[cd].parse().map_err(|_| parse_err(line, format!("bad distance {:?}", &rec[cd])))?;
        if !distance_mm.is_finite() {
            return Err(parse_err(line, "non-finite distance"));
        }
        entries.push(DistanceEntry { voxel_index, label, distance_mm });
    }
    Ok(DistanceMap { entries })
}

pub fn read_distance_map(path: &Path) -> Result<DistanceMap, DistError> {
    let f = fs::File::open(path).map_err(|e| io_err(path, e))?;
    parse_distance_map(f)
}
