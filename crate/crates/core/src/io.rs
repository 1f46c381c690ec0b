//! MetaImage-style volume container and dataset manifest.
//!
//! A container is a `Key = Value` text header followed by a raw little-endian
//! payload. With `ElementDataFile = LOCAL` the payload follows the header in
//! the same file (conventionally `.mha`); otherwise the key names a sidecar
//! file relative to the header (conventionally `.mhd` + `.raw`).
//!
//! Recognized keys: `NDims`, `DimSize`, `ElementSpacing`, `Offset`,
//! `ElementType` (`int16` | `float32`, also `MET_SHORT` | `MET_FLOAT`),
//! `BinaryDataByteOrderMSB`, `ElementDataFile`. Extension keys carried through
//! verbatim: `IntensityUnit`, `Smoothed`, `NoduleId`, `MalignancyScore`,
//! `Sinogram`, `Angles`, `DetectorSpacing`, `PixelSize`, `AssumeInCircle`.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projection::{ProjectionGeometry, Sinogram};
use crate::volume::{CtVolume, Dims, Geometry, IntensityUnit, NoduleMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementType {
    Int16,
    Float32,
}

impl ElementType {
    fn size(self) -> usize {
        match self {
            ElementType::Int16 => 2,
            ElementType::Float32 => 4,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ElementType::Int16 => "int16",
            ElementType::Float32 => "float32",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "int16" | "MET_SHORT" => Some(ElementType::Int16),
            "float32" | "MET_FLOAT" => Some(ElementType::Float32),
            _ => None,
        }
    }
}

/// Parsed container: geometry, payload and any extension keys.
#[derive(Debug, Clone)]
pub struct MetaImage {
    pub geometry: Geometry,
    pub element_type: ElementType,
    pub values: Vec<f32>,
    pub extra: Vec<(String, String)>,
}

impl MetaImage {
    pub fn extra(&self, key: &str) -> Option<&str> {
        self.extra
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

const LOCAL: &str = "LOCAL";

fn parse_list<T: std::str::FromStr>(path: &Path, key: &str, v: &str, n: usize) -> Result<Vec<T>> {
    let parts: Vec<&str> = v.split_whitespace().collect();
    if parts.len() != n {
        return Err(Error::header(
            path,
            format!("{key} expects {n} values, found {}", parts.len()),
        ));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<T>()
                .map_err(|_| Error::header(path, format!("{key}: cannot parse '{p}'")))
        })
        .collect()
}

pub fn read_metaimage(path: &Path) -> Result<MetaImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;

    let mut pos = 0usize;
    let mut ndims: Option<usize> = None;
    let mut dims: Option<Vec<usize>> = None;
    let mut spacing: Option<Vec<f64>> = None;
    let mut offset: Option<Vec<f64>> = None;
    let mut etype: Option<ElementType> = None;
    let mut msb = false;
    let mut data_file: Option<String> = None;
    let mut extra = Vec::new();

    while data_file.is_none() {
        if pos >= bytes.len() {
            return Err(Error::header(path, "missing ElementDataFile"));
        }
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|e| pos + e)
            .unwrap_or(bytes.len());
        let line = std::str::from_utf8(&bytes[pos..end])
            .map_err(|_| Error::header(path, "non-UTF-8 header line"))?
            .trim_end_matches('\r');
        pos = (end + 1).min(bytes.len());
        if line.trim().is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::header(path, format!("line without '=': {line}")))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "ObjectType" => {}
            "NDims" => {
                ndims = Some(
                    value
                        .parse()
                        .map_err(|_| Error::header(path, "NDims not an integer"))?,
                )
            }
            "DimSize" => dims = Some(parse_list(path, key, value, ndims.unwrap_or(3))?),
            "ElementSpacing" => spacing = Some(parse_list(path, key, value, ndims.unwrap_or(3))?),
            "Offset" | "Origin" | "Position" => {
                offset = Some(parse_list(path, key, value, ndims.unwrap_or(3))?)
            }
            "ElementType" => {
                etype = Some(ElementType::parse(value).ok_or_else(|| {
                    Error::header(path, format!("unsupported ElementType {value}"))
                })?)
            }
            "BinaryDataByteOrderMSB" | "ElementByteOrderMSB" => {
                msb = value.eq_ignore_ascii_case("true")
            }
            "ElementDataFile" => data_file = Some(value.to_string()),
            _ => extra.push((key.to_string(), value.to_string())),
        }
    }

    if ndims != Some(3) {
        return Err(Error::header(path, "NDims must be 3"));
    }
    let dims = dims.ok_or_else(|| Error::header(path, "missing DimSize"))?;
    let spacing = spacing.unwrap_or_else(|| vec![1.0; 3]);
    let offset = offset.unwrap_or_else(|| vec![0.0; 3]);
    let etype = etype.ok_or_else(|| Error::header(path, "missing ElementType"))?;
    let geometry = Geometry::new(
        Dims::new(dims[0], dims[1], dims[2]),
        [spacing[0], spacing[1], spacing[2]],
        [offset[0], offset[1], offset[2]],
    )
    .map_err(|e| Error::header(path, e.to_string()))?;

    let data_file = data_file.expect("loop exits only with a data file");
    let payload: Vec<u8> = if data_file == LOCAL {
        bytes[pos..].to_vec()
    } else {
        let sidecar = path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(&data_file);
        fs::read(&sidecar).map_err(|e| Error::io(&sidecar, e))?
    };

    let n = geometry.dims.len();
    let expected = n * etype.size();
    if payload.len() != expected {
        return Err(Error::Payload {
            path: path.to_path_buf(),
            expected,
            found: payload.len(),
        });
    }
    let values = match etype {
        ElementType::Int16 => payload
            .chunks_exact(2)
            .map(|c| {
                let b = [c[0], c[1]];
                (if msb {
                    i16::from_be_bytes(b)
                } else {
                    i16::from_le_bytes(b)
                }) as f32
            })
            .collect(),
        ElementType::Float32 => payload
            .chunks_exact(4)
            .map(|c| {
                let b = [c[0], c[1], c[2], c[3]];
                if msb {
                    f32::from_be_bytes(b)
                } else {
                    f32::from_le_bytes(b)
                }
            })
            .collect(),
    };

    Ok(MetaImage {
        geometry,
        element_type: etype,
        values,
        extra,
    })
}

/// `int16` when every value is an integer representable without loss, else `float32`.
fn choose_element_type(values: &[f32]) -> ElementType {
    let exact_int = values.iter().all(|&v| {
        v.fract() == 0.0
            && v >= i16::MIN as f32
            && v <= i16::MAX as f32
            && !(v == 0.0 && v.is_sign_negative())
    });
    if exact_int {
        ElementType::Int16
    } else {
        ElementType::Float32
    }
}

pub fn write_metaimage(
    path: &Path,
    geometry: &Geometry,
    values: &[f32],
    element_type: ElementType,
    extra: &[(String, String)],
) -> Result<()> {
    let inline = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("mha"))
        .unwrap_or(true);
    let d = geometry.dims;
    let s = geometry.spacing;
    let o = geometry.origin;
    let mut header = String::new();
    header.push_str("ObjectType = Image\nNDims = 3\n");
    header.push_str(&format!("DimSize = {} {} {}\n", d.nx, d.ny, d.nz));
    header.push_str(&format!("ElementSpacing = {} {} {}\n", s[0], s[1], s[2]));
    header.push_str(&format!("Offset = {} {} {}\n", o[0], o[1], o[2]));
    header.push_str("BinaryDataByteOrderMSB = False\n");
    header.push_str(&format!("ElementType = {}\n", element_type.name()));
    for (k, v) in extra {
        header.push_str(&format!("{k} = {v}\n"));
    }

    let mut payload = Vec::with_capacity(values.len() * element_type.size());
    match element_type {
        ElementType::Int16 => {
            for &v in values {
                payload.extend_from_slice(&(v as i16).to_le_bytes());
            }
        }
        ElementType::Float32 => {
            for &v in values {
                payload.extend_from_slice(&v.to_le_bytes());
            }
        }
    }

    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    if inline {
        header.push_str("ElementDataFile = LOCAL\n");
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(header.as_bytes())
            .and_then(|_| f.write_all(&payload))
            .map_err(|e| Error::io(path, e))?;
    } else {
        let raw = path.with_extension("raw");
        let raw_name = raw
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::header(path, "unrepresentable sidecar name"))?
            .to_string();
        header.push_str(&format!("ElementDataFile = {raw_name}\n"));
        fs::write(path, header.as_bytes()).map_err(|e| Error::io(path, e))?;
        fs::write(&raw, &payload).map_err(|e| Error::io(&raw, e))?;
    }
    Ok(())
}

fn parse_bool(s: &str) -> bool {
    s.eq_ignore_ascii_case("true")
}

fn bool_str(b: bool) -> String {
    if b { "True" } else { "False" }.to_string()
}

pub fn load_volume(path: &Path) -> Result<CtVolume> {
    let img = read_metaimage(path)?;
    if img.extra("Sinogram").map(parse_bool).unwrap_or(false) {
        return Err(Error::header(path, "file holds a sinogram, not a volume"));
    }
    let unit = match img.extra("IntensityUnit") {
        Some(u) => IntensityUnit::parse(u)
            .ok_or_else(|| Error::header(path, format!("unknown IntensityUnit {u}")))?,
        None => IntensityUnit::Hu,
    };
    let smoothed = img.extra("Smoothed").map(parse_bool).unwrap_or(false);
    let mut v = CtVolume::new(img.geometry, img.values, unit)
        .map_err(|e| Error::header(path, e.to_string()))?;
    v.set_smoothed(smoothed);
    Ok(v)
}

pub fn save_volume(v: &CtVolume, path: &Path) -> Result<()> {
    let extra = vec![
        ("IntensityUnit".to_string(), v.unit().as_str().to_string()),
        ("Smoothed".to_string(), bool_str(v.is_smoothed())),
    ];
    write_metaimage(
        path,
        v.geometry(),
        v.values(),
        choose_element_type(v.values()),
        &extra,
    )
}

pub fn load_mask(path: &Path) -> Result<NoduleMask> {
    let img = read_metaimage(path)?;
    let id = img.extra("NoduleId").unwrap_or("nodule").to_string();
    let score: f64 = img
        .extra("MalignancyScore")
        .ok_or_else(|| Error::header(path, "mask without MalignancyScore"))?
        .parse()
        .map_err(|_| Error::header(path, "MalignancyScore not a number"))?;
    let values = img
        .values
        .iter()
        .map(|&v| if v != 0.0 { 1u8 } else { 0u8 })
        .collect();
    NoduleMask::new(img.geometry, values, id, score).map_err(|e| Error::header(path, e.to_string()))
}

pub fn save_mask(m: &NoduleMask, path: &Path) -> Result<()> {
    let values: Vec<f32> = m.values().iter().map(|&v| v as f32).collect();
    let extra = vec![
        ("NoduleId".to_string(), m.nodule_id().to_string()),
        ("MalignancyScore".to_string(), format!("{}", m.malignancy_score())),
    ];
    write_metaimage(path, m.geometry(), &values, ElementType::Int16, &extra)
}

/// Stores a sinogram as an `n_detectors × n_angles × 1` float32 container.
/// Values are narrowed to single precision.
pub fn save_sinogram(s: &Sinogram, path: &Path) -> Result<()> {
    let g = s.geometry();
    let geometry = Geometry::new(
        Dims::new(g.n_detectors, g.n_angles(), 1),
        [g.detector_spacing * s.pixel_size(), 1.0, 1.0],
        [0.0; 3],
    )?;
    let angles = g
        .angles
        .iter()
        .map(|a| format!("{a}"))
        .collect::<Vec<_>>()
        .join(" ");
    let extra = vec![
        ("Sinogram".to_string(), "True".to_string()),
        ("Angles".to_string(), angles),
        ("DetectorSpacing".to_string(), format!("{}", g.detector_spacing)),
        ("PixelSize".to_string(), format!("{}", s.pixel_size())),
        ("AssumeInCircle".to_string(), bool_str(g.assume_in_circle)),
    ];
    let values: Vec<f32> = s.values().iter().map(|&v| v as f32).collect();
    write_metaimage(path, &geometry, &values, ElementType::Float32, &extra)
}

pub fn load_sinogram(path: &Path) -> Result<Sinogram> {
    let img = read_metaimage(path)?;
    if !img.extra("Sinogram").map(parse_bool).unwrap_or(false) {
        return Err(Error::header(path, "missing Sinogram = True"));
    }
    let d = img.geometry.dims;
    let angles: Vec<f64> = parse_list(
        path,
        "Angles",
        img.extra("Angles").unwrap_or(""),
        d.ny,
    )?;
    let ds: f64 = img
        .extra("DetectorSpacing")
        .unwrap_or("1")
        .parse()
        .map_err(|_| Error::header(path, "DetectorSpacing not a number"))?;
    let ps: f64 = img
        .extra("PixelSize")
        .unwrap_or("1")
        .parse()
        .map_err(|_| Error::header(path, "PixelSize not a number"))?;
    let in_circle = img.extra("AssumeInCircle").map(parse_bool).unwrap_or(false);
    let geom = ProjectionGeometry::from_angles(angles, d.nx, ds, in_circle)?;
    Sinogram::new(geom, img.values.iter().map(|&v| v as f64).collect(), ps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DoseClass {
    #[serde(rename = "SDCT")]
    Sdct,
    #[serde(rename = "LDCT")]
    Ldct,
}

/// Tube current at or below which a scan counts as low dose.
pub const LDCT_MAX_TUBE_CURRENT_MA: f64 = 80.0;

impl DoseClass {
    pub fn for_tube_current(ma: f64) -> Self {
        if ma <= LDCT_MAX_TUBE_CURRENT_MA {
            DoseClass::Ldct
        } else {
            DoseClass::Sdct
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    pub subject_id: String,
    pub volume_path: PathBuf,
    pub mask_paths: Vec<PathBuf>,
    pub dose_class: DoseClass,
    pub tube_current_ma: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRecord {
    subject_id: String,
    volume_path: String,
    mask_paths: String,
    dose_class: DoseClass,
    #[serde(rename = "tube_current_mA")]
    tube_current_ma: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetManifest {
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        let mut subjects = HashSet::new();
        let mut paths = HashSet::new();
        for r in &self.records {
            if r.subject_id.is_empty() {
                return Err(Error::Manifest("empty subject_id".into()));
            }
            if !subjects.insert(r.subject_id.as_str()) {
                return Err(Error::Manifest(format!("duplicate subject {}", r.subject_id)));
            }
            if DoseClass::for_tube_current(r.tube_current_ma) != r.dose_class {
                return Err(Error::Manifest(format!(
                    "subject {}: dose class {:?} inconsistent with {} mA",
                    r.subject_id, r.dose_class, r.tube_current_ma
                )));
            }
            for p in std::iter::once(&r.volume_path).chain(r.mask_paths.iter()) {
                if !paths.insert(p.clone()) {
                    return Err(Error::Manifest(format!(
                        "path {} listed more than once",
                        p.display()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, subject_id: &str) -> Option<&ManifestRecord> {
        self.records.iter().find(|r| r.subject_id == subject_id)
    }

    /// Reads a manifest; relative paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Manifest(format!("cannot open {}: {e}", path.display())),
            _ => Error::Csv(e),
        })?;
        let mut records = Vec::new();
        for row in rdr.deserialize::<CsvRecord>() {
            let row = row?;
            let resolve = |p: &str| {
                let p = PathBuf::from(p);
                if p.is_absolute() {
                    p
                } else {
                    base.join(p)
                }
            };
            records.push(ManifestRecord {
                volume_path: resolve(&row.volume_path),
                mask_paths: row
                    .mask_paths
                    .split(';')
                    .filter(|s| !s.is_empty())
                    .map(resolve)
                    .collect(),
                subject_id: row.subject_id,
                dose_class: row.dose_class,
                tube_current_ma: row.tube_current_ma,
            });
        }
        let m = DatasetManifest { records };
        m.validate()?;
        Ok(m)
    }

    /// Writes the manifest with paths relative to its directory where possible.
    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        let rel = |p: &Path| -> String {
            p.strip_prefix(base)
                .unwrap_or(p)
                .to_string_lossy()
                .replace('\\', "/")
        };
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
        }
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.records {
            w.serialize(CsvRecord {
                subject_id: r.subject_id.clone(),
                volume_path: rel(&r.volume_path),
                mask_paths: r
                    .mask_paths
                    .iter()
                    .map(|p| rel(p))
                    .collect::<Vec<_>>()
                    .join(";"),
                dose_class: r.dose_class,
                tube_current_ma: r.tube_current_ma,
            })?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(nx: usize, ny: usize, nz: usize) -> Geometry {
        Geometry::new(Dims::new(nx, ny, nz), [0.7, 0.7, 2.5], [-10.0, 3.5, 0.25]).unwrap()
    }

    #[test]
    fn int16_header_and_payload() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.mha");
        let mut bytes = b"ObjectType = Image\nNDims = 3\nDimSize = 4 4 2\nElementType = int16\nElementDataFile = LOCAL\n".to_vec();
        for i in 0..32i16 {
            bytes.extend_from_slice(&(i - 16).to_le_bytes());
        }
        fs::write(&p, &bytes).unwrap();
        let v = load_volume(&p).unwrap();
        assert_eq!(v.dims(), Dims::new(4, 4, 2));
        assert_eq!(v.values()[0], -16.0);
        assert_eq!(v.values()[31], 15.0);

        bytes.pop();
        fs::write(&p, &bytes).unwrap();
        assert!(matches!(load_volume(&p), Err(Error::Payload { .. })));
    }

    #[test]
    fn missing_file_and_bad_header() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_volume(&dir.path().join("nope.mha")),
            Err(Error::Io { .. })
        ));
        let p = dir.path().join("bad.mha");
        fs::write(&p, b"NDims = 3\nDimSize = 4 4\nElementType = int16\nElementDataFile = LOCAL\n").unwrap();
        assert!(matches!(load_volume(&p), Err(Error::Header { .. })));
    }

    #[test]
    fn roundtrip_three_units() {
        let dir = tempfile::tempdir().unwrap();
        let hu = CtVolume::new(
            geom(3, 2, 2),
            vec![-1000.0, 0.0, 40.0, 600.0, -1200.0, 12.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            IntensityUnit::Hu,
        )
        .unwrap();
        let norm = CtVolume::new(
            geom(2, 2, 1),
            vec![0.0, 0.125, 0.333_333_34, 1.0],
            IntensityUnit::Normalized,
        )
        .unwrap();
        let mut single = CtVolume::new(geom(2, 1, 1), vec![-0.0, 7.25], IntensityUnit::RawDicom).unwrap();
        single.set_smoothed(true);
        for (i, v) in [hu, norm, single].into_iter().enumerate() {
            for ext in ["mha", "mhd"] {
                let p = dir.path().join(format!("v{i}.{ext}"));
                save_volume(&v, &p).unwrap();
                let back = load_volume(&p).unwrap();
                assert_eq!(back.geometry(), v.geometry());
                assert_eq!(back.unit(), v.unit());
                assert_eq!(back.is_smoothed(), v.is_smoothed());
                let a: Vec<u32> = back.values().iter().map(|x| x.to_bits()).collect();
                let b: Vec<u32> = v.values().iter().map(|x| x.to_bits()).collect();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn mask_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let m = NoduleMask::new(geom(2, 2, 1), vec![0, 1, 1, 0], "n7", 4.5).unwrap();
        let p = dir.path().join("m.mha");
        save_mask(&m, &p).unwrap();
        assert_eq!(load_mask(&p).unwrap(), m);
    }

    #[test]
    fn manifest_roundtrip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("manifest.csv");
        let m = DatasetManifest {
            records: vec![ManifestRecord {
                subject_id: "s1".into(),
                volume_path: dir.path().join("vol/s1.mha"),
                mask_paths: vec![dir.path().join("m/a.mha"), dir.path().join("m/b.mha")],
                dose_class: DoseClass::Sdct,
                tube_current_ma: 300.0,
            }],
        };
        m.save(&p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("subject_id,volume_path,mask_paths,dose_class,tube_current_mA"));
        assert!(text.contains("m/a.mha;m/b.mha"));
        assert_eq!(DatasetManifest::load(&p).unwrap(), m);

        let mut bad = m.clone();
        bad.records[0].tube_current_ma = 80.0;
        assert!(bad.validate().is_err());
        bad.records[0].dose_class = DoseClass::Ldct;
        assert!(bad.validate().is_ok());
    }
}
