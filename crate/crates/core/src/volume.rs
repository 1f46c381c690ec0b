//! Volume data model: CT intensity grids and binary nodule masks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntensityUnit {
    RawDicom,
    #[serde(rename = "HU")]
    Hu,
    Normalized,
}

impl IntensityUnit {
    pub fn as_str(self) -> &'static str {
        match self {
            IntensityUnit::RawDicom => "RawDicom",
            IntensityUnit::Hu => "HU",
            IntensityUnit::Normalized => "Normalized",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "RawDicom" => Some(IntensityUnit::RawDicom),
            "HU" => Some(IntensityUnit::Hu),
            "Normalized" => Some(IntensityUnit::Normalized),
            _ => None,
        }
    }
}

/// Voxel counts along x, y, z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Dims {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Dims { nx, ny, nz }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn slice_len(&self) -> usize {
        self.nx * self.ny
    }

    /// Linear index in slice-major order (x fastest, z slowest).
    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.ny + y) * self.nx + x
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let x = idx % self.nx;
        let y = (idx / self.nx) % self.ny;
        let z = idx / (self.nx * self.ny);
        (x, y, z)
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }
}

/// Grid placement shared by a volume and its masks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub dims: Dims,
    /// mm per voxel along x, y, z.
    pub spacing: [f64; 3],
    /// Physical position of the first voxel center (mm).
    pub origin: [f64; 3],
}

impl Geometry {
    pub fn new(dims: Dims, spacing: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        let g = Geometry {
            dims,
            spacing,
            origin,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.nx == 0 || self.dims.ny == 0 || self.dims.nz == 0 {
            return Err(Error::Geometry(format!(
                "dims must all be >= 1, got {:?}",
                self.dims.as_array()
            )));
        }
        if self.spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Geometry(format!(
                "spacing must be positive, got {:?}",
                self.spacing
            )));
        }
        if self.origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::Geometry("origin must be finite".into()));
        }
        Ok(())
    }

    pub fn voxel_volume(&self) -> f64 {
        self.spacing.iter().product()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtVolume {
    geometry: Geometry,
    values: Vec<f32>,
    unit: IntensityUnit,
    smoothed: bool,
}

impl CtVolume {
    pub fn new(geometry: Geometry, values: Vec<f32>, unit: IntensityUnit) -> Result<Self> {
        geometry.validate()?;
        if values.len() != geometry.dims.len() {
            return Err(Error::Geometry(format!(
                "value count {} does not match dims {:?}",
                values.len(),
                geometry.dims.as_array()
            )));
        }
        if unit == IntensityUnit::Normalized
            && values.iter().any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::Param(
                "normalized volume has values outside [0, 1]".into(),
            ));
        }
        Ok(CtVolume {
            geometry,
            values,
            unit,
            smoothed: false,
        })
    }

    pub fn filled(geometry: Geometry, value: f32, unit: IntensityUnit) -> Result<Self> {
        let n = geometry.dims.len();
        Self::new(geometry, vec![value; n], unit)
    }

    pub(crate) fn with_values(&self, values: Vec<f32>, unit: IntensityUnit) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        CtVolume {
            geometry: self.geometry,
            values,
            unit,
            smoothed: self.smoothed,
        }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn dims(&self) -> Dims {
        self.geometry.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.geometry.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.geometry.origin
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn unit(&self) -> IntensityUnit {
        self.unit
    }

    /// Whether the Gaussian pre-filter has already been applied.
    pub fn is_smoothed(&self) -> bool {
        self.smoothed
    }

    pub fn set_smoothed(&mut self, smoothed: bool) {
        self.smoothed = smoothed;
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.values[self.geometry.dims.index(x, y, z)]
    }

    /// Axial slice `z` as a row-major (y, x) image.
    pub fn slice(&self, z: usize) -> Image2 {
        let d = self.dims();
        let start = z * d.slice_len();
        let data = self.values[start..start + d.slice_len()]
            .iter()
            .map(|&v| v as f64)
            .collect();
        Image2::from_vec(d.ny, d.nx, data).expect("slice shape is consistent")
    }

    /// Rebuilds a volume of identical geometry from per-slice images.
    pub fn from_slices(
        template: &CtVolume,
        slices: &[Image2],
        unit: IntensityUnit,
    ) -> Result<CtVolume> {
        let d = template.dims();
        if slices.len() != d.nz {
            return Err(Error::Shape(format!(
                "expected {} slices, got {}",
                d.nz,
                slices.len()
            )));
        }
        let mut values = Vec::with_capacity(d.len());
        for s in slices {
            if s.rows() != d.ny || s.cols() != d.nx {
                return Err(Error::Shape("slice shape differs from template".into()));
            }
            values.extend(s.data().iter().map(|&v| v as f32));
        }
        let mut out = CtVolume::new(template.geometry, values, unit)?;
        out.smoothed = template.smoothed;
        Ok(out)
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.values
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoduleLabel {
    NonMalignant,
    Malignant,
}

impl NoduleLabel {
    /// Class for an averaged 1–5 malignancy rating. A rating of exactly 4
    /// belongs to neither class.
    pub fn from_score(score: f64) -> Option<Self> {
        if score > 4.0 {
            Some(NoduleLabel::Malignant)
        } else if score < 4.0 {
            Some(NoduleLabel::NonMalignant)
        } else {
            None
        }
    }

    pub fn as_binary(self) -> u8 {
        match self {
            NoduleLabel::NonMalignant => 0,
            NoduleLabel::Malignant => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoduleMask {
    geometry: Geometry,
    values: Vec<u8>,
    nodule_id: String,
    malignancy_score: f64,
}

impl NoduleMask {
    pub fn new(
        geometry: Geometry,
        values: Vec<u8>,
        nodule_id: impl Into<String>,
        malignancy_score: f64,
    ) -> Result<Self> {
        geometry.validate()?;
        if values.len() != geometry.dims.len() {
            return Err(Error::Geometry("mask value count does not match dims".into()));
        }
        if values.iter().any(|&v| v > 1) {
            return Err(Error::Param("mask values must be 0 or 1".into()));
        }
        if !values.iter().any(|&v| v == 1) {
            return Err(Error::Param("mask has no foreground voxel".into()));
        }
        if !(1.0..=5.0).contains(&malignancy_score) {
            return Err(Error::Param(format!(
                "malignancy score {malignancy_score} outside 1-5"
            )));
        }
        Ok(NoduleMask {
            geometry,
            values,
            nodule_id: nodule_id.into(),
            malignancy_score,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn dims(&self) -> Dims {
        self.geometry.dims
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn nodule_id(&self) -> &str {
        &self.nodule_id
    }

    pub fn malignancy_score(&self) -> f64 {
        self.malignancy_score
    }

    pub fn label(&self) -> Option<NoduleLabel> {
        NoduleLabel::from_score(self.malignancy_score)
    }

    pub fn voxel_count(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1).count()
    }

    pub fn matches(&self, volume: &CtVolume) -> bool {
        self.geometry == volume.geometry
    }

    /// Inclusive bounding box of the foreground as `(min, max)` voxel coordinates.
    pub fn bounding_box(&self) -> ([usize; 3], [usize; 3]) {
        let d = self.dims();
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        for (i, &v) in self.values.iter().enumerate() {
            if v == 1 {
                let (x, y, z) = d.coords(i);
                for (a, c) in [x, y, z].into_iter().enumerate() {
                    lo[a] = lo[a].min(c);
                    hi[a] = hi[a].max(c);
                }
            }
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(nx: usize, ny: usize, nz: usize) -> Geometry {
        Geometry::new(Dims::new(nx, ny, nz), [1.0; 3], [0.0; 3]).unwrap()
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(Geometry::new(Dims::new(0, 1, 1), [1.0; 3], [0.0; 3]).is_err());
        assert!(Geometry::new(Dims::new(1, 1, 1), [1.0, 0.0, 1.0], [0.0; 3]).is_err());
        assert!(CtVolume::new(geom(2, 2, 2), vec![0.0; 7], IntensityUnit::Hu).is_err());
    }

    #[test]
    fn normalized_range_enforced() {
        assert!(CtVolume::new(geom(1, 1, 2), vec![0.0, 1.5], IntensityUnit::Normalized).is_err());
        assert!(CtVolume::new(geom(1, 1, 2), vec![0.0, 1.0], IntensityUnit::Normalized).is_ok());
    }

    #[test]
    fn label_thresholds() {
        assert_eq!(NoduleLabel::from_score(4.5), Some(NoduleLabel::Malignant));
        assert_eq!(NoduleLabel::from_score(2.0), Some(NoduleLabel::NonMalignant));
        assert_eq!(NoduleLabel::from_score(4.0), None);
    }

    #[test]
    fn mask_requires_foreground() {
        assert!(NoduleMask::new(geom(2, 2, 1), vec![0; 4], "n", 2.0).is_err());
        let m = NoduleMask::new(geom(2, 2, 1), vec![0, 1, 0, 0], "n", 2.0).unwrap();
        assert_eq!(m.voxel_count(), 1);
        assert_eq!(m.bounding_box(), ([1, 0, 0], [1, 0, 0]));
    }

    #[test]
    fn index_roundtrip() {
        let d = Dims::new(3, 4, 5);
        for i in 0..d.len() {
            let (x, y, z) = d.coords(i);
            assert_eq!(d.index(x, y, z), i);
        }
    }
}
