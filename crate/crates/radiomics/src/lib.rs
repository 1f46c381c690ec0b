//! Radiomic feature extraction over nodule ROIs: shape, first-order and
//! five texture-matrix families on the original image and eight Haar
//! wavelet sub-bands, plus ROI perturbations for stability analysis.

pub mod error;
pub mod extract;
pub mod firstorder;
pub mod glcm;
pub mod gldm;
pub mod glrlm;
pub mod glszm;
pub mod grid;
pub mod ngtdm;
pub mod perturb;
pub mod roi;
pub mod runs;
pub mod shape;
pub mod table;
pub mod wavelet;

pub use error::{RadiomicsError, Result};
pub use grid::Grid3;
pub use roi::{discretize_fixed_bins, zscore_normalize, LevelGrid, Roi};
pub use extract::{extract_all, extract_roi, feature_names, nodule_roi, ExtractionConfig, FeatureVector};
pub use perturb::{perturb_roi, PerturbMode, PerturbationSpec};
pub use table::{FeatureRow, FeatureSchema, FeatureTable};
