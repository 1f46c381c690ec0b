//! Image-quality and distributional metrics.

mod distribution;
mod embed;
mod quality;

pub use distribution::{
    fid, gaussian_stats, kid, mmd2_unbiased, polynomial_kernel, sqrtm_psd, EmbeddingStats,
    KidResult, COVARIANCE_FLOOR,
};
pub use embed::{center_crop_patches, embed_patches, Embedder, HandcraftedEmbedder, PatchSet};
pub use quality::{mae, ms_ssim, ssim, SsimParams, MS_SSIM_WEIGHTS};
