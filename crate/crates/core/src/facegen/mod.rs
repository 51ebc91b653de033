//! Lip-synchronised face generation: causal audio encoder, U-Net frame
//! generator, multi-scale patch discriminator, augmentation and training.

mod audio;
mod augment;
mod config;
mod disc;
mod metrics;
mod model;
mod negative;
mod train;

pub use audio::AudioEncoder;
pub use augment::{augment, AugmentParams};
pub use config::{FacegenConfig, SUPPORTED_FACE_SIZES};
pub use disc::{downsample, hinge_disc_loss, hinge_gen_loss, MultiScaleDisc};
pub use metrics::{expert_cosine, laplacian_sharpness, mean_l1, reconstruct_clip};
pub use model::{faces_to_tensor, FacegenModel, GenInput, FACEGEN_CHECKPOINT_KIND};
pub use negative::{sample_negative, sample_negative_index};
pub use train::{FacegenBatch, FacegenLosses, FacegenTrainer, GeneratorTerms};
