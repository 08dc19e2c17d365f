//! Bit-level content measures, an RBF support-vector classifier over them,
//! LSB embedding, and a forced-embedding detector that estimates how much of
//! an image's LSB plane has already been replaced.

pub mod bitmeasures;
pub mod classifier;
pub mod cli;
pub mod detector;
pub mod error;
pub mod imageio;
pub mod rng;
pub mod stego;
pub mod synth;
pub mod wavelet;

pub use bitmeasures::{feature_vector, FeatureVector, MeasureConfig, Scaler, Word32, FEATURE_DIM};
pub use classifier::{
    evaluate, load_model, save_model, train_binary, train_multiclass, ConfusionMatrix, Evaluation, Label,
    MulticlassModel, Sample, SvmConfig, SvmModel,
};
pub use detector::{calibrate, estimate_k, forced_embedding_curve, AnalyticModel, CalibrationCurve, EtaReading};
pub use error::{Error, PnmError, Result};
pub use imageio::{read_pnm, write_pnm, Image, ImagePlane, RgbImage};
pub use stego::{embed_lsb, extract_lsb_plane, EmbedOrder, LsbPlane, StegoParams};
pub use wavelet::{second_level_subbands, Band, SubBands};
