//! Per-article sentiment extractor.
//!
//! A document is encoded to `V_cls`. The week's POT matrix `M` (V words x L
//! lags, rows standardized with training statistics) is pooled over lags by
//! attention, `a = softmax(v' tanh(W M))`, `V_pot = M a`. The concatenation
//! `V_cls ++ V_pot` feeds a rectified dense layer and two softmax heads,
//! sentiment and worthiness, trained on
//! `lambda * CE_senti + (1 - lambda) * CE_worth`. Articles without a
//! worthiness label contribute plain `CE_senti`.

mod artifact;
mod attention;
mod encoder;
mod gradcheck;
mod model;
mod train;

pub use artifact::{extractor_from_bytes, extractor_to_bytes, load_extractor, save_extractor, ExtractorArtifact};
pub use attention::{pot_attention, Attention};
pub use encoder::{EncoderCache, ReferenceEncoder, TextEncoder};
pub use gradcheck::{gradient_check, gradient_check_with, BlockCheck, GradCheck, GradCheckOptions};
pub use model::{
    multitask_loss, sentiment_score, ExtractorModel, Gradients, HeadParams, LossBreakdown, Output, PotScaling,
    PreparedPot, TrainingExample, HEAD_BLOCKS, PROB_FLOOR,
};
pub use train::{
    evaluate, split_dev_weeks, split_dev_weeks_by_label, train_extractor, train_model, write_training_log, Adam, EncoderKind, EpochLog, ExtractorConfig,
    TrainOutcome,
};
