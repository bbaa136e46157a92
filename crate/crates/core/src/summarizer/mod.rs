//! Weekly aggregation of article sentiment and the linear trend classifier.
//!
//! Each usable week samples up to `N` of its articles, scores them with the
//! extractor, and averages the positive-sentiment probabilities. Weeks whose
//! articles trained the extractor never enter this dataset. The week's mean
//! is paired with the trend of the week `offset` anchors later.

mod dataset;
mod model;

pub use dataset::{
    build_summarizer_dataset, chronological_split, read_weekly_rows, write_weekly_rows, write_weekly_sentiment_csv,
    ArticleScore, ArticleScorer, DatasetConfig, ExtractorScorer, SummarizerDataset, WeeklySentiment,
};
pub use model::{
    load_summarizer, predict_week, save_summarizer, train_summarizer, FeatureSpec, LinearUnit, SummarizerConfig,
    SummarizerKind, SummarizerModel,
};
