//! TF-IDF, TF-IDF-difference ranking, and polarity-over-time (POT) scores.
//!
//! For week `t` the news of the trailing window is split into five classes
//! by the percent change of the week it belongs to, and word `x` scores
//!
//! ```text
//! P = W(vpos)/sqrt(N_vpos) - W(vneg)/sqrt(N_vneg)
//!   + alpha * (W(pos)/sqrt(N_pos) - W(neg)/sqrt(N_neg))
//! ```
//!
//! where `W(d)` is the term frequency of `x` in the pooled text of class `d`
//! times its smoothed IDF over the window's documents, and `N_d` the class
//! document count. Empty classes contribute 0.

mod cache;
mod pot;
mod tfidf;

pub use cache::{model_path, read_pot_cache, read_pot_model, write_pot_cache, write_pot_model, write_trajectory_csv};
pub use pot::{
    pot_matrix, pot_models, pot_score, pot_trajectory, PotHistory, PotMatrix, PotModel, PotParams, PotWindow, WeekTerms,
};
pub use tfidf::{tfidf, tfidf_difference_ranking, ClassCorpus, ClassTerms, DocFreq};
