use rand::seq::index;

use super::encoder::TextEncoder;
use super::model::{ExtractorModel, Gradients, TrainingExample};
use crate::error::Result;
use crate::util;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub eps: f64,
    /// Lower bound on the relative-error denominator, so coordinates whose
    /// true gradient is 0 are compared absolutely.
    pub floor: f64,
    /// Check at most this many coordinates per block (seeded sample).
    pub max_coords: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self { eps: 1e-5, floor: 1e-6, max_coords: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockCheck {
    pub name: &'static str,
    pub checked: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub blocks: Vec<BlockCheck>,
}

impl GradCheck {
    pub fn max_rel_error(&self) -> f64 {
        self.blocks.iter().map(|b| b.max_rel_error).fold(0.0, f64::max)
    }
}

/// Compares the analytic gradient of the example loss with central finite
/// differences, block by block.
pub fn gradient_check<E: TextEncoder + Clone>(
    model: &ExtractorModel<E>,
    ex: &TrainingExample,
    options: &GradCheckOptions,
) -> Result<GradCheck> {
    gradient_check_with(model, ex, options, |_| {})
}

/// As [`gradient_check`], with `tamper` applied to the analytic gradient
/// before comparison.
pub fn gradient_check_with<E: TextEncoder + Clone>(
    model: &ExtractorModel<E>,
    ex: &TrainingExample,
    options: &GradCheckOptions,
    tamper: impl FnOnce(&mut Gradients),
) -> Result<GradCheck> {
    let (_, mut grads) = model.gradients(ex)?;
    tamper(&mut grads);
    let names = model.block_names();
    let analytic: Vec<Vec<f64>> = grads.blocks(&names).into_iter().map(|(_, g)| g.to_vec()).collect();
    let mut probe = model.clone();
    let mut rng = util::rng(options.seed, 0x6C);
    let mut blocks = Vec::with_capacity(names.len());
    for (b, name) in names.iter().enumerate() {
        let len = analytic[b].len();
        let coords: Vec<usize> = match options.max_coords {
            Some(k) if k < len => {
                let mut c = index::sample(&mut rng, len, k).into_vec();
                c.sort_unstable();
                c
            }
            _ => (0..len).collect(),
        };
        let mut worst = 0.0f64;
        for &k in &coords {
            let original = probe.blocks()[b].1[k];
            probe.blocks_mut()[b].1[k] = original + options.eps;
            let hi = probe.loss(ex)?.total;
            probe.blocks_mut()[b].1[k] = original - options.eps;
            let lo = probe.loss(ex)?.total;
            probe.blocks_mut()[b].1[k] = original;
            let numeric = (hi - lo) / (2.0 * options.eps);
            let a = analytic[b][k];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(options.floor);
            worst = worst.max(err);
        }
        blocks.push(BlockCheck { name, checked: coords.len(), max_rel_error: worst });
    }
    Ok(GradCheck { blocks })
}
