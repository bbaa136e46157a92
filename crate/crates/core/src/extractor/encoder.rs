use rand::Rng;

use crate::corpus::{TokenizedDoc, Vocabulary};

/// A trainable document encoder producing a fixed-width vector.
///
/// Parameters are exposed as named flat blocks; `backward` accumulates into
/// gradient buffers laid out like [`TextEncoder::blocks`].
pub trait TextEncoder: Send + Sync {
    /// Document representation prepared once, ahead of training.
    type Input: Send + Sync;
    /// Activations kept from `forward` for `backward`.
    type Cache;

    fn output_dim(&self) -> usize;
    fn prepare(&self, doc: &TokenizedDoc) -> Self::Input;
    fn forward(&self, input: &Self::Input) -> (Vec<f64>, Self::Cache);
    fn backward(&self, input: &Self::Input, cache: &Self::Cache, grad_out: &[f64], grads: &mut [Vec<f64>]);
    fn blocks(&self) -> Vec<(&'static str, &[f64])>;
    fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [f64])>;
}

/// Mean of token embeddings followed by a tanh dense layer.
///
/// Row 0 of the embedding table is shared by all tokens outside the
/// encoder vocabulary; word `i` of the vocabulary uses row `i + 1`. An empty
/// document encodes to `tanh(b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceEncoder {
    vocab: Vocabulary,
    emb_dim: usize,
    out_dim: usize,
    /// (|vocab| + 1) x emb_dim
    pub embedding: Vec<f64>,
    /// out_dim x emb_dim
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

pub struct EncoderCache {
    mean: Vec<f64>,
    out: Vec<f64>,
}

impl ReferenceEncoder {
    pub fn new(vocab: Vocabulary, emb_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        assert!(emb_dim > 0 && out_dim > 0, "encoder dimensions must be positive");
        let rows = vocab.len() + 1;
        let bound = 1.0 / (emb_dim as f64).sqrt();
        let embedding = (0..rows * emb_dim).map(|_| rng.gen_range(-bound..bound)).collect();
        let weight = (0..out_dim * emb_dim).map(|_| rng.gen_range(-bound..bound)).collect();
        Self {
            vocab,
            emb_dim,
            out_dim,
            embedding,
            weight,
            bias: vec![0.0; out_dim],
        }
    }

    /// Rebuilds an encoder from stored parameters.
    pub fn from_parts(
        vocab: Vocabulary,
        emb_dim: usize,
        out_dim: usize,
        embedding: Vec<f64>,
        weight: Vec<f64>,
        bias: Vec<f64>,
    ) -> Option<Self> {
        let ok = embedding.len() == (vocab.len() + 1) * emb_dim
            && weight.len() == out_dim * emb_dim
            && bias.len() == out_dim;
        ok.then_some(Self { vocab, emb_dim, out_dim, embedding, weight, bias })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn emb_dim(&self) -> usize {
        self.emb_dim
    }

    /// Embedding row of `token`.
    pub fn row(&self, token: &str) -> usize {
        self.vocab.get(token).map_or(0, |i| i + 1)
    }
}

impl TextEncoder for ReferenceEncoder {
    type Input = Vec<u32>;
    type Cache = EncoderCache;

    fn output_dim(&self) -> usize {
        self.out_dim
    }

    fn prepare(&self, doc: &TokenizedDoc) -> Vec<u32> {
        doc.tokens.iter().map(|t| self.row(t) as u32).collect()
    }

    fn forward(&self, input: &Vec<u32>) -> (Vec<f64>, EncoderCache) {
        let e = self.emb_dim;
        let mut mean = vec![0.0; e];
        for &r in input {
            let row = &self.embedding[r as usize * e..(r as usize + 1) * e];
            mean.iter_mut().zip(row).for_each(|(m, x)| *m += x);
        }
        if !input.is_empty() {
            let n = input.len() as f64;
            mean.iter_mut().for_each(|m| *m /= n);
        }
        let out: Vec<f64> = (0..self.out_dim)
            .map(|o| {
                let w = &self.weight[o * e..(o + 1) * e];
                (self.bias[o] + w.iter().zip(&mean).map(|(a, b)| a * b).sum::<f64>()).tanh()
            })
            .collect();
        (out.clone(), EncoderCache { mean, out })
    }

    fn backward(&self, input: &Vec<u32>, cache: &EncoderCache, grad_out: &[f64], grads: &mut [Vec<f64>]) {
        let e = self.emb_dim;
        let [g_emb, g_w, g_b] = grads else {
            panic!("reference encoder has three parameter blocks");
        };
        let mut g_mean = vec![0.0; e];
        for o in 0..self.out_dim {
            let d = grad_out[o] * (1.0 - cache.out[o] * cache.out[o]);
            if d == 0.0 {
                continue;
            }
            g_b[o] += d;
            let w = &self.weight[o * e..(o + 1) * e];
            for j in 0..e {
                g_w[o * e + j] += d * cache.mean[j];
                g_mean[j] += d * w[j];
            }
        }
        if input.is_empty() {
            return;
        }
        let n = input.len() as f64;
        for &r in input {
            let row = &mut g_emb[r as usize * e..(r as usize + 1) * e];
            row.iter_mut().zip(&g_mean).for_each(|(g, m)| *g += m / n);
        }
    }

    fn blocks(&self) -> Vec<(&'static str, &[f64])> {
        vec![("embedding", &self.embedding), ("encoder_weight", &self.weight), ("encoder_bias", &self.bias)]
    }

    fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("embedding", &mut self.embedding),
            ("encoder_weight", &mut self.weight),
            ("encoder_bias", &mut self.bias),
        ]
    }
}
