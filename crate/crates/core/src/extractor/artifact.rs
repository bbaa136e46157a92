use std::path::Path;

use serde::{Deserialize, Serialize};

use super::encoder::{ReferenceEncoder, TextEncoder};
use super::model::{ExtractorModel, HeadParams, PotScaling, HEAD_BLOCKS};
use super::train::ExtractorConfig;
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::util;

const MAGIC: &str = "POTREND-EXTRACTOR";
const FORMAT_VERSION: u32 = 1;

/// A trained extractor with the POT vocabulary its matrices are built on.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractorArtifact {
    pub model: ExtractorModel<ReferenceEncoder>,
    pub pot_vocab: Vocabulary,
    pub config: ExtractorConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format_version: u32,
    config: ExtractorConfig,
    lags: usize,
    lambda: f64,
    pot_vocab_sha256: String,
    encoder_vocab_sha256: String,
    pot_vocab: Vec<String>,
    encoder_vocab: Vec<String>,
    blocks: Vec<BlockEntry>,
}

fn shapes(a: &ExtractorArtifact) -> Vec<(&'static str, Vec<usize>, &[f64])> {
    let m = &a.model;
    let (v, h) = (m.pot_rows(), m.hidden());
    let enc = &m.encoder;
    let (e, d) = (enc.emb_dim(), enc.output_dim());
    let width = d + v;
    let enc_shapes = [vec![enc.vocab().len() + 1, e], vec![d, e], vec![d]];
    let head_shapes = [vec![v, v], vec![v], vec![h, width], vec![h], vec![2, h], vec![2], vec![2, h], vec![2]];
    let mut out: Vec<(&'static str, Vec<usize>, &[f64])> = enc
        .blocks()
        .into_iter()
        .zip(enc_shapes)
        .map(|((n, b), s)| (n, s, b))
        .collect();
    out.extend(
        HEAD_BLOCKS
            .into_iter()
            .zip(head_shapes)
            .zip(m.head.blocks())
            .map(|((n, s), b)| (n, s, b.as_slice())),
    );
    out.push(("pot_mean", vec![v], &m.scaling.mean));
    out.push(("pot_std", vec![v], &m.scaling.std));
    out
}

/// Magic line, one JSON header line, then every block as little-endian f64.
pub fn extractor_to_bytes(artifact: &ExtractorArtifact) -> Vec<u8> {
    let blocks = shapes(artifact);
    let mut offset = 0;
    let entries = blocks
        .iter()
        .map(|(name, shape, data)| {
            let entry = BlockEntry { name: name.to_string(), shape: shape.clone(), offset };
            offset += data.len();
            entry
        })
        .collect();
    let header = Header {
        format_version: FORMAT_VERSION,
        config: artifact.config.clone(),
        lags: artifact.model.lags(),
        lambda: artifact.model.lambda,
        pot_vocab_sha256: artifact.pot_vocab.hash(),
        encoder_vocab_sha256: artifact.model.encoder.vocab().hash(),
        pot_vocab: artifact.pot_vocab.words().to_vec(),
        encoder_vocab: artifact.model.encoder.vocab().words().to_vec(),
        blocks: entries,
    };
    let mut out = format!("{MAGIC} {FORMAT_VERSION}\n").into_bytes();
    out.extend(serde_json::to_vec(&header).expect("header serializes"));
    out.push(b'\n');
    for (_, _, data) in &blocks {
        for x in *data {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn extractor_from_bytes(bytes: &[u8]) -> Result<ExtractorArtifact> {
    let bad = |msg: String| Error::data(format!("extractor model: {msg}"));
    let mut lines = bytes.splitn(3, |b| *b == b'\n');
    let magic = lines.next().unwrap_or_default();
    if magic != format!("{MAGIC} {FORMAT_VERSION}").as_bytes() {
        return Err(bad(format!("not a version {FORMAT_VERSION} extractor model")));
    }
    let header: Header = serde_json::from_slice(lines.next().unwrap_or_default())
        .map_err(|e| bad(format!("bad header: {e}")))?;
    let payload = lines.next().unwrap_or_default();
    if payload.len() % 8 != 0 {
        return Err(bad("truncated parameter data".into()));
    }
    let values: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();

    let pot_vocab = Vocabulary::new(header.pot_vocab)?;
    let encoder_vocab = Vocabulary::new(header.encoder_vocab)?;
    if pot_vocab.hash() != header.pot_vocab_sha256 || encoder_vocab.hash() != header.encoder_vocab_sha256 {
        return Err(bad("vocabulary hash mismatch".into()));
    }
    let take = |name: &str| -> Result<(Vec<usize>, Vec<f64>)> {
        let entry = header
            .blocks
            .iter()
            .find(|b| b.name == name)
            .ok_or_else(|| bad(format!("missing block {name}")))?;
        let len: usize = entry.shape.iter().product();
        let data = values
            .get(entry.offset..entry.offset + len)
            .ok_or_else(|| bad(format!("block {name} runs past the end of the file")))?;
        if data.iter().any(|x| !x.is_finite()) {
            return Err(bad(format!("block {name} holds non-finite values")));
        }
        Ok((entry.shape.clone(), data.to_vec()))
    };
    let (emb_shape, embedding) = take("embedding")?;
    let (w_shape, weight) = take("encoder_weight")?;
    let (_, bias) = take("encoder_bias")?;
    let emb_dim = *emb_shape.get(1).ok_or_else(|| bad("bad embedding shape".into()))?;
    let out_dim = w_shape[0];
    let encoder = ReferenceEncoder::from_parts(encoder_vocab, emb_dim, out_dim, embedding, weight, bias)
        .ok_or_else(|| bad("encoder blocks do not match the encoder vocabulary".into()))?;
    let mut head_blocks = HEAD_BLOCKS.iter().map(|n| take(n).map(|(_, d)| d)).collect::<Result<Vec<_>>>()?.into_iter();
    let mut next = || head_blocks.next().expect("eight head blocks");
    let head = HeadParams {
        att_w: next(),
        att_v: next(),
        dense_w: next(),
        dense_b: next(),
        senti_w: next(),
        senti_b: next(),
        worth_w: next(),
        worth_b: next(),
    };
    let scaling = PotScaling { mean: take("pot_mean")?.1, std: take("pot_std")?.1 };
    let model = ExtractorModel::from_parts(encoder, head, scaling, header.lags, header.lambda)?;
    if model.pot_rows() != pot_vocab.len() {
        return Err(bad(format!(
            "attention expects {} POT words, vocabulary has {}",
            model.pot_rows(),
            pot_vocab.len()
        )));
    }
    Ok(ExtractorArtifact { model, pot_vocab, config: header.config })
}

pub fn save_extractor(path: &Path, artifact: &ExtractorArtifact) -> Result<()> {
    util::write_all(path, &extractor_to_bytes(artifact))
}

pub fn load_extractor(path: &Path) -> Result<ExtractorArtifact> {
    if !path.exists() {
        return Err(Error::MissingArtifact { stage: "train-extractor", path: path.to_path_buf() });
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(format!("cannot read {}", path.display()), e))?;
    extractor_from_bytes(&bytes)
}
