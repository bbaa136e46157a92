use crate::error::{Error, Result};
use crate::lexicon::PotMatrix;

/// Attention over the lag columns of a V x L POT matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    /// Softmax weights over lags; sum to 1.
    pub weights: Vec<f64>,
    /// `M a`, length V.
    pub pooled: Vec<f64>,
    /// `tanh(W M)`, V x L row-major, kept for the backward pass.
    activations: Vec<f64>,
}

/// `a = softmax(v' tanh(W M))`, `V_pot = M a`.
pub fn pot_attention(m: &PotMatrix, w: &[f64], v: &[f64]) -> Result<Attention> {
    if m.values.len() != m.rows * m.lags || m.lags == 0 {
        return Err(Error::Shape(format!("POT matrix {}x{} holds {} values", m.rows, m.lags, m.values.len())));
    }
    if w.len() != m.rows * m.rows || v.len() != m.rows {
        return Err(Error::Shape(format!(
            "attention parameters W[{}], v[{}] do not fit a {}-row POT matrix",
            w.len(),
            v.len(),
            m.rows
        )));
    }
    Ok(attend(&m.values, m.rows, m.lags, w, v))
}

pub(crate) fn attend(m: &[f64], rows: usize, lags: usize, w: &[f64], v: &[f64]) -> Attention {
    let mut activations = vec![0.0; rows * lags];
    for i in 0..rows {
        let wi = &w[i * rows..(i + 1) * rows];
        let out = &mut activations[i * lags..(i + 1) * lags];
        for (j, &wij) in wi.iter().enumerate() {
            if wij == 0.0 {
                continue;
            }
            let mj = &m[j * lags..(j + 1) * lags];
            out.iter_mut().zip(mj).for_each(|(o, x)| *o += wij * x);
        }
        out.iter_mut().for_each(|o| *o = o.tanh());
    }
    let mut scores = vec![0.0; lags];
    for i in 0..rows {
        if v[i] == 0.0 {
            continue;
        }
        let t = &activations[i * lags..(i + 1) * lags];
        scores.iter_mut().zip(t).for_each(|(s, x)| *s += v[i] * x);
    }
    let weights = softmax(&scores);
    let pooled = (0..rows)
        .map(|i| m[i * lags..(i + 1) * lags].iter().zip(&weights).map(|(x, a)| x * a).sum())
        .collect();
    Attention { weights, pooled, activations }
}

/// Accumulates the gradients of `W` and `v` given the gradient of the
/// pooled vector.
pub(crate) fn attend_backward(
    m: &[f64],
    rows: usize,
    lags: usize,
    v: &[f64],
    att: &Attention,
    g_pooled: &[f64],
    g_w: &mut [f64],
    g_v: &mut [f64],
) {
    let a = &att.weights;
    let mut g_a = vec![0.0; lags];
    for i in 0..rows {
        if g_pooled[i] == 0.0 {
            continue;
        }
        let mi = &m[i * lags..(i + 1) * lags];
        g_a.iter_mut().zip(mi).for_each(|(g, x)| *g += g_pooled[i] * x);
    }
    let dot: f64 = a.iter().zip(&g_a).map(|(x, g)| x * g).sum();
    let g_e: Vec<f64> = a.iter().zip(&g_a).map(|(x, g)| x * (g - dot)).collect();
    let mut g_s = vec![0.0; lags];
    for i in 0..rows {
        let t = &att.activations[i * lags..(i + 1) * lags];
        g_v[i] += t.iter().zip(&g_e).map(|(x, g)| x * g).sum::<f64>();
        if v[i] == 0.0 {
            continue;
        }
        for l in 0..lags {
            g_s[l] = g_e[l] * v[i] * (1.0 - t[l] * t[l]);
        }
        let gw = &mut g_w[i * rows..(i + 1) * rows];
        for (j, g) in gw.iter_mut().enumerate() {
            let mj = &m[j * lags..(j + 1) * lags];
            *g += g_s.iter().zip(mj).map(|(s, x)| s * x).sum::<f64>();
        }
    }
}

pub(crate) fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}
