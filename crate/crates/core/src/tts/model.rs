use candle_core::{DType, Device, Tensor, D};
use serde::{Deserialize, Serialize};

use super::config::{TtsConfig, UPSAMPLE_RATES};
use crate::audio::MelTransform;
use crate::error::{Error, Result};
use crate::lang::LanguageTag;
use crate::nn::{grad_reverse, leaky_relu, ChannelNorm, Conv1d, ConvTranspose1d, Embedding, Linear, Params};
use crate::textfront::{Frontend, PhonemeSequence};

/// Offset added to predicted log-durations so an untrained model starts near five frames per phoneme.
const LOG_DURATION_PRIOR: f64 = 1.609_437_912_434_100_3;

/// Key-mask bias; large enough that masked keys get exactly zero attention weight.
const MASK_BIAS: f64 = -1e9;

/// One row of the speaker table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeakerEntry {
    pub speaker_id: String,
    pub native_language: LanguageTag,
}

/// A speaker's learned embedding together with its native language.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerProfile {
    pub speaker_id: String,
    pub embedding: Vec<f32>,
    pub native_language: LanguageTag,
}

/// Per-language slices of the shared symbol-embedding table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolTable {
    pub sizes: [usize; 4],
    pub hashes: [String; 4],
}

impl SymbolTable {
    pub fn from_frontend(frontend: &Frontend) -> Self {
        SymbolTable {
            sizes: LanguageTag::ALL.map(|l| frontend.inventory(l).len()),
            hashes: LanguageTag::ALL.map(|l| frontend.inventory(l).hash()),
        }
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    fn offset(&self, lang: LanguageTag) -> usize {
        self.sizes[..lang.index()].iter().sum()
    }

    /// Inventory-local ids of `seq` mapped into the shared table.
    pub fn global_ids(&self, seq: &PhonemeSequence) -> Result<Vec<u32>> {
        if seq.ids.len() != seq.symbols.len() {
            return Err(Error::ShapeMismatch("phoneme sequence has no ids; map it through its inventory".into()));
        }
        let off = self.offset(seq.language) as u32;
        let size = self.sizes[seq.language.index()] as u32;
        seq.ids
            .iter()
            .map(|&id| {
                if id < size {
                    Ok(off + id)
                } else {
                    Err(Error::UnknownId {
                        id,
                        language: seq.language,
                    })
                }
            })
            .collect()
    }
}

/// Text-encoder output for one utterance.
#[derive(Debug, Clone)]
pub struct TextEncoding {
    /// `(T_text, hidden_dim)`
    pub hidden: Tensor,
    pub mask: Vec<bool>,
}

struct Attention {
    q: Linear,
    k: Linear,
    v: Linear,
    o: Linear,
    n_heads: usize,
}

impl Attention {
    fn new(p: &Params, dim: usize, n_heads: usize) -> Result<Self> {
        Ok(Attention {
            q: Linear::new(&p.pp("q"), dim, dim)?,
            k: Linear::new(&p.pp("k"), dim, dim)?,
            v: Linear::new(&p.pp("v"), dim, dim)?,
            o: Linear::new(&p.pp("o"), dim, dim)?,
            n_heads,
        })
    }

    /// `x: (B, T, H)`, `key_bias: (B, 1, 1, T)`.
    fn forward(&self, x: &Tensor, key_bias: &Tensor) -> Result<Tensor> {
        let (b, t, h) = x.dims3()?;
        let dh = h / self.n_heads;
        let heads = |y: Tensor| -> Result<Tensor> { Ok(y.reshape((b, t, self.n_heads, dh))?.transpose(1, 2)?.contiguous()?) };
        let q = heads(self.q.forward(x)?)?;
        let k = heads(self.k.forward(x)?)?;
        let v = heads(self.v.forward(x)?)?;
        let scores = (q.matmul(&k.t()?)? / (dh as f64).sqrt())?.broadcast_add(key_bias)?;
        let w = candle_nn::ops::softmax_last_dim(&scores)?;
        let y = w.matmul(&v)?.transpose(1, 2)?.reshape((b, t, h))?;
        self.o.forward(&y)
    }
}

struct EncoderLayer {
    attn: Attention,
    norm1: ChannelNorm,
    ffn1: Conv1d,
    ffn2: Conv1d,
    norm2: ChannelNorm,
}

impl EncoderLayer {
    fn new(p: &Params, cfg: &TtsConfig) -> Result<Self> {
        let h = cfg.hidden_dim;
        Ok(EncoderLayer {
            attn: Attention::new(&p.pp("attn"), h, cfg.n_heads)?,
            norm1: ChannelNorm::new(&p.pp("norm1"), h)?,
            ffn1: Conv1d::new(&p.pp("ffn1"), h, cfg.ffn_dim, 3, 1, 1)?,
            ffn2: Conv1d::new(&p.pp("ffn2"), cfg.ffn_dim, h, 3, 1, 1)?,
            norm2: ChannelNorm::new(&p.pp("norm2"), h)?,
        })
    }

    /// `x: (B, H, T)` already masked.
    fn forward(&self, x: &Tensor, mask: &Tensor, key_bias: &Tensor) -> Result<Tensor> {
        let a = self.attn.forward(&x.transpose(1, 2)?.contiguous()?, key_bias)?.transpose(1, 2)?;
        let x = self.norm1.forward(&(x + a)?)?.broadcast_mul(mask)?;
        let y = self.ffn1.forward(&x)?.relu()?.broadcast_mul(mask)?;
        let y = self.ffn2.forward(&y)?.broadcast_mul(mask)?;
        Ok(self.norm2.forward(&(x + y)?)?.broadcast_mul(mask)?)
    }
}

pub(crate) struct TextEncoder {
    symbols: Embedding,
    layers: Vec<EncoderLayer>,
    proj: Conv1d,
    hidden_dim: usize,
    latent_dim: usize,
}

pub(crate) struct EncoderOutput {
    /// `(B, H, T)`
    pub hidden: Tensor,
    /// `(B, L, T)`
    pub m_p: Tensor,
    pub logs_p: Tensor,
}

impl TextEncoder {
    fn new(p: &Params, cfg: &TtsConfig, n_symbols: usize) -> Result<Self> {
        let h = cfg.hidden_dim;
        Ok(TextEncoder {
            symbols: Embedding::new(&p.pp("symbols"), n_symbols, h, (h as f64).powf(-0.5))?,
            layers: (0..cfg.n_text_layers)
                .map(|i| EncoderLayer::new(&p.pp(format!("layer{i}")), cfg))
                .collect::<Result<_>>()?,
            proj: Conv1d::new(&p.pp("proj"), h, 2 * cfg.latent_dim, 1, 1, 0)?,
            hidden_dim: h,
            latent_dim: cfg.latent_dim,
        })
    }

    /// `ids: (B, T)` u32, `mask: (B, 1, T)`, `lang: (B, H)`.
    pub fn forward(&self, ids: &Tensor, mask: &Tensor, lang: &Tensor) -> Result<EncoderOutput> {
        let scale = (self.hidden_dim as f64).sqrt();
        let x = (self.symbols.forward(ids)?.broadcast_add(&lang.unsqueeze(1)?)? * scale)?;
        let mut x = x.transpose(1, 2)?.broadcast_mul(mask)?;
        let key_bias = ((1.0 - mask)? * MASK_BIAS)?.unsqueeze(1)?;
        for layer in &self.layers {
            x = layer.forward(&x, mask, &key_bias)?;
        }
        let stats = self.proj.forward(&x)?.broadcast_mul(mask)?;
        Ok(EncoderOutput {
            m_p: stats.narrow(1, 0, self.latent_dim)?,
            logs_p: stats.narrow(1, self.latent_dim, self.latent_dim)?,
            hidden: x,
        })
    }
}

pub(crate) struct DurationPredictor {
    lang: Linear,
    speaker: Linear,
    conv1: Conv1d,
    norm1: ChannelNorm,
    conv2: Conv1d,
    norm2: ChannelNorm,
    proj: Conv1d,
}

impl DurationPredictor {
    fn new(p: &Params, cfg: &TtsConfig) -> Result<Self> {
        let h = cfg.hidden_dim;
        Ok(DurationPredictor {
            lang: Linear::new(&p.pp("lang"), h, h)?,
            speaker: Linear::new(&p.pp("speaker"), h, h)?,
            conv1: Conv1d::new(&p.pp("conv1"), h, h, 3, 1, 1)?,
            norm1: ChannelNorm::new(&p.pp("norm1"), h)?,
            conv2: Conv1d::new(&p.pp("conv2"), h, h, 3, 1, 1)?,
            norm2: ChannelNorm::new(&p.pp("norm2"), h)?,
            proj: Conv1d::new(&p.pp("proj"), h, 1, 1, 1, 0)?,
        })
    }

    /// Log-durations `(B, 1, T)`.
    pub fn forward(&self, x: &Tensor, mask: &Tensor, lang: &Tensor, spk: &Tensor) -> Result<Tensor> {
        let cond = (self.lang.forward(lang)? + self.speaker.forward(spk)?)?.unsqueeze(2)?;
        let x = x.broadcast_add(&cond)?.broadcast_mul(mask)?;
        let x = self.norm1.forward(&self.conv1.forward(&x)?.relu()?)?.broadcast_mul(mask)?;
        let x = self.norm2.forward(&self.conv2.forward(&x)?.relu()?)?.broadcast_mul(mask)?;
        Ok((self.proj.forward(&x)? + LOG_DURATION_PRIOR)?.broadcast_mul(mask)?)
    }
}

/// Residual tanh conv stack with a global conditioning bias.
struct ResStack {
    cond: Linear,
    layers: Vec<Conv1d>,
}

impl ResStack {
    fn new(p: &Params, cond_dim: usize, channels: usize, n_layers: usize) -> Result<Self> {
        Ok(ResStack {
            cond: Linear::new(&p.pp("cond"), cond_dim, channels)?,
            layers: (0..n_layers)
                .map(|i| Conv1d::new(&p.pp(format!("conv{i}")), channels, channels, 5, 1, 2))
                .collect::<Result<_>>()?,
        })
    }

    fn forward(&self, x: &Tensor, mask: &Tensor, g: &Tensor) -> Result<Tensor> {
        let mut x = x.broadcast_add(&self.cond.forward(g)?.unsqueeze(2)?)?.broadcast_mul(mask)?;
        for l in &self.layers {
            x = (&x + l.forward(&x)?.tanh()?)?.broadcast_mul(mask)?;
        }
        Ok(x)
    }
}

pub(crate) struct PosteriorEncoder {
    pre: Conv1d,
    stack: ResStack,
    proj: Conv1d,
    latent_dim: usize,
}

pub(crate) struct Posterior {
    pub z: Tensor,
    pub logs_q: Tensor,
}

impl PosteriorEncoder {
    fn new(p: &Params, cfg: &TtsConfig) -> Result<Self> {
        let h = cfg.hidden_dim;
        Ok(PosteriorEncoder {
            pre: Conv1d::new(&p.pp("pre"), cfg.mel_bins, h, 1, 1, 0)?,
            stack: ResStack::new(&p.pp("stack"), h, h, 3)?,
            proj: Conv1d::new(&p.pp("proj"), h, 2 * cfg.latent_dim, 1, 1, 0)?,
            latent_dim: cfg.latent_dim,
        })
    }

    /// `mel: (B, M, T)`; `noise: (B, L, T)` standard normal, or `None` for the mean.
    pub fn forward(&self, mel: &Tensor, mask: &Tensor, g: &Tensor, noise: Option<&Tensor>) -> Result<Posterior> {
        let x = self.stack.forward(&self.pre.forward(mel)?, mask, g)?;
        let stats = self.proj.forward(&x)?.broadcast_mul(mask)?;
        let m_q = stats.narrow(1, 0, self.latent_dim)?;
        let logs_q = stats.narrow(1, self.latent_dim, self.latent_dim)?;
        let z = match noise {
            Some(e) => (&m_q + (e * logs_q.exp()?)?)?.broadcast_mul(mask)?,
            None => m_q,
        };
        Ok(Posterior { z, logs_q })
    }
}

/// Mean-only affine coupling followed by a channel flip.
struct Coupling {
    pre: Conv1d,
    stack: ResStack,
    post: Conv1d,
    half: usize,
}

impl Coupling {
    fn new(p: &Params, cfg: &TtsConfig) -> Result<Self> {
        let half = cfg.latent_dim / 2;
        let h = cfg.hidden_dim;
        Ok(Coupling {
            pre: Conv1d::new(&p.pp("pre"), half, h, 1, 1, 0)?,
            stack: ResStack::new(&p.pp("stack"), h, h, 2)?,
            post: Conv1d::zeros(&p.pp("post"), h, half, 1, 1, 0)?,
            half,
        })
    }

    fn shift(&self, z0: &Tensor, mask: &Tensor, g: &Tensor) -> Result<Tensor> {
        let h = self.stack.forward(&self.pre.forward(z0)?, mask, g)?;
        Ok(self.post.forward(&h)?.broadcast_mul(mask)?)
    }

    fn forward(&self, z: &Tensor, mask: &Tensor, g: &Tensor, reverse: bool) -> Result<Tensor> {
        let z0 = z.narrow(1, 0, self.half)?;
        let z1 = z.narrow(1, self.half, self.half)?;
        let m = self.shift(&z0, mask, g)?;
        let z1 = if reverse { (z1 - m)? } else { (z1 + m)? };
        Ok(Tensor::cat(&[&z0, &z1], 1)?.broadcast_mul(mask)?)
    }
}

fn flip_channels(z: &Tensor) -> Result<Tensor> {
    let c = z.dim(1)?;
    let idx = Tensor::from_vec((0..c as u32).rev().collect::<Vec<_>>(), c, z.device())?;
    Ok(z.index_select(&idx, 1)?)
}

pub(crate) struct Flow {
    steps: Vec<Coupling>,
}

impl Flow {
    fn new(p: &Params, cfg: &TtsConfig) -> Result<Self> {
        Ok(Flow {
            steps: (0..cfg.n_flow_steps)
                .map(|i| Coupling::new(&p.pp(format!("step{i}")), cfg))
                .collect::<Result<_>>()?,
        })
    }

    /// Posterior latent → prior space.
    pub fn forward(&self, z: &Tensor, mask: &Tensor, g: &Tensor) -> Result<Tensor> {
        let mut z = z.clone();
        for s in &self.steps {
            z = flip_channels(&s.forward(&z, mask, g, false)?)?;
        }
        Ok(z)
    }

    /// Prior space → posterior latent.
    pub fn reverse(&self, z: &Tensor, mask: &Tensor, g: &Tensor) -> Result<Tensor> {
        let mut z = z.clone();
        for s in self.steps.iter().rev() {
            z = s.forward(&flip_channels(&z)?, mask, g, true)?;
        }
        Ok(z)
    }
}

struct UpBlock {
    up: ConvTranspose1d,
    res1: Conv1d,
    res2: Conv1d,
}

pub(crate) struct Decoder {
    pre: Conv1d,
    cond: Linear,
    blocks: Vec<UpBlock>,
    post: Conv1d,
}

impl Decoder {
    fn new(p: &Params, cfg: &TtsConfig) -> Result<Self> {
        let mut c = cfg.decoder_channels;
        let mut blocks = Vec::new();
        for (i, &r) in UPSAMPLE_RATES.iter().enumerate() {
            let bp = p.pp(format!("up{i}"));
            blocks.push(UpBlock {
                up: ConvTranspose1d::new(&bp.pp("up"), c, c / 2, 2 * r, r, r / 2)?,
                res1: Conv1d::new(&bp.pp("res1"), c / 2, c / 2, 3, 1, 1)?,
                res2: Conv1d::new(&bp.pp("res2"), c / 2, c / 2, 3, 1, 1)?,
            });
            c /= 2;
        }
        Ok(Decoder {
            pre: Conv1d::new(&p.pp("pre"), cfg.latent_dim, cfg.decoder_channels, 7, 1, 3)?,
            cond: Linear::new(&p.pp("cond"), cfg.hidden_dim, cfg.decoder_channels)?,
            blocks,
            post: Conv1d::new(&p.pp("post"), c, 1, 7, 1, 3)?,
        })
    }

    /// `z: (B, L, T)` → waveform `(B, T·hop)` in (-1, 1).
    pub fn forward(&self, z: &Tensor, g: &Tensor) -> Result<Tensor> {
        let mut x = self.pre.forward(z)?.broadcast_add(&self.cond.forward(g)?.unsqueeze(2)?)?;
        for b in &self.blocks {
            x = b.up.forward(&leaky_relu(&x, 0.1)?)?;
            let r = b.res1.forward(&leaky_relu(&x, 0.1)?)?;
            x = (&x + b.res2.forward(&leaky_relu(&r, 0.1)?)?)?;
        }
        Ok(self.post.forward(&leaky_relu(&x, 0.1)?)?.tanh()?.squeeze(1)?)
    }
}

pub(crate) struct SpeakerClassifier {
    l1: Linear,
    l2: Linear,
}

impl SpeakerClassifier {
    fn new(p: &Params, dim: usize, n_speakers: usize) -> Result<Self> {
        Ok(SpeakerClassifier {
            l1: Linear::new(&p.pp("l1"), dim, dim)?,
            l2: Linear::new(&p.pp("l2"), dim, n_speakers)?,
        })
    }

    /// `pooled: (B, H)` → logits `(B, n_speakers)`; gradients into `pooled` are scaled by `-lambda`.
    pub fn forward(&self, pooled: &Tensor, lambda: f64) -> Result<Tensor> {
        let x = grad_reverse(pooled, lambda)?;
        self.l2.forward(&self.l1.forward(&x)?.relu()?)
    }
}

/// Mean over the unmasked time steps: `x: (B, C, T)`, `mask: (B, 1, T)` → `(B, C)`.
pub fn masked_mean(x: &Tensor, mask: &Tensor) -> Result<Tensor> {
    let num = x.broadcast_mul(mask)?.sum(D::Minus1)?;
    let den = mask.sum(D::Minus1)?.maximum(1.0)?;
    Ok(num.broadcast_div(&den)?)
}

/// Squared norm of the centroid of the rows of `embeddings: (n, d)`.
pub fn speaker_mean_penalty(embeddings: &Tensor) -> Result<Tensor> {
    Ok(embeddings.mean(0)?.sqr()?.sum_all()?)
}

/// The multilingual synthesis network and its lookup tables.
pub struct TtsModel {
    pub(crate) cfg: TtsConfig,
    pub(crate) params: Params,
    pub(crate) symbols: SymbolTable,
    pub(crate) speakers: Vec<SpeakerEntry>,
    pub(crate) encoder: TextEncoder,
    pub(crate) languages: Embedding,
    pub(crate) duration: DurationPredictor,
    pub(crate) posterior: PosteriorEncoder,
    pub(crate) flow: Flow,
    pub(crate) decoder: Decoder,
    pub(crate) speaker_table: Embedding,
    pub(crate) classifier: SpeakerClassifier,
    pub(crate) mel: MelTransform,
}

impl TtsModel {
    pub fn new(cfg: TtsConfig, symbols: SymbolTable, speakers: Vec<SpeakerEntry>) -> Result<Self> {
        cfg.validate()?;
        if speakers.is_empty() {
            return Err(Error::Config("at least one speaker is required".into()));
        }
        let p = Params::new(cfg.seed, DType::F32);
        let h = cfg.hidden_dim;
        Ok(TtsModel {
            encoder: TextEncoder::new(&p.pp("encoder"), &cfg, symbols.total())?,
            languages: Embedding::new(&p.pp("languages"), LanguageTag::ALL.len(), h, (h as f64).powf(-0.5))?,
            duration: DurationPredictor::new(&p.pp("duration"), &cfg)?,
            posterior: PosteriorEncoder::new(&p.pp("posterior"), &cfg)?,
            flow: Flow::new(&p.pp("flow"), &cfg)?,
            decoder: Decoder::new(&p.pp("decoder"), &cfg)?,
            speaker_table: Embedding::new(&p.pp("speakers"), speakers.len(), h, cfg.speaker_init_std)?,
            classifier: SpeakerClassifier::new(&p.pp("classifier"), h, speakers.len())?,
            mel: MelTransform::new(&cfg.mel(), DType::F32)?,
            params: p,
            cfg,
            symbols,
            speakers,
        })
    }

    pub fn config(&self) -> &TtsConfig {
        &self.cfg
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    pub fn speakers(&self) -> &[SpeakerEntry] {
        &self.speakers
    }

    pub fn speaker_index(&self, speaker_id: &str) -> Result<usize> {
        self.speakers
            .iter()
            .position(|s| s.speaker_id == speaker_id)
            .ok_or_else(|| Error::UnknownSpeaker(speaker_id.to_string()))
    }

    pub fn speaker_profile(&self, speaker_id: &str) -> Result<SpeakerProfile> {
        let i = self.speaker_index(speaker_id)?;
        Ok(SpeakerProfile {
            speaker_id: speaker_id.to_string(),
            embedding: self.speaker_table.row(i)?.to_vec1()?,
            native_language: self.speakers[i].native_language,
        })
    }

    /// `(n_speakers, hidden_dim)` embedding table.
    pub fn speaker_embeddings(&self) -> &Tensor {
        self.speaker_table.table()
    }

    /// The learned vector of `lang`.
    pub fn language_embedding(&self, lang: LanguageTag) -> Result<Tensor> {
        self.languages.row(lang.index())
    }

    /// Runs the text encoder on one sequence with an explicit language vector.
    pub fn encode_text_with(&self, seq: &PhonemeSequence, lang_vec: &Tensor) -> Result<TextEncoding> {
        let t = seq.len();
        let h = self.cfg.hidden_dim;
        if t == 0 {
            return Ok(TextEncoding {
                hidden: Tensor::zeros((0, h), DType::F32, &Device::Cpu)?,
                mask: Vec::new(),
            });
        }
        let ids = Tensor::from_vec(self.symbols.global_ids(seq)?, (1, t), &Device::Cpu)?;
        let mask = Tensor::ones((1, 1, t), DType::F32, &Device::Cpu)?;
        let out = self.encoder.forward(&ids, &mask, &lang_vec.reshape((1, h))?)?;
        Ok(TextEncoding {
            hidden: out.hidden.squeeze(0)?.t()?.contiguous()?,
            mask: vec![true; t],
        })
    }

    pub fn encode_text(&self, seq: &PhonemeSequence) -> Result<TextEncoding> {
        self.encode_text_with(seq, &self.language_embedding(seq.language)?)
    }

    /// Per-phoneme durations in mel frames (strictly positive).
    pub fn predict_durations(&self, enc: &TextEncoding, lang_vec: &Tensor, spk: &Tensor) -> Result<Vec<f32>> {
        let (t, h) = enc.hidden.dims2()?;
        if t == 0 {
            return Ok(Vec::new());
        }
        let mask = Tensor::from_vec(
            enc.mask.iter().map(|&m| if m { 1f32 } else { 0.0 }).collect::<Vec<_>>(),
            (1, 1, t),
            &Device::Cpu,
        )?;
        let x = enc.hidden.t()?.unsqueeze(0)?.contiguous()?;
        let logw = self
            .duration
            .forward(&x, &mask, &lang_vec.reshape((1, h))?, &spk.reshape((1, h))?)?;
        Ok(logw.exp()?.flatten_all()?.to_vec1()?)
    }

    /// Speaker logits from the masked mean of an encoding.
    pub fn speaker_classifier(&self, enc: &TextEncoding, lambda: f64) -> Result<Tensor> {
        let pooled = pooled_encoding(enc)?;
        Ok(self.classifier.forward(&pooled.unsqueeze(0)?, lambda)?.squeeze(0)?)
    }
}

/// Masked mean over time of an encoding, `(hidden_dim,)`.
pub fn pooled_encoding(enc: &TextEncoding) -> Result<Tensor> {
    let (t, h) = enc.hidden.dims2()?;
    let mask = Tensor::from_vec(
        enc.mask.iter().map(|&m| if m { 1f32 } else { 0.0 }).collect::<Vec<_>>(),
        (1, 1, t),
        &Device::Cpu,
    )?
    .to_dtype(enc.hidden.dtype())?;
    if t == 0 {
        return Ok(Tensor::zeros(h, enc.hidden.dtype(), &Device::Cpu)?);
    }
    Ok(masked_mean(&enc.hidden.t()?.unsqueeze(0)?, &mask)?.squeeze(0)?)
}
