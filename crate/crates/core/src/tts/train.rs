use candle_core::{DType, Device, Tensor};
use candle_nn::optim::{AdamW, Optimizer, ParamsAdamW};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::align::monotonic_align_path;
use super::model::{masked_mean, speaker_mean_penalty, TtsModel};
use super::schedule::lambda_schedule;
use crate::audio::{MelSpectrogram, Waveform};
use crate::error::{Error, Result};
use crate::nn::{cross_entropy, scalar};
use crate::textfront::PhonemeSequence;

/// One paired utterance: phoneme ids, its audio and its mel spectrogram.
#[derive(Debug, Clone)]
pub struct TtsExample {
    pub seq: PhonemeSequence,
    pub speaker: usize,
    pub wave: Waveform,
    pub mel: MelSpectrogram,
}

/// Per-term losses of one step; `total` is the optimised objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub recon_mel: f64,
    pub kl: f64,
    pub duration: f64,
    pub adversarial_speaker: f64,
    pub speaker_mean_reg: f64,
    pub total: f64,
    /// Gradient-reversal scale used for this step.
    pub lambda: f64,
}

struct PaddedBatch {
    ids: Tensor,
    text_mask: Tensor,
    text_lens: Vec<usize>,
    mel: Tensor,
    mel_mask: Tensor,
    mel_lens: Vec<usize>,
    langs: Tensor,
    speakers: Tensor,
}

fn mask_tensor(lens: &[usize], max: usize) -> Result<Tensor> {
    let mut v = vec![0f32; lens.len() * max];
    for (b, &l) in lens.iter().enumerate() {
        v[b * max..b * max + l].iter_mut().for_each(|x| *x = 1.0);
    }
    Ok(Tensor::from_vec(v, (lens.len(), 1, max), &Device::Cpu)?)
}

fn pad_batch(model: &TtsModel, batch: &[TtsExample]) -> Result<PaddedBatch> {
    let b = batch.len();
    let m = model.cfg.mel_bins;
    let text_lens: Vec<usize> = batch.iter().map(|e| e.seq.len()).collect();
    let mel_lens: Vec<usize> = batch.iter().map(|e| e.mel.n_frames).collect();
    let tt = text_lens.iter().copied().max().unwrap_or(0);
    let tm = mel_lens.iter().copied().max().unwrap_or(0);
    let mut ids = vec![0u32; b * tt];
    let mut mel = vec![0f32; b * m * tm];
    for (i, e) in batch.iter().enumerate() {
        if e.mel.mel_bins != m {
            return Err(Error::ShapeMismatch(format!("mel has {} bins, model expects {m}", e.mel.mel_bins)));
        }
        if e.speaker >= model.speakers.len() {
            return Err(Error::UnknownSpeaker(format!("index {}", e.speaker)));
        }
        let g = model.symbols.global_ids(&e.seq)?;
        ids[i * tt..i * tt + g.len()].copy_from_slice(&g);
        for t in 0..e.mel.n_frames {
            for (k, &v) in e.mel.frame(t).iter().enumerate() {
                mel[(i * m + k) * tm + t] = v;
            }
        }
    }
    Ok(PaddedBatch {
        ids: Tensor::from_vec(ids, (b, tt), &Device::Cpu)?,
        text_mask: mask_tensor(&text_lens, tt)?,
        mel: Tensor::from_vec(mel, (b, m, tm), &Device::Cpu)?,
        mel_mask: mask_tensor(&mel_lens, tm)?,
        langs: Tensor::from_vec(
            batch.iter().map(|e| e.seq.language.index() as u32).collect::<Vec<_>>(),
            b,
            &Device::Cpu,
        )?,
        speakers: Tensor::from_vec(batch.iter().map(|e| e.speaker as u32).collect::<Vec<_>>(), b, &Device::Cpu)?,
        text_lens,
        mel_lens,
    })
}

/// Log-likelihood of every latent frame under every phoneme's prior, `(B, T_text, T_mel)`.
fn prior_log_likelihood(z_p: &Tensor, m_p: &Tensor, logs_p: &Tensor) -> Result<Tensor> {
    let s = (logs_p * -2.0)?.exp()?;
    let c1 = ((logs_p * -1.0)? - 0.5 * (2.0 * std::f64::consts::PI).ln())?
        .sum_keepdim(1)?
        .transpose(1, 2)?;
    let st = s.transpose(1, 2)?.contiguous()?;
    let c2 = st.matmul(&(z_p.sqr()? * -0.5)?)?;
    let c3 = (m_p * &s)?.transpose(1, 2)?.contiguous()?.matmul(z_p)?;
    let c4 = ((m_p.sqr()? * &s)? * -0.5)?.sum_keepdim(1)?.transpose(1, 2)?;
    Ok(c2.broadcast_add(&c1)?.add(&c3)?.broadcast_add(&c4)?)
}

/// Hard alignment tensor `(B, T_text, T_mel)` and per-phoneme durations.
fn align_batch(ll: &Tensor, text_lens: &[usize], mel_lens: &[usize]) -> Result<(Tensor, Vec<Vec<usize>>)> {
    let (b, tt, tm) = ll.dims3()?;
    let ll: Vec<f32> = ll.to_dtype(DType::F32)?.flatten_all()?.to_vec1()?;
    let mut attn = vec![0f32; b * tt * tm];
    let mut durations = Vec::with_capacity(b);
    for i in 0..b {
        let (nt, nm) = (text_lens[i], mel_lens[i]);
        let mut cell = Vec::with_capacity(nt * nm);
        for x in 0..nt {
            let row = &ll[(i * tt + x) * tm..(i * tt + x) * tm + nm];
            cell.extend(row.iter().map(|&v| v as f64));
        }
        let path = monotonic_align_path(&cell, nt, nm)?;
        let mut d = vec![0; nt];
        for (y, &x) in path.iter().enumerate() {
            attn[(i * tt + x) * tm + y] = 1.0;
            d[x] += 1;
        }
        durations.push(d);
    }
    Ok((Tensor::from_vec(attn, (b, tt, tm), &Device::Cpu)?, durations))
}

/// Sum over channels and valid frames, divided by the number of valid frames.
fn masked_sum_mean(x: &Tensor, mask: &Tensor) -> Result<Tensor> {
    let num = x.broadcast_mul(mask)?.sum_all()?;
    let den = mask.sum_all()?.maximum(1.0)?;
    Ok((num / den)?)
}

fn standard_normal(rng: &mut ChaCha8Rng, shape: (usize, usize, usize)) -> Result<Tensor> {
    let n = shape.0 * shape.1 * shape.2;
    let v: Vec<f32> = (0..n).map(|_| rng.sample::<f32, _>(StandardNormal)).collect();
    Ok(Tensor::from_vec(v, shape, &Device::Cpu)?)
}

fn check_finite(term: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteLoss { term, value })
    }
}

/// Optimiser state and progress for one model.
pub struct TtsTrainer {
    model: TtsModel,
    opt: AdamW,
    rng: ChaCha8Rng,
    step: usize,
    total_steps: usize,
}

impl TtsTrainer {
    /// `total_steps` sets the progress denominator of the adversarial-weight ramp.
    pub fn new(model: TtsModel, total_steps: usize) -> Result<Self> {
        let opt = AdamW::new(
            model.params.vars(),
            ParamsAdamW {
                lr: model.cfg.learning_rate,
                beta1: 0.8,
                beta2: 0.99,
                eps: 1e-9,
                weight_decay: 0.0,
            },
        )?;
        let rng = ChaCha8Rng::seed_from_u64(model.cfg.seed ^ 0x7457_7261_696e);
        Ok(TtsTrainer {
            model,
            opt,
            rng,
            step: 0,
            total_steps: total_steps.max(1),
        })
    }

    pub fn model(&self) -> &TtsModel {
        &self.model
    }

    pub fn into_model(self) -> TtsModel {
        self.model
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Computes all loss terms, checks them, and applies one optimiser update.
    pub fn training_step(&mut self, batch: &[TtsExample]) -> Result<LossBreakdown> {
        let progress = (self.step as f64 / self.total_steps as f64).min(1.0);
        let lambda = lambda_schedule(progress, self.model.cfg.lambda_gamma);
        let (losses, total) = self.losses(batch, lambda)?;
        self.opt.backward_step(&total)?;
        self.step += 1;
        Ok(losses)
    }

    /// Loss terms without updating parameters.
    pub fn evaluate(&mut self, batch: &[TtsExample], lambda: f64) -> Result<LossBreakdown> {
        Ok(self.losses(batch, lambda)?.0)
    }

    fn losses(&mut self, batch: &[TtsExample], lambda: f64) -> Result<(LossBreakdown, Tensor)> {
        if batch.is_empty() {
            return Err(Error::ShapeMismatch("empty training batch".into()));
        }
        let m = &self.model;
        let cfg = &m.cfg;
        let pb = pad_batch(m, batch)?;
        let (b, _, tm) = pb.mel.dims3()?;
        let lang = m.languages.forward(&pb.langs.unsqueeze(1)?)?.squeeze(1)?;
        let spk = m.speaker_table.forward(&pb.speakers.unsqueeze(1)?)?.squeeze(1)?;

        let enc = m.encoder.forward(&pb.ids, &pb.text_mask, &lang)?;
        let noise = standard_normal(&mut self.rng, (b, cfg.latent_dim, tm))?;
        let post = m.posterior.forward(&pb.mel, &pb.mel_mask, &spk, Some(&noise))?;
        let z_p = m.flow.forward(&post.z, &pb.mel_mask, &spk)?;

        let ll = prior_log_likelihood(&z_p.detach(), &enc.m_p.detach(), &enc.logs_p.detach())?;
        let (attn, durations) = align_batch(&ll, &pb.text_lens, &pb.mel_lens)?;
        let m_p = enc.m_p.matmul(&attn)?;
        let logs_p = enc.logs_p.matmul(&attn)?;

        let kl_cells = ((&logs_p - &post.logs_q)? - 0.5)?
            .add(&(((&z_p - &m_p)?.sqr()? * (&logs_p * -2.0)?.exp()?)? * 0.5)?)?;
        let kl = masked_sum_mean(&kl_cells, &pb.mel_mask)?;

        let logw = m.duration.forward(&enc.hidden.detach(), &pb.text_mask, &lang, &spk)?;
        let tt = pb.text_mask.dim(2)?;
        let mut target = vec![0f32; b * tt];
        for (i, d) in durations.iter().enumerate() {
            for (x, &n) in d.iter().enumerate() {
                target[i * tt + x] = (n as f32 + 1e-6).ln();
            }
        }
        let target = Tensor::from_vec(target, (b, 1, tt), &Device::Cpu)?;
        let duration = masked_sum_mean(&(logw - target)?.sqr()?, &pb.text_mask)?;

        let seg = cfg.segment_frames.min(pb.mel_lens.iter().copied().min().unwrap_or(0));
        let recon = if seg == 0 {
            Tensor::new(0f32, &Device::Cpu)?
        } else {
            let hop = cfg.hop_length;
            let mut z_slices = Vec::with_capacity(b);
            let mut wave = vec![0f32; b * seg * hop];
            for (i, e) in batch.iter().enumerate() {
                let start = self.rng.gen_range(0..=pb.mel_lens[i] - seg);
                z_slices.push(post.z.get(i)?.narrow(1, start, seg)?);
                let src = &e.wave.samples;
                for (j, w) in wave[i * seg * hop..(i + 1) * seg * hop].iter_mut().enumerate() {
                    *w = src.get(start * hop + j).copied().unwrap_or(0.0);
                }
            }
            let gen = m.decoder.forward(&Tensor::stack(&z_slices, 0)?, &spk)?;
            let target = Tensor::from_vec(wave, (b, seg * hop), &Device::Cpu)?;
            let mel_gen = m.mel.forward(&gen)?;
            let mel_tgt = m.mel.forward(&target)?.detach();
            (mel_gen - mel_tgt)?.abs()?.mean_all()?
        };

        let pooled = masked_mean(&enc.hidden, &pb.text_mask)?;
        let logits = m.classifier.forward(&pooled, lambda)?;
        let adversarial = cross_entropy(&logits, &pb.speakers)?;
        let reg = speaker_mean_penalty(m.speaker_table.table())?;

        let total = ((&recon * cfg.mel_weight)? + (&kl * cfg.kl_weight)?)?
            .add(&(&duration * cfg.duration_weight)?)?
            .add(&(&adversarial * cfg.adv_weight)?)?
            .add(&(&reg * cfg.reg_weight)?)?;

        let losses = LossBreakdown {
            recon_mel: check_finite("recon_mel", scalar(&recon)?)?,
            kl: check_finite("kl", scalar(&kl)?)?,
            duration: check_finite("duration", scalar(&duration)?)?,
            adversarial_speaker: check_finite("adversarial_speaker", scalar(&adversarial)?)?,
            speaker_mean_reg: check_finite("speaker_mean_reg", scalar(&reg)?)?,
            total: check_finite("total", scalar(&total)?)?,
            lambda,
        };
        Ok((losses, total))
    }

    /// Mel L1 of the whole utterance decoded from the posterior mean.
    pub fn reconstruction_error(&self, example: &TtsExample) -> Result<f64> {
        let m = &self.model;
        let t = example.mel.n_frames;
        let mel = example.mel.to_tensor()?.unsqueeze(0)?;
        let mask = Tensor::ones((1, 1, t), DType::F32, &Device::Cpu)?;
        let spk = m.speaker_table.row(example.speaker)?.unsqueeze(0)?;
        let post = m.posterior.forward(&mel, &mask, &spk, None)?;
        let gen = m.decoder.forward(&post.z, &spk)?;
        let n = gen.dim(1)?;
        let mut wave = example.wave.samples.clone();
        wave.resize(n, 0.0);
        let target = Tensor::from_vec(wave, (1, n), &Device::Cpu)?;
        let diff = (m.mel.forward(&gen)? - m.mel.forward(&target)?)?.abs()?;
        scalar(&diff.mean_all()?)
    }

    /// Norm of the speaker-embedding centroid.
    pub fn speaker_centroid_norm(&self) -> Result<f64> {
        Ok(scalar(&speaker_mean_penalty(self.model.speaker_table.table())?)?.sqrt())
    }
}

/// Masked-mean text encodings `(hidden_dim,)` for each sequence, without gradients.
pub fn pooled_encodings(model: &TtsModel, seqs: &[PhonemeSequence]) -> Result<Vec<Vec<f32>>> {
    seqs.iter()
        .map(|s| {
            let enc = model.encode_text(s)?;
            Ok(super::model::pooled_encoding(&enc)?.to_vec1::<f32>()?)
        })
        .collect()
}
