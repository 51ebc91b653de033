use std::path::Path;

use candle_core::{DType, Device, Tensor};

use super::audio::AudioEncoder;
use super::config::FacegenConfig;
use super::disc::MultiScaleDisc;
use crate::audio::MelSpectrogram;
use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::facecrop::FaceFrame;
use crate::nn::{Conv2d, ConvTranspose2d, Params};

pub const FACEGEN_CHECKPOINT_KIND: &str = "facegen";

/// Inputs for one generated frame.
#[derive(Debug, Clone, PartialEq)]
pub struct GenInput {
    /// Pose source; its lower half is masked before use.
    pub reference: FaceFrame,
    /// Unmasked frame from another part of the clip.
    pub identity: FaceFrame,
    /// This frame's row of [`FacegenModel::audio_encode`].
    pub audio_feat: Vec<f32>,
}

/// U-Net over the masked reference and identity frames with the audio
/// feature concatenated at the bottleneck.
struct Generator {
    down: Vec<Conv2d>,
    up: Vec<(ConvTranspose2d, Conv2d)>,
    out: Conv2d,
}

impl Generator {
    fn new(p: &Params, cfg: &FacegenConfig) -> Result<Self> {
        let c = cfg.channels;
        let widths = [c, 2 * c, 4 * c, 4 * c, 8 * c];
        let mut down = vec![Conv2d::new(&p.pp("down0"), 6, widths[0], 3, 1, 1)?];
        for i in 1..widths.len() {
            down.push(Conv2d::new(&p.pp(format!("down{i}")), widths[i - 1], widths[i], 3, 2, 1)?);
        }
        let mut up = Vec::new();
        let mut c_in = widths[4] + cfg.audio_dim;
        for i in (0..4).rev() {
            let up_t = ConvTranspose2d::new(&p.pp(format!("up{i}.t")), c_in, widths[i], 4, 2, 1)?;
            let fuse = Conv2d::new(&p.pp(format!("up{i}.fuse")), 2 * widths[i], widths[i], 3, 1, 1)?;
            up.push((up_t, fuse));
            c_in = widths[i];
        }
        Ok(Generator { down, up, out: Conv2d::new(&p.pp("out"), c, 3, 3, 1, 1)? })
    }

    fn forward(&self, x: &Tensor, audio: &Tensor) -> Result<Tensor> {
        let mut skips = Vec::with_capacity(self.down.len());
        let mut h = x.clone();
        for d in &self.down {
            h = d.forward(&h)?.relu()?;
            skips.push(h.clone());
        }
        let (n, _, bh, bw) = h.dims4()?;
        let a = audio.reshape((n, (), 1, 1))?.repeat((1, 1, bh, bw))?;
        h = Tensor::cat(&[&h, &a], 1)?;
        for (i, (up_t, fuse)) in self.up.iter().enumerate() {
            let skip = &skips[skips.len() - 2 - i];
            h = up_t.forward(&h)?.relu()?;
            h = fuse.forward(&Tensor::cat(&[&h, skip], 1)?)?.relu()?;
        }
        Ok(candle_nn::ops::sigmoid(&self.out.forward(&h)?)?)
    }
}

/// Audio encoder, frame generator and multi-scale discriminator sharing one
/// parameter store (`audio.*`, `generator.*`, `disc.*`).
pub struct FacegenModel {
    cfg: FacegenConfig,
    params: Params,
    audio: AudioEncoder,
    generator: Generator,
    disc: MultiScaleDisc,
    lower_mask: Tensor,
}

impl FacegenModel {
    pub fn new(cfg: FacegenConfig) -> Result<Self> {
        cfg.validate()?;
        let dtype = cfg.dtype();
        let p = Params::new(cfg.seed, dtype);
        let s = cfg.face_size;
        let mask: Vec<f32> = (0..s).flat_map(|y| std::iter::repeat(if y < s / 2 { 1.0 } else { 0.0 }).take(s)).collect();
        Ok(FacegenModel {
            audio: AudioEncoder::new(&p.pp("audio"), &cfg)?,
            generator: Generator::new(&p.pp("generator"), &cfg)?,
            disc: MultiScaleDisc::new(&p.pp("disc"), cfg.disc_scales, cfg.disc_channels)?,
            lower_mask: Tensor::from_vec(mask, (1, 1, s, s), &Device::Cpu)?.to_dtype(dtype)?,
            params: p,
            cfg,
        })
    }

    pub fn config(&self) -> &FacegenConfig {
        &self.cfg
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn dtype(&self) -> DType {
        self.cfg.dtype()
    }

    /// Parameters updated by the generator optimiser.
    pub fn generator_params(&self) -> Vec<candle_core::Var> {
        let mut v = self.params.pp("audio").vars();
        v.extend(self.params.pp("generator").vars());
        v
    }

    pub fn disc_params(&self) -> Vec<candle_core::Var> {
        self.params.pp("disc").vars()
    }

    pub fn disc(&self) -> &MultiScaleDisc {
        &self.disc
    }

    /// One feature row per video frame covered by `mel`.
    pub fn audio_encode(&self, mel: &MelSpectrogram) -> Result<Tensor> {
        self.audio_encode_frames(mel, mel.video_frames())
    }

    /// Features for the first `n_frames` video frames.
    pub fn audio_encode_frames(&self, mel: &MelSpectrogram, n_frames: usize) -> Result<Tensor> {
        self.audio.forward(mel, n_frames, self.dtype())
    }

    /// Zeroes rows `S/2..S` of `(N, 3, S, S)` frames.
    pub fn mask_lower_half(&self, frames: &Tensor) -> Result<Tensor> {
        Ok(frames.broadcast_mul(&self.lower_mask)?)
    }

    /// `(N, 3, S, S)` frames in [0, 1] from references, identities and `(N, audio)` features.
    pub fn generate(&self, reference: &Tensor, identity: &Tensor, audio: &Tensor) -> Result<Tensor> {
        let s = self.cfg.face_size;
        for t in [reference, identity] {
            let (_, c, h, w) = t.dims4()?;
            if (c, h, w) != (3, s, s) {
                return Err(Error::ShapeMismatch(format!("face batch ({c}, {h}, {w}), expected (3, {s}, {s})")));
            }
        }
        let x = Tensor::cat(&[&self.mask_lower_half(reference)?, identity], 1)?;
        self.generator.forward(&x, audio)
    }

    pub fn generate_frames(&self, inputs: &[GenInput]) -> Result<Vec<FaceFrame>> {
        let dim = self.cfg.gru_hidden;
        let mut out = Vec::with_capacity(inputs.len());
        for chunk in inputs.chunks(16) {
            let mut feats = Vec::with_capacity(chunk.len() * dim);
            for g in chunk {
                if g.audio_feat.len() != dim {
                    return Err(Error::ShapeMismatch(format!("{} audio features, expected {dim}", g.audio_feat.len())));
                }
                feats.extend_from_slice(&g.audio_feat);
            }
            let stack = |f: &dyn Fn(&GenInput) -> &FaceFrame| -> Result<Tensor> {
                let ts = chunk.iter().map(|g| f(g).to_tensor()).collect::<Result<Vec<_>>>()?;
                Ok(Tensor::stack(&ts, 0)?.to_dtype(self.dtype())?)
            };
            let audio = Tensor::from_vec(feats, (chunk.len(), dim), &Device::Cpu)?.to_dtype(self.dtype())?;
            let frames = self.generate(&stack(&|g| &g.reference)?, &stack(&|g| &g.identity)?, &audio)?;
            for i in 0..chunk.len() {
                out.push(FaceFrame::from_tensor(&frames.get(i)?)?);
            }
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Checkpoint::new(FACEGEN_CHECKPOINT_KIND, &self.cfg, &self.params)?.save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck = Checkpoint::load(path)?;
        ck.expect_kind(FACEGEN_CHECKPOINT_KIND, path)?;
        let model = FacegenModel::new(ck.config()?)?;
        ck.restore(&model.params)?;
        Ok(model)
    }
}

/// Faces as an `(N, 3, S, S)` tensor.
pub fn faces_to_tensor(faces: &[&FaceFrame], dtype: DType) -> Result<Tensor> {
    let ts = faces.iter().map(|f| f.to_tensor()).collect::<Result<Vec<_>>>()?;
    Ok(Tensor::stack(&ts, 0)?.to_dtype(dtype)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{MelConfig, Waveform};

    fn tiny() -> FacegenModel {
        FacegenModel::new(FacegenConfig { channels: 4, audio_dim: 8, gru_hidden: 8, disc_channels: 4, ..Default::default() })
            .unwrap()
    }

    fn tone(n: usize, freq: f32) -> Waveform {
        Waveform::new((0..n).map(|i| 0.3 * (i as f32 * freq * 0.000_285).sin()).collect(), 22050).unwrap()
    }

    #[test]
    fn one_feature_per_video_frame() {
        let m = tiny();
        let mel = MelSpectrogram::compute(&tone(22050, 440.0), &MelConfig::default());
        assert_eq!(m.audio_encode(&mel).unwrap().dims(), &[25, 8]);
        let empty = MelSpectrogram { frames: vec![], n_frames: 0, ..mel };
        assert!(matches!(m.audio_encode(&empty), Err(Error::InsufficientAudio { .. })));
    }

    #[test]
    fn audio_features_are_causal() {
        let m = tiny();
        let mel = MelSpectrogram::compute(&tone(22050, 440.0), &MelConfig::default());
        let full = m.audio_encode(&mel).unwrap();
        let cut = mel.slice(0, mel.n_frames - 17);
        let part = m.audio_encode(&cut).unwrap();
        let n = part.dims()[0];
        assert!(n >= 19);
        let a = full.narrow(0, 0, n).unwrap().flatten_all().unwrap().to_vec1::<f32>().unwrap();
        assert_eq!(a, part.flatten_all().unwrap().to_vec1::<f32>().unwrap());
    }

    #[test]
    fn frames_keep_count_shape_and_range() {
        let m = tiny();
        let mel = MelSpectrogram::compute(&tone(882 * 3, 300.0), &MelConfig::default());
        let feats = m.audio_encode(&mel).unwrap().to_vec2::<f32>().unwrap();
        let inputs: Vec<GenInput> = feats
            .into_iter()
            .map(|f| GenInput {
                reference: FaceFrame::filled(64, [0.9, 0.1, 0.5]).lower_half_masked(),
                identity: FaceFrame::filled(64, [0.2, 0.7, 0.3]),
                audio_feat: f,
            })
            .collect();
        let out = m.generate_frames(&inputs).unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|f| f.size == 64 && f.pixels.iter().all(|v| (0.0..=1.0).contains(v))));
        assert_eq!(out, m.generate_frames(&inputs).unwrap());
    }
}
