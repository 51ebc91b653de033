use std::f64::consts::PI;

use crate::audio::{Waveform, SAMPLES_PER_FRAME, SAMPLE_RATE};
use crate::textfront::inventory::{BOUNDARY, SILENCE};
use crate::textfront::PhonemeSequence;

/// Samples rendered per phoneme (five 256-sample hops).
pub const PHONEME_SAMPLES: usize = 1280;
const RAMP: usize = 160;
const MAX_HARMONIC_HZ: f64 = 5000.0;

/// 64-bit FNV-1a, used to derive stable per-symbol parameters.
pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Fundamental frequency of a speaker, in 90..240 Hz.
///
/// Consecutive seeds land far apart on the golden-ratio sequence.
pub fn speaker_pitch(speaker_seed: u64) -> f64 {
    let golden = 0.618_033_988_749_894_9;
    90.0 + 150.0 * (speaker_seed as f64 * golden).fract()
}

/// First two formant frequencies and loudness of a phoneme symbol.
pub fn phoneme_formants(symbol: &str) -> (f64, f64, f64) {
    let h = fnv1a(symbol.as_bytes());
    let f1 = 250.0 + (h % 650) as f64;
    let f2 = 900.0 + ((h >> 16) % 1700) as f64;
    let gain = 0.25 + ((h >> 32) % 1000) as f64 / 1000.0 * 0.4;
    (f1, f2, gain)
}

fn is_pause(symbol: &str) -> bool {
    symbol == BOUNDARY || symbol == SILENCE
}

/// Renders phonemes as fixed-length harmonic tones.
///
/// The speaker seed sets the pitch, the phoneme sets the formant envelope
/// and loudness, and pauses render silence. The result is zero-padded to a
/// whole number of video frames.
pub fn render_voice(phonemes: &PhonemeSequence, speaker_seed: u64) -> Waveform {
    if phonemes.is_empty() {
        return Waveform::silence(0, SAMPLE_RATE);
    }
    let f0 = speaker_pitch(speaker_seed);
    let sr = SAMPLE_RATE as f64;
    let n = phonemes.len() * PHONEME_SAMPLES;
    let mut out = Vec::with_capacity(n.div_ceil(SAMPLES_PER_FRAME) * SAMPLES_PER_FRAME);
    for sym in &phonemes.symbols {
        if is_pause(sym) {
            out.extend(std::iter::repeat(0.0).take(PHONEME_SAMPLES));
            continue;
        }
        let (f1, f2, gain) = phoneme_formants(sym);
        let harmonics: Vec<(f64, f64)> = (1..)
            .map(|k| k as f64 * f0)
            .take_while(|&f| f < MAX_HARMONIC_HZ)
            .map(|f| {
                let a = (-((f - f1) / 150.0).powi(2)).exp() + 0.6 * (-((f - f2) / 200.0).powi(2)).exp() + 0.05;
                (f, a)
            })
            .collect();
        let norm: f64 = harmonics.iter().map(|(_, a)| a).sum();
        for i in 0..PHONEME_SAMPLES {
            let t = i as f64 / sr;
            let env = (i.min(PHONEME_SAMPLES - 1 - i) as f64 / RAMP as f64).min(1.0);
            let s: f64 = harmonics.iter().map(|(f, a)| a * (2.0 * PI * f * t).sin()).sum();
            out.push((gain * env * s / norm) as f32);
        }
    }
    out.resize(n.div_ceil(SAMPLES_PER_FRAME) * SAMPLES_PER_FRAME, 0.0);
    Waveform {
        samples: out,
        sample_rate: SAMPLE_RATE,
    }
}
