//! Signal-to-noise mixing of audio tracks.

use alloc::format;
use alloc::vec::Vec;

use crate::encoder::AudioWave;
use crate::error::{Error, Result};

/// Mean-square power of a signal.
pub fn mean_power(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|&x| x * x).sum::<f64>() / samples.len() as f64
}

/// Cyclically tiles (or truncates) `noise` to exactly `len` samples.
pub fn tile_to_length(noise: &AudioWave, len: usize) -> Result<AudioWave> {
    if noise.samples.is_empty() {
        return Err(Error::Degenerate("cannot tile an empty noise track".into()));
    }
    let samples: Vec<f64> = noise.samples.iter().cycle().take(len).copied().collect();
    Ok(AudioWave { samples, sample_rate: noise.sample_rate })
}

/// Mixes `noise` into `signal` at the requested signal-to-noise ratio:
/// `mixed = signal + g·noise` with `g = √(P_s / (P_n · 10^{snr/10}))`,
/// powers taken as mean squares. The noise is tiled or truncated to the
/// signal's length first.
pub fn mix_at_snr(signal: &AudioWave, noise: &AudioWave, snr_db: f64) -> Result<AudioWave> {
    if noise.sample_rate != signal.sample_rate {
        return Err(Error::shape(format!(
            "sample rates differ: signal {} Hz, noise {} Hz",
            signal.sample_rate, noise.sample_rate
        )));
    }
    if !snr_db.is_finite() {
        return Err(Error::config(format!("signal-to-noise ratio must be finite, got {snr_db}")));
    }
    let noise = tile_to_length(noise, signal.samples.len())?;
    let p_s = mean_power(&signal.samples);
    let p_n = mean_power(&noise.samples);
    if p_s <= 0.0 {
        return Err(Error::Degenerate("signal has zero power".into()));
    }
    if p_n <= 0.0 {
        return Err(Error::Degenerate("noise has zero power".into()));
    }
    let g = libm::sqrt(p_s / (p_n * libm::pow(10.0, snr_db / 10.0)));
    let samples = signal
        .samples
        .iter()
        .zip(&noise.samples)
        .map(|(&s, &n)| s + g * n)
        .collect();
    Ok(AudioWave { samples, sample_rate: signal.sample_rate })
}

/// Achieved ratio `10·log10(P_signal / P_scaled_noise)` between a clean
/// signal and the noise actually added (`mixed − signal`). Test oracle.
pub fn measured_snr_db(signal: &AudioWave, mixed: &AudioWave) -> Result<f64> {
    if signal.samples.len() != mixed.samples.len() {
        return Err(Error::shape("mixed track must be as long as the signal"));
    }
    let added: Vec<f64> = mixed
        .samples
        .iter()
        .zip(&signal.samples)
        .map(|(&m, &s)| m - s)
        .collect();
    let p_s = mean_power(&signal.samples);
    let p_n = mean_power(&added);
    if p_s <= 0.0 || p_n <= 0.0 {
        return Err(Error::Degenerate("zero-power track in ratio measurement".into()));
    }
    Ok(10.0 * libm::log10(p_s / p_n))
}
