//! Signal cleaning: clipping, amplitude detection, wavelet denoising and
//! moving-average smoothing.

use crate::error::{invalid, Result};
use crate::exec::Exec;
use crate::trace::Trace;
use crate::wavelet::{dwt_forward, dwt_inverse, max_levels, sure_threshold_with};

pub const DEFAULT_LEVELS: usize = 13;
pub const DEFAULT_SMOOTH_LEN: usize = 1001;

/// Samples of `trace` in `[start, end)` seconds.
pub fn clip(trace: &Trace, start: f64, end: f64) -> Result<Trace> {
    let duration = trace.duration();
    if !(start >= 0.0 && start < end && end <= duration + 1e-12) {
        return Err(invalid!(
            "clip range [{start}, {end}) must satisfy 0 <= start < end <= {duration}"
        ));
    }
    let rate = trace.sample_rate();
    let first = (start * rate).round() as usize;
    let last = ((end * rate).round() as usize).min(trace.len());
    if first >= last {
        return Err(invalid!("clip range [{start}, {end}) contains no samples"));
    }
    Ok(trace.map_samples(trace.samples()[first..last].to_vec()))
}

/// Full-wave rectification `|x|`.
///
/// The raw trace oscillates at the carrier frequency, so averaging it directly
/// cancels the carrier. Rectifying first turns the moving average into an
/// envelope detector.
pub fn amplitude(trace: &Trace) -> Trace {
    trace.map_samples(trace.samples().iter().map(|x| x.abs()).collect())
}

/// Centered moving average. Windows shrink near the edges so every output
/// sample averages only real input samples.
pub fn smooth_moving_average(trace: &Trace, window_len: usize) -> Result<Trace> {
    if window_len == 0 || window_len > trace.len() {
        return Err(invalid!(
            "window length {window_len} must be in [1, {}]",
            trace.len()
        ));
    }
    Ok(trace.map_samples(moving_average(trace.samples(), window_len)))
}

fn moving_average(x: &[f64], window_len: usize) -> Vec<f64> {
    let n = x.len();
    if window_len == 1 {
        return x.to_vec();
    }
    let left = (window_len - 1) / 2;
    let right = window_len - 1 - left;
    // Prefix sums relative to the first sample keep the magnitudes small for
    // traces with a large DC level.
    let offset = x[0];
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    let mut comp = 0.0;
    for &v in x {
        // Neumaier summation
        let y = v - offset;
        let t = acc + y;
        if acc.abs() >= y.abs() {
            comp += (acc - t) + y;
        } else {
            comp += (y - t) + acc;
        }
        acc = t;
        prefix.push(acc + comp);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(left);
            let hi = (i + right + 1).min(n);
            offset + (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// DWT, per-level SURE soft thresholding, inverse DWT, then smoothing.
pub fn denoise(trace: &Trace, levels: usize, smooth_len: usize) -> Result<Trace> {
    denoise_with(trace, levels, smooth_len, Exec::default())
}

pub fn denoise_with(trace: &Trace, levels: usize, smooth_len: usize, exec: Exec) -> Result<Trace> {
    let decomp = dwt_forward(trace.samples(), levels)?;
    let cleaned = dwt_inverse(&sure_threshold_with(&decomp, exec))?;
    smooth_moving_average(&trace.map_samples(cleaned), smooth_len)
}

/// Settings for the full cleaning chain applied before featurization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreprocessConfig {
    pub levels: usize,
    pub smooth_len: usize,
    /// Rectify before denoising.
    pub detect_amplitude: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            levels: DEFAULT_LEVELS,
            smooth_len: DEFAULT_SMOOTH_LEN,
            detect_amplitude: true,
        }
    }
}

impl PreprocessConfig {
    /// Requested depth, reduced (with a warning) to what `len` samples allow.
    pub fn effective_levels(&self, len: usize) -> Result<usize> {
        let max = max_levels(len);
        if max == 0 {
            return Err(invalid!("a trace of {len} samples is too short to decompose"));
        }
        if self.levels > max {
            log::warn!(
                "{len} samples support only {max} wavelet levels; using {max} instead of {}",
                self.levels
            );
            return Ok(max);
        }
        Ok(self.levels)
    }
}

/// Amplitude detection (optional) followed by [`denoise`], with the depth
/// capped at the feasible maximum and the smoothing window capped at the
/// trace length.
pub fn preprocess(trace: &Trace, cfg: &PreprocessConfig, exec: Exec) -> Result<Trace> {
    let levels = cfg.effective_levels(trace.len())?;
    let smooth = cfg.smooth_len.min(trace.len());
    if cfg.detect_amplitude {
        denoise_with(&amplitude(trace), levels, smooth, exec)
    } else {
        denoise_with(trace, levels, smooth, exec)
    }
}

/// Counts dips in an amplitude trace.
///
/// The trace is cut into bins of `bin_seconds`; a dip is a maximal run of bins
/// whose RMS falls below `fraction` of the median bin RMS.
pub fn count_dips(trace: &Trace, bin_seconds: f64, fraction: f64) -> Result<usize> {
    let bin = (bin_seconds * trace.sample_rate()).round() as usize;
    if bin == 0 || bin > trace.len() {
        return Err(invalid!("bin of {bin_seconds} s does not fit the trace"));
    }
    let rms: Vec<f64> = trace
        .samples()
        .chunks_exact(bin)
        .map(|c| crate::trace::mean_square(c).sqrt())
        .collect();
    let mut sorted = rms.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let baseline = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };
    let limit = fraction * baseline;
    let mut dips = 0;
    let mut inside = false;
    for r in rms {
        let below = r < limit;
        if below && !inside {
            dips += 1;
        }
        inside = below;
    }
    Ok(dips)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply_awgn, gesture_envelope, GestureEnvelopeSpec};
    use crate::trace::GestureLabel;
    use crate::units::SnrDb;
    use proptest::prelude::*;

    fn tr(xs: Vec<f64>) -> Trace {
        Trace::new(xs, 1e6).unwrap()
    }

    fn rms_diff(a: &[f64], b: &[f64]) -> f64 {
        let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        (s / a.len() as f64).sqrt()
    }

    #[test]
    fn clip_examples() {
        let t = tr((0..1_000_000).map(|i| i as f64).collect());
        assert_eq!(clip(&t, 0.0, 1.0).unwrap(), t);
        let c = clip(&t, 0.2, 0.7).unwrap();
        assert_eq!(c.len(), 500_000);
        assert_eq!(c.samples()[0], 200_000.0);
        assert!(clip(&t, 0.5, 0.5).is_err());
        assert!(clip(&t, 0.7, 0.2).is_err());
        assert!(clip(&t, 0.0, 1.5).is_err());
        assert!(clip(&t, -0.1, 0.5).is_err());
    }

    #[test]
    fn clip_keeps_meta() {
        let mut t = tr(vec![1.0; 1000]);
        t.meta.gesture = Some(GestureLabel::Clapping);
        assert_eq!(clip(&t, 0.0, 0.0005).unwrap().meta, t.meta);
    }

    #[test]
    fn moving_average_examples() {
        let t = tr(vec![0.0, 0.0, 3.0, 0.0, 0.0]);
        assert_eq!(smooth_moving_average(&t, 1).unwrap(), t);
        let s = smooth_moving_average(&t, 3).unwrap();
        for (a, b) in s.samples().iter().zip([0.0, 1.0, 1.0, 1.0, 0.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let c = smooth_moving_average(&tr(vec![2.5; 50]), 7).unwrap();
        assert!(c.samples().iter().all(|&x| (x - 2.5).abs() < 1e-15));
        assert!(smooth_moving_average(&t, 0).is_err());
        assert!(smooth_moving_average(&t, 6).is_err());
    }

    #[test]
    fn shrinking_edges() {
        // Even windows lean right: one sample before, two after.
        let s = moving_average(&[1.0, 2.0, 3.0, 4.0, 5.0], 4);
        assert_eq!(s, vec![2.0, 2.5, 3.5, 4.0, 4.5]);
    }

    #[test]
    fn denoise_constant_trace() {
        let t = tr(vec![0.75; 1 << 14]);
        let d = denoise(&t, 13, 1001).unwrap();
        assert!(d.samples().iter().all(|x| (x - 0.75).abs() < 1e-9));
    }

    #[test]
    fn effective_levels_caps() {
        let cfg = PreprocessConfig::default();
        assert_eq!(cfg.effective_levels(1_000_000).unwrap(), 13);
        assert_eq!(cfg.effective_levels(100).unwrap(), 6);
        assert!(cfg.effective_levels(1).is_err());
    }

    fn clap_envelope(seed: u64) -> (Trace, usize) {
        let spec = GestureEnvelopeSpec::preset(GestureLabel::Clapping).with_seed(seed);
        let env = gesture_envelope(&spec, 1 << 20, 1e6).unwrap();
        let claps = (spec.event_rate * (1 << 20) as f64 / 1e6).round() as usize;
        (tr(env.iter().map(|e| e * std::f64::consts::FRAC_1_SQRT_2).collect()), claps)
    }

    #[test]
    fn denoised_clap_envelope_counts_claps() {
        for seed in 0..5 {
            let (clean, claps) = clap_envelope(seed);
            let noisy = apply_awgn(&clean, SnrDb::new(59.0).unwrap(), seed + 100).unwrap();
            let d = denoise(&noisy, 13, 1001).unwrap();
            assert_eq!(count_dips(&d, 0.05, 0.5).unwrap(), claps, "seed {seed}");
        }
    }

    #[test]
    fn denoise_reduces_error() {
        // Smooth envelopes: rectangular clap edges are blurred by the
        // smoother by more than the noise amplitude at high SNR.
        let gestures = [GestureLabel::HandsUp, GestureLabel::NeutralDriving, GestureLabel::AngryConversation];
        let mut improvement = 0.0;
        for seed in 0..20u64 {
            let spec = GestureEnvelopeSpec::preset(gestures[seed as usize % 3]).with_seed(seed);
            let env = gesture_envelope(&spec, 1 << 20, 1e6).unwrap();
            let clean = tr(env.iter().map(|e| e * std::f64::consts::FRAC_1_SQRT_2).collect());
            let snr = [42.0, 22.0, 12.0, 2.0, 0.0][seed as usize % 5];
            let noisy = apply_awgn(&clean, SnrDb::new(snr).unwrap(), seed).unwrap();
            let before = rms_diff(noisy.samples(), clean.samples());
            let d = denoise(&noisy, 13, 1001).unwrap();
            let after = rms_diff(d.samples(), clean.samples());
            assert!(after < before, "seed {seed} at {snr} dB: {after} >= {before}");
            improvement += before - after;
        }
        assert!(improvement > 0.0);
    }

    #[test]
    fn count_dips_on_square_pattern() {
        let mut x = vec![1.0; 1_000_000];
        for start in [100_000, 400_000, 800_000] {
            x[start..start + 100_000].iter_mut().for_each(|v| *v = 0.1);
        }
        assert_eq!(count_dips(&tr(x), 0.05, 0.5).unwrap(), 3);
        assert_eq!(count_dips(&tr(vec![1.0; 1000]), 0.0001, 0.5).unwrap(), 0);
    }

    #[test]
    fn preprocess_detects_envelope() {
        let carrier = crate::channel::synth_carrier(131_072e-6, 1e6, 1e5).unwrap();
        let p = preprocess(&carrier, &PreprocessConfig::default(), Exec::Sequential).unwrap();
        // sampled mean of |sin| over whole periods
        let period: Vec<f64> = carrier.samples()[..10].iter().map(|x| x.abs()).collect();
        let expected = period.iter().sum::<f64>() / 10.0;
        let mid = &p.samples()[10_000..120_000];
        let m = mid.iter().sum::<f64>() / mid.len() as f64;
        assert!((m - expected).abs() < 1e-3, "{m} vs {expected}");
    }

    proptest! {
        #[test]
        fn interior_mean_preserved(xs in proptest::collection::vec(-5f64..5.0, 50..400), w in 1usize..20) {
            // Constants are fixed points; otherwise only the edges can move
            // the total.
            let n = xs.len();
            let c = xs[0];
            let flat = vec![c; n];
            let s = moving_average(&flat, w.min(n));
            for v in s {
                prop_assert!((v - c).abs() <= 1e-12 * c.abs().max(1.0));
            }
            let out = moving_average(&xs, w.min(n));
            prop_assert_eq!(out.len(), n);
            let total_in: f64 = xs.iter().sum();
            let total_out: f64 = out.iter().sum();
            let bound = xs.iter().fold(0.0f64, |m, x| m.max(x.abs())) * w as f64;
            prop_assert!((total_in - total_out).abs() <= bound);
        }

        #[test]
        fn periodic_mean_preserved(period in proptest::collection::vec(-5f64..5.0, 3..12), reps in 20usize..60) {
            // A centred window of one full period averages to the period mean
            // everywhere away from the edges.
            let p = period.len();
            let w = if p % 2 == 1 { p } else { p - 1 };
            prop_assume!(w == p);
            let xs: Vec<f64> = period.iter().cycle().take(p * reps).copied().collect();
            let mean = period.iter().sum::<f64>() / p as f64;
            let out = moving_average(&xs, w);
            for v in &out[p..out.len() - p] {
                prop_assert!((v - mean).abs() <= 1e-9 * mean.abs().max(1.0));
            }
        }
    }
}
