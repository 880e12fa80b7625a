//! Orthonormal Haar DWT and SURE shrinkage.
//!
//! The signal is zero-padded to the next multiple of `2^levels`; the original
//! length is recorded so [`dwt_inverse`] returns exactly as many samples as
//! went in. Because the transform is orthonormal, the sum of squares of all
//! coefficients equals that of the input.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;

/// MAD-to-sigma factor for Gaussian noise.
pub const MAD_SCALE: f64 = 0.6745;

/// Output of a multi-level Haar analysis.
///
/// `details[0]` is the finest level (level 1), `details[levels-1]` the
/// coarsest. Lengths are `padded / 2^j` for level `j` and `padded / 2^levels`
/// for the approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletDecomposition {
    pub approximation: Vec<f64>,
    pub details: Vec<Vec<f64>>,
    pub levels: usize,
    pub original_length: usize,
}

impl WaveletDecomposition {
    pub fn padded_length(&self) -> usize {
        self.approximation.len() << self.levels
    }

    /// Sum of squares over every coefficient.
    pub fn energy(&self) -> f64 {
        let sq = |v: &Vec<f64>| v.iter().map(|x| x * x).sum::<f64>();
        sq(&self.approximation) + self.details.iter().map(sq).sum::<f64>()
    }

    fn check(&self) -> Result<()> {
        if self.levels == 0 || self.details.len() != self.levels {
            return Err(Error::CorruptDecomposition(format!(
                "levels={} but {} detail bands",
                self.levels,
                self.details.len()
            )));
        }
        let padded = self.padded_length();
        if self.approximation.is_empty() || padded < self.original_length {
            return Err(Error::CorruptDecomposition(format!(
                "approximation of {} coefficients cannot hold {} samples",
                self.approximation.len(),
                self.original_length
            )));
        }
        for (j, d) in self.details.iter().enumerate() {
            let expected = padded >> (j + 1);
            if d.len() != expected {
                return Err(Error::CorruptDecomposition(format!(
                    "level {} has {} coefficients, expected {expected}",
                    j + 1,
                    d.len()
                )));
            }
        }
        Ok(())
    }
}

/// Deepest decomposition a signal of `len` samples supports.
pub fn max_levels(len: usize) -> usize {
    if len < 2 {
        0
    } else {
        (usize::BITS - 1 - len.leading_zeros()) as usize
    }
}

/// Multi-level orthonormal Haar analysis.
///
/// Fails when `levels == 0` or the signal is shorter than `2^levels`.
pub fn dwt_forward(signal: &[f64], levels: usize) -> Result<WaveletDecomposition> {
    if levels == 0 {
        return Err(invalid!("at least one decomposition level is required"));
    }
    let max = max_levels(signal.len());
    if levels > max {
        return Err(invalid!(
            "{} samples support at most {max} Haar levels, {levels} requested",
            signal.len()
        ));
    }
    let block = 1usize << levels;
    let padded = signal.len().div_ceil(block) * block;
    let mut approx = Vec::with_capacity(padded);
    approx.extend_from_slice(signal);
    approx.resize(padded, 0.0);

    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let half = approx.len() / 2;
        let mut next = Vec::with_capacity(half);
        let mut detail = Vec::with_capacity(half);
        for pair in approx.chunks_exact(2) {
            next.push((pair[0] + pair[1]) * FRAC_1_SQRT_2);
            detail.push((pair[0] - pair[1]) * FRAC_1_SQRT_2);
        }
        details.push(detail);
        approx = next;
    }
    Ok(WaveletDecomposition {
        approximation: approx,
        details,
        levels,
        original_length: signal.len(),
    })
}

/// Haar synthesis, truncated to the original length.
pub fn dwt_inverse(decomp: &WaveletDecomposition) -> Result<Vec<f64>> {
    decomp.check()?;
    let mut approx = decomp.approximation.clone();
    for detail in decomp.details.iter().rev() {
        let mut next = Vec::with_capacity(approx.len() * 2);
        for (a, d) in approx.iter().zip(detail) {
            next.push((a + d) * FRAC_1_SQRT_2);
            next.push((a - d) * FRAC_1_SQRT_2);
        }
        approx = next;
    }
    approx.truncate(decomp.original_length);
    Ok(approx)
}

/// `sign(c) · max(|c| - t, 0)`.
pub fn soft_threshold(c: f64, t: f64) -> f64 {
    let m = c.abs() - t;
    if m > 0.0 {
        m.copysign(c)
    } else {
        0.0
    }
}

/// Robust noise scale `median(|d|) / 0.6745`.
pub fn mad_sigma(coeffs: &[f64]) -> f64 {
    if coeffs.is_empty() {
        return 0.0;
    }
    let mut abs: Vec<f64> = coeffs.iter().map(|c| c.abs()).collect();
    let mid = abs.len() / 2;
    let (_, &mut hi, _) = abs.select_nth_unstable_by(mid, f64::total_cmp);
    let median = if abs.len() % 2 == 1 {
        hi
    } else {
        let lo = abs[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    };
    median / MAD_SCALE
}

/// Stein's unbiased risk of soft thresholding unit-variance data `x` at `t`.
pub fn sure_risk(x: &[f64], t: f64) -> f64 {
    let n = x.len() as f64;
    let mut below = 0.0;
    let mut clipped = 0.0;
    for &v in x {
        if v.abs() <= t {
            below += 1.0;
        }
        clipped += (v * v).min(t * t);
    }
    n - 2.0 * below + clipped
}

/// SURE-optimal soft threshold for one band, in the band's own units.
///
/// Noise is scaled by [`mad_sigma`]; candidate thresholds are zero and every
/// normalised coefficient magnitude up to the universal threshold
/// `sqrt(2 ln n)`, plus the universal threshold itself. Returns `None` for an
/// empty band or when the MAD estimate is zero.
pub fn sure_level_threshold(coeffs: &[f64]) -> Option<f64> {
    let n = coeffs.len();
    if n == 0 {
        return None;
    }
    let sigma = mad_sigma(coeffs);
    if !(sigma > 0.0 && sigma.is_finite()) {
        return None;
    }
    let universal = (2.0 * (n as f64).ln()).sqrt();
    let mut sq: Vec<f64> = coeffs.iter().map(|c| (c / sigma).powi(2)).collect();
    sq.sort_unstable_by(f64::total_cmp);

    // risk(t) = n - 2·#{x² <= t²} + Σ_{x² <= t²} x² + t²·#{x² > t²}
    let nf = n as f64;
    let zeros = sq.iter().take_while(|&&v| v == 0.0).count();
    let mut best_t2 = 0.0;
    let mut best_risk = nf - 2.0 * zeros as f64;
    let mut cum = 0.0;
    let u2 = universal * universal;
    let mut i = 0;
    while i < n {
        let v = sq[i];
        if v > u2 {
            break;
        }
        // absorb every coefficient equal to v
        let mut j = i;
        while j < n && sq[j] == v {
            cum += sq[j];
            j += 1;
        }
        let risk = nf - 2.0 * j as f64 + cum + (n - j) as f64 * v;
        if risk < best_risk {
            best_risk = risk;
            best_t2 = v;
        }
        i = j;
    }
    let below_u = sq.partition_point(|&v| v <= u2);
    let cum_u: f64 = sq[..below_u].iter().sum();
    let risk_u = nf - 2.0 * below_u as f64 + cum_u + (n - below_u) as f64 * u2;
    if risk_u < best_risk {
        best_t2 = u2;
    }
    Some(best_t2.sqrt() * sigma)
}

/// Per-level SURE soft thresholding of the detail bands. The approximation
/// band is left untouched.
pub fn sure_threshold(decomp: &WaveletDecomposition) -> WaveletDecomposition {
    sure_threshold_with(decomp, Exec::default())
}

pub fn sure_threshold_with(decomp: &WaveletDecomposition, exec: Exec) -> WaveletDecomposition {
    let details = exec.map(&decomp.details, |band| match sure_level_threshold(band) {
        Some(t) => band.iter().map(|&c| soft_threshold(c, t)).collect(),
        None => band.clone(),
    });
    WaveletDecomposition {
        approximation: decomp.approximation.clone(),
        details,
        levels: decomp.levels,
        original_length: decomp.original_length,
    }
}
