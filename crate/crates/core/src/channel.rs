//! Software replacement for the transmitter/receiver pair.
//!
//! The received signal is modelled at baseband: a unit-amplitude tone
//! (100 kHz at 1 MHz by default) whose amplitude is shaped by a gesture
//! envelope, plus white Gaussian noise at a calibrated SNR. Environment
//! profiles map transmitter/receiver distance to a measured average SNR.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal, StandardNormal, Uniform};

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::seed::{derive_seed, rng};
use crate::trace::{mean_square, GestureLabel, Trace, TraceMeta};
use crate::units::SnrDb;

pub const DEFAULT_SAMPLE_RATE: f64 = 1.0e6;
pub const DEFAULT_TONE_FREQ: f64 = 100.0e3;

/// Unit-amplitude sinusoid of `round(duration · sample_rate)` samples.
pub fn synth_carrier(duration: f64, sample_rate: f64, tone_freq: f64) -> Result<Trace> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(invalid!("duration must be positive, got {duration}"));
    }
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(invalid!("sample rate must be positive, got {sample_rate}"));
    }
    if !(tone_freq > 0.0 && tone_freq < sample_rate / 2.0) {
        return Err(invalid!(
            "tone {tone_freq} Hz violates Nyquist for {sample_rate} Hz sampling"
        ));
    }
    let n = (duration * sample_rate).round() as usize;
    if n == 0 {
        return Err(invalid!("duration {duration} s yields no samples"));
    }
    let w = 2.0 * std::f64::consts::PI * tone_freq / sample_rate;
    let samples = (0..n).map(|i| (w * i as f64).sin()).collect();
    Trace::new(samples, sample_rate)
}

/// Parameters of the amplitude fingerprint a gesture leaves on the carrier.
///
/// How the fields are used depends on the gesture:
///
/// * `HandsDown`: envelope is identically 1.
/// * `HandsUp`: raised-cosine ramp from 1 to `base_attenuation` over the first
///   20% of the trace, sustained for the middle 60%, ramp back over the last 20%.
/// * `Clapping`: baseline `base_attenuation` with `round(event_rate · T)`
///   rectangular dips of relative depth `event_depth` and width
///   `event_duration`, one per equal slot, jittered within the slot.
/// * driving / conversation: baseline `base_attenuation` with Poisson-timed
///   raised-cosine dips (rate `event_rate`, depth up to `event_depth`).
///
/// `subject_jitter` is the relative standard deviation applied per trace to
/// the attenuation, depth and duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GestureEnvelopeSpec {
    pub gesture: GestureLabel,
    pub base_attenuation: f64,
    pub event_rate: f64,
    pub event_depth: f64,
    pub event_duration: f64,
    pub subject_jitter: f64,
    pub rng_seed: u64,
}

impl GestureEnvelopeSpec {
    /// Default fingerprint for each gesture.
    pub fn preset(gesture: GestureLabel) -> Self {
        let (base, rate, depth, duration, jitter) = match gesture {
            GestureLabel::HandsDown => (1.0, 0.0, 0.0, 0.1, 0.0),
            GestureLabel::HandsUp => (0.8, 0.0, 0.0, 0.1, 0.05),
            GestureLabel::Clapping => (1.0, 2.0, 0.55, 0.15, 0.02),
            GestureLabel::NeutralDriving => (0.85, 0.8, 0.2, 0.25, 0.05),
            GestureLabel::AngryDriving => (0.85, 2.0, 0.4, 0.2, 0.05),
            GestureLabel::NeutralConversation => (0.8, 0.6, 0.25, 0.3, 0.05),
            GestureLabel::AngryConversation => (0.8, 1.6, 0.45, 0.25, 0.05),
        };
        GestureEnvelopeSpec {
            gesture,
            base_attenuation: base,
            event_rate: rate,
            event_depth: depth,
            event_duration: duration,
            subject_jitter: jitter,
            rng_seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let s = self;
        if !(s.base_attenuation > 0.0 && s.base_attenuation <= 1.0) {
            return Err(invalid!("base_attenuation must be in (0,1], got {}", s.base_attenuation));
        }
        if !(s.event_rate.is_finite() && s.event_rate >= 0.0) {
            return Err(invalid!("event_rate must be >= 0, got {}", s.event_rate));
        }
        if !(s.event_depth >= 0.0 && s.event_depth < 1.0) {
            return Err(invalid!("event_depth must be in [0,1), got {}", s.event_depth));
        }
        if !(s.event_duration.is_finite() && s.event_duration > 0.0) {
            return Err(invalid!("event_duration must be positive, got {}", s.event_duration));
        }
        if !(s.subject_jitter.is_finite() && s.subject_jitter >= 0.0) {
            return Err(invalid!("subject_jitter must be >= 0, got {}", s.subject_jitter));
        }
        if s.event_duration * s.event_rate > 1.0 {
            return Err(invalid!(
                "event_duration * event_rate = {} exceeds 1",
                s.event_duration * s.event_rate
            ));
        }
        Ok(())
    }

    /// Scales the attenuation depth, event rate, depth and duration by the
    /// given subject factors, clamping back into the valid ranges.
    pub fn scaled(&self, f: &SubjectScale) -> Self {
        let mut s = *self;
        let atten = (1.0 - s.base_attenuation) * f.attenuation;
        s.base_attenuation = (1.0 - atten).clamp(0.01, 1.0);
        s.event_rate *= f.rate;
        s.event_depth = (s.event_depth * f.depth).clamp(0.0, 0.99);
        s.event_duration *= f.duration;
        if s.event_rate * s.event_duration > 1.0 {
            s.event_duration = 1.0 / s.event_rate;
        }
        s
    }
}

/// Multiplicative per-subject factors on envelope parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubjectScale {
    pub attenuation: f64,
    pub rate: f64,
    pub depth: f64,
    pub duration: f64,
}

impl SubjectScale {
    pub const IDENTITY: SubjectScale = SubjectScale {
        attenuation: 1.0,
        rate: 1.0,
        depth: 1.0,
        duration: 1.0,
    };

    /// Each factor uniform in `[1 - spread, 1 + spread]`.
    pub fn draw(seed: u64, spread: f64) -> Self {
        if spread == 0.0 {
            return Self::IDENTITY;
        }
        let mut r = rng(seed);
        let u = Uniform::new_inclusive(1.0 - spread, 1.0 + spread).unwrap();
        SubjectScale {
            attenuation: u.sample(&mut r),
            rate: u.sample(&mut r),
            depth: u.sample(&mut r),
            duration: u.sample(&mut r),
        }
    }
}

fn jittered(rng: &mut impl Rng, value: f64, rel_std: f64) -> f64 {
    if rel_std == 0.0 {
        return value;
    }
    let z: f64 = StandardNormal.sample(rng);
    value * (1.0 + rel_std * z)
}

fn raised_cosine(x: f64) -> f64 {
    0.5 - 0.5 * (std::f64::consts::PI * x.clamp(0.0, 1.0)).cos()
}

/// Envelope samples for `n` samples at `sample_rate`. Deterministic in
/// `spec.rng_seed`.
pub fn gesture_envelope(spec: &GestureEnvelopeSpec, n: usize, sample_rate: f64) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut r = rng(spec.rng_seed);
    let total = n as f64 / sample_rate;
    let jit = spec.subject_jitter;
    let base = if spec.gesture == GestureLabel::HandsDown {
        1.0
    } else {
        let atten = jittered(&mut r, 1.0 - spec.base_attenuation, jit);
        (1.0 - atten).clamp(0.01, 1.0)
    };
    let env = match spec.gesture {
        GestureLabel::HandsDown => vec![1.0; n],
        GestureLabel::HandsUp => {
            let ramp = 0.2 * n as f64;
            (0..n)
                .map(|i| {
                    let pos = i as f64;
                    let r = if pos < ramp {
                        raised_cosine(pos / ramp)
                    } else if pos < n as f64 - ramp {
                        1.0
                    } else {
                        raised_cosine((n as f64 - pos) / ramp)
                    };
                    1.0 - (1.0 - base) * r
                })
                .collect()
        }
        GestureLabel::Clapping => {
            let mut env = vec![base; n];
            let events = (spec.event_rate * total).round() as usize;
            if events > 0 {
                let slot = total / events as f64;
                let width = jittered(&mut r, spec.event_duration, jit).clamp(1.0 / sample_rate, 0.8 * slot);
                let depth = jittered(&mut r, spec.event_depth, jit).clamp(0.0, 0.99);
                let max_offset = 0.25 * (slot - width).max(0.0);
                let offsets = Uniform::new_inclusive(-1.0, 1.0).unwrap();
                for e in 0..events {
                    let centre = (e as f64 + 0.5) * slot + max_offset * offsets.sample(&mut r);
                    let start = ((centre - width / 2.0) * sample_rate).round().max(0.0) as usize;
                    let end = (((centre + width / 2.0) * sample_rate).round() as usize).min(n);
                    for v in &mut env[start..end.max(start)] {
                        *v = base * (1.0 - depth);
                    }
                }
            }
            env
        }
        GestureLabel::NeutralDriving
        | GestureLabel::AngryDriving
        | GestureLabel::NeutralConversation
        | GestureLabel::AngryConversation => {
            let mut env = vec![base; n];
            if spec.event_rate > 0.0 {
                let depth = jittered(&mut r, spec.event_depth, jit).clamp(0.0, 0.99);
                let duration = jittered(&mut r, spec.event_duration, jit).max(1.0 / sample_rate);
                let gaps = Exp::new(spec.event_rate).unwrap();
                let depth_draw = Uniform::new_inclusive(0.5, 1.0).unwrap();
                let dur_draw = Uniform::new_inclusive(0.7, 1.3).unwrap();
                let mut t = gaps.sample(&mut r);
                while t < total {
                    let d = depth * depth_draw.sample(&mut r);
                    let w = duration * dur_draw.sample(&mut r);
                    let start = (t * sample_rate) as usize;
                    let len = ((w * sample_rate) as usize).max(1);
                    for (k, v) in env.iter_mut().skip(start).take(len).enumerate() {
                        let shape = (std::f64::consts::PI * (k as f64 + 0.5) / len as f64).sin();
                        *v *= 1.0 - d * shape;
                    }
                    t += gaps.sample(&mut r);
                }
            }
            env
        }
    };
    Ok(env)
}

/// Sample-wise product of the carrier and the gesture envelope.
pub fn apply_gesture_envelope(carrier: &Trace, spec: &GestureEnvelopeSpec) -> Result<Trace> {
    let env = gesture_envelope(spec, carrier.len(), carrier.sample_rate())?;
    let samples = carrier.samples().iter().zip(&env).map(|(c, e)| c * e).collect();
    let mut out = carrier.map_samples(samples);
    out.meta.gesture = Some(spec.gesture);
    Ok(out)
}

/// Noise power reference for a target SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseReference {
    /// Mean square of the clean trace being degraded.
    TracePower,
    /// A fixed calibration power, e.g. the unobstructed carrier's 0.5.
    Fixed(f64),
}

/// Receiver noise model.
///
/// With `floor_jitter_db > 0` the noise floor fluctuates block-wise: each block
/// of `floor_block` seconds has its noise level offset by a Gaussian number of
/// dB with standard deviation `floor_jitter_db`. The offsets have zero mean
/// in dB, so the target SNR is the log-domain average over blocks, which is
/// what averaging dBm readings of a fluctuating floor reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub reference: NoiseReference,
    pub floor_jitter_db: f64,
    pub floor_block: f64,
}

impl ChannelConfig {
    /// Stationary AWGN relative to the clean trace's own power.
    pub const STATIONARY: ChannelConfig = ChannelConfig {
        reference: NoiseReference::TracePower,
        floor_jitter_db: 0.0,
        floor_block: 0.05,
    };

    pub fn validate(&self) -> Result<()> {
        if let NoiseReference::Fixed(p) = self.reference {
            if !(p.is_finite() && p > 0.0) {
                return Err(invalid!("reference power must be positive, got {p}"));
            }
        }
        if !(self.floor_jitter_db.is_finite() && self.floor_jitter_db >= 0.0) {
            return Err(invalid!("floor_jitter_db must be >= 0, got {}", self.floor_jitter_db));
        }
        if !(self.floor_block.is_finite() && self.floor_block > 0.0) {
            return Err(invalid!("floor_block must be positive, got {}", self.floor_block));
        }
        Ok(())
    }
}

impl Default for ChannelConfig {
    /// Calibrated against the unit carrier (power 0.5) with a fluctuating
    /// noise floor; used by dataset generation.
    fn default() -> Self {
        ChannelConfig {
            reference: NoiseReference::Fixed(0.5),
            floor_jitter_db: 8.0,
            floor_block: 0.05,
        }
    }
}

/// Adds zero-mean Gaussian noise with variance `mean_square(clean) / 10^(snr/10)`.
pub fn apply_awgn(clean: &Trace, target: SnrDb, seed: u64) -> Result<Trace> {
    add_channel_noise(clean, target, &ChannelConfig::STATIONARY, seed)
}

/// Adds noise according to `channel`. `SnrDb::NOISELESS` returns the input.
pub fn add_channel_noise(clean: &Trace, target: SnrDb, channel: &ChannelConfig, seed: u64) -> Result<Trace> {
    channel.validate()?;
    let reference = match channel.reference {
        NoiseReference::TracePower => mean_square(clean.samples()),
        NoiseReference::Fixed(p) => p,
    };
    if reference <= 0.0 {
        return Err(Error::Domain("cannot calibrate noise against an all-zero trace".into()));
    }
    let mut out = clean.clone();
    out.meta.snr_db = Some(target);
    if target.is_noiseless() {
        return Ok(out);
    }
    let sigma = (reference / target.linear()).sqrt();
    let block = ((channel.floor_block * clean.sample_rate()).round() as usize).max(1);
    let n = clean.len();
    let block_sigma: Vec<f64> = if channel.floor_jitter_db > 0.0 {
        let s = channel.floor_jitter_db * std::f64::consts::LN_10 / 10.0;
        let mut r = rng(derive_seed(seed, "noise-floor", 0));
        let dist = Normal::new(0.0, s).unwrap();
        (0..n.div_ceil(block))
            .map(|_| sigma * (0.5 * dist.sample(&mut r)).exp())
            .collect()
    } else {
        vec![sigma; n.div_ceil(block)]
    };
    let mut r = rng(seed);
    for (i, x) in out.samples_mut().iter_mut().enumerate() {
        let z: f64 = StandardNormal.sample(&mut r);
        *x += block_sigma[i / block] * z;
    }
    Ok(out)
}

/// Measurement environments with tabulated distance/SNR averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Environment {
    Cafe,
    Outdoor,
    Office,
    Corridor,
    Mall,
}

impl Environment {
    pub const ALL: [Environment; 5] = [
        Environment::Cafe,
        Environment::Outdoor,
        Environment::Office,
        Environment::Corridor,
        Environment::Mall,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Environment::Cafe => "cafe",
            Environment::Outdoor => "outdoor",
            Environment::Office => "office",
            Environment::Corridor => "corridor",
            Environment::Mall => "mall",
        }
    }
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Environment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Environment::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| invalid!("unknown environment '{s}'"))
    }
}

/// Average SNR measured at a set of distances in one environment.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentProfile {
    pub name: Environment,
    anchors: Vec<(f64, SnrDb)>,
}

impl EnvironmentProfile {
    /// Anchors must be at least two, at non-negative strictly increasing
    /// distances with finite SNR. SNR need not be monotone in distance.
    pub fn new(name: Environment, anchors: Vec<(f64, SnrDb)>) -> Result<Self> {
        if anchors.len() < 2 {
            return Err(invalid!("an environment profile needs at least 2 anchors"));
        }
        if anchors.iter().any(|(d, s)| !(d.is_finite() && *d >= 0.0) || s.is_noiseless()) {
            return Err(invalid!("anchor distances must be >= 0 and SNRs finite"));
        }
        if anchors.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(invalid!("anchor distances must be strictly increasing"));
        }
        Ok(Self { name, anchors })
    }

    /// Averages measured between a WiFi router and a laptop at 0, 8, 17, 25
    /// and 30 m (cafe and office were not measured at 30 m).
    pub fn measured(name: Environment) -> Self {
        let row: &[(f64, f64)] = match name {
            Environment::Cafe => &[(0.0, 77.3), (8.0, 42.0), (17.0, 20.6), (25.0, 5.0)],
            Environment::Outdoor => &[(0.0, 60.7), (8.0, 45.1), (17.0, 44.9), (25.0, 36.7), (30.0, 37.3)],
            Environment::Office => &[(0.0, 74.3), (8.0, 52.1), (17.0, 41.6), (25.0, 30.6)],
            Environment::Corridor => &[(0.0, 76.09), (8.0, 49.0), (17.0, 56.4), (25.0, 25.0), (30.0, 5.0)],
            Environment::Mall => &[(0.0, 71.3), (8.0, 46.49), (17.0, 40.2), (25.0, 36.51), (30.0, 25.9)],
        };
        let anchors = row.iter().map(|&(d, s)| (d, SnrDb::new(s).unwrap())).collect();
        Self::new(name, anchors).expect("tabulated profile is valid")
    }

    pub fn anchors(&self) -> &[(f64, SnrDb)] {
        &self.anchors
    }
}

/// Piecewise-linear SNR at `distance`; exact at anchors, no extrapolation.
pub fn environment_snr(profile: &EnvironmentProfile, distance: f64) -> Result<SnrDb> {
    let a = &profile.anchors;
    let (lo, hi) = (a[0].0, a[a.len() - 1].0);
    if !(distance >= lo && distance <= hi) {
        return Err(Error::OutOfRange { value: distance, min: lo, max: hi });
    }
    if let Some(&(_, s)) = a.iter().find(|(d, _)| *d == distance) {
        return Ok(s);
    }
    let i = a.iter().position(|(d, _)| *d > distance).unwrap();
    let (d0, s0) = (a[i - 1].0, a[i - 1].1.value());
    let (d1, s1) = (a[i].0, a[i].1.value());
    let frac = (distance - d0) / (d1 - d0);
    SnrDb::new(s0 + frac * (s1 - s0))
}

/// Everything needed to synthesise a labelled dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub gestures: Vec<GestureEnvelopeSpec>,
    pub subjects: usize,
    pub repetitions: usize,
    pub duration: f64,
    pub sample_rate: f64,
    pub tone_freq: f64,
    pub snr: SnrDb,
    pub channel: ChannelConfig,
    /// Relative spread of per-subject parameter factors (0.15 = ±15%).
    pub subject_spread: f64,
    pub seed: u64,
    pub exec: Exec,
}

impl DatasetConfig {
    pub fn new(gestures: Vec<GestureEnvelopeSpec>, snr: SnrDb, seed: u64) -> Self {
        DatasetConfig {
            gestures,
            subjects: 1,
            repetitions: 5,
            duration: 1.0,
            sample_rate: DEFAULT_SAMPLE_RATE,
            tone_freq: DEFAULT_TONE_FREQ,
            snr,
            channel: ChannelConfig::default(),
            subject_spread: 0.0,
            seed,
            exec: Exec::default(),
        }
    }
}

/// Identifies one trace of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceKey {
    pub subject: usize,
    pub repetition: usize,
    pub gesture: usize,
}

/// Seed of one trace. Depends on the master seed, subject, gesture name and
/// repetition only, so a trace is the same whichever gesture set or SNR it
/// is generated for.
pub fn trace_seed(master: u64, subject: usize, gesture: GestureLabel, repetition: usize) -> u64 {
    derive_seed(derive_seed(master, "subject", subject as u64), gesture.as_str(), repetition as u64)
}

pub fn subject_scale(master: u64, subject: usize, spread: f64) -> SubjectScale {
    SubjectScale::draw(derive_seed(master, "subject-scale", subject as u64), spread)
}

pub fn subject_id(subject: usize) -> String {
    format!("s{subject}")
}

/// Renders a single trace of a dataset.
pub fn generate_trace(cfg: &DatasetConfig, key: TraceKey) -> Result<Trace> {
    let spec = cfg
        .gestures
        .get(key.gesture)
        .ok_or_else(|| invalid!("gesture index {} out of range", key.gesture))?;
    let seed = trace_seed(cfg.seed, key.subject, spec.gesture, key.repetition);
    let scale = subject_scale(cfg.seed, key.subject, cfg.subject_spread);
    let spec = spec.scaled(&scale).with_seed(derive_seed(seed, "envelope", 0));
    let carrier = synth_carrier(cfg.duration, cfg.sample_rate, cfg.tone_freq)?;
    let clean = apply_gesture_envelope(&carrier, &spec)?;
    let mut noisy = add_channel_noise(&clean, cfg.snr, &cfg.channel, derive_seed(seed, "noise", 0))?;
    noisy.meta = TraceMeta {
        gesture: Some(spec.gesture),
        subject: Some(subject_id(key.subject)),
        snr_db: Some(cfg.snr),
        distance_m: None,
        seed: Some(seed),
    };
    Ok(noisy)
}

/// Keys in dataset order: subject-major, then repetition, then gesture.
pub fn dataset_keys(cfg: &DatasetConfig) -> Vec<TraceKey> {
    let mut keys = Vec::with_capacity(cfg.subjects * cfg.repetitions * cfg.gestures.len());
    for subject in 0..cfg.subjects {
        for repetition in 0..cfg.repetitions {
            for gesture in 0..cfg.gestures.len() {
                keys.push(TraceKey { subject, repetition, gesture });
            }
        }
    }
    keys
}

pub fn generate_dataset_with(cfg: &DatasetConfig) -> Result<Vec<Trace>> {
    if cfg.repetitions == 0 || cfg.subjects == 0 {
        return Err(invalid!("need at least one subject and one repetition"));
    }
    if cfg.gestures.is_empty() {
        return Err(invalid!("no gestures to generate"));
    }
    for g in &cfg.gestures {
        g.validate()?;
    }
    cfg.exec.try_map(&dataset_keys(cfg), |&key| generate_trace(cfg, key))
}

/// `repetitions × gestures.len()` labelled traces for a single subject at
/// 1 MHz with a 100 kHz tone.
pub fn generate_dataset(
    gestures: &[GestureEnvelopeSpec],
    repetitions: usize,
    duration: f64,
    snr: SnrDb,
    seed: u64,
) -> Result<Vec<Trace>> {
    let mut cfg = DatasetConfig::new(gestures.to_vec(), snr, seed);
    cfg.repetitions = repetitions;
    cfg.duration = duration;
    generate_dataset_with(&cfg)
}
