//! Sampled amplitude traces and their on-disk formats.
//!
//! # CSV
//!
//! ```text
//! # sample_rate=1000000
//! # gesture=clapping
//! # snr_db=42
//! # seed=42
//! 0
//! 0.5877852522924731
//! ...
//! ```
//!
//! `# subject=<id>` and `# distance_m=<m>` are optional extra header rows.
//! Amplitudes are written with the shortest representation that parses back
//! to the identical `f64`, so CSV round trips are exact.
//!
//! # Binary
//!
//! A 64-byte little-endian header followed by `n` little-endian `f32` samples:
//!
//! | offset | type    | field                                      |
//! |--------|---------|--------------------------------------------|
//! | 0      | [u8; 8] | magic `RFDFTRC1`                           |
//! | 8      | f64     | sample rate (Hz)                           |
//! | 16     | u64     | sample count `n`                           |
//! | 24     | f64     | SNR in dB (NaN when absent, +inf noiseless)|
//! | 32     | u64     | seed (valid when flag bit 0 set)           |
//! | 40     | f64     | distance in meters (NaN when absent)       |
//! | 48     | u8      | gesture code (0xFF when absent)            |
//! | 49     | u8      | flags (bit 0: seed present)                |
//! | 50     | [u8;14] | subject id, UTF-8, zero padded             |

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::units::SnrDb;

/// Activities the channel simulator can render.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GestureLabel {
    HandsDown,
    HandsUp,
    Clapping,
    NeutralDriving,
    AngryDriving,
    NeutralConversation,
    AngryConversation,
}

impl GestureLabel {
    pub const ALL: [GestureLabel; 7] = [
        GestureLabel::HandsDown,
        GestureLabel::HandsUp,
        GestureLabel::Clapping,
        GestureLabel::NeutralDriving,
        GestureLabel::AngryDriving,
        GestureLabel::NeutralConversation,
        GestureLabel::AngryConversation,
    ];

    /// Canonical lowercase name used in every file format.
    pub fn as_str(self) -> &'static str {
        match self {
            GestureLabel::HandsDown => "handsdown",
            GestureLabel::HandsUp => "handsup",
            GestureLabel::Clapping => "clapping",
            GestureLabel::NeutralDriving => "neutraldriving",
            GestureLabel::AngryDriving => "angrydriving",
            GestureLabel::NeutralConversation => "neutralconversation",
            GestureLabel::AngryConversation => "angryconversation",
        }
    }

    fn code(self) -> u8 {
        GestureLabel::ALL.iter().position(|&g| g == self).unwrap() as u8
    }

    fn from_code(code: u8) -> Option<Self> {
        GestureLabel::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for GestureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GestureLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        GestureLabel::ALL
            .into_iter()
            .find(|g| g.as_str() == norm)
            .ok_or_else(|| invalid!("unknown gesture '{s}'"))
    }
}

/// Labels carried along with a trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceMeta {
    pub gesture: Option<GestureLabel>,
    pub subject: Option<String>,
    pub snr_db: Option<SnrDb>,
    pub distance_m: Option<f64>,
    pub seed: Option<u64>,
}

/// A uniformly sampled real amplitude signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    samples: Vec<f64>,
    sample_rate: f64,
    pub meta: TraceMeta,
}

impl Trace {
    /// Rejects empty or non-finite sample sequences and non-positive rates.
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(invalid!("sample rate must be positive, got {sample_rate}"));
        }
        if samples.is_empty() {
            return Err(invalid!("trace has no samples"));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(invalid!("sample {i} is not finite"));
        }
        Ok(Self {
            samples,
            sample_rate,
            meta: TraceMeta::default(),
        })
    }

    pub fn with_meta(mut self, meta: TraceMeta) -> Self {
        self.meta = meta;
        self
    }

    /// Same rate and labels, new samples. The caller guarantees the samples
    /// are finite and non-empty.
    pub(crate) fn map_samples(&self, samples: Vec<f64>) -> Trace {
        debug_assert!(!samples.is_empty());
        Trace {
            samples,
            sample_rate: self.sample_rate,
            meta: self.meta.clone(),
        }
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// In-place access for arithmetic that keeps every sample finite.
    pub(crate) fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Mean square of the samples.
    pub fn power(&self) -> f64 {
        mean_square(&self.samples)
    }

    pub fn rms(&self) -> f64 {
        self.power().sqrt()
    }
}

pub(crate) fn mean_square(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64
}

/// On-disk trace encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Binary,
}

impl TraceFormat {
    /// `.bin`/`.f32` files are binary, everything else CSV.
    pub fn from_path(path: &Path) -> TraceFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") | Some("f32") => TraceFormat::Binary,
            _ => TraceFormat::Csv,
        }
    }
}

const MAGIC: &[u8; 8] = b"RFDFTRC1";
const HEADER_LEN: usize = 64;
const SUBJECT_LEN: usize = 14;

pub fn write_trace(trace: &Trace, path: &Path, format: TraceFormat) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    match format {
        TraceFormat::Csv => write_csv(trace, &mut w)?,
        TraceFormat::Binary => write_binary(trace, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace, sniffing the binary magic before falling back to CSV.
pub fn read_trace(path: &Path) -> Result<Trace> {
    let mut file = File::open(path)?;
    let mut magic = [0u8; 8];
    let n = read_up_to(&mut file, &mut magic)?;
    drop(file);
    if n == 8 && &magic == MAGIC {
        read_binary(path)
    } else {
        read_csv(path)
    }
}

fn read_up_to(r: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..])? {
            0 => break,
            k => filled += k,
        }
    }
    Ok(filled)
}

pub fn write_csv(trace: &Trace, w: &mut impl Write) -> Result<()> {
    writeln!(w, "# sample_rate={}", trace.sample_rate)?;
    let m = &trace.meta;
    if let Some(g) = m.gesture {
        writeln!(w, "# gesture={g}")?;
    }
    if let Some(s) = &m.subject {
        writeln!(w, "# subject={s}")?;
    }
    if let Some(snr) = m.snr_db {
        writeln!(w, "# snr_db={snr}")?;
    }
    if let Some(d) = m.distance_m {
        writeln!(w, "# distance_m={d}")?;
    }
    if let Some(seed) = m.seed {
        writeln!(w, "# seed={seed}")?;
    }
    for x in &trace.samples {
        writeln!(w, "{x}")?;
    }
    Ok(())
}

fn parse_snr(v: &str) -> Option<SnrDb> {
    let x = match v.trim() {
        "inf" | "+inf" | "Infinity" => f64::INFINITY,
        other => other.parse().ok()?,
    };
    SnrDb::new(x).ok()
}

pub fn read_csv(path: &Path) -> Result<Trace> {
    let reader = BufReader::new(File::open(path)?);
    let mut rate = None;
    let mut meta = TraceMeta::default();
    let mut samples = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            let Some((key, value)) = header.trim().split_once('=') else {
                continue;
            };
            let value = value.trim();
            let bad = |what: &str| Error::parse(path, lineno, format!("bad {what} '{value}'"));
            match key.trim() {
                "sample_rate" => rate = Some(value.parse::<f64>().map_err(|_| bad("sample_rate"))?),
                "gesture" => meta.gesture = Some(value.parse().map_err(|_| bad("gesture"))?),
                "subject" => meta.subject = Some(value.to_string()),
                "snr_db" => meta.snr_db = Some(parse_snr(value).ok_or_else(|| bad("snr_db"))?),
                "distance_m" => {
                    meta.distance_m = Some(value.parse().map_err(|_| bad("distance_m"))?)
                }
                "seed" => meta.seed = Some(value.parse().map_err(|_| bad("seed"))?),
                _ => {}
            }
            continue;
        }
        let x: f64 = line
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad amplitude '{line}'")))?;
        samples.push(x);
    }
    let rate = rate.ok_or_else(|| Error::parse(path, 1, "missing '# sample_rate=' header"))?;
    Ok(Trace::new(samples, rate)?.with_meta(meta))
}

pub fn write_binary(trace: &Trace, w: &mut impl Write) -> Result<()> {
    let m = &trace.meta;
    let mut header = [0u8; HEADER_LEN];
    header[0..8].copy_from_slice(MAGIC);
    header[8..16].copy_from_slice(&trace.sample_rate.to_le_bytes());
    header[16..24].copy_from_slice(&(trace.samples.len() as u64).to_le_bytes());
    let snr = m.snr_db.map_or(f64::NAN, SnrDb::value);
    header[24..32].copy_from_slice(&snr.to_le_bytes());
    header[32..40].copy_from_slice(&m.seed.unwrap_or(0).to_le_bytes());
    header[40..48].copy_from_slice(&m.distance_m.unwrap_or(f64::NAN).to_le_bytes());
    header[48] = m.gesture.map_or(0xff, GestureLabel::code);
    header[49] = u8::from(m.seed.is_some());
    if let Some(s) = &m.subject {
        let bytes = s.as_bytes();
        if bytes.len() > SUBJECT_LEN {
            return Err(invalid!(
                "subject id '{s}' exceeds {SUBJECT_LEN} bytes for the binary format"
            ));
        }
        header[50..50 + bytes.len()].copy_from_slice(bytes);
    }
    w.write_all(&header)?;
    for &x in &trace.samples {
        w.write_all(&(x as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary(path: &Path) -> Result<Trace> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|_| Error::parse(path, 0, "truncated header"))?;
    if &header[0..8] != MAGIC {
        return Err(Error::parse(path, 0, "bad magic"));
    }
    let f64_at = |o: usize| f64::from_le_bytes(header[o..o + 8].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(header[o..o + 8].try_into().unwrap());
    let rate = f64_at(8);
    let n = u64_at(16) as usize;
    let snr = f64_at(24);
    let distance = f64_at(40);
    let meta = TraceMeta {
        gesture: GestureLabel::from_code(header[48]),
        subject: {
            let raw = &header[50..50 + SUBJECT_LEN];
            let end = raw.iter().position(|&b| b == 0).unwrap_or(SUBJECT_LEN);
            (end > 0).then(|| String::from_utf8_lossy(&raw[..end]).into_owned())
        },
        snr_db: if snr.is_nan() { None } else { SnrDb::new(snr).ok() },
        distance_m: (!distance.is_nan()).then_some(distance),
        seed: (header[49] & 1 == 1).then(|| u64_at(32)),
    };
    let mut buf = vec![0u8; n * 4];
    r.read_exact(&mut buf)
        .map_err(|_| Error::parse(path, 0, format!("expected {n} samples")))?;
    let samples = buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(Trace::new(samples, rate)?.with_meta(meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_trace() -> Trace {
        let xs: Vec<f64> = (0..257).map(|i| (i as f64 * 0.37).sin() * 1.25 - 0.1).collect();
        Trace::new(xs, 1e6).unwrap().with_meta(TraceMeta {
            gesture: Some(GestureLabel::Clapping),
            subject: Some("s3".into()),
            snr_db: Some(SnrDb::new(42.0).unwrap()),
            distance_m: Some(2.0),
            seed: Some(7),
        })
    }

    #[test]
    fn construction_rules() {
        assert!(Trace::new(vec![], 1.0).is_err());
        assert!(Trace::new(vec![1.0], 0.0).is_err());
        assert!(Trace::new(vec![1.0, f64::NAN], 1.0).is_err());
        let t = Trace::new(vec![1.0; 500], 1000.0).unwrap();
        assert_eq!(t.duration(), 0.5);
    }

    #[test]
    fn gesture_names() {
        for g in GestureLabel::ALL {
            assert_eq!(g.as_str().parse::<GestureLabel>().unwrap(), g);
            assert_eq!(GestureLabel::from_code(g.code()), Some(g));
        }
        assert_eq!("Hands_Up".parse::<GestureLabel>().unwrap(), GestureLabel::HandsUp);
        assert!("waving".parse::<GestureLabel>().is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let t = sample_trace();
        write_trace(&t, &path, TraceFormat::Csv).unwrap();
        assert_eq!(read_trace(&path).unwrap(), t);
    }

    #[test]
    fn binary_round_trip_at_f32_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.bin");
        let t = sample_trace();
        write_trace(&t, &path, TraceFormat::Binary).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 64 + 4 * 257);
        let back = read_trace(&path).unwrap();
        assert_eq!(back.meta, t.meta);
        assert_eq!(back.sample_rate(), t.sample_rate());
        for (a, b) in back.samples().iter().zip(t.samples()) {
            assert_eq!(*a, *b as f32 as f64);
        }
    }

    #[test]
    fn noiseless_snr_survives_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = sample_trace();
        t.meta.snr_db = Some(SnrDb::NOISELESS);
        write_trace(&t, &path, TraceFormat::Csv).unwrap();
        assert_eq!(read_trace(&path).unwrap().meta.snr_db, Some(SnrDb::NOISELESS));
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "# sample_rate=10\n1.0\nabc\n").unwrap();
        match read_trace(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        std::fs::write(&path, "1.0\n2.0\n").unwrap();
        assert!(read_trace(&path).is_err());
    }
}
