//! Non-overlapping windows and per-window statistics.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::trace::{Trace, TraceMeta};

/// Default window: 100k samples, 10 windows per second at 1 MHz.
pub const DEFAULT_WINDOW: usize = 100_000;
pub const ENTROPY_BINS: usize = 64;

/// A borrowed run of `size` consecutive samples from one trace.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    pub samples: &'a [f64],
    pub index: usize,
    pub meta: &'a TraceMeta,
}

/// Splits a trace into `floor(len / size)` windows; the tail is dropped.
pub fn window_trace(trace: &Trace, size: usize) -> Result<Vec<Window<'_>>> {
    if size < 2 {
        return Err(invalid!("window size must be at least 2, got {size}"));
    }
    Ok(trace
        .samples()
        .chunks_exact(size)
        .enumerate()
        .map(|(index, samples)| Window {
            samples,
            index,
            meta: &trace.meta,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FeatureKind {
    Mean,
    Std,
    Entropy,
    ZeroCrossings,
    AvgDerivative,
}

impl FeatureKind {
    /// Canonical column order.
    pub const ALL: [FeatureKind; 5] = [
        FeatureKind::Mean,
        FeatureKind::Std,
        FeatureKind::Entropy,
        FeatureKind::ZeroCrossings,
        FeatureKind::AvgDerivative,
    ];

    pub const DEFAULT: [FeatureKind; 2] = [FeatureKind::Mean, FeatureKind::Std];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Mean => "mean",
            FeatureKind::Std => "std",
            FeatureKind::Entropy => "entropy",
            FeatureKind::ZeroCrossings => "zero_crossings",
            FeatureKind::AvgDerivative => "avg_derivative",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.as_str() == key)
            .ok_or_else(|| invalid!("unknown feature '{s}'"))
    }
}

/// Sorted, de-duplicated feature list; errors when empty.
pub fn parse_feature_list(s: &str) -> Result<Vec<FeatureKind>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(FeatureKind::ALL.to_vec());
    }
    let mut kinds = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<FeatureKind>>>()?;
    kinds.sort();
    kinds.dedup();
    if kinds.is_empty() {
        return Err(invalid!("no features selected"));
    }
    Ok(kinds)
}

/// All five statistics of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub mean: f64,
    pub std: f64,
    pub entropy: f64,
    pub zero_crossings: u64,
    pub avg_derivative: f64,
    pub label: Option<String>,
    pub subject_id: Option<String>,
}

impl FeatureVector {
    pub fn get(&self, kind: FeatureKind) -> f64 {
        match kind {
            FeatureKind::Mean => self.mean,
            FeatureKind::Std => self.std,
            FeatureKind::Entropy => self.entropy,
            FeatureKind::ZeroCrossings => self.zero_crossings as f64,
            FeatureKind::AvgDerivative => self.avg_derivative,
        }
    }
}

pub fn compute_features(w: &Window<'_>) -> FeatureVector {
    let x = w.samples;
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let avg_derivative = if x.len() > 1 {
        x.windows(2).map(|p| (p[1] - p[0]).abs()).sum::<f64>() / (x.len() - 1) as f64
    } else {
        0.0
    };
    FeatureVector {
        mean,
        std: var.sqrt(),
        entropy: histogram_entropy(x),
        zero_crossings: zero_crossings(x, mean),
        avg_derivative,
        label: w.meta.gesture.map(|g| g.as_str().to_string()),
        subject_id: w.meta.subject.clone(),
    }
}

/// Shannon entropy in bits of a 64-bin histogram over `[min, max]`.
fn histogram_entropy(x: &[f64]) -> f64 {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if range.is_nan() || range <= 0.0 {
        return 0.0;
    }
    let mut counts = [0u64; ENTROPY_BINS];
    for &v in x {
        let b = ((v - lo) / range * ENTROPY_BINS as f64) as usize;
        counts[b.min(ENTROPY_BINS - 1)] += 1;
    }
    let n = x.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>()
        .max(0.0)
}

/// Sign changes of `x - mean`, skipping exact zeros.
fn zero_crossings(x: &[f64], mean: f64) -> u64 {
    let mut count = 0;
    let mut last = 0.0f64;
    for &v in x {
        let d = v - mean;
        if d == 0.0 {
            continue;
        }
        if last != 0.0 && (d > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = d;
    }
    count
}

/// One labelled feature row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub values: Vec<f64>,
    pub label: Option<String>,
    pub subject_id: Option<String>,
}

/// Feature rows sharing one column selection.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub columns: Vec<FeatureKind>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn new(columns: Vec<FeatureKind>) -> Result<Self> {
        if columns.is_empty() {
            return Err(invalid!("no features selected"));
        }
        let mut sorted = columns.clone();
        sorted.sort();
        sorted.dedup();
        if sorted != columns {
            return Err(invalid!("feature columns must be distinct and in canonical order"));
        }
        Ok(FeatureTable { columns, rows: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push_vector(&mut self, v: &FeatureVector) {
        self.rows.push(FeatureRow {
            values: self.columns.iter().map(|&k| v.get(k)).collect(),
            label: v.label.clone(),
            subject_id: v.subject_id.clone(),
        });
    }

    /// Sorted distinct labels.
    pub fn classes(&self) -> Vec<String> {
        let mut c: Vec<String> = self.rows.iter().filter_map(|r| r.label.clone()).collect();
        c.sort();
        c.dedup();
        c
    }

    /// Rows at the given indices, in that order.
    pub fn subset(&self, idx: &[usize]) -> FeatureTable {
        FeatureTable {
            columns: self.columns.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        let mut header: Vec<&str> = self.columns.iter().map(|k| k.as_str()).collect();
        header.extend(["label", "subject_id"]);
        writeln!(w, "{}", header.join(","))?;
        for r in &self.rows {
            for v in &r.values {
                write!(w, "{v},")?;
            }
            writeln!(
                w,
                "{},{}",
                r.label.as_deref().unwrap_or(""),
                r.subject_id.as_deref().unwrap_or("")
            )?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<FeatureTable> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_csv(file, path)
    }

    pub fn read_csv(r: impl BufRead, path: &Path) -> Result<FeatureTable> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "empty feature file"))?;
        let header = header?;
        let names: Vec<&str> = header.trim().split(',').collect();
        let mut columns = Vec::new();
        let mut label_col = None;
        let mut subject_col = None;
        for (i, name) in names.iter().enumerate() {
            match *name {
                "label" => label_col = Some(i),
                "subject_id" => subject_col = Some(i),
                other => columns.push(
                    other
                        .parse::<FeatureKind>()
                        .map_err(|e| Error::parse(path, 1, e.to_string()))?,
                ),
            }
        }
        let feature_cols: Vec<usize> = (0..names.len())
            .filter(|&i| Some(i) != label_col && Some(i) != subject_col)
            .collect();
        let mut table =
            FeatureTable::new(columns).map_err(|e| Error::parse(path, 1, e.to_string()))?;
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            if fields.len() != names.len() {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("expected {} fields, found {}", names.len(), fields.len()),
                ));
            }
            let values = feature_cols
                .iter()
                .map(|&c| {
                    fields[c]
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::parse(path, i + 1, format!("bad value '{}'", fields[c])))
                })
                .collect::<Result<Vec<f64>>>()?;
            let text = |c: Option<usize>| {
                c.map(|c| fields[c]).filter(|s| !s.is_empty()).map(str::to_string)
            };
            table.rows.push(FeatureRow {
                values,
                label: text(label_col),
                subject_id: text(subject_col),
            });
        }
        Ok(table)
    }
}

/// Feature vectors of every window of one trace.
pub fn featurize_trace(trace: &Trace, size: usize) -> Result<Vec<FeatureVector>> {
    Ok(window_trace(trace, size)?.iter().map(compute_features).collect())
}

/// Windowed features of all traces, concatenated in input order.
pub fn featurize_dataset(
    traces: &[Trace],
    size: usize,
    selected: &[FeatureKind],
    exec: Exec,
) -> Result<FeatureTable> {
    let mut columns = selected.to_vec();
    columns.sort();
    columns.dedup();
    let mut table = FeatureTable::new(columns)?;
    let first = traces.first().ok_or_else(|| invalid!("no traces to featurize"))?;
    if let Some(t) = traces.iter().find(|t| t.sample_rate() != first.sample_rate()) {
        return Err(invalid!(
            "mixed sample rates: {} Hz and {} Hz",
            first.sample_rate(),
            t.sample_rate()
        ));
    }
    for vectors in exec.try_map(traces, |t| featurize_trace(t, size))? {
        for v in &vectors {
            table.push_vector(v);
        }
    }
    Ok(table)
}
