//! z-scored k-nearest-neighbour classifier.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::features::{FeatureKind, FeatureRow, FeatureTable, FeatureVector};

/// Added to distances so an exact duplicate gets a large but finite weight.
pub const DISTANCE_EPS: f64 = 1e-12;
const MAGIC: &str = "rfdfar-knn v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    Uniform,
    #[default]
    InverseDistance,
}

impl Weighting {
    pub fn as_str(self) -> &'static str {
        match self {
            Weighting::Uniform => "uniform",
            Weighting::InverseDistance => "inverse",
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "uniform" => Ok(Weighting::Uniform),
            "inverse" | "inverse_distance" | "distance" => Ok(Weighting::InverseDistance),
            _ => Err(invalid!("unknown weighting '{s}' (expected uniform or inverse)")),
        }
    }
}

/// A fitted classifier. Immutable; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    k: usize,
    weighting: Weighting,
    /// Columns expected in a query, in order.
    columns: Vec<FeatureKind>,
    /// Indices into `columns` that survived the zero-variance filter.
    kept: Vec<usize>,
    means: Vec<f64>,
    stds: Vec<f64>,
    /// Normalised training points over `kept`, row-major.
    points: Vec<f64>,
    labels: Vec<String>,
    raw: Vec<Vec<f64>>,
}

/// Winning class and the vote each class received.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: String,
    /// Sorted by label; classes without neighbours are absent.
    pub scores: Vec<(String, f64)>,
}

/// Fits z-score normalisation and stores the training rows.
pub fn fit(table: &FeatureTable, k: usize, weighting: Weighting) -> Result<KnnModel> {
    if k == 0 {
        return Err(Error::InvalidTrainingSet("k must be at least 1".into()));
    }
    let n = table.rows.len();
    if k > n {
        return Err(Error::InvalidTrainingSet(format!("k={k} exceeds the {n} training rows")));
    }
    let mut labels = Vec::with_capacity(n);
    for (i, r) in table.rows.iter().enumerate() {
        let label = r
            .label
            .clone()
            .ok_or_else(|| Error::InvalidTrainingSet(format!("row {i} has no label")))?;
        if r.values.len() != table.columns.len() || r.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTrainingSet(format!("row {i} has malformed feature values")));
        }
        labels.push(label);
    }
    if table.classes().len() < 2 {
        return Err(Error::InvalidTrainingSet("need at least two classes".into()));
    }

    let mut kept = Vec::new();
    let mut means = Vec::new();
    let mut stds = Vec::new();
    for (c, kind) in table.columns.iter().enumerate() {
        let mean = table.rows.iter().map(|r| r.values[c]).sum::<f64>() / n as f64;
        let var = table.rows.iter().map(|r| (r.values[c] - mean).powi(2)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        if std > 0.0 && std.is_finite() {
            kept.push(c);
            means.push(mean);
            stds.push(std);
        } else {
            log::warn!("feature '{kind}' has zero variance in the training set and is ignored");
        }
    }
    if kept.is_empty() {
        return Err(Error::InvalidTrainingSet("every feature has zero variance".into()));
    }
    let mut points = Vec::with_capacity(n * kept.len());
    for r in &table.rows {
        for (j, &c) in kept.iter().enumerate() {
            points.push((r.values[c] - means[j]) / stds[j]);
        }
    }
    Ok(KnnModel {
        k,
        weighting,
        columns: table.columns.clone(),
        kept,
        means,
        stds,
        points,
        labels,
        raw: table.rows.iter().map(|r| r.values.clone()).collect(),
    })
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    pub fn columns(&self) -> &[FeatureKind] {
        &self.columns
    }

    pub fn training_len(&self) -> usize {
        self.labels.len()
    }

    fn normalise(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.columns.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} feature values, got {}",
                self.columns.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "feature '{}' is not finite",
                self.columns[i]
            )));
        }
        Ok(self
            .kept
            .iter()
            .enumerate()
            .map(|(j, &c)| (values[c] - self.means[j]) / self.stds[j])
            .collect())
    }

    /// Classifies one point given in [`KnnModel::columns`] order.
    pub fn predict(&self, values: &[f64]) -> Result<Prediction> {
        let q = self.normalise(values)?;
        let dim = q.len();
        let mut dist: Vec<(f64, usize)> = self
            .points
            .chunks_exact(dim)
            .enumerate()
            .map(|(i, p)| (p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, |a, b| neighbour_order(*a, *b));
            dist.truncate(self.k);
        }
        let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
        for &(d2, i) in &dist {
            let w = match self.weighting {
                Weighting::Uniform => 1.0,
                Weighting::InverseDistance => 1.0 / (d2.sqrt() + DISTANCE_EPS),
            };
            *scores.entry(self.labels[i].as_str()).or_insert(0.0) += w;
        }
        let mut best: Option<(&str, f64)> = None;
        for (&label, &s) in &scores {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((label, s));
            }
        }
        let (label, _) = best.expect("k >= 1 neighbours");
        Ok(Prediction {
            label: label.to_string(),
            scores: scores.into_iter().map(|(l, s)| (l.to_string(), s)).collect(),
        })
    }

    pub fn predict_vector(&self, v: &FeatureVector) -> Result<Prediction> {
        let values: Vec<f64> = self.columns.iter().map(|&k| v.get(k)).collect();
        self.predict(&values)
    }

    pub fn predict_row(&self, row: &FeatureRow) -> Result<Prediction> {
        self.predict(&row.values)
    }

    /// Predicts every row of a table whose columns may be a superset of the
    /// model's.
    pub fn predict_table(&self, table: &FeatureTable) -> Result<Vec<Prediction>> {
        let idx = self
            .columns
            .iter()
            .map(|k| {
                table
                    .columns
                    .iter()
                    .position(|c| c == k)
                    .ok_or_else(|| Error::InvalidInput(format!("feature table lacks column '{k}'")))
            })
            .collect::<Result<Vec<usize>>>()?;
        table
            .rows
            .iter()
            .map(|r| self.predict(&idx.iter().map(|&i| r.values[i]).collect::<Vec<_>>()))
            .collect()
    }

    /// Self-describing text model: header lines, then raw training rows.
    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let names = |idx: &mut dyn Iterator<Item = FeatureKind>| {
            idx.map(|k| k.as_str()).collect::<Vec<_>>().join(",")
        };
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "k {}", self.k)?;
        writeln!(w, "weighting {}", self.weighting)?;
        writeln!(w, "features {}", names(&mut self.columns.iter().copied()))?;
        writeln!(w, "normalized {}", names(&mut self.kept.iter().map(|&c| self.columns[c])))?;
        writeln!(w, "norm_mean {}", join(&self.means))?;
        writeln!(w, "norm_std {}", join(&self.stds))?;
        writeln!(w, "rows {}", self.labels.len())?;
        for (r, l) in self.raw.iter().zip(&self.labels) {
            writeln!(w, "{},{l}", join(r))?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<KnnModel> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?), path)
    }

    /// Parses a model file and refits it from the stored rows. The stored
    /// normalisation constants must match the refit exactly.
    pub fn read(r: impl BufRead, path: &Path) -> Result<KnnModel> {
        let lines: Vec<String> = r.lines().collect::<std::io::Result<_>>()?;
        let err = |line: usize, msg: String| Error::parse(path, line, msg);
        let field = |i: usize, key: &str| -> Result<&str> {
            let line = lines.get(i).ok_or_else(|| err(i + 1, format!("missing '{key}' line")))?;
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .ok_or_else(|| err(i + 1, format!("expected '{key} ...'")))
        };
        if lines.first().map(String::as_str) != Some(MAGIC) {
            return Err(err(1, format!("not a model file (expected '{MAGIC}')")));
        }
        let k: usize = field(1, "k")?.parse().map_err(|_| err(2, "bad k".into()))?;
        let weighting: Weighting = field(2, "weighting")?.parse().map_err(|e: Error| err(3, e.to_string()))?;
        let columns = field(3, "features")?
            .split(',')
            .map(str::parse)
            .collect::<Result<Vec<FeatureKind>>>()
            .map_err(|e| err(4, e.to_string()))?;
        let floats = |i: usize, key: &str| -> Result<Vec<f64>> {
            let s = field(i, key)?;
            s.split(',')
                .map(|x| x.parse::<f64>().map_err(|_| err(i + 1, format!("bad number '{x}'"))))
                .collect()
        };
        let means = floats(5, "norm_mean")?;
        let stds = floats(6, "norm_std")?;
        let n: usize = field(7, "rows")?.parse().map_err(|_| err(8, "bad row count".into()))?;
        let mut table = FeatureTable::new(columns).map_err(|e| err(4, e.to_string()))?;
        for (i, line) in lines.iter().enumerate().skip(8) {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let (values, label) = line.rsplit_once(',').ok_or_else(|| err(i + 1, "missing label".into()))?;
            let values = values
                .split(',')
                .map(|x| x.parse::<f64>().map_err(|_| err(i + 1, format!("bad number '{x}'"))))
                .collect::<Result<Vec<f64>>>()?;
            table.rows.push(FeatureRow {
                values,
                label: Some(label.to_string()),
                subject_id: None,
            });
        }
        if table.rows.len() != n {
            return Err(err(8, format!("header says {n} rows, found {}", table.rows.len())));
        }
        let model = fit(&table, k, weighting)?;
        if model.means != means || model.stds != stds {
            return Err(err(6, "normalisation constants do not match the stored rows".into()));
        }
        Ok(model)
    }
}

/// Total order used for neighbour selection: distance, then row index.
pub fn neighbour_order(a: (f64, usize), b: (f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}
