//! End-to-end experiments: SNR sweeps and the driving / conversation
//! scenarios.
//!
//! Every cell runs generate, degrade, preprocess, featurize and
//! cross-validate, and is a pure function of its spec.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{
    dataset_keys, environment_snr, generate_trace, subject_id, ChannelConfig, DatasetConfig, Environment,
    EnvironmentProfile, GestureEnvelopeSpec, NoiseReference, TraceKey,
};
use crate::cv::{kfold_cv, loso_cv, metrics, ConfusionMatrix, Metrics};
use crate::error::{invalid, Error, Result};
use crate::exec::Exec;
use crate::features::{featurize_trace, parse_feature_list, FeatureKind, FeatureTable, FeatureVector};
use crate::knn::Weighting;
use crate::preprocess::{preprocess, PreprocessConfig};
use crate::trace::GestureLabel;
use crate::units::SnrDb;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Sweep configuration. Deserialises from a flat TOML table; every key is
/// optional and falls back to [`SweepSpec::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    /// Target SNRs in dB; `inf` means noiseless.
    pub snr_grid: Vec<f64>,
    pub gesture_sets: Vec<Vec<GestureLabel>>,
    pub subjects: usize,
    pub repetitions: usize,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub tone_hz: f64,
    pub window_size: usize,
    pub features: Vec<String>,
    pub folds: usize,
    pub k: usize,
    pub weighting: String,
    pub levels: usize,
    pub smooth_len: usize,
    /// Relative spread of per-subject envelope factors.
    pub subject_spread: f64,
    pub floor_jitter_db: f64,
    pub floor_block_s: f64,
    /// When set, cells are indexed by distance and the SNR comes from the
    /// environment's measured profile instead of `snr_grid`.
    pub environment: Option<String>,
    pub distances_m: Vec<f64>,
    pub seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            snr_grid: vec![59.0, 42.0, 22.0, 12.0, 2.0, 0.0],
            gesture_sets: vec![
                vec![GestureLabel::HandsDown, GestureLabel::HandsUp],
                vec![GestureLabel::HandsDown, GestureLabel::HandsUp, GestureLabel::Clapping],
            ],
            subjects: 5,
            repetitions: 5,
            duration_s: 1.0,
            sample_rate_hz: crate::channel::DEFAULT_SAMPLE_RATE,
            tone_hz: crate::channel::DEFAULT_TONE_FREQ,
            window_size: crate::features::DEFAULT_WINDOW,
            features: FeatureKind::DEFAULT.iter().map(|k| k.as_str().to_string()).collect(),
            folds: 10,
            k: 6,
            weighting: Weighting::InverseDistance.as_str().to_string(),
            levels: crate::preprocess::DEFAULT_LEVELS,
            smooth_len: crate::preprocess::DEFAULT_SMOOTH_LEN,
            subject_spread: 0.15,
            floor_jitter_db: ChannelConfig::default().floor_jitter_db,
            floor_block_s: ChannelConfig::default().floor_block,
            environment: None,
            distances_m: Vec::new(),
            seed: 42,
        }
    }
}

/// A sweep grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub snr: SnrDb,
    pub distance_m: Option<f64>,
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| invalid!("bad sweep spec: {e}"))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str::<SweepSpec>(&text)
            .map_err(|e| Error::parse(path, 0, e.to_string()))
            .and_then(|s| s.validate().map(|_| s))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("sweep spec is always representable as TOML")
    }

    pub fn feature_kinds(&self) -> Result<Vec<FeatureKind>> {
        parse_feature_list(&self.features.join(","))
    }

    pub fn weighting(&self) -> Result<Weighting> {
        self.weighting.parse()
    }

    pub fn channel(&self) -> ChannelConfig {
        ChannelConfig {
            reference: NoiseReference::Fixed(0.5),
            floor_jitter_db: self.floor_jitter_db,
            floor_block: self.floor_block_s,
        }
    }

    pub fn preprocess_config(&self) -> PreprocessConfig {
        PreprocessConfig {
            levels: self.levels,
            smooth_len: self.smooth_len,
            detect_amplitude: true,
        }
    }

    /// Windows each trace yields.
    pub fn windows_per_trace(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize / self.window_size.max(1)
    }

    /// Grid points in report order.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        match &self.environment {
            Some(name) => {
                let profile = EnvironmentProfile::measured(name.parse::<Environment>()?);
                self.distances_m
                    .iter()
                    .map(|&d| {
                        Ok(SweepPoint {
                            snr: environment_snr(&profile, d)?,
                            distance_m: Some(d),
                        })
                    })
                    .collect()
            }
            None => self
                .snr_grid
                .iter()
                .map(|&s| Ok(SweepPoint { snr: SnrDb::new(s)?, distance_m: None }))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.environment.is_some() {
            if self.distances_m.is_empty() {
                return Err(invalid!("an environment sweep needs at least one distance"));
            }
        } else if self.snr_grid.is_empty() {
            return Err(invalid!("snr_grid is empty"));
        }
        self.points()?;
        if self.gesture_sets.is_empty() {
            return Err(invalid!("no gesture sets"));
        }
        for set in &self.gesture_sets {
            let mut s = set.clone();
            s.sort();
            s.dedup();
            if s.len() < 2 || s.len() != set.len() {
                return Err(invalid!("gesture set {} needs two or more distinct gestures", set_name(set)));
            }
        }
        self.feature_kinds()?;
        self.weighting()?;
        if self.subjects == 0 || self.repetitions == 0 {
            return Err(invalid!("subjects and repetitions must be positive"));
        }
        if !(self.subject_spread >= 0.0 && self.subject_spread < 1.0) {
            return Err(invalid!("subject_spread must be in [0, 1), got {}", self.subject_spread));
        }
        if self.window_size < 2 {
            return Err(invalid!("window_size must be at least 2"));
        }
        if self.k == 0 {
            return Err(invalid!("k must be at least 1"));
        }
        let per_class = self.subjects * self.repetitions * self.windows_per_trace();
        if per_class < self.folds {
            return Err(invalid!(
                "each class yields {per_class} windows, fewer than the {} folds",
                self.folds
            ));
        }
        self.channel().validate()
    }

    fn dataset_config(&self, gestures: &[GestureLabel], snr: SnrDb, exec: Exec) -> DatasetConfig {
        let mut cfg = DatasetConfig::new(
            gestures.iter().map(|&g| GestureEnvelopeSpec::preset(g)).collect(),
            snr,
            self.seed,
        );
        cfg.subjects = self.subjects;
        cfg.repetitions = self.repetitions;
        cfg.duration = self.duration_s;
        cfg.sample_rate = self.sample_rate_hz;
        cfg.tone_freq = self.tone_hz;
        cfg.channel = self.channel();
        cfg.subject_spread = self.subject_spread;
        cfg.exec = exec;
        cfg
    }
}

/// `handsdown+handsup`.
pub fn set_name(set: &[GestureLabel]) -> String {
    set.iter().map(|g| g.as_str()).collect::<Vec<_>>().join("+")
}

/// Generates, preprocesses and featurizes every trace of `cfg`. The result
/// is indexed like [`dataset_keys`].
pub fn dataset_features(
    cfg: &DatasetConfig,
    pre: &PreprocessConfig,
    window: usize,
) -> Result<Vec<Vec<FeatureVector>>> {
    let keys = dataset_keys(cfg);
    cfg.exec.try_map(&keys, |&key| {
        let trace = generate_trace(cfg, key)?;
        // the transform itself runs sequentially; traces are the parallel unit
        let clean = preprocess(&trace, pre, Exec::Sequential)?;
        featurize_trace(&clean, window)
    })
}

/// Feature table of the given dataset, rows in dataset order.
pub fn dataset_table(
    cfg: &DatasetConfig,
    pre: &PreprocessConfig,
    window: usize,
    columns: &[FeatureKind],
) -> Result<FeatureTable> {
    let mut table = FeatureTable::new(columns.to_vec())?;
    for vectors in dataset_features(cfg, pre, window)? {
        for v in &vectors {
            table.push_vector(v);
        }
    }
    Ok(table)
}

/// One cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr: SnrDb,
    pub distance_m: Option<f64>,
    pub gesture_set: Vec<GestureLabel>,
    pub accuracy: f64,
    /// Class names in the order of `precision` and `recall`.
    pub classes: Vec<String>,
    pub precision: Vec<Option<f64>>,
    pub recall: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub spec: SweepSpec,
    pub tool_version: String,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Accuracy of the cell with this SNR and gesture set.
    pub fn accuracy(&self, snr: f64, set: &[GestureLabel]) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.snr.value() == snr && r.gesture_set == set)
            .map(|r| r.accuracy)
    }
}

/// Runs every (point, gesture set) cell. Traces shared between gesture sets
/// at one grid point are generated once.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    run_sweep_with(spec, Exec::default())
}

pub fn run_sweep_with(spec: &SweepSpec, exec: Exec) -> Result<SweepReport> {
    spec.validate()?;
    let points = spec.points()?;
    let columns = spec.feature_kinds()?;
    let weighting = spec.weighting()?;
    let pre = spec.preprocess_config();

    let mut union: Vec<GestureLabel> = spec.gesture_sets.iter().flatten().copied().collect();
    union.sort();
    union.dedup();

    let per_point = exec.try_map(&points, |point| -> Result<Vec<SweepRow>> {
        let cell_err = |set: &[GestureLabel]| {
            let name = set_name(set);
            move |e: Error| Error::Cell {
                snr_db: point.snr.value(),
                gesture_set: name,
                source: Box::new(e),
            }
        };
        let cfg = spec.dataset_config(&union, point.snr, exec);
        let features = dataset_features(&cfg, &pre, spec.window_size).map_err(cell_err(&union))?;
        let lookup = |key: TraceKey| &features[(key.subject * cfg.repetitions + key.repetition) * union.len() + key.gesture];

        spec.gesture_sets
            .iter()
            .map(|set| {
                let mut table = FeatureTable::new(columns.clone()).map_err(cell_err(set))?;
                let set_cfg = spec.dataset_config(set, point.snr, exec);
                for key in dataset_keys(&set_cfg) {
                    let g = union.iter().position(|&u| u == set[key.gesture]).expect("set is in union");
                    for v in lookup(TraceKey { gesture: g, ..key }) {
                        table.push_vector(v);
                    }
                }
                let cm = kfold_cv(&table, spec.folds, spec.k, weighting, spec.seed, exec).map_err(cell_err(set))?;
                let m = metrics(&cm).map_err(cell_err(set))?;
                Ok(SweepRow {
                    snr: point.snr,
                    distance_m: point.distance_m,
                    gesture_set: set.clone(),
                    accuracy: m.accuracy,
                    classes: cm.classes,
                    precision: m.precision,
                    recall: m.recall,
                })
            })
            .collect()
    })?;
    Ok(SweepReport {
        spec: spec.clone(),
        tool_version: TOOL_VERSION.to_string(),
        rows: per_point.into_iter().flatten().collect(),
    })
}

const SWEEP_HEADER: &str = "snr_db,distance_m,gesture_set,accuracy,precision,recall";
const SPEC_PREFIX: &str = "# spec: ";

fn fmt_ratios(classes: &[String], values: &[Option<f64>]) -> String {
    classes
        .iter()
        .zip(values)
        .map(|(c, v)| match v {
            Some(v) => format!("{c}={v}"),
            None => format!("{c}=NA"),
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn parse_ratios(s: &str) -> Option<(Vec<String>, Vec<Option<f64>>)> {
    let mut classes = Vec::new();
    let mut values = Vec::new();
    for part in s.split(';').filter(|p| !p.is_empty()) {
        let (c, v) = part.split_once('=')?;
        classes.push(c.to_string());
        values.push(if v == "NA" { None } else { Some(v.parse().ok()?) });
    }
    Some((classes, values))
}

/// CSV with the full spec as commented TOML above the header row.
pub fn write_report(report: &SweepReport, w: &mut impl Write) -> Result<()> {
    writeln!(w, "# rfdfar sweep report")?;
    writeln!(w, "# tool_version: {}", report.tool_version)?;
    for line in report.spec.to_toml().lines() {
        writeln!(w, "{SPEC_PREFIX}{line}")?;
    }
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in &report.rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.snr,
            r.distance_m.map(|d| d.to_string()).unwrap_or_default(),
            set_name(&r.gesture_set),
            r.accuracy,
            fmt_ratios(&r.classes, &r.precision),
            fmt_ratios(&r.classes, &r.recall),
        )?;
    }
    Ok(())
}

pub fn save_report(report: &SweepReport, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_report(report, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_report(r: impl BufRead, path: &Path) -> Result<SweepReport> {
    let mut spec_text = String::new();
    let mut tool_version = None;
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let ln = i + 1;
        if let Some(s) = line.strip_prefix(SPEC_PREFIX) {
            spec_text.push_str(s);
            spec_text.push('\n');
        } else if let Some(v) = line.strip_prefix("# tool_version: ") {
            tool_version = Some(v.to_string());
        } else if line.starts_with('#') || line.trim().is_empty() {
            continue;
        } else if !seen_header {
            if line != SWEEP_HEADER {
                return Err(Error::parse(path, ln, format!("expected header '{SWEEP_HEADER}'")));
            }
            seen_header = true;
        } else {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::parse(path, ln, "expected 6 fields"));
            }
            let bad = |what: &str| Error::parse(path, ln, format!("bad {what}"));
            let snr = if f[0] == "inf" {
                SnrDb::NOISELESS
            } else {
                f[0].parse().ok().and_then(|v| SnrDb::new(v).ok()).ok_or_else(|| bad("snr_db"))?
            };
            let distance_m = if f[1].is_empty() {
                None
            } else {
                Some(f[1].parse().map_err(|_| bad("distance_m"))?)
            };
            let gesture_set = f[2]
                .split('+')
                .map(str::parse)
                .collect::<Result<Vec<GestureLabel>>>()
                .map_err(|_| bad("gesture_set"))?;
            let accuracy = f[3].parse().map_err(|_| bad("accuracy"))?;
            let (classes, precision) = parse_ratios(f[4]).ok_or_else(|| bad("precision"))?;
            let (classes_r, recall) = parse_ratios(f[5]).ok_or_else(|| bad("recall"))?;
            if classes != classes_r {
                return Err(bad("class lists"));
            }
            rows.push(SweepRow { snr, distance_m, gesture_set, accuracy, classes, precision, recall });
        }
    }
    if !seen_header {
        return Err(Error::parse(path, 0, "missing column header"));
    }
    let spec: SweepSpec = toml::from_str(&spec_text).map_err(|e| Error::parse(path, 0, e.to_string()))?;
    Ok(SweepReport {
        spec,
        tool_version: tool_version.ok_or_else(|| Error::parse(path, 0, "missing tool_version"))?,
        rows,
    })
}

pub fn load_report(path: &Path) -> Result<SweepReport> {
    read_report(std::io::BufReader::new(std::fs::File::open(path)?), path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Driving,
    Conversation2m,
    Conversation5m,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Driving, Scenario::Conversation2m, Scenario::Conversation5m];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Driving => "driving",
            Scenario::Conversation2m => "conversation2m",
            Scenario::Conversation5m => "conversation5m",
        }
    }

    pub fn gestures(self) -> [GestureLabel; 2] {
        match self {
            Scenario::Driving => [GestureLabel::NeutralDriving, GestureLabel::AngryDriving],
            _ => [GestureLabel::NeutralConversation, GestureLabel::AngryConversation],
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == key)
            .ok_or_else(|| invalid!("unknown scenario '{s}' (expected driving, conversation2m or conversation5m)"))
    }
}

/// Neutral-vs-angry experiment settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub subjects: usize,
    pub repetitions: usize,
    pub duration_s: f64,
    pub snr: SnrDb,
    /// Multiplier on event depth; models the weaker body effect further away.
    pub depth_scale: f64,
    pub window_size: usize,
    pub features: Vec<FeatureKind>,
    pub folds: usize,
    pub k: usize,
    pub weighting: Weighting,
    pub preprocess: PreprocessConfig,
    pub channel: ChannelConfig,
    pub subject_spread: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn preset(scenario: Scenario) -> Self {
        let (subjects, repetitions, snr, depth_scale) = match scenario {
            Scenario::Driving => (8, 4, 59.0, 1.0),
            Scenario::Conversation2m => (5, 2, 42.0, 1.0),
            Scenario::Conversation5m => (5, 2, 42.0, 0.85),
        };
        ScenarioSpec {
            scenario,
            subjects,
            repetitions,
            duration_s: 1.0,
            snr: SnrDb::new(snr).expect("finite"),
            depth_scale,
            window_size: crate::features::DEFAULT_WINDOW,
            features: FeatureKind::DEFAULT.to_vec(),
            folds: 10,
            k: 6,
            weighting: Weighting::InverseDistance,
            preprocess: PreprocessConfig::default(),
            channel: ChannelConfig::default(),
            subject_spread: 0.15,
            seed: 42,
        }
    }

    fn dataset_config(&self, exec: Exec) -> DatasetConfig {
        let gestures = self
            .scenario
            .gestures()
            .iter()
            .map(|&g| {
                let mut s = GestureEnvelopeSpec::preset(g);
                s.event_depth = (s.event_depth * self.depth_scale).clamp(0.0, 0.99);
                s
            })
            .collect();
        let mut cfg = DatasetConfig::new(gestures, self.snr, self.seed);
        cfg.subjects = self.subjects;
        cfg.repetitions = self.repetitions;
        cfg.duration = self.duration_s;
        cfg.channel = self.channel;
        cfg.subject_spread = self.subject_spread;
        cfg.exec = exec;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubjectResult {
    pub subject: String,
    /// k-fold accuracy of a model trained on this subject alone.
    pub individual_kfold: f64,
    /// Accuracy on this subject of a model trained on everyone else.
    pub loso: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub snr: SnrDb,
    pub subjects: Vec<SubjectResult>,
    /// k-fold over all subjects pooled together.
    pub pooled_kfold: Metrics,
    pub pooled_kfold_matrix: ConfusionMatrix,
    pub loso_matrix: ConfusionMatrix,
}

impl ScenarioReport {
    pub fn mean_individual_kfold(&self) -> f64 {
        self.subjects.iter().map(|s| s.individual_kfold).sum::<f64>() / self.subjects.len() as f64
    }

    pub fn mean_loso(&self) -> f64 {
        self.subjects.iter().map(|s| s.loso).sum::<f64>() / self.subjects.len() as f64
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "# rfdfar scenario report")?;
        writeln!(w, "# tool_version: {TOOL_VERSION}")?;
        writeln!(w, "# scenario: {}", self.scenario)?;
        writeln!(w, "# snr_db: {}", self.snr)?;
        writeln!(w, "subject,individual_kfold,loso")?;
        for s in &self.subjects {
            writeln!(w, "{},{},{}", s.subject, s.individual_kfold, s.loso)?;
        }
        writeln!(w, "mean,{},{}", self.mean_individual_kfold(), self.mean_loso())?;
        writeln!(w, "pooled,{},{}", self.pooled_kfold.accuracy, metrics(&self.loso_matrix)?.accuracy)?;
        Ok(())
    }
}

/// Individual-subject k-fold, pooled k-fold and leave-one-subject-out
/// accuracy for a neutral-vs-angry scenario.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioReport> {
    run_scenario_with(spec, Exec::default())
}

pub fn run_scenario_with(spec: &ScenarioSpec, exec: Exec) -> Result<ScenarioReport> {
    if spec.subjects < 2 {
        return Err(invalid!("a scenario needs at least two subjects"));
    }
    if !(spec.depth_scale > 0.0 && spec.depth_scale.is_finite()) {
        return Err(invalid!("depth_scale must be positive, got {}", spec.depth_scale));
    }
    let cfg = spec.dataset_config(exec);
    let table = dataset_table(&cfg, &spec.preprocess, spec.window_size, &spec.features)?;

    let pooled_kfold_matrix = kfold_cv(&table, spec.folds, spec.k, spec.weighting, spec.seed, exec)?;
    let loso = loso_cv(&table, spec.k, spec.weighting, exec)?;
    let ids: Vec<String> = (0..spec.subjects).map(subject_id).collect();
    let individual = exec.try_map(&ids, |id| {
        let idx: Vec<usize> = (0..table.len())
            .filter(|&i| table.rows[i].subject_id.as_deref() == Some(id.as_str()))
            .collect();
        let cm = kfold_cv(&table.subset(&idx), spec.folds, spec.k, spec.weighting, spec.seed, Exec::Sequential)?;
        Ok::<f64, Error>(metrics(&cm)?.accuracy)
    })?;
    let mut subjects = Vec::with_capacity(ids.len());
    for (id, kf) in ids.iter().zip(individual) {
        let lo = loso
            .per_subject
            .iter()
            .find(|(s, _)| s == id)
            .map(|(_, a)| *a)
            .ok_or_else(|| invalid!("subject {id} produced no rows"))?;
        subjects.push(SubjectResult { subject: id.clone(), individual_kfold: kf, loso: lo });
    }
    Ok(ScenarioReport {
        scenario: spec.scenario,
        snr: spec.snr,
        subjects,
        pooled_kfold: metrics(&pooled_kfold_matrix)?,
        pooled_kfold_matrix,
        loso_matrix: loso.pooled,
    })
}
