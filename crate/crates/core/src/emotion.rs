//! Gesture-to-emotion mapping and alert aggregation over prediction streams.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::trace::GestureLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EmotionLabel {
    Neutral,
    Anger,
    Fear,
    Happy,
    Sad,
}

impl EmotionLabel {
    pub const ALL: [EmotionLabel; 5] = [
        EmotionLabel::Neutral,
        EmotionLabel::Anger,
        EmotionLabel::Fear,
        EmotionLabel::Happy,
        EmotionLabel::Sad,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EmotionLabel::Neutral => "neutral",
            EmotionLabel::Anger => "anger",
            EmotionLabel::Fear => "fear",
            EmotionLabel::Happy => "happy",
            EmotionLabel::Sad => "sad",
        }
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Accepts emotion names (`anger`, `angry`, ...) and gesture names, which are
/// mapped through [`map_gesture`].
impl FromStr for EmotionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let direct = match key.as_str() {
            "neutral" => Some(EmotionLabel::Neutral),
            "anger" | "angry" => Some(EmotionLabel::Anger),
            "fear" => Some(EmotionLabel::Fear),
            "happy" | "happiness" => Some(EmotionLabel::Happy),
            "sad" | "sadness" => Some(EmotionLabel::Sad),
            _ => None,
        };
        match direct {
            Some(e) => Ok(e),
            None => s
                .parse::<GestureLabel>()
                .map(map_gesture)
                .map_err(|_| invalid!("unknown emotion or gesture '{s}'")),
        }
    }
}

pub fn map_gesture(g: GestureLabel) -> EmotionLabel {
    match g {
        GestureLabel::HandsDown | GestureLabel::NeutralDriving | GestureLabel::NeutralConversation => {
            EmotionLabel::Neutral
        }
        GestureLabel::HandsUp => EmotionLabel::Fear,
        GestureLabel::Clapping => EmotionLabel::Happy,
        GestureLabel::AngryDriving | GestureLabel::AngryConversation => EmotionLabel::Anger,
    }
}

/// Per-window emotions at a fixed period.
#[derive(Debug, Clone, PartialEq)]
pub struct EmotionStream {
    entries: Vec<(f64, EmotionLabel)>,
    period: f64,
}

impl EmotionStream {
    /// Timestamps must be finite, strictly increasing and spaced by `period`
    /// (to one part in a million).
    pub fn new(entries: Vec<(f64, EmotionLabel)>, period: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(invalid!("window period must be positive, got {period}"));
        }
        for (i, &(t, _)) in entries.iter().enumerate() {
            if !t.is_finite() {
                return Err(invalid!("timestamp {i} is not finite"));
            }
        }
        for (i, pair) in entries.windows(2).enumerate() {
            let step = pair[1].0 - pair[0].0;
            if (step - period).abs() > 1e-6 * period {
                return Err(invalid!(
                    "entries {i} and {} are {step} s apart, expected {period} s",
                    i + 1
                ));
            }
        }
        Ok(EmotionStream { entries, period })
    }

    /// Labels at `start, start + period, ...`.
    pub fn from_labels(start: f64, period: f64, labels: &[EmotionLabel]) -> Result<Self> {
        let entries = labels
            .iter()
            .enumerate()
            .map(|(i, &e)| (start + i as f64 * period, e))
            .collect();
        Self::new(entries, period)
    }

    pub fn entries(&self) -> &[(f64, EmotionLabel)] {
        &self.entries
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Reads `time_s,label` rows (optional header). The period is taken from
    /// the first two timestamps, or `default_period` for a single row.
    pub fn read_csv(r: impl BufRead, path: &Path, default_period: f64) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (t, label) = line
                .split_once(',')
                .ok_or_else(|| Error::parse(path, i + 1, "expected 'time_s,label'"))?;
            let t: f64 = match t.trim().parse() {
                Ok(t) => t,
                Err(_) if entries.is_empty() && i == 0 => continue,
                Err(_) => return Err(Error::parse(path, i + 1, format!("bad timestamp '{t}'"))),
            };
            let label = label
                .trim()
                .parse::<EmotionLabel>()
                .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
            entries.push((t, label));
        }
        let period = match entries.as_slice() {
            [a, b, ..] => b.0 - a.0,
            _ => default_period,
        };
        Self::new(entries, period).map_err(|e| Error::parse(path, 0, e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlertPolicy {
    /// Minimum run length in seconds.
    pub sustain_threshold: f64,
    /// Qualifying runs per hour that trigger a repeated-episode alert.
    pub episode_count_threshold: usize,
    /// Longest interruption (seconds) that does not break a run.
    pub gap_tolerance: f64,
}

impl Default for AlertPolicy {
    fn default() -> Self {
        AlertPolicy {
            sustain_threshold: 300.0,
            episode_count_threshold: 3,
            gap_tolerance: 10.0,
        }
    }
}

impl AlertPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.sustain_threshold > 0.0 && self.gap_tolerance > 0.0 && self.episode_count_threshold > 0)
            || !self.sustain_threshold.is_finite()
            || !self.gap_tolerance.is_finite()
        {
            return Err(invalid!("alert policy values must all be positive: {self:?}"));
        }
        Ok(())
    }
}

/// Span over which repeated episodes are counted.
pub const EPISODE_WINDOW_S: f64 = 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AlertKind {
    Sustained,
    Repeated,
}

impl AlertKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AlertKind::Sustained => "sustained",
            AlertKind::Repeated => "repeated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alert {
    pub start: f64,
    pub end: f64,
    pub emotion: EmotionLabel,
    pub kind: AlertKind,
}

/// Maximal runs of `emotion`, bridging interruptions up to the tolerance.
/// Each run is `(start, end)` with `end = last timestamp + period`.
fn runs(stream: &EmotionStream, emotion: EmotionLabel, tolerance: f64) -> Vec<(f64, f64)> {
    let p = stream.period;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &(t, e) in &stream.entries {
        if e != emotion {
            continue;
        }
        match out.last_mut() {
            Some(run) if t - run.1 <= tolerance + 1e-9 * p => run.1 = t + p,
            _ => out.push((t, t + p)),
        }
    }
    out
}

/// Sustained alerts for every run of a non-neutral emotion lasting at least
/// the sustain threshold, plus a repeated-episode alert wherever enough such
/// runs start within one hour. Overlapping repeated-episode spans are merged.
pub fn aggregate(stream: &EmotionStream, policy: &AlertPolicy) -> Result<Vec<Alert>> {
    policy.validate()?;
    let mut alerts = Vec::new();
    for emotion in EmotionLabel::ALL.into_iter().filter(|&e| e != EmotionLabel::Neutral) {
        let qualifying: Vec<(f64, f64)> = runs(stream, emotion, policy.gap_tolerance)
            .into_iter()
            .filter(|(s, e)| e - s >= policy.sustain_threshold - 1e-9 * stream.period)
            .collect();
        for &(start, end) in &qualifying {
            alerts.push(Alert { start, end, emotion, kind: AlertKind::Sustained });
        }
        let need = policy.episode_count_threshold;
        let mut spans: Vec<(f64, f64)> = Vec::new();
        for i in 0..qualifying.len() {
            let j = i + need - 1;
            if j >= qualifying.len() || qualifying[j].0 - qualifying[i].0 > EPISODE_WINDOW_S {
                continue;
            }
            let span = (qualifying[i].0, qualifying[j].1);
            match spans.last_mut() {
                Some(last) if span.0 <= last.1 => last.1 = last.1.max(span.1),
                _ => spans.push(span),
            }
        }
        for (start, end) in spans {
            alerts.push(Alert { start, end, emotion, kind: AlertKind::Repeated });
        }
    }
    alerts.sort_by(|a, b| {
        a.start
            .total_cmp(&b.start)
            .then(a.kind.cmp(&b.kind))
            .then(a.emotion.cmp(&b.emotion))
    });
    Ok(alerts)
}

pub fn write_alerts_csv(alerts: &[Alert], w: &mut impl Write) -> Result<()> {
    writeln!(w, "start_s,end_s,emotion,kind")?;
    for a in alerts {
        writeln!(w, "{},{},{},{}", a.start, a.end, a.emotion, a.kind.as_str())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const P: f64 = 0.1;

    fn stream(parts: &[(EmotionLabel, f64)]) -> EmotionStream {
        let mut labels = Vec::new();
        for &(e, secs) in parts {
            labels.extend(std::iter::repeat_n(e, (secs / P).round() as usize));
        }
        EmotionStream::from_labels(0.0, P, &labels).unwrap()
    }

    use EmotionLabel::{Anger, Neutral};

    fn sustained(a: &[Alert]) -> usize {
        a.iter().filter(|a| a.kind == AlertKind::Sustained).count()
    }

    #[test]
    fn mapping() {
        assert_eq!(map_gesture(GestureLabel::Clapping), EmotionLabel::Happy);
        assert_eq!(map_gesture(GestureLabel::HandsUp), EmotionLabel::Fear);
        assert_eq!(map_gesture(GestureLabel::HandsDown), Neutral);
        assert_eq!(map_gesture(GestureLabel::AngryDriving), Anger);
        assert_eq!(map_gesture(GestureLabel::NeutralConversation), Neutral);
        assert_eq!("angrydriving".parse::<EmotionLabel>().unwrap(), Anger);
        assert_eq!("Angry".parse::<EmotionLabel>().unwrap(), Anger);
        assert!("joy".parse::<EmotionLabel>().is_err());
    }

    #[test]
    fn six_minutes_one_alert() {
        let a = aggregate(&stream(&[(Neutral, 30.0), (Anger, 360.0), (Neutral, 30.0)]), &AlertPolicy::default()).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].emotion, Anger);
        assert!((a[0].start - 30.0).abs() < 1e-9 && (a[0].end - 390.0).abs() < 1e-6);
    }

    #[test]
    fn four_minutes_no_alert() {
        let a = aggregate(&stream(&[(Anger, 240.0), (Neutral, 100.0)]), &AlertPolicy::default()).unwrap();
        assert!(a.is_empty());
    }

    #[test]
    fn short_blip_bridged() {
        // 150 s + 8 s neutral + 150 s: run spans 308 s.
        let s = stream(&[(Anger, 150.0), (Neutral, 8.0), (Anger, 150.0)]);
        let a = aggregate(&s, &AlertPolicy::default()).unwrap();
        assert_eq!(a.len(), 1);
        assert!((a[0].end - a[0].start - 308.0).abs() < 1e-6);
        // A 20 s gap splits it into two sub-threshold runs.
        let s = stream(&[(Anger, 150.0), (Neutral, 20.0), (Anger, 150.0)]);
        assert!(aggregate(&s, &AlertPolicy::default()).unwrap().is_empty());
    }

    #[test]
    fn three_runs_in_an_hour() {
        let s = stream(&[
            (Anger, 310.0),
            (Neutral, 600.0),
            (Anger, 310.0),
            (Neutral, 600.0),
            (Anger, 310.0),
            (Neutral, 60.0),
        ]);
        let a = aggregate(&s, &AlertPolicy::default()).unwrap();
        assert_eq!(sustained(&a), 3);
        let rep: Vec<&Alert> = a.iter().filter(|a| a.kind == AlertKind::Repeated).collect();
        assert_eq!(rep.len(), 1);
        assert!((rep[0].start - 0.0).abs() < 1e-9);
        assert!((rep[0].end - 2130.0).abs() < 1e-6);

        // Spread over more than an hour: no repeated alert.
        let s = stream(&[(Anger, 310.0), (Neutral, 1800.0), (Anger, 310.0), (Neutral, 1800.0), (Anger, 310.0)]);
        let a = aggregate(&s, &AlertPolicy::default()).unwrap();
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn neutral_never_alerts() {
        let a = aggregate(&stream(&[(Neutral, 4000.0)]), &AlertPolicy::default()).unwrap();
        assert!(a.is_empty());
    }

    #[test]
    fn stream_validation() {
        assert!(EmotionStream::new(vec![(0.0, Anger), (0.0, Anger)], P).is_err());
        assert!(EmotionStream::new(vec![(0.0, Anger), (0.3, Anger)], P).is_err());
        assert!(EmotionStream::new(vec![], 0.0).is_err());
        assert!(EmotionStream::new(vec![], P).is_ok());
    }

    #[test]
    fn csv_io() {
        let text = "time_s,label\n0,neutral\n0.5,angrydriving\n1,anger\n";
        let s = EmotionStream::read_csv(text.as_bytes(), Path::new("s"), 0.1).unwrap();
        assert_eq!(s.period(), 0.5);
        assert_eq!(s.entries()[1].1, Anger);
        let mut buf = Vec::new();
        write_alerts_csv(
            &[Alert { start: 1.0, end: 400.5, emotion: Anger, kind: AlertKind::Sustained }],
            &mut buf,
        )
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "start_s,end_s,emotion,kind\n1,400.5,anger,sustained\n");
        let bad = "0,neutral\nx,anger\n";
        assert!(matches!(EmotionStream::read_csv(bad.as_bytes(), Path::new("s"), 0.1), Err(Error::Parse { line: 2, .. })));
    }

    fn arb_labels() -> impl Strategy<Value = Vec<EmotionLabel>> {
        // runs of 0..600 s at 1 s resolution, alternating anger/neutral/fear
        proptest::collection::vec((0usize..3, 1usize..600), 1..12).prop_map(|runs| {
            runs.into_iter()
                .flat_map(|(e, n)| std::iter::repeat_n([Neutral, Anger, EmotionLabel::Fear][e], n))
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn shift_equivariance(labels in arb_labels(), shift in -5000i32..5000) {
            let a = aggregate(&EmotionStream::from_labels(0.0, 1.0, &labels).unwrap(), &AlertPolicy::default()).unwrap();
            let b = aggregate(&EmotionStream::from_labels(shift as f64, 1.0, &labels).unwrap(), &AlertPolicy::default()).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert_eq!((x.emotion, x.kind), (y.emotion, y.kind));
                prop_assert!((x.start + shift as f64 - y.start).abs() < 1e-6);
                prop_assert!((x.end + shift as f64 - y.end).abs() < 1e-6);
            }
        }

        #[test]
        fn disjoint_ordered_never_neutral(labels in arb_labels()) {
            let a = aggregate(&EmotionStream::from_labels(0.0, 1.0, &labels).unwrap(), &AlertPolicy::default()).unwrap();
            prop_assert!(a.iter().all(|x| x.emotion != Neutral));
            prop_assert!(a.windows(2).all(|w| w[0].start <= w[1].start));
            for e in [Anger, EmotionLabel::Fear] {
                for kind in [AlertKind::Sustained, AlertKind::Repeated] {
                    let same: Vec<&Alert> = a.iter().filter(|x| x.emotion == e && x.kind == kind).collect();
                    prop_assert!(same.windows(2).all(|w| w[0].end <= w[1].start));
                }
            }
        }

        /// Extending the final anger run can only lengthen it (nothing
        /// follows it to merge with), so alert counts never drop.
        #[test]
        fn lengthening_is_monotone(labels in arb_labels(), extra in 1usize..400) {
            let mut labels = labels;
            labels.push(Anger);
            let before = aggregate(&EmotionStream::from_labels(0.0, 1.0, &labels).unwrap(), &AlertPolicy::default()).unwrap();
            labels.extend(std::iter::repeat_n(Anger, extra));
            let after = aggregate(&EmotionStream::from_labels(0.0, 1.0, &labels).unwrap(), &AlertPolicy::default()).unwrap();
            prop_assert!(after.len() >= before.len());
        }

        /// Growing a run in the middle without closing a gap to its
        /// neighbours keeps every sustained alert.
        #[test]
        fn lengthening_isolated_run(pre in 11usize..400, len in 1usize..600, extra in 1usize..400) {
            let mut labels = vec![Neutral; pre];
            labels.extend(std::iter::repeat_n(Anger, len));
            labels.extend(std::iter::repeat_n(Neutral, 50));
            let before = aggregate(&EmotionStream::from_labels(0.0, 1.0, &labels).unwrap(), &AlertPolicy::default()).unwrap();
            let mut longer = vec![Neutral; pre];
            longer.extend(std::iter::repeat_n(Anger, len + extra));
            longer.extend(std::iter::repeat_n(Neutral, 50));
            let after = aggregate(&EmotionStream::from_labels(0.0, 1.0, &longer).unwrap(), &AlertPolicy::default()).unwrap();
            prop_assert!(sustained(&after) >= sustained(&before));
        }
    }
}
