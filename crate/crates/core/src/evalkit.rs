//! Classifier evaluation from prediction logs: confusion matrices,
//! accuracy, per-class precision/recall/F1, grouped breakdowns and
//! confidence gating.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("prediction log line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("record {path:?}: {message}")]
    InvalidRecord { path: String, message: String },
    #[error("record {path:?} has {found} probabilities, expected {expected}")]
    InconsistentClassCount { path: String, expected: usize, found: usize },
    #[error("no records to evaluate")]
    EmptyInput,
    #[error("record {path:?} has no {key} value to group by")]
    MissingGroupKey { path: String, key: &'static str },
}

pub type Result<T> = std::result::Result<T, EvalError>;

const PROB_SUM_TOLERANCE: f64 = 1e-6;

/// One classifier output. `zoom` and `dataset` are optional grouping tags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub path: String,
    pub true_class: usize,
    pub probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zoom: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
}

impl PredictionRecord {
    pub fn new(path: impl Into<String>, true_class: usize, probs: Vec<f64>) -> Self {
        Self { path: path.into(), true_class, probs, zoom: None, dataset: None }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(EvalError::InvalidRecord { path: self.path.clone(), message: m });
        if self.probs.is_empty() {
            return invalid("empty probability vector".into());
        }
        if let Some(p) = self.probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return invalid(format!("probability {p} outside [0, 1]"));
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return invalid(format!("probabilities sum to {sum}"));
        }
        if self.true_class >= self.probs.len() {
            return invalid(format!("true_class {} out of range for {} classes", self.true_class, self.probs.len()));
        }
        Ok(())
    }

    pub fn predicted_class(&self) -> usize {
        predicted_class(&self.probs)
    }

    /// Top probability, read as the model's confidence in its prediction.
    pub fn confidence(&self) -> f64 {
        self.probs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_correct(&self) -> bool {
        self.predicted_class() == self.true_class
    }
}

/// Argmax; ties go to the lowest class index.
pub fn predicted_class(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// A metric that may be undefined (zero denominator). Serializes as a
/// number or the string `"undefined"`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Metric {
    Defined(f64),
    #[serde(deserialize_with = "undefined_marker")]
    Undefined,
}

fn undefined_marker<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<(), D::Error> {
    let s = String::deserialize(d)?;
    if s == "undefined" {
        Ok(())
    } else {
        Err(serde::de::Error::custom("expected \"undefined\""))
    }
}

impl Serialize for Metric {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Metric::Defined(v) => s.serialize_f64(*v),
            Metric::Undefined => s.serialize_str("undefined"),
        }
    }
}

impl Metric {
    pub fn ratio(num: u64, den: u64) -> Metric {
        if den == 0 {
            Metric::Undefined
        } else {
            Metric::Defined(num as f64 / den as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Metric::Defined(v) => Some(v),
            Metric::Undefined => None,
        }
    }

    /// Percentage with one decimal, or `undefined`.
    pub fn percent(self) -> String {
        match self {
            Metric::Defined(v) => format_percent(v),
            Metric::Undefined => "undefined".to_string(),
        }
    }
}

/// `0.5933…` → `"59.3%"`.
pub fn format_percent(fraction: f64) -> String {
    format!("{:.1}%", fraction * 100.0)
}

/// Row = true class, column = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(num_classes: usize) -> Self {
        Self { counts: vec![vec![0; num_classes]; num_classes] }
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes()).map(|i| self.counts[i][i]).sum()
    }

    /// Adds another matrix of the same shape; shards merge this way.
    pub fn merge(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.num_classes(), other.num_classes(), "confusion shapes differ");
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(orow) {
                *c += o;
            }
        }
    }
}

/// Tallies records into a `num_classes`-square matrix.
pub fn confusion(records: &[PredictionRecord], num_classes: usize) -> Result<ConfusionMatrix> {
    let mut m = ConfusionMatrix::zeros(num_classes);
    for r in records {
        if r.probs.len() != num_classes {
            return Err(EvalError::InconsistentClassCount {
                path: r.path.clone(),
                expected: num_classes,
                found: r.probs.len(),
            });
        }
        if r.true_class >= num_classes {
            return Err(EvalError::InvalidRecord {
                path: r.path.clone(),
                message: format!("true_class {} out of range", r.true_class),
            });
        }
        m.counts[r.true_class][r.predicted_class()] += 1;
    }
    Ok(m)
}

/// Class count shared by every record.
pub fn infer_num_classes(records: &[PredictionRecord]) -> Result<usize> {
    let first = records.first().ok_or(EvalError::EmptyInput)?;
    let expected = first.probs.len();
    for r in records {
        if r.probs.len() != expected {
            return Err(EvalError::InconsistentClassCount { path: r.path.clone(), expected, found: r.probs.len() });
        }
    }
    Ok(expected)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub n: u64,
    pub correct: u64,
    pub accuracy: f64,
    pub precision: Vec<Metric>,
    pub recall: Vec<Metric>,
    pub f1: Vec<Metric>,
    pub support: Vec<u64>,
    /// Means over classes where the metric is defined.
    pub macro_precision: Metric,
    pub macro_recall: Metric,
    pub macro_f1: Metric,
    pub confusion: ConfusionMatrix,
}

/// Harmonic mean `2PR / (P + R)`; 0 when both are 0.
pub fn f1_score(precision: Metric, recall: Metric) -> Metric {
    match (precision, recall) {
        (Metric::Defined(p), Metric::Defined(r)) => {
            if p + r == 0.0 {
                Metric::Defined(0.0)
            } else {
                Metric::Defined(2.0 * p * r / (p + r))
            }
        }
        _ => Metric::Undefined,
    }
}

fn macro_mean(ms: &[Metric]) -> Metric {
    let defined: Vec<f64> = ms.iter().filter_map(|m| m.value()).collect();
    if defined.is_empty() {
        Metric::Undefined
    } else {
        Metric::Defined(defined.iter().sum::<f64>() / defined.len() as f64)
    }
}

pub fn metrics(confusion: &ConfusionMatrix) -> Result<EvalReport> {
    let n = confusion.total();
    if n == 0 {
        return Err(EvalError::EmptyInput);
    }
    let c = confusion.num_classes();
    let correct = confusion.trace();
    let mut precision = Vec::with_capacity(c);
    let mut recall = Vec::with_capacity(c);
    let mut f1 = Vec::with_capacity(c);
    let mut support = Vec::with_capacity(c);
    for k in 0..c {
        let tp = confusion.counts[k][k];
        let predicted: u64 = (0..c).map(|t| confusion.counts[t][k]).sum();
        let actual: u64 = confusion.counts[k].iter().sum();
        let p = Metric::ratio(tp, predicted);
        let r = Metric::ratio(tp, actual);
        precision.push(p);
        recall.push(r);
        f1.push(f1_score(p, r));
        support.push(actual);
    }
    Ok(EvalReport {
        n,
        correct,
        accuracy: correct as f64 / n as f64,
        macro_precision: macro_mean(&precision),
        macro_recall: macro_mean(&recall),
        macro_f1: macro_mean(&f1),
        precision,
        recall,
        f1,
        support,
        confusion: confusion.clone(),
    })
}

pub fn evaluate(records: &[PredictionRecord]) -> Result<EvalReport> {
    let c = infer_num_classes(records)?;
    metrics(&confusion(records, c)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GatedReport {
    pub threshold: f64,
    pub n: u64,
    pub confident_count: u64,
    pub confident_correct: u64,
    pub confident_proportion: f64,
    pub accuracy_of_confident: Metric,
}

impl GatedReport {
    /// `89/150 (59.3%)`.
    pub fn confident_summary(&self) -> String {
        format!("{}/{} ({})", self.confident_count, self.n, format_percent(self.confident_proportion))
    }
}

/// Keeps records whose top probability is at least `threshold`.
pub fn confidence_gate(records: &[PredictionRecord], threshold: f64) -> GatedReport {
    let n = records.len() as u64;
    let confident: Vec<&PredictionRecord> = records.iter().filter(|r| r.confidence() >= threshold).collect();
    let confident_count = confident.len() as u64;
    let confident_correct = confident.iter().filter(|r| r.is_correct()).count() as u64;
    GatedReport {
        threshold,
        n,
        confident_count,
        confident_correct,
        confident_proportion: if n == 0 { 0.0 } else { confident_count as f64 / n as f64 },
        accuracy_of_confident: Metric::ratio(confident_correct, confident_count),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    Class,
    Zoom,
    Dataset,
}

impl GroupKey {
    fn name(self) -> &'static str {
        match self {
            GroupKey::Class => "class",
            GroupKey::Zoom => "zoom",
            GroupKey::Dataset => "dataset",
        }
    }
}

impl std::str::FromStr for GroupKey {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "class" => Ok(GroupKey::Class),
            "zoom" => Ok(GroupKey::Zoom),
            "dataset" => Ok(GroupKey::Dataset),
            other => Err(format!("unknown group key {other:?}; expected class, zoom or dataset")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Group {
    pub label: String,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupedReport {
    pub key: GroupKey,
    pub groups: Vec<Group>,
    pub pooled: EvalReport,
}

/// One report per group value plus the pooled report. Groups are ordered
/// numerically for class and zoom keys, lexically for dataset tags.
pub fn grouped_report(records: &[PredictionRecord], key: GroupKey) -> Result<GroupedReport> {
    let c = infer_num_classes(records)?;
    let mut buckets: HashMap<String, (f64, Vec<PredictionRecord>)> = HashMap::new();
    for r in records {
        let (label, order) = match key {
            GroupKey::Class => (r.true_class.to_string(), r.true_class as f64),
            GroupKey::Zoom => {
                let z = r.zoom.ok_or(EvalError::MissingGroupKey { path: r.path.clone(), key: key.name() })?;
                (format!("{z}"), z)
            }
            GroupKey::Dataset => {
                let d = r.dataset.clone().ok_or(EvalError::MissingGroupKey { path: r.path.clone(), key: key.name() })?;
                (d, 0.0)
            }
        };
        buckets.entry(label).or_insert_with(|| (order, Vec::new())).1.push(r.clone());
    }
    let mut entries: Vec<(String, (f64, Vec<PredictionRecord>))> = buckets.into_iter().collect();
    entries.sort_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then_with(|| a.0.cmp(&b.0)));
    let mut groups = Vec::with_capacity(entries.len());
    for (label, (_, rs)) in entries {
        groups.push(Group { label, report: metrics(&confusion(&rs, c)?)? });
    }
    Ok(GroupedReport { key, groups, pooled: metrics(&confusion(records, c)?)? })
}

/// Reads and validates a JSON Lines prediction log. Blank lines are skipped.
pub fn read_prediction_log(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>> {
    let path = path.as_ref();
    let io = |source| EvalError::Io { path: path.display().to_string(), source };
    let file = std::fs::File::open(path).map_err(io)?;
    parse_prediction_log(std::io::BufReader::new(file)).map_err(|e| match e {
        EvalError::Io { source, .. } => io(source),
        other => other,
    })
}

pub fn parse_prediction_log(reader: impl BufRead) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| EvalError::Io { path: String::new(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord =
            serde_json::from_str(&line).map_err(|e| EvalError::Parse { line: i + 1, message: e.to_string() })?;
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_prediction_log(path: impl AsRef<Path>, records: &[PredictionRecord]) -> Result<()> {
    let path = path.as_ref();
    let io = |source| EvalError::Io { path: path.display().to_string(), source };
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for r in records {
        let line = serde_json::to_string(r).expect("records serialize");
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Target statistics for [`construct_log`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogShape {
    pub n: usize,
    pub num_classes: usize,
    pub threshold: f64,
    /// Records whose top probability is at least `threshold`.
    pub confident: usize,
    pub confident_correct: usize,
    /// Correct records overall, confident or not.
    pub correct: usize,
}

/// Builds a prediction log with exactly the requested gate statistics.
/// True classes cycle through `0..num_classes`; which records are confident
/// or correct, the top probability, and the wrong label are drawn from
/// `seed`.
pub fn construct_log(shape: &LogShape, seed: u64) -> std::result::Result<Vec<PredictionRecord>, String> {
    let LogShape { n, num_classes: c, threshold, confident, confident_correct, correct } = *shape;
    if c < 2 {
        return Err("need at least two classes".into());
    }
    if confident > n || confident_correct > confident || correct < confident_correct {
        return Err("inconsistent counts".into());
    }
    if correct - confident_correct > n - confident {
        return Err("more unconfident correct records than unconfident records".into());
    }
    let floor = 1.0 / c as f64;
    if !(threshold > floor + 0.02 && threshold < 0.98) {
        return Err(format!("threshold must lie in ({:.3}, 0.98)", floor + 0.02));
    }
    let mut order: Vec<usize> = (0..n).collect();
    crate::rng::Stream::new(seed, 0, crate::rng::tag("evalkit.construct.order")).shuffle(&mut order);
    let mut is_confident = vec![false; n];
    let mut is_correct = vec![false; n];
    for (rank, &i) in order.iter().enumerate() {
        if rank < confident {
            is_confident[i] = true;
            is_correct[i] = rank < confident_correct;
        } else {
            is_correct[i] = rank - confident < correct - confident_correct;
        }
    }
    let records = (0..n)
        .map(|i| {
            let mut s = crate::rng::Stream::new(seed, i as u64, crate::rng::tag("evalkit.construct.record"));
            let truth = i % c;
            let predicted = if is_correct[i] { truth } else { (truth + 1 + s.below(c as u64 - 1) as usize) % c };
            let top = if is_confident[i] {
                s.uniform(threshold + 0.005, 0.995)
            } else {
                s.uniform(floor + 0.01, threshold - 0.005)
            };
            let rest = (1.0 - top) / (c - 1) as f64;
            let mut probs = vec![rest; c];
            probs[predicted] = top;
            PredictionRecord::new(format!("testset2/{truth}/{i:04}.png"), truth, probs)
        })
        .collect();
    Ok(records)
}

fn render_rows(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}

/// Per-class table plus accuracy and the confusion matrix.
pub fn format_report(report: &EvalReport, class_names: &[String]) -> String {
    let name = |k: usize| class_names.get(k).cloned().unwrap_or_else(|| format!("class {k}"));
    let mut rows = vec![vec!["Class".into(), "Precision".into(), "Recall".into(), "F1".into(), "Support".into()]];
    for k in 0..report.precision.len() {
        rows.push(vec![
            name(k),
            report.precision[k].percent(),
            report.recall[k].percent(),
            report.f1[k].percent(),
            report.support[k].to_string(),
        ]);
    }
    rows.push(vec![
        "macro".into(),
        report.macro_precision.percent(),
        report.macro_recall.percent(),
        report.macro_f1.percent(),
        report.n.to_string(),
    ]);
    let mut out = format!("Accuracy: {} ({}/{})\n", format_percent(report.accuracy), report.correct, report.n);
    out.push_str(&render_rows(&rows));
    out.push_str("\nConfusion (rows true, columns predicted)\n");
    let c = report.confusion.num_classes();
    let mut crows = vec![std::iter::once(String::new()).chain((0..c).map(|k| k.to_string())).collect::<Vec<_>>()];
    for (k, row) in report.confusion.counts.iter().enumerate() {
        crows.push(std::iter::once(name(k)).chain(row.iter().map(u64::to_string)).collect());
    }
    out.push_str(&render_rows(&crows));
    out
}

/// Aligned table of named gated reports.
pub fn format_gated_table(rows: &[(String, GatedReport)]) -> String {
    let mut table = vec![vec![
        String::new(),
        "Confident images".into(),
        "Confident proportion".into(),
        "Accuracy of confident".into(),
    ]];
    for (name, g) in rows {
        table.push(vec![
            name.clone(),
            format!("{} / {}", g.confident_count, g.n),
            format_percent(g.confident_proportion),
            g.accuracy_of_confident.percent(),
        ]);
    }
    render_rows(&table)
}

pub fn format_grouped(report: &GroupedReport) -> String {
    let mut rows = vec![vec![report.key.name().to_string(), "n".into(), "Accuracy".into(), "Macro F1".into()]];
    for g in &report.groups {
        rows.push(vec![
            g.label.clone(),
            g.report.n.to_string(),
            format_percent(g.report.accuracy),
            g.report.macro_f1.percent(),
        ]);
    }
    rows.push(vec![
        "pooled".into(),
        report.pooled.n.to_string(),
        format_percent(report.pooled.accuracy),
        report.pooled.macro_f1.percent(),
    ]);
    render_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: usize, probs: &[f64]) -> PredictionRecord {
        PredictionRecord::new(format!("img{t}"), t, probs.to_vec())
    }

    #[test]
    fn argmax_and_ties() {
        assert_eq!(predicted_class(&[0.1, 0.7, 0.2]), 1);
        assert_eq!(predicted_class(&[0.5, 0.5]), 0);
        assert_eq!(predicted_class(&[0.2, 0.4, 0.4]), 1);
    }

    #[test]
    fn all_correct_is_diagonal() {
        let rs = vec![rec(0, &[0.9, 0.1]), rec(1, &[0.2, 0.8]), rec(1, &[0.3, 0.7])];
        let m = confusion(&rs, 2).unwrap();
        assert_eq!(m.counts, vec![vec![1, 0], vec![0, 2]]);
    }

    #[test]
    fn empty_confusion() {
        let m = confusion(&[], 3).unwrap();
        assert_eq!(m, ConfusionMatrix::zeros(3));
        assert_eq!(m.total(), 0);
        assert!(matches!(metrics(&m), Err(EvalError::EmptyInput)));
    }

    #[test]
    fn hand_counted_two_class() {
        let rs = vec![
            rec(0, &[0.9, 0.1]),
            rec(0, &[0.4, 0.6]),
            rec(0, &[0.8, 0.2]),
            rec(1, &[0.6, 0.4]),
            rec(1, &[0.1, 0.9]),
            rec(1, &[0.3, 0.7]),
        ];
        let m = confusion(&rs, 2).unwrap();
        assert_eq!(m.counts, vec![vec![2, 1], vec![1, 2]]);
        let r = metrics(&m).unwrap();
        assert_eq!(r.accuracy, 4.0 / 6.0);
        assert_eq!(r.precision[0], Metric::Defined(2.0 / 3.0));
        assert_eq!(r.recall[1], Metric::Defined(2.0 / 3.0));
    }

    #[test]
    fn inconsistent_class_count() {
        let rs = vec![rec(0, &[0.9, 0.1]), rec(0, &[0.8, 0.1, 0.1])];
        assert!(matches!(confusion(&rs, 2), Err(EvalError::InconsistentClassCount { found: 3, .. })));
        assert!(matches!(infer_num_classes(&rs), Err(EvalError::InconsistentClassCount { .. })));
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1_score(Metric::Defined(1.0), Metric::Defined(1.0)), Metric::Defined(1.0));
        let v = f1_score(Metric::Defined(0.5), Metric::Defined(1.0)).value().unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f1_score(Metric::Undefined, Metric::Defined(1.0)), Metric::Undefined);
    }

    #[test]
    fn never_predicted_class_has_undefined_precision() {
        let rs = vec![rec(0, &[0.9, 0.1]), rec(1, &[0.8, 0.2])];
        let r = evaluate(&rs).unwrap();
        assert_eq!(r.precision[1], Metric::Undefined);
        assert_eq!(r.recall[1], Metric::Defined(0.0));
        assert_eq!(r.macro_precision, Metric::Defined(0.5));
        assert_eq!(serde_json::to_string(&r.precision[1]).unwrap(), "\"undefined\"");
    }

    #[test]
    fn one_twenty_five_of_one_fifty() {
        let mut rs = Vec::new();
        for i in 0..150 {
            let t = i % 5;
            let mut p = vec![0.05; 5];
            let pred = if i < 125 { t } else { (t + 1) % 5 };
            p[pred] = 0.8;
            rs.push(rec(t, &p));
        }
        let r = evaluate(&rs).unwrap();
        assert_eq!(format_percent(r.accuracy), "83.3%");
    }

    #[test]
    fn gate_zero_keeps_everything() {
        let rs = vec![rec(0, &[0.9, 0.1]), rec(1, &[0.6, 0.4]), rec(1, &[0.3, 0.7])];
        let g = confidence_gate(&rs, 0.0);
        assert_eq!(g.confident_count, 3);
        assert_eq!(g.accuracy_of_confident.value().unwrap(), evaluate(&rs).unwrap().accuracy);
    }

    #[test]
    fn gate_is_inclusive_and_can_empty() {
        let rs = vec![rec(0, &[0.7, 0.3]), rec(1, &[0.4, 0.6])];
        assert_eq!(confidence_gate(&rs, 0.7).confident_count, 1);
        let g = confidence_gate(&rs, 0.95);
        assert_eq!(g.confident_count, 0);
        assert_eq!(g.accuracy_of_confident, Metric::Undefined);
    }

    #[test]
    fn grouping_by_zoom() {
        let mut a = rec(0, &[0.9, 0.1]);
        a.zoom = Some(0.5);
        let mut b = rec(1, &[0.9, 0.1]);
        b.zoom = Some(1.5);
        let mut c = rec(1, &[0.2, 0.8]);
        c.zoom = Some(1.5);
        let g = grouped_report(&[a.clone(), b, c], GroupKey::Zoom).unwrap();
        assert_eq!(g.groups.iter().map(|g| g.label.as_str()).collect::<Vec<_>>(), ["0.5", "1.5"]);
        assert_eq!(g.groups[1].report.accuracy, 0.5);
        assert_eq!(g.pooled.n, 3);
        let plain = rec(0, &[0.9, 0.1]);
        assert!(matches!(grouped_report(&[a, plain], GroupKey::Zoom), Err(EvalError::MissingGroupKey { .. })));
    }

    #[test]
    fn record_validation() {
        assert!(rec(0, &[0.5, 0.5]).validate().is_ok());
        assert!(rec(0, &[0.5, 0.6]).validate().is_err());
        assert!(rec(0, &[1.2, -0.2]).validate().is_err());
        assert!(rec(2, &[0.5, 0.5]).validate().is_err());
    }

    #[test]
    fn log_parse_reports_line() {
        let text = "{\"path\":\"a\",\"true_class\":0,\"probs\":[1.0,0.0]}\n\nnot json\n";
        match parse_prediction_log(text.as_bytes()) {
            Err(EvalError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn metric_round_trips_through_json() {
        for m in [Metric::Defined(0.25), Metric::Undefined] {
            let s = serde_json::to_string(&m).unwrap();
            assert_eq!(serde_json::from_str::<Metric>(&s).unwrap(), m);
        }
    }

    #[test]
    fn tables_align() {
        let g = GatedReport {
            threshold: 0.7,
            n: 150,
            confident_count: 89,
            confident_correct: 87,
            confident_proportion: 89.0 / 150.0,
            accuracy_of_confident: Metric::ratio(87, 89),
        };
        let t = format_gated_table(&[("RealModel".into(), g)]);
        assert!(t.contains("89 / 150"));
        assert!(t.contains("59.3%"));
        assert!(t.contains("97.8%"));
    }
}
