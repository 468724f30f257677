//! Scores every similarity measure by how well it separates the relevant
//! from the irrelevant labeled items, and ranks them.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, LabelSide, Result};
use crate::metric::{lp_distance, NormalizedSpace, SimilarityMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Relevant,
    Irrelevant,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEvent {
    pub iteration: u32,
    pub id: String,
    pub label: Label,
}

/// Current label per item plus an append-only log of every assignment.
/// Items without an entry are neutral.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelStore {
    assignments: BTreeMap<String, Label>,
    history: Vec<LabelEvent>,
}

impl LabelStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Label)>,
        S: Into<String>,
    {
        let mut store = Self::new();
        for (id, label) in pairs {
            store.set(0, id, label);
        }
        store
    }

    pub fn set(&mut self, iteration: u32, id: impl Into<String>, label: Label) {
        let id = id.into();
        self.history.push(LabelEvent {
            iteration,
            id: id.clone(),
            label,
        });
        match label {
            Label::Neutral => {
                self.assignments.remove(&id);
            }
            _ => {
                self.assignments.insert(id, label);
            }
        }
    }

    pub fn get(&self, id: &str) -> Label {
        self.assignments.get(id).copied().unwrap_or(Label::Neutral)
    }

    pub fn history(&self) -> &[LabelEvent] {
        &self.history
    }

    pub fn labeled(&self) -> impl Iterator<Item = (&str, Label)> {
        self.assignments.iter().map(|(id, l)| (id.as_str(), *l))
    }

    pub fn ids_with(&self, label: Label) -> impl Iterator<Item = &str> {
        self.labeled().filter(move |(_, l)| *l == label).map(|(id, _)| id)
    }

    pub fn count(&self, label: Label) -> usize {
        self.ids_with(label).count()
    }

    /// Fails unless both groups are non-empty.
    pub fn require_both(&self) -> Result<()> {
        let pos = self.count(Label::Relevant) > 0;
        let neg = self.count(Label::Irrelevant) > 0;
        match (pos, neg) {
            (true, true) => Ok(()),
            (false, true) => Err(Error::InsufficientLabels(LabelSide::Relevant)),
            (true, false) => Err(Error::InsufficientLabels(LabelSide::Irrelevant)),
            (false, false) => Err(Error::InsufficientLabels(LabelSide::Both)),
        }
    }
}

/// Row indices of the relevant and irrelevant items present in `space`.
fn labeled_rows(space: &NormalizedSpace, labels: &LabelStore) -> (Vec<usize>, Vec<usize>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (id, label) in labels.labeled() {
        if let Some(i) = space.position(id) {
            match label {
                Label::Relevant => pos.push(i),
                Label::Irrelevant => neg.push(i),
                Label::Neutral => {}
            }
        }
    }
    pos.sort_unstable();
    neg.sort_unstable();
    (pos, neg)
}

fn centroid(space: &NormalizedSpace, rows: &[usize]) -> Vec<f64> {
    let mut c = vec![0.0; space.dim()];
    for &i in rows {
        c.iter_mut().zip(space.row(i)).for_each(|(a, v)| *a += v);
    }
    c.iter_mut().for_each(|a| *a /= rows.len() as f64);
    c
}

fn inter_rows(space: &NormalizedSpace, pos: &[usize], neg: &[usize]) -> Result<f64> {
    match (pos.is_empty(), neg.is_empty()) {
        (true, true) => return Err(Error::InsufficientLabels(LabelSide::Both)),
        (true, false) => return Err(Error::InsufficientLabels(LabelSide::Relevant)),
        (false, true) => return Err(Error::InsufficientLabels(LabelSide::Irrelevant)),
        _ => {}
    }
    Ok(lp_distance(&centroid(space, pos), &centroid(space, neg), space.norm()))
}

fn intra_rows(space: &NormalizedSpace, rows: &[usize]) -> f64 {
    let mut best: f64 = 0.0;
    for (a, &i) in rows.iter().enumerate() {
        for &j in &rows[a + 1..] {
            best = best.max(space.distance(i, j));
        }
    }
    best
}

/// Distance between the centroids of the relevant and the irrelevant items.
pub fn inter_group_distance(space: &NormalizedSpace, labels: &LabelStore) -> Result<f64> {
    let (pos, neg) = labeled_rows(space, labels);
    inter_rows(space, &pos, &neg)
}

/// Largest pairwise distance within `group`; 0 for fewer than two members.
/// Ids absent from the space are ignored.
pub fn intra_group_distance<S: AsRef<str>>(space: &NormalizedSpace, group: &[S]) -> f64 {
    let mut rows: Vec<usize> = group.iter().filter_map(|id| space.position(id.as_ref())).collect();
    rows.sort_unstable();
    rows.dedup();
    intra_rows(space, &rows)
}

/// `q_inter - w * (q_intra_pos + q_intra_neg)`.
pub fn combined_score(q_inter: f64, q_intra_pos: f64, q_intra_neg: f64, w: f64) -> f64 {
    q_inter - w * (q_intra_pos + q_intra_neg)
}

/// Default intra-group weight: inter-group distance alone.
pub const DEFAULT_INTRA_WEIGHT: f64 = 0.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureScore {
    pub measure: SimilarityMeasure,
    pub q_inter: f64,
    pub q_intra_pos: f64,
    pub q_intra_neg: f64,
    pub q_comb: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QualityMetric {
    InterOnly,
    Combined { w: f64 },
}

impl QualityMetric {
    pub fn from_weight(w: f64) -> Self {
        if w == 0.0 {
            QualityMetric::InterOnly
        } else {
            QualityMetric::Combined { w }
        }
    }

    pub fn weight(self) -> f64 {
        match self {
            QualityMetric::InterOnly => 0.0,
            QualityMetric::Combined { w } => w,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvisorRanking {
    pub scores: Vec<MeasureScore>,
    pub active_metric: QualityMetric,
    pub iteration: u32,
}

impl AdvisorRanking {
    pub fn top(&self) -> &MeasureScore {
        &self.scores[0]
    }

    pub fn order(&self) -> Vec<SimilarityMeasure> {
        self.scores.iter().map(|s| s.measure.clone()).collect()
    }

    pub fn rank_of(&self, measure: &SimilarityMeasure) -> Option<usize> {
        self.scores.iter().position(|s| &s.measure == measure).map(|i| i + 1)
    }

    /// Flat JSON rows for clients, in ranking order.
    pub fn to_view(&self) -> RankingView {
        RankingView {
            iteration: self.iteration,
            active_metric: self.active_metric,
            measures: self
                .scores
                .iter()
                .enumerate()
                .map(|(i, s)| RankingRow {
                    rank: i + 1,
                    descriptor: s.measure.descriptor.to_string(),
                    p: s.measure.norm.p(),
                    score: s.q_comb,
                    q_inter: s.q_inter,
                    q_intra_pos: s.q_intra_pos,
                    q_intra_neg: s.q_intra_neg,
                    degenerate: s.degenerate,
                    projection: format!(
                        "/api/projection?overlay=labels&descriptor={}&p={}",
                        s.measure.descriptor,
                        s.measure.norm.p()
                    ),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingRow {
    pub rank: usize,
    pub descriptor: String,
    pub p: f64,
    pub score: f64,
    pub q_inter: f64,
    pub q_intra_pos: f64,
    pub q_intra_neg: f64,
    pub degenerate: bool,
    /// Where the measure's 2-D thumbnail embedding can be fetched.
    pub projection: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingView {
    pub iteration: u32,
    pub active_metric: QualityMetric,
    pub measures: Vec<RankingRow>,
}

/// Scores are compared on a 1e-10 grid so that float noise (for example
/// identical 1-D spaces under different norms) falls back to the name/p
/// tie-break instead of ordering arbitrarily.
fn score_key(score: f64) -> i64 {
    (score * 1e10).round() as i64
}

pub fn score_measure(space: &NormalizedSpace, labels: &LabelStore, w: f64) -> Result<MeasureScore> {
    let (pos, neg) = labeled_rows(space, labels);
    if space.is_degenerate() {
        inter_rows(space, &pos, &neg)?;
        return Ok(MeasureScore {
            measure: space.measure().clone(),
            q_inter: 0.0,
            q_intra_pos: 0.0,
            q_intra_neg: 0.0,
            q_comb: 0.0,
            degenerate: true,
        });
    }
    let q_inter = inter_rows(space, &pos, &neg)?;
    let q_intra_pos = intra_rows(space, &pos);
    let q_intra_neg = intra_rows(space, &neg);
    Ok(MeasureScore {
        measure: space.measure().clone(),
        q_inter,
        q_intra_pos,
        q_intra_neg,
        q_comb: combined_score(q_inter, q_intra_pos, q_intra_neg, w),
        degenerate: false,
    })
}

/// Scores every space and sorts best first. Degenerate spaces score 0 and go
/// last; ties break by descriptor name, then p.
pub fn rank_measures(spaces: &[NormalizedSpace], labels: &LabelStore, w: f64) -> Result<AdvisorRanking> {
    if spaces.is_empty() {
        return Err(Error::Parameter("no similarity measures to rank".into()));
    }
    labels.require_both()?;
    let mut scores: Vec<MeasureScore> = spaces
        .par_iter()
        .map(|s| score_measure(s, labels, w))
        .collect::<Result<_>>()?;
    scores.sort_by(|a, b| {
        a.degenerate
            .cmp(&b.degenerate)
            .then_with(|| score_key(b.q_comb).cmp(&score_key(a.q_comb)))
            .then_with(|| a.measure.descriptor.cmp(&b.measure.descriptor))
            .then_with(|| a.measure.norm.cmp(&b.measure.norm))
    });
    Ok(AdvisorRanking {
        scores,
        active_metric: QualityMetric::from_weight(w),
        iteration: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::DescriptorId;
    use crate::metric::NormId;

    fn space(points: &[(f64, f64)], norm: NormId) -> NormalizedSpace {
        let ids = (0..points.len()).map(|i| format!("p{i}")).collect();
        let rows = points.iter().map(|&(x, y)| vec![x, y]).collect();
        NormalizedSpace::from_normalized(SimilarityMeasure::new(DescriptorId::new("t"), norm), ids, rows)
    }

    #[test]
    fn centroid_distance_example() {
        let s = space(&[(0.0, 0.0), (2.0, 0.0), (4.0, 0.0), (6.0, 0.0)], NormId::L2);
        let labels = LabelStore::from_pairs([
            ("p0", Label::Relevant),
            ("p1", Label::Relevant),
            ("p2", Label::Irrelevant),
            ("p3", Label::Irrelevant),
        ]);
        assert_eq!(inter_group_distance(&s, &labels).unwrap(), 4.0);
    }

    #[test]
    fn coincident_singletons_are_zero_apart() {
        let s = space(&[(0.3, 0.3), (0.3, 0.3)], NormId::L1);
        let labels = LabelStore::from_pairs([("p0", Label::Relevant), ("p1", Label::Irrelevant)]);
        assert_eq!(inter_group_distance(&s, &labels).unwrap(), 0.0);
    }

    #[test]
    fn empty_side_is_named() {
        let s = space(&[(0.0, 0.0), (1.0, 0.0)], NormId::L1);
        let labels = LabelStore::from_pairs([("p0", Label::Relevant)]);
        let err = inter_group_distance(&s, &labels).unwrap_err();
        assert!(matches!(err, Error::InsufficientLabels(LabelSide::Irrelevant)));
        assert!(err.to_string().contains("irrelevant"));
    }

    #[test]
    fn intra_examples() {
        let s = space(&[(0.0, 0.0), (3.0, 4.0), (1.0, 0.0)], NormId::L2);
        assert_eq!(intra_group_distance(&s, &["p0", "p1", "p2"]), 5.0);
        assert_eq!(intra_group_distance(&s, &["p1"]), 0.0);
        assert_eq!(intra_group_distance::<&str>(&s, &[]), 0.0);
    }

    #[test]
    fn combined_examples() {
        assert_eq!(combined_score(4.0, 1.0, 1.0, DEFAULT_INTRA_WEIGHT), 4.0);
        assert_eq!(combined_score(4.0, 1.0, 1.0, 0.5), 3.0);
        for w in [0.0, 0.3, 7.0] {
            assert_eq!(combined_score(0.0, 0.0, 0.0, w), 0.0);
        }
    }

    #[test]
    fn relabel_to_neutral_forgets_label_but_keeps_history() {
        let mut store = LabelStore::new();
        store.set(0, "a", Label::Relevant);
        store.set(1, "a", Label::Neutral);
        assert_eq!(store.get("a"), Label::Neutral);
        assert_eq!(store.count(Label::Relevant), 0);
        assert_eq!(store.history().len(), 2);
    }
}
