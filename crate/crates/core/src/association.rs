//! Scoring predicted line associations between two frames against the
//! associations implied by annotated track identities.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LineSegment2D;
use crate::metrics::PrecisionRecallF;

/// One-to-one set of `(index in frame i, index in frame j)` pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchSet {
    pairs: BTreeSet<(usize, usize)>,
}

impl MatchSet {
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = Self::default();
        for (a, b) in pairs {
            set.insert(a, b)?;
        }
        Ok(set)
    }

    /// Adds a pair, rejecting any index already used on its side.
    pub fn insert(&mut self, a: usize, b: usize) -> Result<()> {
        if let Some(&(x, y)) = self.pairs.iter().find(|&&(x, y)| x == a || y == b) {
            return Err(Error::InvalidValue(format!(
                "match ({a}, {b}) conflicts with ({x}, {y}): matches must be one-to-one"
            )));
        }
        self.pairs.insert((a, b));
        Ok(())
    }

    pub fn pairs(&self) -> &BTreeSet<(usize, usize)> {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.pairs.contains(&(a, b))
    }

    pub fn check_bounds(&self, n_i: usize, n_j: usize) -> Result<()> {
        match self.pairs.iter().find(|&&(a, b)| a >= n_i || b >= n_j) {
            Some(&(a, b)) => Err(Error::InvalidValue(format!(
                "match ({a}, {b}) out of range for {n_i} x {n_j} lines"
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationTally {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

fn track_index(lines: &[LineSegment2D], frame: &str) -> Result<HashMap<i64, usize>> {
    let mut index = HashMap::new();
    for (i, line) in lines.iter().enumerate() {
        if let Some(id) = line.track_id {
            if index.insert(id, i).is_some() {
                return Err(Error::Annotation(format!("duplicate track id {id} in frame {frame}")));
            }
        }
    }
    Ok(index)
}

/// Ground-truth associations: every pair of lines sharing a track id.
/// Lines without a track id take part in no pair.
pub fn gt_matches(lines_i: &[LineSegment2D], lines_j: &[LineSegment2D]) -> Result<MatchSet> {
    let index_j = track_index(lines_j, "j")?;
    track_index(lines_i, "i")?;
    let pairs = lines_i
        .iter()
        .enumerate()
        .filter_map(|(a, l)| l.track_id.and_then(|id| index_j.get(&id).map(|&b| (a, b))));
    MatchSet::new(pairs)
}

pub fn classify_matches(pred: &MatchSet, gt: &MatchSet, n_i: usize, n_j: usize) -> AssociationTally {
    let tp = pred.pairs.intersection(&gt.pairs).count();
    let fp = pred.len() - tp;
    let fn_ = gt.len() - tp;
    let union = pred.len() + gt.len() - tp;
    AssociationTally {
        tp,
        fp,
        fn_,
        tn: (n_i * n_j).saturating_sub(union),
    }
}

pub fn total_tally(tallies: &[AssociationTally]) -> AssociationTally {
    tallies.iter().fold(AssociationTally::default(), |acc, t| AssociationTally {
        tp: acc.tp + t.tp,
        fp: acc.fp + t.fp,
        fn_: acc.fn_ + t.fn_,
        tn: acc.tn + t.tn,
    })
}

/// Micro-averaged precision, recall and F-score over all frame pairs.
pub fn association_prf(tallies: &[AssociationTally]) -> PrecisionRecallF {
    let t = total_tally(tallies);
    PrecisionRecallF::from_counts(t.tp, t.fp, t.tp + t.fn_)
}
