//! PMIS coarse/fine splitting.

use serde::{Deserialize, Serialize};

use super::strength::StrengthGraph;
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointClass {
    Coarse,
    Fine,
}

/// Assignment of every row to the coarse or fine set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfSplitting {
    pub labels: Vec<PointClass>,
}

impl CfSplitting {
    pub fn n_coarse(&self) -> usize {
        self.labels
            .iter()
            .filter(|&&l| l == PointClass::Coarse)
            .count()
    }

    pub fn is_coarse(&self, i: usize) -> bool {
        self.labels[i] == PointClass::Coarse
    }

    /// Maps each coarse row to its index in the coarse-level ordering;
    /// fine rows map to `None`.
    pub fn coarse_index(&self) -> Vec<Option<usize>> {
        let mut next = 0usize;
        self.labels
            .iter()
            .map(|&l| {
                if l == PointClass::Coarse {
                    let idx = next;
                    next += 1;
                    Some(idx)
                } else {
                    None
                }
            })
            .collect()
    }
}

/// PMIS coarsening with measures `w(i) = |S_i^T| + rand_i`, `rand_i` drawn
/// in row order from the seeded generator.
pub fn pmis_coarsen(s: &StrengthGraph, seed: u64) -> CfSplitting {
    let mut rng = Rng::new(seed);
    let measures: Vec<f64> = (0..s.n)
        .map(|i| s.dependents(i).len() as f64 + rng.next_f64())
        .collect();
    pmis_with_measures(s, &measures)
}

/// PMIS rounds over explicit measures.
///
/// Repeatedly: every unassigned point whose measure beats all unassigned
/// neighbors in the symmetrized strength graph becomes coarse, then the
/// unassigned neighbors of new coarse points become fine. Exact measure
/// ties are broken toward the higher index, which makes each round select
/// at least one point from every unassigned component, so the loop always
/// terminates. Points with no strong edges in either direction are fine
/// from the start.
pub fn pmis_with_measures(s: &StrengthGraph, measures: &[f64]) -> CfSplitting {
    assert_eq!(measures.len(), s.n, "one measure per row required");
    let beats = |i: usize, j: usize| {
        measures[i] > measures[j] || (measures[i] == measures[j] && i > j)
    };
    let mut labels: Vec<Option<PointClass>> = vec![None; s.n];
    let mut unassigned = 0usize;
    for i in 0..s.n {
        if s.is_isolated(i) {
            labels[i] = Some(PointClass::Fine);
        } else {
            unassigned += 1;
        }
    }
    let neighbors: Vec<Vec<usize>> = (0..s.n).map(|i| s.symmetrized_neighbors(i)).collect();
    while unassigned > 0 {
        let mut selected = Vec::new();
        for i in 0..s.n {
            if labels[i].is_some() {
                continue;
            }
            let local_max = neighbors[i]
                .iter()
                .all(|&j| labels[j].is_some() || beats(i, j));
            if local_max {
                selected.push(i);
            }
        }
        assert!(
            !selected.is_empty(),
            "a maximal-measure point is always a local maximum"
        );
        for &i in &selected {
            labels[i] = Some(PointClass::Coarse);
            unassigned -= 1;
        }
        for &i in &selected {
            for &j in &neighbors[i] {
                if labels[j].is_none() {
                    labels[j] = Some(PointClass::Fine);
                    unassigned -= 1;
                }
            }
        }
    }
    CfSplitting {
        labels: labels.into_iter().map(|l| l.unwrap()).collect(),
    }
}
