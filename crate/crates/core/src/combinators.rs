//! Building larger spaces from smaller ones.
//!
//! Two disjoint bounded spaces satisfying the same axiom with constants
//! K1, K2 concatenate into one space satisfying that axiom with
//! K = max(K1, K2): keep both blocks and set every cross-distance to
//! `max(diam1, diam2) / denom`, where the denominator is `1 + K` for the
//! strong axiom and `2K` for the b-metric and relaxed-polygonal ones.
//! Chains iterate this left to right. A sorted positive tuple is
//! realized as a cycle space whose chords are the shorter perimeter arc,
//! except for the long chord pinned to the tuple's largest entry.

use crate::space::{SemimetricSpace, SpaceError};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CombineError {
    #[error("label {label:?} appears in both operands")]
    LabelCollision { label: String },
    #[error("combined space needs at least 3 points, got {n}")]
    TooSmall { n: usize },
    #[error("constant {supplied} is below the minimal {axiom} constant {required} of a component")]
    ConstantTooSmall {
        supplied: f64,
        required: f64,
        axiom: &'static str,
    },
    #[error("target constant must be finite and exceed 1, got {0}")]
    TargetNotAboveOne(f64),
    #[error("tuple entries must be sorted nonincreasing (position {index})")]
    NotSorted { index: usize },
    #[error("degenerate tuple: {reason}")]
    Degenerate { reason: String },
    #[error("sampling failed after {attempts} attempts")]
    Sampling { attempts: usize },
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Which axiom the concatenation bridge is tuned for; fixes the bridge
/// denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BridgeMode {
    #[serde(rename = "S")]
    Strong,
    #[serde(rename = "B")]
    BMetric,
    #[serde(rename = "P")]
    Rpi,
}

impl BridgeMode {
    pub fn denominator(self, k: f64) -> f64 {
        match self {
            BridgeMode::Strong => 1.0 + k,
            BridgeMode::BMetric | BridgeMode::Rpi => 2.0 * k,
        }
    }

    /// Unclamped minimal constant of `space` for this mode's axiom.
    pub fn raw_constant(self, space: &SemimetricSpace) -> f64 {
        match self {
            BridgeMode::Strong => space.min_strong_constant(),
            BridgeMode::BMetric => space.min_b_constant(),
            BridgeMode::Rpi => space.min_rpi_constant(),
        }
    }

    pub fn axiom_name(self) -> &'static str {
        match self {
            BridgeMode::Strong => "S",
            BridgeMode::BMetric => "B",
            BridgeMode::Rpi => "P",
        }
    }
}

fn check_constant(
    space: &SemimetricSpace,
    k: f64,
    mode: BridgeMode,
    tol: f64,
) -> Result<(), CombineError> {
    if !(k.is_finite() && k >= 1.0) {
        return Err(CombineError::ConstantTooSmall {
            supplied: k,
            required: 1.0,
            axiom: mode.axiom_name(),
        });
    }
    let raw = mode.raw_constant(space);
    if raw > k * (1.0 + tol) {
        return Err(CombineError::ConstantTooSmall {
            supplied: k,
            required: raw,
            axiom: mode.axiom_name(),
        });
    }
    Ok(())
}

/// Disjoint union of `s1` and `s2` with all cross-distances equal to
/// `max(diam1, diam2) / denominator(mode, k)`. The result restricts to
/// each operand exactly, has diameter `max(diam1, diam2)`, and satisfies
/// the mode's axiom with constant `k`.
pub fn concatenate(
    s1: &SemimetricSpace,
    s2: &SemimetricSpace,
    k: f64,
    mode: BridgeMode,
    tol: f64,
) -> Result<SemimetricSpace, CombineError> {
    for label in s2.labels() {
        if s1.label_index(label).is_some() {
            return Err(CombineError::LabelCollision {
                label: label.clone(),
            });
        }
    }
    let (n1, n2) = (s1.len(), s2.len());
    if n1 + n2 < 3 {
        return Err(CombineError::TooSmall { n: n1 + n2 });
    }
    check_constant(s1, k, mode, tol)?;
    check_constant(s2, k, mode, tol)?;

    let bridge = s1.diameter().max(s2.diameter()) / mode.denominator(k);
    let n = n1 + n2;
    let mut matrix = vec![vec![bridge; n]; n];
    for i in 0..n1 {
        for j in 0..n1 {
            matrix[i][j] = s1.distance(i, j);
        }
    }
    for i in 0..n2 {
        for j in 0..n2 {
            matrix[n1 + i][n1 + j] = s2.distance(i, j);
        }
    }
    let labels: Vec<String> = s1
        .labels()
        .iter()
        .chain(s2.labels().iter())
        .cloned()
        .collect();
    Ok(SemimetricSpace::new(labels, matrix)?)
}

/// Left fold of [`concatenate`] over `blocks`; a single block is
/// returned unchanged (after its constant check).
pub fn chain_concatenate(
    blocks: &[SemimetricSpace],
    k: f64,
    mode: BridgeMode,
    tol: f64,
) -> Result<SemimetricSpace, CombineError> {
    let Some(first) = blocks.first() else {
        return Err(CombineError::TooSmall { n: 0 });
    };
    for block in blocks {
        check_constant(block, k, mode, tol)?;
    }
    let mut acc = first.clone();
    for block in &blocks[1..] {
        acc = concatenate(&acc, block, k, mode, tol)?;
    }
    Ok(acc)
}

/// Cycle space realizing a sorted positive tuple: consecutive points
/// carry the tuple entries, the long chord carries the largest entry,
/// and every other chord is the shorter of its two perimeter arcs.
pub fn implement_polygon(entries: &[f64]) -> Result<SemimetricSpace, CombineError> {
    let n = entries.len();
    if n < 3 {
        return Err(CombineError::Degenerate {
            reason: format!("need at least 3 entries, got {n}"),
        });
    }
    for &e in entries {
        if !(e.is_finite() && e > 0.0) {
            return Err(CombineError::Degenerate {
                reason: format!("entries must be positive and finite, got {e}"),
            });
        }
    }
    for index in 1..n {
        if entries[index] > entries[index - 1] {
            return Err(CombineError::NotSorted { index });
        }
    }

    // Cycle edges, 0-based positions: (p, p+1) has weight entries[p+1],
    // and the wrap edge (0, n-1) has weight entries[0].
    let edge = |p: usize| entries[p + 1];
    let mut matrix = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let value = if j - i == 1 {
                edge(i)
            } else if i == 0 && j == n - 1 {
                entries[0]
            } else {
                let clockwise: f64 = (i..j).map(edge).sum();
                let wrap: f64 = entries[0]
                    + (0..i).map(edge).sum::<f64>()
                    + (j..n - 1).map(edge).sum::<f64>();
                clockwise.min(wrap)
            };
            matrix[i][j] = value;
            matrix[j][i] = value;
        }
    }
    let labels: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    Ok(SemimetricSpace::new(labels, matrix)?)
}

/// Three-point space with `d(1,2) = a`, `d(2,3) = b`, `d(1,3) = c`.
pub fn three_point_space(a: f64, b: f64, c: f64) -> Result<SemimetricSpace, CombineError> {
    labeled_three_point_space(["1", "2", "3"].map(String::from), a, b, c)
}

pub(crate) fn labeled_three_point_space(
    labels: [String; 3],
    a: f64,
    b: f64,
    c: f64,
) -> Result<SemimetricSpace, CombineError> {
    for v in [a, b, c] {
        if !(v.is_finite() && v > 0.0) {
            return Err(CombineError::Degenerate {
                reason: format!("distances must be positive and finite, got {v}"),
            });
        }
    }
    Ok(SemimetricSpace::new(
        labels.to_vec(),
        vec![vec![0.0, a, c], vec![a, 0.0, b], vec![c, b, 0.0]],
    )?)
}

/// Deterministically samples `blocks` three-point spaces whose strong
/// constants lie in (1, k_target] and chains them with the strong
/// bridge at `k_target`. The result satisfies the strong axiom at
/// `k_target` but is never a metric.
///
/// Each block takes the shape `d(1,2) = d(2,3) = a/(1+k)`, `d(1,3) = a`
/// with `a` uniform in [1,2) and `k` uniform in (1, k_target], which
/// pins the block's strong constant to exactly `k` and its b-metric
/// ratio to `(1+k)/2 > 1`.
pub fn generate_strong_space(
    blocks: usize,
    k_target: f64,
    seed: u64,
) -> Result<SemimetricSpace, CombineError> {
    if !(k_target.is_finite() && k_target > 1.0) {
        return Err(CombineError::TargetNotAboveOne(k_target));
    }
    if blocks == 0 {
        return Err(CombineError::TooSmall { n: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pieces = Vec::with_capacity(blocks);
    for index in 1..=blocks {
        let mut found = None;
        for _ in 0..64 {
            let a: f64 = 1.0 + rng.gen::<f64>();
            let k: f64 = k_target - rng.gen::<f64>() * (k_target - 1.0);
            // Keep a margin above 1 so the block is not a metric even
            // under the classification tolerance.
            if k > 1.0 + 1e-6 {
                found = Some((a, k));
                break;
            }
        }
        let Some((a, k)) = found else {
            return Err(CombineError::Sampling { attempts: 64 });
        };
        let side = a / (1.0 + k);
        let labels = [
            format!("{index}.1"),
            format!("{index}.2"),
            format!("{index}.3"),
        ];
        pieces.push(labeled_three_point_space(labels, side, side, a)?);
    }
    chain_concatenate(&pieces, k_target, BridgeMode::Strong, crate::space::DEFAULT_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::DEFAULT_TOL;

    fn edge_space(label_a: &str, label_b: &str, d: f64) -> SemimetricSpace {
        SemimetricSpace::new(
            vec![label_a.to_string(), label_b.to_string()],
            vec![vec![0.0, d], vec![d, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn strong_concat_of_unit_edges_is_a_metric() {
        let s1 = edge_space("a1", "a2", 1.0);
        let s2 = edge_space("b1", "b2", 1.0);
        let joined = concatenate(&s1, &s2, 1.0, BridgeMode::Strong, DEFAULT_TOL).unwrap();
        assert_eq!(joined.len(), 4);
        assert_eq!(joined.distance(0, 2), 0.5);
        assert_eq!(joined.diameter(), 1.0);
        assert!(joined.classify(DEFAULT_TOL).is_metric);
    }

    #[test]
    fn b_concat_keeps_the_constant() {
        let s1 = three_point_space(1.0, 1.0, 4.0).unwrap();
        let s2 = edge_space("e1", "e2", 4.0);
        let joined = concatenate(&s1, &s2, 2.0, BridgeMode::BMetric, DEFAULT_TOL).unwrap();
        assert_eq!(joined.distance(0, 3), 1.0); // 4 / (2*2)
        assert!(joined.classify(DEFAULT_TOL).raw_b <= 2.0 + DEFAULT_TOL);
    }

    #[test]
    fn concat_restricts_to_its_operands() {
        let s1 = three_point_space(1.0, 1.0, 4.0).unwrap();
        let s2 = edge_space("e1", "e2", 4.0);
        let joined = concatenate(&s1, &s2, 2.0, BridgeMode::BMetric, DEFAULT_TOL).unwrap();
        let back = joined.restrict(&["1", "2", "3"]).unwrap();
        assert_eq!(back, s1);
        let back = joined.restrict(&["e1", "e2"]).unwrap();
        assert_eq!(back, s2);
    }

    #[test]
    fn concat_rejects_label_collisions_and_small_constants() {
        let s1 = three_point_space(1.0, 1.0, 4.0).unwrap();
        let clash = edge_space("1", "x", 1.0);
        assert!(matches!(
            concatenate(&s1, &clash, 2.0, BridgeMode::BMetric, DEFAULT_TOL),
            Err(CombineError::LabelCollision { .. })
        ));
        let s2 = edge_space("e1", "e2", 4.0);
        // raw_b of s1 is 2; K = 1.5 is too small.
        assert!(matches!(
            concatenate(&s1, &s2, 1.5, BridgeMode::BMetric, DEFAULT_TOL),
            Err(CombineError::ConstantTooSmall { .. })
        ));
    }

    #[test]
    fn chain_of_one_block_is_identity() {
        let s = three_point_space(1.0, 1.0, 1.0).unwrap();
        let out = chain_concatenate(std::slice::from_ref(&s), 1.0, BridgeMode::Strong, DEFAULT_TOL)
            .unwrap();
        assert_eq!(out, s);
        assert!(matches!(
            chain_concatenate(&[], 1.0, BridgeMode::Strong, DEFAULT_TOL),
            Err(CombineError::TooSmall { n: 0 })
        ));
    }

    #[test]
    fn chain_of_three_b_blocks_keeps_the_constant() {
        let blocks: Vec<SemimetricSpace> = (0..3)
            .map(|i| {
                labeled_three_point_space(
                    [format!("{i}a"), format!("{i}b"), format!("{i}c")],
                    1.0,
                    1.0,
                    4.0,
                )
                .unwrap()
            })
            .collect();
        let out = chain_concatenate(&blocks, 2.0, BridgeMode::BMetric, DEFAULT_TOL).unwrap();
        assert_eq!(out.len(), 9);
        assert!(out.classify(DEFAULT_TOL).raw_b <= 2.0 + DEFAULT_TOL);
    }

    #[test]
    fn chain_diameter_is_the_max_block_diameter() {
        let blocks = vec![
            edge_space("a1", "a2", 1.0),
            edge_space("b1", "b2", 5.0),
            edge_space("c1", "c2", 3.0),
        ];
        let out = chain_concatenate(&blocks, 1.0, BridgeMode::Strong, DEFAULT_TOL).unwrap();
        assert_eq!(out.diameter(), 5.0);
    }

    #[test]
    fn polygon_fixture_distances() {
        let s = implement_polygon(&[120.0, 20.0, 10.0, 10.0, 10.0, 10.0]).unwrap();
        assert_eq!(s.len(), 6);
        assert_eq!(s.distance(0, 5), 120.0); // long chord
        assert_eq!(s.distance(1, 3), 20.0);
        assert_eq!(s.distance(0, 2), 30.0);
        assert!((s.min_rpi_constant() - 2.0).abs() <= 1e-9);
    }

    #[test]
    fn unit_triangle_polygon_is_a_metric() {
        let s = implement_polygon(&[1.0, 1.0, 1.0]).unwrap();
        assert!(s.classify(DEFAULT_TOL).is_metric);
        assert!(s.is_ultrametric(DEFAULT_TOL));
    }

    #[test]
    fn degenerate_triangle_polygon_has_b_constant_one() {
        let s = implement_polygon(&[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(s.classify(DEFAULT_TOL).raw_b, 1.0);
    }

    #[test]
    fn polygon_rejects_bad_tuples() {
        assert!(matches!(
            implement_polygon(&[1.0, 2.0, 3.0]),
            Err(CombineError::NotSorted { index: 1 })
        ));
        assert!(matches!(
            implement_polygon(&[1.0, 1.0]),
            Err(CombineError::Degenerate { .. })
        ));
        assert!(matches!(
            implement_polygon(&[1.0, 1.0, 0.0]),
            Err(CombineError::Degenerate { .. })
        ));
    }

    #[test]
    fn polygon_distances_stay_below_the_perimeter() {
        let entries = [6.0, 5.0, 4.0, 3.0, 2.0, 1.0];
        let s = implement_polygon(&entries).unwrap();
        let perimeter: f64 = entries.iter().sum();
        for i in 0..s.len() {
            for j in 0..s.len() {
                assert!(s.distance(i, j) <= perimeter);
            }
        }
    }

    #[test]
    fn three_point_fixtures() {
        let s = three_point_space(1.0, 1.0, 4.0).unwrap();
        assert_eq!(s.classify(DEFAULT_TOL).raw_b, 2.0);
        assert!(three_point_space(1.0, 1.0, 1.0)
            .unwrap()
            .is_ultrametric(DEFAULT_TOL));
        assert_eq!(
            three_point_space(2.0, 1.0, 1.0)
                .unwrap()
                .classify(DEFAULT_TOL)
                .raw_b,
            1.0
        );
        assert!(matches!(
            three_point_space(1.0, -1.0, 1.0),
            Err(CombineError::Degenerate { .. })
        ));
    }

    #[test]
    fn generator_single_block_lands_in_range() {
        let s = generate_strong_space(1, 3.0, 7).unwrap();
        let profile = s.classify(DEFAULT_TOL);
        assert!(profile.raw_strong > 1.0);
        assert!(profile.raw_strong <= 3.0 + DEFAULT_TOL);
    }

    #[test]
    fn generator_five_blocks_strong_but_not_metric() {
        let s = generate_strong_space(5, 2.0, 42).unwrap();
        assert_eq!(s.len(), 15);
        let profile = s.classify(DEFAULT_TOL);
        assert!(profile.raw_strong <= 2.0 + DEFAULT_TOL);
        assert!(!profile.is_metric);
        assert!(profile.raw_b > 1.0);
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_strong_space(3, 2.5, 99).unwrap();
        let b = generate_strong_space(3, 2.5, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
        let c = generate_strong_space(3, 2.5, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generator_validates_its_target() {
        assert!(matches!(
            generate_strong_space(2, 1.0, 1),
            Err(CombineError::TargetNotAboveOne(_))
        ));
    }
}
