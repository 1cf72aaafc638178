//! Finite semimetric spaces: validated distance matrices, axiom
//! classification, and exact minimal relaxation constants.
//!
//! A semimetric only promises symmetry and point separation. The
//! classification here measures how far a space is from the stronger
//! axioms as supremum ratios:
//!
//! * `raw_b`      — max of `d(x,z) / (d(x,y) + d(y,z))` over triples;
//! * `raw_strong` — max of `(d(x,z) - d(y,z)) / d(x,y)` over triples;
//! * `raw_rpi`    — max of `d(x,y) / sp(x,y)` where `sp` is the
//!   shortest-path closure of the matrix.
//!
//! A space satisfies the corresponding axiom with constant K exactly
//! when `K >= max(1, raw)`. Raw values are reported unclamped so that
//! spaces strictly below an axiom's threshold stay distinguishable;
//! the clamped constants live in [`RelaxationProfile`].

use crate::functions::FunctionSpec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default relative tolerance for all floating comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("need at least 2 points and a matching square matrix: {n} points, {rows}x{cols} matrix")]
    Shape { n: usize, rows: usize, cols: usize },
    #[error("duplicate point label {label:?}")]
    DuplicateLabel { label: String },
    #[error("asymmetric distances: d({i},{j}) = {forward} but d({j},{i}) = {backward}")]
    Asymmetry {
        i: usize,
        j: usize,
        forward: f64,
        backward: f64,
    },
    #[error("distance axiom violated at ({i},{j}): {value} (diagonal must be 0, off-diagonal positive)")]
    ZeroDistance { i: usize, j: usize, value: f64 },
    #[error("non-finite entry at ({i},{j}): {value}")]
    NonfiniteEntry { i: usize, j: usize, value: f64 },
    #[error("invalid space JSON: {0}")]
    Parse(String),
}

/// An immutable, validated finite semimetric space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemimetricSpace {
    points: Vec<String>,
    matrix: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawSpace {
    points: Vec<String>,
    matrix: Vec<Vec<f64>>,
}

impl SemimetricSpace {
    /// Validates labels and matrix against the semimetric axioms:
    /// zero diagonal, positive symmetric off-diagonal, finite entries.
    pub fn new<S: Into<String>>(
        labels: Vec<S>,
        matrix: Vec<Vec<f64>>,
    ) -> Result<Self, SpaceError> {
        let points: Vec<String> = labels.into_iter().map(Into::into).collect();
        let n = points.len();
        let rows = matrix.len();
        let cols = matrix.first().map_or(0, Vec::len);
        if n < 2 || rows != n || matrix.iter().any(|r| r.len() != n) {
            return Err(SpaceError::Shape { n, rows, cols });
        }
        for (i, label) in points.iter().enumerate() {
            if points[..i].contains(label) {
                return Err(SpaceError::DuplicateLabel {
                    label: label.clone(),
                });
            }
        }
        for (i, row) in matrix.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(SpaceError::NonfiniteEntry { i, j, value: v });
                }
            }
        }
        // Report the worst symmetry break, not the first.
        let mut worst: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            for j in i + 1..n {
                let gap = (matrix[i][j] - matrix[j][i]).abs();
                if gap > 0.0 && worst.map_or(true, |(_, _, g)| gap > g) {
                    worst = Some((i, j, gap));
                }
            }
        }
        if let Some((i, j, _)) = worst {
            return Err(SpaceError::Asymmetry {
                i,
                j,
                forward: matrix[i][j],
                backward: matrix[j][i],
            });
        }
        for i in 0..n {
            if matrix[i][i] != 0.0 {
                return Err(SpaceError::ZeroDistance {
                    i,
                    j: i,
                    value: matrix[i][i],
                });
            }
            for j in i + 1..n {
                if matrix[i][j] <= 0.0 {
                    return Err(SpaceError::ZeroDistance {
                        i,
                        j,
                        value: matrix[i][j],
                    });
                }
            }
        }
        Ok(SemimetricSpace { points, matrix })
    }

    pub fn from_json(text: &str) -> Result<Self, SpaceError> {
        let raw: RawSpace =
            serde_json::from_str(text).map_err(|e| SpaceError::Parse(e.to_string()))?;
        SemimetricSpace::new(raw.points, raw.matrix)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("space serializes")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.points
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.matrix[i][j]
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.points.iter().position(|p| p == label)
    }

    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                d = d.max(self.matrix[i][j]);
            }
        }
        d
    }

    /// Sub-space induced by `labels` (which must all exist and number at
    /// least 2), in the order given.
    pub fn restrict(&self, labels: &[&str]) -> Option<SemimetricSpace> {
        let idx: Option<Vec<usize>> = labels.iter().map(|l| self.label_index(l)).collect();
        let idx = idx?;
        if idx.len() < 2 {
            return None;
        }
        let matrix = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| self.matrix[i][j]).collect())
            .collect();
        SemimetricSpace::new(labels.iter().map(|l| l.to_string()).collect(), matrix).ok()
    }

    /// Supremum of `d(x,z) / (d(x,y) + d(y,z))` over triples with
    /// `x != z`, `y` distinct from both. Empty maxima (2-point spaces)
    /// give 0 by convention.
    pub fn min_b_constant(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0f64;
        for i in 0..n {
            for k in i + 1..n {
                for j in 0..n {
                    if j == i || j == k {
                        continue;
                    }
                    best = best.max(self.matrix[i][k] / (self.matrix[i][j] + self.matrix[j][k]));
                }
            }
        }
        best
    }

    /// Supremum of `(d(x,z) - d(y,z)) / d(x,y)` over ordered triples of
    /// pairwise distinct points; 0 for 2-point spaces.
    pub fn min_strong_constant(&self) -> f64 {
        let n = self.len();
        if n < 3 {
            return 0.0;
        }
        let mut best = f64::NEG_INFINITY;
        for x in 0..n {
            for y in 0..n {
                if y == x {
                    continue;
                }
                for z in 0..n {
                    if z == x || z == y {
                        continue;
                    }
                    best = best.max((self.matrix[x][z] - self.matrix[y][z]) / self.matrix[x][y]);
                }
            }
        }
        best
    }

    /// Supremum of `d(x,y) / sp(x,y)` where `sp` is the shortest-path
    /// closure; always >= 1. The space satisfies the K-relaxed polygonal
    /// inequality exactly for K >= this value.
    pub fn min_rpi_constant(&self) -> f64 {
        self.rpi_certificate().raw
    }

    /// Shortest-path closure together with the supremum ratio. The
    /// closure is a genuine metric `sp <= d <= max(1, raw) * sp`, the
    /// two-sided metric bound characterizing the relaxed polygonal
    /// inequality.
    pub fn rpi_certificate(&self) -> RpiCertificate {
        let n = self.len();
        let mut sp = self.matrix.clone();
        // All-pairs relaxation, iterated to a fixpoint so the closure
        // satisfies sp[i][j] <= sp[i][k] + sp[k][j] exactly even under
        // floating-point rounding.
        loop {
            let mut changed = false;
            for k in 0..n {
                for i in 0..n {
                    for j in i + 1..n {
                        let via = sp[i][k] + sp[k][j];
                        if via < sp[i][j] {
                            sp[i][j] = via;
                            sp[j][i] = via;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut raw = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                raw = raw.max(self.matrix[i][j] / sp[i][j]);
            }
        }
        RpiCertificate { raw, closure: sp }
    }

    /// Whether `d(x,z) <= max(d(x,y), d(y,z)) * (1 + tol)` for all
    /// triples.
    pub fn is_ultrametric(&self, tol: f64) -> bool {
        let n = self.len();
        for i in 0..n {
            for k in i + 1..n {
                for j in 0..n {
                    if j == i || j == k {
                        continue;
                    }
                    let bound = self.matrix[i][j].max(self.matrix[j][k]);
                    if self.matrix[i][k] > bound * (1.0 + tol) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Full relaxation profile at tolerance `tol`.
    pub fn classify(&self, tol: f64) -> RelaxationProfile {
        let raw_b = self.min_b_constant();
        let raw_strong = self.min_strong_constant();
        let raw_rpi = self.min_rpi_constant();
        RelaxationProfile {
            raw_b,
            raw_strong,
            raw_rpi,
            k_b: raw_b.max(1.0),
            k_strong: raw_strong.max(1.0),
            k_rpi: raw_rpi.max(1.0),
            is_ultrametric: self.is_ultrametric(tol),
            is_metric: raw_b <= 1.0 + tol,
            tol,
        }
    }

    /// Pointwise image space `f(d(x,y))`, re-validated; fails with
    /// `ZeroDistance` when `f` sends a positive distance to 0 and with
    /// `NonfiniteEntry` when it overflows.
    pub fn transform(&self, f: &FunctionSpec) -> Result<SemimetricSpace, SpaceError> {
        let n = self.len();
        let mut matrix = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f
                    .evaluate(self.matrix[i][j])
                    .expect("distances are nonnegative");
                matrix[i][j] = v;
                matrix[j][i] = v;
            }
        }
        SemimetricSpace::new(self.points.clone(), matrix)
    }
}

/// Shortest-path closure of a space plus its supremum distortion ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RpiCertificate {
    pub raw: f64,
    pub closure: Vec<Vec<f64>>,
}

/// Raw supremum ratios and clamped minimal constants for the axiom
/// ladder, at a fixed tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationProfile {
    pub raw_b: f64,
    pub raw_strong: f64,
    pub raw_rpi: f64,
    pub k_b: f64,
    pub k_strong: f64,
    pub k_rpi: f64,
    pub is_ultrametric: bool,
    pub is_metric: bool,
    pub tol: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::FunctionSpec;

    fn space(a: f64, b: f64, c: f64) -> SemimetricSpace {
        // d(1,2)=a, d(2,3)=b, d(1,3)=c
        SemimetricSpace::new(
            vec!["1", "2", "3"],
            vec![vec![0.0, a, c], vec![a, 0.0, b], vec![c, b, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn validates_the_one_one_four_space() {
        let s = space(1.0, 1.0, 4.0);
        assert_eq!(s.len(), 3);
        assert_eq!(s.distance(0, 2), 4.0);
        assert_eq!(s.diameter(), 4.0);
    }

    #[test]
    fn rejects_zero_off_diagonal() {
        let err = SemimetricSpace::new(
            vec!["a", "b"],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        )
        .unwrap_err();
        assert!(matches!(err, SpaceError::ZeroDistance { i: 0, j: 1, .. }));
    }

    #[test]
    fn rejects_asymmetry_with_worst_pair() {
        let err = SemimetricSpace::new(
            vec!["1", "2", "3"],
            vec![
                vec![0.0, 1.0, 4.0],
                vec![2.0, 0.0, 1.0],
                vec![4.0, 1.1, 0.0],
            ],
        )
        .unwrap_err();
        match err {
            SpaceError::Asymmetry { i, j, forward, backward } => {
                assert_eq!((i, j), (0, 1));
                assert_eq!((forward, backward), (1.0, 2.0));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_shape_and_label_problems() {
        assert!(matches!(
            SemimetricSpace::new(vec!["a"], vec![vec![0.0]]),
            Err(SpaceError::Shape { .. })
        ));
        assert!(matches!(
            SemimetricSpace::new(
                vec!["a", "a"],
                vec![vec![0.0, 1.0], vec![1.0, 0.0]]
            ),
            Err(SpaceError::DuplicateLabel { .. })
        ));
        assert!(matches!(
            SemimetricSpace::new(
                vec!["a", "b"],
                vec![vec![0.0, f64::INFINITY], vec![f64::INFINITY, 0.0]]
            ),
            Err(SpaceError::NonfiniteEntry { .. })
        ));
    }

    #[test]
    fn nonzero_diagonal_is_a_zero_distance_error() {
        let err = SemimetricSpace::new(
            vec!["a", "b"],
            vec![vec![0.5, 1.0], vec![1.0, 0.0]],
        )
        .unwrap_err();
        assert!(matches!(err, SpaceError::ZeroDistance { i: 0, j: 0, .. }));
    }

    #[test]
    fn b_constant_fixtures() {
        assert_eq!(space(1.0, 1.0, 4.0).min_b_constant(), 2.0);
        assert_eq!(space(0.25, 0.25, 4.0).min_b_constant(), 8.0);
        let two = SemimetricSpace::new(
            vec!["a", "b"],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        )
        .unwrap();
        assert_eq!(two.min_b_constant(), 0.0);
    }

    #[test]
    fn strong_constant_fixtures() {
        assert_eq!(space(1.0, 1.0, 4.0).min_strong_constant(), 3.0);
        assert_eq!(space(0.25, 0.25, 4.0).min_strong_constant(), 15.0);
    }

    #[test]
    fn rpi_constant_fixtures() {
        assert_eq!(space(1.0, 1.0, 4.0).min_rpi_constant(), 2.0);
        // A genuine metric: closure equals the matrix.
        assert_eq!(space(1.0, 1.0, 1.5).min_rpi_constant(), 1.0);
    }

    #[test]
    fn rpi_certificate_is_a_metric_bound() {
        let s = space(1.0, 1.0, 4.0);
        let cert = s.rpi_certificate();
        assert_eq!(cert.closure[0][2], 2.0);
        let k = cert.raw.max(1.0);
        for i in 0..3 {
            for j in 0..3 {
                assert!(cert.closure[i][j] <= s.distance(i, j));
                assert!(s.distance(i, j) <= (k + DEFAULT_TOL) * cert.closure[i][j]);
            }
        }
    }

    #[test]
    fn ultrametric_fixtures() {
        let discrete = SemimetricSpace::new(
            vec!["a", "b", "c", "d"],
            vec![
                vec![0.0, 1.0, 1.0, 1.0],
                vec![1.0, 0.0, 1.0, 1.0],
                vec![1.0, 1.0, 0.0, 1.0],
                vec![1.0, 1.0, 1.0, 0.0],
            ],
        )
        .unwrap();
        assert!(discrete.is_ultrametric(DEFAULT_TOL));
        assert!(!space(1.0, 1.0, 4.0).is_ultrametric(DEFAULT_TOL));
        assert!(space(1.0, 1.0, 1.0).is_ultrametric(DEFAULT_TOL));
    }

    #[test]
    fn classify_one_one_four() {
        let p = space(1.0, 1.0, 4.0).classify(DEFAULT_TOL);
        assert_eq!(p.raw_b, 2.0);
        assert_eq!(p.raw_rpi, 2.0);
        assert_eq!(p.raw_strong, 3.0);
        assert!(!p.is_metric);
        assert!(!p.is_ultrametric);
        assert_eq!(p.k_b, 2.0);
        assert_eq!(p.k_strong, 3.0);
    }

    #[test]
    fn classify_clamps_raw_values_below_one() {
        let p = space(1.0, 1.0, 1.0).classify(DEFAULT_TOL);
        assert_eq!(p.raw_b, 0.5);
        assert_eq!(p.k_b, 1.0);
        assert!(p.is_metric);
        assert!(p.is_ultrametric);
    }

    #[test]
    fn transform_under_bounded_fixture() {
        let f = FunctionSpec::parse("bounded").unwrap();
        let s = space(1.0, 1.0, 4.0).transform(&f).unwrap();
        assert_eq!(s.distance(0, 1), 0.5);
        assert_eq!(s.distance(1, 2), 0.5);
        assert_eq!(s.distance(0, 2), 0.8);
        assert!(s.classify(DEFAULT_TOL).is_metric);

        let s = space(0.25, 0.25, 4.0).transform(&f).unwrap();
        assert_eq!(s.distance(0, 1), 0.2);
        assert_eq!(s.distance(0, 2), 0.8);
        assert_eq!(s.classify(DEFAULT_TOL).raw_b, 2.0);
    }

    #[test]
    fn transform_under_identity_is_exact() {
        let f = FunctionSpec::parse("identity").unwrap();
        let s = space(1.0, 1.0, 4.0);
        assert_eq!(s.transform(&f).unwrap(), s);
    }

    #[test]
    fn transform_rejects_distance_collapse() {
        // Zero below 1, linear above: collapses the two unit distances.
        let f = FunctionSpec::parse("pwl(0,0,1,0,2,1)").unwrap();
        let err = space(1.0, 1.0, 4.0).transform(&f).unwrap_err();
        assert!(matches!(err, SpaceError::ZeroDistance { .. }));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let s = space(0.2, 0.1, 0.30000000000000004);
        let text = s.to_json();
        let back = SemimetricSpace::from_json(&text).unwrap();
        assert_eq!(s, back);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(
                    s.distance(i, j).to_bits(),
                    back.distance(i, j).to_bits()
                );
            }
        }
    }

    #[test]
    fn restriction_extracts_sub_spaces() {
        let s = space(1.0, 1.0, 4.0);
        let sub = s.restrict(&["1", "3"]).unwrap();
        assert_eq!(sub.distance(0, 1), 4.0);
        assert!(s.restrict(&["1", "zzz"]).is_none());
    }
}
