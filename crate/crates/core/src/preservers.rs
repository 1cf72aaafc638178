//! Grid-search scans for axiom-preservation behaviour of candidate
//! transforms, plus witness-space construction.
//!
//! A scan enumerates every grid tuple satisfying the source class
//! condition, pushes the tuple through `f`, re-sorts the image (the
//! transform need not be monotone), and solves for the smallest target
//! constant admitting the image. The supremum of those constants over
//! the grid is a lower bound for the true `g(K1)`; the arg-max tuple is
//! kept as a replayable witness. Scans partition by the index of the
//! largest tuple entry, so thread count never changes the result: the
//! max-reduction is associative and ties break toward the
//! lexicographically smallest source tuple.

use crate::combinators::{chain_concatenate, labeled_three_point_space, BridgeMode, CombineError};
use crate::functions::FunctionSpec;
use crate::grid::{decimate, GridDescriptor};
use crate::space::{RelaxationProfile, SemimetricSpace, SpaceError, DEFAULT_TOL};
use crate::triplets::{
    polygons_in_slot_range, triplets_in_slot_range, PolygonTuple, Triplet, TripletKind,
};
use serde::{Serialize, Serializer};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScanError {
    #[error("scans pair the polygonal axiom only with itself, got source {source_axiom} -> target {target_axiom}")]
    UnsupportedPair {
        source_axiom: Axiom,
        target_axiom: Axiom,
    },
    #[error("axiom {axiom} requires constant {expected}, got {got}")]
    InvalidClassConstant {
        axiom: Axiom,
        expected: &'static str,
        got: f64,
    },
    #[error("triplet ({0}, {1}, {2}) violates the source class condition")]
    BlockViolatesSource(f64, f64, f64),
    #[error("witness construction needs at least one triplet")]
    EmptyWitness,
    #[error("constant list must be nonempty, ascending, and at least 1")]
    BadConstantList,
    #[error(transparent)]
    Combine(#[from] CombineError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

/// Axiom ladder positions usable as scan source or target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axiom {
    #[serde(rename = "M")]
    Metric,
    #[serde(rename = "S")]
    Strong,
    #[serde(rename = "B")]
    BMetric,
    #[serde(rename = "P")]
    Rpi,
}

impl Axiom {
    /// Triplet inequality family realizing this axiom on three points;
    /// the polygonal axiom samples polygons instead.
    fn triplet_kind(self) -> Option<TripletKind> {
        match self {
            Axiom::Metric => Some(TripletKind::Triangle),
            Axiom::Strong => Some(TripletKind::StrongKTriangle),
            Axiom::BMetric => Some(TripletKind::KTriangle),
            Axiom::Rpi => None,
        }
    }

    /// Constant solved on image tuples when this axiom is the target.
    fn target_kind(self) -> TripletKind {
        match self {
            Axiom::Metric | Axiom::BMetric => TripletKind::KTriangle,
            Axiom::Strong => TripletKind::StrongKTriangle,
            Axiom::Rpi => TripletKind::Polygon,
        }
    }

    pub fn bridge_mode(self) -> BridgeMode {
        match self {
            Axiom::Metric | Axiom::Strong => BridgeMode::Strong,
            Axiom::BMetric => BridgeMode::BMetric,
            Axiom::Rpi => BridgeMode::Rpi,
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Axiom::Metric => "M",
            Axiom::Strong => "S",
            Axiom::BMetric => "B",
            Axiom::Rpi => "P",
        };
        write!(f, "{name}")
    }
}

impl FromStr for Axiom {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "m" | "metric" => Ok(Axiom::Metric),
            "s" | "strong" => Ok(Axiom::Strong),
            "b" | "b-metric" | "bmetric" => Ok(Axiom::BMetric),
            "p" | "rpi" | "polygonal" => Ok(Axiom::Rpi),
            other => Err(format!("unknown axiom {other:?} (expected M, S, B, or P)")),
        }
    }
}

/// An axiom together with a fixed relaxation constant; the metric axiom
/// admits only K = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassSpec {
    pub axiom: Axiom,
    pub k: f64,
}

impl ClassSpec {
    pub fn new(axiom: Axiom, k: f64) -> Result<Self, ScanError> {
        match axiom {
            Axiom::Metric if k != 1.0 => Err(ScanError::InvalidClassConstant {
                axiom,
                expected: "exactly 1",
                got: k,
            }),
            _ if !(k.is_finite() && k >= 1.0) => Err(ScanError::InvalidClassConstant {
                axiom,
                expected: "a finite value >= 1",
                got: k,
            }),
            _ => Ok(ClassSpec { axiom, k }),
        }
    }

    pub fn metric() -> Self {
        ClassSpec {
            axiom: Axiom::Metric,
            k: 1.0,
        }
    }
}

/// Knobs shared by every scan.
#[derive(Debug, Clone)]
pub struct ScanOptions {
    pub grid: crate::grid::GridSpec,
    /// Longest polygon tuple enumerated.
    pub max_len: usize,
    pub tol: f64,
    pub threads: usize,
    /// Enumeration cap; the grid is thinned until the tuple count fits.
    pub tuple_budget: u64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            grid: crate::grid::GridSpec::default(),
            max_len: 6,
            tol: DEFAULT_TOL,
            threads: 1,
            tuple_budget: 10_000_000,
        }
    }
}

/// Arg-max tuple of a scan with its image and the image's constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstTuple {
    pub source: Vec<f64>,
    pub image: Vec<f64>,
    #[serde(serialize_with = "serialize_constant")]
    pub constant: f64,
}

/// Outcome of one preservation scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreservationReport {
    pub function: String,
    pub source: ClassSpec,
    pub target_axiom: Axiom,
    pub grid: GridDescriptor,
    /// Grid size after budget thinning (equals `grid.len` when no
    /// thinning was needed).
    pub effective_grid_len: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_len: Option<usize>,
    /// Supremum over scanned tuples of the image constant; a lower
    /// bound for the true mapping since the grid is finite.
    #[serde(serialize_with = "serialize_constant")]
    pub estimated_k2: f64,
    pub estimate: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst: Option<WorstTuple>,
    pub violation: bool,
    pub tuples_scanned: u64,
}

fn serialize_constant<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

const ESTIMATE_LABEL: &str = "lower-bound (finite grid)";

struct Best {
    kappa: f64,
    source: Vec<f64>,
    image: Vec<f64>,
}

/// `a` strictly before `b` in (length, entries) lexicographic order.
fn lex_before(a: &[f64], b: &[f64]) -> bool {
    if a.len() != b.len() {
        return a.len() < b.len();
    }
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

fn fold_best(acc: &mut Option<Best>, cand: Best) {
    match acc {
        None => *acc = Some(cand),
        Some(best) => {
            let replace = cand.kappa > best.kappa
                || (cand.kappa == best.kappa && lex_before(&cand.source, &best.source));
            if replace {
                *best = cand;
            }
        }
    }
}

fn split_ranges(len: usize, parts: usize) -> Vec<std::ops::Range<usize>> {
    let parts = parts.max(1).min(len.max(1));
    let chunk = len.div_ceil(parts);
    (0..parts)
        .map(|p| (p * chunk).min(len)..((p + 1) * chunk).min(len))
        .filter(|r| !r.is_empty())
        .collect()
}

/// Number of nonincreasing tuples of length `n` over `g` values.
fn multisets(g: u64, n: u64) -> u128 {
    // C(g + n - 1, n) with saturation.
    let mut num: u128 = 1;
    for i in 0..n {
        num = num.saturating_mul((g + n - 1 - i) as u128);
        num /= (i + 1) as u128;
    }
    num
}

fn budgeted_grid(values: &[f64], lens: std::ops::RangeInclusive<u64>, budget: u64) -> Vec<f64> {
    let fits = |g: usize| -> bool {
        let total: u128 = lens
            .clone()
            .map(|n| multisets(g as u64, n))
            .fold(0u128, u128::saturating_add);
        total <= budget as u128
    };
    if fits(values.len()) {
        return values.to_vec();
    }
    let mut g = values.len();
    while g > 3 && !fits(g) {
        g -= 1;
    }
    decimate(values, g)
}

/// Scans every source-class tuple on the grid, mapping it through `f`
/// and solving for the smallest target constant of the sorted image.
pub fn preservation_scan(
    f: &FunctionSpec,
    source: ClassSpec,
    target: Axiom,
    opts: &ScanOptions,
) -> Result<PreservationReport, ScanError> {
    match (source.axiom, target) {
        (Axiom::Rpi, Axiom::Rpi) => scan_polygons(f, source, opts),
        (Axiom::Rpi, _) | (_, Axiom::Rpi) => Err(ScanError::UnsupportedPair {
            source_axiom: source.axiom,
            target_axiom: target,
        }),
        _ => scan_triplets(f, source, target, opts),
    }
}

fn scan_triplets(
    f: &FunctionSpec,
    source: ClassSpec,
    target: Axiom,
    opts: &ScanOptions,
) -> Result<PreservationReport, ScanError> {
    let full = opts.grid.values();
    let values = budgeted_grid(&full, 3..=3, opts.tuple_budget);
    let source_kind = source.axiom.triplet_kind().expect("triplet source");
    let target_kind = target.target_kind();
    let tol = opts.tol;

    let ranges = split_ranges(values.len(), opts.threads);
    let results: Vec<(Option<Best>, bool, u64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = ranges
            .into_iter()
            .map(|range| {
                let values = &values;
                scope.spawn(move || {
                    let mut best: Option<Best> = None;
                    let mut violation = false;
                    let mut count = 0u64;
                    for t in triplets_in_slot_range(values, range, source_kind, source.k, tol) {
                        count += 1;
                        let image = sorted_image(f, &t.values(), tol);
                        let kappa = match &image {
                            Ok(img) => {
                                let it = Triplet::new(img[0], img[1], img[2])
                                    .expect("finite image values");
                                if target == Axiom::Metric
                                    && !it.satisfies(TripletKind::Triangle, 1.0, tol)
                                {
                                    violation = true;
                                }
                                it.min_constant(target_kind)
                            }
                            Err(_) => f64::INFINITY,
                        };
                        if kappa.is_infinite() {
                            violation = true;
                        }
                        let img = match image {
                            Ok(v) | Err(v) => v,
                        };
                        fold_best(
                            &mut best,
                            Best {
                                kappa,
                                source: t.values().to_vec(),
                                image: img,
                            },
                        );
                    }
                    (best, violation, count)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("scan thread")).collect()
    });

    Ok(assemble_report(
        f,
        source,
        target,
        opts,
        values.len(),
        None,
        results,
    ))
}

fn scan_polygons(
    f: &FunctionSpec,
    source: ClassSpec,
    opts: &ScanOptions,
) -> Result<PreservationReport, ScanError> {
    let full = opts.grid.values();
    let max_len = opts.max_len.max(3);
    let values = budgeted_grid(&full, 3..=max_len as u64, opts.tuple_budget);
    let tol = opts.tol;

    let ranges = split_ranges(values.len(), opts.threads);
    let results: Vec<(Option<Best>, bool, u64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = ranges
            .into_iter()
            .map(|range| {
                let values = &values;
                scope.spawn(move || {
                    let mut best: Option<Best> = None;
                    let mut violation = false;
                    let mut count = 0u64;
                    for p in polygons_in_slot_range(values, range, source.k, max_len, tol) {
                        count += 1;
                        let image = sorted_image(f, p.entries(), tol);
                        let kappa = match &image {
                            Ok(img) => PolygonTuple::new(img)
                                .expect("finite image values")
                                .min_constant(),
                            Err(_) => f64::INFINITY,
                        };
                        if kappa.is_infinite() {
                            violation = true;
                        }
                        let img = match image {
                            Ok(v) | Err(v) => v,
                        };
                        fold_best(
                            &mut best,
                            Best {
                                kappa,
                                source: p.entries().to_vec(),
                                image: img,
                            },
                        );
                    }
                    (best, violation, count)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("scan thread")).collect()
    });

    Ok(assemble_report(
        f,
        source,
        Axiom::Rpi,
        opts,
        values.len(),
        Some(max_len),
        results,
    ))
}

/// Image of a tuple under `f`, sorted descending. `Err` carries the raw
/// image when any value came out non-finite.
fn sorted_image(f: &FunctionSpec, tuple: &[f64], tol: f64) -> Result<Vec<f64>, Vec<f64>> {
    let mut image: Vec<f64> = tuple
        .iter()
        .map(|&t| f.evaluate_with_tol(t, tol).expect("grid values nonnegative"))
        .collect();
    if image.iter().any(|v| !v.is_finite()) {
        return Err(image);
    }
    image.sort_by(|a, b| b.partial_cmp(a).expect("finite image"));
    Ok(image)
}

fn assemble_report(
    f: &FunctionSpec,
    source: ClassSpec,
    target: Axiom,
    opts: &ScanOptions,
    effective_grid_len: usize,
    max_len: Option<usize>,
    results: Vec<(Option<Best>, bool, u64)>,
) -> PreservationReport {
    let mut best: Option<Best> = None;
    let mut violation = false;
    let mut tuples_scanned = 0u64;
    for (local, viol, count) in results {
        if let Some(b) = local {
            fold_best(&mut best, b);
        }
        violation |= viol;
        tuples_scanned += count;
    }
    let estimated_k2 = best.as_ref().map_or(1.0, |b| b.kappa);
    PreservationReport {
        function: f.canonical(),
        source,
        target_axiom: target,
        grid: opts.grid.descriptor(),
        effective_grid_len,
        max_len,
        estimated_k2,
        estimate: ESTIMATE_LABEL,
        worst: best.map(|b| WorstTuple {
            source: b.source,
            image: b.image,
            constant: b.kappa,
        }),
        violation,
        tuples_scanned,
    }
}

/// One scan per source constant; the estimates are nondecreasing since
/// larger constants admit strictly more source tuples.
pub fn estimate_gmap(
    f: &FunctionSpec,
    source_axiom: Axiom,
    target_axiom: Axiom,
    k1_list: &[f64],
    opts: &ScanOptions,
) -> Result<Vec<(f64, f64)>, ScanError> {
    if k1_list.is_empty() || k1_list.windows(2).any(|w| w[0] > w[1]) {
        return Err(ScanError::BadConstantList);
    }
    let mut out = Vec::with_capacity(k1_list.len());
    for &k1 in k1_list {
        let source = ClassSpec::new(source_axiom, k1)?;
        let report = preservation_scan(f, source, target_axiom, opts)?;
        out.push((k1, report.estimated_k2));
    }
    Ok(out)
}

/// Chains one three-point block per triplet (largest value on the long
/// chord) with the source's bridge; every block must satisfy the source
/// class condition.
pub fn build_witness_space(
    triplets: &[Triplet],
    source: ClassSpec,
    tol: f64,
) -> Result<SemimetricSpace, ScanError> {
    if triplets.is_empty() {
        return Err(ScanError::EmptyWitness);
    }
    let mut blocks = Vec::with_capacity(triplets.len());
    for (index, t) in triplets.iter().enumerate() {
        let ok = match source.axiom.triplet_kind() {
            Some(kind) => t.satisfies(kind, source.k, tol),
            None => PolygonTuple::from(*t).satisfies(source.k, tol),
        };
        if !ok {
            return Err(ScanError::BlockViolatesSource(t.a(), t.b(), t.c()));
        }
        let block_id = index + 1;
        let labels = [
            format!("{block_id}.1"),
            format!("{block_id}.2"),
            format!("{block_id}.3"),
        ];
        blocks.push(labeled_three_point_space(labels, t.b(), t.c(), t.a())?);
    }
    Ok(chain_concatenate(
        &blocks,
        source.k,
        source.axiom.bridge_mode(),
        tol,
    )?)
}

/// Transforms the space and checks the target axiom at `k2` directly on
/// the classification; the non-triplet semantics of preservation, used
/// to cross-validate scans.
pub fn verify_on_space(
    f: &FunctionSpec,
    space: &SemimetricSpace,
    target_axiom: Axiom,
    k2: f64,
    tol: f64,
) -> Result<(bool, RelaxationProfile), ScanError> {
    if !(k2.is_finite() && k2 >= 1.0) {
        return Err(ScanError::InvalidClassConstant {
            axiom: target_axiom,
            expected: "a finite value >= 1",
            got: k2,
        });
    }
    let image = space.transform(f)?;
    let profile = image.classify(tol);
    let holds = match target_axiom {
        Axiom::Metric => profile.is_metric,
        Axiom::Strong => profile.k_strong <= k2 * (1.0 + tol),
        Axiom::BMetric => profile.k_b <= k2 * (1.0 + tol),
        Axiom::Rpi => profile.k_rpi <= k2 * (1.0 + tol),
    };
    Ok((holds, profile))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn f(text: &str) -> FunctionSpec {
        FunctionSpec::parse(text).unwrap()
    }

    fn opts() -> ScanOptions {
        ScanOptions::default()
    }

    #[test]
    fn squaring_breaks_metric_preservation() {
        let report =
            preservation_scan(&f("power(2)"), ClassSpec::metric(), Axiom::Metric, &opts())
                .unwrap();
        assert!(report.violation);
        let worst = report.worst.unwrap();
        // The image of the worst triplet fails the triangle inequality.
        assert!(worst.image[0] > worst.image[1] + worst.image[2]);
        assert_eq!(report.estimated_k2, 2.0);
    }

    #[test]
    fn bounded_preserves_metrics_on_the_grid() {
        let report =
            preservation_scan(&f("bounded"), ClassSpec::metric(), Axiom::Metric, &opts())
                .unwrap();
        assert!(!report.violation);
        assert_eq!(report.estimated_k2, 1.0);
    }

    #[test]
    fn identity_scan_reports_the_source_constant() {
        let source = ClassSpec::new(Axiom::BMetric, 2.0).unwrap();
        let report = preservation_scan(&f("identity"), source, Axiom::BMetric, &opts()).unwrap();
        assert_eq!(report.estimated_k2, 2.0);
        assert!(!report.violation);
        let worst = report.worst.unwrap();
        assert_eq!(worst.constant, 2.0);
    }

    #[test]
    fn scan_rejects_mixed_polygon_pairs() {
        let source = ClassSpec::new(Axiom::Rpi, 2.0).unwrap();
        assert!(matches!(
            preservation_scan(&f("identity"), source, Axiom::Metric, &opts()),
            Err(ScanError::UnsupportedPair { .. })
        ));
        let source = ClassSpec::metric();
        assert!(matches!(
            preservation_scan(&f("identity"), source, Axiom::Rpi, &opts()),
            Err(ScanError::UnsupportedPair { .. })
        ));
    }

    #[test]
    fn thread_count_does_not_change_the_report() {
        let source = ClassSpec::new(Axiom::Strong, 2.0).unwrap();
        let serial = preservation_scan(&f("power(2)"), source, Axiom::Strong, &opts()).unwrap();
        let mut parallel_opts = opts();
        parallel_opts.threads = 4;
        let parallel =
            preservation_scan(&f("power(2)"), source, Axiom::Strong, &parallel_opts).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn polygon_scan_stays_under_the_linear_bound_for_sawtooth() {
        let mut o = opts();
        // Small grid keeps this unit test quick; the acceptance suite
        // runs the full default grid.
        o.grid = GridSpec {
            step: 0.5,
            max: 4.0,
            geo_ratio: 0.5,
            geo_levels: 4,
            extra: vec![],
        };
        o.max_len = 5;
        for k1 in [1.0, 2.0] {
            let source = ClassSpec::new(Axiom::Rpi, k1).unwrap();
            let report =
                preservation_scan(&f("sawtooth(5,4)"), source, Axiom::Rpi, &o).unwrap();
            assert!(report.estimated_k2.is_finite());
            assert!(report.estimated_k2 <= 5.0 * k1 + 1e-9);
        }
    }

    #[test]
    fn gmap_identity_is_the_identity() {
        let pts = estimate_gmap(
            &f("identity"),
            Axiom::BMetric,
            Axiom::BMetric,
            &[1.0, 2.0, 4.0],
            &opts(),
        )
        .unwrap();
        for (k1, k2) in pts {
            assert_eq!(k1, k2);
        }
    }

    #[test]
    fn gmap_bounded_fixes_one() {
        let pts = estimate_gmap(&f("bounded"), Axiom::Metric, Axiom::Metric, &[1.0], &opts())
            .unwrap();
        assert_eq!(pts, vec![(1.0, 1.0)]);
    }

    #[test]
    fn gmap_is_monotone_for_squaring() {
        let pts = estimate_gmap(
            &f("power(2)"),
            Axiom::BMetric,
            Axiom::BMetric,
            &[1.0, 2.0, 4.0],
            &opts(),
        )
        .unwrap();
        assert!(pts.windows(2).all(|w| w[0].1 <= w[1].1));
        // (a+b)^2 <= 2 K^2 (a^2 + b^2) is tight at a = b on the grid.
        assert_eq!(pts[0].1, 2.0);
        assert_eq!(pts[1].1, 8.0);
        assert_eq!(pts[2].1, 32.0);
    }

    #[test]
    fn gmap_rejects_bad_lists() {
        assert!(matches!(
            estimate_gmap(&f("identity"), Axiom::BMetric, Axiom::BMetric, &[], &opts()),
            Err(ScanError::BadConstantList)
        ));
        assert!(matches!(
            estimate_gmap(
                &f("identity"),
                Axiom::BMetric,
                Axiom::BMetric,
                &[2.0, 1.0],
                &opts()
            ),
            Err(ScanError::BadConstantList)
        ));
    }

    #[test]
    fn witness_space_realizes_the_example_triplet() {
        let t = Triplet::new(4.0, 1.0, 1.0).unwrap();
        let source = ClassSpec::new(Axiom::BMetric, 2.0).unwrap();
        let space = build_witness_space(&[t], source, DEFAULT_TOL).unwrap();
        assert_eq!(space.len(), 3);
        // Distances (1,1,4) with the largest value on the long chord.
        assert_eq!(space.distance(0, 1), 1.0);
        assert_eq!(space.distance(1, 2), 1.0);
        assert_eq!(space.distance(0, 2), 4.0);
        assert_eq!(space.classify(DEFAULT_TOL).raw_b, 2.0);
    }

    #[test]
    fn witness_space_chains_blocks() {
        let ts: Vec<Triplet> = [(4.0, 1.0, 1.0), (3.0, 1.0, 0.75), (2.0, 1.0, 1.0)]
            .iter()
            .map(|&(a, b, c)| Triplet::new(a, b, c).unwrap())
            .collect();
        let source = ClassSpec::new(Axiom::BMetric, 2.0).unwrap();
        let space = build_witness_space(&ts, source, DEFAULT_TOL).unwrap();
        assert_eq!(space.len(), 9);
        assert!(space.classify(DEFAULT_TOL).raw_b <= 2.0 + DEFAULT_TOL);
    }

    #[test]
    fn witness_space_rejects_bad_blocks() {
        assert!(matches!(
            build_witness_space(&[], ClassSpec::metric(), DEFAULT_TOL),
            Err(ScanError::EmptyWitness)
        ));
        let t = Triplet::new(4.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            build_witness_space(&[t], ClassSpec::metric(), DEFAULT_TOL),
            Err(ScanError::BlockViolatesSource(4.0, 1.0, 1.0))
        ));
    }

    #[test]
    fn verify_on_space_fixtures() {
        let space = crate::combinators::three_point_space(1.0, 1.0, 4.0).unwrap();
        let (holds, profile) =
            verify_on_space(&f("bounded"), &space, Axiom::Metric, 1.0, DEFAULT_TOL).unwrap();
        assert!(holds);
        assert!(profile.is_metric);

        let (holds, _) =
            verify_on_space(&f("identity"), &space, Axiom::BMetric, 2.0, DEFAULT_TOL).unwrap();
        assert!(holds);
        let (holds, _) =
            verify_on_space(&f("identity"), &space, Axiom::BMetric, 1.5, DEFAULT_TOL).unwrap();
        assert!(!holds);
    }

    #[test]
    fn scan_and_space_semantics_agree_on_the_worst_tuple() {
        let report =
            preservation_scan(&f("power(2)"), ClassSpec::metric(), Axiom::Metric, &opts())
                .unwrap();
        let worst = report.worst.unwrap();
        let t = Triplet::new(worst.source[0], worst.source[1], worst.source[2]).unwrap();
        let space = build_witness_space(&[t], ClassSpec::metric(), DEFAULT_TOL).unwrap();
        let (holds, profile) =
            verify_on_space(&f("power(2)"), &space, Axiom::Metric, 1.0, DEFAULT_TOL).unwrap();
        assert!(!holds);
        assert!(profile.raw_b > 1.0 + DEFAULT_TOL);
        // The image constant reported by the scan matches the space's
        // clamped b-metric constant.
        assert!((profile.k_b - worst.constant).abs() <= 1e-9 * worst.constant);
    }

    // For a metric target the violation flag comes from the triangle
    // predicate and the estimate from the solved constant; the two
    // routes agree on whether anything broke.
    #[test]
    fn violation_flag_agrees_with_the_estimated_constant() {
        for (text, expect_violation) in [("power(2)", true), ("bounded", false), ("identity", false)]
        {
            let report =
                preservation_scan(&f(text), ClassSpec::metric(), Axiom::Metric, &opts()).unwrap();
            assert_eq!(report.violation, expect_violation, "{text}");
            assert_eq!(
                report.violation,
                report.estimated_k2 > 1.0 + DEFAULT_TOL,
                "{text}"
            );
        }
    }

    #[test]
    fn collapsing_functions_report_an_infinite_estimate() {
        // Zero below 1, linear above: maps (2,1,1) to (1,0,0), which no
        // finite constant repairs.
        let report = preservation_scan(
            &f("pwl(0,0,1,0,2,1)"),
            ClassSpec::metric(),
            Axiom::Metric,
            &opts(),
        )
        .unwrap();
        assert!(report.violation);
        assert!(report.estimated_k2.is_infinite());
        let text = serde_json::to_string(&report).unwrap();
        assert!(text.contains("\"estimated_k2\":\"inf\""));
    }

    #[test]
    fn class_spec_pins_metric_constant_to_one() {
        assert!(ClassSpec::new(Axiom::Metric, 2.0).is_err());
        assert!(ClassSpec::new(Axiom::BMetric, 0.5).is_err());
        assert!(ClassSpec::new(Axiom::Strong, 3.0).is_ok());
    }
}
