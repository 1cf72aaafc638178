//! Triangle-like triplets, relaxed polygons, and their minimal-constant
//! solvers.
//!
//! A [`Triplet`] holds three nonnegative values sorted nonincreasing;
//! a [`PolygonTuple`] generalizes this to tuples of length >= 3. Each
//! [`TripletKind`] names one inequality family on the sorted values:
//!
//! * `Triangle`:        a <= b + c
//! * `KTriangle`:       a <= K (b + c)
//! * `StrongKTriangle`: a <= K c + b
//! * `Polygon`:         a1 <= K (a2 + ... + an)
//!
//! `min_constant` solves each inequality for the smallest admissible
//! K >= 1, returning `f64::INFINITY` when no finite constant works.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TupleError {
    #[error("tuple values must be nonnegative, got {0}")]
    Negative(f64),
    #[error("tuple values must be finite, got {0}")]
    Nonfinite(f64),
    #[error("polygon tuple needs at least 3 entries, got {0}")]
    TooShort(usize),
}

/// Inequality family checked against a tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TripletKind {
    Triangle,
    KTriangle,
    StrongKTriangle,
    Polygon,
}

/// Three nonnegative reals, held sorted nonincreasing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Triplet {
    a: f64,
    b: f64,
    c: f64,
}

impl Triplet {
    /// Builds a triplet from values in any order; they are sorted
    /// descending so `a() >= b() >= c()`.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, TupleError> {
        let mut v = [x, y, z];
        for &e in &v {
            if e.is_nan() || e.is_infinite() {
                return Err(TupleError::Nonfinite(e));
            }
            if e < 0.0 {
                return Err(TupleError::Negative(e));
            }
        }
        v.sort_by(|p, q| q.partial_cmp(p).expect("finite values"));
        Ok(Triplet {
            a: v[0],
            b: v[1],
            c: v[2],
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn values(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    /// Whether the triplet satisfies `kind` at constant `k`. The
    /// tolerance scales the constant: "satisfies with K" means
    /// "satisfies with K*(1+tol)", and the plain triangle inequality is
    /// the K = 1 case.
    pub fn satisfies(&self, kind: TripletKind, k: f64, tol: f64) -> bool {
        let rhs = match kind {
            TripletKind::Triangle => (1.0 + tol) * (self.b + self.c),
            TripletKind::KTriangle | TripletKind::Polygon => {
                k * (1.0 + tol) * (self.b + self.c)
            }
            TripletKind::StrongKTriangle => k * (1.0 + tol) * self.c + self.b,
        };
        self.a <= rhs
    }

    /// Smallest K >= 1 for which `satisfies(kind, K, 0)` holds, or
    /// infinity when no finite K does. For `Triangle` the constant plays
    /// no role, so the answer is 1 when the inequality holds and
    /// infinity otherwise.
    pub fn min_constant(&self, kind: TripletKind) -> f64 {
        match kind {
            TripletKind::Triangle => {
                if self.a <= self.b + self.c {
                    1.0
                } else {
                    f64::INFINITY
                }
            }
            TripletKind::KTriangle | TripletKind::Polygon => ratio_constant(self.a, self.b + self.c),
            TripletKind::StrongKTriangle => {
                if self.c > 0.0 {
                    1.0f64.max((self.a - self.b) / self.c)
                } else if self.a <= self.b {
                    1.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

fn ratio_constant(top: f64, bottom: f64) -> f64 {
    if bottom > 0.0 {
        1.0f64.max(top / bottom)
    } else if top > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

/// Nonnegative reals of length >= 3, held sorted nonincreasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolygonTuple {
    entries: Vec<f64>,
}

impl PolygonTuple {
    pub fn new(values: &[f64]) -> Result<Self, TupleError> {
        if values.len() < 3 {
            return Err(TupleError::TooShort(values.len()));
        }
        for &e in values {
            if e.is_nan() || e.is_infinite() {
                return Err(TupleError::Nonfinite(e));
            }
            if e < 0.0 {
                return Err(TupleError::Negative(e));
            }
        }
        let mut entries = values.to_vec();
        entries.sort_by(|p, q| q.partial_cmp(p).expect("finite values"));
        Ok(PolygonTuple { entries })
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn tail_sum(&self) -> f64 {
        self.entries[1..].iter().sum()
    }

    /// K-relaxed polygon check `a1 <= K * (a2 + ... + an)`, with the
    /// tolerance scaling the constant.
    pub fn satisfies(&self, k: f64, tol: f64) -> bool {
        self.entries[0] <= k * (1.0 + tol) * self.tail_sum()
    }

    /// Smallest K >= 1 making this a K-relaxed polygon, or infinity.
    pub fn min_constant(&self) -> f64 {
        ratio_constant(self.entries[0], self.tail_sum())
    }
}

impl From<Triplet> for PolygonTuple {
    fn from(t: Triplet) -> Self {
        PolygonTuple {
            entries: vec![t.a, t.b, t.c],
        }
    }
}

/// All sorted triplets over `values` (ascending grid values) that satisfy
/// the source condition `(kind, k1)`. Enumeration order is by index of
/// the largest entry, then the middle, then the smallest, ascending.
pub fn sample_triplets<'a>(
    values: &'a [f64],
    kind: TripletKind,
    k1: f64,
    tol: f64,
) -> impl Iterator<Item = Triplet> + 'a {
    triplets_in_slot_range(values, 0..values.len(), kind, k1, tol)
}

/// Same stream as [`sample_triplets`] but restricted to largest-entry
/// indices in `slots`; scan partitions use this to split work by outer
/// index without changing the union of results.
pub fn triplets_in_slot_range<'a>(
    values: &'a [f64],
    slots: std::ops::Range<usize>,
    kind: TripletKind,
    k1: f64,
    tol: f64,
) -> impl Iterator<Item = Triplet> + 'a {
    slots.flat_map(move |ia| {
        (0..=ia).flat_map(move |ib| {
            (0..=ib).filter_map(move |ic| {
                let t = Triplet {
                    a: values[ia],
                    b: values[ib],
                    c: values[ic],
                };
                t.satisfies(kind, k1, tol).then_some(t)
            })
        })
    })
}

/// All sorted tuples of length `3..=max_len` over `values` that are
/// K1-relaxed polygons, shorter tuples first, then lexicographic by
/// descending-entry indices.
pub fn sample_polygons<'a>(
    values: &'a [f64],
    k1: f64,
    max_len: usize,
    tol: f64,
) -> impl Iterator<Item = PolygonTuple> + 'a {
    polygons_in_slot_range(values, 0..values.len(), k1, max_len, tol)
}

/// [`sample_polygons`] restricted to largest-entry indices in `slots`.
pub fn polygons_in_slot_range<'a>(
    values: &'a [f64],
    slots: std::ops::Range<usize>,
    k1: f64,
    max_len: usize,
    tol: f64,
) -> impl Iterator<Item = PolygonTuple> + 'a {
    PolygonIter {
        values,
        slots,
        k1,
        tol,
        max_len: max_len.max(3),
        len: 3,
        indices: Vec::new(),
        done: false,
    }
}

struct PolygonIter<'a> {
    values: &'a [f64],
    slots: std::ops::Range<usize>,
    k1: f64,
    tol: f64,
    max_len: usize,
    len: usize,
    /// Odometer of grid indices, nonincreasing left to right; empty
    /// means "not yet started for the current length".
    indices: Vec<usize>,
    done: bool,
}

impl PolygonIter<'_> {
    fn advance(&mut self) -> bool {
        if self.values.is_empty() || self.slots.is_empty() {
            return false;
        }
        loop {
            if self.indices.is_empty() {
                if self.len > self.max_len {
                    return false;
                }
                let mut first = vec![0usize; self.len];
                first[0] = self.slots.start;
                self.indices = first;
                return true;
            }
            // Increment the rightmost slot that can still grow under the
            // nonincreasing constraint; the head slot is capped by the
            // partition range.
            let mut pos = self.len;
            loop {
                if pos == 0 {
                    self.indices.clear();
                    self.len += 1;
                    break;
                }
                pos -= 1;
                let cap = if pos == 0 {
                    self.slots.end - 1
                } else {
                    self.indices[pos - 1]
                };
                if self.indices[pos] < cap {
                    self.indices[pos] += 1;
                    for p in pos + 1..self.len {
                        self.indices[p] = 0;
                    }
                    return true;
                }
            }
        }
    }
}

impl Iterator for PolygonIter<'_> {
    type Item = PolygonTuple;

    fn next(&mut self) -> Option<PolygonTuple> {
        if self.done {
            return None;
        }
        loop {
            if !self.advance() {
                self.done = true;
                return None;
            }
            let entries: Vec<f64> = self.indices.iter().map(|&i| self.values[i]).collect();
            let tuple = PolygonTuple { entries };
            if tuple.satisfies(self.k1, self.tol) {
                return Some(tuple);
            }
        }
    }
}
