//! Candidate distance-transform functions `f : [0, inf) -> [0, inf)` as
//! expression trees, plus grid-sampled pointwise property checks.
//!
//! The builtin catalog covers the standard zoo: `identity`, `linear(a)`,
//! `bounded` (`t / (1+t)`), `power(p)`, `sawtooth(c1,c2)`
//! (`c1*t - c2*floor(t)`), `cap(c)` (`min(t,c)`), `tight(v)` (0 at 0,
//! `v*(1 + t/(1+t))` for positive t), and `pwl(x1,y1,x2,y2,...)`
//! piecewise-linear interpolation. Trees combine via `compose(f,g)`,
//! `scale(k,f)` and `sum(f,g)`.
//!
//! Property verdicts are grid-relative: `NoViolationFound` means no
//! counterexample was found on the sampled grid, never that the property
//! holds on all of `[0, inf)`.

use crate::grid::{GridDescriptor, GridSpec};
use crate::space::DEFAULT_TOL;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FnParseError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown builtin {name:?} at byte {pos}")]
    UnknownBuiltin { name: String, pos: usize },
    #[error("{name} expects {expected}, got {got} argument(s)")]
    Arity {
        name: String,
        expected: &'static str,
        got: usize,
    },
    #[error("invalid parameter for {name}: {msg}")]
    InvalidParameter { name: String, msg: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("function evaluated at negative input {0}")]
    Domain(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("unknown property {0:?}")]
pub struct UnknownPropertyError(pub String);

/// Expression tree for a candidate transform.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Identity,
    Linear(f64),
    Bounded,
    Power(f64),
    Sawtooth(f64, f64),
    Cap(f64),
    Tight(f64),
    Pwl(Vec<(f64, f64)>),
    Compose(Box<FunctionSpec>, Box<FunctionSpec>),
    Scale(f64, Box<FunctionSpec>),
    Sum(Box<FunctionSpec>, Box<FunctionSpec>),
}

impl FunctionSpec {
    /// Parses the function DSL: `name`, `name(args)`, `compose(f,g)`,
    /// `scale(k[,f])`, `sum(f,g)`; arguments are decimal literals and
    /// whitespace is insignificant.
    pub fn parse(text: &str) -> Result<FunctionSpec, FnParseError> {
        let mut parser = Parser {
            text: text.as_bytes(),
            pos: 0,
        };
        let expr = parser.expr()?;
        parser.skip_ws();
        if parser.pos != parser.text.len() {
            return Err(FnParseError::Parse {
                pos: parser.pos,
                msg: "trailing input".into(),
            });
        }
        Ok(expr)
    }

    /// Evaluates at `t >= 0` with the default tolerance for floor
    /// snapping.
    pub fn evaluate(&self, t: f64) -> Result<f64, EvalError> {
        self.evaluate_with_tol(t, DEFAULT_TOL)
    }

    /// Evaluates at `t >= 0`. Inputs within `tol` (relative) of an
    /// integer are snapped before flooring so that decimal grid points
    /// behave exactly.
    pub fn evaluate_with_tol(&self, t: f64, tol: f64) -> Result<f64, EvalError> {
        if t < 0.0 || t.is_nan() {
            return Err(EvalError::Domain(t));
        }
        Ok(self.eval_nonneg(t, tol))
    }

    fn eval_nonneg(&self, t: f64, tol: f64) -> f64 {
        match self {
            FunctionSpec::Identity => t,
            FunctionSpec::Linear(a) => a * t,
            FunctionSpec::Bounded => t / (1.0 + t),
            FunctionSpec::Power(p) => t.powf(*p),
            FunctionSpec::Sawtooth(c1, c2) => c1 * t - c2 * snapped_floor(t, tol),
            FunctionSpec::Cap(c) => t.min(*c),
            FunctionSpec::Tight(v) => {
                if t == 0.0 {
                    0.0
                } else {
                    v * (1.0 + t / (1.0 + t))
                }
            }
            FunctionSpec::Pwl(points) => eval_pwl(points, t),
            FunctionSpec::Compose(f, g) => f.eval_nonneg(g.eval_nonneg(t, tol), tol),
            FunctionSpec::Scale(k, f) => k * f.eval_nonneg(t, tol),
            FunctionSpec::Sum(f, g) => f.eval_nonneg(t, tol) + g.eval_nonneg(t, tol),
        }
    }

    /// Canonical DSL form; `parse(canonical)` reproduces the tree.
    pub fn canonical(&self) -> String {
        self.to_string()
    }
}

fn snapped_floor(t: f64, tol: f64) -> f64 {
    let nearest = t.round();
    if (t - nearest).abs() <= tol * t.abs().max(1.0) {
        nearest
    } else {
        t.floor()
    }
}

fn eval_pwl(points: &[(f64, f64)], t: f64) -> f64 {
    debug_assert!(!points.is_empty());
    let (last_x, last_y) = *points.last().expect("validated nonempty");
    if t >= last_x {
        // Extend with the slope of the final segment (constant when a
        // single breakpoint was given), clamped into the codomain.
        let slope = if points.len() >= 2 {
            let (px, py) = points[points.len() - 2];
            (last_y - py) / (last_x - px)
        } else {
            0.0
        };
        return (last_y + slope * (t - last_x)).max(0.0);
    }
    let hi = points.iter().position(|&(x, _)| t < x).expect("t below last x");
    debug_assert!(hi > 0, "first breakpoint is x = 0");
    let (x0, y0) = points[hi - 1];
    let (x1, y1) = points[hi];
    y0 + (y1 - y0) * (t - x0) / (x1 - x0)
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Identity => write!(f, "identity"),
            FunctionSpec::Linear(a) => write!(f, "linear({a})"),
            FunctionSpec::Bounded => write!(f, "bounded"),
            FunctionSpec::Power(p) => write!(f, "power({p})"),
            FunctionSpec::Sawtooth(c1, c2) => write!(f, "sawtooth({c1},{c2})"),
            FunctionSpec::Cap(c) => write!(f, "cap({c})"),
            FunctionSpec::Tight(v) => write!(f, "tight({v})"),
            FunctionSpec::Pwl(points) => {
                write!(f, "pwl(")?;
                for (i, (x, y)) in points.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x},{y}")?;
                }
                write!(f, ")")
            }
            FunctionSpec::Compose(a, b) => write!(f, "compose({a},{b})"),
            FunctionSpec::Scale(k, g) => write!(f, "scale({k},{g})"),
            FunctionSpec::Sum(a, b) => write!(f, "sum({a},{b})"),
        }
    }
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn expect(&mut self, byte: u8) -> Result<(), FnParseError> {
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(FnParseError::Parse {
                pos: self.pos,
                msg: format!("expected {:?}", byte as char),
            })
        }
    }

    fn ident(&mut self) -> Result<(String, usize), FnParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len() {
            let b = self.text[self.pos];
            if b.is_ascii_alphabetic() || b == b'_' || (b == b'-' && self.pos > start) {
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(FnParseError::Parse {
                pos: start,
                msg: "expected a function name".into(),
            });
        }
        let name = std::str::from_utf8(&self.text[start..self.pos])
            .expect("ascii slice")
            .to_string();
        Ok((name, start))
    }

    fn number(&mut self) -> Result<f64, FnParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.text.get(self.pos) == Some(&b'-') || self.text.get(self.pos) == Some(&b'+') {
            self.pos += 1;
        }
        while self.pos < self.text.len() {
            let b = self.text[self.pos];
            if b.is_ascii_digit() || b == b'.' || b == b'e' || b == b'E' {
                self.pos += 1;
                // allow exponent signs
                if (b == b'e' || b == b'E')
                    && matches!(self.text.get(self.pos), Some(b'-') | Some(b'+'))
                {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
        let token = std::str::from_utf8(&self.text[start..self.pos]).expect("ascii slice");
        token.parse::<f64>().map_err(|_| FnParseError::Parse {
            pos: start,
            msg: format!("expected a decimal literal, got {token:?}"),
        })
    }

    /// Comma-separated decimal literals inside parentheses.
    fn number_args(&mut self) -> Result<Vec<f64>, FnParseError> {
        self.expect(b'(')?;
        let mut out = vec![self.number()?];
        while self.peek() == Some(b',') {
            self.pos += 1;
            out.push(self.number()?);
        }
        self.expect(b')')?;
        Ok(out)
    }

    fn expr(&mut self) -> Result<FunctionSpec, FnParseError> {
        let (name, start) = self.ident()?;
        match name.as_str() {
            "identity" => Ok(FunctionSpec::Identity),
            "bounded" => Ok(FunctionSpec::Bounded),
            "linear" => {
                let args = self.unary_args(&name)?;
                build_linear(args[0])
            }
            "power" => {
                let args = self.unary_args(&name)?;
                build_power(args[0])
            }
            "cap" => {
                let args = self.unary_args(&name)?;
                build_cap(args[0])
            }
            "tight" => {
                let args = self.unary_args(&name)?;
                build_tight(args[0])
            }
            "sawtooth" => {
                let args = self.number_args()?;
                if args.len() != 2 {
                    return Err(FnParseError::Arity {
                        name,
                        expected: "2 decimal arguments",
                        got: args.len(),
                    });
                }
                build_sawtooth(args[0], args[1])
            }
            "pwl" | "piecewise-linear" | "piecewise_linear" => {
                let args = self.number_args()?;
                build_pwl(&args)
            }
            "compose" => {
                self.expect(b'(')?;
                let f = self.expr()?;
                self.expect(b',')?;
                let g = self.expr()?;
                self.expect(b')')?;
                Ok(FunctionSpec::Compose(Box::new(f), Box::new(g)))
            }
            "sum" => {
                self.expect(b'(')?;
                let f = self.expr()?;
                self.expect(b',')?;
                let g = self.expr()?;
                self.expect(b')')?;
                Ok(FunctionSpec::Sum(Box::new(f), Box::new(g)))
            }
            "scale" => {
                self.expect(b'(')?;
                let k = self.number()?;
                let inner = if self.peek() == Some(b',') {
                    self.pos += 1;
                    self.expr()?
                } else {
                    FunctionSpec::Identity
                };
                self.expect(b')')?;
                if !(k.is_finite() && k >= 0.0) {
                    return Err(FnParseError::InvalidParameter {
                        name: "scale".into(),
                        msg: format!("factor must be finite and nonnegative, got {k}"),
                    });
                }
                Ok(FunctionSpec::Scale(k, Box::new(inner)))
            }
            _ => Err(FnParseError::UnknownBuiltin { name, pos: start }),
        }
    }

    fn unary_args(&mut self, name: &str) -> Result<Vec<f64>, FnParseError> {
        let args = self.number_args()?;
        if args.len() != 1 {
            return Err(FnParseError::Arity {
                name: name.to_string(),
                expected: "1 decimal argument",
                got: args.len(),
            });
        }
        Ok(args)
    }
}


fn build_linear(a: f64) -> Result<FunctionSpec, FnParseError> {
    if a.is_finite() && a >= 0.0 {
        Ok(FunctionSpec::Linear(a))
    } else {
        Err(FnParseError::InvalidParameter {
            name: "linear".into(),
            msg: format!("slope must be finite and nonnegative, got {a}"),
        })
    }
}

fn build_power(p: f64) -> Result<FunctionSpec, FnParseError> {
    if p.is_finite() && p >= 0.0 {
        Ok(FunctionSpec::Power(p))
    } else {
        Err(FnParseError::InvalidParameter {
            name: "power".into(),
            msg: format!("exponent must be finite and nonnegative, got {p}"),
        })
    }
}

fn build_cap(c: f64) -> Result<FunctionSpec, FnParseError> {
    if c.is_finite() && c >= 0.0 {
        Ok(FunctionSpec::Cap(c))
    } else {
        Err(FnParseError::InvalidParameter {
            name: "cap".into(),
            msg: format!("cap must be finite and nonnegative, got {c}"),
        })
    }
}

fn build_tight(v: f64) -> Result<FunctionSpec, FnParseError> {
    if v.is_finite() && v > 0.0 {
        Ok(FunctionSpec::Tight(v))
    } else {
        Err(FnParseError::InvalidParameter {
            name: "tight".into(),
            msg: format!("level must be finite and positive, got {v}"),
        })
    }
}

fn build_sawtooth(c1: f64, c2: f64) -> Result<FunctionSpec, FnParseError> {
    if !(c1.is_finite() && c2.is_finite() && c1 >= 0.0 && c2 <= c1) {
        return Err(FnParseError::InvalidParameter {
            name: "sawtooth".into(),
            msg: format!("need 0 <= c2 <= c1 to stay nonnegative, got ({c1},{c2})"),
        });
    }
    Ok(FunctionSpec::Sawtooth(c1, c2))
}

fn build_pwl(args: &[f64]) -> Result<FunctionSpec, FnParseError> {
    if args.is_empty() || args.len() % 2 != 0 {
        return Err(FnParseError::Arity {
            name: "pwl".into(),
            expected: "an even, positive number of decimals (x,y pairs)",
            got: args.len(),
        });
    }
    let points: Vec<(f64, f64)> = args.chunks(2).map(|c| (c[0], c[1])).collect();
    if points[0].0 != 0.0 {
        return Err(FnParseError::InvalidParameter {
            name: "pwl".into(),
            msg: format!("first breakpoint must be at x = 0, got {}", points[0].0),
        });
    }
    for w in points.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(FnParseError::InvalidParameter {
                name: "pwl".into(),
                msg: "breakpoint x values must be strictly increasing".into(),
            });
        }
    }
    for &(x, y) in &points {
        if !(x.is_finite() && y.is_finite() && y >= 0.0) {
            return Err(FnParseError::InvalidParameter {
                name: "pwl".into(),
                msg: format!("breakpoint ({x},{y}) outside [0,inf)"),
            });
        }
    }
    Ok(FunctionSpec::Pwl(points))
}

/// Pointwise properties checkable on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Property {
    #[serde(rename = "amenable")]
    Amenable,
    #[serde(rename = "nondecreasing")]
    Nondecreasing,
    #[serde(rename = "subadditive")]
    Subadditive,
    #[serde(rename = "quasi-subadditive")]
    QuasiSubadditive,
    #[serde(rename = "concave")]
    Concave,
    #[serde(rename = "tightly-bounded")]
    TightlyBounded,
    #[serde(rename = "linear-bounds")]
    LinearBounds,
}

impl FromStr for Property {
    type Err = UnknownPropertyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "amenable" => Ok(Property::Amenable),
            "nondecreasing" => Ok(Property::Nondecreasing),
            "subadditive" => Ok(Property::Subadditive),
            "quasi-subadditive" => Ok(Property::QuasiSubadditive),
            "concave" => Ok(Property::Concave),
            "tightly-bounded" => Ok(Property::TightlyBounded),
            "linear-bounds" => Ok(Property::LinearBounds),
            other => Err(UnknownPropertyError(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "COUNTEREXAMPLE")]
    Counterexample,
    #[serde(rename = "NO_VIOLATION_FOUND")]
    NoViolationFound,
}

/// Inputs and evaluated values pinning down a violation; the defining
/// inequality re-verifies directly from these numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub inputs: Vec<f64>,
    pub values: Vec<f64>,
}

/// Grid-relative verdict for one property of one function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyVerdict {
    pub function: String,
    pub property: Property,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub grid: GridDescriptor,
    /// Quasi-subadditivity constant estimate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimated_k: Option<f64>,
    /// Tight-bound level estimate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimated_v: Option<f64>,
    /// Linear lower-bound slope estimate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimated_lower: Option<f64>,
    /// Linear upper-bound slope estimate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimated_upper: Option<f64>,
}

impl PropertyVerdict {
    fn clean(function: &FunctionSpec, property: Property, grid: &GridSpec) -> Self {
        PropertyVerdict {
            function: function.canonical(),
            property,
            outcome: Outcome::NoViolationFound,
            witness: None,
            grid: grid.descriptor(),
            estimated_k: None,
            estimated_v: None,
            estimated_lower: None,
            estimated_upper: None,
        }
    }
}

/// Scans `f` for `property` over the grid. Verdicts are falsification
/// results only; a clean scan is evidence, not proof.
pub fn check_property(
    f: &FunctionSpec,
    property: Property,
    grid: &GridSpec,
    tol: f64,
) -> PropertyVerdict {
    let values = grid.values();
    let eval = |t: f64| f.evaluate_with_tol(t, tol).expect("grid values nonnegative");
    let mut verdict = PropertyVerdict::clean(f, property, grid);
    match property {
        Property::Amenable => {
            let f0 = eval(0.0);
            if f0 != 0.0 {
                verdict.outcome = Outcome::Counterexample;
                verdict.witness = Some(Witness {
                    inputs: vec![0.0],
                    values: vec![f0],
                });
                return verdict;
            }
            for &t in &values {
                let ft = eval(t);
                if !(ft > 0.0) {
                    verdict.outcome = Outcome::Counterexample;
                    verdict.witness = Some(Witness {
                        inputs: vec![t],
                        values: vec![ft],
                    });
                    return verdict;
                }
            }
        }
        Property::Nondecreasing => {
            let mut points = vec![0.0];
            points.extend_from_slice(&values);
            let mut worst: Option<(f64, Witness)> = None;
            for w in points.windows(2) {
                let (fx, fy) = (eval(w[0]), eval(w[1]));
                let drop = fx - fy;
                if fx > fy * (1.0 + tol) && worst.as_ref().map_or(true, |(d, _)| drop > *d) {
                    worst = Some((
                        drop,
                        Witness {
                            inputs: vec![w[0], w[1]],
                            values: vec![fx, fy],
                        },
                    ));
                }
            }
            if let Some((_, witness)) = worst {
                verdict.outcome = Outcome::Counterexample;
                verdict.witness = Some(witness);
            }
        }
        Property::Subadditive | Property::QuasiSubadditive => {
            let mut max_ratio = 0.0f64;
            let mut worst: Option<(f64, Witness)> = None;
            for (i, &a) in values.iter().enumerate() {
                for &b in &values[i..] {
                    let (fa, fb, fs) = (eval(a), eval(b), eval(a + b));
                    let rhs = fa + fb;
                    let ratio = if rhs > 0.0 {
                        fs / rhs
                    } else if fs > 0.0 {
                        f64::INFINITY
                    } else {
                        continue;
                    };
                    max_ratio = max_ratio.max(ratio);
                    let violated = fs > rhs * (1.0 + tol);
                    if violated && worst.as_ref().map_or(true, |(r, _)| ratio > *r) {
                        worst = Some((
                            ratio,
                            Witness {
                                inputs: vec![a, b],
                                values: vec![fs, fa, fb],
                            },
                        ));
                    }
                }
            }
            match property {
                Property::Subadditive => {
                    if let Some((_, witness)) = worst {
                        verdict.outcome = Outcome::Counterexample;
                        verdict.witness = Some(witness);
                    }
                }
                Property::QuasiSubadditive => {
                    verdict.estimated_k = Some(max_ratio.max(1.0));
                    if max_ratio.is_infinite() {
                        verdict.outcome = Outcome::Counterexample;
                        verdict.witness = worst.map(|(_, w)| w);
                    }
                }
                _ => unreachable!(),
            }
        }
        Property::Concave => {
            let mut worst: Option<(f64, Witness)> = None;
            for (i, &a) in values.iter().enumerate() {
                for &b in &values[i + 1..] {
                    for s in [0.25, 0.5, 0.75] {
                        let x = s * a + (1.0 - s) * b;
                        let (fa, fb, fx) = (eval(a), eval(b), eval(x));
                        let chord = s * fa + (1.0 - s) * fb;
                        let gap = chord - fx;
                        if gap > tol * chord.abs().max(1.0)
                            && worst.as_ref().map_or(true, |(g, _)| gap > *g)
                        {
                            worst = Some((
                                gap,
                                Witness {
                                    inputs: vec![a, b, s],
                                    values: vec![fx, fa, fb],
                                },
                            ));
                        }
                    }
                }
            }
            if let Some((_, witness)) = worst {
                verdict.outcome = Outcome::Counterexample;
                verdict.witness = Some(witness);
            }
        }
        Property::TightlyBounded => {
            let mut lo = (f64::INFINITY, 0.0f64);
            let mut hi = (f64::NEG_INFINITY, 0.0f64);
            for &t in &values {
                let ft = eval(t);
                if ft < lo.0 {
                    lo = (ft, t);
                }
                if ft > hi.0 {
                    hi = (ft, t);
                }
            }
            verdict.estimated_v = Some(lo.0);
            if !(lo.0 > 0.0) {
                verdict.outcome = Outcome::Counterexample;
                verdict.witness = Some(Witness {
                    inputs: vec![lo.1],
                    values: vec![lo.0],
                });
            } else if hi.0 > 2.0 * lo.0 * (1.0 + tol) {
                verdict.outcome = Outcome::Counterexample;
                verdict.witness = Some(Witness {
                    inputs: vec![lo.1, hi.1],
                    values: vec![lo.0, hi.0],
                });
            }
        }
        Property::LinearBounds => {
            let mut lo = (f64::INFINITY, 0.0f64);
            let mut hi = (f64::NEG_INFINITY, 0.0f64);
            for &t in &values {
                let ratio = eval(t) / t;
                if ratio < lo.0 {
                    lo = (ratio, t);
                }
                if ratio > hi.0 {
                    hi = (ratio, t);
                }
            }
            verdict.estimated_lower = Some(lo.0);
            verdict.estimated_upper = Some(hi.0);
            if !(lo.0 > 0.0 && hi.0.is_finite()) {
                verdict.outcome = Outcome::Counterexample;
                verdict.witness = Some(Witness {
                    inputs: vec![lo.1],
                    values: vec![eval(lo.1)],
                });
            }
        }
    }
    verdict
}
