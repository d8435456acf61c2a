//! Rectangles, directions, half-planes, cones and staircase checks.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Coord, Error, Result, StaircaseViolation};

/// Absolute tolerance for support and membership tests, in `v·p` units.
pub const EPS_GEOM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pt {
    pub x: f64,
    pub y: f64,
}

impl Pt {
    pub const ORIGIN: Pt = Pt { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Pt { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Pt {
    type Output = Pt;
    fn add(self, o: Pt) -> Pt {
        Pt::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Pt {
    type Output = Pt;
    fn sub(self, o: Pt) -> Pt {
        Pt::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Pt {
    type Output = Pt;
    fn neg(self) -> Pt {
        Pt::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Pt {
    type Output = Pt;
    fn mul(self, s: f64) -> Pt {
        Pt::new(self.x * s, self.y * s)
    }
}

impl From<(f64, f64)> for Pt {
    fn from((x, y): (f64, f64)) -> Self {
        Pt::new(x, y)
    }
}

/// Closed rectangle `[a,b] x [c,d]` with `a < b`, `c < d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

/// Center `(m, n)` and half-extents `(s, t)` of a rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectParams {
    pub m: f64,
    pub n: f64,
    pub s: f64,
    pub t: f64,
}

impl Rect {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let finite = a.is_finite() && b.is_finite() && c.is_finite() && d.is_finite();
        if !finite || a >= b || c >= d {
            return Err(Error::InvalidRect { a, b, c, d });
        }
        Ok(Rect { a, b, c, d })
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
    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn params(&self) -> RectParams {
        rect_params(self)
    }

    pub fn area(&self) -> f64 {
        (self.b - self.a) * (self.d - self.c)
    }

    /// Mirror image under `x -> -x`.
    pub fn reflect_x(&self) -> Rect {
        Rect { a: -self.b, b: -self.a, c: self.c, d: self.d }
    }

    fn coord(&self, k: Coord) -> f64 {
        match k {
            Coord::A => self.a,
            Coord::B => self.b,
            Coord::C => self.c,
            Coord::D => self.d,
        }
    }
}

pub fn rect_params(r: &Rect) -> RectParams {
    RectParams {
        m: (r.a + r.b) / 2.0,
        n: (r.c + r.d) / 2.0,
        s: (r.b - r.a) / 2.0,
        t: (r.d - r.c) / 2.0,
    }
}

/// Unit vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    v1: f64,
    v2: f64,
}

impl Direction {
    /// Normalizes `(x, y)`; fails on zero or non-finite input.
    pub fn new(x: f64, y: f64) -> Result<Self> {
        let len = x.hypot(y);
        if !len.is_finite() || len == 0.0 {
            return Err(Error::InvalidDirection(x, y));
        }
        Ok(Direction { v1: x / len, v2: y / len })
    }

    pub fn diagonal() -> Self {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        Direction { v1: c, v2: c }
    }

    pub fn v1(&self) -> f64 {
        self.v1
    }
    pub fn v2(&self) -> f64 {
        self.v2
    }

    pub fn as_pt(&self) -> Pt {
        Pt::new(self.v1, self.v2)
    }

    pub fn dot(&self, p: Pt) -> f64 {
        self.v1 * p.x + self.v2 * p.y
    }

    pub fn reflect_x(&self) -> Direction {
        Direction { v1: -self.v1, v2: self.v2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// Where a point sits relative to a line `v·p = alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinePosition {
    StrictLeft,
    Boundary,
    StrictRight,
}

/// Closed half-plane `v·p <= alpha` (left) or `v·p >= alpha` (right).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub v: Direction,
    pub alpha: f64,
    pub side: Side,
}

impl HalfPlane {
    pub fn left(v: Direction, alpha: f64) -> Self {
        HalfPlane { v, alpha, side: Side::Left }
    }

    pub fn right(v: Direction, alpha: f64) -> Self {
        HalfPlane { v, alpha, side: Side::Right }
    }

    pub fn classify(&self, p: Pt) -> LinePosition {
        let s = self.v.dot(p) - self.alpha;
        if s.abs() <= EPS_GEOM {
            LinePosition::Boundary
        } else if s < 0.0 {
            LinePosition::StrictLeft
        } else {
            LinePosition::StrictRight
        }
    }

    /// Membership with the boundary band counted on both sides.
    pub fn contains(&self, p: Pt) -> bool {
        matches!(
            (self.side, self.classify(p)),
            (_, LinePosition::Boundary) | (Side::Left, LinePosition::StrictLeft) | (Side::Right, LinePosition::StrictRight)
        )
    }

    pub fn translate(&self, t: Pt) -> HalfPlane {
        HalfPlane { alpha: self.alpha + self.v.dot(t), ..*self }
    }

    pub fn reflect_x(&self) -> HalfPlane {
        HalfPlane { v: self.v.reflect_x(), ..*self }
    }
}

/// Cone `{s·u1 + t·u2 : s, t >= 0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexCone {
    u1: Direction,
    u2: Direction,
}

impl ConvexCone {
    pub fn new(u1: Direction, u2: Direction) -> Result<Self> {
        let cross = u1.v1 * u2.v2 - u1.v2 * u2.v1;
        let dot = u1.v1 * u2.v1 + u1.v2 * u2.v2;
        if cross.abs() <= 1e-12 && dot < 0.0 {
            return Err(Error::DegenerateCone);
        }
        Ok(ConvexCone { u1, u2 })
    }

    /// The closed first quadrant.
    pub fn first_quadrant() -> Self {
        ConvexCone {
            u1: Direction { v1: 1.0, v2: 0.0 },
            u2: Direction { v1: 0.0, v2: 1.0 },
        }
    }

    pub fn u1(&self) -> Direction {
        self.u1
    }
    pub fn u2(&self) -> Direction {
        self.u2
    }

    pub fn bisector(&self) -> Direction {
        let p = (self.u1.as_pt() + self.u2.as_pt()) * 0.5;
        Direction::new(p.x, p.y).expect("pointed cone has a nonzero bisector")
    }

    /// Membership up to `tol` measured along the generators' coefficients.
    pub fn contains(&self, p: Pt, tol: f64) -> bool {
        let det = self.u1.v1 * self.u2.v2 - self.u1.v2 * self.u2.v1;
        if det.abs() <= 1e-15 {
            // Degenerate ray: p must be a nonnegative multiple of u1.
            let along = self.u1.dot(p);
            let perp = (p - self.u1.as_pt() * along).norm();
            return along >= -tol && perp <= tol;
        }
        let s = (p.x * self.u2.v2 - p.y * self.u2.v1) / det;
        let t = (self.u1.v1 * p.y - self.u1.v2 * p.x) / det;
        s >= -tol && t >= -tol
    }
}

/// Coordinate bounds of a planar set; `None` means unbounded on that side.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxisBounds {
    pub xmin: Option<f64>,
    pub xmax: Option<f64>,
    pub ymin: Option<f64>,
    pub ymax: Option<f64>,
}

fn lift(a: Option<f64>, b: Option<f64>, f: fn(f64, f64) -> f64) -> Option<f64> {
    Some(f(a?, b?))
}

fn pick(a: Option<f64>, b: Option<f64>, f: fn(f64, f64) -> f64) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(f(x, y)),
        (x, None) => x,
        (None, y) => y,
    }
}

impl AxisBounds {
    pub const UNBOUNDED: AxisBounds = AxisBounds { xmin: None, xmax: None, ymin: None, ymax: None };

    pub fn boxed(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        AxisBounds { xmin: Some(xmin), xmax: Some(xmax), ymin: Some(ymin), ymax: Some(ymax) }
    }

    pub fn point(p: Pt) -> Self {
        Self::boxed(p.x, p.x, p.y, p.y)
    }

    pub fn is_bounded(&self) -> bool {
        self.xmin.is_some() && self.xmax.is_some() && self.ymin.is_some() && self.ymax.is_some()
    }

    /// Smallest bounds containing both.
    pub fn hull(&self, o: &AxisBounds) -> AxisBounds {
        AxisBounds {
            xmin: lift(self.xmin, o.xmin, f64::min),
            xmax: lift(self.xmax, o.xmax, f64::max),
            ymin: lift(self.ymin, o.ymin, f64::min),
            ymax: lift(self.ymax, o.ymax, f64::max),
        }
    }

    pub fn intersect(&self, o: &AxisBounds) -> AxisBounds {
        AxisBounds {
            xmin: pick(self.xmin, o.xmin, f64::max),
            xmax: pick(self.xmax, o.xmax, f64::min),
            ymin: pick(self.ymin, o.ymin, f64::max),
            ymax: pick(self.ymax, o.ymax, f64::min),
        }
    }

    /// Bounds of the Minkowski sum.
    pub fn minkowski(&self, o: &AxisBounds) -> AxisBounds {
        let add = |a: f64, b: f64| a + b;
        AxisBounds {
            xmin: lift(self.xmin, o.xmin, add),
            xmax: lift(self.xmax, o.xmax, add),
            ymin: lift(self.ymin, o.ymin, add),
            ymax: lift(self.ymax, o.ymax, add),
        }
    }

    pub fn translate(&self, t: Pt) -> AxisBounds {
        AxisBounds {
            xmin: self.xmin.map(|v| v + t.x),
            xmax: self.xmax.map(|v| v + t.x),
            ymin: self.ymin.map(|v| v + t.y),
            ymax: self.ymax.map(|v| v + t.y),
        }
    }

    pub fn reflect_x(&self) -> AxisBounds {
        AxisBounds { xmin: self.xmax.map(|v| -v), xmax: self.xmin.map(|v| -v), ..*self }
    }

    /// Bounds of `{-p : p in self}`.
    pub fn negate(&self) -> AxisBounds {
        AxisBounds {
            xmin: self.xmax.map(|v| -v),
            xmax: self.xmin.map(|v| -v),
            ymin: self.ymax.map(|v| -v),
            ymax: self.ymin.map(|v| -v),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!((self.xmin, self.xmax), (Some(a), Some(b)) if a > b + EPS_GEOM)
            || matches!((self.ymin, self.ymax), (Some(a), Some(b)) if a > b + EPS_GEOM)
    }

    pub fn contains(&self, p: Pt, tol: f64) -> bool {
        self.xmin.is_none_or(|v| p.x >= v - tol)
            && self.xmax.is_none_or(|v| p.x <= v + tol)
            && self.ymin.is_none_or(|v| p.y >= v - tol)
            && self.ymax.is_none_or(|v| p.y <= v + tol)
    }

    /// Supremum (left) or infimum (right) of `v·p` over the bounds, if finite.
    pub fn advance_extreme(&self, v: Direction, side: Side) -> Option<f64> {
        let (v1, v2) = (v.v1(), v.v2());
        let want_max = side == Side::Left;
        let xs = if (v1 > 0.0) == want_max { self.xmax } else { self.xmin };
        let ys = if (v2 > 0.0) == want_max { self.ymax } else { self.ymin };
        let xv = if v1 == 0.0 { Some(0.0) } else { xs.map(|x| v1 * x) };
        let yv = if v2 == 0.0 { Some(0.0) } else { ys.map(|y| v2 * y) };
        Some(xv? + yv?)
    }
}

/// Ordered rectangles with nonzero complex weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BlurConfig {
    rects: Vec<Rect>,
    weights: Vec<Complex64>,
}

impl BlurConfig {
    pub fn new(rects: Vec<Rect>, weights: Vec<Complex64>) -> Result<Self> {
        if rects.is_empty() {
            return Err(Error::InvalidConfig("no rectangles".into()));
        }
        if rects.len() != weights.len() {
            return Err(Error::InvalidConfig(format!(
                "{} rectangles but {} weights",
                rects.len(),
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !(w.norm() > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidConfig(format!("weight {} is zero or not finite", i + 1)));
        }
        Ok(BlurConfig { rects, weights })
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.rects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Rect, Complex64)> {
        self.rects.iter().zip(self.weights.iter().copied())
    }

    pub fn max_half_extent(&self) -> f64 {
        self.rects
            .iter()
            .map(|r| {
                let p = r.params();
                p.s.max(p.t)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Every rectangle strictly up-right of its predecessor.
    Cond1,
    /// Every rectangle strictly up-left of its predecessor.
    Cond2,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Cond1 => "Cond1",
            Orientation::Cond2 => "Cond2",
        })
    }
}

const COORDS: [Coord; 4] = [Coord::A, Coord::B, Coord::C, Coord::D];

fn first_violation(cfg: &BlurConfig, increasing: [bool; 4]) -> Option<StaircaseViolation> {
    for (i, pair) in cfg.rects.windows(2).enumerate() {
        for (k, &inc) in COORDS.iter().zip(increasing.iter()) {
            let lhs = pair[0].coord(*k);
            let rhs = pair[1].coord(*k);
            let ok = if inc { lhs < rhs } else { lhs > rhs };
            if !ok {
                return Some(StaircaseViolation {
                    index: i + 1,
                    coord: *k,
                    relation: if inc { '<' } else { '>' },
                    lhs,
                    rhs,
                });
            }
        }
    }
    None
}

/// Classifies the rectangle chain. A single rectangle is `Cond1`.
///
/// On failure the reported inequality belongs to the chain family selected by
/// the first pair's `a` ordering, which is the more informative of the two.
pub fn validate_staircase(cfg: &BlurConfig) -> Result<Orientation> {
    let up_right = first_violation(cfg, [true, true, true, true]);
    let Some(v1) = up_right else {
        return Ok(Orientation::Cond1);
    };
    let up_left = first_violation(cfg, [false, false, true, true]);
    let Some(v2) = up_left else {
        return Ok(Orientation::Cond2);
    };
    let r = &cfg.rects;
    let prefer_left = r.len() > 1 && r[1].a < r[0].a;
    Err(Error::Staircase(if prefer_left { v2 } else { v1 }))
}

/// Maps each `[a,b] x [c,d]` to `[-b,-a] x [c,d]`; weights are unchanged.
pub fn reflect_config_x(cfg: &BlurConfig) -> BlurConfig {
    BlurConfig {
        rects: cfg.rects.iter().map(Rect::reflect_x).collect(),
        weights: cfg.weights.clone(),
    }
}
