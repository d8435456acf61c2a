//! Evaluable functions carrying value, `∂x`, `∂y` and `∂x∂y` channels
//! together with a conservative support descriptor.

mod builtin;
pub(crate) mod conv;
mod grid;

pub use builtin::{Constant, PolyBump, Polynomial, RampC2, TaperedGauss};
pub use conv::{conv_measure, SlabCache};
pub use grid::SampledGrid;

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::Result;
use crate::geometry::{AxisBounds, Direction, HalfPlane, Pt, Side, EPS_GEOM};

/// Value and first/mixed derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub val: Complex64,
    pub dx: Complex64,
    pub dy: Complex64,
    pub dxy: Complex64,
}

impl Jet {
    pub fn zero() -> Self {
        Jet::default()
    }

    pub fn constant(c: Complex64) -> Self {
        Jet { val: c, ..Jet::default() }
    }

    pub fn value_only(val: Complex64) -> Self {
        let nan = Complex64::new(f64::NAN, f64::NAN);
        Jet { val, dx: nan, dy: nan, dxy: nan }
    }

    pub fn from_real(val: f64, dx: f64, dy: f64, dxy: f64) -> Self {
        let c = |x| Complex64::new(x, 0.0);
        Jet { val: c(val), dx: c(dx), dy: c(dy), dxy: c(dxy) }
    }

    /// Product rule.
    pub fn product(a: Jet, b: Jet) -> Jet {
        Jet {
            val: a.val * b.val,
            dx: a.dx * b.val + a.val * b.dx,
            dy: a.dy * b.val + a.val * b.dy,
            dxy: a.dxy * b.val + a.dx * b.dy + a.dy * b.dx + a.val * b.dxy,
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.val.norm().max(self.dx.norm()).max(self.dy.norm()).max(self.dxy.norm())
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet { val: self.val + o.val, dx: self.dx + o.dx, dy: self.dy + o.dy, dxy: self.dxy + o.dxy }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet { val: self.val - o.val, dx: self.dx - o.dx, dy: self.dy - o.dy, dxy: self.dxy - o.dxy }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet { val: -self.val, dx: -self.dx, dy: -self.dy, dxy: -self.dxy }
    }
}

impl Mul<Complex64> for Jet {
    type Output = Jet;
    fn mul(self, c: Complex64) -> Jet {
        Jet { val: self.val * c, dx: self.dx * c, dy: self.dy * c, dxy: self.dxy * c }
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, o: Jet) {
        *self = *self + o;
    }
}

impl SubAssign for Jet {
    fn sub_assign(&mut self, o: Jet) {
        *self = *self - o;
    }
}

/// Which derivative channels carry meaningful data. Unpopulated channels
/// evaluate to NaN.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Channels {
    pub dx: bool,
    pub dy: bool,
    pub dxy: bool,
}

impl Channels {
    pub const ALL: Channels = Channels { dx: true, dy: true, dxy: true };
    pub const VALUE: Channels = Channels { dx: false, dy: false, dxy: false };

    pub fn both(self, o: Channels) -> Channels {
        Channels { dx: self.dx && o.dx, dy: self.dy && o.dy, dxy: self.dxy && o.dxy }
    }
}

impl fmt::Display for Channels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("val")?;
        for (on, name) in [(self.dx, "dx"), (self.dy, "dy"), (self.dxy, "dxy")] {
            if on {
                write!(f, ",{name}")?;
            }
        }
        Ok(())
    }
}

/// Conservative description of where a function may be nonzero: the
/// intersection of coordinate bounds and closed half-planes.
#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    bounds: AxisBounds,
    planes: Vec<HalfPlane>,
    empty: bool,
}

impl Support {
    pub fn all() -> Self {
        Support { bounds: AxisBounds::UNBOUNDED, planes: Vec::new(), empty: false }
    }

    pub fn empty() -> Self {
        Support { bounds: AxisBounds::UNBOUNDED, planes: Vec::new(), empty: true }
    }

    pub fn boxed(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Self {
        Support::from_bounds(AxisBounds::boxed(xmin, xmax, ymin, ymax))
    }

    pub fn from_bounds(bounds: AxisBounds) -> Self {
        let empty = bounds.is_empty();
        Support { bounds, planes: Vec::new(), empty }
    }

    pub fn half_plane(hp: HalfPlane) -> Self {
        Support { bounds: AxisBounds::UNBOUNDED, planes: vec![hp], empty: false }
    }

    pub fn with_plane(mut self, hp: HalfPlane) -> Self {
        if !self.empty {
            self.planes.push(hp);
        }
        self
    }

    pub fn bounds(&self) -> &AxisBounds {
        &self.bounds
    }

    pub fn planes(&self) -> &[HalfPlane] {
        &self.planes
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn contains(&self, p: Pt) -> bool {
        !self.empty && self.bounds.contains(p, EPS_GEOM) && self.planes.iter().all(|h| h.contains(p))
    }

    /// Tightest known bound on `v·p` over the support: a supremum for
    /// `Side::Left`, an infimum for `Side::Right`.
    pub fn threshold(&self, v: Direction, side: Side) -> Option<f64> {
        if self.empty {
            return Some(match side {
                Side::Left => f64::NEG_INFINITY,
                Side::Right => f64::INFINITY,
            });
        }
        let same = |h: &&HalfPlane| {
            h.side == side && (h.v.v1() - v.v1()).abs() <= 1e-12 && (h.v.v2() - v.v2()).abs() <= 1e-12
        };
        let from_planes = self.planes.iter().filter(same).map(|h| h.alpha);
        let from_box = self.bounds.advance_extreme(v, side);
        let all = from_planes.chain(from_box);
        match side {
            Side::Left => all.reduce(f64::min),
            Side::Right => all.reduce(f64::max),
        }
    }

    pub fn union(&self, o: &Support) -> Support {
        if self.empty {
            return o.clone();
        }
        if o.empty {
            return self.clone();
        }
        let mut planes = Vec::new();
        for h in &self.planes {
            if let Some(t) = o.threshold(h.v, h.side) {
                let alpha = match h.side {
                    Side::Left => h.alpha.max(t),
                    Side::Right => h.alpha.min(t),
                };
                planes.push(HalfPlane { alpha, ..*h });
            }
        }
        for h in &o.planes {
            if self.planes.iter().any(|p| p.v == h.v && p.side == h.side) {
                continue;
            }
            if let Some(t) = self.threshold(h.v, h.side) {
                let alpha = match h.side {
                    Side::Left => h.alpha.max(t),
                    Side::Right => h.alpha.min(t),
                };
                planes.push(HalfPlane { alpha, ..*h });
            }
        }
        Support { bounds: self.bounds.hull(&o.bounds), planes, empty: false }
    }

    pub fn intersect(&self, o: &Support) -> Support {
        if self.empty || o.empty {
            return Support::empty();
        }
        let bounds = self.bounds.intersect(&o.bounds);
        let mut planes = self.planes.clone();
        planes.extend_from_slice(&o.planes);
        let mut empty = bounds.is_empty();
        // Opposite half-planes along the same direction may be disjoint.
        let probe = Support { bounds, planes: planes.clone(), empty: false };
        for h in &planes {
            if let Some(t) = probe.threshold(h.v, h.side.opposite()) {
                let gap = match h.side {
                    Side::Left => t - h.alpha,
                    Side::Right => h.alpha - t,
                };
                if gap > EPS_GEOM {
                    empty = true;
                }
            }
        }
        Support { bounds, planes, empty }
    }

    pub fn translate(&self, t: Pt) -> Support {
        Support {
            bounds: self.bounds.translate(t),
            planes: self.planes.iter().map(|h| h.translate(t)).collect(),
            empty: self.empty,
        }
    }

    pub fn reflect_x(&self) -> Support {
        Support {
            bounds: self.bounds.reflect_x(),
            planes: self.planes.iter().map(HalfPlane::reflect_x).collect(),
            empty: self.empty,
        }
    }
}

/// A function with value and derivative channels.
///
/// Implementations must be pure and safe to evaluate from many threads.
pub trait SmoothFn: Send + Sync + fmt::Debug {
    fn eval(&self, p: Pt) -> Result<Jet>;

    /// Value channel alone; override when it is cheaper than a full jet.
    fn value(&self, p: Pt) -> Result<Complex64> {
        Ok(self.eval(p)?.val)
    }

    fn support(&self) -> &Support;

    fn channels(&self) -> Channels {
        Channels::ALL
    }
}

/// Shared handle to a [`SmoothFn`].
#[derive(Clone, Debug)]
pub struct C2Fn(Arc<dyn SmoothFn>);

impl C2Fn {
    pub fn new(f: impl SmoothFn + 'static) -> Self {
        C2Fn(Arc::new(f))
    }

    pub fn zero() -> Self {
        C2Fn::new(Zero { support: Support::empty() })
    }

    pub fn eval(&self, p: Pt) -> Result<Jet> {
        self.0.eval(p)
    }

    pub fn value(&self, p: Pt) -> Result<Complex64> {
        self.0.value(p)
    }

    pub fn support(&self) -> &Support {
        self.0.support()
    }

    pub fn channels(&self) -> Channels {
        self.0.channels()
    }

    pub fn add(&self, o: &C2Fn) -> C2Fn {
        let support = self.support().union(o.support());
        C2Fn::new(Sum { a: self.clone(), b: o.clone(), negate_b: false, support })
    }

    pub fn sub(&self, o: &C2Fn) -> C2Fn {
        let support = self.support().union(o.support());
        C2Fn::new(Sum { a: self.clone(), b: o.clone(), negate_b: true, support })
    }

    pub fn scale(&self, c: Complex64) -> C2Fn {
        let support = if c == Complex64::new(0.0, 0.0) { Support::empty() } else { self.support().clone() };
        C2Fn::new(Scaled { f: self.clone(), c, support })
    }

    /// `p -> self(p - t)`.
    pub fn translate(&self, t: Pt) -> C2Fn {
        C2Fn::new(Translated { f: self.clone(), t, support: self.support().translate(t) })
    }

    pub fn mul(&self, o: &C2Fn) -> C2Fn {
        let support = self.support().intersect(o.support());
        C2Fn::new(Product { a: self.clone(), b: o.clone(), support })
    }

    /// `(x, y) -> self(-x, y)`.
    pub fn reflect_x(&self) -> C2Fn {
        C2Fn::new(Reflected { f: self.clone(), support: self.support().reflect_x() })
    }

    /// The `∂x∂y` channel promoted to a value-only function.
    pub fn mixed_partial(&self) -> C2Fn {
        C2Fn::new(MixedPartial { f: self.clone(), support: self.support().clone() })
    }
}

#[derive(Debug)]
struct Zero {
    support: Support,
}

impl SmoothFn for Zero {
    fn eval(&self, _: Pt) -> Result<Jet> {
        Ok(Jet::zero())
    }
    fn support(&self) -> &Support {
        &self.support
    }
}

#[derive(Debug)]
struct Sum {
    a: C2Fn,
    b: C2Fn,
    negate_b: bool,
    support: Support,
}

impl SmoothFn for Sum {
    fn eval(&self, p: Pt) -> Result<Jet> {
        let (a, b) = (self.a.eval(p)?, self.b.eval(p)?);
        Ok(if self.negate_b { a - b } else { a + b })
    }
    fn value(&self, p: Pt) -> Result<Complex64> {
        let (a, b) = (self.a.value(p)?, self.b.value(p)?);
        Ok(if self.negate_b { a - b } else { a + b })
    }
    fn support(&self) -> &Support {
        &self.support
    }
    fn channels(&self) -> Channels {
        self.a.channels().both(self.b.channels())
    }
}

#[derive(Debug)]
struct Scaled {
    f: C2Fn,
    c: Complex64,
    support: Support,
}

impl SmoothFn for Scaled {
    fn eval(&self, p: Pt) -> Result<Jet> {
        Ok(self.f.eval(p)? * self.c)
    }
    fn value(&self, p: Pt) -> Result<Complex64> {
        Ok(self.f.value(p)? * self.c)
    }
    fn support(&self) -> &Support {
        &self.support
    }
    fn channels(&self) -> Channels {
        self.f.channels()
    }
}

#[derive(Debug)]
struct Translated {
    f: C2Fn,
    t: Pt,
    support: Support,
}

impl SmoothFn for Translated {
    fn eval(&self, p: Pt) -> Result<Jet> {
        self.f.eval(p - self.t)
    }
    fn value(&self, p: Pt) -> Result<Complex64> {
        self.f.value(p - self.t)
    }
    fn support(&self) -> &Support {
        &self.support
    }
    fn channels(&self) -> Channels {
        self.f.channels()
    }
}

#[derive(Debug)]
struct Product {
    a: C2Fn,
    b: C2Fn,
    support: Support,
}

impl SmoothFn for Product {
    fn eval(&self, p: Pt) -> Result<Jet> {
        if !self.support.contains(p) {
            return Ok(Jet::zero());
        }
        Ok(Jet::product(self.a.eval(p)?, self.b.eval(p)?))
    }
    fn value(&self, p: Pt) -> Result<Complex64> {
        if !self.support.contains(p) {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(self.a.value(p)? * self.b.value(p)?)
    }
    fn support(&self) -> &Support {
        &self.support
    }
    fn channels(&self) -> Channels {
        self.a.channels().both(self.b.channels())
    }
}

#[derive(Debug)]
struct Reflected {
    f: C2Fn,
    support: Support,
}

impl SmoothFn for Reflected {
    fn eval(&self, p: Pt) -> Result<Jet> {
        let j = self.f.eval(Pt::new(-p.x, p.y))?;
        Ok(Jet { val: j.val, dx: -j.dx, dy: j.dy, dxy: -j.dxy })
    }
    fn value(&self, p: Pt) -> Result<Complex64> {
        self.f.value(Pt::new(-p.x, p.y))
    }
    fn support(&self) -> &Support {
        &self.support
    }
    fn channels(&self) -> Channels {
        self.f.channels()
    }
}

#[derive(Debug)]
struct MixedPartial {
    f: C2Fn,
    support: Support,
}

impl SmoothFn for MixedPartial {
    fn eval(&self, p: Pt) -> Result<Jet> {
        Ok(Jet::value_only(self.f.eval(p)?.dxy))
    }
    fn support(&self) -> &Support {
        &self.support
    }
    fn channels(&self) -> Channels {
        Channels::VALUE
    }
}

/// Splits `g` into parts supported right of `v·p = -n` and left of
/// `v·p = n` using the quintic ramp. The two parts add back to `g`.
pub fn split_halfplane(g: &C2Fn, v: Direction, n: f64) -> Result<(C2Fn, C2Fn)> {
    let up = C2Fn::new(RampC2::rising(v, n)?);
    let down = C2Fn::new(RampC2::falling(v, n)?);
    Ok((g.mul(&up), g.mul(&down)))
}

/// Maximum relative mismatch between the `∂x∂y` channel and a central
/// difference of the value channel at `p`.
pub fn mixed_fd_error(f: &C2Fn, p: Pt, h: f64) -> Result<f64> {
    let v = |dx: f64, dy: f64| f.value(Pt::new(p.x + dx, p.y + dy));
    let fd = (v(h, h)? - v(h, -h)? - v(-h, h)? + v(-h, -h)?) / (4.0 * h * h);
    let exact = f.eval(p)?.dxy;
    Ok((fd - exact).norm() / exact.norm().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump() -> C2Fn {
        C2Fn::new(PolyBump::new(Pt::ORIGIN, (2.0, 1.5), Complex64::new(1.0, 0.0)).unwrap())
    }

    #[test]
    fn add_zero_is_identity() {
        let f = bump();
        let g = f.add(&C2Fn::zero());
        for p in [Pt::new(0.3, -0.2), Pt::new(1.9, 1.0), Pt::new(5.0, 0.0)] {
            assert_eq!(f.eval(p).unwrap(), g.eval(p).unwrap());
        }
    }

    #[test]
    fn translate_moves_peak() {
        let f = bump().translate(Pt::new(1.0, 1.0));
        assert_eq!(f.value(Pt::new(1.0, 1.0)).unwrap(), Complex64::new(1.0, 0.0));
        assert!(f.support().contains(Pt::new(2.9, 2.4)));
        assert!(!f.support().contains(Pt::new(3.1, 1.0)));
    }

    #[test]
    fn scale_scales_channels() {
        let f = bump();
        let p = Pt::new(0.4, 0.7);
        let two = Complex64::new(2.0, 0.0);
        assert_eq!(f.scale(two).eval(p).unwrap().dxy, f.eval(p).unwrap().dxy * two);
    }

    #[test]
    fn product_rules() {
        let f = bump();
        let one = C2Fn::new(Constant::new(Complex64::new(1.0, 0.0)));
        let p = Pt::new(0.2, -0.5);
        assert_eq!(f.mul(&one).eval(p).unwrap(), f.eval(p).unwrap());

        let g = bump().translate(Pt::new(0.5, 0.3));
        let fg = f.mul(&g);
        for p in [Pt::new(0.1, 0.2), Pt::new(-0.7, 0.4), Pt::new(1.2, -0.3)] {
            assert!(mixed_fd_error(&fg, p, 1e-4).unwrap() < 1e-5);
        }

        let far = bump().translate(Pt::new(10.0, 0.0));
        let prod = f.mul(&far);
        assert!(prod.support().is_empty());
        assert_eq!(prod.value(Pt::new(1.0, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn reflection_flips_odd_channels() {
        let f = bump().translate(Pt::new(0.5, 0.0));
        let r = f.reflect_x();
        let (a, b) = (f.eval(Pt::new(0.3, 0.2)).unwrap(), r.eval(Pt::new(-0.3, 0.2)).unwrap());
        assert_eq!(a.val, b.val);
        assert_eq!(a.dx, -b.dx);
        assert_eq!(a.dy, b.dy);
        assert_eq!(a.dxy, -b.dxy);
    }

    #[test]
    fn split_reassembles() {
        let g = bump();
        let v = Direction::new(0.9, 0.4).unwrap();
        let (g1, g2) = split_halfplane(&g, v, 1.0).unwrap();
        for p in [Pt::new(0.3, 0.1), Pt::new(-1.0, 0.2), Pt::new(1.5, -1.0)] {
            let d = g1.eval(p).unwrap() + g2.eval(p).unwrap() - g.eval(p).unwrap();
            assert!(d.max_norm() < 1e-14);
        }
        assert_eq!(g1.support().threshold(v, Side::Right), Some(-1.0));
        assert_eq!(g2.support().threshold(v, Side::Left), Some(1.0));
    }

    #[test]
    fn bump_far_left_has_zero_right_part() {
        let v = Direction::diagonal();
        let g = bump().translate(Pt::new(-10.0, -10.0));
        let (g1, _) = split_halfplane(&g, v, 1.0).unwrap();
        for p in [Pt::new(-10.0, -10.0), Pt::new(-11.0, -9.5)] {
            assert_eq!(g1.eval(p).unwrap(), Jet::zero());
        }
    }

    #[test]
    fn support_threshold_uses_box_and_planes() {
        let v = Direction::diagonal();
        let s = Support::boxed(-1.0, 1.0, -2.0, 2.0);
        let c = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.threshold(v, Side::Left).unwrap() - 3.0 * c).abs() < 1e-15);
        assert!((s.threshold(v, Side::Right).unwrap() + 3.0 * c).abs() < 1e-15);
        let s = s.with_plane(HalfPlane::left(v, 0.5));
        assert_eq!(s.threshold(v, Side::Left), Some(0.5));
        assert_eq!(Support::all().threshold(v, Side::Left), None);
    }
}
