use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{Direction, HalfPlane, Pt};

use super::{Jet, SmoothFn, Support};

#[derive(Debug, Clone)]
pub struct Constant {
    c: Complex64,
    support: Support,
}

impl Constant {
    pub fn new(c: Complex64) -> Self {
        let support = if c == Complex64::new(0.0, 0.0) { Support::empty() } else { Support::all() };
        Constant { c, support }
    }
}

impl SmoothFn for Constant {
    fn eval(&self, _: Pt) -> Result<Jet> {
        Ok(Jet::constant(self.c))
    }
    fn support(&self) -> &Support {
        &self.support
    }
}

/// `A·(Bx²-u²)₊³·(By²-w²)₊³ / (Bx⁶·By⁶)` with `(u, w)` the offset from the
/// center. Peak value `A`, twice continuously differentiable.
#[derive(Debug, Clone)]
pub struct PolyBump {
    center: Pt,
    radii: (f64, f64),
    amp: Complex64,
    support: Support,
}

/// `((B²-u²)₊/B²)³` and its derivative.
fn cubic_profile(u: f64, b: f64) -> (f64, f64) {
    if u.abs() >= b {
        return (0.0, 0.0);
    }
    let q = (b * b - u * u) / (b * b);
    (q * q * q, -6.0 * u * q * q / (b * b))
}

impl PolyBump {
    pub fn new(center: Pt, radii: (f64, f64), amp: Complex64) -> Result<Self> {
        let (bx, by) = radii;
        if !(bx > 0.0 && by > 0.0 && bx.is_finite() && by.is_finite()) || !center.is_finite() || !amp.is_finite() {
            return Err(Error::InvalidConfig(format!("bad bump radii {radii:?} or center")));
        }
        let support = Support::boxed(center.x - bx, center.x + bx, center.y - by, center.y + by);
        Ok(PolyBump { center, radii, amp, support })
    }

    /// Lines where the higher derivatives jump: `(x edges, y edges)`.
    pub fn edges(&self) -> ([f64; 2], [f64; 2]) {
        let (c, (bx, by)) = (self.center, self.radii);
        ([c.x - bx, c.x + bx], [c.y - by, c.y + by])
    }
}

impl SmoothFn for PolyBump {
    fn eval(&self, p: Pt) -> Result<Jet> {
        let (px, dpx) = cubic_profile(p.x - self.center.x, self.radii.0);
        let (py, dpy) = cubic_profile(p.y - self.center.y, self.radii.1);
        Ok(Jet::from_real(px * py, dpx * py, px * dpy, dpx * dpy) * self.amp)
    }
    fn value(&self, p: Pt) -> Result<Complex64> {
        let (px, _) = cubic_profile(p.x - self.center.x, self.radii.0);
        let (py, _) = cubic_profile(p.y - self.center.y, self.radii.1);
        Ok(self.amp * (px * py))
    }
    fn support(&self) -> &Support {
        &self.support
    }
}

/// `Σ c·x^i·y^j`.
#[derive(Debug, Clone)]
pub struct Polynomial {
    terms: Vec<(u32, u32, Complex64)>,
    support: Support,
}

impl Polynomial {
    pub fn new(terms: Vec<(u32, u32, Complex64)>) -> Self {
        let zero = terms.iter().all(|t| t.2 == Complex64::new(0.0, 0.0));
        let support = if zero { Support::empty() } else { Support::all() };
        Polynomial { terms, support }
    }
}

fn pow_and_deriv(x: f64, k: u32) -> (f64, f64) {
    match k {
        0 => (1.0, 0.0),
        _ => (x.powi(k as i32), f64::from(k) * x.powi(k as i32 - 1)),
    }
}

impl SmoothFn for Polynomial {
    fn eval(&self, p: Pt) -> Result<Jet> {
        let mut j = Jet::zero();
        for &(i, k, c) in &self.terms {
            let (xv, xd) = pow_and_deriv(p.x, i);
            let (yv, yd) = pow_and_deriv(p.y, k);
            j += Jet::from_real(xv * yv, xd * yv, xv * yd, xd * yd) * c;
        }
        Ok(j)
    }
    fn support(&self) -> &Support {
        &self.support
    }
}

/// Quintic smoothstep `6u⁵ - 15u⁴ + 10u³` and its first two derivatives.
fn smoothstep5(u: f64) -> (f64, f64, f64) {
    if u <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if u >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let u2 = u * u;
    let val = u2 * u * (10.0 + u * (-15.0 + 6.0 * u));
    let d1 = 30.0 * u2 * (1.0 - u) * (1.0 - u);
    let d2 = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
    (val, d1, d2)
}

/// `R(v·p)` where `R` climbs from 0 at `-n` to 1 at `n` along a quintic
/// smoothstep. The falling variant is `R(-v·p) = 1 - R(v·p)`.
#[derive(Debug, Clone)]
pub struct RampC2 {
    v: Direction,
    n: f64,
    falling: bool,
    support: Support,
}

impl RampC2 {
    pub fn rising(v: Direction, n: f64) -> Result<Self> {
        Self::build(v, n, false)
    }

    pub fn falling(v: Direction, n: f64) -> Result<Self> {
        Self::build(v, n, true)
    }

    fn build(v: Direction, n: f64, falling: bool) -> Result<Self> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidConfig(format!("split width must be positive, got {n}")));
        }
        let hp = if falling { HalfPlane::left(v, n) } else { HalfPlane::right(v, -n) };
        Ok(RampC2 { v, n, falling, support: Support::half_plane(hp) })
    }

    /// Profile `R(s)` with its first two derivatives.
    pub fn profile(&self, s: f64) -> (f64, f64, f64) {
        let (r, d1, d2) = smoothstep5((s + self.n) / (2.0 * self.n));
        let k = 1.0 / (2.0 * self.n);
        (r, d1 * k, d2 * k * k)
    }
}

impl SmoothFn for RampC2 {
    fn eval(&self, p: Pt) -> Result<Jet> {
        let (v1, v2) = (self.v.v1(), self.v.v2());
        let s = self.v.dot(p);
        let (r, d1, d2) = self.profile(s);
        // Taking the complement keeps rising + falling == 1 in floating point.
        let (r, d1, d2) = if self.falling { (1.0 - r, -d1, -d2) } else { (r, d1, d2) };
        Ok(Jet::from_real(r, d1 * v1, d1 * v2, d2 * v1 * v2))
    }
    fn support(&self) -> &Support {
        &self.support
    }
}

/// Product of two one-dimensional Gaussians whose tails are switched off by
/// a smooth, infinitely differentiable cutoff between `|u| = flat` and
/// `|u| = cutoff`. Compactly supported and smooth.
#[derive(Debug, Clone)]
pub struct TaperedGauss {
    center: Pt,
    sigma: f64,
    flat: f64,
    cutoff: f64,
    amp: Complex64,
    support: Support,
}

fn bump_exp(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        (0.0, 0.0)
    } else {
        let e = (-1.0 / t).exp();
        (e, e / (t * t))
    }
}

impl TaperedGauss {
    pub fn new(center: Pt, sigma: f64, flat: f64, cutoff: f64, amp: Complex64) -> Result<Self> {
        if !(sigma > 0.0 && flat > 0.0 && cutoff > flat && cutoff.is_finite()) || !center.is_finite() {
            return Err(Error::InvalidConfig("gaussian needs 0 < sigma, 0 < flat < cutoff".into()));
        }
        let c = cutoff;
        let support = Support::boxed(center.x - c, center.x + c, center.y - c, center.y + c);
        Ok(TaperedGauss { center, sigma, flat, cutoff, amp, support })
    }

    /// Taper factor in `[0, 1]` and its derivative.
    fn taper(&self, u: f64) -> (f64, f64) {
        let a = u.abs();
        if a <= self.flat {
            return (1.0, 0.0);
        }
        if a >= self.cutoff {
            return (0.0, 0.0);
        }
        let w = self.cutoff - self.flat;
        let s = (a - self.flat) / w;
        let (p, dp) = bump_exp(1.0 - s);
        let (q, dq) = bump_exp(s);
        let den = p + q;
        let val = p / den;
        // d/ds [p(1-s) / (p(1-s) + q(s))]
        let ds = (-dp * q - p * dq) / (den * den);
        (val, ds * u.signum() / w)
    }

    fn profile(&self, u: f64) -> (f64, f64) {
        let g = (-u * u / (2.0 * self.sigma * self.sigma)).exp();
        let dg = -u / (self.sigma * self.sigma) * g;
        let (t, dt) = self.taper(u);
        (g * t, dg * t + g * dt)
    }
}

impl SmoothFn for TaperedGauss {
    fn eval(&self, p: Pt) -> Result<Jet> {
        let (gx, dgx) = self.profile(p.x - self.center.x);
        let (gy, dgy) = self.profile(p.y - self.center.y);
        Ok(Jet::from_real(gx * gy, dgx * gy, gx * dgy, dgx * dgy) * self.amp)
    }
    fn support(&self) -> &Support {
        &self.support
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smoothfn::{mixed_fd_error, C2Fn};

    fn fd_first(f: &C2Fn, p: Pt, h: f64) -> (Complex64, Complex64) {
        let v = |dx: f64, dy: f64| f.value(Pt::new(p.x + dx, p.y + dy)).unwrap();
        ((v(h, 0.0) - v(-h, 0.0)) / (2.0 * h), (v(0.0, h) - v(0.0, -h)) / (2.0 * h))
    }

    fn check_channels(f: &C2Fn, pts: &[Pt]) {
        for &p in pts {
            let j = f.eval(p).unwrap();
            let (dx, dy) = fd_first(f, p, 1e-4);
            let scale = j.max_norm().max(1.0);
            assert!((dx - j.dx).norm() / scale < 1e-5, "dx at {p:?}");
            assert!((dy - j.dy).norm() / scale < 1e-5, "dy at {p:?}");
            assert!(mixed_fd_error(f, p, 1e-4).unwrap() < 1e-5, "dxy at {p:?}");
        }
    }

    #[test]
    fn bump_peak_and_channels() {
        let b = C2Fn::new(PolyBump::new(Pt::new(0.5, -0.5), (2.0, 1.0), Complex64::new(2.0, 1.0)).unwrap());
        assert_eq!(b.value(Pt::new(0.5, -0.5)).unwrap(), Complex64::new(2.0, 1.0));
        assert_eq!(b.value(Pt::new(2.5, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
        check_channels(&b, &[Pt::new(0.1, -0.2), Pt::new(1.9, -1.2), Pt::new(-1.0, 0.3)]);
    }

    #[test]
    fn polynomial_channels() {
        let c = |x: f64| Complex64::new(x, 0.0);
        let p = C2Fn::new(Polynomial::new(vec![(1, 1, c(1.0)), (3, 0, c(-2.0)), (2, 2, c(0.5))]));
        let j = p.eval(Pt::new(2.0, 3.0)).unwrap();
        assert_eq!(j.val, c(6.0 - 16.0 + 18.0));
        assert_eq!(j.dxy, c(1.0 + 0.5 * 4.0 * 2.0 * 3.0));
        check_channels(&p, &[Pt::new(0.3, -1.1), Pt::new(1.5, 0.5)]);
    }

    #[test]
    fn ramp_joints_are_c2() {
        let v = Direction::new(0.8, 0.6).unwrap();
        let r = RampC2::rising(v, 1.5).unwrap();
        for s in [-1.5, 1.5] {
            let (_, d1, d2) = r.profile(s);
            assert!(d1.abs() < 1e-12 && d2.abs() < 1e-12);
        }
        for s in [-2.0, -0.7, 0.0, 0.3, 1.4, 9.0] {
            let (a, _, _) = r.profile(s);
            let (b, _, _) = r.profile(-s);
            assert!((a + b - 1.0).abs() < 1e-15);
            assert!((0.0..=1.0).contains(&a));
        }
        let f = C2Fn::new(r);
        check_channels(&f, &[Pt::new(0.1, 0.2), Pt::new(-0.5, -0.4)]);
        let g = C2Fn::new(RampC2::falling(v, 1.5).unwrap());
        check_channels(&g, &[Pt::new(0.1, 0.2), Pt::new(-0.5, -0.4)]);
    }

    #[test]
    fn tapered_gauss_channels() {
        let g = C2Fn::new(TaperedGauss::new(Pt::ORIGIN, 0.7, 3.0, 4.5, Complex64::new(1.0, 0.0)).unwrap());
        assert_eq!(g.value(Pt::ORIGIN).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(g.value(Pt::new(4.6, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
        check_channels(&g, &[Pt::new(0.4, -0.3), Pt::new(3.5, 0.2), Pt::new(-4.0, 3.9)]);
    }
}
