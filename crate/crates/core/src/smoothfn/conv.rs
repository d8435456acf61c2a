use std::sync::Arc;

use num_complex::Complex64;
use parking_lot::RwLock;

use crate::error::{Error, Result};
use crate::geometry::{Direction, HalfPlane, Pt, Side, EPS_GEOM};
use crate::measure::{advance_extreme, atoms_in_slab, coalesce, Atom, MeasureExpr, Term};

use super::{C2Fn, Channels, Jet, SmoothFn, Support};

/// Rounds to a multiple of 2⁻⁴⁰ so that sums and differences of snapped
/// coordinates below 2¹² in magnitude are exact.
pub(crate) fn snap(x: f64) -> f64 {
    const Q: f64 = (1u64 << 40) as f64;
    (x * Q).round() / Q
}

pub(crate) fn snap_pt(p: Pt) -> Pt {
    Pt::new(snap(p.x), snap(p.y))
}

/// Atoms of a measure ordered by their distance (in `v`-advance) from the
/// measure's extremal advance, extended lazily as deeper queries arrive.
#[derive(Debug)]
pub struct SlabCache {
    m: MeasureExpr,
    v: Direction,
    side: Side,
    extreme: f64,
    snap: bool,
    state: RwLock<Arc<Slab>>,
}

#[derive(Debug)]
pub struct Slab {
    reach: f64,
    pub atoms: Vec<Atom>,
    pub dist: Vec<f64>,
}

impl Slab {
    /// Number of leading atoms within `depth` of the extreme.
    pub fn count_within(&self, depth: f64) -> usize {
        self.dist.partition_point(|&d| d <= depth + EPS_GEOM)
    }
}

impl SlabCache {
    /// `Ok(None)` when every atom cancels.
    pub fn new(m: &MeasureExpr, v: Direction, side: Side, snap: bool) -> Result<Option<Self>> {
        let Some(extreme) = advance_extreme(m, v, side)? else {
            return Ok(None);
        };
        let cache = SlabCache {
            m: m.clone(),
            v,
            side,
            extreme,
            snap,
            state: RwLock::new(Arc::new(Slab { reach: -1.0, atoms: Vec::new(), dist: Vec::new() })),
        };
        let reach = if m.is_finite_atomic() { f64::INFINITY } else { 1.0 };
        cache.extend(reach)?;
        Ok(Some(cache))
    }

    pub fn extreme(&self) -> f64 {
        self.extreme
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// Snapshot covering at least `depth`.
    pub fn covering(&self, depth: f64) -> Result<Arc<Slab>> {
        {
            let s = self.state.read();
            if s.reach >= depth {
                return Ok(Arc::clone(&s));
            }
        }
        self.extend(depth)
    }

    fn extend(&self, depth: f64) -> Result<Arc<Slab>> {
        let mut guard = self.state.write();
        if guard.reach >= depth {
            return Ok(Arc::clone(&guard));
        }
        let reach = if depth.is_infinite() { depth } else { depth.max(2.0 * guard.reach).max(1.0) };
        let raw = if self.m.is_finite_atomic() {
            coalesce(
                self.m
                    .terms()
                    .iter()
                    .filter_map(|t| match t {
                        Term::Atom(a) => Some(*a),
                        _ => None,
                    })
                    .collect(),
            )
        } else {
            match self.side {
                Side::Left => atoms_in_slab(&self.m, self.v, self.extreme - reach, self.extreme + EPS_GEOM)?,
                Side::Right => atoms_in_slab(&self.m, self.v, self.extreme - EPS_GEOM, self.extreme + reach)?,
            }
        };
        let mut keyed: Vec<(f64, Atom)> = raw
            .into_iter()
            .map(|a| {
                let pos = if self.snap { snap_pt(a.pos) } else { a.pos };
                let adv = self.v.dot(pos);
                let d = match self.side {
                    Side::Left => self.extreme - adv,
                    Side::Right => adv - self.extreme,
                };
                (d.max(0.0), Atom::new(pos, a.w))
            })
            .collect();
        keyed.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(a.1.pos.x.total_cmp(&b.1.pos.x))
                .then(a.1.pos.y.total_cmp(&b.1.pos.y))
        });
        let slab = Arc::new(Slab {
            reach,
            dist: keyed.iter().map(|k| k.0).collect(),
            atoms: keyed.into_iter().map(|k| k.1).collect(),
        });
        *guard = Arc::clone(&slab);
        Ok(slab)
    }
}

#[derive(Debug)]
struct MeasureConv {
    f: C2Fn,
    cache: SlabCache,
    v: Direction,
    side: Side,
    /// Support threshold of `f` along `v` on `side`.
    alpha: f64,
    support: Support,
}

impl MeasureConv {
    fn depth(&self, p: Pt) -> f64 {
        let vp = self.v.dot(p);
        match self.side {
            Side::Left => self.cache.extreme - vp + self.alpha,
            Side::Right => vp - self.alpha - self.cache.extreme,
        }
    }

    fn accumulate<T: Default + std::ops::AddAssign>(
        &self,
        p: Pt,
        eval: impl Fn(Pt, Complex64) -> Result<T>,
    ) -> Result<T> {
        let mut acc = T::default();
        if !self.support.contains(p) {
            return Ok(acc);
        }
        let depth = self.depth(p);
        if depth < -EPS_GEOM {
            return Ok(acc);
        }
        let slab = self.cache.covering(depth)?;
        let n = slab.count_within(depth);
        let fs = self.f.support();
        for a in &slab.atoms[..n] {
            let q = p - a.pos;
            if fs.contains(q) {
                acc += eval(q, a.w)?;
            }
        }
        Ok(acc)
    }
}

impl SmoothFn for MeasureConv {
    fn eval(&self, p: Pt) -> Result<Jet> {
        self.accumulate(p, |q, w| Ok(self.f.eval(q)? * w))
    }
    fn value(&self, p: Pt) -> Result<Complex64> {
        self.accumulate(p, |q, w| Ok(self.f.value(q)? * w))
    }
    fn support(&self) -> &Support {
        &self.support
    }
    fn channels(&self) -> Channels {
        self.f.channels()
    }
}

/// `p -> Σ_a w_a·f(p - a)` over the atoms of `m`, evaluated lazily.
///
/// A lattice measure that recedes to one side of `v` requires `f` to be
/// supported in a half-plane on the same side, so that only finitely many
/// atoms contribute at each point.
pub fn conv_measure(f: &C2Fn, m: &MeasureExpr, v: Direction) -> Result<C2Fn> {
    if f.support().is_empty() || m.is_empty() {
        return Ok(C2Fn::zero());
    }
    let rec = m.recession_side(v)?;
    let (side, alpha) = match rec {
        Some(side) => {
            let alpha = f.support().threshold(v, side).ok_or_else(|| {
                Error::SupportMismatch(format!("function has no {side} support bound along the measure direction"))
            })?;
            (side, alpha)
        }
        None => match f.support().threshold(v, Side::Left) {
            Some(a) => (Side::Left, a),
            None => (Side::Right, f.support().threshold(v, Side::Right).unwrap_or(f64::NEG_INFINITY)),
        },
    };
    let Some(cache) = SlabCache::new(m, v, side, false)? else {
        return Ok(C2Fn::zero());
    };
    let mb = m.coordinate_bounds().unwrap_or_default();
    let mut support = Support::from_bounds(f.support().bounds().minkowski(&mb));
    if alpha.is_finite() {
        support = support.with_plane(HalfPlane { v, alpha: alpha + cache.extreme(), side });
    }
    if rec.is_none() {
        for h in f.support().planes() {
            if let Some(ext) = advance_extreme(m, h.v, h.side)? {
                support = support.with_plane(HalfPlane { alpha: h.alpha + ext, ..*h });
            }
        }
    }
    Ok(C2Fn::new(MeasureConv { f: f.clone(), cache, v, side, alpha, support }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::QuadLattice;
    use crate::smoothfn::{mixed_fd_error, PolyBump};

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn bump(center: Pt) -> C2Fn {
        C2Fn::new(PolyBump::new(center, (2.0, 1.5), c(1.0)).unwrap())
    }

    #[test]
    fn delta_at_origin_is_identity() {
        let f = bump(Pt::new(0.3, 0.1));
        let g = conv_measure(&f, &MeasureExpr::delta(Pt::ORIGIN, c(1.0)), Direction::diagonal()).unwrap();
        for p in [Pt::new(0.0, 0.0), Pt::new(1.1, -0.9), Pt::new(5.0, 5.0)] {
            assert_eq!(g.eval(p).unwrap(), f.eval(p).unwrap());
        }
    }

    #[test]
    fn delta_translates() {
        let f = bump(Pt::ORIGIN);
        let g = conv_measure(&f, &MeasureExpr::delta(Pt::new(1.0, 0.0), c(1.0)), Direction::diagonal()).unwrap();
        let t = f.translate(Pt::new(1.0, 0.0));
        for p in [Pt::new(0.5, 0.2), Pt::new(2.5, -1.0)] {
            assert_eq!(g.eval(p).unwrap(), t.eval(p).unwrap());
        }
    }

    #[test]
    fn lattice_matches_brute_force() {
        let f = bump(Pt::new(0.2, -0.1));
        let l = QuadLattice::new(c(0.7), Pt::new(-1.0, -1.0), (0.6, 0.8), (-1, -1)).unwrap();
        let m = MeasureExpr::lattice(l);
        let g = conv_measure(&f, &m, Direction::new(0.8, 0.6).unwrap()).unwrap();
        for p in [Pt::new(-3.0, -2.0), Pt::new(-10.0, -7.5), Pt::new(0.0, 0.0), Pt::new(-6.3, -12.1)] {
            let mut want = c(0.0);
            for j in 0..=50 {
                for k in 0..=50 {
                    want += f.value(p - l.point(j, k)).unwrap() * c(0.7);
                }
            }
            assert!((g.value(p).unwrap() - want).norm() < 1e-12);
            assert!(mixed_fd_error(&g, p, 1e-4).unwrap() < 1e-5);
        }
    }

    #[test]
    fn side_mismatch_is_reported() {
        let f = bump(Pt::ORIGIN);
        let l = QuadLattice::new(c(1.0), Pt::ORIGIN, (1.0, 1.0), (-1, -1)).unwrap();
        let g = C2Fn::new(crate::smoothfn::RampC2::rising(Direction::diagonal(), 1.0).unwrap()).mul(&f);
        assert!(conv_measure(&g, &MeasureExpr::lattice(l), Direction::diagonal()).is_ok());
        let unbounded = C2Fn::new(crate::smoothfn::RampC2::rising(Direction::diagonal(), 1.0).unwrap());
        assert!(matches!(
            conv_measure(&unbounded, &MeasureExpr::lattice(l), Direction::diagonal()),
            Err(Error::SupportMismatch(_))
        ));
    }
}
