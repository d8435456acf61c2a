//! Discrete complex measures built from point atoms, quadrant lattices and
//! single-level lattice convolutions.
//!
//! Lattices are never materialized. Every query is bounded either by a slab
//! `lo <= v·a <= hi` or by a coordinate box, and the finitely many atoms that
//! fall inside are enumerated, merged when they coincide, and returned in a
//! deterministic order.

mod cone;

pub use cone::{cone_for_pair, cone_with_radius, ConeData};

use std::cmp::Ordering;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{AxisBounds, Direction, Pt, Side, EPS_GEOM};

/// Smallest admissible |v-advance| of a lattice step.
pub const EPS_ADV: f64 = 1e-12;
/// Merged atoms at or below this magnitude are dropped.
pub const EPS_W: f64 = 1e-12;
/// Index budget per lattice axis for a single enumeration.
const MAX_INDEX: f64 = 1e7;

/// Positions closer than this are treated as the same atom.
pub fn eps_pos(a: f64, b: f64) -> f64 {
    1e-9 * (1.0 + a.abs().max(b.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub pos: Pt,
    pub w: Complex64,
}

impl Atom {
    pub fn new(pos: Pt, w: Complex64) -> Self {
        Atom { pos, w }
    }
}

/// Atoms `base + (ex·sx·j, ey·sy·k)`, `j, k >= 0`, all of weight `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadLattice {
    w: Complex64,
    base: Pt,
    sx: f64,
    sy: f64,
    ex: i8,
    ey: i8,
}

impl QuadLattice {
    pub fn new(w: Complex64, base: Pt, step: (f64, f64), dir: (i8, i8)) -> Result<Self> {
        let (sx, sy) = step;
        if !(sx > 0.0 && sy > 0.0 && sx.is_finite() && sy.is_finite()) {
            return Err(Error::InvalidLattice(format!("steps must be positive, got ({sx}, {sy})")));
        }
        if !base.is_finite() || !w.is_finite() {
            return Err(Error::InvalidLattice("non-finite base or weight".into()));
        }
        let ok = |e: i8| e == 1 || e == -1;
        if !ok(dir.0) || !ok(dir.1) {
            return Err(Error::InvalidLattice(format!("direction must be +-1, got {dir:?}")));
        }
        Ok(QuadLattice { w, base, sx, sy, ex: dir.0, ey: dir.1 })
    }

    pub fn weight(&self) -> Complex64 {
        self.w
    }
    pub fn base(&self) -> Pt {
        self.base
    }
    pub fn step(&self) -> (f64, f64) {
        (self.sx, self.sy)
    }
    pub fn dir(&self) -> (i8, i8) {
        (self.ex, self.ey)
    }

    pub fn point(&self, j: u64, k: u64) -> Pt {
        Pt::new(
            self.base.x + f64::from(self.ex) * self.sx * j as f64,
            self.base.y + f64::from(self.ey) * self.sy * k as f64,
        )
    }

    /// v-advance of the two unit steps.
    fn step_advances(&self, v: Direction) -> (f64, f64) {
        (v.v1() * f64::from(self.ex) * self.sx, v.v2() * f64::from(self.ey) * self.sy)
    }

    fn bounds(&self) -> AxisBounds {
        let (bx, by) = (self.base.x, self.base.y);
        AxisBounds {
            xmin: (self.ex > 0).then_some(bx),
            xmax: (self.ex < 0).then_some(bx),
            ymin: (self.ey > 0).then_some(by),
            ymax: (self.ey < 0).then_some(by),
        }
    }

    fn translated(&self, t: Pt) -> Self {
        QuadLattice { base: self.base + t, ..*self }
    }

    fn scaled(&self, c: Complex64) -> Self {
        QuadLattice { w: self.w * c, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Term {
    Atom(Atom),
    Lattice(QuadLattice),
    /// Convolution of two lattices; its weight is the product of theirs.
    Conv(QuadLattice, QuadLattice),
}

impl Term {
    fn translated(&self, t: Pt) -> Term {
        match self {
            Term::Atom(a) => Term::Atom(Atom::new(a.pos + t, a.w)),
            Term::Lattice(l) => Term::Lattice(l.translated(t)),
            Term::Conv(l1, l2) => Term::Conv(l1.translated(t), *l2),
        }
    }

    fn scaled(&self, c: Complex64) -> Term {
        match self {
            Term::Atom(a) => Term::Atom(Atom::new(a.pos, a.w * c)),
            Term::Lattice(l) => Term::Lattice(l.scaled(c)),
            Term::Conv(l1, l2) => Term::Conv(l1.scaled(c), *l2),
        }
    }

    /// Lexicographically extremal candidate position of the term.
    fn corner(&self) -> Pt {
        match self {
            Term::Atom(a) => a.pos,
            Term::Lattice(l) => l.base,
            Term::Conv(l1, l2) => l1.base + l2.base,
        }
    }

    fn lattices(&self) -> impl Iterator<Item = &QuadLattice> {
        let (a, b) = match self {
            Term::Atom(_) => (None, None),
            Term::Lattice(l) => (Some(l), None),
            Term::Conv(l1, l2) => (Some(l1), Some(l2)),
        };
        a.into_iter().chain(b)
    }

    fn bounds(&self) -> AxisBounds {
        match self {
            Term::Atom(a) => AxisBounds::point(a.pos),
            Term::Lattice(l) => l.bounds(),
            Term::Conv(l1, l2) => l1.bounds().minkowski(&l2.bounds()),
        }
    }
}

/// Convolves two terms. Lattice by lattice yields a `Conv` term; anything
/// deeper is rejected.
pub fn convolve(t1: &Term, t2: &Term) -> Result<Term> {
    match (t1, t2) {
        (Term::Atom(a), Term::Atom(b)) => Ok(Term::Atom(Atom::new(a.pos + b.pos, a.w * b.w))),
        (Term::Atom(a), other) | (other, Term::Atom(a)) => {
            Ok(other.translated(a.pos).scaled(a.w))
        }
        (Term::Lattice(l1), Term::Lattice(l2)) => Ok(Term::Conv(*l1, *l2)),
        _ => Err(Error::NestingTooDeep),
    }
}

/// Finite sum of terms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasureExpr {
    terms: Vec<Term>,
}

impl MeasureExpr {
    pub fn empty() -> Self {
        MeasureExpr { terms: Vec::new() }
    }

    pub fn delta(pos: Pt, w: Complex64) -> Self {
        MeasureExpr { terms: vec![Term::Atom(Atom::new(pos, w))] }
    }

    pub fn lattice(l: QuadLattice) -> Self {
        MeasureExpr { terms: vec![Term::Lattice(l)] }
    }

    pub fn from_terms(terms: Vec<Term>) -> Self {
        MeasureExpr { terms }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_finite_atomic(&self) -> bool {
        self.terms.iter().all(|t| matches!(t, Term::Atom(_)))
    }

    pub fn plus(&self, o: &MeasureExpr) -> MeasureExpr {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&o.terms);
        MeasureExpr { terms }
    }

    pub fn minus(&self, o: &MeasureExpr) -> MeasureExpr {
        self.plus(&o.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn translate(&self, t: Pt) -> MeasureExpr {
        MeasureExpr { terms: self.terms.iter().map(|x| x.translated(t)).collect() }
    }

    pub fn scale(&self, c: Complex64) -> MeasureExpr {
        if c == Complex64::new(0.0, 0.0) {
            return MeasureExpr::empty();
        }
        MeasureExpr { terms: self.terms.iter().map(|x| x.scaled(c)).collect() }
    }

    /// Pairwise convolution of all terms.
    pub fn convolve(&self, o: &MeasureExpr) -> Result<MeasureExpr> {
        let mut terms = Vec::with_capacity(self.terms.len() * o.terms.len());
        for a in &self.terms {
            for b in &o.terms {
                terms.push(convolve(a, b)?);
            }
        }
        Ok(MeasureExpr { terms })
    }

    /// Coordinate bounds of the (uncancelled) support; `None` if there are no terms.
    pub fn coordinate_bounds(&self) -> Option<AxisBounds> {
        let mut it = self.terms.iter().map(Term::bounds);
        let first = it.next()?;
        Some(it.fold(first, |acc, b| acc.hull(&b)))
    }

    /// Number of lattice terms, counting each `Conv` factor.
    pub fn lattice_count(&self) -> usize {
        self.terms.iter().map(|t| t.lattices().count()).sum()
    }

    /// Direction in which the measure recedes along `v`, if it recedes at all.
    ///
    /// `Some(Left)` means every lattice step lowers `v·a`, `Some(Right)` means
    /// every step raises it, `None` means the measure is a finite atom list.
    pub fn recession_side(&self, v: Direction) -> Result<Option<Side>> {
        let mut side = None;
        for l in self.terms.iter().flat_map(Term::lattices) {
            let (a1, a2) = l.step_advances(v);
            for a in [a1, a2] {
                if a.abs() < EPS_ADV {
                    return Err(Error::NonFiniteSlab { advance: a });
                }
                let s = if a < 0.0 { Side::Left } else { Side::Right };
                match side {
                    None => side = Some(s),
                    Some(prev) if prev != s => return Err(Error::NonFiniteSlab { advance: a }),
                    _ => {}
                }
            }
        }
        Ok(side)
    }
}

/// Calls `visit(j, k, advance)` for every index pair of a lattice whose
/// advance `c + a1·j + a2·k` lies in `[lo, hi]`. One of the bounds may be
/// infinite on the lattice's own bounded side.
fn for_each_in_slab(
    c: f64,
    a1: f64,
    a2: f64,
    lo: f64,
    hi: f64,
    mut visit: impl FnMut(u64, u64, f64) -> Result<()>,
) -> Result<()> {
    if a1.abs() < EPS_ADV || a2.abs() < EPS_ADV || (a1 < 0.0) != (a2 < 0.0) {
        let bad = if a1.abs() < a2.abs() { a1 } else { a2 };
        return Err(Error::NonFiniteSlab { advance: bad });
    }
    let reach = if a1 < 0.0 { c - lo } else { hi - c };
    if !(reach >= 0.0) {
        return Ok(());
    }
    let jmax = (reach / a1.abs()).floor();
    if !jmax.is_finite() || jmax > MAX_INDEX {
        return Err(Error::NonFiniteSlab { advance: a1 });
    }
    for j in 0..=(jmax as u64) {
        let adv0 = c + a1 * j as f64;
        let t_lo = (lo - adv0) / a2;
        let t_hi = (hi - adv0) / a2;
        let kmin = t_lo.min(t_hi).ceil().max(0.0);
        let kmax = t_lo.max(t_hi).floor();
        if !(kmax >= kmin) {
            continue;
        }
        if kmax > MAX_INDEX {
            return Err(Error::NonFiniteSlab { advance: a2 });
        }
        for k in (kmin as u64)..=(kmax as u64) {
            visit(j, k, adv0 + a2 * k as f64)?;
        }
    }
    Ok(())
}

fn raw_slab(m: &MeasureExpr, v: Direction, lo: f64, hi: f64, out: &mut Vec<Atom>) -> Result<()> {
    let (lo_w, hi_w) = (lo - EPS_GEOM, hi + EPS_GEOM);
    for term in &m.terms {
        match term {
            Term::Atom(a) => {
                let adv = v.dot(a.pos);
                if adv >= lo_w && adv <= hi_w {
                    out.push(*a);
                }
            }
            Term::Lattice(l) => {
                let (a1, a2) = l.step_advances(v);
                for_each_in_slab(v.dot(l.base), a1, a2, lo_w, hi_w, |j, k, _| {
                    out.push(Atom::new(l.point(j, k), l.w));
                    Ok(())
                })?;
            }
            Term::Conv(l1, l2) => {
                let (a1, a2) = l1.step_advances(v);
                let (b1, b2) = l2.step_advances(v);
                let neg = a1 < 0.0;
                if [a1, a2, b1, b2].iter().any(|a| a.abs() < EPS_ADV || (*a < 0.0) != neg) {
                    let bad = [a1, a2, b1, b2]
                        .into_iter()
                        .find(|a| a.abs() < EPS_ADV || (*a < 0.0) != neg)
                        .unwrap_or(a1);
                    return Err(Error::NonFiniteSlab { advance: bad });
                }
                let c2 = v.dot(l2.base);
                let (olo, ohi) = if neg {
                    (lo_w - c2, f64::INFINITY)
                } else {
                    (f64::NEG_INFINITY, hi_w - c2)
                };
                let w = l1.w * l2.w;
                for_each_in_slab(v.dot(l1.base), a1, a2, olo, ohi, |j, k, adv1| {
                    let p1 = l1.point(j, k);
                    for_each_in_slab(c2, b1, b2, lo_w - adv1, hi_w - adv1, |i, l, _| {
                        let p2 = l2.point(i, l);
                        out.push(Atom::new(Pt::new(p1.x + p2.x, p1.y + p2.y), w));
                        Ok(())
                    })
                })?;
            }
        }
    }
    Ok(())
}

fn index_range(b: f64, e: i8, s: f64, lo: f64, hi: f64) -> Result<Option<(u64, u64)>> {
    let (l, h) = if e > 0 { ((lo - b) / s, (hi - b) / s) } else { ((b - hi) / s, (b - lo) / s) };
    let jl = (l - 1e-9).ceil().max(0.0);
    let jh = (h + 1e-9).floor();
    if !(jh >= jl) {
        return Ok(None);
    }
    if !jh.is_finite() || jh > MAX_INDEX {
        return Err(Error::UnboundedSupport);
    }
    Ok(Some((jl as u64, jh as u64)))
}

fn lattice_in_box(
    l: &QuadLattice,
    bx: (f64, f64),
    by: (f64, f64),
    mut visit: impl FnMut(Pt) -> Result<()>,
) -> Result<()> {
    let Some((j0, j1)) = index_range(l.base.x, l.ex, l.sx, bx.0, bx.1)? else {
        return Ok(());
    };
    let Some((k0, k1)) = index_range(l.base.y, l.ey, l.sy, by.0, by.1)? else {
        return Ok(());
    };
    for j in j0..=j1 {
        for k in k0..=k1 {
            visit(l.point(j, k))?;
        }
    }
    Ok(())
}

fn raw_box(m: &MeasureExpr, bx: (f64, f64), by: (f64, f64), out: &mut Vec<Atom>) -> Result<()> {
    let tol = |a: f64| eps_pos(a, a);
    let bx = (bx.0 - tol(bx.0), bx.1 + tol(bx.1));
    let by = (by.0 - tol(by.0), by.1 + tol(by.1));
    for term in &m.terms {
        match term {
            Term::Atom(a) => {
                if a.pos.x >= bx.0 && a.pos.x <= bx.1 && a.pos.y >= by.0 && a.pos.y <= by.1 {
                    out.push(*a);
                }
            }
            Term::Lattice(l) => lattice_in_box(l, bx, by, |p| {
                out.push(Atom::new(p, l.w));
                Ok(())
            })?,
            Term::Conv(l1, l2) => {
                if l1.dir() != l2.dir() {
                    return Err(Error::UnboundedSupport);
                }
                let outer = |e: i8, lo: f64, hi: f64, b2: f64| {
                    if e > 0 {
                        (f64::NEG_INFINITY, hi - b2)
                    } else {
                        (lo - b2, f64::INFINITY)
                    }
                };
                let ox = outer(l1.ex, bx.0, bx.1, l2.base.x);
                let oy = outer(l1.ey, by.0, by.1, l2.base.y);
                let w = l1.w * l2.w;
                lattice_in_box(l1, ox, oy, |p1| {
                    lattice_in_box(l2, (bx.0 - p1.x, bx.1 - p1.x), (by.0 - p1.y, by.1 - p1.y), |p2| {
                        out.push(Atom::new(Pt::new(p1.x + p2.x, p1.y + p2.y), w));
                        Ok(())
                    })
                })?;
            }
        }
    }
    Ok(())
}

fn cmp_xy(a: &Atom, b: &Atom) -> Ordering {
    a.pos
        .x
        .total_cmp(&b.pos.x)
        .then(a.pos.y.total_cmp(&b.pos.y))
        .then(a.w.re.total_cmp(&b.w.re))
        .then(a.w.im.total_cmp(&b.w.im))
}

/// Merges atoms whose positions agree within `eps_pos` and drops the ones
/// whose merged weight is negligible. Output is sorted by position.
pub fn coalesce(mut raw: Vec<Atom>) -> Vec<Atom> {
    raw.sort_by(cmp_xy);
    let mut out = Vec::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        let mut j = i + 1;
        while j < raw.len() && (raw[j].pos.x - raw[j - 1].pos.x).abs() <= eps_pos(raw[j].pos.x, raw[j - 1].pos.x) {
            j += 1;
        }
        let group = &mut raw[i..j];
        if group.len() > 1 {
            group.sort_by(|a, b| a.pos.y.total_cmp(&b.pos.y).then(cmp_xy(a, b)));
        }
        let mut p = 0;
        while p < group.len() {
            let mut q = p + 1;
            let mut w = group[p].w;
            while q < group.len()
                && (group[q].pos.y - group[q - 1].pos.y).abs() <= eps_pos(group[q].pos.y, group[q - 1].pos.y)
            {
                w += group[q].w;
                q += 1;
            }
            if w.norm() > EPS_W {
                out.push(Atom::new(group[p].pos, w));
            }
            p = q;
        }
        i = j;
    }
    out.sort_by(cmp_xy);
    out
}

/// Every atom with `lo <= v·a <= hi` (within `EPS_GEOM`), merged, sorted by
/// advance and then by position.
pub fn atoms_in_slab(m: &MeasureExpr, v: Direction, lo: f64, hi: f64) -> Result<Vec<Atom>> {
    let mut raw = Vec::new();
    raw_slab(m, v, lo, hi, &mut raw)?;
    let mut atoms = coalesce(raw);
    atoms.retain(|a| {
        let adv = v.dot(a.pos);
        adv >= lo - EPS_GEOM && adv <= hi + EPS_GEOM
    });
    atoms.sort_by(|a, b| v.dot(a.pos).total_cmp(&v.dot(b.pos)).then(cmp_xy(a, b)));
    Ok(atoms)
}

/// Every atom inside the closed box, merged and sorted by position.
pub fn atoms_in_box(m: &MeasureExpr, xs: (f64, f64), ys: (f64, f64)) -> Result<Vec<Atom>> {
    let mut raw = Vec::new();
    raw_box(m, xs, ys, &mut raw)?;
    Ok(coalesce(raw))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremal {
    MinXThenMinY,
    MaxXThenMaxY,
}

/// Lexicographically extremal atom with its merged weight.
pub fn extremal_atom(m: &MeasureExpr, mode: Extremal) -> Result<Atom> {
    let want = match mode {
        Extremal::MinXThenMinY => (1, 1),
        Extremal::MaxXThenMaxY => (-1, -1),
    };
    for l in m.terms.iter().flat_map(Term::lattices) {
        if l.dir() != want {
            return Err(Error::UnboundedSupport);
        }
    }
    let better = |p: Pt, q: Pt| -> bool {
        let sign = if mode == Extremal::MinXThenMinY { 1.0 } else { -1.0 };
        if (p.x - q.x).abs() > eps_pos(p.x, q.x) {
            sign * (p.x - q.x) < 0.0
        } else {
            sign * (p.y - q.y) < 0.0
        }
    };
    let best = m
        .terms
        .iter()
        .map(Term::corner)
        .reduce(|a, b| if better(b, a) { b } else { a })
        .ok_or(Error::ZeroMeasure)?;
    let ex = eps_pos(best.x, best.x);
    let ey = eps_pos(best.y, best.y);
    let near = atoms_in_box(m, (best.x - ex, best.x + ex), (best.y - ey, best.y + ey))?;
    let w: Complex64 = near.iter().map(|a| a.w).sum();
    if near.is_empty() || w.norm() <= EPS_W {
        return Err(Error::ZeroMeasure);
    }
    Ok(Atom::new(best, w))
}

/// Extremal advance of the merged support: the supremum for measures that
/// recede to the left of `v`, the infimum for those receding to the right.
/// Finite atom lists accept either side. `Ok(None)` means every atom cancels.
pub fn advance_extreme(m: &MeasureExpr, v: Direction, side: Side) -> Result<Option<f64>> {
    if let Some(rec) = m.recession_side(v)? {
        if rec != side {
            return Err(Error::NonFiniteSlab {
                advance: if side == Side::Left { 1.0 } else { -1.0 },
            });
        }
    }
    let corners = m.terms.iter().map(|t| v.dot(t.corner()));
    let top = match side {
        Side::Left => corners.fold(f64::NEG_INFINITY, f64::max),
        Side::Right => corners.fold(f64::INFINITY, f64::min),
    };
    if !top.is_finite() {
        return Ok(None);
    }
    if m.is_finite_atomic() {
        let atoms = coalesce(m.terms.iter().filter_map(|t| match t {
            Term::Atom(a) => Some(*a),
            _ => None,
        }).collect());
        let advs = atoms.iter().map(|a| v.dot(a.pos));
        return Ok(match side {
            Side::Left => advs.reduce(f64::max),
            Side::Right => advs.reduce(f64::min),
        });
    }
    let mut width = 1.0
        + m.terms
            .iter()
            .flat_map(Term::lattices)
            .map(|l| {
                let (a, b) = l.step_advances(v);
                a.abs().max(b.abs())
            })
            .fold(0.0, f64::max);
    for _ in 0..8 {
        let (lo, hi) = match side {
            Side::Left => (top - width, top + EPS_GEOM),
            Side::Right => (top - EPS_GEOM, top + width),
        };
        let atoms = atoms_in_slab(m, v, lo, hi)?;
        let advs = atoms.iter().map(|a| v.dot(a.pos));
        let found = match side {
            Side::Left => advs.reduce(f64::max),
            Side::Right => advs.reduce(f64::min),
        };
        if found.is_some() {
            return Ok(found);
        }
        width *= 2.0;
    }
    Err(Error::ZeroMeasure)
}

/// Supremum of `v·a` over the support of a left-receding measure.
pub fn v_advance_sup(m: &MeasureExpr, v: Direction) -> Result<f64> {
    advance_extreme(m, v, Side::Left)?.ok_or(Error::ZeroMeasure)
}

/// Infimum of `v·a` over the support of a right-receding measure.
pub fn v_advance_inf(m: &MeasureExpr, v: Direction) -> Result<f64> {
    advance_extreme(m, v, Side::Right)?.ok_or(Error::ZeroMeasure)
}
