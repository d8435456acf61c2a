//! Solver for `u ★ (δ₀ + η) = h` when `h` lives in a half-plane and `η`
//! recedes strictly away from it along `v`.
//!
//! The alternating series `Σ (-1)^k h ★ η^k` is evaluated as the finite
//! recursion `u(q) = h(q) - Σ_a w_a·u(q - a)`: every atom moves the query a
//! positive distance towards the support edge of `h`, so after finitely
//! many steps the query leaves the support and the recursion bottoms out.

use std::collections::{HashMap, HashSet};

use num_complex::Complex64;
use parking_lot::RwLock;

use crate::error::{Error, Result};
use crate::geometry::{AxisBounds, Direction, HalfPlane, Pt, Side, EPS_GEOM};
use crate::measure::{advance_extreme, extremal_atom, Extremal, MeasureExpr};
use crate::smoothfn::conv::{snap_pt, SlabCache};
use crate::smoothfn::{C2Fn, Channels, Jet, SmoothFn, Support};

/// Smallest advance margin the solver accepts.
pub const MIN_ADVANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverOptions {
    /// Largest admissible recursion depth bound at a query point.
    pub depth_cap: u64,
    /// Largest number of memoized points per solved function.
    pub memo_cap: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { depth_cap: 10_000, memo_cap: 1 << 22 }
    }
}

#[derive(Debug, Clone)]
pub struct PerturbedIdentityProblem {
    h: C2Fn,
    eta: MeasureExpr,
    v: Direction,
    side: Side,
    beta: f64,
    alpha_supp: f64,
}

impl PerturbedIdentityProblem {
    /// `side` is the side of `v` on which `h` is supported; `eta` must
    /// recede to the same side with a positive margin.
    pub fn new(h: C2Fn, eta: MeasureExpr, v: Direction, side: Side) -> Result<Self> {
        let alpha_supp = h
            .support()
            .threshold(v, side)
            .ok_or_else(|| Error::SupportMismatch(format!("right-hand side has no {side} bound along v")))?;
        let beta = match advance_extreme(&eta, v, side)? {
            None => f64::INFINITY,
            Some(ext) => match side {
                Side::Left => -ext,
                Side::Right => ext,
            },
        };
        if !(beta >= MIN_ADVANCE) {
            return Err(Error::NonPositiveAdvance(beta));
        }
        Ok(PerturbedIdentityProblem { h, eta, v, side, beta, alpha_supp })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha_supp(&self) -> f64 {
        self.alpha_supp
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn eta(&self) -> &MeasureExpr {
        &self.eta
    }
}

type Key = (u64, u64);

fn key(p: Pt) -> Key {
    ((p.x + 0.0).to_bits(), (p.y + 0.0).to_bits())
}

#[derive(Debug)]
struct NeumannFn {
    h: C2Fn,
    v: Direction,
    side: Side,
    alpha: f64,
    beta: f64,
    atoms: SlabCache,
    support: Support,
    opts: SolverOptions,
    memo: RwLock<HashMap<Key, Jet>>,
}

impl NeumannFn {
    /// Distance from `q` to the support edge, measured along `v`.
    fn room(&self, q: Pt) -> f64 {
        match self.side {
            Side::Left => self.alpha - self.v.dot(q),
            Side::Right => self.v.dot(q) - self.alpha,
        }
    }

    /// How deep into the atom list the children of `q` can reach.
    fn atom_depth(&self, q: Pt) -> f64 {
        self.room(q) - self.beta
    }

    fn solve(&self, q0: Pt) -> Result<Jet> {
        if !self.support.contains(q0) {
            return Ok(Jet::zero());
        }
        if let Some(j) = self.memo.read().get(&key(q0)) {
            return Ok(*j);
        }
        let needed = (self.room(q0).max(0.0) / self.beta).ceil();
        if needed > self.opts.depth_cap as f64 {
            return Err(Error::DepthExceeded { needed: needed as u64, cap: self.opts.depth_cap });
        }

        // Collect every point the recursion touches that is not memoized yet.
        let mut order = vec![q0];
        let mut seen: HashSet<Key> = HashSet::from([key(q0)]);
        {
            let memo = self.memo.read();
            let mut i = 0;
            while i < order.len() {
                let q = order[i];
                i += 1;
                let depth = self.atom_depth(q);
                if depth < -EPS_GEOM {
                    continue;
                }
                let slab = self.atoms.covering(depth)?;
                for a in &slab.atoms[..slab.count_within(depth)] {
                    let c = q - a.pos;
                    if !self.support.contains(c) {
                        continue;
                    }
                    let k = key(c);
                    if memo.contains_key(&k) || !seen.insert(k) {
                        continue;
                    }
                    order.push(c);
                }
                if memo.len() + order.len() > self.opts.memo_cap {
                    return Err(Error::MemoCapExceeded { cap: self.opts.memo_cap });
                }
            }
        }

        // Children sit strictly closer to the support edge than their parents.
        order.sort_by(|a, b| self.room(*a).total_cmp(&self.room(*b)).then(a.x.total_cmp(&b.x)).then(a.y.total_cmp(&b.y)));
        let mut local: HashMap<Key, Jet> = HashMap::with_capacity(order.len());
        {
            let memo = self.memo.read();
            for &q in &order {
                let mut j = self.h.eval(q)?;
                let depth = self.atom_depth(q);
                if depth >= -EPS_GEOM {
                    let slab = self.atoms.covering(depth)?;
                    for a in &slab.atoms[..slab.count_within(depth)] {
                        let c = q - a.pos;
                        if !self.support.contains(c) {
                            continue;
                        }
                        let k = key(c);
                        let child = local.get(&k).or_else(|| memo.get(&k)).copied().ok_or_else(|| {
                            Error::SupportMismatch("recursion reached an unscheduled point".into())
                        })?;
                        j -= child * a.w;
                    }
                }
                local.insert(key(q), j);
            }
        }
        let out = local[&key(q0)];
        let mut memo = self.memo.write();
        if memo.len() + local.len() > self.opts.memo_cap {
            return Err(Error::MemoCapExceeded { cap: self.opts.memo_cap });
        }
        memo.extend(local);
        Ok(out)
    }
}

impl SmoothFn for NeumannFn {
    fn eval(&self, p: Pt) -> Result<Jet> {
        self.solve(snap_pt(p))
    }
    fn support(&self) -> &Support {
        &self.support
    }
    fn channels(&self) -> Channels {
        self.h.channels()
    }
}

/// Bounds inherited by the solution: a coordinate bound of `h` survives when
/// every atom of `η` points away from it.
fn inherited_bounds(h: &AxisBounds, eta: &MeasureExpr) -> AxisBounds {
    let Some(e) = eta.coordinate_bounds() else {
        return *h;
    };
    let keep_max = |b: Option<f64>, em: Option<f64>| b.filter(|_| em.is_some_and(|m| m <= EPS_GEOM));
    let keep_min = |b: Option<f64>, em: Option<f64>| b.filter(|_| em.is_some_and(|m| m >= -EPS_GEOM));
    AxisBounds {
        xmin: keep_min(h.xmin, e.xmin),
        xmax: keep_max(h.xmax, e.xmax),
        ymin: keep_min(h.ymin, e.ymin),
        ymax: keep_max(h.ymax, e.ymax),
    }
}

/// Solves `u ★ (δ₀ + η) = h`.
pub fn solve_perturbed_identity(p: &PerturbedIdentityProblem, opts: &SolverOptions) -> Result<C2Fn> {
    if p.h.support().is_empty() {
        return Ok(C2Fn::zero());
    }
    let Some(atoms) = SlabCache::new(&p.eta, p.v, p.side, true)? else {
        return Ok(p.h.clone());
    };
    let support = Support::from_bounds(inherited_bounds(p.h.support().bounds(), &p.eta))
        .with_plane(HalfPlane { v: p.v, alpha: p.alpha_supp, side: p.side });
    Ok(C2Fn::new(NeumannFn {
        h: p.h.clone(),
        v: p.v,
        side: p.side,
        alpha: p.alpha_supp,
        beta: p.beta,
        atoms,
        support,
        opts: *opts,
        memo: RwLock::new(HashMap::new()),
    }))
}

/// Factors `ν = c·δ_z ★ (δ₀ + η)` at its leading atom and solves `g ★ ν = h`.
pub fn solve_general(h: &C2Fn, nu: &MeasureExpr, v: Direction, side: Side, opts: &SolverOptions) -> Result<C2Fn> {
    let mode = match side {
        Side::Left => Extremal::MaxXThenMaxY,
        Side::Right => Extremal::MinXThenMinY,
    };
    let lead = extremal_atom(nu, mode)?;
    let inv = Complex64::new(1.0, 0.0) / lead.w;
    let eta = nu
        .translate(-lead.pos)
        .scale(inv)
        .plus(&MeasureExpr::delta(Pt::ORIGIN, Complex64::new(-1.0, 0.0)));
    let problem = PerturbedIdentityProblem::new(h.scale(inv), eta, v, side)?;
    let u = solve_perturbed_identity(&problem, opts)?;
    Ok(u.translate(-lead.pos))
}
