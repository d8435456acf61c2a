#![allow(dead_code)]

use boxinv_core::geometry::{BlurConfig, Direction, Pt, Rect};
use boxinv_core::smoothfn::{C2Fn, PolyBump};
use boxinv_core::Complex64;
use proptest::prelude::*;

pub fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn bump(center: (f64, f64), radii: (f64, f64)) -> C2Fn {
    C2Fn::new(PolyBump::new(Pt::new(center.0, center.1), radii, c(1.0)).unwrap())
}

pub fn direction() -> impl Strategy<Value = Direction> {
    (0.25f64..1.32).prop_map(|th| Direction::new(th.cos(), th.sin()).unwrap())
}

pub fn weight(max: f64) -> impl Strategy<Value = Complex64> {
    (0.1 * max..max, 0.0..std::f64::consts::TAU).prop_map(|(r, th)| Complex64::from_polar(r, th))
}

pub fn point(span: f64) -> impl Strategy<Value = Pt> {
    (-span..span, -span..span).prop_map(|(x, y)| Pt::new(x, y))
}

/// Strictly increasing `(lo, hi)` chains with `lo < hi` at every index.
fn chain(n: usize, quantum: f64) -> impl Strategy<Value = Vec<(f64, f64)>> {
    let q = move |k: u32| k as f64 * quantum;
    (
        -8i32..0,
        2u32..8,
        prop::collection::vec(1u32..5, n - 1),
        prop::collection::vec(1u32..5, n - 1),
    )
        .prop_map(move |(lo0, w0, dl, dh)| {
            let mut lo = lo0 as f64 * quantum;
            let mut hi = lo + q(w0);
            let mut out = vec![(lo, hi)];
            for (a, b) in dl.iter().zip(&dh) {
                lo += q(*a);
                hi = (hi + q(*b)).max(lo + quantum);
                out.push((lo, hi));
            }
            out
        })
}

/// Up-right staircase of `n` rectangles whose coordinates are multiples of
/// `quantum`, with complex weights.
pub fn staircase(n: usize, quantum: f64) -> impl Strategy<Value = BlurConfig> {
    (chain(n, quantum), chain(n, quantum), prop::collection::vec(weight(2.0), n)).prop_map(|(xs, ys, ws)| {
        let rects = xs.iter().zip(&ys).map(|(x, y)| Rect::new(x.0, x.1, y.0, y.1).unwrap()).collect();
        BlurConfig::new(rects, ws).unwrap()
    })
}
