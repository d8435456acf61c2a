mod common;

use boxinv_core::geometry::{Direction, Pt, Side};
use boxinv_core::measure::MeasureExpr;
use boxinv_core::neumann::{solve_perturbed_identity, PerturbedIdentityProblem, SolverOptions};
use boxinv_core::smoothfn::{conv_measure, C2Fn};
use common::*;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Problem {
    v: Direction,
    eta: MeasureExpr,
    h: C2Fn,
}

/// Up to five atoms advancing at least 0.3 behind the origin.
fn problem() -> impl Strategy<Value = Problem> {
    direction().prop_flat_map(|v| {
        let perp = Pt::new(-v.v2(), v.v1());
        let atom = (0.3f64..1.5, -1.0f64..1.0, weight(0.7)).prop_map(move |(a, t, w)| (v.as_pt() * -a + perp * t, w));
        (prop::collection::vec(atom, 1..=5), point(1.0), 0.5f64..2.0, 0.5f64..2.0).prop_map(move |(atoms, c0, bx, by)| {
            let eta = atoms.into_iter().fold(MeasureExpr::empty(), |m, (p, w)| m.plus(&MeasureExpr::delta(p, w)));
            Problem { v, eta, h: bump((c0.x, c0.y), (bx, by)) }
        })
    })
}

fn solve(p: &Problem) -> C2Fn {
    let pip = PerturbedIdentityProblem::new(p.h.clone(), p.eta.clone(), p.v, Side::Left).unwrap();
    solve_perturbed_identity(&pip, &SolverOptions::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn defining_identity(pr in problem(), pts in prop::collection::vec(point(5.0), 20)) {
        let f = solve(&pr);
        let back = conv_measure(&f, &MeasureExpr::delta(Pt::ORIGIN, c(1.0)).plus(&pr.eta), pr.v).unwrap();
        for p in pts {
            prop_assert!((back.value(p).unwrap() - pr.h.value(p).unwrap()).norm() <= 1e-10);
        }
    }

    #[test]
    fn vanishes_beyond_support(pr in problem(), pts in prop::collection::vec((point(5.0), 1e-6f64..3.0), 20)) {
        let f = solve(&pr);
        let top = pr.h.support().threshold(pr.v, Side::Left).unwrap();
        for (p, gap) in pts {
            let q = p + pr.v.as_pt() * (top + gap - pr.v.dot(p));
            prop_assert_eq!(f.value(q).unwrap(), c(0.0));
        }
    }

    #[test]
    fn fresh_solves_are_bit_identical(pr in problem(), pts in prop::collection::vec(point(4.0), 12)) {
        let (a, b) = (solve(&pr), solve(&pr));
        let forward: Vec<_> = pts.iter().map(|&p| a.value(p).unwrap()).collect();
        let backward: Vec<_> = pts.iter().rev().map(|&p| b.value(p).unwrap()).collect();
        for (x, y) in forward.iter().zip(backward.iter().rev()) {
            prop_assert_eq!((x.re.to_bits(), x.im.to_bits()), (y.re.to_bits(), y.im.to_bits()));
        }
    }
}
