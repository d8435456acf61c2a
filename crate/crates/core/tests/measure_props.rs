mod common;

use boxinv_core::geometry::{Direction, Pt, Side};
use boxinv_core::measure::{
    advance_extreme, atoms_in_slab, coalesce, cone_for_pair, Atom, MeasureExpr, QuadLattice, Term,
};
use boxinv_core::reconstruct::build_case_measures;
use boxinv_core::Complex64;
use common::*;
use proptest::prelude::*;

fn lattice() -> impl Strategy<Value = QuadLattice> {
    (weight(1.5), point(2.0), 0.3f64..1.5, 0.3f64..1.5)
        .prop_map(|(w, base, sx, sy)| QuadLattice::new(w, base, (sx, sy), (-1, -1)).unwrap())
}

fn mixed_measure() -> impl Strategy<Value = Vec<Term>> {
    (
        prop::collection::vec(lattice(), 1..3),
        prop::collection::vec((point(3.0), weight(1.0)), 0..4),
    )
        .prop_map(|(ls, atoms)| {
            let mut terms: Vec<Term> = ls.into_iter().map(Term::Lattice).collect();
            terms.extend(atoms.into_iter().map(|(p, w)| Term::Atom(Atom::new(p, w))));
            terms
        })
}

fn same_atoms(a: &[Atom], b: &[Atom]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| (x.pos - y.pos).norm() <= 1e-9 && (x.w - y.w).norm() <= 1e-12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn slab_ignores_order_and_splitting(terms in mixed_measure(), v in direction(), depth in 0.5f64..6.0, seed in any::<u64>()) {
        let m = MeasureExpr::from_terms(terms.clone());
        let top = advance_extreme(&m, v, Side::Left).unwrap().unwrap_or(0.0);
        let want = atoms_in_slab(&m, v, top - depth, top).unwrap();

        let mut shuffled = terms.clone();
        let k = (seed as usize) % shuffled.len();
        shuffled.rotate_left(k);
        shuffled.reverse();
        let got = atoms_in_slab(&MeasureExpr::from_terms(shuffled), v, top - depth, top).unwrap();
        prop_assert!(same_atoms(&want, &got));

        let halves: Vec<Term> = terms
            .iter()
            .flat_map(|t| {
                let h = MeasureExpr::from_terms(vec![*t]).scale(Complex64::new(0.5, 0.0));
                vec![h.terms()[0], h.terms()[0]]
            })
            .collect();
        let got = atoms_in_slab(&MeasureExpr::from_terms(halves), v, top - depth, top).unwrap();
        prop_assert!(same_atoms(&want, &got));
    }

    #[test]
    fn nested_slabs_agree(terms in mixed_measure(), v in direction(), lo in 0.0f64..3.0, width in 0.1f64..3.0, pad in 0.0f64..2.0) {
        let m = MeasureExpr::from_terms(terms);
        let top = advance_extreme(&m, v, Side::Left).unwrap().unwrap_or(0.0);
        let (l, u) = (top - lo - width, top - lo);
        let inner = atoms_in_slab(&m, v, l, u).unwrap();
        let outer = atoms_in_slab(&m, v, l - pad, u + pad).unwrap();
        let filtered: Vec<Atom> = outer
            .into_iter()
            .filter(|a| {
                let adv = v.dot(a.pos);
                adv >= l - 1e-9 && adv <= u + 1e-9
            })
            .collect();
        prop_assert!(same_atoms(&inner, &filtered));
    }

    #[test]
    fn conv_matches_double_loop(l1 in lattice(), l2 in lattice(), v in direction(), frac in 0.1f64..1.0) {
        let m = MeasureExpr::from_terms(vec![Term::Conv(l1, l2)]);
        let top = v.dot(l1.base() + l2.base());
        // Any atom with an index above 12 advances at least 13 steps below
        // the top, so the slab only sees indices <= 12.
        let step = [l1.step(), l2.step()].iter().flat_map(|s| [s.0 * v.v1(), s.1 * v.v2()]).fold(f64::INFINITY, f64::min);
        let depth = 13.0 * step * frac;
        let got = atoms_in_slab(&m, v, top - depth, top).unwrap();
        let mut raw = Vec::new();
        for j1 in 0..=12 {
            for k1 in 0..=12 {
                for j2 in 0..=12 {
                    for k2 in 0..=12 {
                        let p = l1.point(j1, k1) + l2.point(j2, k2);
                        if v.dot(p) >= top - depth - 1e-9 {
                            raw.push(Atom::new(p, l1.weight() * l2.weight()));
                        }
                    }
                }
            }
        }
        let mut want = coalesce(raw);
        want.retain(|a| v.dot(a.pos) >= top - depth - 1e-9);
        want.sort_by(|a, b| v.dot(a.pos).total_cmp(&v.dot(b.pos)).then(a.pos.x.total_cmp(&b.pos.x)).then(a.pos.y.total_cmp(&b.pos.y)));
        prop_assert!(same_atoms(&want, &got), "{} vs {}", want.len(), got.len());
    }

    #[test]
    fn cone_for_staircase_pairs(cfg in (2usize..5).prop_flat_map(|n| staircase(n, 0.25))) {
        let left = build_case_measures(&cfg, Side::Left).unwrap();
        let right = build_case_measures(&cfg, Side::Right).unwrap();
        let cd = cone_for_pair(&right.nu, &left.nu).unwrap();
        let v = cd.v;
        prop_assert!((v.v1().hypot(v.v2()) - 1.0).abs() <= 1e-12);
        prop_assert!(v.v1() > 0.0 && v.v2() > 0.0);
        for (m, lead, sign) in [(&right.nu, cd.lead1.pos, 1.0), (&left.nu, cd.lead2.pos, -1.0)] {
            let eta = m.translate(-lead);
            let atoms = atoms_in_slab(&eta, v, if sign > 0.0 { -1e-9 } else { -6.0 }, if sign > 0.0 { 6.0 } else { 1e-9 }).unwrap();
            for a in atoms.iter().take(100) {
                let d = a.pos * sign;
                if d.norm() <= 1e-9 {
                    continue;
                }
                prop_assert!(cd.cone.contains(d, 1e-9), "{:?} outside cone", a.pos);
                prop_assert!(v.dot(d) > 0.0);
            }
        }
    }
}

#[test]
fn slab_depth_zero_is_leading_atom() {
    let l = QuadLattice::new(c(2.0), Pt::new(-1.0, -1.0), (2.0, 2.0), (-1, -1)).unwrap();
    let v = Direction::diagonal();
    let top = v.dot(Pt::new(-1.0, -1.0));
    let atoms = atoms_in_slab(&MeasureExpr::lattice(l), v, top, top).unwrap();
    assert_eq!(atoms, vec![Atom::new(Pt::new(-1.0, -1.0), c(2.0))]);
}
