mod common;

use boxinv_core::forward::{blur, QuadratureRule};
use boxinv_core::geometry::{BlurConfig, Rect};
use boxinv_core::smoothfn::{C2Fn, Polynomial};
use boxinv_core::Complex64;
use common::*;
use proptest::prelude::*;

/// `∫_lo^hi (x - s)^m ds`.
fn moment(x: f64, lo: f64, hi: f64, m: u32) -> f64 {
    ((x - lo).powi(m as i32 + 1) - (x - hi).powi(m as i32 + 1)) / (m + 1) as f64
}

fn rect() -> impl Strategy<Value = Rect> {
    (-1.5f64..0.5, 0.2f64..2.0, -1.5f64..0.5, 0.2f64..2.0).prop_map(|(a, w, c, h)| Rect::new(a, a + w, c, c + h).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_on_polynomials(order in 2usize..10, fx in 0.0f64..1.0, fy in 0.0f64..1.0, r in rect(), p in point(1.5), alpha in weight(2.0)) {
        let max = 2 * order as u32 - 1;
        let (mx, my) = ((fx * (max + 1) as f64) as u32 % (max + 1), (fy * (max + 1) as f64) as u32 % (max + 1));
        let f = C2Fn::new(Polynomial::new(vec![(mx, my, c(1.0))]));
        let cfg = BlurConfig::new(vec![r], vec![alpha]).unwrap();
        let q = QuadratureRule::gauss_legendre(order).unwrap();
        let want = alpha * moment(p.x, r.a(), r.b(), mx) * moment(p.y, r.c(), r.d(), my);
        let got = blur(&f, &cfg, p, &q).unwrap();
        let scale = [r.a(), r.b()].iter().map(|s| (p.x - s).abs()).fold(1.0, f64::max).powi(mx as i32 + 1)
            * [r.c(), r.d()].iter().map(|s| (p.y - s).abs()).fold(1.0, f64::max).powi(my as i32 + 1)
            * alpha.norm();
        prop_assert!((got - want).norm() <= 1e-12 * scale, "{got} vs {want}");
    }

    #[test]
    fn linear_and_translation_equivariant(r in rect(), a in weight(2.0), b in weight(2.0), t in point(1.0), p in point(3.0)) {
        let cfg = BlurConfig::new(vec![r], vec![c(1.0)]).unwrap();
        let q = QuadratureRule::gauss_legendre(8).unwrap();
        let f = bump((0.1, -0.2), (1.5, 1.0));
        let g = bump((-0.4, 0.3), (0.8, 1.7));
        let combo = f.scale(a).add(&g.scale(b));
        let lhs = blur(&combo, &cfg, p, &q).unwrap();
        let rhs: Complex64 = a * blur(&f, &cfg, p, &q).unwrap() + b * blur(&g, &cfg, p, &q).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12);
        let moved = blur(&f.translate(t), &cfg, p, &q).unwrap();
        let shifted = blur(&f, &cfg, p - t, &q).unwrap();
        prop_assert!((moved - shifted).norm() <= 1e-12);
    }
}
