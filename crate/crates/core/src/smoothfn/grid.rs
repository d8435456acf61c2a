use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::Pt;

use super::{Jet, SmoothFn, Support};

/// Samples on a uniform closed grid, interpolated with Catmull-Rom splines
/// and zero outside the grid. Derivative channels are finite differences of
/// the interpolant, so this is only suitable for demonstrations.
#[derive(Debug, Clone)]
pub struct SampledGrid {
    x0: f64,
    y0: f64,
    hx: f64,
    hy: f64,
    nx: usize,
    ny: usize,
    /// Row-major, `y` outer.
    values: Vec<Complex64>,
    support: Support,
}

fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

impl SampledGrid {
    pub fn new(region: (f64, f64, f64, f64), nx: usize, ny: usize, values: Vec<Complex64>) -> Result<Self> {
        let (xmin, xmax, ymin, ymax) = region;
        if nx < 2 || ny < 2 || values.len() != nx * ny || !(xmax > xmin) || !(ymax > ymin) {
            return Err(Error::InvalidGrid(format!("{nx}x{ny} grid with {} samples", values.len())));
        }
        Ok(SampledGrid {
            x0: xmin,
            y0: ymin,
            hx: (xmax - xmin) / (nx - 1) as f64,
            hy: (ymax - ymin) / (ny - 1) as f64,
            nx,
            ny,
            values,
            support: Support::boxed(xmin, xmax, ymin, ymax),
        })
    }

    fn sample(&self, i: i64, j: i64) -> Complex64 {
        let i = i.clamp(0, self.nx as i64 - 1) as usize;
        let j = j.clamp(0, self.ny as i64 - 1) as usize;
        self.values[j * self.nx + i]
    }

    fn interp(&self, p: Pt) -> Complex64 {
        if !self.support.contains(p) {
            return Complex64::new(0.0, 0.0);
        }
        let u = (p.x - self.x0) / self.hx;
        let w = (p.y - self.y0) / self.hy;
        let (i, j) = (u.floor().min(self.nx as f64 - 2.0), w.floor().min(self.ny as f64 - 2.0));
        let (wx, wy) = (catmull_rom(u - i), catmull_rom(w - j));
        let (i, j) = (i as i64, j as i64);
        let mut acc = Complex64::new(0.0, 0.0);
        for (b, cy) in wy.iter().enumerate() {
            for (a, cx) in wx.iter().enumerate() {
                acc += self.sample(i + a as i64 - 1, j + b as i64 - 1) * (cx * cy);
            }
        }
        acc
    }
}

impl SmoothFn for SampledGrid {
    fn eval(&self, p: Pt) -> Result<Jet> {
        let (hx, hy) = (self.hx * 1e-3, self.hy * 1e-3);
        let f = |dx: f64, dy: f64| self.interp(Pt::new(p.x + dx, p.y + dy));
        Ok(Jet {
            val: f(0.0, 0.0),
            dx: (f(hx, 0.0) - f(-hx, 0.0)) / (2.0 * hx),
            dy: (f(0.0, hy) - f(0.0, -hy)) / (2.0 * hy),
            dxy: (f(hx, hy) - f(hx, -hy) - f(-hx, hy) + f(-hx, -hy)) / (4.0 * hx * hy),
        })
    }
    fn value(&self, p: Pt) -> Result<Complex64> {
        Ok(self.interp(p))
    }
    fn support(&self) -> &Support {
        &self.support
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_linear_data() {
        let (nx, ny) = (5, 4);
        let vals: Vec<_> = (0..ny)
            .flat_map(|j| (0..nx).map(move |i| Complex64::new(i as f64 + 2.0 * j as f64, 0.0)))
            .collect();
        let g = SampledGrid::new((0.0, 4.0, 0.0, 3.0), nx, ny, vals).unwrap();
        assert_eq!(g.value(Pt::new(2.0, 1.0)).unwrap(), Complex64::new(4.0, 0.0));
        let v = g.value(Pt::new(1.5, 1.25)).unwrap();
        assert!((v.re - 4.0).abs() < 1e-12);
        assert_eq!(g.value(Pt::new(5.0, 1.0)).unwrap(), Complex64::new(0.0, 0.0));
    }
}
