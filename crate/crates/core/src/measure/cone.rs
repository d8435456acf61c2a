use crate::error::{Error, Result};
use crate::geometry::{ConvexCone, Direction, Pt, EPS_GEOM};

use super::{atoms_in_box, atoms_in_slab, extremal_atom, Atom, Extremal, MeasureExpr};

/// Number of atoms per measure that are checked against the cone.
const VERIFY_SAMPLES: usize = 100;

/// A pointed cone with bisector `v` that contains the support of an
/// up-right measure after translating its leading atom to the origin, and
/// whose negative contains the support of a down-left measure likewise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeData {
    pub cone: ConvexCone,
    pub v: Direction,
    /// Min-x-then-min-y atom of the up-right measure.
    pub lead1: Atom,
    /// Max-x-then-max-y atom of the down-left measure.
    pub lead2: Atom,
    pub r: f64,
    pub s1: f64,
    pub s2: f64,
    pub s: f64,
}

fn max_slope(m: &MeasureExpr, lead: Pt, r: f64) -> Result<f64> {
    let near = atoms_in_box(m, (lead.x - r, lead.x + r), (lead.y - r, lead.y + r))?;
    Ok(near
        .iter()
        .map(|a| a.pos - lead)
        .filter(|d| d.norm() <= r && d.x.abs() > EPS_GEOM)
        .map(|d| (d.y / d.x).abs())
        .fold(0.0, f64::max))
}

fn rim_slope(gap: f64, r: f64) -> f64 {
    (gap / (r * r - gap * gap).sqrt()).abs()
}

/// Builds the cone with the default radius `2.000001·max(gap) + 1`.
pub fn cone_for_pair(up: &MeasureExpr, down: &MeasureExpr) -> Result<ConeData> {
    let (lead1, lead2, beta1, beta2) = leads(up, down)?;
    let r = 2.000001 * (beta1 - lead1.pos.y).abs().max((beta2 - lead2.pos.y).abs()) + 1.0;
    build(up, down, lead1, lead2, beta1, beta2, r)
}

/// Same construction with a caller-chosen radius, which must exceed twice
/// the larger vertical gap between a leading atom and its support bound.
pub fn cone_with_radius(up: &MeasureExpr, down: &MeasureExpr, r: f64) -> Result<ConeData> {
    let (lead1, lead2, beta1, beta2) = leads(up, down)?;
    let gap = (beta1 - lead1.pos.y).abs().max((beta2 - lead2.pos.y).abs());
    if !(r > 2.0 * gap) {
        return Err(Error::InvalidConfig(format!("radius {r} must exceed {}", 2.0 * gap)));
    }
    build(up, down, lead1, lead2, beta1, beta2, r)
}

fn leads(up: &MeasureExpr, down: &MeasureExpr) -> Result<(Atom, Atom, f64, f64)> {
    let lead1 = extremal_atom(up, Extremal::MinXThenMinY)?;
    let lead2 = extremal_atom(down, Extremal::MaxXThenMaxY)?;
    let beta1 = up.coordinate_bounds().and_then(|b| b.ymin).ok_or(Error::UnboundedSupport)?;
    let beta2 = down.coordinate_bounds().and_then(|b| b.ymax).ok_or(Error::UnboundedSupport)?;
    Ok((lead1, lead2, beta1, beta2))
}

fn build(
    up: &MeasureExpr,
    down: &MeasureExpr,
    lead1: Atom,
    lead2: Atom,
    beta1: f64,
    beta2: f64,
    r: f64,
) -> Result<ConeData> {
    let s1 = max_slope(up, lead1.pos, r)?.max(rim_slope(beta1 - lead1.pos.y, r));
    let s2 = max_slope(down, lead2.pos, r)?.max(rim_slope(beta2 - lead2.pos.y, r));
    let s = s1.max(s2);
    let cone = if s == 0.0 {
        ConvexCone::first_quadrant()
    } else {
        ConvexCone::new(Direction::new(0.0, 1.0)?, Direction::new(1.0, -s)?)?
    };
    let v = if s == 0.0 { Direction::diagonal() } else { cone.bisector() };
    let data = ConeData { cone, v, lead1, lead2, r, s1, s2, s };
    verify(up, &data, lead1.pos, 1.0)?;
    verify(down, &data, lead2.pos, -1.0)?;
    Ok(data)
}

/// Spot-checks the atoms nearest the leading one along `v`.
fn verify(m: &MeasureExpr, data: &ConeData, lead: Pt, sign: f64) -> Result<()> {
    let v = data.v;
    let a0 = v.dot(lead);
    let mut width = 4.0;
    let mut atoms = Vec::new();
    for _ in 0..6 {
        let (lo, hi) = if sign > 0.0 { (a0 - 1.0, a0 + width) } else { (a0 - width, a0 + 1.0) };
        atoms = atoms_in_slab(m, v, lo, hi)?;
        if atoms.len() > VERIFY_SAMPLES {
            break;
        }
        width *= 2.0;
    }
    if sign < 0.0 {
        atoms.reverse();
    }
    for a in atoms.iter().take(VERIFY_SAMPLES) {
        let d = (a.pos - lead) * sign;
        if d.norm() <= EPS_GEOM {
            continue;
        }
        let fail = |reason: &str| Error::ConeVerificationFailed {
            x: a.pos.x,
            y: a.pos.y,
            reason: reason.to_string(),
        };
        if !data.cone.contains(d, EPS_GEOM) {
            return Err(fail("outside cone"));
        }
        if v.dot(d) <= EPS_GEOM {
            return Err(fail("no positive advance"));
        }
    }
    Ok(())
}
