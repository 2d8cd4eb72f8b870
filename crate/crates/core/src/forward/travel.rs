use crate::error::{Error, Result};
use crate::medium::LayeredMedium;
use crate::scan::{ArrayGeometry, Point};

const DEPTH_SLACK: f64 = 1e-12;

/// Straight-ray travel time between two points of a layered medium.
///
/// Each layer contributes the length of the segment inside it divided by
/// its speed; rays are not bent at interfaces.
pub fn travel_time(p: Point, q: Point, medium: &LayeredMedium) -> Result<f64> {
    let total = medium.total_thickness();
    for pt in [p, q] {
        if !(pt[1] >= -DEPTH_SLACK && pt[1] <= total + DEPTH_SLACK) || !pt[0].is_finite() {
            return Err(Error::config(format!(
                "point ({:.4}, {:.4}) lies outside the medium depth span [0, {total:.4}]",
                pt[0], pt[1]
            )));
        }
    }
    let dx = q[0] - p[0];
    let dz = q[1] - p[1];
    let length = dx.hypot(dz);
    if length == 0.0 {
        return Ok(0.0);
    }
    let (z0, z1) = if dz >= 0.0 { (p[1], q[1]) } else { (q[1], p[1]) };
    let z0 = z0.clamp(0.0, total);
    let z1 = z1.clamp(0.0, total);
    if z1 - z0 <= 0.0 {
        // horizontal ray: a single layer
        let layer = medium.layer_at(z0).expect("depth checked above");
        return Ok(length / layer.speed);
    }
    let span = dz.abs();
    let mut t = 0.0;
    for (top, bottom, layer) in medium.intervals() {
        let overlap = z1.min(bottom) - z0.max(top);
        if overlap > 0.0 {
            t += overlap / span * length / layer.speed;
        }
    }
    Ok(t)
}

/// Lateral apodization of the collimated beam at `voxel`.
///
/// Gaussian in the perpendicular distance from the tilted beam axis with
/// standard deviation `beam_halfwidth`, truncated to zero beyond three
/// half-widths.
pub fn beam_weight(voxel: Point, geometry: &ArrayGeometry) -> f64 {
    let s = geometry.source_pos();
    let dir = geometry.beam_direction();
    let d = [voxel[0] - s[0], voxel[1] - s[1]];
    let perp = (d[0] * dir[1] - d[1] * dir[0]).abs();
    let w = geometry.beam_halfwidth();
    if perp > 3.0 * w {
        0.0
    } else {
        (-perp * perp / (2.0 * w * w)).exp()
    }
}
