use super::BinaryMask;
use crate::error::{Error, Result};

/// Samples per spline segment when smoothing polygon outlines.
pub const SPLINE_SUBDIVISIONS: usize = 8;

/// Signed area of a closed polygon (positive for counter-clockwise in a
/// y-up frame).
pub fn shoelace_area(points: &[[f64; 2]]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        let [x0, y0] = points[i];
        let [x1, y1] = points[(i + 1) % n];
        acc += x0 * y1 - x1 * y0;
    }
    acc / 2.0
}

/// Closed centripetal Catmull-Rom curve through `points`, with
/// `subdivisions` samples per segment. Every input point is on the output.
pub fn catmull_rom_closed(points: &[[f64; 2]], subdivisions: usize) -> Vec<[f64; 2]> {
    let n = points.len();
    let steps = subdivisions.max(1);
    let mut out = Vec::with_capacity(n * steps);
    for i in 0..n {
        let p0 = points[(i + n - 1) % n];
        let p1 = points[i];
        let p2 = points[(i + 1) % n];
        let p3 = points[(i + 2) % n];
        for s in 0..steps {
            out.push(centripetal(p0, p1, p2, p3, s as f64 / steps as f64));
        }
    }
    out
}

fn centripetal(p0: [f64; 2], p1: [f64; 2], p2: [f64; 2], p3: [f64; 2], u: f64) -> [f64; 2] {
    fn knot(a: [f64; 2], b: [f64; 2]) -> f64 {
        let d = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        d.sqrt().max(1e-9)
    }
    fn lerp(a: [f64; 2], b: [f64; 2], ta: f64, tb: f64, t: f64) -> [f64; 2] {
        let wa = (tb - t) / (tb - ta);
        let wb = (t - ta) / (tb - ta);
        [wa * a[0] + wb * b[0], wa * a[1] + wb * b[1]]
    }
    let t0 = 0.0;
    let t1 = t0 + knot(p0, p1);
    let t2 = t1 + knot(p1, p2);
    let t3 = t2 + knot(p2, p3);
    let t = t1 + u * (t2 - t1);
    let a1 = lerp(p0, p1, t0, t1, t);
    let a2 = lerp(p1, p2, t1, t2, t);
    let a3 = lerp(p2, p3, t2, t3, t);
    let b1 = lerp(a1, a2, t0, t2, t);
    let b2 = lerp(a2, a3, t1, t3, t);
    lerp(b1, b2, t1, t2, t)
}

/// Even-odd rasterization of a closed polygon, sampling pixel centers.
///
/// Edges are half-open in y and spans half-open in x, so an axis-aligned
/// rectangle from `(0, 0)` to `(10, 10)` covers exactly 100 pixels. With
/// `smooth`, the outline is first replaced by a closed centripetal
/// Catmull-Rom spline through the points.
pub fn fill_polygon(points: &[[f64; 2]], smooth: bool, width: usize, height: usize) -> Result<BinaryMask> {
    if points.len() < 3 {
        return Err(Error::Degenerate(format!("polygon needs at least 3 points, got {}", points.len())));
    }
    if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::invalid("polygon has non-finite vertices"));
    }
    if shoelace_area(points).abs() < 1e-9 {
        return Err(Error::Degenerate("polygon has zero area".into()));
    }
    let outline = if smooth { catmull_rom_closed(points, SPLINE_SUBDIVISIONS) } else { points.to_vec() };

    let mut mask = BinaryMask::empty(width, height);
    let n = outline.len();
    let mut xs = Vec::new();
    for y in 0..height {
        let yf = y as f64;
        xs.clear();
        for i in 0..n {
            let [x0, y0] = outline[i];
            let [x1, y1] = outline[(i + 1) % n];
            if (y0 <= yf && yf < y1) || (y1 <= yf && yf < y0) {
                xs.push(x0 + (yf - y0) * (x1 - x0) / (y1 - y0));
            }
        }
        xs.sort_by(|a, b| a.total_cmp(b));
        for pair in xs.chunks_exact(2) {
            let start = pair[0].ceil().max(0.0);
            let end = pair[1].ceil().min(width as f64);
            let mut x = start;
            while x < end {
                mask.set(x as usize, y, true);
                x += 1.0;
            }
        }
    }
    Ok(mask)
}
