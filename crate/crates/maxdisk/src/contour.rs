//! Level-set extraction from scalar grids: marching squares with linear
//! interpolation and endpoint chaining into polylines.

use num_complex::Complex64;

/// Row-major scalar samples on a uniform rectangular grid.
#[derive(Debug, Clone)]
pub struct ScalarGrid {
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn from_fn(x0: f64, y0: f64, dx: f64, dy: f64, nx: usize, ny: usize, f: impl Fn(Complex64) -> f64) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(f(Complex64::new(x0 + dx * i as f64, y0 + dy * j as f64)));
            }
        }
        ScalarGrid { x0, y0, dx, dy, nx, ny, values }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.x0 + self.dx * i as f64, self.y0 + self.dy * j as f64)
    }
}

/// A chained level-set polyline; `closed` marks loops.
#[derive(Debug, Clone)]
pub struct Contour {
    pub points: Vec<Complex64>,
    pub closed: bool,
}

fn interp(pa: Complex64, va: f64, pb: Complex64, vb: f64, level: f64) -> Complex64 {
    let denom = vb - va;
    let t = if denom.abs() < 1e-300 { 0.5 } else { ((level - va) / denom).clamp(0.0, 1.0) };
    pa + (pb - pa) * t
}

/// Extract the level set `f = level` as chained polylines. Grid values equal
/// to the level are nudged to avoid degenerate cell cases; the shift is one
/// part in 1e12 of the local value range.
pub fn extract_level(grid: &ScalarGrid, level: f64) -> Vec<Contour> {
    let nx = grid.nx;
    let ny = grid.ny;
    let eps = {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &grid.values {
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        ((hi - lo).abs().max(1.0)) * 1e-12
    };
    let val = |i: usize, j: usize| -> f64 {
        let v = grid.at(i, j);
        if v == level {
            level + eps
        } else {
            v
        }
    };

    // segments keyed by quantized endpoints for chaining
    let mut segments: Vec<(Complex64, Complex64)> = Vec::new();
    for j in 0..ny.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            let v = [val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1)];
            if v.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let p = [
                grid.point(i, j),
                grid.point(i + 1, j),
                grid.point(i + 1, j + 1),
                grid.point(i, j + 1),
            ];
            let mut case = 0usize;
            for (k, &vv) in v.iter().enumerate() {
                if vv > level {
                    case |= 1 << k;
                }
            }
            if case == 0 || case == 15 {
                continue;
            }
            // edge k joins corner k and corner (k+1)%4
            let edge_pt = |k: usize| interp(p[k], v[k], p[(k + 1) % 4], v[(k + 1) % 4], level);
            let mut crossed: Vec<usize> = Vec::with_capacity(4);
            for k in 0..4 {
                if (v[k] > level) != (v[(k + 1) % 4] > level) {
                    crossed.push(k);
                }
            }
            match crossed.len() {
                2 => segments.push((edge_pt(crossed[0]), edge_pt(crossed[1]))),
                4 => {
                    // saddle: resolve by the cell-center value
                    let center = (v[0] + v[1] + v[2] + v[3]) * 0.25;
                    if (center > level) == (v[0] > level) {
                        segments.push((edge_pt(0), edge_pt(3)));
                        segments.push((edge_pt(1), edge_pt(2)));
                    } else {
                        segments.push((edge_pt(0), edge_pt(1)));
                        segments.push((edge_pt(2), edge_pt(3)));
                    }
                }
                _ => {}
            }
        }
    }

    chain_segments(segments, grid.dx.min(grid.dy) * 1e-6)
}

fn chain_segments(segments: Vec<(Complex64, Complex64)>, tol: f64) -> Vec<Contour> {
    use std::collections::HashMap;
    let q = |p: Complex64| -> (i64, i64) {
        ((p.re / tol).round() as i64, (p.im / tol).round() as i64)
    };
    // endpoint key -> (segment index, end flag)
    let mut ends: HashMap<(i64, i64), Vec<(usize, bool)>> = HashMap::new();
    for (idx, (a, b)) in segments.iter().enumerate() {
        ends.entry(q(*a)).or_default().push((idx, false));
        ends.entry(q(*b)).or_default().push((idx, true));
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a0, b0) = segments[start];
        let mut chain = vec![a0, b0];
        // extend forward from the tail, then backward from the head
        for dir in 0..2 {
            loop {
                let tip = if dir == 0 { *chain.last().unwrap() } else { chain[0] };
                let mut next: Option<(usize, bool)> = None;
                if let Some(cands) = ends.get(&q(tip)) {
                    for &(idx, end) in cands {
                        if !used[idx] {
                            next = Some((idx, end));
                            break;
                        }
                    }
                }
                let Some((idx, end)) = next else { break };
                used[idx] = true;
                let (a, b) = segments[idx];
                let other = if end { a } else { b };
                if dir == 0 {
                    chain.push(other);
                } else {
                    chain.insert(0, other);
                }
            }
        }
        let closed = chain.len() > 2 && (chain[0] - chain[chain.len() - 1]).norm() <= tol * 4.0;
        if closed {
            chain.pop();
        }
        out.push(Contour { points: chain, closed });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_level_set() {
        let grid = ScalarGrid::from_fn(-2.0, -2.0, 0.02, 0.02, 201, 201, |z| z.norm());
        let contours = extract_level(&grid, 1.0);
        let loops: Vec<_> = contours.iter().filter(|c| c.closed).collect();
        assert_eq!(loops.len(), 1);
        let c = loops[0];
        assert!(c.points.len() > 100);
        for p in &c.points {
            assert!((p.norm() - 1.0).abs() < 0.01, "off circle: {p}");
        }
        // enclosed area close to pi
        let mut area = 0.0;
        let n = c.points.len();
        for i in 0..n {
            let a = c.points[i];
            let b = c.points[(i + 1) % n];
            area += a.re * b.im - b.re * a.im;
        }
        area = area.abs() * 0.5;
        assert!((area - std::f64::consts::PI).abs() < 0.01, "area {area}");
    }

    #[test]
    fn open_contour_reaches_border() {
        let grid = ScalarGrid::from_fn(0.0, 0.0, 0.1, 0.1, 11, 11, |z| z.re);
        let contours = extract_level(&grid, 0.55);
        assert_eq!(contours.len(), 1);
        assert!(!contours[0].closed);
        for p in &contours[0].points {
            assert!((p.re - 0.55).abs() < 1e-9);
        }
    }
}
