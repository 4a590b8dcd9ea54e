//! Simple polygons in the complex plane: membership, boundary geometry,
//! arclength parametrization, inward offsets, hulls, and simplification.
//!
//! Vertices are stored counterclockwise; the boundary counts as inside for
//! membership tests.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contour::{extract_level, ScalarGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolygonError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon boundary self-intersects")]
    NotSimple,
    #[error("polygon has (near-)zero area")]
    ZeroArea,
    #[error("inward offset by {0} is degenerate or empty")]
    OffsetDegenerate(f64),
}

/// Nearest-boundary query result.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryHit {
    /// Index of the nearest side (from vertex i to vertex i+1).
    pub side: usize,
    /// Parameter along that side in [0, 1].
    pub t: f64,
    pub point: Complex64,
    pub dist: f64,
    /// Arclength of the nearest point from vertex 0.
    pub arclen: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Polygon {
    vertices: Vec<Complex64>,
}

fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

pub fn seg_nearest(a: Complex64, b: Complex64, z: Complex64) -> (f64, Complex64) {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 < 1e-300 {
        return (0.0, a);
    }
    let t = (((z - a).re * d.re + (z - a).im * d.im) / len2).clamp(0.0, 1.0);
    (t, a + d * t)
}

pub fn seg_point_dist(a: Complex64, b: Complex64, z: Complex64) -> f64 {
    (z - seg_nearest(a, b, z).1).norm()
}

pub fn seg_seg_dist(a1: Complex64, b1: Complex64, a2: Complex64, b2: Complex64) -> f64 {
    if segments_intersect(a1, b1, a2, b2) {
        return 0.0;
    }
    seg_point_dist(a1, b1, a2)
        .min(seg_point_dist(a1, b1, b2))
        .min(seg_point_dist(a2, b2, a1))
        .min(seg_point_dist(a2, b2, b1))
}

/// Closed-segment intersection test (shared endpoints count).
pub fn segments_intersect(a1: Complex64, b1: Complex64, a2: Complex64, b2: Complex64) -> bool {
    let d1 = cross(a2, b2, a1);
    let d2 = cross(a2, b2, b1);
    let d3 = cross(a1, b1, a2);
    let d4 = cross(a1, b1, b2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: Complex64, a: Complex64, b: Complex64, d: f64| -> bool {
        d == 0.0
            && p.re >= a.re.min(b.re)
            && p.re <= a.re.max(b.re)
            && p.im >= a.im.min(b.im)
            && p.im <= a.im.max(b.im)
    };
    on(a1, a2, b2, d1) || on(b1, a2, b2, d2) || on(a2, a1, b1, d3) || on(b2, a1, b1, d4)
}

/// Perpendicular-deviation polyline simplification (open chain).
pub fn douglas_peucker(points: &[Complex64], eps: f64) -> Vec<Complex64> {
    if points.len() <= 2 {
        return points.to_vec();
    }
    let (mut imax, mut dmax) = (0usize, -1.0f64);
    let (a, b) = (points[0], points[points.len() - 1]);
    for (i, &p) in points.iter().enumerate().skip(1).take(points.len() - 2) {
        let d = seg_point_dist(a, b, p);
        if d > dmax {
            dmax = d;
            imax = i;
        }
    }
    if dmax <= eps {
        return vec![a, b];
    }
    let mut left = douglas_peucker(&points[..=imax], eps);
    let right = douglas_peucker(&points[imax..], eps);
    left.pop();
    left.extend(right);
    left
}

/// Monotone-chain convex hull, counterclockwise without repeated endpoint.
pub fn convex_hull(points: &[Complex64]) -> Vec<Complex64> {
    let mut pts: Vec<Complex64> = points.to_vec();
    pts.sort_by(|p, q| {
        p.re.partial_cmp(&q.re)
            .unwrap()
            .then(p.im.partial_cmp(&q.im).unwrap())
    });
    pts.dedup_by(|a, b| (*a - *b).norm() < 1e-14);
    let n = pts.len();
    if n < 3 {
        return pts;
    }
    let mut hull: Vec<Complex64> = Vec::with_capacity(2 * n);
    for &p in pts.iter().chain(pts.iter().rev().skip(1)) {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

impl Polygon {
    /// Validate and store; clockwise input is reversed to counterclockwise.
    pub fn new(mut vertices: Vec<Complex64>) -> Result<Self, PolygonError> {
        if vertices.len() < 3 {
            return Err(PolygonError::TooFewVertices(vertices.len()));
        }
        let area2: f64 = signed_area2(&vertices);
        let scale: f64 = vertices.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-30);
        if area2.abs() < 1e-20 * scale * scale {
            return Err(PolygonError::ZeroArea);
        }
        if area2 < 0.0 {
            vertices.reverse();
        }
        let p = Polygon { vertices };
        if !p.is_simple() {
            return Err(PolygonError::NotSimple);
        }
        Ok(p)
    }

    /// Axis-aligned square, counterclockwise.
    pub fn square(center: Complex64, side: f64) -> Polygon {
        let h = side / 2.0;
        Polygon {
            vertices: vec![
                center + Complex64::new(-h, -h),
                center + Complex64::new(h, -h),
                center + Complex64::new(h, h),
                center + Complex64::new(-h, h),
            ],
        }
    }

    /// Regular n-gon with given circumradius; first vertex on the +x axis.
    pub fn regular(n: usize, circumradius: f64, center: Complex64) -> Polygon {
        let vertices = (0..n)
            .map(|k| {
                let th = std::f64::consts::TAU * k as f64 / n as f64;
                center + Complex64::from_polar(circumradius, th)
            })
            .collect();
        Polygon { vertices }
    }

    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    pub fn num_sides(&self) -> usize {
        self.vertices.len()
    }

    pub fn side(&self, i: usize) -> (Complex64, Complex64) {
        let n = self.vertices.len();
        (self.vertices[i % n], self.vertices[(i + 1) % n])
    }

    pub fn sides(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        (0..self.vertices.len()).map(move |i| self.side(i))
    }

    pub fn area(&self) -> f64 {
        signed_area2(&self.vertices) * 0.5
    }

    pub fn perimeter(&self) -> f64 {
        self.sides().map(|(a, b)| (b - a).norm()).sum()
    }

    pub fn centroid(&self) -> Complex64 {
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut a2 = 0.0;
        for (p, q) in self.sides() {
            let w = p.re * q.im - q.re * p.im;
            cx += (p.re + q.re) * w;
            cy += (p.im + q.im) * w;
            a2 += w;
        }
        Complex64::new(cx / (3.0 * a2), cy / (3.0 * a2))
    }

    pub fn bbox(&self) -> (Complex64, Complex64) {
        let mut lo = Complex64::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo.re = lo.re.min(v.re);
            lo.im = lo.im.min(v.im);
            hi.re = hi.re.max(v.re);
            hi.im = hi.im.max(v.im);
        }
        (lo, hi)
    }

    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            cross(
                self.vertices[i],
                self.vertices[(i + 1) % n],
                self.vertices[(i + 2) % n],
            ) > 0.0
        })
    }

    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            let (a1, b1) = self.side(i);
            if (b1 - a1).norm() < 1e-15 {
                return false;
            }
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                let (a2, b2) = self.side(j);
                if segments_intersect(a1, b1, a2, b2) {
                    return false;
                }
            }
        }
        true
    }

    pub fn winding(&self, z: Complex64) -> i32 {
        let mut wn = 0i32;
        for (a, b) in self.sides() {
            if a.im <= z.im {
                if b.im > z.im && cross(a, b, z) > 0.0 {
                    wn += 1;
                }
            } else if b.im <= z.im && cross(a, b, z) < 0.0 {
                wn -= 1;
            }
        }
        wn
    }

    /// Membership with the boundary counting as inside.
    pub fn contains(&self, z: Complex64) -> bool {
        let scale = {
            let (lo, hi) = self.bbox();
            (hi - lo).norm().max(1e-30)
        };
        if self.dist_to_boundary(z) <= 1e-12 * scale {
            return true;
        }
        self.winding(z) != 0
    }

    /// Strict membership with a positive clearance from the boundary.
    pub fn contains_with_margin(&self, z: Complex64, margin: f64) -> bool {
        self.winding(z) != 0 && self.dist_to_boundary(z) >= margin
    }

    pub fn dist_to_boundary(&self, z: Complex64) -> f64 {
        self.sides()
            .map(|(a, b)| seg_point_dist(a, b, z))
            .fold(f64::INFINITY, f64::min)
    }

    /// Signed distance to the boundary: positive inside, negative outside.
    pub fn depth(&self, z: Complex64) -> f64 {
        let d = self.dist_to_boundary(z);
        if self.winding(z) != 0 {
            d
        } else {
            -d
        }
    }

    pub fn nearest_boundary(&self, z: Complex64) -> BoundaryHit {
        let mut best = BoundaryHit {
            side: 0,
            t: 0.0,
            point: self.vertices[0],
            dist: f64::INFINITY,
            arclen: 0.0,
        };
        let mut arc = 0.0;
        for i in 0..self.vertices.len() {
            let (a, b) = self.side(i);
            let len = (b - a).norm();
            let (t, p) = seg_nearest(a, b, z);
            let d = (z - p).norm();
            if d < best.dist {
                best = BoundaryHit {
                    side: i,
                    t,
                    point: p,
                    dist: d,
                    arclen: arc + t * len,
                };
            }
            arc += len;
        }
        best
    }

    pub fn point_at_arclength(&self, s: f64) -> Complex64 {
        let total = self.perimeter();
        let mut s = s.rem_euclid(total);
        for (a, b) in self.sides() {
            let len = (b - a).norm();
            if s <= len {
                return a + (b - a) * (s / len);
            }
            s -= len;
        }
        self.vertices[0]
    }

    /// Arclength of vertex i measured from vertex 0.
    pub fn vertex_arclength(&self, i: usize) -> f64 {
        self.sides()
            .take(i)
            .map(|(a, b)| (b - a).norm())
            .sum()
    }

    /// Max pairwise vertex distance (exact for convex polygons).
    pub fn diameter(&self) -> f64 {
        let hull = convex_hull(&self.vertices);
        let mut d = 0.0f64;
        for i in 0..hull.len() {
            for j in (i + 1)..hull.len() {
                d = d.max((hull[i] - hull[j]).norm());
            }
        }
        d
    }

    pub fn hull(&self) -> Polygon {
        Polygon {
            vertices: convex_hull(&self.vertices),
        }
    }

    pub fn translate(&self, w: Complex64) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(|v| v + w).collect(),
        }
    }

    pub fn scale_about(&self, center: Complex64, s: f64) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(|v| center + (v - center) * s).collect(),
        }
    }

    /// Inward parallel offset by `xi`. Convex polygons are offset exactly by
    /// half-plane intersection (sides translate inward, short sides may
    /// vanish). Non-convex polygons fall back to a sampled distance level
    /// set; reflex corners are polygonized arcs there.
    pub fn inward_offset(&self, xi: f64) -> Result<Polygon, PolygonError> {
        assert!(xi >= 0.0, "offset must be nonnegative");
        if xi == 0.0 {
            return Ok(self.clone());
        }
        if self.is_convex() {
            self.offset_convex(xi)
        } else {
            self.offset_levelset(xi)
        }
    }

    fn offset_convex(&self, xi: f64) -> Result<Polygon, PolygonError> {
        // start from the bounding box, clip by each inward-shifted side
        let (lo, hi) = self.bbox();
        let pad = (hi - lo).norm() * 0.1 + 1.0;
        let mut poly = vec![
            Complex64::new(lo.re - pad, lo.im - pad),
            Complex64::new(hi.re + pad, lo.im - pad),
            Complex64::new(hi.re + pad, hi.im + pad),
            Complex64::new(lo.re - pad, hi.im + pad),
        ];
        for (a, b) in self.sides() {
            let d = b - a;
            let n = Complex64::new(-d.im, d.re) / d.norm(); // inward for ccw
            let a2 = a + n * xi;
            let b2 = b + n * xi;
            poly = clip_half_plane(&poly, a2, b2);
            if poly.len() < 3 {
                return Err(PolygonError::OffsetDegenerate(xi));
            }
        }
        // drop collapsed vertices
        let mut dedup: Vec<Complex64> = Vec::with_capacity(poly.len());
        let scale = self.perimeter().max(1.0);
        for v in poly {
            if dedup.last().map_or(true, |l| (v - l).norm() > 1e-12 * scale) {
                dedup.push(v);
            }
        }
        if dedup.len() >= 2 && (dedup[0] - dedup[dedup.len() - 1]).norm() <= 1e-12 * scale {
            dedup.pop();
        }
        if dedup.len() < 3 || signed_area2(&dedup).abs() < 1e-18 * scale * scale {
            return Err(PolygonError::OffsetDegenerate(xi));
        }
        Polygon::new(dedup).map_err(|_| PolygonError::OffsetDegenerate(xi))
    }

    fn offset_levelset(&self, xi: f64) -> Result<Polygon, PolygonError> {
        let (lo, hi) = self.bbox();
        let span = (hi - lo).norm();
        let spacing = (span / 500.0).min(xi / 6.0).max(span * 1e-5);
        let nx = ((hi.re - lo.re) / spacing).ceil() as usize + 5;
        let ny = ((hi.im - lo.im) / spacing).ceil() as usize + 5;
        let x0 = lo.re - 2.0 * spacing;
        let y0 = lo.im - 2.0 * spacing;
        let grid = ScalarGrid::from_fn(x0, y0, spacing, spacing, nx, ny, |z| self.depth(z));
        // deepest grid point anchors the surviving component
        let mut anchor = Complex64::new(0.0, 0.0);
        let mut best = f64::NEG_INFINITY;
        for j in 0..ny {
            for i in 0..nx {
                if grid.at(i, j) > best {
                    best = grid.at(i, j);
                    anchor = grid.point(i, j);
                }
            }
        }
        if best <= xi {
            return Err(PolygonError::OffsetDegenerate(xi));
        }
        let loops = extract_level(&grid, xi);
        for c in loops.iter().filter(|c| c.closed && c.points.len() >= 3) {
            let cand = Polygon {
                vertices: c.points.clone(),
            };
            if cand.winding(anchor) != 0 {
                let simplified = {
                    let mut pts = douglas_peucker_closed(&c.points, 0.25 * spacing);
                    if signed_area2(&pts) < 0.0 {
                        pts.reverse();
                    }
                    pts
                };
                return Polygon::new(simplified).map_err(|_| PolygonError::OffsetDegenerate(xi));
            }
        }
        Err(PolygonError::OffsetDegenerate(xi))
    }
}

fn signed_area2(vertices: &[Complex64]) -> f64 {
    let n = vertices.len();
    let mut a = 0.0;
    for i in 0..n {
        let p = vertices[i];
        let q = vertices[(i + 1) % n];
        a += p.re * q.im - q.re * p.im;
    }
    a
}

/// Keep the part of `poly` on the left of directed line a→b (Sutherland-Hodgman).
fn clip_half_plane(poly: &[Complex64], a: Complex64, b: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    let n = poly.len();
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let dp = cross(a, b, p);
        let dq = cross(a, b, q);
        if dp >= 0.0 {
            out.push(p);
        }
        if (dp > 0.0 && dq < 0.0) || (dp < 0.0 && dq > 0.0) {
            let t = dp / (dp - dq);
            out.push(p + (q - p) * t);
        }
    }
    out
}

/// Closed-loop simplification: split at the two mutually farthest vertices.
pub fn douglas_peucker_closed(points: &[Complex64], eps: f64) -> Vec<Complex64> {
    if points.len() <= 4 {
        return points.to_vec();
    }
    let mut far = 1usize;
    let mut dmax = 0.0;
    for (i, &p) in points.iter().enumerate().skip(1) {
        let d = (p - points[0]).norm();
        if d > dmax {
            dmax = d;
            far = i;
        }
    }
    let mut first = douglas_peucker(&points[..=far], eps);
    let mut second: Vec<Complex64> = points[far..].to_vec();
    second.push(points[0]);
    let second = douglas_peucker(&second, eps);
    first.pop();
    let mut out = first;
    out.extend_from_slice(&second[..second.len() - 1]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn square_basics() {
        let p = Polygon::square(c(0.0, 0.0), 1.0);
        assert_eq!(p.num_sides(), 4);
        assert!((p.area() - 1.0).abs() < 1e-15);
        assert!((p.perimeter() - 4.0).abs() < 1e-15);
        assert!(p.is_convex());
        assert!(p.contains(c(0.0, 0.0)));
        assert!(p.contains(c(0.5, 0.0)), "boundary counts as inside");
        assert!(!p.contains(c(0.51, 0.0)));
        assert!((p.depth(c(0.1, 0.2)) - 0.3).abs() < 1e-15);
        assert!((p.depth(c(0.7, 0.0)) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn orientation_normalized() {
        let p = Polygon::new(vec![c(0.0, 0.0), c(0.0, 1.0), c(1.0, 1.0), c(1.0, 0.0)]).unwrap();
        assert!(p.area() > 0.0);
    }

    #[test]
    fn rejects_bowtie() {
        // symmetric bowtie nets zero area
        let r = Polygon::new(vec![c(0.0, 0.0), c(1.0, 1.0), c(1.0, 0.0), c(0.0, 1.0)]);
        assert_eq!(r, Err(PolygonError::ZeroArea));
        // asymmetric bowtie has area but crosses itself
        let r = Polygon::new(vec![c(0.0, 0.0), c(2.0, 2.0), c(3.0, 0.0), c(0.0, 1.0)]);
        assert_eq!(r, Err(PolygonError::NotSimple));
    }

    #[test]
    fn convex_offset_square() {
        let p = Polygon::square(c(0.0, 0.0), 1.0);
        let q = p.inward_offset(0.1).unwrap();
        assert_eq!(q.num_sides(), 4);
        assert!((q.area() - 0.64).abs() < 1e-12);
        for v in q.vertices() {
            assert!((p.depth(*v) - 0.1).abs() < 1e-12);
        }
        // past the apothem the offset is empty
        assert!(matches!(p.inward_offset(0.5), Err(PolygonError::OffsetDegenerate(_))));
    }

    #[test]
    fn convex_offset_hexagon() {
        // regular hexagon, side 1: apothem √3/2; offset by 0.1 stays regular
        let p = Polygon::regular(6, 1.0, c(0.0, 0.0));
        let q = p.inward_offset(0.1).unwrap();
        assert_eq!(q.num_sides(), 6);
        let apothem = 3f64.sqrt() / 2.0;
        let new_side = (apothem - 0.1) / apothem;
        for v in q.vertices() {
            assert!((v.norm() - new_side).abs() < 1e-12, "vertex radius {}", v.norm());
        }
        let expect_side = new_side;
        let (a, b) = q.side(0);
        assert!(((b - a).norm() - expect_side).abs() < 1e-12);
    }

    #[test]
    fn offset_nesting() {
        let p = Polygon::regular(5, 2.0, c(0.3, -0.2));
        let q1 = p.inward_offset(0.2).unwrap();
        let q2 = p.inward_offset(0.5).unwrap();
        for v in q2.vertices() {
            assert!(q1.contains(*v));
            assert!(q1.dist_to_boundary(*v) > 0.29);
        }
    }

    #[test]
    fn nonconvex_offset_levelset() {
        // L-shaped polygon
        let p = Polygon::new(vec![
            c(0.0, 0.0),
            c(2.0, 0.0),
            c(2.0, 0.8),
            c(0.8, 0.8),
            c(0.8, 2.0),
            c(0.0, 2.0),
        ])
        .unwrap();
        assert!(!p.is_convex());
        let q = p.inward_offset(0.2).unwrap();
        assert!(q.area() > 0.1);
        for v in q.vertices() {
            let d = p.depth(*v);
            assert!((d - 0.2).abs() < 0.02, "depth {d}");
        }
    }

    #[test]
    fn nearest_boundary_and_arclength() {
        let p = Polygon::square(c(0.0, 0.0), 1.0);
        let hit = p.nearest_boundary(c(0.2, -0.9));
        assert_eq!(hit.side, 0);
        assert!((hit.point - c(0.2, -0.5)).norm() < 1e-12);
        assert!((hit.dist - 0.4).abs() < 1e-12);
        assert!((hit.arclen - 0.7).abs() < 1e-12);
        let back = p.point_at_arclength(hit.arclen);
        assert!((back - hit.point).norm() < 1e-12);
    }

    #[test]
    fn diameter_and_hull() {
        let p = Polygon::square(c(0.0, 0.0), 1.0);
        assert!((p.diameter() - 2f64.sqrt()).abs() < 1e-12);
        let hull = convex_hull(&[c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.2), c(0.5, 1.0)]);
        assert_eq!(hull.len(), 3);
    }

    #[test]
    fn simplification_preserves_shape() {
        let n = 400;
        let noisy: Vec<Complex64> = (0..n)
            .map(|k| {
                let th = std::f64::consts::TAU * k as f64 / n as f64;
                Complex64::from_polar(1.0 + 1e-4 * ((7.0 * th).sin()), th)
            })
            .collect();
        let slim = douglas_peucker_closed(&noisy, 1e-3);
        assert!(slim.len() < 200, "kept {} points", slim.len());
        let p = Polygon::new(slim).unwrap();
        assert!((p.area() - std::f64::consts::PI).abs() < 0.01);
    }
}
