//! Geodesic distance under conformal metrics λ²|dz|² on polygonal domains.
//!
//! A [`MetricField`] samples λ on a uniform grid restricted to the domain;
//! distances are shortest paths on the 8-connected grid graph with trapezoid
//! edge weights, relaxed by a deterministic Dijkstra with lexicographic tie
//! breaking. [`extract_q`] traces a mid-band level set of a distance field
//! and returns it as a simple (preferably convex) polygon.
//!
//! For labyrinth crossing fields (λ = c off the comb region, c·N⁴ on it) a
//! uniform grid fine enough to resolve the 1/(4N³) gaps is hopeless beyond
//! small N, so [`crossing_distance`] builds a locally refined graph instead:
//! node columns follow the walls with arc spacing down to 1/(8N³) beside each
//! wall, and radial edge weights are integrated in closed form against the
//! piecewise-constant field.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write as IoWrite;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::contour::{extract_level, ScalarGrid};
use crate::labyrinth::Labyrinth;
use crate::polygon::{douglas_peucker_closed, seg_point_dist, Polygon};

type C = Complex64;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("metric field grid has no nodes inside the domain")]
    EmptyGrid,
    #[error("source set does not meet the domain grid")]
    EmptySource,
    #[error("path leaves the metric field domain near ({0:.6}, {1:.6})")]
    PathLeavesDomain(f64, f64),
    #[error("level set {level} does not separate the inner polygon from the outer boundary")]
    LevelSetNotSeparating { level: f64 },
    #[error("extracted polygon leaves the distance band at vertex {k}: dist {dist:.6} outside ({lo:.6}, {hi:.6})")]
    QOutsideK { k: usize, dist: f64, lo: f64, hi: f64 },
}

/// A conformal factor λ ≥ 0 sampled on a uniform grid over a polygon.
///
/// The grid origin is snapped to multiples of the spacing so that axis-aligned
/// features land on grid lines; nodes outside the domain carry no value.
pub struct MetricField {
    domain: Polygon,
    x0: f64,
    y0: f64,
    h: f64,
    nx: usize,
    ny: usize,
    lam: Vec<f64>,
    inside: Vec<bool>,
}

/// A source or target set for distance queries, resolved to grid nodes.
pub enum Source<'a> {
    /// Individual points, each snapped to the nearest in-domain node.
    Points(&'a [C]),
    /// Nodes within 3/4 of a grid step of any of the segments.
    Segments(&'a [(C, C)]),
    /// Nodes hugging the boundary of a polygon.
    Boundary(&'a Polygon),
    /// All in-domain nodes satisfying a predicate.
    Pred(&'a dyn Fn(C) -> bool),
}

/// Per-node geodesic distances from a source set.
pub struct DistanceField {
    x0: f64,
    y0: f64,
    h: f64,
    nx: usize,
    ny: usize,
    inside: Vec<bool>,
    values: Vec<f64>,
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // never NaN; ties broken by node index so relaxation order is fixed
        self.dist
            .total_cmp(&other.dist)
            .then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl MetricField {
    pub fn new(
        domain: &Polygon,
        spacing: f64,
        f: impl Fn(C) -> f64,
    ) -> Result<MetricField, MetricError> {
        assert!(spacing > 0.0, "grid spacing must be positive");
        let (lo, hi) = domain.bbox();
        let x0 = (lo.re / spacing - 2.0).floor() * spacing;
        let y0 = (lo.im / spacing - 2.0).floor() * spacing;
        let nx = ((hi.re - x0) / spacing).ceil() as usize + 3;
        let ny = ((hi.im - y0) / spacing).ceil() as usize + 3;
        let mut lam = vec![f64::NAN; nx * ny];
        let mut inside = vec![false; nx * ny];
        let mut any = false;
        for j in 0..ny {
            for i in 0..nx {
                let z = C::new(x0 + spacing * i as f64, y0 + spacing * j as f64);
                if domain.contains(z) {
                    let v = f(z);
                    assert!(v >= 0.0, "conformal factor must be nonnegative");
                    lam[j * nx + i] = v;
                    inside[j * nx + i] = true;
                    any = true;
                }
            }
        }
        if !any {
            return Err(MetricError::EmptyGrid);
        }
        Ok(MetricField {
            domain: domain.clone(),
            x0,
            y0,
            h: spacing,
            nx,
            ny,
            lam,
            inside,
        })
    }

    pub fn uniform(domain: &Polygon, spacing: f64, value: f64) -> Result<MetricField, MetricError> {
        MetricField::new(domain, spacing, |_| value)
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn domain(&self) -> &Polygon {
        &self.domain
    }

    pub fn node_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    fn node_point(&self, i: usize, j: usize) -> C {
        C::new(self.x0 + self.h * i as f64, self.y0 + self.h * j as f64)
    }

    /// Bilinear λ at an arbitrary point; outside corners borrow the average of
    /// the in-domain corners of the cell. `None` when the whole cell is out.
    fn lam_at(&self, z: C) -> Option<f64> {
        let fx = (z.re - self.x0) / self.h;
        let fy = (z.im - self.y0) / self.h;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let i = (fx.floor() as usize).min(self.nx.saturating_sub(2));
        let j = (fy.floor() as usize).min(self.ny.saturating_sub(2));
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let idx = [
            j * self.nx + i,
            j * self.nx + i + 1,
            (j + 1) * self.nx + i,
            (j + 1) * self.nx + i + 1,
        ];
        let mut vals = [0.0f64; 4];
        let mut have = [false; 4];
        let mut sum = 0.0;
        let mut cnt = 0usize;
        for (k, &id) in idx.iter().enumerate() {
            if self.inside[id] {
                vals[k] = self.lam[id];
                have[k] = true;
                sum += vals[k];
                cnt += 1;
            }
        }
        if cnt == 0 {
            return None;
        }
        let fill = sum / cnt as f64;
        for k in 0..4 {
            if !have[k] {
                vals[k] = fill;
            }
        }
        let top = vals[0] * (1.0 - tx) + vals[1] * tx;
        let bot = vals[2] * (1.0 - tx) + vals[3] * tx;
        Some(top * (1.0 - ty) + bot * ty)
    }

    /// Length of a polyline under the metric: ∫ λ |dz| by composite Simpson on
    /// the bilinear interpolant, panel count doubled until stable to 1e-6
    /// relative.
    pub fn path_length(&self, gamma: &[C]) -> Result<f64, MetricError> {
        let mut total = 0.0;
        for seg in gamma.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            if (b - a).norm() == 0.0 {
                continue;
            }
            let eval = |t: f64| -> Result<f64, MetricError> {
                let z = a + (b - a) * t;
                if !self.domain.contains(z) {
                    return Err(MetricError::PathLeavesDomain(z.re, z.im));
                }
                self.lam_at(z).ok_or(MetricError::PathLeavesDomain(z.re, z.im))
            };
            let simpson = |n: usize| -> Result<f64, MetricError> {
                let mut s = eval(0.0)? + eval(1.0)?;
                for k in 1..n {
                    let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                    s += w * eval(k as f64 / n as f64)?;
                }
                Ok(s / (3.0 * n as f64) * (b - a).norm())
            };
            let mut n = 8usize;
            let mut prev = simpson(n)?;
            loop {
                n *= 2;
                let cur = simpson(n)?;
                if (cur - prev).abs() <= 1e-6 * cur.abs().max(1e-12) || n >= 1 << 20 {
                    prev = cur;
                    break;
                }
                prev = cur;
            }
            total += prev;
        }
        Ok(total)
    }

    /// Resolve a source description to grid node indices (sorted, deduped).
    fn source_nodes(&self, src: &Source) -> Vec<usize> {
        let mut nodes = Vec::new();
        match src {
            Source::Points(pts) => {
                for &p in pts.iter() {
                    let ci = ((p.re - self.x0) / self.h).round() as isize;
                    let cj = ((p.im - self.y0) / self.h).round() as isize;
                    'snap: for r in 0..=2isize {
                        for dj in -r..=r {
                            for di in -r..=r {
                                if di.abs().max(dj.abs()) != r {
                                    continue;
                                }
                                let (i, j) = (ci + di, cj + dj);
                                if i >= 0
                                    && j >= 0
                                    && (i as usize) < self.nx
                                    && (j as usize) < self.ny
                                    && self.inside[j as usize * self.nx + i as usize]
                                {
                                    nodes.push(j as usize * self.nx + i as usize);
                                    break 'snap;
                                }
                            }
                        }
                    }
                }
            }
            Source::Segments(segs) => {
                for &(a, b) in segs.iter() {
                    let pad = 0.8 * self.h;
                    let xlo = (((a.re.min(b.re) - pad) - self.x0) / self.h).floor().max(0.0) as usize;
                    let xhi = ((((a.re.max(b.re) + pad) - self.x0) / self.h).ceil() as usize)
                        .min(self.nx - 1);
                    let ylo = (((a.im.min(b.im) - pad) - self.y0) / self.h).floor().max(0.0) as usize;
                    let yhi = ((((a.im.max(b.im) + pad) - self.y0) / self.h).ceil() as usize)
                        .min(self.ny - 1);
                    for j in ylo..=yhi {
                        for i in xlo..=xhi {
                            if self.inside[j * self.nx + i]
                                && seg_point_dist(a, b, self.node_point(i, j)) <= 0.75 * self.h
                            {
                                nodes.push(j * self.nx + i);
                            }
                        }
                    }
                }
            }
            Source::Boundary(poly) => {
                let segs: Vec<(C, C)> = poly.sides().collect();
                return self.source_nodes(&Source::Segments(&segs));
            }
            Source::Pred(pred) => {
                for j in 0..self.ny {
                    for i in 0..self.nx {
                        if self.inside[j * self.nx + i] && pred(self.node_point(i, j)) {
                            nodes.push(j * self.nx + i);
                        }
                    }
                }
            }
        }
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    /// Shortest-path distances from a source set on the 8-connected grid
    /// graph; edge weight is the trapezoid of λ along the edge. Diagonal
    /// steps are admitted only when both flanking axis neighbours are in the
    /// domain, so paths never cut a boundary corner.
    pub fn distance_field(&self, src: &Source) -> Result<DistanceField, MetricError> {
        let sources = self.source_nodes(src);
        if sources.is_empty() {
            return Err(MetricError::EmptySource);
        }
        let n = self.nx * self.ny;
        let mut dist = vec![f64::INFINITY; n];
        let mut heap: BinaryHeap<std::cmp::Reverse<HeapEntry>> = BinaryHeap::new();
        for &s in &sources {
            if dist[s] != 0.0 {
                dist[s] = 0.0;
                heap.push(std::cmp::Reverse(HeapEntry { dist: 0.0, node: s as u32 }));
            }
        }
        let sqrt2 = std::f64::consts::SQRT_2;
        while let Some(std::cmp::Reverse(HeapEntry { dist: d, node })) = heap.pop() {
            let u = node as usize;
            if d > dist[u] {
                continue;
            }
            let (i, j) = (u % self.nx, u / self.nx);
            let lu = self.lam[u];
            let mut relax = |ii: isize, jj: isize, step: f64, heap: &mut BinaryHeap<_>| {
                if ii < 0 || jj < 0 || ii as usize >= self.nx || jj as usize >= self.ny {
                    return;
                }
                let v = jj as usize * self.nx + ii as usize;
                if !self.inside[v] {
                    return;
                }
                let nd = d + 0.5 * (lu + self.lam[v]) * step * self.h;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(std::cmp::Reverse(HeapEntry { dist: nd, node: v as u32 }));
                }
            };
            let (si, sj) = (i as isize, j as isize);
            relax(si + 1, sj, 1.0, &mut heap);
            relax(si - 1, sj, 1.0, &mut heap);
            relax(si, sj + 1, 1.0, &mut heap);
            relax(si, sj - 1, 1.0, &mut heap);
            let ok = |ii: isize, jj: isize| -> bool {
                ii >= 0
                    && jj >= 0
                    && (ii as usize) < self.nx
                    && (jj as usize) < self.ny
                    && self.inside[jj as usize * self.nx + ii as usize]
            };
            for (di, dj) in [(1isize, 1isize), (1, -1), (-1, 1), (-1, -1)] {
                if ok(si + di, sj) && ok(si, sj + dj) {
                    relax(si + di, sj + dj, sqrt2, &mut heap);
                }
            }
        }
        Ok(DistanceField {
            x0: self.x0,
            y0: self.y0,
            h: self.h,
            nx: self.nx,
            ny: self.ny,
            inside: self.inside.clone(),
            values: dist,
        })
    }

    /// inf over u ∈ U, v ∈ V of the geodesic distance between grid nodes.
    pub fn dist_sets(&self, u: &Source, v: &Source) -> Result<f64, MetricError> {
        let df = self.distance_field(u)?;
        let targets = self.source_nodes(v);
        if targets.is_empty() {
            return Err(MetricError::EmptySource);
        }
        Ok(targets
            .iter()
            .map(|&t| df.values[t])
            .fold(f64::INFINITY, f64::min))
    }
}

impl DistanceField {
    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Bilinear distance at a point; `None` when no corner of the containing
    /// cell carries a finite value.
    pub fn at(&self, z: C) -> Option<f64> {
        let fx = (z.re - self.x0) / self.h;
        let fy = (z.im - self.y0) / self.h;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let i = (fx.floor() as usize).min(self.nx.saturating_sub(2));
        let j = (fy.floor() as usize).min(self.ny.saturating_sub(2));
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let idx = [
            j * self.nx + i,
            j * self.nx + i + 1,
            (j + 1) * self.nx + i,
            (j + 1) * self.nx + i + 1,
        ];
        let mut vals = [0.0f64; 4];
        let mut sum = 0.0;
        let mut cnt = 0;
        for (k, &id) in idx.iter().enumerate() {
            if self.inside[id] && self.values[id].is_finite() {
                vals[k] = self.values[id];
                sum += vals[k];
                cnt += 1;
            } else {
                vals[k] = f64::NAN;
            }
        }
        if cnt == 0 {
            return None;
        }
        let fill = sum / cnt as f64;
        for v in vals.iter_mut() {
            if v.is_nan() {
                *v = fill;
            }
        }
        let top = vals[0] * (1.0 - tx) + vals[1] * tx;
        let bot = vals[2] * (1.0 - tx) + vals[3] * tx;
        Some(top * (1.0 - ty) + bot * ty)
    }

    /// The raw node values as a grid suitable for level-set extraction;
    /// out-of-domain nodes are +∞ so marching squares skips their cells.
    pub fn to_scalar_grid(&self) -> ScalarGrid {
        ScalarGrid {
            x0: self.x0,
            y0: self.y0,
            dx: self.h,
            dy: self.h,
            nx: self.nx,
            ny: self.ny,
            values: self
                .values
                .iter()
                .zip(&self.inside)
                .map(|(&v, &ins)| if ins { v } else { f64::INFINITY })
                .collect(),
        }
    }

    /// Walk from `z` down the distance field to its source set along grid
    /// nodes (every non-source node has a strictly closer neighbour — its
    /// shortest-path predecessor — so the walk realizes a geodesic of the
    /// graph metric). Returned points run source → z.
    pub fn trace_to_source(&self, z: C) -> Option<Vec<C>> {
        let fx = ((z.re - self.x0) / self.h).round();
        let fy = ((z.im - self.y0) / self.h).round();
        if fx < 0.0 || fy < 0.0 || fx as usize >= self.nx || fy as usize >= self.ny {
            return None;
        }
        let (mut i, mut j) = (fx as usize, fy as usize);
        // snap to the best finite node in the 3×3 patch around z
        {
            let mut best: Option<(f64, usize, usize)> = None;
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii as usize >= self.nx || jj as usize >= self.ny {
                        continue;
                    }
                    let id = jj as usize * self.nx + ii as usize;
                    if self.inside[id] && self.values[id].is_finite() {
                        let d = self.values[id];
                        if best.is_none_or(|(b, _, _)| d < b) {
                            best = Some((d, ii as usize, jj as usize));
                        }
                    }
                }
            }
            let (_, bi, bj) = best?;
            i = bi;
            j = bj;
        }
        let mut path = vec![C::new(
            self.x0 + self.h * i as f64,
            self.y0 + self.h * j as f64,
        )];
        let mut cur = self.values[j * self.nx + i];
        while cur > 0.0 {
            let mut next: Option<(f64, usize, usize)> = None;
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii as usize >= self.nx || jj as usize >= self.ny {
                        continue;
                    }
                    let id = jj as usize * self.nx + ii as usize;
                    if self.inside[id] && self.values[id] < cur {
                        let d = self.values[id];
                        if next.is_none_or(|(b, _, _)| d < b) {
                            next = Some((d, ii as usize, jj as usize));
                        }
                    }
                }
            }
            let (d, ni, nj) = next?;
            i = ni;
            j = nj;
            cur = d;
            path.push(C::new(
                self.x0 + self.h * i as f64,
                self.y0 + self.h * j as f64,
            ));
        }
        path.reverse();
        Some(path)
    }

    /// Minimum value over in-domain nodes satisfying a predicate.
    pub fn min_where(&self, pred: impl Fn(C) -> bool) -> f64 {
        let mut best = f64::INFINITY;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let id = j * self.nx + i;
                if self.inside[id]
                    && pred(C::new(self.x0 + self.h * i as f64, self.y0 + self.h * j as f64))
                {
                    best = best.min(self.values[id]);
                }
            }
        }
        best
    }

    /// CSV rows `x,y,dist` over in-domain nodes.
    pub fn write_csv<W: IoWrite>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "x,y,dist")?;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let id = j * self.nx + i;
                if self.inside[id] {
                    writeln!(
                        w,
                        "{},{},{}",
                        self.x0 + self.h * i as f64,
                        self.y0 + self.h * j as f64,
                        self.values[id]
                    )?;
                }
            }
        }
        Ok(())
    }
}

fn winding_number(pts: &[C], z: C) -> i32 {
    let mut w = 0i32;
    for k in 0..pts.len() {
        let a = pts[k];
        let b = pts[(k + 1) % pts.len()];
        if a.im <= z.im {
            if b.im > z.im && cross(b - a, z - a) > 0.0 {
                w += 1;
            }
        } else if b.im <= z.im && cross(b - a, z - a) < 0.0 {
            w -= 1;
        }
    }
    w
}

fn cross(a: C, b: C) -> f64 {
    a.re * b.im - a.im * b.re
}

/// Trace the `1.5s` level set of a distance field measured from `peps` and
/// return it as a simple polygon `Q` with `s < dist < 2s` on every vertex and
/// `peps ⊂ Int Q ⊂ Q̄ ⊂ Int outer`. The loop is simplified by Douglas-Peucker
/// at a quarter grid step and replaced by its convex hull whenever the hull
/// still fits in the distance band (convex Q keeps later inward offsets
/// exact).
pub fn extract_q(
    df: &DistanceField,
    s: f64,
    peps: &Polygon,
    outer: &Polygon,
) -> Result<Polygon, MetricError> {
    assert!(s > 0.0, "band half-width must be positive");
    let level = 1.5 * s;
    let grid = df.to_scalar_grid();
    let contours = extract_level(&grid, level);
    let anchor = peps.centroid();
    let mut best: Option<&crate::contour::Contour> = None;
    let mut best_area = f64::INFINITY;
    for c in &contours {
        if !c.closed || c.points.len() < 3 {
            continue;
        }
        if winding_number(&c.points, anchor) == 0 {
            continue;
        }
        // the field also has a level loop inside the inner polygon whenever
        // 1.5s is less than its metric inradius; only loops enclosing the
        // whole inner boundary separate it from the outer one
        if peps
            .vertices()
            .iter()
            .any(|&v| winding_number(&c.points, v) == 0)
        {
            continue;
        }
        let mut area = 0.0;
        for k in 0..c.points.len() {
            let a = c.points[k];
            let b = c.points[(k + 1) % c.points.len()];
            area += cross(a, b);
        }
        let area = area.abs() * 0.5;
        if area < best_area {
            best_area = area;
            best = Some(c);
        }
    }
    let Some(contour) = best else {
        return Err(MetricError::LevelSetNotSeparating { level });
    };

    // simplify; retreat to finer tolerances if simplification pinches the loop
    let mut poly: Option<Polygon> = None;
    for eps in [0.25 * df.h, 0.1 * df.h, 0.02 * df.h, 0.0] {
        let pts = if eps > 0.0 {
            douglas_peucker_closed(&contour.points, eps)
        } else {
            contour.points.clone()
        };
        if pts.len() >= 3 {
            if let Ok(p) = Polygon::new(pts) {
                poly = Some(p);
                break;
            }
        }
    }
    let Some(q_raw) = poly else {
        return Err(MetricError::LevelSetNotSeparating { level });
    };

    let band_ok = |p: &Polygon| -> bool {
        p.vertices().iter().all(|&v| match df.at(v) {
            Some(d) => d > s && d < 2.0 * s,
            None => false,
        }) && p.sides().all(|(a, b)| {
            (1..8).all(|k| {
                let z = a + (b - a) * (k as f64 / 8.0);
                matches!(df.at(z), Some(d) if d > s && d < 2.0 * s)
            })
        })
    };
    let inside_outer = |p: &Polygon| -> bool {
        p.vertices()
            .iter()
            .all(|&v| outer.contains(v) && outer.dist_to_boundary(v) > 0.0)
    };
    let contains_peps = |p: &Polygon| -> bool {
        peps.vertices()
            .iter()
            .all(|&v| p.winding(v) != 0 && p.dist_to_boundary(v) > 0.0)
    };

    let hull = q_raw.hull();
    let q = if band_ok(&hull) && inside_outer(&hull) && contains_peps(&hull) {
        hull
    } else {
        q_raw
    };

    for (k, &v) in q.vertices().iter().enumerate() {
        let d = df.at(v).unwrap_or(f64::INFINITY);
        if !(d > s && d < 2.0 * s) {
            return Err(MetricError::QOutsideK {
                k,
                dist: d,
                lo: s,
                hi: 2.0 * s,
            });
        }
    }
    if !inside_outer(&q) || !contains_peps(&q) {
        return Err(MetricError::LevelSetNotSeparating { level });
    }
    Ok(q)
}

/// Result of a labyrinth crossing-distance computation.
#[derive(Debug, Clone, Serialize)]
pub struct CrossingReport {
    pub n: usize,
    pub c: f64,
    pub zeta0: f64,
    /// Geodesic distance from the outer boundary to the depth-`zeta0` offset.
    pub dist: f64,
    /// dist / (c·N) — the quantity expected to be stable in N.
    pub ratio: f64,
    pub nodes: usize,
    pub edges: usize,
}

/// The synthetic crossing field: λ = c·N⁴ on the comb region Ω, c elsewhere.
pub fn crossing_lambda<'a>(lab: &'a Labyrinth, c: f64) -> impl Fn(C) -> f64 + 'a {
    let n4 = (lab.n() as f64).powi(4);
    move |z: C| {
        if lab.strip_corridor(z).is_some() {
            c * n4
        } else {
            c
        }
    }
}

/// Geodesic distance from the outer boundary to the depth-`zeta0` parallel
/// polygon under the synthetic crossing field, on a graph locally refined
/// around the labyrinth.
///
/// Layout: one node layer per ring (2N²+1 layers); per layer, seven node
/// columns per wall at arc offsets {0, ±1/(8N³), ±1/(4N³), ±1/(2N³)} riding
/// the wall's along-side fraction. Ring edges join arc-adjacent columns (the
/// field is cheap on rings); radial edges join consecutive layers within a
/// column, with the expensive sub-interval of each band crossing resolved in
/// closed form (column/wall arc gaps are affine in depth). A virtual source
/// joins every outer-layer node; a virtual target joins every innermost-layer
/// node at the exact cheap cost of the remaining straight run to depth zeta0.
pub fn crossing_distance(lab: &Labyrinth, c: f64, zeta0: f64) -> CrossingReport {
    assert!(
        zeta0 > lab.collar_depth(),
        "zeta0 must clear the collar (> 2/N)"
    );
    let n = lab.n();
    let n3 = (n * n * n) as f64;
    let n4 = (n as f64).powi(4);
    let sigma = lab.sigma();
    let layers = 2 * n * n + 1;

    // node columns: (side, frac, wall) sorted by outer arc
    struct Col {
        side: usize,
        frac: f64,
        wall: usize,
    }
    let offsets = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
    let mut cols: Vec<Col> = Vec::new();
    for (j, w) in lab.walls().iter().enumerate() {
        let len0 = lab.side_len0(w.side);
        for &o in &offsets {
            let frac = w.frac + o * sigma / len0;
            if frac > 0.0 && frac < 1.0 {
                cols.push(Col {
                    side: w.side,
                    frac,
                    wall: j,
                });
            }
        }
    }
    cols.sort_by(|a, b| {
        lab.side_arc(a.side, a.frac, 0.0)
            .total_cmp(&lab.side_arc(b.side, b.frac, 0.0))
    });
    let m = cols.len();
    let node = |k: usize, col: usize| -> usize { k * m + col };
    let src = layers * m;
    let dst = layers * m + 1;
    let total = layers * m + 2;

    let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); total];
    let mut edges = 0usize;
    let push = |adj: &mut Vec<Vec<(u32, f64)>>, a: usize, b: usize, w: f64| {
        adj[a].push((b as u32, w));
        adj[b].push((a as u32, w));
    };

    // ring edges: cyclic chain per layer, cheap everywhere on a ring
    for k in 0..layers {
        let t = k as f64 / n3;
        let perim = lab.perimeter_at(t);
        for i in 0..m {
            let a = &cols[i];
            let b = &cols[(i + 1) % m];
            let aa = lab.side_arc(a.side, a.frac, t);
            let ab = lab.side_arc(b.side, b.frac, t);
            let darc = (ab - aa).rem_euclid(perim);
            push(&mut adj, node(k, i), node(k, (i + 1) % m), c * darc);
            edges += 1;
        }
    }

    // radial edges: straight constant-fraction runs across one band
    for k in 0..layers - 1 {
        let t0 = k as f64 / n3;
        let t1 = (k + 1) as f64 / n3;
        let w_lo = t0 + sigma;
        let w_hi = t1 - sigma;
        let parity = k % 2;
        for (i, col) in cols.iter().enumerate() {
            let z0 = lab.side_point(col.side, col.frac, t0);
            let z1 = lab.side_point(col.side, col.frac, t1);
            let speed = (z1 - z0).norm() / (t1 - t0);
            // expensive measure in depth units within [w_lo, w_hi]
            let exp_t = if col.wall % 2 == parity {
                // only the column's own wall can shelter it: arc gap is
                // |Δfrac|·len(t), decreasing in t, cheap where < σ
                let w = &lab.walls()[col.wall];
                let dfrac = (col.frac - w.frac).abs();
                if dfrac == 0.0 {
                    0.0
                } else {
                    let gap_lo = dfrac * lab.side_len_at(col.side, w_lo);
                    let gap_hi = dfrac * lab.side_len_at(col.side, w_hi);
                    if gap_lo < sigma && gap_hi < sigma {
                        0.0
                    } else if gap_lo >= sigma && gap_hi >= sigma {
                        w_hi - w_lo
                    } else {
                        // one crossing of gap(t) = σ inside the window
                        let len0 = lab.side_len0(col.side);
                        let shrink =
                            (lab.side_len_at(col.side, 0.0) - lab.side_len_at(col.side, 1.0)).abs();
                        let t_star = (len0 - sigma / dfrac) / shrink;
                        if gap_lo >= sigma {
                            (t_star - w_lo).clamp(0.0, w_hi - w_lo)
                        } else {
                            (w_hi - t_star).clamp(0.0, w_hi - w_lo)
                        }
                    }
                }
            } else {
                // nearest same-parity wall is half a wall spacing away (≫ σ)
                w_hi - w_lo
            };
            let weight = c * speed * ((t1 - t0) + (n4 - 1.0) * exp_t);
            push(&mut adj, node(k, i), node(k + 1, i), weight);
            edges += 1;
        }
    }

    // virtual endpoints
    for i in 0..m {
        push(&mut adj, src, node(0, i), 0.0);
        push(
            &mut adj,
            dst,
            node(layers - 1, i),
            c * (zeta0 - lab.collar_depth()),
        );
        edges += 2;
    }

    // Dijkstra with the same deterministic ordering as the grid solver
    let mut dist = vec![f64::INFINITY; total];
    let mut heap: BinaryHeap<std::cmp::Reverse<HeapEntry>> = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(std::cmp::Reverse(HeapEntry {
        dist: 0.0,
        node: src as u32,
    }));
    while let Some(std::cmp::Reverse(HeapEntry { dist: d, node: u })) = heap.pop() {
        let u = u as usize;
        if d > dist[u] {
            continue;
        }
        if u == dst {
            break;
        }
        for &(v, w) in &adj[u] {
            let v = v as usize;
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(std::cmp::Reverse(HeapEntry {
                    dist: nd,
                    node: v as u32,
                }));
            }
        }
    }

    CrossingReport {
        n,
        c,
        zeta0,
        dist: dist[dst],
        ratio: dist[dst] / (c * n as f64),
        nodes: total,
        edges,
    }
}
