//! Boundary labyrinth on a convex polygon.
//!
//! For a convex domain `P` and an intensity parameter `N`, the collar
//! `P \ P^{2/N}` is sliced by `2N²+1` nested offset rings `G_i = P^{i/N³}`
//! and `2N` straight radial walls at fixed side fractions. Each wall `j`
//! carries a comb `ω_j`: the wall spine plus `N²` teeth — one band per
//! corridor of parity opposite to `j`, spanning the two cells adjacent to
//! the wall and stopping `1/(4N³)` short of the neighbouring walls. The
//! mid-corridor strip band of corridor `c` (thickness `1/(2N³)`, cut at the
//! sheaths of walls with parity `c`) then coincides with the union of the
//! teeth crossing that corridor.
//!
//! All distances quoted by the builder are *measured* on the constructed
//! sets (exact segment arithmetic), not trusted from formulas; `δ` is a
//! third of the worst measured clearance, capped at `1/(8N³)`.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::polygon::{seg_point_dist, seg_seg_dist, Polygon};

type C = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabyrinthError {
    #[error("labyrinth domain must be convex")]
    NotConvex,
    #[error("intensity N must be at least 2, got {0}")]
    BadN(usize),
    #[error("side {side} (length {len:.6}) vanishes before collar depth {depth:.6}")]
    SideVanishes { side: usize, len: f64, depth: f64 },
    #[error("cells too narrow: min cell width {width:.3e} must exceed {need:.3e}")]
    CellsTooNarrow { width: f64, need: f64 },
    #[error("wall {j} does not span the collar transversally")]
    WallDoesNotSpan { j: usize },
}

/// Straight wall segment at a constant fraction of one side, from the outer
/// boundary (depth 0) to the inner ring (depth 2/N).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Wall {
    pub side: usize,
    pub frac: f64,
    pub top: C,
    pub bottom: C,
}

/// Where a point sits inside the labyrinth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    Outside,
    /// Deeper than the collar (inside the innermost ring).
    Core,
    /// Inside a comb tooth of wall `j`, in the given corridor.
    Tooth { wall: usize, corridor: usize },
    /// Within the wall-spine sheath of radius 1/(4N³).
    Sheath { wall: usize },
    /// In the mid-corridor strip band.
    Strip { corridor: usize },
    /// In the collar but clear of every special set.
    CollarFree { corridor: usize },
}

struct SideGeom {
    a: C,
    dir: C,
    len0: f64,
    /// Outward unit normal (kept for clarity in the chart formulas).
    #[allow(dead_code)]
    n_out: C,
    /// Velocity of the left endpoint under inward offsetting: a(t) = a - t·va.
    va: C,
    /// len(t) = len0 - t·shrink.
    shrink: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LabyrinthReport {
    pub n: usize,
    pub wall_count: usize,
    pub ring_count: usize,
    pub teeth_per_wall: usize,
    pub sigma: f64,
    pub delta: f64,
    pub pairwise_gap: f64,
    pub boundary_gap: f64,
    pub collar_depth: f64,
    pub outer_perimeter: f64,
    pub inner_perimeter: f64,
    pub min_cell_width: f64,
}

pub struct Labyrinth {
    n: usize,
    n3: f64,
    outer: Polygon,
    sides: Vec<SideGeom>,
    rings: Vec<Polygon>,
    walls: Vec<Wall>,
    /// teeth[j] lists (corridor index, band polygon) for wall j.
    teeth: Vec<Vec<(usize, Polygon)>>,
    /// Segments of each ω_j bucketed by corridor, for windowed distance scans.
    omega_segs: Vec<Vec<Vec<(C, C)>>>,
    sigma: f64,
    delta: f64,
    pairwise_gap: f64,
    boundary_gap: f64,
    collar: f64,
}

impl Labyrinth {
    pub fn build(outer: &Polygon, n: usize) -> Result<Labyrinth, LabyrinthError> {
        if n < 2 {
            return Err(LabyrinthError::BadN(n));
        }
        if !outer.is_convex() {
            return Err(LabyrinthError::NotConvex);
        }
        let nf = n as f64;
        let n3 = nf.powi(3);
        let collar = 2.0 / nf;
        let sigma = 1.0 / (4.0 * n3);

        let sides = side_geometry(outer);
        for (k, s) in sides.iter().enumerate() {
            if s.len0 - collar * s.shrink < 16.0 * sigma {
                return Err(LabyrinthError::SideVanishes {
                    side: k,
                    len: s.len0 - collar * s.shrink,
                    depth: collar,
                });
            }
        }

        let ring_count = 2 * n * n + 1;
        let mut rings = Vec::with_capacity(ring_count);
        for i in 0..ring_count {
            let t = i as f64 / n3;
            rings.push(ring_polygon(&sides, t));
        }

        let walls = place_walls(&sides, n, collar);
        // transversality: each wall bottom must still be nearest to its own side
        for (j, w) in walls.iter().enumerate() {
            let d = outer.dist_to_boundary(w.bottom);
            if (d - collar).abs() > 1e-9 * (1.0 + collar) {
                return Err(LabyrinthError::WallDoesNotSpan { j });
            }
        }
        // cells must leave room for teeth cut-backs on both flanks
        let mut min_cell = f64::INFINITY;
        let wall_arcs_deep: Vec<f64> = (0..walls.len())
            .map(|j| wall_arc(&sides, &walls[j], collar))
            .collect();
        let perim_deep: f64 = sides.iter().map(|s| s.len0 - collar * s.shrink).sum();
        for j in 0..walls.len() {
            let a = wall_arcs_deep[j];
            let b = wall_arcs_deep[(j + 1) % walls.len()];
            let width = (b - a).rem_euclid(perim_deep);
            min_cell = min_cell.min(width);
        }
        if min_cell < 8.0 * sigma {
            return Err(LabyrinthError::CellsTooNarrow {
                width: min_cell,
                need: 8.0 * sigma,
            });
        }

        let mut lab = Labyrinth {
            n,
            n3,
            outer: outer.clone(),
            sides,
            rings,
            walls,
            teeth: Vec::new(),
            omega_segs: Vec::new(),
            sigma,
            delta: 0.0,
            pairwise_gap: 0.0,
            boundary_gap: 0.0,
            collar,
        };
        lab.build_teeth();
        lab.bucket_segments();
        lab.measure_gaps();
        Ok(lab)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn outer(&self) -> &Polygon {
        &self.outer
    }

    pub fn collar_depth(&self) -> f64 {
        self.collar
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn pairwise_gap(&self) -> f64 {
        self.pairwise_gap
    }

    pub fn boundary_gap(&self) -> f64 {
        self.boundary_gap
    }

    pub fn rings(&self) -> &[Polygon] {
        &self.rings
    }

    pub fn ring(&self, i: usize) -> &Polygon {
        &self.rings[i]
    }

    /// The innermost ring `P^{2/N}` bounding the core.
    pub fn inner(&self) -> &Polygon {
        self.rings.last().unwrap()
    }

    pub fn walls(&self) -> &[Wall] {
        &self.walls
    }

    pub fn num_corridors(&self) -> usize {
        2 * self.n * self.n
    }

    pub fn teeth_of(&self, j: usize) -> &[(usize, Polygon)] {
        &self.teeth[j]
    }

    /// Perimeter of the offset boundary at depth `t`.
    pub fn perimeter_at(&self, t: f64) -> f64 {
        self.sides.iter().map(|s| s.len0 - t * s.shrink).sum()
    }

    /// Point on the depth-`t` ring at arclength `arc` from the ring's anchor
    /// vertex (the offset image of the domain's vertex 0).
    pub fn ring_point(&self, t: f64, arc: f64) -> C {
        let perim = self.perimeter_at(t);
        let mut rem = arc.rem_euclid(perim);
        for s in &self.sides {
            let len = s.len0 - t * s.shrink;
            if rem <= len {
                return s.a - s.va * t + s.dir * rem;
            }
            rem -= len;
        }
        let s = &self.sides[0];
        s.a - s.va * t
    }

    /// Arclength position of wall `j` on the depth-`t` ring.
    pub fn wall_arc(&self, j: usize, t: f64) -> f64 {
        wall_arc(&self.sides, &self.walls[j], t)
    }

    /// Outer length of side `k`.
    pub fn side_len0(&self, k: usize) -> f64 {
        self.sides[k].len0
    }

    /// Length of side `k` on the depth-`t` ring. Affine in `t`.
    pub fn side_len_at(&self, k: usize, t: f64) -> f64 {
        self.sides[k].len0 - t * self.sides[k].shrink
    }

    /// Point at constant along-side fraction `frac` of side `k`, depth `t`.
    /// As `t` varies this traces a straight line (the walls are such lines).
    pub fn side_point(&self, k: usize, frac: f64, t: f64) -> C {
        let s = &self.sides[k];
        s.a - s.va * t + s.dir * (frac * (s.len0 - t * s.shrink))
    }

    /// Arclength position of the constant-fraction point of side `k` on the
    /// depth-`t` ring. Affine in `t`.
    pub fn side_arc(&self, k: usize, frac: f64, t: f64) -> f64 {
        let mut arc = 0.0;
        for s in self.sides.iter().take(k) {
            arc += s.len0 - t * s.shrink;
        }
        arc + frac * (self.sides[k].len0 - t * self.sides[k].shrink)
    }

    /// Chart coordinates of an interior point: (depth, side, along-side
    /// fraction, ring arclength). `None` outside the domain.
    pub fn chart(&self, z: C) -> Option<(f64, usize, f64, f64)> {
        if !self.outer.contains(z) {
            return None;
        }
        let d = self.outer.dist_to_boundary(z);
        let k = self.outer.nearest_boundary(z).side;
        let s = &self.sides[k];
        let a_t = s.a - s.va * d;
        let len_t = s.len0 - d * s.shrink;
        let w = ((z - a_t).re * s.dir.re + (z - a_t).im * s.dir.im) / len_t;
        let mut arc = w * len_t;
        for sk in self.sides.iter().take(k) {
            arc += sk.len0 - d * sk.shrink;
        }
        Some((d, k, w, arc))
    }

    pub fn classify(&self, z: C) -> Tag {
        let Some((d, _k, _w, arc)) = self.chart(z) else {
            return Tag::Outside;
        };
        if d >= self.collar {
            return Tag::Core;
        }
        let corridor = ((d * self.n3).floor() as usize).min(self.num_corridors() - 1);
        let perim = self.perimeter_at(d);
        // tooth of a same-parity wall whose two-cell span contains the arc
        let m = self.walls.len();
        let depth_lo = corridor as f64 / self.n3 + self.sigma - 1e-12;
        let depth_hi = (corridor + 1) as f64 / self.n3 - self.sigma + 1e-12;
        if d >= depth_lo && d <= depth_hi {
            for j in 0..m {
                if j % 2 == corridor % 2 {
                    continue;
                }
                let lo = self.wall_arc((j + m - 1) % m, d) + self.sigma;
                let hi = self.wall_arc((j + 1) % m, d) - self.sigma;
                if cyclic_between(arc, lo, hi, perim) {
                    return Tag::Tooth { wall: j, corridor };
                }
            }
        }
        // spine sheath
        for (j, w) in self.walls.iter().enumerate() {
            if seg_point_dist(w.top, w.bottom, z) <= self.sigma {
                return Tag::Sheath { wall: j };
            }
        }
        // mid-corridor strip, cut where same-parity walls pass
        let mid = (corridor as f64 + 0.5) / self.n3;
        if (d - mid).abs() <= 1.0 / (4.0 * self.n3) + 1e-12 {
            let blocked = (0..m).any(|j| {
                j % 2 == corridor % 2 && {
                    let fwd = (arc - self.wall_arc(j, d)).rem_euclid(perim);
                    fwd.min(perim - fwd) < self.sigma - 1e-12
                }
            });
            if !blocked {
                return Tag::Strip { corridor };
            }
        }
        Tag::CollarFree { corridor }
    }

    pub fn in_omega(&self, j: usize, z: C) -> bool {
        self.dist_to_omega(j, z) <= 1e-12 * (1.0 + z.norm())
    }

    /// Exact Euclidean distance from `z` to the comb `ω_j` (0 inside a tooth).
    pub fn dist_to_omega(&self, j: usize, z: C) -> f64 {
        let d = self.outer.depth(z);
        if d > 0.0 {
            // a tooth can only contain z if its corridor matches z's depth
            let c_here = (d * self.n3).floor() as i64;
            for &(corridor, ref poly) in &self.teeth[j] {
                if (corridor as i64 - c_here).abs() <= 1 && poly.contains(z) {
                    return 0.0;
                }
            }
        }
        let w = &self.walls[j];
        let mut best = seg_point_dist(w.top, w.bottom, z);
        let c_mid = (d * self.n3).floor() as i64;
        let window = 3i64;
        let buckets = &self.omega_segs[j];
        let lo = (c_mid - window).max(0) as usize;
        let hi = ((c_mid + window).max(0) as usize).min(buckets.len().saturating_sub(1));
        let mut scanned_any = false;
        if c_mid + window >= 0 && lo < buckets.len() {
            for bucket in &buckets[lo..=hi] {
                for &(p, q) in bucket {
                    scanned_any = true;
                    best = best.min(seg_point_dist(p, q, z));
                }
            }
        }
        // verify the window could not hide a closer tooth; fall back to a
        // full scan if the point is far outside it
        let window_guard = (window - 1) as f64 / self.n3;
        if !scanned_any || best > window_guard {
            for bucket in buckets {
                for &(p, q) in bucket {
                    best = best.min(seg_point_dist(p, q, z));
                }
            }
        }
        best
    }

    /// Points covering ω_j: spine samples plus a grid inside every tooth.
    /// `spine_per_corridor` and `tooth_grid` control density.
    pub fn sample_omega(&self, j: usize, spine_per_corridor: usize, tooth_grid: usize) -> Vec<C> {
        let mut pts = Vec::new();
        let w = &self.walls[j];
        let steps = self.num_corridors() * spine_per_corridor.max(1);
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            pts.push(w.top + (w.bottom - w.top) * t);
        }
        let m = self.walls.len();
        let g = tooth_grid.max(2);
        for &(corridor, _) in &self.teeth[j] {
            let t0 = corridor as f64 / self.n3 + self.sigma;
            let t1 = (corridor + 1) as f64 / self.n3 - self.sigma;
            for gi in 0..=g {
                let t = t0 + (t1 - t0) * gi as f64 / g as f64;
                let lo = self.wall_arc((j + m - 1) % m, t) + self.sigma;
                let hi_raw = self.wall_arc((j + 1) % m, t) - self.sigma;
                let perim = self.perimeter_at(t);
                let hi = if hi_raw < lo { hi_raw + perim } else { hi_raw };
                for ga in 0..=g {
                    let arc = lo + (hi - lo) * ga as f64 / g as f64;
                    pts.push(self.ring_point(t, arc));
                }
            }
        }
        pts
    }

    /// Stratified sample of the closed collar minus the `clearance`
    /// neighbourhood of ω_j (the region a deformation must leave alone).
    pub fn sample_collar_clear_of(
        &self,
        j: usize,
        clearance: f64,
        per_corridor: usize,
        arc_steps: usize,
    ) -> Vec<C> {
        let mut pts = Vec::new();
        for c in 0..self.num_corridors() {
            for di in 0..per_corridor.max(1) {
                let t = (c as f64 + (di as f64 + 0.5) / per_corridor as f64) / self.n3;
                let perim = self.perimeter_at(t);
                for ai in 0..arc_steps.max(4) {
                    let arc = perim * ai as f64 / arc_steps as f64;
                    let z = self.ring_point(t, arc);
                    if self.dist_to_omega(j, z) >= clearance {
                        pts.push(z);
                    }
                }
            }
        }
        pts
    }

    /// Strip-band membership: mid-corridor depth and clear (by `σ`, measured
    /// along the ring) of the corridor's same-parity walls. This set equals
    /// the union of the teeth crossing the corridor.
    pub fn strip_corridor(&self, z: C) -> Option<usize> {
        let (d, _, _, arc) = self.chart(z)?;
        if d >= self.collar {
            return None;
        }
        let corridor = ((d * self.n3).floor() as usize).min(self.num_corridors() - 1);
        let mid = (corridor as f64 + 0.5) / self.n3;
        if (d - mid).abs() > 1.0 / (4.0 * self.n3) + 1e-12 {
            return None;
        }
        let perim = self.perimeter_at(d);
        let blocked = (0..self.walls.len()).any(|j| {
            j % 2 == corridor % 2 && {
                let wa = self.wall_arc(j, d);
                let fwd = (arc - wa).rem_euclid(perim);
                fwd.min(perim - fwd) < self.sigma - 1e-12
            }
        });
        if blocked {
            None
        } else {
            Some(corridor)
        }
    }

    /// Sample points inside the strip bands (all corridors).
    pub fn sample_strips(&self, per_corridor: usize, arc_steps: usize) -> Vec<C> {
        let mut pts = Vec::new();
        for c in 0..self.num_corridors() {
            for di in 0..per_corridor.max(1) {
                let frac = (di as f64 + 0.5) / per_corridor as f64;
                let t = (c as f64 + 0.25 + 0.5 * frac) / self.n3;
                let perim = self.perimeter_at(t);
                for ai in 0..arc_steps.max(4) {
                    let arc = perim * ai as f64 / arc_steps as f64;
                    let z = self.ring_point(t, arc);
                    if self.strip_corridor(z).is_some() {
                        pts.push(z);
                    }
                }
            }
        }
        pts
    }

    fn build_teeth(&mut self) {
        let m = self.walls.len();
        let mut teeth = Vec::with_capacity(m);
        for j in 0..m {
            let mut list = Vec::with_capacity(self.n * self.n);
            for corridor in 0..self.num_corridors() {
                if corridor % 2 == j % 2 {
                    continue;
                }
                let t0 = corridor as f64 / self.n3 + self.sigma;
                let t1 = (corridor + 1) as f64 / self.n3 - self.sigma;
                let poly = self.tooth_polygon(j, t0, t1);
                list.push((corridor, poly));
            }
            teeth.push(list);
        }
        self.teeth = teeth;
    }

    /// Band between depths t0 < t1, spanning from the cut behind wall j-1 to
    /// the cut before wall j+1, walking ring corners exactly.
    fn tooth_polygon(&self, j: usize, t0: f64, t1: f64) -> Polygon {
        let m = self.walls.len();
        let jl = (j + m - 1) % m;
        let jr = (j + 1) % m;
        let arc_lo = |t: f64| self.wall_arc(jl, t) + self.sigma;
        let arc_hi = |t: f64| {
            let raw = self.wall_arc(jr, t) - self.sigma;
            let lo = self.wall_arc(jl, t) + self.sigma;
            if raw < lo {
                raw + self.perimeter_at(t)
            } else {
                raw
            }
        };
        let mut verts = self.ring_walk(t0, arc_lo(t0), arc_hi(t0));
        let mut back = self.ring_walk(t1, arc_lo(t1), arc_hi(t1));
        back.reverse();
        verts.extend(back);
        Polygon::new(verts).expect("tooth band must be a simple polygon")
    }

    /// Points along the depth-`t` ring from arc_a to arc_b (unwrapped,
    /// arc_b ≥ arc_a), inserting every ring corner strictly in between.
    fn ring_walk(&self, t: f64, arc_a: f64, arc_b: f64) -> Vec<C> {
        let perim = self.perimeter_at(t);
        let mut corners = Vec::new();
        let mut cum = 0.0;
        for s in &self.sides {
            corners.push(cum);
            cum += s.len0 - t * s.shrink;
        }
        let mut pts = vec![self.ring_point(t, arc_a)];
        // corner positions replicated across wraps covering [arc_a, arc_b]
        let k0 = (arc_a / perim).floor() as i64;
        let k1 = (arc_b / perim).ceil() as i64;
        let mut between: Vec<f64> = Vec::new();
        for k in k0..=k1 {
            for &c in &corners {
                let pos = c + k as f64 * perim;
                if pos > arc_a + 1e-12 && pos < arc_b - 1e-12 {
                    between.push(pos);
                }
            }
        }
        between.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for pos in between {
            pts.push(self.ring_point(t, pos));
        }
        pts.push(self.ring_point(t, arc_b));
        pts
    }

    fn bucket_segments(&mut self) {
        let corridors = self.num_corridors();
        let mut all = Vec::with_capacity(self.walls.len());
        for (j, w) in self.walls.iter().enumerate() {
            let mut buckets: Vec<Vec<(C, C)>> = vec![Vec::new(); corridors];
            // spine subdivided per corridor for locality
            for c in 0..corridors {
                let f0 = c as f64 / corridors as f64;
                let f1 = (c + 1) as f64 / corridors as f64;
                buckets[c].push((
                    w.top + (w.bottom - w.top) * f0,
                    w.top + (w.bottom - w.top) * f1,
                ));
            }
            for (corridor, poly) in &self.teeth[j] {
                for (a, b) in poly.sides() {
                    buckets[*corridor].push((a, b));
                }
            }
            all.push(buckets);
        }
        self.omega_segs = all;
    }

    fn measure_gaps(&mut self) {
        // min distance between distinct combs, windowed by corridor with a
        // bbox rejection per bucket pair
        let m = self.walls.len();
        let corridors = self.num_corridors();
        let bbox: Vec<Vec<Option<(C, C)>>> = self
            .omega_segs
            .iter()
            .map(|buckets| buckets.iter().map(|b| segs_bbox(b)).collect())
            .collect();
        let mut best = f64::INFINITY;
        for j in 0..m {
            for k in (j + 1)..m {
                for c in 0..corridors {
                    let lo = c.saturating_sub(2);
                    let hi = (c + 2).min(corridors - 1);
                    for c2 in lo..=hi {
                        let (Some(b1), Some(b2)) = (&bbox[j][c], &bbox[k][c2]) else {
                            continue;
                        };
                        if bbox_dist(b1, b2) >= best {
                            continue;
                        }
                        for &(p1, q1) in &self.omega_segs[j][c] {
                            for &(p2, q2) in &self.omega_segs[k][c2] {
                                let d = seg_seg_dist(p1, q1, p2, q2);
                                if d < best {
                                    best = d;
                                }
                            }
                        }
                    }
                }
            }
        }
        self.pairwise_gap = best;

        // teeth to the outer boundary: by construction the shallowest tooth
        // edge sits at depth σ; measure it anyway
        let mut bgap = f64::INFINITY;
        for j in 0..m {
            for (corridor, poly) in &self.teeth[j] {
                if *corridor > 0 {
                    continue;
                }
                for v in poly.vertices() {
                    bgap = bgap.min(self.outer.dist_to_boundary(*v));
                }
            }
        }
        self.boundary_gap = bgap;

        let cap = 1.0 / (8.0 * self.n3);
        self.delta = (self.pairwise_gap.min(self.boundary_gap) / 3.0).min(cap);
    }

    pub fn report(&self) -> LabyrinthReport {
        let mut min_cell = f64::INFINITY;
        let m = self.walls.len();
        let perim = self.perimeter_at(self.collar);
        for j in 0..m {
            let a = self.wall_arc(j, self.collar);
            let b = self.wall_arc((j + 1) % m, self.collar);
            min_cell = min_cell.min((b - a).rem_euclid(perim));
        }
        LabyrinthReport {
            n: self.n,
            wall_count: m,
            ring_count: self.rings.len(),
            teeth_per_wall: self.teeth.first().map_or(0, |t| t.len()),
            sigma: self.sigma,
            delta: self.delta,
            pairwise_gap: self.pairwise_gap,
            boundary_gap: self.boundary_gap,
            collar_depth: self.collar,
            outer_perimeter: self.outer.perimeter(),
            inner_perimeter: self.inner().perimeter(),
            min_cell_width: min_cell,
        }
    }

    /// SVG rendering: rings (sparse), walls, and teeth coloured by parity.
    pub fn svg(&self) -> String {
        let (lo, hi) = self.outer.bbox();
        let pad = (hi - lo).norm() * 0.03;
        let mut s = String::new();
        s.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n",
            lo.re - pad,
            lo.im - pad,
            hi.re - lo.re + 2.0 * pad,
            hi.im - lo.im + 2.0 * pad
        ));
        let poly_path = |p: &Polygon| -> String {
            let mut d = String::new();
            for (i, v) in p.vertices().iter().enumerate() {
                d.push_str(if i == 0 { "M" } else { "L" });
                d.push_str(&format!("{:.6},{:.6} ", v.re, v.im));
            }
            d.push('Z');
            d
        };
        let ring_step = (self.rings.len() / 16).max(1);
        for (i, ring) in self.rings.iter().enumerate() {
            if i % ring_step == 0 || i + 1 == self.rings.len() {
                let width = if i == 0 || i + 1 == self.rings.len() {
                    0.004
                } else {
                    0.001
                };
                s.push_str(&format!(
                    "<path d=\"{}\" fill=\"none\" stroke=\"#888\" stroke-width=\"{}\"/>\n",
                    poly_path(ring),
                    width * (hi - lo).norm()
                ));
            }
        }
        for (j, teeth) in self.teeth.iter().enumerate() {
            let color = if j % 2 == 0 { "#d95f02" } else { "#1b9e77" };
            for (_, poly) in teeth {
                s.push_str(&format!(
                    "<path d=\"{}\" fill=\"{}\" fill-opacity=\"0.55\" stroke=\"none\"/>\n",
                    poly_path(poly),
                    color
                ));
            }
        }
        for w in &self.walls {
            s.push_str(&format!(
                "<line x1=\"{:.6}\" y1=\"{:.6}\" x2=\"{:.6}\" y2=\"{:.6}\" stroke=\"#000\" stroke-width=\"{}\"/>\n",
                w.top.re,
                w.top.im,
                w.bottom.re,
                w.bottom.im,
                0.002 * (hi - lo).norm()
            ));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn side_geometry(p: &Polygon) -> Vec<SideGeom> {
    let nv = p.num_sides();
    // inward vertex velocity: v(t) = v - t·(n_prev + n_this)/(1 + ⟨n_prev, n_this⟩)
    let normals: Vec<C> = (0..nv)
        .map(|k| {
            let (a, b) = p.side(k);
            let d = (b - a) / (b - a).norm();
            C::new(d.im, -d.re) // outward for ccw
        })
        .collect();
    let motion: Vec<C> = (0..nv)
        .map(|k| {
            let np = normals[(k + nv - 1) % nv];
            let nc = normals[k];
            let denom = 1.0 + np.re * nc.re + np.im * nc.im;
            (np + nc) / denom
        })
        .collect();
    (0..nv)
        .map(|k| {
            let (a, b) = p.side(k);
            let len0 = (b - a).norm();
            let dir = (b - a) / len0;
            let va = motion[k];
            let vb = motion[(k + 1) % nv];
            // len(t) = dot(b(t)-a(t), dir) = len0 - t·dot(vb - va, dir)
            let shrink = (vb - va).re * dir.re + (vb - va).im * dir.im;
            SideGeom {
                a,
                dir,
                len0,
                n_out: normals[k],
                va,
                shrink,
            }
        })
        .collect()
}

fn ring_polygon(sides: &[SideGeom], t: f64) -> Polygon {
    let verts: Vec<C> = sides.iter().map(|s| s.a - s.va * t).collect();
    Polygon::new(verts).expect("offset ring must stay simple within the collar")
}

fn wall_arc(sides: &[SideGeom], w: &Wall, t: f64) -> f64 {
    let mut arc = 0.0;
    for s in sides.iter().take(w.side) {
        arc += s.len0 - t * s.shrink;
    }
    arc + w.frac * (sides[w.side].len0 - t * sides[w.side].shrink)
}

fn place_walls(sides: &[SideGeom], n: usize, collar: f64) -> Vec<Wall> {
    let total = 2 * n;
    let perim: f64 = sides.iter().map(|s| s.len0).sum();
    // largest-remainder apportionment of 2N stations by side length
    let quotas: Vec<f64> = sides
        .iter()
        .map(|s| total as f64 * s.len0 / perim)
        .collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut assigned: usize = counts.iter().sum();
    let mut rema: Vec<(f64, usize)> = quotas
        .iter()
        .enumerate()
        .map(|(k, q)| (q - q.floor(), k))
        .collect();
    rema.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut ri = 0;
    while assigned < total {
        counts[rema[ri % rema.len()].1] += 1;
        assigned += 1;
        ri += 1;
    }
    let mut walls = Vec::with_capacity(total);
    for (k, s) in sides.iter().enumerate() {
        for i in 0..counts[k] {
            let frac = (i as f64 + 0.5) / counts[k] as f64;
            let top = s.a + s.dir * (frac * s.len0);
            let a_t = s.a - s.va * collar;
            let len_t = s.len0 - collar * s.shrink;
            let bottom = a_t + s.dir * (frac * len_t);
            walls.push(Wall {
                side: k,
                frac,
                top,
                bottom,
            });
        }
    }
    walls
}

fn cyclic_between(x: f64, lo: f64, hi: f64, period: f64) -> bool {
    let span = (hi - lo).rem_euclid(period);
    let off = (x - lo).rem_euclid(period);
    off <= span
}

fn segs_bbox(segs: &[(C, C)]) -> Option<(C, C)> {
    if segs.is_empty() {
        return None;
    }
    let mut lo = C::new(f64::INFINITY, f64::INFINITY);
    let mut hi = C::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(a, b) in segs {
        lo.re = lo.re.min(a.re).min(b.re);
        lo.im = lo.im.min(a.im).min(b.im);
        hi.re = hi.re.max(a.re).max(b.re);
        hi.im = hi.im.max(a.im).max(b.im);
    }
    Some((lo, hi))
}

fn bbox_dist(a: &(C, C), b: &(C, C)) -> f64 {
    let dx = (b.0.re - a.1.re).max(a.0.re - b.1.re).max(0.0);
    let dy = (b.0.im - a.1.im).max(a.0.im - b.1.im).max(0.0);
    (dx * dx + dy * dy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn square_lab(n: usize) -> Labyrinth {
        let p = Polygon::square(c(0.0, 0.0), 2.0);
        Labyrinth::build(&p, n).unwrap()
    }

    #[test]
    fn counts_for_square() {
        let lab = square_lab(4);
        assert_eq!(lab.walls().len(), 8);
        assert_eq!(lab.rings().len(), 33);
        for j in 0..8 {
            assert_eq!(lab.teeth_of(j).len(), 16, "N² teeth per wall");
        }
        let rep = lab.report();
        assert_eq!(rep.wall_count, 8);
        assert_eq!(rep.ring_count, 33);
        assert_eq!(rep.teeth_per_wall, 16);
    }

    #[test]
    fn rings_match_generic_offsets() {
        let p = Polygon::regular(5, 1.5, c(0.1, -0.2));
        let lab = Labyrinth::build(&p, 4).unwrap();
        // analytic vertex-motion rings vs the clip-based offset oracle
        for i in [1usize, 7, 16, 32] {
            let t = i as f64 / 64.0;
            let oracle = p.inward_offset(t).unwrap();
            let ring = lab.ring(i);
            assert_eq!(ring.num_sides(), oracle.num_sides());
            for v in ring.vertices() {
                let d = oracle
                    .vertices()
                    .iter()
                    .map(|u| (u - v).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(d < 1e-10, "ring {i} vertex off by {d}");
            }
        }
    }

    #[test]
    fn ring_perimeters_shrink_linearly() {
        let lab = square_lab(4);
        // square side 2: perimeter 8 - 8t
        for i in [0usize, 10, 32] {
            let t = i as f64 / 64.0;
            assert!((lab.ring(i).perimeter() - (8.0 - 8.0 * t)).abs() < 1e-12);
            assert!((lab.perimeter_at(t) - (8.0 - 8.0 * t)).abs() < 1e-12);
        }
        assert!((lab.collar_depth() - 0.5).abs() < 1e-15);
        assert!((lab.inner().perimeter() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn wall_stations_and_span() {
        let lab = square_lab(4);
        // 2 walls per side at fractions 1/4, 3/4
        for w in lab.walls() {
            assert!((w.frac - 0.25).abs() < 1e-12 || (w.frac - 0.75).abs() < 1e-12);
            assert!(lab.outer().dist_to_boundary(w.top) < 1e-12);
            assert!((lab.outer().dist_to_boundary(w.bottom) - 0.5).abs() < 1e-9);
        }
        // arcs strictly increasing around the boundary
        let arcs: Vec<f64> = (0..8).map(|j| lab.wall_arc(j, 0.0)).collect();
        for k in 1..8 {
            assert!(arcs[k] > arcs[k - 1]);
        }
    }

    #[test]
    fn measured_gaps_and_delta() {
        let lab = square_lab(4);
        let sigma = 1.0 / 256.0;
        assert!((lab.sigma() - sigma).abs() < 1e-15);
        // teeth clear the outer boundary by exactly σ
        assert!((lab.boundary_gap() - sigma).abs() < 1e-9);
        // combs stay disjoint with clearance close to σ (wall tilt may shave it)
        assert!(lab.pairwise_gap() > 0.6 * sigma);
        assert!(lab.pairwise_gap() < 2.5 * sigma);
        // δ = min(gap)/3 capped at 1/(8N³)
        let expect = (lab.pairwise_gap().min(lab.boundary_gap()) / 3.0).min(1.0 / 512.0);
        assert!((lab.delta() - expect).abs() < 1e-15);
        assert!(lab.delta() > 0.0);
    }

    #[test]
    fn classify_known_points() {
        let lab = square_lab(4);
        assert_eq!(lab.classify(c(0.0, 0.0)), Tag::Core);
        assert_eq!(lab.classify(c(3.0, 0.0)), Tag::Outside);
        // corridor 0 (even) hosts teeth of odd walls; a mid-band point just
        // past wall 1's own arc belongs to wall 1's tooth
        let w1_arc = lab.wall_arc(1, 0.0);
        let t = 0.5 / 64.0;
        let z = lab.ring_point(t, w1_arc + 4.0 * lab.sigma());
        assert_eq!(
            lab.classify(z),
            Tag::Tooth {
                wall: 1,
                corridor: 0
            }
        );
        assert!(lab.in_omega(1, z));
        assert!(lab.dist_to_omega(0, z) > 0.0);
        // wall 0's spine at the same depth is uncovered there: sheath
        let w0 = &lab.walls()[0];
        let zs = w0.top + (w0.bottom - w0.top) * (t / 0.5);
        assert_eq!(lab.classify(zs), Tag::Sheath { wall: 0 });
        // tooth points sit inside the corridor's strip band
        assert_eq!(lab.strip_corridor(z), Some(0));
        // just outside the mid band: no strip
        let z_off = lab.ring_point(0.1 / 64.0, w1_arc + 4.0 * lab.sigma());
        assert_eq!(lab.strip_corridor(z_off), None);
    }

    #[test]
    fn strips_coincide_with_teeth_union() {
        let lab = square_lab(4);
        let pts = lab.sample_strips(2, 64);
        assert!(pts.len() > 1000);
        let mut in_teeth = 0usize;
        for &z in &pts {
            let corridor = lab.strip_corridor(z).expect("sampler must return strip points");
            for (j, w) in lab.walls().iter().enumerate() {
                if j % 2 == corridor % 2 {
                    assert!(seg_point_dist(w.top, w.bottom, z) > lab.sigma() * 0.999);
                }
            }
            if matches!(lab.classify(z), Tag::Tooth { .. }) {
                in_teeth += 1;
            }
        }
        // the strip bands are covered by the teeth up to tilt slivers
        assert!(
            in_teeth as f64 > 0.95 * pts.len() as f64,
            "only {in_teeth}/{} strip samples in teeth",
            pts.len()
        );
        // and conversely tooth points lie in the strip band, except for
        // cut-edge samples shaved off by wall tilt
        let mut tooth_pts = 0usize;
        let mut in_strip = 0usize;
        for j in 0..8 {
            for z in lab.sample_omega(j, 0, 3) {
                if let Tag::Tooth { corridor, .. } = lab.classify(z) {
                    tooth_pts += 1;
                    if lab.strip_corridor(z) == Some(corridor) {
                        in_strip += 1;
                    }
                }
            }
        }
        assert!(tooth_pts > 500);
        assert!(
            in_strip as f64 > 0.9 * tooth_pts as f64,
            "{in_strip}/{tooth_pts} tooth samples in strip bands"
        );
    }

    #[test]
    fn omega_samples_lie_on_omega() {
        let lab = square_lab(4);
        let pts = lab.sample_omega(3, 2, 3);
        assert!(pts.len() > 100);
        for z in &pts {
            assert!(
                lab.dist_to_omega(3, *z) < 1e-9,
                "sample at distance {}",
                lab.dist_to_omega(3, *z)
            );
        }
        let clear = lab.sample_collar_clear_of(3, lab.delta(), 2, 48);
        assert!(clear.len() > 100);
        for z in &clear {
            assert!(lab.dist_to_omega(3, *z) >= lab.delta() * 0.999);
        }
    }

    #[test]
    fn corner_teeth_bend() {
        let lab = square_lab(4);
        // some tooth must wrap a corner of the square and pick up extra
        // vertices beyond the basic four
        let mut bent = 0;
        for j in 0..8 {
            for (_, poly) in lab.teeth_of(j) {
                assert!(poly.area() > 0.0);
                if poly.num_sides() > 4 {
                    bent += 1;
                }
            }
        }
        assert!(bent > 0, "expected corner-crossing teeth");
    }

    #[test]
    fn degenerate_inputs_rejected() {
        let p = Polygon::square(c(0.0, 0.0), 2.0);
        assert!(matches!(
            Labyrinth::build(&p, 1),
            Err(LabyrinthError::BadN(1))
        ));
        // collar 2/N = 1 equals the inradius: sides vanish
        assert!(matches!(
            Labyrinth::build(&p, 2),
            Err(LabyrinthError::SideVanishes { .. })
        ));
        let nonconvex = Polygon::new(vec![
            c(0.0, 0.0),
            c(2.0, 0.0),
            c(2.0, 2.0),
            c(1.0, 0.5),
            c(0.0, 2.0),
        ])
        .unwrap();
        assert!(matches!(
            Labyrinth::build(&nonconvex, 4),
            Err(LabyrinthError::NotConvex)
        ));
    }

    #[test]
    fn svg_renders() {
        let lab = square_lab(4);
        let svg = lab.svg();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("line"));
        assert!(svg.matches("<path").count() > 100);
    }
}
