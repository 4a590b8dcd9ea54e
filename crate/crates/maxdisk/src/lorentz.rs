//! Lorentz-Minkowski 3-space: the metric dx1² + dx2² − dx3², causal types,
//! the hyperbolic sphere H², stereographic charts, hyperboloid Gauss maps,
//! orthonormal frames, and the timelike region family B(r).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vector in Lorentz-Minkowski 3-space (signature +, +, −).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LVec3 {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl LVec3 {
    pub const fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Self { x1, x2, x3 }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    /// Minkowski square ⟨v,v⟩ = x1² + x2² − x3².
    pub fn minkowski_sq(&self) -> f64 {
        self.x1 * self.x1 + self.x2 * self.x2 - self.x3 * self.x3
    }

    pub fn euclid_sq(&self) -> f64 {
        self.x1 * self.x1 + self.x2 * self.x2 + self.x3 * self.x3
    }

    pub fn euclid_norm(&self) -> f64 {
        self.euclid_sq().sqrt()
    }

    pub fn dot_e(&self, o: &LVec3) -> f64 {
        self.x1 * o.x1 + self.x2 * o.x2 + self.x3 * o.x3
    }

    /// Mirror across the plane x3 = 0: (x1, x2, −x3).
    pub fn reflect_j(&self) -> LVec3 {
        LVec3::new(self.x1, self.x2, -self.x3)
    }

    pub fn scale(&self, s: f64) -> LVec3 {
        LVec3::new(self.x1 * s, self.x2 * s, self.x3 * s)
    }

    pub fn add(&self, o: &LVec3) -> LVec3 {
        LVec3::new(self.x1 + o.x1, self.x2 + o.x2, self.x3 + o.x3)
    }

    pub fn sub(&self, o: &LVec3) -> LVec3 {
        LVec3::new(self.x1 - o.x1, self.x2 - o.x2, self.x3 - o.x3)
    }

    /// Euclidean cross product (used to complete frames, composed with reflect_j).
    pub fn cross_e(&self, o: &LVec3) -> LVec3 {
        LVec3::new(
            self.x2 * o.x3 - self.x3 * o.x2,
            self.x3 * o.x1 - self.x1 * o.x3,
            self.x1 * o.x2 - self.x2 * o.x1,
        )
    }

    pub fn classify(&self) -> CausalClass {
        let q = self.minkowski_sq();
        if q > 0.0 {
            CausalClass::Spacelike
        } else if q < 0.0 {
            CausalClass::Timelike
        } else if *self == LVec3::zero() {
            // convention: the zero vector counts as spacelike
            CausalClass::Spacelike
        } else {
            CausalClass::Lightlike
        }
    }
}

impl std::ops::Add for LVec3 {
    type Output = LVec3;
    fn add(self, o: LVec3) -> LVec3 {
        LVec3::add(&self, &o)
    }
}

impl std::ops::Sub for LVec3 {
    type Output = LVec3;
    fn sub(self, o: LVec3) -> LVec3 {
        LVec3::sub(&self, &o)
    }
}

impl std::ops::Mul<f64> for LVec3 {
    type Output = LVec3;
    fn mul(self, s: f64) -> LVec3 {
        self.scale(s)
    }
}

impl std::ops::Neg for LVec3 {
    type Output = LVec3;
    fn neg(self) -> LVec3 {
        self.scale(-1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausalClass {
    Spacelike,
    Timelike,
    Lightlike,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LorentzError {
    #[error("points lie on different sheets of the hyperbolic sphere")]
    DifferentSheets,
    #[error("point is not on the hyperbolic sphere: ⟨p,p⟩ = {0}")]
    NotOnHyperboloid(f64),
    #[error("stereographic preimage of the unit circle is empty")]
    OnUnitCircle,
    #[error("point is not in B(0): needs timelike position with x3 < 0")]
    NotInB0,
    #[error("precondition violated: {0}")]
    PreconditionViolated(&'static str),
}

/// Minkowski inner product ⟨u,v⟩ = u1 v1 + u2 v2 − u3 v3.
pub fn minkowski_inner(u: &LVec3, v: &LVec3) -> f64 {
    u.x1 * v.x1 + u.x2 * v.x2 - u.x3 * v.x3
}

/// Signed Lorentzian norm: sign(⟨v,v⟩) · √|⟨v,v⟩|.
pub fn lorentz_norm(v: &LVec3) -> f64 {
    let q = v.minkowski_sq();
    q.signum() * q.abs().sqrt()
}

/// Open region B(r) = { ‖x‖ < −r, x3 < −r }; B(0) is bounded by the lower
/// sheet of the hyperbolic sphere. Nested: r1 < r2 implies B(r2) ⊂ B(r1).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Region {
    r: f64,
}

impl Region {
    pub fn new(r: f64) -> Self {
        assert!(r >= 0.0, "region parameter must be nonnegative");
        Self { r }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn contains(&self, p: &LVec3) -> bool {
        lorentz_norm(p) < -self.r && p.x3 < -self.r
    }

    /// Smallest slack in the two defining inequalities; positive inside.
    pub fn margin(&self, p: &LVec3) -> f64 {
        let a = -self.r - lorentz_norm(p);
        let b = -self.r - p.x3;
        a.min(b)
    }
}

const HYPERBOLOID_TOL: f64 = 1e-9;

/// Intrinsic distance on one sheet of H²: arccosh(−⟨p,q⟩).
pub fn hyperbolic_dist(p: &LVec3, q: &LVec3) -> Result<f64, LorentzError> {
    for v in [p, q] {
        let err = v.minkowski_sq() + 1.0;
        if err.abs() > HYPERBOLOID_TOL {
            return Err(LorentzError::NotOnHyperboloid(v.minkowski_sq()));
        }
    }
    if (p.x3 > 0.0) != (q.x3 > 0.0) {
        return Err(LorentzError::DifferentSheets);
    }
    let c = -minkowski_inner(p, q);
    // rounding can push −⟨p,q⟩ slightly below 1 for near-equal points
    Ok(c.max(1.0).acosh())
}

/// Image of the stereographic chart; the north pole (0,0,1) maps to infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StereoPoint {
    Finite(Complex64),
    Infinity,
}

impl StereoPoint {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            StereoPoint::Finite(w) => Some(w),
            StereoPoint::Infinity => None,
        }
    }
}

/// Stereographic chart η(x) = (x1 + i x2)/(1 − x3) on H².
/// The lower sheet maps into |w| < 1, the upper sheet onto |w| > 1 ∪ {∞}.
pub fn stereo(p: &LVec3) -> Result<StereoPoint, LorentzError> {
    let err = p.minkowski_sq() + 1.0;
    if err.abs() > HYPERBOLOID_TOL {
        return Err(LorentzError::NotOnHyperboloid(p.minkowski_sq()));
    }
    let d = 1.0 - p.x3;
    if d.abs() < 1e-14 {
        return Ok(StereoPoint::Infinity);
    }
    Ok(StereoPoint::Finite(Complex64::new(p.x1 / d, p.x2 / d)))
}

/// Inverse stereographic chart; |w| = 1 has no preimage on H².
pub fn stereo_inv(w: StereoPoint) -> Result<LVec3, LorentzError> {
    let w = match w {
        StereoPoint::Infinity => return Ok(LVec3::new(0.0, 0.0, 1.0)),
        StereoPoint::Finite(w) => w,
    };
    let m = w.norm_sqr();
    if (m - 1.0).abs() < 1e-14 {
        return Err(LorentzError::OnUnitCircle);
    }
    let x3 = (1.0 + m) / (m - 1.0);
    let s = 1.0 - x3;
    Ok(LVec3::new(w.re * s, w.im * s, x3))
}

/// Hyperboloid Gauss direction N(p) = p/‖p‖ (signed norm; lands on the upper
/// sheet) and its Euclidean companion N₀(p) = 𝒥(p)/‖p‖_E, for p in B(0).
pub fn gauss_maps(p: &LVec3) -> Result<(LVec3, LVec3), LorentzError> {
    if !(p.minkowski_sq() < 0.0 && p.x3 < 0.0) {
        return Err(LorentzError::NotInB0);
    }
    let n = p.scale(1.0 / lorentz_norm(p));
    let n0 = p.reflect_j().scale(1.0 / p.euclid_norm());
    Ok((n, n0))
}

/// Orthonormal frame of 𝕃³: ⟨e1,e1⟩ = ⟨e2,e2⟩ = 1, ⟨e3,e3⟩ = −1,
/// mixed products zero, e3 future-pointing, positive orientation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Frame {
    pub e1: LVec3,
    pub e2: LVec3,
    pub e3: LVec3,
}

impl Frame {
    pub fn identity() -> Self {
        Frame {
            e1: LVec3::new(1.0, 0.0, 0.0),
            e2: LVec3::new(0.0, 1.0, 0.0),
            e3: LVec3::new(0.0, 0.0, 1.0),
        }
    }

    pub fn det(&self) -> f64 {
        self.e1.dot_e(&self.e2.cross_e(&self.e3))
    }

    /// Largest deviation from the orthonormality relations.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        d = d.max((minkowski_inner(&self.e1, &self.e1) - 1.0).abs());
        d = d.max((minkowski_inner(&self.e2, &self.e2) - 1.0).abs());
        d = d.max((minkowski_inner(&self.e3, &self.e3) + 1.0).abs());
        d = d.max(minkowski_inner(&self.e1, &self.e2).abs());
        d = d.max(minkowski_inner(&self.e1, &self.e3).abs());
        d = d.max(minkowski_inner(&self.e2, &self.e3).abs());
        d
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.orthonormality_defect() <= tol && self.e3.x3 > 0.0 && self.det() > 0.0
    }
}

/// Euclidean orthonormal companion triple of a Lorentz frame.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EuclidFrame {
    pub e1: LVec3,
    pub e2: LVec3,
    pub e3: LVec3,
}

impl EuclidFrame {
    pub fn orthonormality_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        d = d.max((self.e1.dot_e(&self.e1) - 1.0).abs());
        d = d.max((self.e2.dot_e(&self.e2) - 1.0).abs());
        d = d.max((self.e3.dot_e(&self.e3) - 1.0).abs());
        d = d.max(self.e1.dot_e(&self.e2).abs());
        d = d.max(self.e1.dot_e(&self.e3).abs());
        d = d.max(self.e2.dot_e(&self.e3).abs());
        d
    }
}

/// Extend a future-pointing unit timelike e3 to a positively oriented
/// orthonormal frame. Deterministic: the seed axis is (1,0,0), switched to
/// (0,1,0) when the normalized Euclidean overlap with e3 exceeds 0.9.
pub fn complete_frame(e3: &LVec3) -> Result<Frame, LorentzError> {
    if (minkowski_inner(e3, e3) + 1.0).abs() > HYPERBOLOID_TOL {
        return Err(LorentzError::PreconditionViolated("e3 must be unit timelike"));
    }
    if e3.x3 <= 0.0 {
        return Err(LorentzError::PreconditionViolated("e3 must be future-pointing"));
    }
    let unit_e = e3.scale(1.0 / e3.euclid_norm());
    let seed = if unit_e.x1.abs() <= 0.9 {
        LVec3::new(1.0, 0.0, 0.0)
    } else {
        LVec3::new(0.0, 1.0, 0.0)
    };
    // remove the timelike component: ⟨a + ⟨a,e3⟩e3, e3⟩ = 0 since ⟨e3,e3⟩ = −1
    let a = seed.add(&e3.scale(minkowski_inner(&seed, e3)));
    let e1 = a.scale(1.0 / lorentz_norm(&a));
    let w = e3.cross_e(&e1).reflect_j();
    let mut e2 = w.scale(1.0 / lorentz_norm(&w));
    let mut frame = Frame { e1, e2, e3: *e3 };
    if frame.det() < 0.0 {
        e2 = -e2;
        frame.e2 = e2;
    }
    Ok(frame)
}

/// Euclidean companion triple: ẽ3 = −𝒥(e3)/‖e3‖_E, with {ẽ1, ẽ2} spanning
/// the same (spacelike) plane as {e1, e2}, Gram-Schmidt in the Euclidean metric.
pub fn euclid_companion(s: &Frame) -> EuclidFrame {
    let e1 = s.e1.scale(1.0 / s.e1.euclid_norm());
    let raw2 = s.e2.sub(&e1.scale(s.e2.dot_e(&e1)));
    let e2 = raw2.scale(1.0 / raw2.euclid_norm());
    let j = s.e3.reflect_j();
    let e3 = j.scale(-1.0 / s.e3.euclid_norm());
    EuclidFrame { e1, e2, e3 }
}

/// Coordinates of v in frame S: (⟨v,e1⟩, ⟨v,e2⟩, −⟨v,e3⟩).
pub fn coords_in_frame(v: &LVec3, s: &Frame) -> (f64, f64, f64) {
    (
        minkowski_inner(v, &s.e1),
        minkowski_inner(v, &s.e2),
        -minkowski_inner(v, &s.e3),
    )
}

pub fn from_frame_coords(c: (f64, f64, f64), s: &Frame) -> LVec3 {
    s.e1.scale(c.0).add(&s.e2.scale(c.1)).add(&s.e3.scale(c.2))
}

/// Euclidean coordinates of v in a Euclidean triple.
pub fn coords_in_euclid_frame(v: &LVec3, s: &EuclidFrame) -> (f64, f64, f64) {
    (v.dot_e(&s.e1), v.dot_e(&s.e2), v.dot_e(&s.e3))
}

/// Region-shrink test: for 0 < x < t, p ∈ B(t) and v Euclid-orthogonal to
/// N₀(p) with ‖v‖_E = x, decide whether p + v ∈ B(√(t² − x²)).
pub fn shrink_check(p: &LVec3, v: &LVec3, t: f64) -> Result<bool, LorentzError> {
    if t <= 0.0 {
        return Err(LorentzError::PreconditionViolated("t must be positive"));
    }
    if !Region::new(t).contains(p) {
        return Err(LorentzError::PreconditionViolated("p must lie in B(t)"));
    }
    let x = v.euclid_norm();
    if !(x > 0.0 && x < t) {
        return Err(LorentzError::PreconditionViolated("need 0 < ‖v‖_E < t"));
    }
    let (_, n0) = gauss_maps(p)?;
    if n0.dot_e(v).abs() > 1e-9 * x.max(1.0) {
        return Err(LorentzError::PreconditionViolated(
            "v must be Euclid-orthogonal to N0(p)",
        ));
    }
    let shrunk = Region::new((t * t - x * x).sqrt());
    Ok(shrunk.contains(&p.add(v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn vec_close(a: &LVec3, b: &LVec3, tol: f64) -> bool {
        close(a.x1, b.x1, tol) && close(a.x2, b.x2, tol) && close(a.x3, b.x3, tol)
    }

    #[test]
    fn inner_product_values() {
        let p = LVec3::new(1.0, 2.0, 2.0);
        assert_eq!(minkowski_inner(&p, &p), 1.0);
        assert_eq!(minkowski_inner(&LVec3::new(0.0, 0.0, 1.0), &LVec3::new(0.0, 0.0, 1.0)), -1.0);
    }

    #[test]
    fn inner_product_matches_reflected_euclid() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let u = LVec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let v = LVec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            assert!(close(minkowski_inner(&u, &v), u.dot_e(&v.reflect_j()), 1e-12));
        }
    }

    #[test]
    fn signed_norm_values() {
        assert_eq!(lorentz_norm(&LVec3::new(0.0, 0.0, 2.0)), -2.0);
        assert_eq!(lorentz_norm(&LVec3::new(3.0, 4.0, 0.0)), 5.0);
        assert_eq!(lorentz_norm(&LVec3::new(1.0, 0.0, 1.0)), 0.0);
    }

    #[test]
    fn causal_classification() {
        assert_eq!(LVec3::new(1.0, 0.0, 0.0).classify(), CausalClass::Spacelike);
        assert_eq!(LVec3::new(0.0, 0.0, 1.0).classify(), CausalClass::Timelike);
        assert_eq!(LVec3::new(1.0, 0.0, 1.0).classify(), CausalClass::Lightlike);
        assert_eq!(LVec3::zero().classify(), CausalClass::Spacelike);
    }

    #[test]
    fn region_membership() {
        // ‖p‖ = −√3 is not below −(√3 + 0.01)
        let p = LVec3::new(1.0, 0.0, -2.0);
        assert!(!Region::new(3.0f64.sqrt() + 0.01).contains(&p));
        assert!(Region::new(3.0f64.sqrt() - 0.01).contains(&p));
        // boundary is excluded
        assert!(!Region::new(1.0).contains(&LVec3::new(0.0, 0.0, -1.0)));
    }

    #[test]
    fn region_nesting() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let inner = Region::new(1.5);
        let outer = Region::new(1.0);
        for _ in 0..2000 {
            let p = LVec3::new(
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-6.0..0.0),
            );
            if inner.contains(&p) {
                assert!(outer.contains(&p));
            }
        }
    }

    #[test]
    fn hyperbolic_distance_values() {
        let base = LVec3::new(0.0, 0.0, 1.0);
        assert_eq!(hyperbolic_dist(&base, &base).unwrap(), 0.0);
        let q = LVec3::new(0.0, 1f64.sinh(), 1f64.cosh());
        assert!(close(hyperbolic_dist(&base, &q).unwrap(), 1.0, 1e-12));
        let lower = LVec3::new(0.0, 0.0, -1.0);
        assert_eq!(hyperbolic_dist(&base, &lower), Err(LorentzError::DifferentSheets));
    }

    #[test]
    fn stereo_values() {
        let p = LVec3::new(0.0, 1f64.sinh(), -(1f64.cosh()));
        let w = stereo(&p).unwrap().finite().unwrap();
        assert!(close(w.re, 0.0, 1e-12));
        assert!(close(w.im, 0.4621, 1e-4));
        assert_eq!(stereo(&LVec3::new(0.0, 0.0, 1.0)).unwrap(), StereoPoint::Infinity);
        assert_eq!(stereo_inv(StereoPoint::Infinity).unwrap(), LVec3::new(0.0, 0.0, 1.0));
        assert_eq!(
            stereo_inv(StereoPoint::Finite(Complex64::new(1.0, 0.0))),
            Err(LorentzError::OnUnitCircle)
        );
    }

    #[test]
    fn stereo_roundtrip_both_sheets() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1000 {
            let t: f64 = rng.gen_range(0.0..3.0);
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let p = LVec3::new(
                t.sinh() * th.cos(),
                t.sinh() * th.sin(),
                sign * t.cosh(),
            );
            let w = stereo(&p).unwrap();
            if let StereoPoint::Finite(w) = w {
                let upper = p.x3 > 0.0;
                assert_eq!(w.norm() > 1.0, upper, "sheet/chart mismatch at {p:?}");
            }
            let back = stereo_inv(w).unwrap();
            assert!(vec_close(&p, &back, 1e-9), "roundtrip failed: {p:?} vs {back:?}");
        }
    }

    #[test]
    fn gauss_map_values() {
        let p = LVec3::new(1.0, 0.0, -(2f64.sqrt()));
        let (n, n0) = gauss_maps(&p).unwrap();
        assert!(vec_close(&n, &LVec3::new(-1.0, 0.0, 2f64.sqrt()), 1e-12));
        let r3 = 3f64.sqrt();
        assert!(vec_close(&n0, &LVec3::new(1.0 / r3, 0.0, 2f64.sqrt() / r3), 1e-12));
        assert_eq!(gauss_maps(&LVec3::new(0.0, 0.0, 1.0)), Err(LorentzError::NotInB0));
        assert_eq!(gauss_maps(&LVec3::new(2.0, 0.0, -1.0)), Err(LorentzError::NotInB0));
    }

    #[test]
    fn gauss_maps_relation() {
        // N0(p) = −𝒥(N(p))/‖N(p)‖_E and N lands on the upper sheet
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..1000 {
            let rho: f64 = rng.gen_range(0.0..2.0);
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let depth: f64 = rng.gen_range(0.1..4.0);
            let p = LVec3::new(
                rho * th.cos(),
                rho * th.sin(),
                -(depth * depth + rho * rho).sqrt(),
            );
            let (n, n0) = gauss_maps(&p).unwrap();
            assert!(close(n.minkowski_sq(), -1.0, 1e-9));
            assert!(n.x3 > 0.0);
            let rel = n.reflect_j().scale(-1.0 / n.euclid_norm());
            assert!(vec_close(&n0, &rel, 1e-9));
            assert!(close(n0.euclid_norm(), 1.0, 1e-12));
        }
    }

    #[test]
    fn frame_completion_identity() {
        let f = complete_frame(&LVec3::new(0.0, 0.0, 1.0)).unwrap();
        assert!(vec_close(&f.e1, &LVec3::new(1.0, 0.0, 0.0), 1e-15));
        assert!(vec_close(&f.e2, &LVec3::new(0.0, 1.0, 0.0), 1e-15));
        assert!(f.is_valid(1e-12));
    }

    fn random_unit_timelike(rng: &mut ChaCha8Rng) -> LVec3 {
        let t: f64 = rng.gen_range(0.0..2.5);
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        LVec3::new(t.sinh() * th.cos(), t.sinh() * th.sin(), t.cosh())
    }

    #[test]
    fn frame_completion_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..1000 {
            let e3 = random_unit_timelike(&mut rng);
            let f = complete_frame(&e3).unwrap();
            assert!(
                f.orthonormality_defect() <= 1e-9,
                "defect {} for e3 {:?}",
                f.orthonormality_defect(),
                e3
            );
            assert!(f.det() > 0.0);
        }
    }

    #[test]
    fn euclid_companion_properties() {
        let id = euclid_companion(&Frame::identity());
        assert!(vec_close(&id.e3, &LVec3::new(0.0, 0.0, 1.0), 1e-15));
        assert!(id.orthonormality_defect() <= 1e-15);

        let e3 = LVec3::new(0.0, 1f64.sinh(), 1f64.cosh());
        let f = complete_frame(&e3).unwrap();
        let c = euclid_companion(&f);
        let scale = 1.0 / e3.euclid_norm();
        let expect = LVec3::new(0.0, -(1f64.sinh()) * scale, 1f64.cosh() * scale);
        assert!(vec_close(&c.e3, &expect, 1e-12));

        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..500 {
            let f = complete_frame(&random_unit_timelike(&mut rng)).unwrap();
            let c = euclid_companion(&f);
            assert!(c.orthonormality_defect() <= 1e-9);
            // companion normal is Euclid-orthogonal to the spacelike plane
            assert!(c.e3.dot_e(&f.e1).abs() <= 1e-9);
            assert!(c.e3.dot_e(&f.e2).abs() <= 1e-9);
            assert!(c.e3.dot_e(&f.e3) > 0.0);
        }
    }

    #[test]
    fn frame_coordinates_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let f = complete_frame(&random_unit_timelike(&mut rng)).unwrap();
            let v = LVec3::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let c = coords_in_frame(&v, &f);
            let back = from_frame_coords(c, &f);
            assert!(vec_close(&v, &back, 1e-9), "{v:?} vs {back:?}");
        }
    }

    #[test]
    fn shrink_check_example() {
        let p = LVec3::new(0.0, 0.0, -2.5);
        let v = LVec3::new(1.0, 0.0, 0.0);
        assert_eq!(shrink_check(&p, &v, 2.0), Ok(true));
        // x ≥ t violates the precondition
        assert!(shrink_check(&p, &LVec3::new(2.5, 0.0, 0.0), 2.0).is_err());
    }

    pub(crate) fn random_shrink_triple(rng: &mut ChaCha8Rng) -> (LVec3, LVec3, f64) {
        let t: f64 = rng.gen_range(0.5..3.0);
        let rho: f64 = rng.gen_range(0.0..2.0);
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let pad: f64 = rng.gen_range(0.01..2.0);
        let p = LVec3::new(
            rho * th.cos(),
            rho * th.sin(),
            -((t * t * (1.0 + pad) + rho * rho).sqrt()),
        );
        let (_, n0) = gauss_maps(&p).unwrap();
        // orthonormal basis of the plane Euclid-orthogonal to n0
        let seed = if n0.x1.abs() < 0.9 {
            LVec3::new(1.0, 0.0, 0.0)
        } else {
            LVec3::new(0.0, 1.0, 0.0)
        };
        let u1r = seed.sub(&n0.scale(seed.dot_e(&n0)));
        let u1 = u1r.scale(1.0 / u1r.euclid_norm());
        let u2 = n0.cross_e(&u1);
        let x: f64 = rng.gen_range(0.01..0.99) * t;
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let v = u1.scale(x * phi.cos()).add(&u2.scale(x * phi.sin()));
        (p, v, t)
    }

    #[test]
    fn shrink_check_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for i in 0..10_000 {
            let (p, v, t) = random_shrink_triple(&mut rng);
            assert_eq!(shrink_check(&p, &v, t), Ok(true), "failed at case {i}: {p:?} {v:?} t={t}");
        }
    }
}
