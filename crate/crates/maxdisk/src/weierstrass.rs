//! Conformal maximal immersions from a holomorphic coordinate triple.
//!
//! The primary object is the triple `Φ = (Φ1, Φ2, Φ3)` of closed-form
//! holomorphic functions with `Φ1² + Φ2² - Φ3² = 0`; the immersion is
//! `X(z) = base + Re ∫₀ᶻ Φ`. The classical pair `(g, f)` is derived on
//! demand through `A = Φ2 + iΦ1 = -f` and `B = Φ2 - iΦ1 = -g²f`, which also
//! makes the shear `g → g/e^w, f → f·e^w` a two-term rewrite that stays in
//! closed form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::holo::{HoloFn, MeroFn, Rat};
use crate::lorentz::{
    coords_in_frame, from_frame_coords, stereo_inv, Frame, LVec3, LorentzError, StereoPoint,
};

type C = Complex64;

fn ci(re: f64, im: f64) -> C {
    C::new(re, im)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WData {
    /// Coordinate differentials `Φ_k dz` of the immersion.
    pub phi: [HoloFn; 3],
    /// Immersion value at z = 0.
    pub base: LVec3,
}

impl WData {
    /// Horizontal flat disk: `g = 0, f = 1`, so `Φ = (i/2, -1/2, 0)`.
    pub fn flat_disk(base: LVec3) -> WData {
        WData {
            phi: [
                HoloFn::constant(ci(0.0, 0.5)),
                HoloFn::constant(ci(-0.5, 0.0)),
                HoloFn::zero(),
            ],
            base,
        }
    }

    /// Build the triple from a meromorphic-data pair, both holomorphic here:
    /// `Φ1 = (i/2)(1-g²)f, Φ2 = -(1/2)(1+g²)f, Φ3 = g f`.
    pub fn from_gf(g: &HoloFn, f: &HoloFn, base: LVec3) -> WData {
        let g2f = g.mul(g).mul(f);
        WData {
            phi: [
                f.sub(&g2f).scale(ci(0.0, 0.5)),
                f.add(&g2f).scale(ci(-0.5, 0.0)),
                g.mul(f),
            ],
            base,
        }
    }

    /// `A = Φ2 + iΦ1` (equals `-f`).
    fn a_fn(&self) -> HoloFn {
        self.phi[1].add(&self.phi[0].scale(ci(0.0, 1.0)))
    }

    /// `B = Φ2 - iΦ1` (equals `-g²f`).
    fn b_fn(&self) -> HoloFn {
        self.phi[1].sub(&self.phi[0].scale(ci(0.0, 1.0)))
    }

    /// The conformal weight function `f = -(Φ2 + iΦ1)`.
    pub fn f(&self) -> HoloFn {
        self.a_fn().neg()
    }

    /// Stereographic Gauss map `g = Φ3 / f` as a quotient.
    pub fn gauss(&self) -> MeroFn {
        MeroFn::new(self.phi[2].clone(), self.f())
    }

    /// Immersion along the straight chord from 0, valid when the chord
    /// avoids the poles of `Φ`.
    pub fn immerse(&self, z: C) -> LVec3 {
        self.immerse_via(&[ci(0.0, 0.0), z])
    }

    pub fn immerse_via(&self, path: &[C]) -> LVec3 {
        let i1 = self.phi[0].path_integral(path);
        let i2 = self.phi[1].path_integral(path);
        let i3 = self.phi[2].path_integral(path);
        self.base.add(&LVec3::new(i1.re, i2.re, i3.re))
    }

    /// Immerse whole rows of sample points, reusing the running integral
    /// along each row (0 → row[0] → row[1] → …).
    pub fn immerse_rows(&self, rows: &[Vec<C>]) -> Vec<Vec<LVec3>> {
        rows.iter()
            .map(|row| {
                let mut out = Vec::with_capacity(row.len());
                let mut acc = [ci(0.0, 0.0); 3];
                let mut prev = ci(0.0, 0.0);
                for &z in row {
                    for (k, a) in acc.iter_mut().enumerate() {
                        *a += self.phi[k].path_integral(&[prev, z]);
                    }
                    prev = z;
                    out.push(self.base.add(&LVec3::new(acc[0].re, acc[1].re, acc[2].re)));
                }
                out
            })
            .collect()
    }

    pub fn phi_at(&self, z: C) -> [C; 3] {
        [
            self.phi[0].eval(z),
            self.phi[1].eval(z),
            self.phi[2].eval(z),
        ]
    }

    /// Euclidean norm `‖Φ(z)‖` of the triple.
    pub fn phi_norm_e(&self, z: C) -> f64 {
        let p = self.phi_at(z);
        (p[0].norm_sqr() + p[1].norm_sqr() + p[2].norm_sqr()).sqrt()
    }

    /// Conformal factor of the induced (Lorentzian) metric:
    /// `λ² = (|Φ1|² + |Φ2|² - |Φ3|²)/2`, clamped at 0 against roundoff.
    pub fn lambda(&self, z: C) -> f64 {
        let p = self.phi_at(z);
        let q = p[0].norm_sqr() + p[1].norm_sqr() - p[2].norm_sqr();
        (q.max(0.0) / 2.0).sqrt()
    }

    /// Companion (Euclidean) conformal factor `λ⁰ = ‖Φ‖/√2`, an upper bound
    /// for `λ` that never degenerates.
    pub fn lambda0(&self, z: C) -> f64 {
        self.phi_norm_e(z) / 2f64.sqrt()
    }

    /// `((1-|g|²)/(1+|g|²))² ∈ [0, 1]`: 1 where the tangent plane is far
    /// from lightlike, 0 exactly at degeneracy. Computed from Φ alone.
    pub fn spacelike_margin(&self, z: C) -> f64 {
        let p = self.phi_at(z);
        let e = p[0].norm_sqr() + p[1].norm_sqr() + p[2].norm_sqr();
        if e == 0.0 {
            return 1.0;
        }
        let l = p[0].norm_sqr() + p[1].norm_sqr() - p[2].norm_sqr();
        // (1-|g|²)²/(1+|g|²)² = L/(E - |Φ3|²·0)… directly: L/( E + |Φ3|²·0 )
        // with L = ½|f|²(1-|g|²)², E = ½|f|²(1+|g|²)² + … see below.
        // E here is |Φ1|²+|Φ2|²+|Φ3|² = ½|f|²(1+|g|²)², so the ratio is exact.
        (l / e).max(0.0)
    }

    /// Unit normal via the Gauss map (on the lower sheet for `|g| < 1`).
    pub fn normal_at(&self, z: C) -> Result<LVec3, LorentzError> {
        let w = self.gauss().eval_proj(z);
        stereo_inv(w)
    }

    pub fn gauss_at(&self, z: C) -> StereoPoint {
        self.gauss().eval_proj(z)
    }

    /// Sup over the samples of `|Φ1² + Φ2² - Φ3²| / ‖Φ‖²` — the conformality
    /// defect, which should sit at quadrature-noise level.
    pub fn conformality_residual<I: IntoIterator<Item = C>>(&self, points: I) -> f64 {
        let mut worst = 0.0f64;
        for z in points {
            let p = self.phi_at(z);
            let num = (p[0] * p[0] + p[1] * p[1] - p[2] * p[2]).norm();
            let den = p[0].norm_sqr() + p[1].norm_sqr() + p[2].norm_sqr();
            if den > 0.0 {
                worst = worst.max(num / den);
            }
        }
        worst
    }

    /// `|∮ Φ|` around a closed polyline — zero for honest exact differentials.
    pub fn period_residual(&self, closed_path: &[C]) -> f64 {
        let mut s = 0.0f64;
        for phi in &self.phi {
            s = s.max(phi.path_integral(closed_path).norm());
        }
        s
    }

    /// Shear `g → g e^{-w}, f → f e^{w}` (third coordinate untouched):
    /// `Ã = A e^w, B̃ = B e^{-w}` and the triple is rebuilt from those.
    pub fn lopez_ros(&self, w: &Rat) -> WData {
        let ah = self.a_fn().mul_exp(w);
        let bh = self.b_fn().mul_exp(&w.scale(ci(-1.0, 0.0)));
        WData {
            phi: [
                ah.sub(&bh).scale(ci(0.0, -0.5)),
                ah.add(&bh).scale(ci(0.5, 0.0)),
                self.phi[2].clone(),
            ],
            base: self.base,
        }
    }

    /// Rewrite the triple (and base) in the coordinates of an orthonormal
    /// frame; `immerse` on the result produces frame coordinates.
    pub fn rotate_to_frame(&self, fr: &Frame) -> WData {
        let combine = |v1: f64, v2: f64, v3: f64| -> HoloFn {
            self.phi[0]
                .scale(ci(v1, 0.0))
                .add(&self.phi[1].scale(ci(v2, 0.0)))
                .add(&self.phi[2].scale(ci(v3, 0.0)))
        };
        // Minkowski coordinates: x'_k = ⟨v, e_k⟩, with the sign flip on e3
        let p1 = combine(fr.e1.x1, fr.e1.x2, -fr.e1.x3);
        let p2 = combine(fr.e2.x1, fr.e2.x2, -fr.e2.x3);
        let p3 = combine(-fr.e3.x1, -fr.e3.x2, fr.e3.x3);
        let (b1, b2, b3) = coords_in_frame(&self.base, fr);
        WData {
            phi: [p1, p2, p3],
            base: LVec3::new(b1, b2, b3),
        }
    }

    /// Inverse of `rotate_to_frame`: interpret the triple as frame
    /// coordinates and push back to ambient coordinates.
    pub fn rotate_from_frame(&self, fr: &Frame) -> WData {
        let component = |j: usize| -> HoloFn {
            let pick = |v: &LVec3| match j {
                0 => v.x1,
                1 => v.x2,
                _ => v.x3,
            };
            self.phi[0]
                .scale(ci(pick(&fr.e1), 0.0))
                .add(&self.phi[1].scale(ci(pick(&fr.e2), 0.0)))
                .add(&self.phi[2].scale(ci(pick(&fr.e3), 0.0)))
        };
        let base = from_frame_coords((self.base.x1, self.base.x2, self.base.x3), fr);
        WData {
            phi: [component(0), component(1), component(2)],
            base,
        }
    }

    /// Companion Euclidean-minimal triple with the same `(g, f)`:
    /// `ψ1 = (B-A)/2, ψ2 = -(i/2)(A+B), ψ3 = Φ3`. Its induced conformal
    /// factor equals `λ⁰`.
    pub fn min_twin(&self) -> [HoloFn; 3] {
        let a = self.a_fn();
        let b = self.b_fn();
        [
            b.sub(&a).scale(ci(0.5, 0.0)),
            a.add(&b).scale(ci(0.0, -0.5)),
            self.phi[2].clone(),
        ]
    }

    pub fn term_counts(&self) -> [usize; 3] {
        [
            self.phi[0].term_count(),
            self.phi[1].term_count(),
            self.phi[2].term_count(),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_disk_immersion_values() {
        let d = WData::flat_disk(LVec3::new(0.0, 0.0, -2.0));
        let p = d.immerse(ci(2.0, 0.0));
        assert!((p.x1 - 0.0).abs() < 1e-13);
        assert!((p.x2 + 1.0).abs() < 1e-13);
        assert!((p.x3 + 2.0).abs() < 1e-13);
        let q = d.immerse(ci(0.0, 2.0));
        assert!((q.x1 + 1.0).abs() < 1e-13);
        assert!((q.x2 - 0.0).abs() < 1e-13);
        assert!((q.x3 + 2.0).abs() < 1e-13);
    }

    #[test]
    fn flat_disk_factors_and_normal() {
        let d = WData::flat_disk(LVec3::new(0.0, 0.0, 0.0));
        let z = ci(0.3, -0.4);
        assert!((d.lambda(z) - 0.5).abs() < 1e-14);
        assert!((d.lambda0(z) - 0.5).abs() < 1e-14);
        assert!((d.spacelike_margin(z) - 1.0).abs() < 1e-14);
        let n = d.normal_at(z).unwrap();
        assert!((n.x1, n.x2, n.x3) == (0.0, 0.0, -1.0) || (n.x1.abs() + n.x2.abs()) < 1e-14);
    }

    #[test]
    fn gf_roundtrip() {
        let g = HoloFn::monomial(ci(0.5, 0.0), 1); // g = z/2
        let f = HoloFn::constant(ci(1.0, 0.0)).add(&HoloFn::monomial(ci(0.0, 0.3), 2));
        let d = WData::from_gf(&g, &f, LVec3::new(0.0, 0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let fd = d.f();
        let gd = d.gauss();
        for _ in 0..20 {
            let z = ci(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            assert!((fd.eval(z) - f.eval(z)).norm() < 1e-12);
            if f.eval(z).norm() > 1e-3 {
                assert!((gd.eval(z) - g.eval(z)).norm() < 1e-10);
            }
            // conformality is an algebraic identity of the construction
            let p = d.phi_at(z);
            assert!((p[0] * p[0] + p[1] * p[1] - p[2] * p[2]).norm() < 1e-12);
        }
        assert!(d.conformality_residual((0..10).map(|k| ci(0.1 * k as f64, 0.05))) < 1e-12);
    }

    #[test]
    fn degeneracy_at_unit_gauss_modulus() {
        // g = z, f = 1: tangent plane goes lightlike exactly on |z| = 1
        let d = WData::from_gf(
            &HoloFn::monomial(ci(1.0, 0.0), 1),
            &HoloFn::constant(ci(1.0, 0.0)),
            LVec3::new(0.0, 0.0, 0.0),
        );
        assert!((d.spacelike_margin(ci(0.0, 0.0)) - 1.0).abs() < 1e-14);
        assert!(d.lambda(ci(1.0, 0.0)) < 1e-12);
        assert!(d.spacelike_margin(ci(0.0, 1.0)) < 1e-12);
        // λ⁰ stays healthy there
        assert!(d.lambda0(ci(1.0, 0.0)) > 0.7);
    }

    #[test]
    fn lopez_ros_constant_shear() {
        let g = HoloFn::monomial(ci(0.4, 0.0), 1);
        let f = HoloFn::constant(ci(1.0, 0.0));
        let d = WData::from_gf(&g, &f, LVec3::new(0.0, 0.0, 0.0));
        let w = Rat::constant(ci(0.7, 0.2));
        let dd = d.lopez_ros(&w);
        let h = ci(0.7, 0.2).exp();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..15 {
            let z = ci(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            // f̃ = f h, g̃ = g / h
            assert!((dd.f().eval(z) - f.eval(z) * h).norm() < 1e-11);
            assert!((dd.gauss().eval(z) - g.eval(z) / h).norm() < 1e-9);
            // third coordinate differential untouched
            assert!((dd.phi[2].eval(z) - d.phi[2].eval(z)).norm() < 1e-12);
            // conformality survives the shear
            let p = dd.phi_at(z);
            assert!((p[0] * p[0] + p[1] * p[1] - p[2] * p[2]).norm() < 1e-11);
        }
    }

    #[test]
    fn lopez_ros_linear_exponent_preserves_height() {
        let d = WData::flat_disk(LVec3::new(0.0, 0.0, -1.0));
        let w = Rat::monomial(ci(0.8, -0.3), 1);
        let dd = d.lopez_ros(&w);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..10 {
            let z = ci(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9));
            let x = d.immerse(z);
            let y = dd.immerse(z);
            assert!((x.x3 - y.x3).abs() < 1e-11, "x3 must be preserved");
            let p = dd.phi_at(z);
            assert!((p[0] * p[0] + p[1] * p[1] - p[2] * p[2]).norm() < 1e-10);
        }
        // the planar part genuinely moved
        assert!((d.immerse(ci(0.5, 0.0)).x1 - dd.immerse(ci(0.5, 0.0)).x1).abs() > 1e-3
            || (d.immerse(ci(0.5, 0.0)).x2 - dd.immerse(ci(0.5, 0.0)).x2).abs() > 1e-3);
    }

    #[test]
    fn frame_rotation_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let g = HoloFn::monomial(ci(0.3, 0.1), 1);
        let f = HoloFn::constant(ci(1.0, -0.2));
        let d = WData::from_gf(&g, &f, LVec3::new(0.2, -0.1, -1.5));
        for _ in 0..10 {
            let t: f64 = rng.gen_range(0.0..1.5);
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let e3 = LVec3::new(t.sinh() * th.cos(), t.sinh() * th.sin(), t.cosh());
            let fr = crate::lorentz::complete_frame(&e3).unwrap();
            let rot = d.rotate_to_frame(&fr);
            let back = rot.rotate_from_frame(&fr);
            let z = ci(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8));
            for k in 0..3 {
                assert!((back.phi[k].eval(z) - d.phi[k].eval(z)).norm() < 1e-11);
            }
            // immersion in frame coordinates agrees with re-expressing the
            // ambient immersion in that frame
            let amb = d.immerse(z);
            let (c1, c2, c3) = coords_in_frame(&amb, &fr);
            let rotated = rot.immerse(z);
            assert!((rotated.x1 - c1).abs() < 1e-10);
            assert!((rotated.x2 - c2).abs() < 1e-10);
            assert!((rotated.x3 - c3).abs() < 1e-10);
            // λ is a Lorentz invariant; conformality survives rotation
            assert!((rot.lambda(z) - d.lambda(z)).abs() < 1e-11);
            let p = rot.phi_at(z);
            assert!((p[0] * p[0] + p[1] * p[1] - p[2] * p[2]).norm() < 1e-11);
        }
    }

    #[test]
    fn min_twin_matches_euclidean_factor() {
        let g = HoloFn::monomial(ci(0.6, 0.0), 1);
        let f = HoloFn::constant(ci(1.0, 0.0));
        let d = WData::from_gf(&g, &f, LVec3::new(0.0, 0.0, 0.0));
        let twin = d.min_twin();
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        for _ in 0..10 {
            let z = ci(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let e: f64 = twin.iter().map(|p| p.eval(z).norm_sqr()).sum();
            // ψ is conformal in the Euclidean sense: ψ1²+ψ2²+ψ3² = 0
            let s = twin[0].eval(z) * twin[0].eval(z)
                + twin[1].eval(z) * twin[1].eval(z)
                + twin[2].eval(z) * twin[2].eval(z);
            assert!(s.norm() < 1e-12);
            assert!(((e / 2.0).sqrt() - d.lambda0(z)).abs() < 1e-12);
        }
    }

    #[test]
    fn period_residual_vanishes_on_loops() {
        let g = HoloFn::monomial(ci(0.5, 0.2), 2);
        let f = HoloFn::constant(ci(1.0, 0.0)).add(&HoloFn::monomial(ci(-0.3, 0.0), 1));
        let d = WData::from_gf(&g, &f, LVec3::new(0.0, 0.0, 0.0));
        let square = [
            ci(0.5, -0.5),
            ci(0.5, 0.5),
            ci(-0.5, 0.5),
            ci(-0.5, -0.5),
            ci(0.5, -0.5),
        ];
        assert!(d.period_residual(&square) < 1e-12);
    }

    #[test]
    fn immerse_rows_consistent_with_chords() {
        let g = HoloFn::monomial(ci(0.3, 0.0), 1);
        let f = HoloFn::constant(ci(1.0, 0.0));
        let d = WData::from_gf(&g, &f, LVec3::new(0.0, 0.0, -1.0));
        let rows: Vec<Vec<C>> = (0..4)
            .map(|i| {
                (0..6)
                    .map(|j| ci(-0.5 + 0.2 * j as f64, -0.3 + 0.2 * i as f64))
                    .collect()
            })
            .collect();
        let grid = d.immerse_rows(&rows);
        for (i, row) in rows.iter().enumerate() {
            for (j, &z) in row.iter().enumerate() {
                let direct = d.immerse(z);
                let got = grid[i][j];
                assert!(direct.sub(&got).euclid_norm() < 1e-11);
            }
        }
    }
}
