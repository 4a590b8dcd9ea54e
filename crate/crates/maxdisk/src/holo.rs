//! Closed-form holomorphic function algebra.
//!
//! Every function here is a finite sum of terms `R(z) · exp(W(z))` where `R`
//! and `W` are rational functions kept in partial-fraction form. The class is
//! closed under addition, multiplication, differentiation, and `exp` of a
//! rational function, which is exactly what the deformation pipeline needs:
//! products re-expand into partial fractions *exactly*, so evaluation never
//! loses the pole structure.
//!
//! Path integrals use adaptive 16-point Gauss–Legendre panels refined to a
//! relative tolerance of 1e-12 (depth cap 20).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

type C = Complex64;

fn czero() -> C {
    C::new(0.0, 0.0)
}

/// Principal part at one pole: `Σ_m coeffs[m] / (z - loc)^(m+1)`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PoleTerm {
    pub loc: C,
    pub coeffs: Vec<C>,
}

/// Rational function in partial-fraction form: a polynomial plus principal
/// parts. The representation is canonical once `normalize` merges duplicate
/// pole locations and trims zero coefficients.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct Rat {
    /// Polynomial part, `poly[k]` the coefficient of `z^k`.
    pub poly: Vec<C>,
    pub poles: Vec<PoleTerm>,
}

fn poly_eval(p: &[C], z: C) -> C {
    let mut acc = czero();
    for &c in p.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

fn poly_add_scaled(dst: &mut Vec<C>, src: &[C], s: C) {
    if dst.len() < src.len() {
        dst.resize(src.len(), czero());
    }
    for (d, &c) in dst.iter_mut().zip(src.iter()) {
        *d += c * s;
    }
}

fn poly_mul(a: &[C], b: &[C]) -> Vec<C> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![czero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_deriv(p: &[C]) -> Vec<C> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

/// Coefficients of `p` re-expanded around `a`: `p(z) = Σ_j out[j] (z-a)^j`.
/// Repeated synthetic division; O(n²) and numerically tame.
fn taylor_shift(p: &[C], a: C) -> Vec<C> {
    let mut c = p.to_vec();
    let n = c.len();
    for j in 0..n {
        for i in (j..n.saturating_sub(1)).rev() {
            let add = c[i + 1] * a;
            c[i] += add;
        }
    }
    c
}

fn binom(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

impl Rat {
    pub fn zero() -> Rat {
        Rat::default()
    }

    pub fn constant(c: C) -> Rat {
        Rat {
            poly: vec![c],
            poles: Vec::new(),
        }
    }

    pub fn monomial(coeff: C, degree: usize) -> Rat {
        let mut poly = vec![czero(); degree + 1];
        poly[degree] = coeff;
        Rat {
            poly,
            poles: Vec::new(),
        }
    }

    /// `coeff / (z - loc)^order`, order ≥ 1.
    pub fn single_pole(loc: C, order: usize, coeff: C) -> Rat {
        assert!(order >= 1);
        let mut coeffs = vec![czero(); order];
        coeffs[order - 1] = coeff;
        Rat {
            poly: Vec::new(),
            poles: vec![PoleTerm { loc, coeffs }],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.poly.iter().all(|c| c.norm() == 0.0)
            && self
                .poles
                .iter()
                .all(|p| p.coeffs.iter().all(|c| c.norm() == 0.0))
    }

    pub fn max_coeff(&self) -> f64 {
        let mut m = 0.0f64;
        for c in &self.poly {
            m = m.max(c.norm());
        }
        for p in &self.poles {
            for c in &p.coeffs {
                m = m.max(c.norm());
            }
        }
        m
    }

    pub fn eval(&self, z: C) -> C {
        let mut acc = poly_eval(&self.poly, z);
        for p in &self.poles {
            let inv = 1.0 / (z - p.loc);
            // Horner in 1/(z-loc), highest order first
            let mut s = czero();
            for &c in p.coeffs.iter().rev() {
                s = (s + c) * inv;
            }
            acc += s;
        }
        acc
    }

    pub fn deriv(&self) -> Rat {
        let poles = self
            .poles
            .iter()
            .map(|p| {
                let mut coeffs = vec![czero(); p.coeffs.len() + 1];
                for (m, &c) in p.coeffs.iter().enumerate() {
                    // c/(z-a)^{m+1} differentiates to -(m+1)c/(z-a)^{m+2}
                    coeffs[m + 1] = -c * (m as f64 + 1.0);
                }
                PoleTerm {
                    loc: p.loc,
                    coeffs,
                }
            })
            .collect();
        Rat {
            poly: poly_deriv(&self.poly),
            poles,
        }
    }

    pub fn scale(&self, s: C) -> Rat {
        Rat {
            poly: self.poly.iter().map(|&c| c * s).collect(),
            poles: self
                .poles
                .iter()
                .map(|p| PoleTerm {
                    loc: p.loc,
                    coeffs: p.coeffs.iter().map(|&c| c * s).collect(),
                })
                .collect(),
        }
    }

    pub fn add(&self, other: &Rat) -> Rat {
        let mut out = self.clone();
        poly_add_scaled(&mut out.poly, &other.poly, C::new(1.0, 0.0));
        out.poles.extend(other.poles.iter().cloned());
        out.normalize();
        out
    }

    pub fn sub(&self, other: &Rat) -> Rat {
        self.add(&other.scale(C::new(-1.0, 0.0)))
    }

    fn pole_merge_tol(loc: C) -> f64 {
        1e-12 * (1.0 + loc.norm())
    }

    /// Merge coincident pole locations, trim exactly-zero tails, drop empty
    /// principal parts, and order poles deterministically.
    pub fn normalize(&mut self) {
        while self.poly.last().map_or(false, |c| c.norm() == 0.0) {
            self.poly.pop();
        }
        let mut merged: Vec<PoleTerm> = Vec::with_capacity(self.poles.len());
        for p in self.poles.drain(..) {
            match merged
                .iter_mut()
                .find(|q| (q.loc - p.loc).norm() <= Rat::pole_merge_tol(p.loc))
            {
                Some(q) => {
                    if q.coeffs.len() < p.coeffs.len() {
                        q.coeffs.resize(p.coeffs.len(), czero());
                    }
                    for (d, &c) in q.coeffs.iter_mut().zip(p.coeffs.iter()) {
                        *d += c;
                    }
                }
                None => merged.push(p),
            }
        }
        for q in &mut merged {
            while q.coeffs.last().map_or(false, |c| c.norm() == 0.0) {
                q.coeffs.pop();
            }
        }
        merged.retain(|q| !q.coeffs.is_empty());
        merged.sort_by(|a, b| {
            a.loc
                .re
                .partial_cmp(&b.loc.re)
                .unwrap()
                .then(a.loc.im.partial_cmp(&b.loc.im).unwrap())
        });
        self.poles = merged;
    }

    /// Exact product: partial fractions are re-expanded, never left as a
    /// quotient. Poly×pole uses a Taylor shift around the pole; pole×pole at
    /// distinct locations uses the binomial partial-fraction identity.
    pub fn mul(&self, other: &Rat) -> Rat {
        let mut out = Rat::zero();
        out.poly = poly_mul(&self.poly, &other.poly);
        for (poly, poles) in [(&self.poly, &other.poles), (&other.poly, &self.poles)] {
            if poly.is_empty() {
                continue;
            }
            for pt in poles.iter() {
                accumulate_poly_times_pole(&mut out, poly, pt);
            }
        }
        for pa in &self.poles {
            for pb in &other.poles {
                if (pa.loc - pb.loc).norm() <= Rat::pole_merge_tol(pa.loc) {
                    accumulate_same_loc_product(&mut out, pa, pb);
                } else {
                    accumulate_cross_pole_product(&mut out, pa, pb);
                }
            }
        }
        out.normalize();
        out
    }

    pub fn pole_locs(&self) -> Vec<C> {
        self.poles.iter().map(|p| p.loc).collect()
    }
}

fn accumulate_poly_times_pole(out: &mut Rat, poly: &[C], pt: &PoleTerm) {
    let d = taylor_shift(poly, pt.loc); // poly(z) = Σ_j d[j] (z-loc)^j
    for (m, &cm) in pt.coeffs.iter().enumerate() {
        if cm.norm() == 0.0 {
            continue;
        }
        // cm · poly(z) / (z-loc)^{m+1}
        let mut principal = vec![czero(); m + 1];
        for (j, &dj) in d.iter().enumerate().take(m + 1) {
            // d[j] (z-loc)^{j-m-1} → order m+1-j, coeffs index m-j
            principal[m - j] = dj * cm;
        }
        out.poles.push(PoleTerm {
            loc: pt.loc,
            coeffs: principal,
        });
        if d.len() > m + 1 {
            let shifted: Vec<C> = d[m + 1..].iter().map(|&c| c * cm).collect();
            // polynomial in (z-loc); re-expand around the origin
            let back = taylor_shift(&shifted, -pt.loc);
            poly_add_scaled(&mut out.poly, &back, C::new(1.0, 0.0));
        }
    }
}

fn accumulate_same_loc_product(out: &mut Rat, pa: &PoleTerm, pb: &PoleTerm) {
    let mut coeffs = vec![czero(); pa.coeffs.len() + pb.coeffs.len()];
    for (m, &cm) in pa.coeffs.iter().enumerate() {
        for (k, &ek) in pb.coeffs.iter().enumerate() {
            // u^{-(m+1)} u^{-(k+1)} = u^{-(m+k+2)}
            coeffs[m + k + 1] += cm * ek;
        }
    }
    out.poles.push(PoleTerm {
        loc: pa.loc,
        coeffs,
    });
}

fn accumulate_cross_pole_product(out: &mut Rat, pa: &PoleTerm, pb: &PoleTerm) {
    let dab = pa.loc - pb.loc;
    let mut ca = vec![czero(); pa.coeffs.len()];
    let mut cb = vec![czero(); pb.coeffs.len()];
    for (m, &cm) in pa.coeffs.iter().enumerate() {
        for (k, &ek) in pb.coeffs.iter().enumerate() {
            if cm.norm() == 0.0 || ek.norm() == 0.0 {
                continue;
            }
            let big_m = m + 1;
            let big_k = k + 1;
            let c = cm * ek;
            // 1/((z-a)^M (z-b)^K) = Σ_t (-1)^t C(K-1+t,t)/(a-b)^{K+t} (z-a)^{-(M-t)}
            //                     + Σ_s (-1)^s C(M-1+s,s)/(b-a)^{M+s} (z-b)^{-(K-s)}
            let mut apow = dab.powi(big_k as i32);
            for t in 0..big_m {
                let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
                ca[big_m - t - 1] += c * sign * binom(big_k - 1 + t, t) / apow;
                apow *= dab;
            }
            let mut bpow = (-dab).powi(big_m as i32);
            for s in 0..big_k {
                let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
                cb[big_k - s - 1] += c * sign * binom(big_m - 1 + s, s) / bpow;
                bpow *= -dab;
            }
        }
    }
    out.poles.push(PoleTerm {
        loc: pa.loc,
        coeffs: ca,
    });
    out.poles.push(PoleTerm {
        loc: pb.loc,
        coeffs: cb,
    });
}

/// One summand `rat(z) · exp(exp_arg(z))`; `exp_arg = None` means no
/// exponential factor.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Term {
    pub rat: Rat,
    pub exp_arg: Option<Rat>,
}

impl Term {
    fn eval(&self, z: C) -> C {
        let base = self.rat.eval(z);
        match &self.exp_arg {
            Some(w) => base * w.eval(z).exp(),
            None => base,
        }
    }

    fn deriv(&self) -> Term {
        let mut r = self.rat.deriv();
        if let Some(w) = &self.exp_arg {
            r = r.add(&self.rat.mul(&w.deriv()));
        }
        Term {
            rat: r,
            exp_arg: self.exp_arg.clone(),
        }
    }
}

fn rat_approx_eq(a: &Rat, b: &Rat) -> bool {
    let scale = a.max_coeff().max(b.max_coeff()).max(1.0);
    let tol = 1e-10 * scale;
    if a.poly.len() != b.poly.len() || a.poles.len() != b.poles.len() {
        return false;
    }
    for (x, y) in a.poly.iter().zip(b.poly.iter()) {
        if (x - y).norm() > tol {
            return false;
        }
    }
    for (p, q) in a.poles.iter().zip(b.poles.iter()) {
        if (p.loc - q.loc).norm() > Rat::pole_merge_tol(p.loc) || p.coeffs.len() != q.coeffs.len() {
            return false;
        }
        for (x, y) in p.coeffs.iter().zip(q.coeffs.iter()) {
            if (x - y).norm() > tol {
                return false;
            }
        }
    }
    true
}

/// Finite sum of `rational · exp(rational)` terms.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct HoloFn {
    pub terms: Vec<Term>,
}

impl HoloFn {
    pub fn zero() -> HoloFn {
        HoloFn::default()
    }

    pub fn constant(c: C) -> HoloFn {
        HoloFn::from_rat(Rat::constant(c))
    }

    pub fn monomial(coeff: C, degree: usize) -> HoloFn {
        HoloFn::from_rat(Rat::monomial(coeff, degree))
    }

    pub fn from_rat(rat: Rat) -> HoloFn {
        HoloFn {
            terms: vec![Term {
                rat,
                exp_arg: None,
            }],
        }
    }

    /// `exp(w)` for rational `w`.
    pub fn exp_of(w: Rat) -> HoloFn {
        let mut f = HoloFn {
            terms: vec![Term {
                rat: Rat::constant(C::new(1.0, 0.0)),
                exp_arg: Some(w),
            }],
        };
        f.normalize();
        f
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.rat.is_zero())
    }

    pub fn eval(&self, z: C) -> C {
        self.terms.iter().map(|t| t.eval(z)).sum()
    }

    pub fn deriv(&self) -> HoloFn {
        let mut f = HoloFn {
            terms: self.terms.iter().map(Term::deriv).collect(),
        };
        f.normalize();
        f
    }

    pub fn scale(&self, s: C) -> HoloFn {
        let mut f = HoloFn {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    rat: t.rat.scale(s),
                    exp_arg: t.exp_arg.clone(),
                })
                .collect(),
        };
        f.normalize();
        f
    }

    pub fn neg(&self) -> HoloFn {
        self.scale(C::new(-1.0, 0.0))
    }

    pub fn add(&self, other: &HoloFn) -> HoloFn {
        let mut f = HoloFn {
            terms: self
                .terms
                .iter()
                .chain(other.terms.iter())
                .cloned()
                .collect(),
        };
        f.normalize();
        f
    }

    pub fn sub(&self, other: &HoloFn) -> HoloFn {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &HoloFn) -> HoloFn {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for ta in &self.terms {
            for tb in &other.terms {
                let exp_arg = match (&ta.exp_arg, &tb.exp_arg) {
                    (None, None) => None,
                    (Some(w), None) | (None, Some(w)) => Some(w.clone()),
                    (Some(w), Some(v)) => Some(w.add(v)),
                };
                terms.push(Term {
                    rat: ta.rat.mul(&tb.rat),
                    exp_arg,
                });
            }
        }
        let mut f = HoloFn { terms };
        f.normalize();
        f
    }

    /// Multiply by `exp(w)`; cheap because only the exponent shifts.
    pub fn mul_exp(&self, w: &Rat) -> HoloFn {
        let mut f = HoloFn {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    rat: t.rat.clone(),
                    exp_arg: Some(match &t.exp_arg {
                        Some(v) => v.add(w),
                        None => w.clone(),
                    }),
                })
                .collect(),
        };
        f.normalize();
        f
    }

    /// Canonical form: constants move out of exponents, zero exponents drop
    /// to plain rational terms, structurally equal exponents merge, and
    /// exactly-zero terms disappear.
    pub fn normalize(&mut self) {
        for t in &mut self.terms {
            t.rat.normalize();
            let mut drop_exp = false;
            if let Some(w) = &mut t.exp_arg {
                w.normalize();
                if let Some(c0) = w.poly.first().copied() {
                    // fold e^{c0} into the rational factor when safe
                    if c0.re.abs() < 200.0 {
                        t.rat = t.rat.scale(c0.exp());
                        w.poly[0] = czero();
                        w.normalize();
                    }
                }
                if w.is_zero() {
                    drop_exp = true;
                }
            }
            if drop_exp {
                t.exp_arg = None;
            }
        }
        let mut merged: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            let slot = merged.iter_mut().find(|m| match (&m.exp_arg, &t.exp_arg) {
                (None, None) => true,
                (Some(a), Some(b)) => rat_approx_eq(a, b),
                _ => false,
            });
            match slot {
                Some(m) => m.rat = m.rat.add(&t.rat),
                None => merged.push(t),
            }
        }
        merged.retain(|t| !t.rat.is_zero());
        self.terms = merged;
    }

    /// Union of pole locations across rational parts and exponents.
    pub fn pole_locs(&self) -> Vec<C> {
        let mut locs: Vec<C> = Vec::new();
        for t in &self.terms {
            for loc in t
                .rat
                .pole_locs()
                .into_iter()
                .chain(t.exp_arg.iter().flat_map(|w| w.pole_locs()))
            {
                if !locs
                    .iter()
                    .any(|&l| (l - loc).norm() <= Rat::pole_merge_tol(loc))
                {
                    locs.push(loc);
                }
            }
        }
        locs
    }

    /// Minimum clearance between a polyline and any pole of this function.
    pub fn path_pole_clearance(&self, path: &[C]) -> f64 {
        let locs = self.pole_locs();
        if locs.is_empty() {
            return f64::INFINITY;
        }
        let mut d = f64::INFINITY;
        for w in path.windows(2) {
            for &loc in &locs {
                d = d.min(crate::polygon::seg_point_dist(w[0], w[1], loc));
            }
        }
        d
    }

    /// `∫ f dz` along the polyline, adaptive Gauss–Legendre.
    pub fn path_integral(&self, path: &[C]) -> C {
        self.path_integral_with_err(path).0
    }

    pub fn path_integral_with_err(&self, path: &[C]) -> (C, f64) {
        let mut total = czero();
        let mut err = 0.0f64;
        for w in path.windows(2) {
            let (v, e) = adaptive_segment(self, w[0], w[1], 0);
            total += v;
            err += e;
        }
        (total, err)
    }

    pub fn min_modulus_on<I: IntoIterator<Item = C>>(&self, points: I) -> f64 {
        points
            .into_iter()
            .map(|z| self.eval(z).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_modulus_on<I: IntoIterator<Item = C>>(&self, points: I) -> f64 {
        points
            .into_iter()
            .map(|z| self.eval(z).norm())
            .fold(0.0, f64::max)
    }
}

// 16-point Gauss–Legendre nodes (positive half) and weights on [-1, 1].
const GL_X: [f64; 8] = [
    0.095_012_509_837_637_440_185,
    0.281_603_550_779_258_913_230,
    0.458_016_777_657_227_386_342,
    0.617_876_244_402_643_748_447,
    0.755_404_408_355_003_033_895,
    0.865_631_202_387_831_743_880,
    0.944_575_023_073_232_576_078,
    0.989_400_934_991_649_932_596,
];
const GL_W: [f64; 8] = [
    0.189_450_610_455_068_496_285,
    0.182_603_415_044_923_588_867,
    0.169_156_519_395_002_538_189,
    0.149_595_988_816_576_732_081,
    0.124_628_971_255_533_872_052,
    0.095_158_511_682_492_784_810,
    0.062_253_523_938_647_892_863,
    0.027_152_459_411_754_094_852,
];

fn gl16(f: &HoloFn, a: C, b: C) -> (C, f64) {
    let mid = (a + b) * 0.5;
    let half = (b - a) * 0.5;
    let mut s = czero();
    let mut fmax = 0.0f64;
    for i in 0..8 {
        for sign in [-1.0, 1.0] {
            let v = f.eval(mid + half * (GL_X[i] * sign));
            fmax = fmax.max(v.norm());
            s += v * GL_W[i];
        }
    }
    (s * half, fmax)
}

const GL_REL_TOL: f64 = 1e-12;
const GL_MAX_DEPTH: usize = 20;

fn adaptive_segment(f: &HoloFn, a: C, b: C, depth: usize) -> (C, f64) {
    let (coarse, fmax) = gl16(f, a, b);
    let mid = (a + b) * 0.5;
    let (l, lm) = gl16(f, a, mid);
    let (r, rm) = gl16(f, mid, b);
    let fine = l + r;
    let diff = (coarse - fine).norm();
    let scale = fmax.max(lm).max(rm) * (b - a).norm();
    if diff <= GL_REL_TOL * fine.norm().max(1e-3 * scale) || depth >= GL_MAX_DEPTH {
        return (fine, diff);
    }
    let (lv, le) = adaptive_segment(f, a, mid, depth + 1);
    let (rv, re) = adaptive_segment(f, mid, b, depth + 1);
    (lv + rv, le + re)
}

/// Meromorphic quotient of two closed-form functions; the pipeline's Gauss
/// map lives here.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MeroFn {
    pub num: HoloFn,
    pub den: HoloFn,
}

impl MeroFn {
    pub fn new(num: HoloFn, den: HoloFn) -> MeroFn {
        MeroFn { num, den }
    }

    pub fn constant(c: C) -> MeroFn {
        MeroFn {
            num: HoloFn::constant(c),
            den: HoloFn::constant(C::new(1.0, 0.0)),
        }
    }

    /// Plain quotient; ±inf/NaN slip through where the denominator vanishes.
    pub fn eval(&self, z: C) -> C {
        self.num.eval(z) / self.den.eval(z)
    }

    /// Quotient on the extended plane: a denominator overwhelmed by the
    /// numerator reads as the point at infinity.
    pub fn eval_proj(&self, z: C) -> crate::lorentz::StereoPoint {
        let n = self.num.eval(z);
        let d = self.den.eval(z);
        if d.norm() <= 1e-14 * n.norm() || !d.is_finite() && n.is_finite() {
            crate::lorentz::StereoPoint::Infinity
        } else {
            crate::lorentz::StereoPoint::Finite(n / d)
        }
    }

    pub fn modulus(&self, z: C) -> f64 {
        self.num.eval(z).norm() / self.den.eval(z).norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn rat_eval_poly_and_pole() {
        // (z² + 1) + 3/(z-2)²
        let r = Rat::monomial(c(1.0, 0.0), 2)
            .add(&Rat::constant(c(1.0, 0.0)))
            .add(&Rat::single_pole(c(2.0, 0.0), 2, c(3.0, 0.0)));
        let z = c(0.5, -1.0);
        let want = (z * z + 1.0) + 3.0 / ((z - 2.0) * (z - 2.0));
        assert!((r.eval(z) - want).norm() < 1e-14);
    }

    #[test]
    fn taylor_shift_roundtrip() {
        let p = vec![c(1.0, 0.0), c(-2.0, 1.0), c(0.0, 0.0), c(4.0, 0.0)];
        let a = c(1.5, -0.25);
        let d = taylor_shift(&p, a);
        let back = taylor_shift(&d, -a);
        for (x, y) in p.iter().zip(back.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
        // shifted form evaluates identically
        let z = c(0.3, 0.7);
        let direct = poly_eval(&p, z);
        let via = poly_eval(&d, z - a);
        assert!((direct - via).norm() < 1e-12);
    }

    #[test]
    fn rat_mul_matches_pointwise_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let rand_rat = |rng: &mut ChaCha8Rng| {
                let mut r = Rat::zero();
                let deg = rng.gen_range(0..=3);
                for k in 0..=deg {
                    r = r.add(&Rat::monomial(
                        c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                        k,
                    ));
                }
                for _ in 0..rng.gen_range(0..=2) {
                    let loc = c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                    let order = rng.gen_range(1..=2);
                    r = r.add(&Rat::single_pole(
                        loc,
                        order,
                        c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                    ));
                }
                r
            };
            let f = rand_rat(&mut rng);
            let g = rand_rat(&mut rng);
            let fg = f.mul(&g);
            for _ in 0..8 {
                let z = c(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
                // stay away from every pole so both sides are well-conditioned
                let clear = f
                    .pole_locs()
                    .iter()
                    .chain(g.pole_locs().iter())
                    .map(|&p| (z - p).norm())
                    .fold(f64::INFINITY, f64::min);
                if clear < 0.3 {
                    continue;
                }
                let want = f.eval(z) * g.eval(z);
                let got = fg.eval(z);
                let scale = want.norm().max(1.0) * fg.max_coeff().max(1.0);
                assert!(
                    (got - want).norm() < 1e-9 * scale,
                    "mul mismatch: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn cross_pole_partial_fractions_simple() {
        // 1/((z-1)(z+1)) = 0.5/(z-1) - 0.5/(z+1)
        let f = Rat::single_pole(c(1.0, 0.0), 1, c(1.0, 0.0));
        let g = Rat::single_pole(c(-1.0, 0.0), 1, c(1.0, 0.0));
        let fg = f.mul(&g);
        assert!(fg.poly.is_empty());
        assert_eq!(fg.poles.len(), 2);
        let at_minus1 = fg.poles.iter().find(|p| p.loc.re < 0.0).unwrap();
        let at_plus1 = fg.poles.iter().find(|p| p.loc.re > 0.0).unwrap();
        assert!((at_plus1.coeffs[0] - c(0.5, 0.0)).norm() < 1e-14);
        assert!((at_minus1.coeffs[0] - c(-0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        // f = (z² - i z) e^{z/2} + 2/(z-3)
        let w = Rat::monomial(c(0.5, 0.0), 1);
        let f = HoloFn::from_rat(Rat::monomial(c(1.0, 0.0), 2).add(&Rat::monomial(c(0.0, -1.0), 1)))
            .mul(&HoloFn::exp_of(w))
            .add(&HoloFn::from_rat(Rat::single_pole(
                c(3.0, 0.0),
                1,
                c(2.0, 0.0),
            )));
        let df = f.deriv();
        for _ in 0..20 {
            let z = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            if (z - c(3.0, 0.0)).norm() < 0.5 {
                continue;
            }
            let h = 1e-5;
            let fd = (f.eval(z + c(h, 0.0)) - f.eval(z - c(h, 0.0))) / c(2.0 * h, 0.0);
            let scale = df.eval(z).norm().max(1.0);
            assert!((df.eval(z) - fd).norm() < 1e-7 * scale);
        }
    }

    #[test]
    fn exp_terms_merge() {
        let e2 = HoloFn::exp_of(Rat::monomial(c(2.0, 0.0), 1));
        let e3 = HoloFn::exp_of(Rat::monomial(c(3.0, 0.0), 1));
        let prod = e2.mul(&e3);
        assert_eq!(prod.term_count(), 1);
        let z = c(0.3, 0.1);
        assert!((prod.eval(z) - (z * 5.0).exp()).norm() < 1e-12);

        // (e^z + 1)² = e^{2z} + 2e^z + 1
        let f = HoloFn::exp_of(Rat::monomial(c(1.0, 0.0), 1)).add(&HoloFn::constant(c(1.0, 0.0)));
        let sq = f.mul(&f);
        assert_eq!(sq.term_count(), 3);
        assert!((sq.eval(z) - ((z.exp() + 1.0) * (z.exp() + 1.0))).norm() < 1e-12);

        // e^z - e^z = 0
        let zero = HoloFn::exp_of(Rat::monomial(c(1.0, 0.0), 1))
            .sub(&HoloFn::exp_of(Rat::monomial(c(1.0, 0.0), 1)));
        assert!(zero.is_zero());
    }

    #[test]
    fn exp_constant_folds_into_rat() {
        // e^{1 + z} should normalize to (e^1)·e^{z}
        let f = HoloFn::exp_of(Rat::constant(c(1.0, 0.0)).add(&Rat::monomial(c(1.0, 0.0), 1)));
        assert_eq!(f.term_count(), 1);
        let t = &f.terms[0];
        assert!((t.rat.eval(c(0.0, 0.0)) - c(1f64.exp(), 0.0)).norm() < 1e-12);
        let w = t.exp_arg.as_ref().unwrap();
        assert!(w.poly.first().map_or(true, |c0| c0.norm() == 0.0));
    }

    #[test]
    fn segment_integral_of_exp() {
        let f = HoloFn::exp_of(Rat::monomial(c(1.0, 0.0), 1));
        let path = [c(0.0, 0.0), c(1.0, 0.0)];
        let got = f.path_integral(&path);
        let want = c(1f64.exp() - 1.0, 0.0);
        assert!((got - want).norm() < 1e-13);
    }

    #[test]
    fn closed_contour_residues() {
        // around a square contour enclosing z=0:
        //   ∮ dz/z = 2πi,  ∮ dz/z² = 0,  ∮ e^z/z dz = 2πi
        let square = [
            c(1.0, -1.0),
            c(1.0, 1.0),
            c(-1.0, 1.0),
            c(-1.0, -1.0),
            c(1.0, -1.0),
        ];
        let two_pi_i = c(0.0, std::f64::consts::TAU);
        let inv = HoloFn::from_rat(Rat::single_pole(czero(), 1, c(1.0, 0.0)));
        assert!((inv.path_integral(&square) - two_pi_i).norm() < 1e-11);

        let inv2 = HoloFn::from_rat(Rat::single_pole(czero(), 2, c(1.0, 0.0)));
        assert!(inv2.path_integral(&square).norm() < 1e-11);

        let cauchy = HoloFn::exp_of(Rat::monomial(c(1.0, 0.0), 1)).mul(&inv);
        assert!((cauchy.path_integral(&square) - two_pi_i).norm() < 1e-11);

        // holomorphic integrand: closed integral vanishes
        let entire = HoloFn::from_rat(Rat::monomial(c(1.0, 0.0), 3))
            .mul(&HoloFn::exp_of(Rat::monomial(c(0.0, 1.0), 1)));
        assert!(entire.path_integral(&square).norm() < 1e-12);
    }

    #[test]
    fn pole_clearance_and_modulus_scan() {
        let f = HoloFn::from_rat(Rat::single_pole(c(0.0, 1.0), 1, c(1.0, 0.0)));
        let path = [c(-1.0, 0.0), c(1.0, 0.0)];
        assert!((f.path_pole_clearance(&path) - 1.0).abs() < 1e-15);
        let pts: Vec<C> = (0..11).map(|k| c(-1.0 + 0.2 * k as f64, 0.0)).collect();
        let mm = f.min_modulus_on(pts.iter().copied());
        // |1/(x-i)| minimized at x=±1 → 1/√2
        assert!((mm - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn mero_quotient_and_projection() {
        use crate::lorentz::StereoPoint;
        // g = z/(z-1): finite away from 1, ∞ at 1
        let g = MeroFn::new(
            HoloFn::monomial(c(1.0, 0.0), 1),
            HoloFn::from_rat(Rat::monomial(c(1.0, 0.0), 1).sub(&Rat::constant(c(1.0, 0.0)))),
        );
        assert!((g.eval(c(2.0, 0.0)) - c(2.0, 0.0)).norm() < 1e-14);
        match g.eval_proj(c(1.0, 0.0)) {
            StereoPoint::Infinity => {}
            other => panic!("expected infinity, got {other:?}"),
        }
    }

    #[test]
    fn holo_mul_random_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let rand_fn = |rng: &mut ChaCha8Rng| {
                let r = Rat::monomial(c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), rng.gen_range(0..3))
                    .add(&Rat::single_pole(
                        c(rng.gen_range(2.0..4.0), rng.gen_range(-1.0..1.0)),
                        rng.gen_range(1..=2),
                        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    ));
                let w = Rat::monomial(c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)), 1);
                HoloFn::from_rat(r).mul(&HoloFn::exp_of(w))
            };
            let f = rand_fn(&mut rng);
            let g = rand_fn(&mut rng);
            let fg = f.mul(&g);
            for _ in 0..5 {
                let z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                let want = f.eval(z) * g.eval(z);
                let got = fg.eval(z);
                assert!((got - want).norm() < 1e-9 * want.norm().max(1.0));
            }
        }
    }
}
