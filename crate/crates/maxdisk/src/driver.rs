//! The outer recursion: grow a sequence of polygons and immersions whose
//! limit would be a weakly complete, bounded, maximal disk.
//!
//! Each round hands the previous pair to the deformation pass with shrinking
//! closeness budgets, then verifies the five per-round properties — offset
//! nesting, a 1/n floor on the intrinsic gap between consecutive cores,
//! containment in a shrinking region chain, Cauchy closeness on cores, and a
//! conformal-factor ratio floor. The ledgers those checks produce are the
//! artifacts: the gap ledger diverging like Σ1/n is the completeness proxy,
//! the ε ledger summing like Σ1/n² is the convergence proxy, and the radius
//! chain staying above 1 keeps the limit inside the unit hyperboloid region.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::deform::{
    boundary_ring, lattice, lemma_step, DeformConfig, LemmaInput, LemmaReport,
};
use crate::lorentz::{LVec3, Region};
use crate::metric::{MetricError, MetricField, Source};
use crate::polygon::{Polygon, PolygonError};
use crate::weierstrass::WData;

type C = Complex64;

/// Core-offset depth ξ₁ of the seed round.
pub const SEED_XI: f64 = 0.1;
/// Closeness budget ε₁ of the seed round (only ε₁ < 1 is required).
pub const SEED_EPS: f64 = 0.5;
/// Side of the seed polygon.
pub const SEED_SIDE: f64 = 0.5;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("no r₁ in the search grid keeps the radius sequence above its floor")]
    SearchExhausted,
    #[error("seed containment fails near ({re:.4}, {im:.4}), margin {margin:.3e}")]
    SeedRejected { re: f64, im: f64, margin: f64 },
    #[error("ε trial ladder exhausted at n = {n} after {} trials", trials.len())]
    TrialLadderExhausted {
        n: usize,
        trials: Vec<TrialRecord>,
        /// Rounds completed before the failure, for honest reporting.
        partial: Box<RunOutcome>,
    },
    #[error("core-offset search found no admissible ξ at n = {n}")]
    XiSearchFailed { n: usize },
    #[error("limit report needs at least two rounds, got {got}")]
    TooFewStates { got: usize },
    #[error(transparent)]
    Polygon(#[from] PolygonError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// One round of the recursion: the polygon, the immersion, the budgets it was
/// accepted under, and the running ledgers (index 0 belongs to round 2).
#[derive(Debug, Clone, Serialize)]
pub struct IterationState {
    pub n: usize,
    pub p: Polygon,
    pub psi: WData,
    pub eps: f64,
    pub xi: f64,
    pub r: f64,
    /// Measured intrinsic gaps between consecutive ξ-cores (bound 1/n).
    pub dist_ledger: Vec<f64>,
    /// Measured sup differences on the ε-cores (bound ε_n).
    pub sup_ledger: Vec<f64>,
    /// Measured conformal-factor ratio floors (bound α_n).
    pub ratio_ledger: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRecord {
    pub m: usize,
    pub eps: f64,
    pub outcome: String,
    pub accepted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub n: usize,
    pub s: f64,
    pub eps: f64,
    pub xi: f64,
    pub r: f64,
    pub alpha_n: f64,
    pub trials: Vec<TrialRecord>,
    pub lemma: LemmaReport,
    pub nesting_ok: bool,
    /// Intrinsic gap between the old and new ξ-cores (bound 1/n).
    pub gap: f64,
    /// Containment margin of ψ_n in B(r_n) over the new polygon.
    pub containment: f64,
    /// sup ‖ψ_n − ψ_{n−1}‖ on the ε-core (bound ε_n).
    pub sup_diff: f64,
    /// min λ⁰ ratio on the previous ξ-core (bound α_n).
    pub ratio: f64,
    /// r_n minus the ε = 1/n² reference chain value (≥ 0 since ε_n ≤ 1/n²).
    pub radius_slack: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub states: Vec<IterationState>,
    pub steps: Vec<StepRecord>,
}

// ---------------------------------------------------------------------------
// sequences

/// α_k = 2^(−2^(−k)): every factor is in (0,1) and the infinite product
/// telescopes to 2^(−Σ2^(−k)) = 1/2.
pub fn make_alpha_seq(k_max: usize) -> Vec<f64> {
    (1..=k_max)
        .map(|k| (-(0.5f64.powi(k as i32))).exp2())
        .collect()
}

/// One radius chain r′_n = √(r′²_{n−1} − (2/n)²) − 1/n²; `None` when the
/// radicand dies or the floor is pierced.
fn radius_chain(r1: f64, n_max: usize, floor: f64) -> Option<Vec<f64>> {
    let mut seq = Vec::with_capacity(n_max);
    seq.push(r1);
    let mut r = r1;
    if r <= floor {
        return None;
    }
    for n in 2..=n_max {
        let a = 2.0 / n as f64;
        let rad = r * r - a * a;
        if rad <= 0.0 {
            return None;
        }
        r = rad.sqrt() - 1.0 / ((n * n) as f64);
        if r <= floor {
            return None;
        }
        seq.push(r);
    }
    Some(seq)
}

/// Σ_{n>k} 1/n², summed smallest-first with a series remainder for the cut.
fn basel_tail(k: usize) -> f64 {
    let m = k + 1_000_000;
    let mut s = 0.0f64;
    for n in ((k + 1)..=m).rev() {
        s += 1.0 / ((n * n) as f64);
    }
    let mf = m as f64;
    s + 1.0 / mf - 1.0 / (2.0 * mf * mf)
}

/// Smallest r₁ in the grid {2, 2.25, 2.5, …} whose chain stays above 1.05
/// through n_max and whose worst-case tail (every later round spending the
/// full (2/n)²/2 + 1/n²) still leaves the infimum above 1.
pub fn make_radius_seq(n_max: usize) -> Result<(f64, Vec<f64>), DriverError> {
    assert!(n_max >= 1, "need at least one round");
    let tail = 3.0 * basel_tail(n_max);
    let mut step = 0usize;
    loop {
        let r1 = 2.0 + 0.25 * step as f64;
        if r1 > 64.0 {
            return Err(DriverError::SearchExhausted);
        }
        if let Some(seq) = radius_chain(r1, n_max, 1.05) {
            if seq[n_max - 1] - tail > 1.0 {
                return Ok((r1, seq));
            }
        }
        step += 1;
    }
}

// ---------------------------------------------------------------------------
// seed

/// Round 1: a flat spacelike disk over a small square, hung deep enough below
/// the region boundary that containment is generous.
pub fn seed(r1: f64) -> Result<IterationState, DriverError> {
    seed_with(r1, SEED_SIDE, 0.2)
}

/// Seed with explicit geometry: square side and hang depth below −r₁.
pub fn seed_with(r1: f64, side: f64, hang: f64) -> Result<IterationState, DriverError> {
    assert!(r1 > 1.0, "seed radius must exceed the unit floor");
    assert!(side > 0.0 && hang > 0.0);
    let p = Polygon::square(C::new(0.0, 0.0), side);
    let psi = WData::flat_disk(LVec3::new(0.0, 0.0, -(r1 + hang)));
    // closed form: the planar image radius is at most the domain half-diagonal,
    // which must stay under √(V₃² − r₁²)
    let half_diag = side * std::f64::consts::SQRT_2 / 2.0;
    let room = ((r1 + hang) * (r1 + hang) - r1 * r1).sqrt();
    assert!(half_diag < room, "seed square too large for the hang depth");
    let region = Region::new(r1);
    let mut pts = lattice(&p, 32, 0.5);
    pts.extend(boundary_ring(&p, 128, 0.31));
    for z in pts {
        let m = region.margin(&psi.immerse(z));
        if m <= 0.0 {
            return Err(DriverError::SeedRejected {
                re: z.re,
                im: z.im,
                margin: m,
            });
        }
    }
    Ok(IterationState {
        n: 1,
        p,
        psi,
        eps: SEED_EPS,
        xi: SEED_XI,
        r: r1,
        dist_ledger: Vec::new(),
        sup_ledger: Vec::new(),
        ratio_ledger: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// per-round checks

/// Strict polygon nesting: every vertex and side sample of `inner` winds
/// inside `outer` with positive clearance.
fn strictly_inside(inner: &Polygon, outer: &Polygon) -> bool {
    let verts = inner
        .vertices()
        .iter()
        .all(|&v| outer.winding(v) != 0 && outer.dist_to_boundary(v) > 0.0);
    let sides = inner.sides().all(|(a, b)| {
        (1..8).all(|k| {
            let z = a + (b - a) * (k as f64 / 8.0);
            outer.winding(z) != 0
        })
    });
    verts && sides
}

fn grid_points(dom: &Polygon, grid: usize) -> Vec<C> {
    let mut pts = lattice(dom, grid, 0.5);
    pts.extend(boundary_ring(dom, 4 * grid, 0.37));
    pts
}

/// sup ‖a − b‖_E of the immersions over the closed domain.
fn sup_diff(a: &WData, b: &WData, dom: &Polygon, grid: usize) -> f64 {
    grid_points(dom, grid)
        .into_iter()
        .map(|z| a.immerse(z).sub(&b.immerse(z)).euclid_norm())
        .fold(0.0, f64::max)
}

/// min λ⁰_next / λ⁰_prev over the closed domain.
fn min_ratio(next: &WData, prev: &WData, dom: &Polygon, grid: usize) -> f64 {
    grid_points(dom, grid)
        .into_iter()
        .filter_map(|z| {
            let d = prev.lambda0(z);
            (d > 1e-300).then(|| next.lambda0(z) / d)
        })
        .fold(f64::INFINITY, f64::min)
}

/// min containment margin of the immersion in B(r) over the closed domain.
fn containment_margin(wd: &WData, dom: &Polygon, r: f64, grid: usize) -> f64 {
    let region = Region::new(r);
    grid_points(dom, grid)
        .into_iter()
        .map(|z| region.margin(&wd.immerse(z)))
        .fold(f64::INFINITY, f64::min)
}

/// Intrinsic gap under dσ_ψ (on domain `p`) between two interior boundaries.
fn core_gap(
    p: &Polygon,
    psi: &WData,
    inner: &Polygon,
    outer_core: &Polygon,
    grid: usize,
) -> Result<f64, MetricError> {
    let h = p.diameter() / (3.0 * grid as f64);
    let mf = MetricField::new(p, h, |z| psi.lambda0(z))?;
    mf.dist_sets(&Source::Boundary(inner), &Source::Boundary(outer_core))
}

/// Bisect for the largest core depth whose offset both swallows the previous
/// core and keeps the intrinsic gap above 1/n, then take half of it.
/// Returns (ξ_n, measured gap at ξ_n, new core).
fn choose_xi(
    p: &Polygon,
    psi: &WData,
    prev_core: &Polygon,
    xi_hi: f64,
    n: usize,
    grid: usize,
) -> Option<(f64, f64, Polygon)> {
    let bound = 1.0 / n as f64;
    let pass = |xi: f64| -> Option<f64> {
        let core = p.inward_offset(xi).ok()?;
        if !strictly_inside(prev_core, &core) {
            return None;
        }
        let gap = core_gap(p, psi, prev_core, &core, grid).ok()?;
        (gap > bound).then_some(gap)
    };
    let mut best: Option<f64> = None;
    let mut lo = 0.0f64;
    let mut hi = xi_hi;
    if pass(hi).is_some() {
        best = Some(hi);
    } else {
        for _ in 0..8 {
            let mid = 0.5 * (lo + hi);
            if pass(mid).is_some() {
                best = Some(mid);
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    // the open end of the interval always passes when the pass produced a
    // lemma-certified moat; probe a small depth if bisection found nothing
    let largest = best.or_else(|| {
        let tiny = xi_hi / 512.0;
        pass(tiny).map(|_| tiny)
    })?;
    let xi = largest / 2.0;
    let gap = pass(xi)?;
    let core = p.inward_offset(xi).ok()?;
    Some((xi, gap, core))
}

// ---------------------------------------------------------------------------
// the recursion

/// Advance the recursion to `n_target`, certifying the five properties each
/// round. On ladder exhaustion the error carries every trial's blocker and
/// the rounds completed so far.
pub fn iterate(
    seed_state: IterationState,
    n_target: usize,
    cfg: &DeformConfig,
) -> Result<RunOutcome, DriverError> {
    iterate_with_depth(seed_state, n_target, cfg, 12)
}

/// `iterate` with an explicit ε trial-ladder depth per round.
pub fn iterate_with_depth(
    seed_state: IterationState,
    n_target: usize,
    cfg: &DeformConfig,
    trial_depth: usize,
) -> Result<RunOutcome, DriverError> {
    assert!(n_target >= 1, "need at least the seed round");
    assert!(trial_depth >= 1, "need at least one ε trial");
    let alphas = make_alpha_seq(n_target.max(2));
    let mut states = vec![seed_state];
    let mut steps: Vec<StepRecord> = Vec::new();

    for n in 2..=n_target {
        let prev = states.last().unwrap().clone();
        let s_n = 1.0 / n as f64;
        let alpha_n = alphas[n - 1];
        let eps0 = 0.5 * (1.0 / ((n * n) as f64)).min(prev.eps);
        let prev_core = prev.p.inward_offset(prev.xi)?;

        let mut trials: Vec<TrialRecord> = Vec::new();
        let mut accepted: Option<(f64, Polygon, WData, LemmaReport, f64, f64)> = None;
        for m in 0..12 {
            let eps_m = eps0 * 0.5f64.powi(m as i32);
            let record = |outcome: String, accepted: bool| TrialRecord {
                m,
                eps: eps_m,
                outcome,
                accepted,
            };
            let r_n = (prev.r * prev.r - (2.0 * s_n) * (2.0 * s_n)).sqrt() - eps_m;
            if r_n <= 1.0 {
                trials.push(record(format!("target radius {r_n:.4} under the unit floor"), false));
                continue;
            }
            let eps_core = match prev.p.inward_offset(eps_m) {
                Ok(c) => c,
                Err(e) => {
                    trials.push(record(format!("ε-core offset: {e}"), false));
                    continue;
                }
            };
            if !strictly_inside(&prev_core, &eps_core) {
                trials.push(record("previous ξ-core not inside the ε-core".to_owned(), false));
                continue;
            }
            let input = LemmaInput {
                r: prev.r,
                p: prev.p.clone(),
                x: prev.psi.clone(),
                eps: eps_m,
                s: s_n,
            };
            match lemma_step(&input, cfg) {
                Err(e) => {
                    trials.push(record(e.to_string(), false));
                    continue;
                }
                Ok((q, y, rep)) => {
                    let ratio = min_ratio(&y, &prev.psi, &prev_core, cfg.grid);
                    if ratio < alpha_n {
                        trials.push(record(
                            format!("λ⁰ ratio {ratio:.6} under α_{n} = {alpha_n:.6}"),
                            false,
                        ));
                        continue;
                    }
                    let d = sup_diff(&y, &prev.psi, &eps_core, cfg.grid);
                    trials.push(record("accepted".to_owned(), true));
                    accepted = Some((eps_m, q, y, rep, ratio, d));
                    break;
                }
            }
        }
        let Some((eps_n, q, y, lemma_rep, ratio, d_sup)) = accepted else {
            return Err(DriverError::TrialLadderExhausted {
                n,
                trials,
                partial: Box::new(RunOutcome { states, steps }),
            });
        };

        let r_n = (prev.r * prev.r - (2.0 * s_n) * (2.0 * s_n)).sqrt() - eps_n;
        let reference = (prev.r * prev.r - (2.0 * s_n) * (2.0 * s_n)).sqrt() - s_n * s_n;
        let xi_hi = prev.xi * (1.0 - 1e-9);
        let (xi_n, gap, _core) = choose_xi(&q, &y, &prev_core, xi_hi, n, cfg.grid)
            .ok_or(DriverError::XiSearchFailed { n })?;
        let containment = containment_margin(&y, &q, r_n, cfg.grid);

        let mut state = IterationState {
            n,
            p: q,
            psi: y,
            eps: eps_n,
            xi: xi_n,
            r: r_n,
            dist_ledger: prev.dist_ledger.clone(),
            sup_ledger: prev.sup_ledger.clone(),
            ratio_ledger: prev.ratio_ledger.clone(),
        };
        state.dist_ledger.push(gap);
        state.sup_ledger.push(d_sup);
        state.ratio_ledger.push(ratio);

        steps.push(StepRecord {
            n,
            s: s_n,
            eps: eps_n,
            xi: xi_n,
            r: r_n,
            alpha_n,
            trials,
            lemma: lemma_rep,
            nesting_ok: true,
            gap,
            containment,
            sup_diff: d_sup,
            ratio,
            radius_slack: r_n - reference,
        });
        states.push(state);
    }

    Ok(RunOutcome { states, steps })
}

// ---------------------------------------------------------------------------
// limit diagnostics

#[derive(Debug, Clone, Serialize)]
pub struct CauchyRow {
    pub n: usize,
    pub sup_diff: f64,
    pub eps: f64,
    pub within: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapRow {
    pub n: usize,
    pub measured: f64,
    pub bound: f64,
    pub cumulative: f64,
    /// Partial sum of the divergent reference series Σ 1/k, k = 2..n.
    pub harmonic_ref: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusRow {
    pub n: usize,
    pub samples: usize,
    /// λ⁰ below 1e−12: both factors vanish. Must stay zero.
    pub branch: usize,
    /// Spacelike margin below 1e−2: the near-lightlike band.
    pub lightlike_band: usize,
    pub regular: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    pub n_max: usize,
    pub cauchy: Vec<CauchyRow>,
    /// min over the last ξ-core grid of the B(1) margin of the last ψ.
    pub containment_margin: f64,
    pub gaps: Vec<GapRow>,
    pub census: Vec<CensusRow>,
    /// min λ⁰_last / λ⁰_first over the seed core grid.
    pub lambda_floor: f64,
    /// The infinite-product bound the floor must respect.
    pub lambda_floor_bound: f64,
    pub r_last: f64,
}

/// Convergence and completeness diagnostics over a finished (or synthetic)
/// chain of rounds.
pub fn limit_report(states: &[IterationState], grid: usize) -> Result<LimitReport, DriverError> {
    if states.len() < 2 {
        return Err(DriverError::TooFewStates { got: states.len() });
    }
    let mut cauchy = Vec::new();
    for w in states.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let dom = a.p.inward_offset(b.eps)?;
        let d = sup_diff(&b.psi, &a.psi, &dom, grid);
        cauchy.push(CauchyRow {
            n: b.n,
            sup_diff: d,
            eps: b.eps,
            within: d < b.eps,
        });
    }

    let last = states.last().unwrap();
    let last_core = last.p.inward_offset(last.xi)?;
    let containment = containment_margin(&last.psi, &last_core, 1.0, 2 * grid);

    let mut gaps = Vec::new();
    let mut cum = 0.0;
    let mut href = 0.0;
    for (i, &g) in last.dist_ledger.iter().enumerate() {
        let n = i + 2;
        cum += g;
        href += 1.0 / n as f64;
        gaps.push(GapRow {
            n,
            measured: g,
            bound: 1.0 / n as f64,
            cumulative: cum,
            harmonic_ref: href,
        });
    }

    let census = states
        .iter()
        .map(|st| {
            let pts = grid_points(&st.p, grid);
            let samples = pts.len();
            let mut branch = 0usize;
            let mut light = 0usize;
            for &z in &pts {
                if st.psi.lambda0(z) < 1e-12 {
                    branch += 1;
                } else if st.psi.spacelike_margin(z) < 1e-2 {
                    light += 1;
                }
            }
            CensusRow {
                n: st.n,
                samples,
                branch,
                lightlike_band: light,
                regular: samples - branch - light,
            }
        })
        .collect();

    let first = &states[0];
    let seed_core = first.p.inward_offset(first.xi)?;
    let lambda_floor = min_ratio(&last.psi, &first.psi, &seed_core, grid);

    Ok(LimitReport {
        n_max: last.n,
        cauchy,
        containment_margin: containment,
        gaps,
        census,
        lambda_floor,
        lambda_floor_bound: 0.5,
        r_last: last.r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holo::Rat;
    use crate::lorentz::Frame;

    #[test]
    fn alpha_sequence_closed_form() {
        let a = make_alpha_seq(20);
        assert!((a[0] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(a.iter().all(|&x| 0.0 < x && x < 1.0));
        assert!(a.windows(2).all(|w| w[0] < w[1]), "factors increase toward 1");
        let prod: f64 = a.iter().product();
        assert!((prod - 0.5).abs() < 1e-6, "partial product {prod}");
    }

    #[test]
    fn radius_sequence_frozen_values() {
        let (r1, seq) = make_radius_seq(4).unwrap();
        assert_eq!(r1, 2.5, "2.0 fails the floor and 2.25 fails the tail");
        // hand recursion: r₂ = √5.25 − 1/4, r₃ = √(r₂² − 4/9) − 1/9,
        // r₄ = √(r₃² − 1/4) − 1/16
        let expect = [2.5, 2.0412878, 1.8182441, 1.6856452];
        assert_eq!(seq.len(), 4);
        for (got, want) in seq.iter().zip(expect) {
            assert!((got - want).abs() < 1e-6, "got {got}, want {want}");
        }
        assert!(seq.windows(2).all(|w| w[1] < w[0]));
        assert!(seq.iter().all(|&r| r > 1.05));

        assert!(radius_chain(1.2, 4, 1.05).is_none(), "low start pierces the floor");
        assert!(radius_chain(2.0, 4, 1.05).is_none(), "r′_4 ≈ 1.042 under the floor");
        assert!(radius_chain(2.25, 4, 1.05).is_some(), "2.25 passes the floor, fails only the tail");
    }

    #[test]
    fn seed_satisfies_containment() {
        let st = seed(2.5).unwrap();
        assert_eq!(st.n, 1);
        assert_eq!(st.r, 2.5);
        assert_eq!(st.eps, SEED_EPS);
        assert_eq!(st.xi, SEED_XI);
        assert!(st.dist_ledger.is_empty());
        let v = st.psi.immerse(C::new(0.0, 0.0));
        assert!((v.x3 + 2.7).abs() < 1e-12);
        // the planar image radius vs the room under the region
        let corner = st.psi.immerse(C::new(0.25, 0.25));
        let planar = corner.x1.hypot(corner.x2);
        assert!((planar - 0.125 * 2f64.sqrt()).abs() < 1e-9);
        let room = (2.7f64 * 2.7 - 6.25).sqrt();
        assert!(planar < room);
        let margin = containment_margin(&st.psi, &st.p, st.r, 32);
        assert!(margin > 0.0, "seed margin {margin}");
    }

    #[test]
    fn iterate_exhausts_the_trial_ladder_honestly() {
        let st = seed(2.5).unwrap();
        let cfg = DeformConfig::default();
        let err = iterate(st, 2, &cfg).unwrap_err();
        match err {
            DriverError::TrialLadderExhausted { n, trials, partial } => {
                assert_eq!(n, 2);
                assert_eq!(trials.len(), 12);
                assert!(trials.iter().all(|t| !t.accepted));
                // ε₀ = 1/8 exceeds ξ₁ = 0.1, so the first trial dies on the
                // core inclusion; every later one reaches the pass and is
                // blocked by the collar-vs-ε precondition on all four rungs
                assert!(trials[0].outcome.contains("not inside"), "{}", trials[0].outcome);
                for t in &trials[1..] {
                    assert!(t.outcome.contains("collar"), "m={}: {}", t.m, t.outcome);
                }
                assert_eq!(partial.states.len(), 1);
                assert!(partial.steps.is_empty());
            }
            other => panic!("expected ladder exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn xi_bisection_halves_the_largest_admissible_depth() {
        // flat metric λ⁰ = 0.5 on the unit square: the gap from the synthetic
        // previous core (side 0.2) to the new core at depth ξ is
        // (0.4 − ξ)·0.5 in the intrinsic metric, so with bound 1/8 the
        // admissible depths are ξ < 0.15 and the chosen one is near 0.075
        let p = Polygon::square(C::new(0.0, 0.0), 1.0);
        let psi = WData::flat_disk(LVec3::new(0.0, 0.0, -2.7));
        let prev_core = Polygon::square(C::new(0.0, 0.0), 0.2);
        let (xi, gap, core) = choose_xi(&p, &psi, &prev_core, 0.18, 8, 48).unwrap();
        assert!(xi > 0.06 && xi < 0.08, "ξ = {xi}");
        let predicted = (0.4 - xi) * 0.5;
        assert!((gap - predicted).abs() < 0.10 * predicted, "gap {gap} vs {predicted}");
        assert!(strictly_inside(&prev_core, &core));
        assert!(strictly_inside(&core, &p));
    }

    #[test]
    fn limit_report_ledgers_on_a_synthetic_chain() {
        let s1 = seed(2.5).unwrap();
        let fr = Frame::identity();
        let psi2 = s1
            .psi
            .rotate_to_frame(&fr)
            .lopez_ros(&Rat::constant(C::new(0.005, 0.0)))
            .rotate_from_frame(&fr);
        let mut s2 = IterationState {
            n: 2,
            p: Polygon::square(C::new(0.0, 0.0), 0.44),
            psi: psi2,
            eps: 0.12,
            xi: 0.05,
            r: (2.5f64 * 2.5 - 1.0).sqrt() - 0.12,
            dist_ledger: vec![0.55],
            sup_ledger: vec![0.003],
            ratio_ledger: vec![0.99],
        };
        s2.dist_ledger.shrink_to_fit();

        let rep = limit_report(&[s1.clone(), s2.clone()], 24).unwrap();
        assert_eq!(rep.n_max, 2);
        assert_eq!(rep.cauchy.len(), 1);
        assert!(rep.cauchy[0].within, "sup {} vs ε {}", rep.cauchy[0].sup_diff, rep.cauchy[0].eps);
        assert!(rep.cauchy[0].sup_diff < 0.01);
        assert!(rep.containment_margin > 1.0, "deep seed sits far inside B(1)");
        assert_eq!(rep.gaps.len(), 1);
        assert_eq!(rep.gaps[0].n, 2);
        assert!((rep.gaps[0].harmonic_ref - 0.5).abs() < 1e-12);
        assert!(rep.census.iter().all(|c| c.branch == 0));
        assert!(rep.census.iter().all(|c| c.lightlike_band == 0), "flat data has no near-lightlike band");
        assert!(rep.lambda_floor > 0.5, "shear by e^0.005 keeps the ratio near 1");
        assert!((rep.r_last - s2.r).abs() < 1e-12);

        let err = limit_report(&[s1], 24).unwrap_err();
        assert!(matches!(err, DriverError::TooFewStates { got: 1 }));
    }

    #[test]
    fn census_counts_the_near_lightlike_band() {
        // g = z on a disk that straddles |z| = 1: the annulus where the
        // spacelike margin drops under 1e-2 must show up in the census
        let g = crate::holo::HoloFn::monomial(C::new(1.0, 0.0), 1);
        let f = crate::holo::HoloFn::constant(C::new(1.0, 0.0));
        let wd = WData::from_gf(&g, &f, LVec3::new(0.0, 0.0, -2.0));
        let p = Polygon::square(C::new(0.0, 0.0), 2.4);
        let st = IterationState {
            n: 1,
            p: p.clone(),
            psi: wd,
            eps: 0.5,
            xi: 0.1,
            r: 2.0,
            dist_ledger: vec![],
            sup_ledger: vec![],
            ratio_ledger: vec![],
        };
        let st2 = IterationState { n: 2, eps: 0.2, xi: 0.05, ..st.clone() };
        let rep = limit_report(&[st, st2], 32).unwrap();
        assert!(rep.census[0].lightlike_band > 0, "band through |z|=1 must be sampled");
        assert_eq!(rep.census[0].branch, 0);
        assert!(rep.census[0].regular > rep.census[0].lightlike_band);
    }
}
