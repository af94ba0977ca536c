//! Seeded random candidates with smooth positive profiles, for oracle
//! cross-checks. Candidates are generic on purpose: they solve nothing, so
//! any agreement between two evaluation paths is structural rather than an
//! artifact of residuals being zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::candidate::{UPlacement, WarpedCandidate};
use crate::factor::{InvariantDirection, SemiEuclideanFactor};
use crate::profile::{constant, var, Profile};

fn small_poly(rng: &mut ChaCha8Rng) -> crate::profile::Expr {
    let a0: f64 = rng.gen_range(-0.3..0.3);
    let a1: f64 = rng.gen_range(-0.2..0.2);
    let a2: f64 = rng.gen_range(-0.1..0.1);
    constant(a0) + var() * a1 + var() * var() * a2
}

/// Strictly positive smooth profile, exp of a small quadratic.
fn smooth_positive(rng: &mut ChaCha8Rng) -> Profile {
    Profile::new(small_poly(rng).exp())
}

fn direction(rng: &mut ChaCha8Rng, factor: &SemiEuclideanFactor) -> InvariantDirection {
    loop {
        let coeffs: Vec<f64> = (0..factor.dim())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        if coeffs.iter().any(|c| c.abs() > 0.1) {
            return InvariantDirection::new(factor, coeffs).expect("nonzero coefficients");
        }
    }
}

fn factor(rng: &mut ChaCha8Rng, dim: usize) -> SemiEuclideanFactor {
    if rng.gen_bool(0.5) {
        SemiEuclideanFactor::lorentzian(dim).expect("dim >= 1")
    } else {
        SemiEuclideanFactor::euclidean(dim).expect("dim >= 1")
    }
}

/// Deterministic generic candidate; equal seeds give identical candidates.
pub fn random_candidate(seed: u64) -> WarpedCandidate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=3);
    let m = rng.gen_range(2..=3);
    let base = factor(&mut rng, n);
    let fiber = factor(&mut rng, m);
    let alpha = direction(&mut rng, &base);

    let with_tau = rng.gen_bool(0.5);
    let (tau, beta) = if with_tau {
        (
            Some(smooth_positive(&mut rng)),
            Some(direction(&mut rng, &fiber)),
        )
    } else {
        (None, None)
    };
    let u_placement = if with_tau && rng.gen_bool(0.5) {
        UPlacement::Fiber
    } else {
        UPlacement::Base
    };

    let c = WarpedCandidate {
        alpha,
        base,
        phi: smooth_positive(&mut rng),
        beta,
        fiber,
        tau,
        f: smooth_positive(&mut rng),
        h: Profile::new(small_poly(&mut rng)),
        u: Profile::new(small_poly(&mut rng)),
        u_placement,
        theta: rng.gen_range(0.5..2.0),
        lambda: rng.gen_range(-0.5..0.5),
        mu: rng.gen_range(-0.5..0.5),
    };
    c.validate().expect("sampled candidate is well-formed");
    c
}

/// Generic candidate tuned for the finite-difference Ricci oracle. Two
/// adjustments against `random_candidate`:
///
/// * profiles carry order-one log-derivatives, so stencil truncation at
///   steps near 1e-3 stands well clear of the rounding floor and the
///   step-halving ratio cleanly shows the order;
/// * an abstract fiber is modeled as flat R^m, whose Einstein constant is
///   zero, so `mu` is zeroed when no fiber conformal factor is present.
///   With `mu` kept, the closed-form fiber block would describe a
///   different fiber manifold than the one the oracle differentiates.
pub fn oracle_candidate(seed: u64) -> WarpedCandidate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lively = |rng: &mut ChaCha8Rng| {
        let a0: f64 = rng.gen_range(-0.3..0.3);
        let a1: f64 = rng.gen_range(-0.6..0.6);
        let a2: f64 = rng.gen_range(-0.4..0.4);
        Profile::new((constant(a0) + var() * a1 + var() * var() * a2).exp())
    };
    let n = rng.gen_range(2..=3);
    let m = rng.gen_range(2..=3);
    let base = factor(&mut rng, n);
    let fiber = factor(&mut rng, m);
    let alpha = direction(&mut rng, &base);
    let with_tau = rng.gen_bool(0.5);
    let (tau, beta) = if with_tau {
        (Some(lively(&mut rng)), Some(direction(&mut rng, &fiber)))
    } else {
        (None, None)
    };
    let c = WarpedCandidate {
        alpha,
        base,
        phi: lively(&mut rng),
        beta,
        fiber,
        tau,
        f: lively(&mut rng),
        h: Profile::new(small_poly(&mut rng)),
        u: Profile::new(small_poly(&mut rng)),
        u_placement: UPlacement::Base,
        theta: rng.gen_range(0.5..2.0),
        lambda: rng.gen_range(-0.5..0.5),
        mu: if with_tau { rng.gen_range(-0.5..0.5) } else { 0.0 },
    };
    c.validate().expect("sampled candidate is well-formed");
    c
}

fn window(lo: f64, hi: f64, cap: f64) -> (f64, f64) {
    let a = lo.max(-cap);
    let b = hi.min(cap);
    if a < b {
        (a, b)
    } else if lo.is_finite() {
        (lo, lo + 2.0 * cap)
    } else {
        (hi - 2.0 * cap, hi)
    }
}

/// Deterministic sample points in R^{n+m} with the invariant coordinates
/// pushed into the middle of the profile domains, clear of open endpoints,
/// so difference stencils straddling the point stay evaluable.
pub fn oracle_points(c: &WarpedCandidate, seed: u64, count: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = c.n();
    let m = c.m();
    // Only phi, f and tau enter the Ricci comparison.
    let (blo, bhi) = {
        let (lo, hi) = c.phi.domain();
        let (a, b) = c.f.domain();
        window(lo.max(a), hi.min(b), 1.0)
    };
    let (flo, fhi) = match &c.tau {
        Some(tau) => {
            let (a, b) = tau.domain();
            window(a, b, 1.0)
        }
        None => (-1.0, 1.0),
    };
    // Difference-stencil truncation grows with both the profile scale and
    // the per-coordinate steps, so points hug the origin of each window:
    // the invariant coordinate is spread evenly over the participating
    // axes and every coordinate gets a small independent jitter.
    let center = |lo: f64, hi: f64| {
        let margin = 0.3 * (hi - lo);
        0.0f64.clamp(lo + margin, hi - margin)
    };
    let spread = |x: &mut [f64], dir: &InvariantDirection, target: f64| {
        let norm: f64 = (0..x.len())
            .map(|i| dir.coefficient(i) * dir.coefficient(i))
            .sum();
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += target * dir.coefficient(i) / norm;
        }
    };
    let (cb, cf) = (center(blo, bhi), center(flo, fhi));
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut x: Vec<f64> = (0..n + m).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let xi_t = cb + 0.15 * (bhi - blo) * rng.gen_range(-1.0..1.0);
        spread(&mut x[..n], &c.alpha, xi_t);
        if let Some(beta) = &c.beta {
            let zeta_t = cf + 0.15 * (fhi - flo) * rng.gen_range(-1.0..1.0);
            spread(&mut x[n..], beta, zeta_t);
        }
        out.push(x);
    }
    out
}
