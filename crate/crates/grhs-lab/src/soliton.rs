//! Soliton residuals: the defining tensor equation, its invariant scalar
//! reductions, the fiber Einstein constant, and the diagnostic operators.
//!
//! Two independent evaluation paths exist on purpose. `grhs_residual`
//! assembles the tensor equation from the curvature module's closed forms;
//! `reconstruct_residual` rebuilds the same tensor from the reduced scalar
//! quantities below. They share nothing beyond profile evaluation, so their
//! agreement is a real check, and the test suite holds them to 1e-9.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::candidate::{UPlacement, WarpedCandidate};
use crate::curvature::{
    self, conformal_hessian, conformal_laplacian, conformal_pairing, fiber_metric,
    gradient_sq, invariant_outer, BlockMatrix, CurvatureError,
};
use crate::profile::{Jet, Profile, ProfileError};

#[derive(Debug, Error)]
pub enum SolitonError {
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("operation requires the harmonic map on the {expected}")]
    WrongPlacement { expected: &'static str },
    #[error("operation requires a concrete fiber conformal factor")]
    MissingTau,
    #[error("reduced base system applies to the abstract Einstein fiber only")]
    UnexpectedTau,
    #[error("grid must contain at least one point")]
    EmptyGrid,
}

fn positive(p: &Profile, t: f64, name: &'static str) -> Result<Jet, SolitonError> {
    let j = p.eval(t)?;
    if j.v <= 0.0 {
        return Err(SolitonError::Curvature(CurvatureError::NonPositive {
            name,
            value: j.v,
            t,
        }));
    }
    Ok(j)
}

// ---------------------------------------------------------------------------
// Tensor residual

/// Left side of the soliton equation, Ric + Hess h − θ∇u⊗∇u − λg, assembled
/// blockwise from the curvature operators, together with the harmonic-map
/// residual Δu − g(∇u, ∇h). Both vanish identically on a soliton.
pub fn grhs_residual(
    c: &WarpedCandidate,
    point: (f64, f64),
) -> Result<(BlockMatrix, f64), SolitonError> {
    let (xi, zeta) = point;
    let m = c.m();
    let fj = positive(&c.f, xi, "f")?;
    let pj = positive(&c.phi, xi, "phi")?;

    let mut ricci = curvature::warped_ricci(c, point)?;

    // Base block: Hess_B h − θ(u ⊗ u on the base) − λ g_B.
    let hess_h = conformal_hessian(&c.h, &c.phi, &c.alpha, &c.base, xi)?;
    ricci.base += &hess_h;
    if c.u_placement == UPlacement::Base {
        let outer = invariant_outer(&c.u, &c.alpha, xi)?;
        ricci.base -= outer * c.theta;
    }
    let lam_base = c.lambda / (pj.v * pj.v);
    for i in 0..c.n() {
        ricci.base[(i, i)] -= lam_base * c.base.epsilon(i);
    }

    // Fiber block: the potential always lives on the base, so its Hessian
    // contributes f⟨∇f, ∇h⟩ g_F; u contributes only under fiber placement.
    let g_f = fiber_metric(c, zeta)?;
    let pair_fh = conformal_pairing(&c.f, &c.h, &c.phi, &c.alpha, xi)?;
    ricci.fiber += &g_f * (fj.v * pair_fh);
    if c.u_placement == UPlacement::Fiber {
        let beta = c.beta.as_ref().expect("validated fiber placement");
        let outer = invariant_outer(&c.u, beta, zeta)?;
        ricci.fiber -= outer * c.theta;
    }
    ricci.fiber -= &g_f * (c.lambda * fj.v * fj.v);

    // Harmonic component.
    let harmonic = match c.u_placement {
        UPlacement::Base => {
            let lap_u = conformal_laplacian(&c.u, &c.phi, &c.alpha, xi)?;
            let pair_uf = conformal_pairing(&c.u, &c.f, &c.phi, &c.alpha, xi)?;
            let pair_uh = conformal_pairing(&c.u, &c.h, &c.phi, &c.alpha, xi)?;
            lap_u + (m as f64 / fj.v) * pair_uf - pair_uh
        }
        UPlacement::Fiber => {
            let tau = c.tau.as_ref().ok_or(SolitonError::MissingTau)?;
            let beta = c.beta.as_ref().ok_or(SolitonError::MissingTau)?;
            let lap_u = conformal_laplacian(&c.u, tau, beta, zeta)?;
            lap_u / (fj.v * fj.v)
        }
    };

    Ok((ricci, harmonic))
}

// ---------------------------------------------------------------------------
// Reduced scalar systems

struct BaseJets {
    p1: f64,
    p2: f64,
    w1: f64,
    w2: f64,
    h1: f64,
    h2: f64,
    u1: f64,
    u2: f64,
    phi: f64,
    f: f64,
}

fn base_jets(c: &WarpedCandidate, xi: f64) -> Result<BaseJets, SolitonError> {
    let pj = positive(&c.phi, xi, "phi")?;
    let fj = positive(&c.f, xi, "f")?;
    let hj = c.h.eval(xi)?;
    Ok(BaseJets {
        p1: pj.d1 / pj.v,
        p2: pj.d2 / pj.v,
        w1: fj.d1 / fj.v,
        w2: fj.d2 / fj.v,
        h1: hj.d1,
        h2: hj.d2,
        u1: 0.0,
        u2: 0.0,
        phi: pj.v,
        f: fj.v,
    })
}

/// Residuals of the four invariant equations for a base-placed harmonic map
/// over an abstract Einstein fiber:
///   E1 = (n−2)φ''/φ − m f''/f − 2m(φ'/φ)(f'/f) + h'' + 2(φ'/φ)h' − θ(u')²
///   E2 = [φ''/φ − (n−1)(φ'/φ)² + m(φ'/φ)(f'/f) − (φ'/φ)h'] ||α||² − λ/φ²
///   E3 = [f''/f − (n−2)(φ'/φ)(f'/f) + (m−1)(f'/f)² − (f'/f)h'] ||α||²
///        − μ/(f²φ²) + λ/φ²
///   E4 = [u'' − (n−2)(φ'/φ)u' + m u'(f'/f) − u'h'] ||α||²
/// The ||α||² factors stay explicit so a null direction zeroes E2–E4 exactly.
pub fn reduced_residuals_base(
    c: &WarpedCandidate,
    xi: f64,
) -> Result<[f64; 4], SolitonError> {
    if c.u_placement != UPlacement::Base {
        return Err(SolitonError::WrongPlacement { expected: "base" });
    }
    if c.tau.is_some() {
        return Err(SolitonError::UnexpectedTau);
    }
    let n = c.n() as f64;
    let m = c.m() as f64;
    let a2 = c.alpha_norm_sq();
    let mut j = base_jets(c, xi)?;
    let uj = c.u.eval(xi)?;
    j.u1 = uj.d1;
    j.u2 = uj.d2;

    let e1 = (n - 2.0) * j.p2 - m * j.w2 - 2.0 * m * j.p1 * j.w1 + j.h2
        + 2.0 * j.p1 * j.h1
        - c.theta * j.u1 * j.u1;
    let e2 = (j.p2 - (n - 1.0) * j.p1 * j.p1 + m * j.p1 * j.w1 - j.p1 * j.h1) * a2
        - c.lambda / (j.phi * j.phi);
    let e3 = (j.w2 - (n - 2.0) * j.p1 * j.w1 + (m - 1.0) * j.w1 * j.w1 - j.w1 * j.h1)
        * a2
        - c.mu / (j.f * j.f * j.phi * j.phi)
        + c.lambda / (j.phi * j.phi);
    let e4 = (j.u2 - (n - 2.0) * j.p1 * j.u1 + m * j.u1 * j.w1 - j.u1 * j.h1) * a2;
    Ok([e1, e2, e3, e4])
}

/// Residuals of the five invariant equations for a fiber-placed harmonic map:
///   E1′ = (n−2)φ''/φ − m f''/f − 2m(φ'/φ)(f'/f) + h'' + 2(φ'/φ)h'
///   E2′ = [φ''/φ − (n−1)(φ'/φ)² + m(φ'/φ)(f'/f) − (φ'/φ)h'] ||α||² − λ/φ²
///   E3′ = [f''φ²f − (n−2)φ'φff' + (m−1)(f')²φ² − f'fφ²h'] ||α||² + λf²
///         − [τ''/τ − (m−1)(τ'/τ)²] ||β||²
///   E4′ = (m−2)τ''/τ − θ(u')²
///   E5′ = [τ²u'' − (m−2)ττ'u'] ||β||²
pub fn reduced_residuals_fiber(
    c: &WarpedCandidate,
    xi: f64,
    zeta: f64,
) -> Result<[f64; 5], SolitonError> {
    if c.u_placement != UPlacement::Fiber {
        return Err(SolitonError::WrongPlacement { expected: "fiber" });
    }
    let tau = c.tau.as_ref().ok_or(SolitonError::MissingTau)?;
    let beta = c.beta.as_ref().ok_or(SolitonError::MissingTau)?;
    let n = c.n() as f64;
    let m = c.m() as f64;
    let a2 = c.alpha_norm_sq();
    let b2 = beta.pseudo_norm_sq();
    let j = base_jets(c, xi)?;
    let tj = positive(tau, zeta, "tau")?;
    let uj = c.u.eval(zeta)?;
    let t1 = tj.d1 / tj.v;
    let t2 = tj.d2 / tj.v;

    let e1 = (n - 2.0) * j.p2 - m * j.w2 - 2.0 * m * j.p1 * j.w1 + j.h2
        + 2.0 * j.p1 * j.h1;
    let e2 = (j.p2 - (n - 1.0) * j.p1 * j.p1 + m * j.p1 * j.w1 - j.p1 * j.h1) * a2
        - c.lambda / (j.phi * j.phi);
    let phi2 = j.phi * j.phi;
    let e3 = (j.f * j.f * phi2)
        * (j.w2 - (n - 2.0) * j.p1 * j.w1 + (m - 1.0) * j.w1 * j.w1 - j.w1 * j.h1)
        * a2
        + c.lambda * j.f * j.f
        - (t2 - (m - 1.0) * t1 * t1) * b2;
    let e4 = (m - 2.0) * t2 - c.theta * uj.d1 * uj.d1;
    let e5 = (tj.v * tj.v * uj.d2 - (m - 2.0) * tj.v * tj.d1 * uj.d1) * b2;
    Ok([e1, e2, e3, e4, e5])
}

// ---------------------------------------------------------------------------
// Constants and diagnostics

/// Fiber Einstein constant evaluated pointwise:
/// μ(ξ) = f Δ_B f + (m−1)|∇f|²_B + λf² − f⟨∇f, ∇h⟩_B.
/// ξ-independent exactly when the candidate solves the system. The pairing
/// term carries a minus sign; with a plus the quantity fails to be constant
/// along the solution families this crate constructs.
pub fn mu_constant(c: &WarpedCandidate, xi: f64) -> Result<f64, SolitonError> {
    let fj = positive(&c.f, xi, "f")?;
    let lap = conformal_laplacian(&c.f, &c.phi, &c.alpha, xi)?;
    let grad = gradient_sq(&c.f, &c.phi, &c.alpha, xi)?;
    let pair = conformal_pairing(&c.f, &c.h, &c.phi, &c.alpha, xi)?;
    let m = c.m() as f64;
    Ok(fj.v * lap + (m - 1.0) * grad + c.lambda * fj.v * fj.v - fj.v * pair)
}

/// Drift Laplacian Δ_ω u = Δ_B u − ⟨∇u, ∇ω⟩ with ω = h − m log f; zero for
/// base-placed harmonic maps of a valid soliton.
pub fn drift_laplacian(c: &WarpedCandidate, xi: f64) -> Result<f64, SolitonError> {
    if c.u_placement != UPlacement::Base {
        return Err(SolitonError::WrongPlacement { expected: "base" });
    }
    let fj = positive(&c.f, xi, "f")?;
    let lap_u = conformal_laplacian(&c.u, &c.phi, &c.alpha, xi)?;
    let pair_uh = conformal_pairing(&c.u, &c.h, &c.phi, &c.alpha, xi)?;
    let pair_uf = conformal_pairing(&c.u, &c.f, &c.phi, &c.alpha, xi)?;
    let m = c.m() as f64;
    Ok(lap_u - pair_uh + (m / fj.v) * pair_uf)
}

/// Ξ(f) − (μ − λf²)/f with Ξ = Δ_B − ∇h + ((m−1)/f)∇f; zero for valid
/// solitons, so nonzero values localize which constant or profile is off.
pub fn xi_operator(c: &WarpedCandidate, xi: f64) -> Result<f64, SolitonError> {
    let fj = positive(&c.f, xi, "f")?;
    let lap_f = conformal_laplacian(&c.f, &c.phi, &c.alpha, xi)?;
    let pair_fh = conformal_pairing(&c.f, &c.h, &c.phi, &c.alpha, xi)?;
    let grad_f = gradient_sq(&c.f, &c.phi, &c.alpha, xi)?;
    let m = c.m() as f64;
    let xi_f = lap_f - pair_fh + ((m - 1.0) / fj.v) * grad_f;
    Ok(xi_f - (c.mu - c.lambda * fj.v * fj.v) / fj.v)
}

// ---------------------------------------------------------------------------
// Independent reconstruction of the tensor residual

/// Rebuild Ric + Hess h − θ∇u⊗∇u − λg and the harmonic residual from the
/// reduced scalar quantities alone (raw profile jets, no curvature-module
/// calls). Exists purely as a cross-check of `grhs_residual`.
pub fn reconstruct_residual(
    c: &WarpedCandidate,
    point: (f64, f64),
) -> Result<(BlockMatrix, f64), SolitonError> {
    let (xi, zeta) = point;
    let n = c.n();
    let m = c.m();
    let nf = n as f64;
    let mf = m as f64;
    let a2 = c.alpha_norm_sq();
    let mut j = base_jets(c, xi)?;
    if c.u_placement == UPlacement::Base {
        let uj = c.u.eval(xi)?;
        j.u1 = uj.d1;
        j.u2 = uj.d2;
    }

    // Base block: E1-coefficient on α⊗α plus E2-coefficient on diag(ε).
    let mut e1 = (nf - 2.0) * j.p2 - mf * j.w2 - 2.0 * mf * j.p1 * j.w1 + j.h2
        + 2.0 * j.p1 * j.h1;
    if c.u_placement == UPlacement::Base {
        e1 -= c.theta * j.u1 * j.u1;
    }
    let e2 = (j.p2 - (nf - 1.0) * j.p1 * j.p1 + mf * j.p1 * j.w1 - j.p1 * j.h1) * a2
        - c.lambda / (j.phi * j.phi);
    let mut base = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            let aik = c.alpha.coefficient(i) * c.alpha.coefficient(k);
            let mut v = e1 * aik;
            if i == k {
                v += c.base.epsilon(i) * e2;
            }
            base[(i, k)] = v;
        }
    }

    // Pointwise fiber Einstein constant, from jets.
    let phi2 = j.phi * j.phi;
    let rho = (j.f * j.f * phi2)
        * (j.w2 - (nf - 2.0) * j.p1 * j.w1 + (mf - 1.0) * j.w1 * j.w1 - j.w1 * j.h1)
        * a2
        + c.lambda * j.f * j.f;

    let mut fiber = DMatrix::zeros(m, m);
    match (&c.tau, &c.beta) {
        (Some(tau), Some(beta)) => {
            let tj = positive(tau, zeta, "tau")?;
            let t1 = tj.d1 / tj.v;
            let t2 = tj.d2 / tj.v;
            let b2 = beta.pseudo_norm_sq();
            let tau_bracket = t2 - (mf - 1.0) * t1 * t1;
            let mut outer_coeff = (mf - 2.0) * t2;
            if c.u_placement == UPlacement::Fiber {
                let uj = c.u.eval(zeta)?;
                outer_coeff -= c.theta * uj.d1 * uj.d1;
            }
            let diag_coeff = b2 * tau_bracket - rho / (tj.v * tj.v);
            for a in 0..m {
                for b in 0..m {
                    let bab = beta.coefficient(a) * beta.coefficient(b);
                    let mut v = outer_coeff * bab;
                    if a == b {
                        v += c.fiber.epsilon(a) * diag_coeff;
                    }
                    fiber[(a, b)] = v;
                }
            }
        }
        _ => {
            // Abstract Einstein fiber: residual is (μ − ρ) g₀′.
            let coeff = c.mu - rho;
            for a in 0..m {
                fiber[(a, a)] = c.fiber.epsilon(a) * coeff;
            }
        }
    }

    let harmonic = match c.u_placement {
        UPlacement::Base => {
            let e4 =
                (j.u2 - (nf - 2.0) * j.p1 * j.u1 + mf * j.u1 * j.w1 - j.u1 * j.h1) * a2;
            phi2 * e4
        }
        UPlacement::Fiber => {
            let tau = c.tau.as_ref().ok_or(SolitonError::MissingTau)?;
            let beta = c.beta.as_ref().ok_or(SolitonError::MissingTau)?;
            let tj = positive(tau, zeta, "tau")?;
            let uj = c.u.eval(zeta)?;
            let b2 = beta.pseudo_norm_sq();
            let e5 =
                (tj.v * tj.v * uj.d2 - (mf - 2.0) * tj.v * tj.d1 * uj.d1) * b2;
            e5 / (j.f * j.f)
        }
    };

    Ok((
        BlockMatrix {
            base,
            mixed: DMatrix::zeros(n, m),
            fiber,
        },
        harmonic,
    ))
}

/// Recover the fiber Einstein constant from the assembled fiber Ricci block,
/// one estimate per fiber direction: μ̂ = (Ric_F)_jj / (g_F)_jj. Used to check
/// that a passing base-placed candidate really has an Einstein fiber with
/// constant `mu_constant`.
pub fn fiber_einstein_estimates(
    c: &WarpedCandidate,
    point: (f64, f64),
) -> Result<Vec<f64>, SolitonError> {
    let (xi, zeta) = point;
    let ricci = curvature::warped_ricci(c, point)?;
    let fj = positive(&c.f, xi, "f")?;
    let lap = conformal_laplacian(&c.f, &c.phi, &c.alpha, xi)?;
    let grad = gradient_sq(&c.f, &c.phi, &c.alpha, xi)?;
    let bracket = fj.v * lap + (c.m() as f64 - 1.0) * grad;
    let g_f = fiber_metric(c, zeta)?;
    Ok((0..c.m())
        .map(|jj| (ricci.fiber[(jj, jj)] + bracket * g_f[(jj, jj)]) / g_f[(jj, jj)])
        .collect())
}

// ---------------------------------------------------------------------------
// Grids and verification

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisSpec {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn new(start: f64, end: f64, count: usize) -> Self {
        AxisSpec { start, end, count }
    }

    /// Uniform samples, pulled in by 1% of the span from each end so open
    /// endpoint singularities stay out of the grid.
    pub fn points(&self) -> Vec<f64> {
        let span = self.end - self.start;
        let a = self.start + 0.01 * span;
        let b = self.end - 0.01 * span;
        if self.count <= 1 {
            return vec![0.5 * (a + b)];
        }
        (0..self.count)
            .map(|i| a + (b - a) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GridSpec {
    pub xi: AxisSpec,
    /// Used only when the candidate carries a concrete fiber factor.
    pub zeta: Option<AxisSpec>,
}

impl GridSpec {
    pub fn new(xi: AxisSpec, zeta: Option<AxisSpec>) -> Self {
        GridSpec { xi, zeta }
    }

    /// 101 points over the profile domains clamped to [−5, 5].
    pub fn default_for(c: &WarpedCandidate) -> Self {
        let xi = default_axis(&[&c.phi, &c.f, &c.h], clamp_window(c, UPlacement::Base));
        let zeta = c.tau.as_ref().map(|tau| {
            default_axis(&[tau], clamp_window(c, UPlacement::Fiber))
        });
        GridSpec { xi, zeta }
    }
}

fn clamp_window(c: &WarpedCandidate, side: UPlacement) -> Option<&Profile> {
    if c.u_placement == side {
        Some(&c.u)
    } else {
        None
    }
}

fn default_axis(profiles: &[&Profile], extra: Option<&Profile>) -> AxisSpec {
    let mut lo = -5.0f64;
    let mut hi = 5.0f64;
    for p in profiles.iter().copied().chain(extra) {
        let (a, b) = p.domain();
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if !(lo < hi) {
        // Degenerate overlap; fall back to a token around the midpoint.
        let mid = 0.5 * (lo + hi);
        return AxisSpec::new(mid - 0.5, mid + 0.5, 101);
    }
    AxisSpec::new(lo, hi, 101)
}

/// Per-equation sup-norm residuals over a sample grid.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub equations: Vec<String>,
    pub sup_residuals: Vec<f64>,
    pub grid_xi: Vec<f64>,
    pub grid_zeta: Option<Vec<f64>>,
    pub tolerance: f64,
    pub passed: bool,
}

impl ResidualReport {
    pub fn sup(&self, label: &str) -> Option<f64> {
        self.equations
            .iter()
            .position(|e| e == label)
            .map(|i| self.sup_residuals[i])
    }

    pub fn to_value(&self) -> Value {
        json!({
            "version": "report-v1",
            "equations": self.equations,
            "sup_residuals": self.sup_residuals,
            "grid": {
                "xi": self.grid_xi,
                "zeta": self.grid_zeta,
            },
            "tolerance": self.tolerance,
            "passed": self.passed,
        })
    }
}

/// Evaluate every applicable residual over the grid and aggregate sup-norms.
/// Always checks the tensor equation and the harmonic component; adds the
/// matching reduced system, the μ-constancy spread against the stored
/// constant, and the diagnostic operators.
pub fn verify(
    c: &WarpedCandidate,
    grid: &GridSpec,
    tolerance: f64,
) -> Result<ResidualReport, SolitonError> {
    let xi_points = grid.xi.points();
    if xi_points.is_empty() {
        return Err(SolitonError::EmptyGrid);
    }
    let zeta_points: Vec<f64> = if c.tau.is_some() {
        grid.zeta.unwrap_or(grid.xi).points()
    } else {
        vec![0.0]
    };

    let reduced_base = c.u_placement == UPlacement::Base && c.tau.is_none();
    let reduced_fiber = c.u_placement == UPlacement::Fiber && c.tau.is_some();

    let mut equations: Vec<String> = vec![
        "grhs.base".into(),
        "grhs.mixed".into(),
        "grhs.fiber".into(),
        "harmonic".into(),
    ];
    if reduced_base {
        equations.extend((1..=4).map(|i| format!("E{i}.base")));
    }
    if reduced_fiber {
        equations.extend((1..=5).map(|i| format!("E{i}.fiber")));
    }
    equations.push("mu-const".into());
    if c.u_placement == UPlacement::Base {
        equations.push("drift".into());
    }
    equations.push("xi".into());
    let width = equations.len();

    let sups = xi_points
        .par_iter()
        .map(|&xi| -> Result<Vec<f64>, SolitonError> {
            let mut acc = vec![0.0f64; width];
            for &zeta in &zeta_points {
                let (blocks, harmonic) = grhs_residual(c, (xi, zeta))?;
                let (b, mx, fb) = blocks.block_sups();
                let mut col = 0;
                acc[col] = acc[col].max(b);
                col += 1;
                acc[col] = acc[col].max(mx);
                col += 1;
                acc[col] = acc[col].max(fb);
                col += 1;
                acc[col] = acc[col].max(harmonic.abs());
                col += 1;
                if reduced_base {
                    let r = reduced_residuals_base(c, xi)?;
                    for v in r {
                        acc[col] = acc[col].max(v.abs());
                        col += 1;
                    }
                }
                if reduced_fiber {
                    let r = reduced_residuals_fiber(c, xi, zeta)?;
                    for v in r {
                        acc[col] = acc[col].max(v.abs());
                        col += 1;
                    }
                }
                acc[col] = acc[col].max((mu_constant(c, xi)? - c.mu).abs());
                col += 1;
                if c.u_placement == UPlacement::Base {
                    acc[col] = acc[col].max(drift_laplacian(c, xi)?.abs());
                    col += 1;
                }
                acc[col] = acc[col].max(xi_operator(c, xi)?.abs());
                col += 1;
                debug_assert_eq!(col, width);
            }
            Ok(acc)
        })
        .try_reduce(
            || vec![0.0f64; width],
            |a, b| Ok(a.into_iter().zip(b).map(|(x, y)| x.max(y)).collect()),
        )?;

    let passed = sups.iter().all(|&s| s <= tolerance);
    Ok(ResidualReport {
        equations,
        sup_residuals: sups,
        grid_xi: xi_points,
        grid_zeta: if c.tau.is_some() {
            Some(zeta_points)
        } else {
            None
        },
        tolerance,
        passed,
    })
}
