//! Geodesic flow of the warped product metric phi^{-2} g0 + f^2 tau^{-2} g0'
//! in the product chart, plus a seeded completeness probe.
//!
//! Two right-hand sides share the state layout [x, y, v, w]:
//!
//! * `Full` integrates the complete Christoffel flow of the diagonal metric.
//!   Within each block the connection is conformal; across blocks the only
//!   couplings are the warp forcing on the base and the -2 (f'/f) xi' w
//!   damping on the fiber.
//! * `WarpForcing` keeps only those cross-block couplings and drops the
//!   within-block conformal terms. This is the smaller system the
//!   completeness argument for the null-base family integrates in closed
//!   form; it is not the geodesic equation of the metric unless both
//!   conformal factors are constant.
//!
//! An independently assembled split form (base equation of the unwarped
//! base metric plus f grad f forcing, fiber equation of the unwarped fiber
//! metric plus logarithmic damping) serves as an oracle for `Full`.
//!
//! The probe never claims completeness: it reports early terminations and
//! conserved-speed drift for a deterministic sample of causal classes, and
//! its summary is worded as "no finite-parameter obstruction detected up to
//! s_max" at best.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::candidate::WarpedCandidate;
use crate::ode::{self, OdeOptions, StopReason};
use crate::profile::{Jet, ProfileError};

#[derive(Debug, thiserror::Error)]
pub enum GeodesicError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("state has length {got}, expected {want}")]
    BadState { got: usize, want: usize },
    #[error("sampling: {0}")]
    Sampling(String),
}

/// Which right-hand side to integrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowKind {
    /// The geodesic equation of the warped metric.
    Full,
    /// Cross-block warp couplings only; the reduced system solved in closed
    /// form by the completeness argument.
    WarpForcing,
}

impl FlowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FlowKind::Full => "full",
            FlowKind::WarpForcing => "warp-forcing",
        }
    }

    pub fn parse(s: &str) -> Option<FlowKind> {
        match s {
            "full" => Some(FlowKind::Full),
            "warp-forcing" => Some(FlowKind::WarpForcing),
            _ => None,
        }
    }
}

fn check_state(c: &WarpedCandidate, state: &[f64]) -> Result<(), GeodesicError> {
    let want = 2 * (c.n() + c.m());
    if state.len() != want {
        return Err(GeodesicError::BadState {
            got: state.len(),
            want,
        });
    }
    Ok(())
}

struct PointData {
    phi: Jet,
    f: Jet,
    /// tau jet, (1, 0, 0) when the candidate has no fiber conformal factor.
    tau: Jet,
    xi_dot: f64,
    zeta_dot: f64,
    /// Flat pseudo-quadratic sum eps_i v_i^2 of the base velocity.
    eta_base: f64,
    /// Flat pseudo-quadratic sum eps'_a w_a^2 of the fiber velocity.
    eta_fiber: f64,
}

fn point_data(c: &WarpedCandidate, state: &[f64]) -> Result<PointData, GeodesicError> {
    let n = c.n();
    let m = c.m();
    let (x, rest) = state.split_at(n);
    let (y, vel) = rest.split_at(m);
    let (v, w) = vel.split_at(n);
    let xi = c.alpha.invariant_coordinate(x);
    let phi = c.phi.eval(xi)?;
    let f = c.f.eval(xi)?;
    let (tau, zeta_dot) = match (&c.tau, &c.beta) {
        (Some(tau), Some(beta)) => {
            let zeta = beta.invariant_coordinate(y);
            let t = tau.eval(zeta)?;
            let zd = (0..m).map(|a| beta.coefficient(a) * w[a]).sum();
            (t, zd)
        }
        _ => (Jet::new(1.0, 0.0, 0.0), 0.0),
    };
    let xi_dot = (0..n).map(|i| c.alpha.coefficient(i) * v[i]).sum();
    let eta_base = (0..n).map(|i| c.base.epsilon(i) * v[i] * v[i]).sum();
    let eta_fiber = (0..m).map(|a| c.fiber.epsilon(a) * w[a] * w[a]).sum();
    Ok(PointData {
        phi,
        f,
        tau,
        xi_dot,
        zeta_dot,
        eta_base,
        eta_fiber,
    })
}

/// g(gamma', gamma') at the state; conserved along the `Full` flow.
pub fn metric_speed_sq(c: &WarpedCandidate, state: &[f64]) -> Result<f64, GeodesicError> {
    check_state(c, state)?;
    let d = point_data(c, state)?;
    let base = d.eta_base / (d.phi.v * d.phi.v);
    let fiber = d.eta_fiber * d.f.v * d.f.v / (d.tau.v * d.tau.v);
    Ok(base + fiber)
}

/// Right-hand side [v, w, a_base, a_fiber] of the requested flow.
pub fn geodesic_rhs(
    c: &WarpedCandidate,
    flow: FlowKind,
    state: &[f64],
) -> Result<Vec<f64>, GeodesicError> {
    check_state(c, state)?;
    let n = c.n();
    let m = c.m();
    let d = point_data(c, state)?;
    let v = &state[n + m..2 * n + m];
    let w = &state[2 * n + m..];
    let p1 = d.phi.d1 / d.phi.v;
    let fl = d.f.d1 / d.f.v;
    let tl = d.tau.d1 / d.tau.v;
    let phi2 = d.phi.v * d.phi.v;
    // Warped fiber kinetic term g_F(w, w) = f^2 tau^{-2} eta_fiber.
    let q_fiber = d.f.v * d.f.v / (d.tau.v * d.tau.v) * d.eta_fiber;

    let mut out = vec![0.0; 2 * (n + m)];
    out[..n + m].copy_from_slice(&state[n + m..]);
    for k in 0..n {
        let ae = c.alpha.coefficient(k) * c.base.epsilon(k);
        let forcing = fl * ae * phi2 * q_fiber;
        out[n + m + k] = match flow {
            FlowKind::Full => p1 * (2.0 * d.xi_dot * v[k] - ae * d.eta_base) + forcing,
            FlowKind::WarpForcing => forcing,
        };
    }
    for a in 0..m {
        let damping = -2.0 * fl * d.xi_dot * w[a];
        out[2 * n + m + a] = match flow {
            FlowKind::Full => {
                let be = match &c.beta {
                    Some(beta) => beta.coefficient(a) * c.fiber.epsilon(a),
                    None => 0.0,
                };
                tl * (2.0 * d.zeta_dot * w[a] - be * d.eta_fiber) + damping
            }
            FlowKind::WarpForcing => damping,
        };
    }
    Ok(out)
}

/// The `Full` flow assembled the other way: base geodesic of phi^{-2} g0
/// plus f grad f times the unwarped fiber speed, fiber geodesic of
/// tau^{-2} g0' minus twice the logarithmic derivative of f along the curve.
/// Algebraically identical to `geodesic_rhs(.., Full, ..)`; kept as an
/// independently derived oracle.
pub fn geodesic_rhs_split(
    c: &WarpedCandidate,
    state: &[f64],
) -> Result<Vec<f64>, GeodesicError> {
    check_state(c, state)?;
    let n = c.n();
    let m = c.m();
    let d = point_data(c, state)?;
    let v = &state[n + m..2 * n + m];
    let w = &state[2 * n + m..];
    let p1 = d.phi.d1 / d.phi.v;
    let tl = d.tau.d1 / d.tau.v;
    let phi2 = d.phi.v * d.phi.v;
    // Unwarped fiber speed g0'(w, w) with conformal weight tau^{-2}.
    let fiber_speed = d.eta_fiber / (d.tau.v * d.tau.v);

    let mut out = vec![0.0; 2 * (n + m)];
    out[..n + m].copy_from_slice(&state[n + m..]);
    for k in 0..n {
        let base_geodesic =
            p1 * (2.0 * d.xi_dot * v[k]
                - c.alpha.coefficient(k) * c.base.epsilon(k) * d.eta_base);
        // grad_B f = phi^2 eps_k alpha_k f'.
        let grad_f = phi2 * c.base.epsilon(k) * c.alpha.coefficient(k) * d.f.d1;
        out[n + m + k] = base_geodesic + d.f.v * fiber_speed * grad_f;
    }
    let dlnf_ds = d.f.d1 / d.f.v * d.xi_dot;
    for a in 0..m {
        let be = match &c.beta {
            Some(beta) => beta.coefficient(a) * c.fiber.epsilon(a),
            None => 0.0,
        };
        let fiber_geodesic = tl * (2.0 * d.zeta_dot * w[a] - be * d.eta_fiber);
        out[2 * n + m + a] = fiber_geodesic - 2.0 * dlnf_ds * w[a];
    }
    Ok(out)
}

/// Why a trajectory stopped where it did.
#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    ReachedSMax,
    StepCollapse { s: f64 },
    Diverged { s: f64, norm: f64 },
    DomainEdge { s: f64, why: String },
    MaxSteps { s: f64 },
}

impl Termination {
    pub fn is_complete(&self) -> bool {
        matches!(self, Termination::ReachedSMax)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Termination::ReachedSMax => "reached-s-max",
            Termination::StepCollapse { .. } => "step-collapse",
            Termination::Diverged { .. } => "diverged",
            Termination::DomainEdge { .. } => "domain-edge",
            Termination::MaxSteps { .. } => "max-steps",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IntegrateOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Sup-norm ceiling; beyond it the run counts as diverged.
    pub norm_cap: f64,
    /// Step collapse threshold relative to 1 + |s|.
    pub min_step_rel: f64,
    pub max_steps: usize,
    pub flow: FlowKind,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            rtol: 1e-10,
            atol: 1e-12,
            norm_cap: 1e12,
            min_step_rel: 1e-12,
            max_steps: 1_000_000,
            flow: FlowKind::Full,
        }
    }
}

/// Accepted nodes of one geodesic run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub ss: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// |g(gamma', gamma') - initial| at each node.
    pub drifts: Vec<f64>,
    pub termination: Termination,
    pub initial_speed_sq: f64,
    pub steps: usize,
}

impl Trajectory {
    pub fn end_s(&self) -> f64 {
        *self.ss.last().expect("trajectory has at least the start node")
    }

    pub fn max_drift(&self) -> f64 {
        self.drifts.iter().cloned().fold(0.0, f64::max)
    }
}

/// Integrate one geodesic to the signed parameter `s_max`.
pub fn integrate_geodesic(
    c: &WarpedCandidate,
    state0: &[f64],
    s_max: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory, GeodesicError> {
    check_state(c, state0)?;
    let initial_speed_sq = metric_speed_sq(c, state0)?;
    let ode_opts = OdeOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        h0: None,
        max_steps: opts.max_steps,
        norm_cap: Some(opts.norm_cap),
        min_step_rel: opts.min_step_rel,
        stop_on_rhs_error: true,
    };
    let sol = ode::integrate(
        |_s, y| geodesic_rhs(c, opts.flow, y),
        0.0,
        state0,
        s_max,
        &ode_opts,
    )?;
    let termination = match &sol.stop {
        StopReason::Completed => Termination::ReachedSMax,
        StopReason::StepCollapse { t } => Termination::StepCollapse { s: *t },
        StopReason::NormExceeded { t } => {
            let norm = sol.end_y().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            Termination::Diverged { s: *t, norm }
        }
        StopReason::MaxSteps { t } => Termination::MaxSteps { s: *t },
        StopReason::RhsError { t, message } => Termination::DomainEdge {
            s: *t,
            why: message.clone(),
        },
    };
    let drifts = sol
        .ys
        .iter()
        .map(|y| {
            metric_speed_sq(c, y)
                .map(|q| (q - initial_speed_sq).abs())
                .unwrap_or(f64::INFINITY)
        })
        .collect();
    Ok(Trajectory {
        ss: sol.ts,
        states: sol.ys,
        drifts,
        termination,
        initial_speed_sq,
        steps: sol.steps,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CausalClass {
    Null,
    Timelike,
    Spacelike,
}

impl CausalClass {
    pub fn as_str(self) -> &'static str {
        match self {
            CausalClass::Null => "null",
            CausalClass::Timelike => "timelike",
            CausalClass::Spacelike => "spacelike",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ProbeConfig {
    pub count: usize,
    pub s_max: f64,
    pub seed: u64,
    /// Overall velocity magnitude before the causal adjustment. The probe's
    /// value is part of what it certifies; shrinking it to dodge blow-ups
    /// would defeat the sweep.
    pub velocity_scale: f64,
    pub options: IntegrateOptions,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            count: 50,
            s_max: 1e3,
            seed: 0,
            velocity_scale: 1.0,
            options: IntegrateOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProbeRun {
    pub index: usize,
    pub class: CausalClass,
    /// +1.0 or -1.0: the sign of s_max for this run.
    pub direction: f64,
    pub termination: Termination,
    pub end_s: f64,
    pub max_drift: f64,
    pub steps: usize,
}

#[derive(Clone, Debug)]
pub struct ProbeOutcome {
    pub runs: Vec<ProbeRun>,
    pub early_terminations: usize,
    pub max_drift: f64,
    pub summary: String,
}

fn finite_window(lo: f64, hi: f64) -> (f64, f64) {
    const W: f64 = 5.0;
    let a = lo.max(-W);
    let b = hi.min(W);
    if a < b {
        return (a, b);
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => (lo, hi),
        (true, false) => (lo, lo + 2.0 * W),
        (false, true) => (hi - 2.0 * W, hi),
        (false, false) => (-W, W),
    }
}

fn intersect(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0.max(b.0), a.1.min(b.1))
}

/// The deterministic initial states the probe integrates: positions spread
/// over the profile domains, velocities cycled through the causal classes
/// (falling back to spacelike when the metric has no timelike axis).
pub fn seeded_states(
    c: &WarpedCandidate,
    cfg: &ProbeConfig,
) -> Result<Vec<(CausalClass, Vec<f64>)>, GeodesicError> {
    let n = c.n();
    let m = c.m();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let base_dom = intersect(
        intersect(c.phi.domain(), c.f.domain()),
        c.h.domain(),
    );
    let (blo, bhi) = finite_window(base_dom.0, base_dom.1);
    let bspan = bhi - blo;
    let fiber_dom = match &c.tau {
        Some(tau) => tau.domain(),
        None => (f64::NEG_INFINITY, f64::INFINITY),
    };
    let (flo, fhi) = finite_window(fiber_dom.0, fiber_dom.1);
    let fspan = fhi - flo;
    let base_axis = (0..n)
        .find(|&i| c.alpha.coefficient(i) != 0.0)
        .expect("invariant direction has a nonzero coefficient");

    let indefinite = (0..n).any(|i| c.base.epsilon(i) < 0.0)
        || (0..m).any(|a| c.fiber.epsilon(a) < 0.0);

    let mut out = Vec::with_capacity(cfg.count);
    for i in 0..cfg.count {
        let wanted = match i % 3 {
            0 => CausalClass::Null,
            1 => CausalClass::Timelike,
            _ => CausalClass::Spacelike,
        };
        let class = if indefinite { wanted } else { CausalClass::Spacelike };

        let xi_t = blo + bspan * (0.1 + 0.8 * rng.gen::<f64>());
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xi_now = c.alpha.invariant_coordinate(&x);
        x[base_axis] += (xi_t - xi_now) / c.alpha.coefficient(base_axis);

        let mut y: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if let Some(beta) = &c.beta {
            let zeta_t = flo + fspan * (0.1 + 0.8 * rng.gen::<f64>());
            let fiber_axis = (0..m)
                .find(|&a| beta.coefficient(a) != 0.0)
                .expect("invariant direction has a nonzero coefficient");
            let zeta_now = beta.invariant_coordinate(&y);
            y[fiber_axis] += (zeta_t - zeta_now) / beta.coefficient(fiber_axis);
        }

        let phi = c.phi.eval(c.alpha.invariant_coordinate(&x))?;
        let f = c.f.eval(c.alpha.invariant_coordinate(&x))?;
        let tau_v = match (&c.tau, &c.beta) {
            (Some(tau), Some(beta)) => tau.eval(beta.invariant_coordinate(&y))?.v,
            _ => 1.0,
        };
        let mut weights = Vec::with_capacity(n + m);
        for i in 0..n {
            weights.push(c.base.epsilon(i) / (phi.v * phi.v));
        }
        for a in 0..m {
            weights.push(c.fiber.epsilon(a) * f.v * f.v / (tau_v * tau_v));
        }

        let vel = sample_velocity(&mut rng, &weights, class, cfg.velocity_scale)?;
        let mut state = Vec::with_capacity(2 * (n + m));
        state.extend_from_slice(&x);
        state.extend_from_slice(&y);
        state.extend_from_slice(&vel);
        out.push((class, state));
    }
    Ok(out)
}

fn sample_velocity(
    rng: &mut ChaCha8Rng,
    weights: &[f64],
    class: CausalClass,
    scale: f64,
) -> Result<Vec<f64>, GeodesicError> {
    for _ in 0..200 {
        let mut vel: Vec<f64> = weights
            .iter()
            .map(|_| rng.gen_range(-1.0..1.0) * scale)
            .collect();
        let q_plus: f64 = weights
            .iter()
            .zip(&vel)
            .filter(|(g, _)| **g > 0.0)
            .map(|(g, v)| g * v * v)
            .sum();
        let q_minus: f64 = weights
            .iter()
            .zip(&vel)
            .filter(|(g, _)| **g < 0.0)
            .map(|(g, v)| -g * v * v)
            .sum();
        let tiny = 1e-12 * scale * scale;
        let t2 = match class {
            CausalClass::Null => {
                if q_plus <= tiny || q_minus <= tiny {
                    continue;
                }
                q_plus / q_minus
            }
            CausalClass::Timelike => {
                if q_minus <= tiny {
                    continue;
                }
                (2.0 * q_plus + scale * scale) / q_minus
            }
            CausalClass::Spacelike => {
                if q_plus <= tiny {
                    continue;
                }
                if q_minus <= tiny {
                    1.0
                } else {
                    q_plus / (2.0 * q_minus)
                }
            }
        };
        let t = t2.sqrt();
        for (g, v) in weights.iter().zip(vel.iter_mut()) {
            if *g < 0.0 {
                *v *= t;
            }
        }
        return Ok(vel);
    }
    Err(GeodesicError::Sampling(
        "no velocity of the requested causal class after 200 draws".into(),
    ))
}

/// Integrate `count` seeded geodesics in both parameter directions and
/// aggregate terminations and conserved-speed drift. The reduction is a
/// fixed-order fold over run indices, so the outcome does not depend on
/// thread scheduling.
pub fn completeness_probe(
    c: &WarpedCandidate,
    cfg: &ProbeConfig,
) -> Result<ProbeOutcome, GeodesicError> {
    let states = seeded_states(c, cfg)?;
    let jobs: Vec<(usize, CausalClass, f64, &Vec<f64>)> = states
        .iter()
        .enumerate()
        .flat_map(|(i, (class, state))| {
            [
                (2 * i, *class, 1.0, state),
                (2 * i + 1, *class, -1.0, state),
            ]
        })
        .collect();
    let runs: Vec<ProbeRun> = jobs
        .par_iter()
        .map(|&(index, class, direction, state)| {
            let traj =
                integrate_geodesic(c, state, direction * cfg.s_max, &cfg.options)?;
            Ok(ProbeRun {
                index,
                class,
                direction,
                termination: traj.termination.clone(),
                end_s: traj.end_s(),
                max_drift: traj.max_drift(),
                steps: traj.steps,
            })
        })
        .collect::<Result<_, GeodesicError>>()?;

    let early_terminations = runs
        .iter()
        .filter(|r| !r.termination.is_complete())
        .count();
    let max_drift = runs.iter().fold(0.0f64, |acc, r| acc.max(r.max_drift));
    let summary = if early_terminations == 0 {
        format!(
            "no finite-parameter obstruction detected up to s_max = {:.6e}; \
             {} runs, max conserved-speed drift {:.3e}",
            cfg.s_max,
            runs.len(),
            max_drift
        )
    } else {
        let earliest = runs
            .iter()
            .filter(|r| !r.termination.is_complete())
            .map(|r| r.end_s.abs())
            .fold(f64::INFINITY, f64::min);
        format!(
            "{} of {} runs terminated early (earliest at |s| = {:.6e}); \
             max conserved-speed drift {:.3e}",
            early_terminations,
            runs.len(),
            earliest,
            max_drift
        )
    };
    Ok(ProbeOutcome {
        runs,
        early_terminations,
        max_drift,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidate::UPlacement;
    use crate::constructor::{gallery, GalleryOverrides};
    use crate::factor::{InvariantDirection, SemiEuclideanFactor};
    use crate::profile::{affine, Profile};

    fn flat_product() -> WarpedCandidate {
        let base = SemiEuclideanFactor::euclidean(2).unwrap();
        let alpha = InvariantDirection::new(&base, vec![1.0, 0.0]).unwrap();
        let fiber = SemiEuclideanFactor::euclidean(2).unwrap();
        WarpedCandidate {
            base,
            alpha,
            phi: Profile::constant(1.0),
            fiber,
            beta: None,
            tau: None,
            f: Profile::constant(1.0),
            h: Profile::constant(0.0),
            u: Profile::constant(0.0),
            u_placement: UPlacement::Base,
            theta: 1.0,
            lambda: 0.0,
            mu: 0.0,
        }
    }

    fn one_eight() -> WarpedCandidate {
        gallery(
            "1.8",
            &GalleryOverrides {
                theta_free: true,
                ..GalleryOverrides::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn flat_product_geodesics_are_straight_lines() {
        let c = flat_product();
        let state = vec![0.3, -0.2, 0.1, 0.4, 0.5, -0.7, 0.25, 0.6];
        let rhs = geodesic_rhs(&c, FlowKind::Full, &state).unwrap();
        assert_eq!(&rhs[4..], &[0.0; 4]);
        let traj =
            integrate_geodesic(&c, &state, 5.0, &IntegrateOptions::default()).unwrap();
        assert!(traj.termination.is_complete());
        let end = traj.states.last().unwrap();
        for i in 0..4 {
            assert!((end[i] - (state[i] + 5.0 * state[i + 4])).abs() <= 1e-10);
            assert!((end[i + 4] - state[i + 4]).abs() <= 1e-12);
        }
        assert!(traj.max_drift() <= 1e-14);
    }

    #[test]
    fn split_form_matches_the_christoffel_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for seed in 0..10u64 {
            let c = crate::sampling::random_candidate(seed);
            let dims = 2 * (c.n() + c.m());
            for _ in 0..100 {
                let state: Vec<f64> =
                    (0..dims).map(|_| rng.gen_range(-1.5..1.5)).collect();
                let full = geodesic_rhs(&c, FlowKind::Full, &state).unwrap();
                let split = geodesic_rhs_split(&c, &state).unwrap();
                for (a, b) in full.iter().zip(&split) {
                    assert!(
                        (a - b).abs() <= 1e-10 * (1.0 + a.abs()),
                        "seed {seed}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn null_base_velocity_blows_up_where_the_closed_form_says() {
        // Velocity along the null direction: xi'' = 2 A xi'^2, so with
        // xi'(0) = 1 the flow leaves every compact set at s* = 1/2.
        let c = one_eight();
        let mut state = vec![0.0; 12];
        state[6] = 0.5;
        state[7] = 0.5;
        let traj =
            integrate_geodesic(&c, &state, 10.0, &IntegrateOptions::default()).unwrap();
        assert!(!traj.termination.is_complete(), "{:?}", traj.termination);
        assert!(
            (traj.end_s() - 0.5).abs() <= 1e-3,
            "stopped at {}",
            traj.end_s()
        );
        for (s, st) in traj.ss.iter().zip(&traj.states) {
            if *s > 0.45 {
                break;
            }
            let xi = st[0] + st[1];
            let exact = -0.5 * (1.0 - 2.0 * s).ln();
            assert!((xi - exact).abs() <= 1e-8 * (1.0 + exact.abs()), "s={s}");
        }
    }

    #[test]
    fn zero_rate_subfamily_keeps_the_fiber_linear_under_the_full_flow() {
        // xi'(0) = 0 with the fiber start pinned at the critical point of
        // tau and zeta'(0) = 0: the fiber acceleration vanishes identically.
        let c = one_eight();
        let mut state = vec![0.0; 12];
        state[6] = 0.7;
        state[7] = -0.7; // alpha-orthogonal base velocity
        state[9] = 0.3;
        state[10] = -0.3; // beta-orthogonal fiber velocity
        state[11] = 0.8;
        let traj =
            integrate_geodesic(&c, &state, 8.0, &IntegrateOptions::default()).unwrap();
        assert!(traj.termination.is_complete());
        for (s, st) in traj.ss.iter().zip(&traj.states) {
            for a in 0..3 {
                let expect = state[3 + a] + s * state[9 + a];
                assert!(
                    (st[3 + a] - expect).abs() <= 1e-8 * (1.0 + expect.abs()),
                    "s={s} fiber coord {a}"
                );
            }
        }
    }

    #[test]
    fn axes_outside_the_invariant_plane_stay_put() {
        // xi'(0) = 0.3 blows up at s* = 1/0.6; stay short of it.
        let c = one_eight();
        let mut state = vec![0.0; 12];
        state[6] = 0.4;
        state[7] = -0.1;
        let traj =
            integrate_geodesic(&c, &state, 1.0, &IntegrateOptions::default()).unwrap();
        assert!(traj.termination.is_complete());
        for st in &traj.states {
            assert_eq!(st[2], 0.0);
            assert_eq!(&st[3..6], &[0.0; 3]);
        }
    }

    #[test]
    fn orthogonal_fiber_momentum_is_conserved() {
        // xi'(0) = -0.1 relaxes toward zero and zeta'(0) = 0 is preserved,
        // so the run is complete on [0, 5] while f^2 still varies.
        let c = one_eight();
        let state = vec![
            0.1, -0.2, 0.05, 0.2, -0.1, 0.3, 0.05, -0.15, 0.1, 0.2, -0.2, -0.4,
        ];
        let traj =
            integrate_geodesic(&c, &state, 5.0, &IntegrateOptions::default()).unwrap();
        assert!(traj.termination.is_complete());
        let momentum = |st: &[f64]| -> f64 {
            let xi = st[0] + st[1];
            let zeta = st[3] + st[4];
            let f = c.f.eval(xi).unwrap().v;
            let tau = c.tau.as_ref().unwrap().eval(zeta).unwrap().v;
            f * f / (tau * tau) * st[11]
        };
        let p0 = momentum(&state);
        for st in &traj.states {
            assert!((momentum(st) - p0).abs() <= 1e-8 * (1.0 + p0.abs()));
        }
    }

    #[test]
    fn singular_warping_terminates_at_the_domain_edge() {
        let base = SemiEuclideanFactor::euclidean(2).unwrap();
        let alpha = InvariantDirection::new(&base, vec![1.0, 0.0]).unwrap();
        let fiber = SemiEuclideanFactor::euclidean(2).unwrap();
        let c = WarpedCandidate {
            base,
            alpha,
            phi: Profile::constant(1.0),
            fiber,
            beta: None,
            tau: None,
            f: Profile::new(affine(-1.0, 1.0).pow(-1.0))
                .with_domain(f64::NEG_INFINITY, 1.0),
            h: Profile::constant(0.0),
            u: Profile::constant(0.0),
            u_placement: UPlacement::Base,
            theta: 1.0,
            lambda: 0.0,
            mu: 0.0,
        };
        c.validate().unwrap();
        let state = vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        let traj =
            integrate_geodesic(&c, &state, 5.0, &IntegrateOptions::default()).unwrap();
        // The curve crosses the edge at s = 1 exactly; the integrator must
        // refuse to sample beyond it and park strictly inside. The gap to
        // the edge depends on the step size, so only the side is asserted.
        match &traj.termination {
            Termination::DomainEdge { s, .. } | Termination::StepCollapse { s } => {
                assert!((0.0..1.0).contains(s), "stopped at {s}");
            }
            other => panic!("expected a domain stop, got {other:?}"),
        }
        assert!(traj.states.last().unwrap()[0] < 1.0);
    }

    #[test]
    fn reversing_velocities_retraces_the_trajectory() {
        let c = one_eight();
        let state = vec![
            0.05, -0.1, 0.2, 0.1, -0.15, 0.2, 0.12, -0.2, 0.05, 0.1, 0.05, -0.1,
        ];
        let opts = IntegrateOptions::default();
        let fwd = integrate_geodesic(&c, &state, 2.0, &opts).unwrap();
        assert!(fwd.termination.is_complete());
        let mut back_state = fwd.states.last().unwrap().clone();
        for v in back_state[6..].iter_mut() {
            *v = -*v;
        }
        let back = integrate_geodesic(&c, &back_state, 2.0, &opts).unwrap();
        assert!(back.termination.is_complete());
        let end = back.states.last().unwrap();
        for i in 0..6 {
            assert!((end[i] - state[i]).abs() <= 1e-8, "coord {i}");
            assert!((end[i + 6] + state[i + 6]).abs() <= 1e-8, "velocity {i}");
        }
    }

    #[test]
    fn warp_forcing_flow_matches_its_closed_forms() {
        let c = one_eight();
        // xi'(0) = c1 = 0.3 along the null direction, mixed fiber velocity.
        let mut state = vec![0.0; 12];
        state[6] = 0.15;
        state[7] = 0.15;
        state[9] = 0.4;
        state[10] = -0.2;
        state[11] = 0.3;
        let opts = IntegrateOptions {
            flow: FlowKind::WarpForcing,
            ..IntegrateOptions::default()
        };
        let traj = integrate_geodesic(&c, &state, 2.0, &opts).unwrap();
        assert!(traj.termination.is_complete());
        let c1 = 0.3;
        let a = 1.0;
        for (s, st) in traj.ss.iter().zip(&traj.states) {
            let xi = st[0] + st[1];
            assert!((xi - c1 * s).abs() <= 1e-10 * (1.0 + s.abs()));
            for i in 0..3 {
                let w0 = state[9 + i];
                let expect =
                    state[3 + i] + w0 * (1.0 - (-2.0 * a * c1 * s).exp()) / (2.0 * a * c1);
                assert!(
                    (st[3 + i] - expect).abs() <= 1e-8 * (1.0 + expect.abs()),
                    "s={s} fiber {i}"
                );
            }
        }

        // c1 = 0: every fiber coordinate is exactly linear.
        let mut state = vec![0.0; 12];
        state[6] = 0.5;
        state[7] = -0.5;
        state[9] = 0.4;
        state[11] = 0.3;
        let traj = integrate_geodesic(&c, &state, 2.0, &opts).unwrap();
        for (s, st) in traj.ss.iter().zip(&traj.states) {
            for i in 0..3 {
                let expect = state[3 + i] + s * state[9 + i];
                assert!((st[3 + i] - expect).abs() <= 1e-9 * (1.0 + expect.abs()));
            }
        }
    }

    #[test]
    fn probe_is_deterministic_and_reports_no_obstruction_on_the_flat_product() {
        let c = flat_product();
        let cfg = ProbeConfig {
            count: 6,
            s_max: 50.0,
            ..ProbeConfig::default()
        };
        let first = completeness_probe(&c, &cfg).unwrap();
        assert_eq!(first.early_terminations, 0);
        assert_eq!(first.runs.len(), 12);
        assert!(first
            .summary
            .starts_with("no finite-parameter obstruction detected up to"));
        assert!(first.runs.iter().all(|r| r.class == CausalClass::Spacelike));
        let second = completeness_probe(&c, &cfg).unwrap();
        assert_eq!(first.summary, second.summary);
        for (a, b) in first.runs.iter().zip(&second.runs) {
            assert_eq!(a.termination, b.termination);
            assert_eq!(a.max_drift.to_bits(), b.max_drift.to_bits());
        }
    }

    #[test]
    fn probe_counts_early_terminations_honestly() {
        let c = one_eight();
        let cfg = ProbeConfig {
            count: 6,
            s_max: 40.0,
            ..ProbeConfig::default()
        };
        let outcome = completeness_probe(&c, &cfg).unwrap();
        let counted = outcome
            .runs
            .iter()
            .filter(|r| !r.termination.is_complete())
            .count();
        assert_eq!(outcome.early_terminations, counted);
        if counted > 0 {
            assert!(outcome.summary.contains("terminated early"));
        }
        let classes: Vec<CausalClass> =
            outcome.runs.iter().map(|r| r.class).collect();
        assert!(classes.contains(&CausalClass::Null));
        assert!(classes.contains(&CausalClass::Timelike));
        assert!(classes.contains(&CausalClass::Spacelike));
    }
}
