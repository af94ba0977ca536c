//! First-order flow for the variable-z base family.
//!
//! With ψ = f'/f and z defined by h' = (z + m − k(n−2))ψ, the base system
//! collapses to ψ' = zψ² together with z' = −ψPQ, where P = z+k−√D,
//! Q = z+k+√D, D = m+k²(n−1). The closed form ψ(z) = c₆ P^{(a−1)/2} Q^{−(a+1)/2}
//! with a = k/√D satisfies both relations; its companion is
//! z' = −c₆ P^{(a+1)/2} Q^{(1−a)/2}.
//!
//! A second convention is kept behind `ZConvention::Printed`: the same pair
//! with the two Q-exponents swapped, i.e. ψ ∝ Q^{(1−a)/2} and z' ∝ Q^{−(a+1)/2}.
//! That variant does not satisfy ψ' = zψ², and the redundant integration of
//! ψ̃' = zψ̃² carried alongside the flow makes the mismatch measurable instead
//! of silent: `psi_spread` stays at integration accuracy for `Consistent` and
//! grows to order one for `Printed`.

use std::fmt;
use std::sync::Arc;

use crate::ode::{self, OdeOptions, Solution, StopReason};
use crate::profile::{Expr, ExternalField, Jet, Profile, ProfileError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZConvention {
    /// Exponent pair closed under ψ' = zψ² (default).
    Consistent,
    /// Q-exponents of ψ and z' swapped; kept for comparison.
    Printed,
}

impl ZConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            ZConvention::Consistent => "consistent",
            ZConvention::Printed => "printed",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ZFlowParams {
    pub n: usize,
    pub m: usize,
    pub k: f64,
    /// Initial z at ξ = xi0; both P and Q must be positive there.
    pub z0: f64,
    pub c6: f64,
    pub xi0: f64,
    /// Length of the integration interval [xi0, xi0 + span].
    pub span: f64,
    pub convention: ZConvention,
}

#[derive(Debug, thiserror::Error)]
pub enum ZFlowError {
    #[error("factor {factor} is {value:.6e} at xi = {xi:.6}; real powers need both factors positive")]
    ComplexPower {
        xi: f64,
        factor: &'static str,
        value: f64,
    },
    #[error("step size collapsed at xi = {xi:.6}")]
    StepCollapse { xi: f64 },
    #[error("integration stopped early at xi = {xi:.6}: {why}")]
    Stopped { xi: f64, why: String },
    #[error("c6 must be >= 0 and finite, got {0}")]
    BadScale(f64),
    #[error("k must be >= 0 and finite, got {0}")]
    BadK(f64),
    #[error("span must be positive and finite, got {0}")]
    BadSpan(f64),
}

/// Integrated flow with derivative wiring for the reconstructed profiles.
#[derive(Clone, Debug)]
pub struct ZFlow {
    pub params: ZFlowParams,
    pub sqrt_d: f64,
    pub a: f64,
    /// States [z, ln f, h, ψ̃] over [xi0, xi0 + span].
    pub sol: Solution,
    /// sup |ψ̃ − ψ(z)| over accepted nodes; the redundant-path check.
    pub psi_spread: f64,
}

struct Rates {
    psi: f64,
    zdot: f64,
}

fn rates(params: &ZFlowParams, sqrt_d: f64, a: f64, xi: f64, z: f64) -> Result<Rates, ZFlowError> {
    if params.c6 == 0.0 {
        return Ok(Rates { psi: 0.0, zdot: 0.0 });
    }
    let p = z + params.k - sqrt_d;
    let q = z + params.k + sqrt_d;
    if p <= 0.0 {
        return Err(ZFlowError::ComplexPower {
            xi,
            factor: "z+k-sqrt(m+k^2(n-1))",
            value: p,
        });
    }
    if q <= 0.0 {
        return Err(ZFlowError::ComplexPower {
            xi,
            factor: "z+k+sqrt(m+k^2(n-1))",
            value: q,
        });
    }
    let (psi_q_exp, zdot_q_exp) = match params.convention {
        ZConvention::Consistent => (-(a + 1.0) / 2.0, (1.0 - a) / 2.0),
        ZConvention::Printed => ((1.0 - a) / 2.0, -(a + 1.0) / 2.0),
    };
    Ok(Rates {
        psi: params.c6 * p.powf((a - 1.0) / 2.0) * q.powf(psi_q_exp),
        zdot: -params.c6 * p.powf((a + 1.0) / 2.0) * q.powf(zdot_q_exp),
    })
}

impl ZFlow {
    pub fn integrate(params: ZFlowParams) -> Result<ZFlow, ZFlowError> {
        if !(params.c6 >= 0.0) || !params.c6.is_finite() {
            return Err(ZFlowError::BadScale(params.c6));
        }
        if !(params.k >= 0.0) || !params.k.is_finite() {
            return Err(ZFlowError::BadK(params.k));
        }
        if !(params.span > 0.0) || !params.span.is_finite() {
            return Err(ZFlowError::BadSpan(params.span));
        }
        let sqrt_d = (params.m as f64 + params.k * params.k * (params.n as f64 - 1.0)).sqrt();
        let a = params.k / sqrt_d;
        let psi0 = rates(&params, sqrt_d, a, params.xi0, params.z0)?.psi;

        let nk = params.m as f64 - params.k * (params.n as f64 - 2.0);
        let rhs = |xi: f64, y: &[f64]| -> Result<Vec<f64>, ZFlowError> {
            let r = rates(&params, sqrt_d, a, xi, y[0])?;
            let psi_tilde = y[3];
            Ok(vec![
                r.zdot,
                r.psi,
                (y[0] + nk) * r.psi,
                y[0] * psi_tilde * psi_tilde,
            ])
        };

        let opts = OdeOptions::default();
        let sol = ode::integrate(
            rhs,
            params.xi0,
            &[params.z0, 0.0, 0.0, psi0],
            params.xi0 + params.span,
            &opts,
        )?;
        match &sol.stop {
            StopReason::Completed => {}
            StopReason::StepCollapse { t } => {
                return Err(ZFlowError::StepCollapse { xi: *t })
            }
            other => {
                return Err(ZFlowError::Stopped {
                    xi: sol.end_t(),
                    why: format!("{other:?}"),
                })
            }
        }

        let mut psi_spread = 0.0f64;
        for (t, y) in sol.ts.iter().zip(&sol.ys) {
            let r = rates(&params, sqrt_d, a, *t, y[0])?;
            psi_spread = psi_spread.max((y[3] - r.psi).abs());
        }

        Ok(ZFlow {
            params,
            sqrt_d,
            a,
            sol,
            psi_spread,
        })
    }

    fn state(&self, xi: f64) -> Result<[f64; 4], ProfileError> {
        let (lo, hi) = self.domain();
        let y = self.sol.sample(xi).ok_or(ProfileError::OutOfDomain {
            t: xi,
            lo,
            hi,
        })?;
        Ok([y[0], y[1], y[2], y[3]])
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.params.xi0, self.params.xi0 + self.params.span)
    }

    /// f, φ = f^k, and h as profiles whose jets come from the flow's own
    /// right-hand sides rather than from differentiating the interpolant.
    pub fn profiles(self) -> (Profile, Profile, Profile) {
        let flow = Arc::new(self);
        let f = Profile::new(Expr::External(Arc::new(ZProfile {
            flow: Arc::clone(&flow),
            kind: ZProfileKind::Warping,
        })));
        let phi = Profile::new(Expr::External(Arc::new(ZProfile {
            flow: Arc::clone(&flow),
            kind: ZProfileKind::Conformal,
        })));
        let h = Profile::new(Expr::External(Arc::new(ZProfile {
            flow,
            kind: ZProfileKind::Potential,
        })));
        (f, phi, h)
    }
}

#[derive(Clone, Copy, Debug)]
enum ZProfileKind {
    Warping,
    Conformal,
    Potential,
}

struct ZProfile {
    flow: Arc<ZFlow>,
    kind: ZProfileKind,
}

impl fmt::Debug for ZProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ZProfile({:?})", self.kind)
    }
}

impl ExternalField for ZProfile {
    fn eval(&self, xi: f64) -> Result<Jet, ProfileError> {
        let [z, lnf, h, _] = self.flow.state(xi)?;
        let p = &self.flow.params;
        let r = rates(p, self.flow.sqrt_d, self.flow.a, xi, z).map_err(|e| {
            ProfileError::NotDifferentiable(match e {
                ZFlowError::ComplexPower { .. } => "z left the admissible region",
                _ => "flow evaluation failed",
            })
        })?;
        let psi = r.psi;
        let k = p.k;
        let nk = p.m as f64 - k * (p.n as f64 - 2.0);
        Ok(match self.kind {
            ZProfileKind::Warping => {
                let v = lnf.exp();
                // f' = ψf, f'' = (ψ' + ψ²)f with ψ' = zψ².
                Jet::new(v, psi * v, (z + 1.0) * psi * psi * v)
            }
            ZProfileKind::Conformal => {
                let v = (k * lnf).exp();
                Jet::new(v, k * psi * v, k * (z + k) * psi * psi * v)
            }
            ZProfileKind::Potential => {
                // h' = (z + m − k(n−2))ψ; h'' = z'ψ + (z + m − k(n−2))zψ².
                Jet::new(h, (z + nk) * psi, r.zdot * psi + (z + nk) * z * psi * psi)
            }
        })
    }

    fn domain(&self) -> (f64, f64) {
        self.flow.domain()
    }

    fn label(&self) -> &str {
        match self.kind {
            ZProfileKind::Warping => "zflow-f",
            ZProfileKind::Conformal => "zflow-phi",
            ZProfileKind::Potential => "zflow-h",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(convention: ZConvention) -> ZFlowParams {
        // √D = 2, a = 1/2, admissible region z > 1.
        ZFlowParams {
            n: 2,
            m: 3,
            k: 1.0,
            z0: 2.0,
            c6: 0.1,
            xi0: 0.0,
            span: 5.0,
            convention,
        }
    }

    #[test]
    fn consistent_convention_keeps_redundant_psi_in_lockstep() {
        let flow = ZFlow::integrate(params(ZConvention::Consistent)).unwrap();
        assert!(
            flow.psi_spread <= 1e-7,
            "psi spread {} exceeds budget",
            flow.psi_spread
        );
    }

    #[test]
    fn printed_convention_is_flagged_by_the_redundant_path() {
        // Either the redundant ψ̃ visibly departs from the closed form, or it
        // blows up before the span ends. Both outcomes flag the mismatch.
        match ZFlow::integrate(params(ZConvention::Printed)) {
            Ok(flow) => assert!(
                flow.psi_spread > 1e-4,
                "swapped exponents should desynchronize psi, spread {}",
                flow.psi_spread
            ),
            Err(ZFlowError::StepCollapse { xi }) => {
                assert!(xi < 5.0, "collapse inside the span, got {xi}")
            }
            Err(other) => panic!("unexpected failure mode: {other}"),
        }

        // On a shorter span the printed flow completes and the spread is
        // macroscopic rather than at integration accuracy.
        let mut p = params(ZConvention::Printed);
        p.span = 2.0;
        let flow = ZFlow::integrate(p).unwrap();
        assert!(
            flow.psi_spread > 1e-2,
            "printed-pair spread {} should be far above integration error",
            flow.psi_spread
        );
    }

    #[test]
    fn zero_scale_gives_the_trivial_product() {
        let mut p = params(ZConvention::Consistent);
        p.c6 = 0.0;
        let (f, phi, h) = ZFlow::integrate(p).unwrap().profiles();
        for &xi in &[0.5, 2.5, 4.5] {
            assert_eq!(f.eval(xi).unwrap().v, 1.0);
            assert_eq!(phi.eval(xi).unwrap().v, 1.0);
            let hj = h.eval(xi).unwrap();
            assert_eq!((hj.v, hj.d1, hj.d2), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn inadmissible_initial_z_is_rejected_with_location() {
        let mut p = params(ZConvention::Consistent);
        p.z0 = 0.5; // P = 0.5 + 1 - 2 < 0
        match ZFlow::integrate(p) {
            Err(ZFlowError::ComplexPower { xi, value, .. }) => {
                assert_eq!(xi, 0.0);
                assert!(value < 0.0);
            }
            other => panic!("expected complex-power rejection, got {other:?}"),
        }
    }

    #[test]
    fn profile_jets_match_central_differences() {
        let flow = ZFlow::integrate(params(ZConvention::Consistent)).unwrap();
        let (f, phi, h) = flow.profiles();
        let step = 1e-5;
        for profile in [&f, &phi, &h] {
            for &xi in &[1.0, 2.0, 4.0] {
                let j = profile.eval(xi).unwrap();
                let vp = profile.eval(xi + step).unwrap().v;
                let vm = profile.eval(xi - step).unwrap().v;
                let d1_fd = (vp - vm) / (2.0 * step);
                let d2_fd = (vp - 2.0 * j.v + vm) / (step * step);
                assert!((j.d1 - d1_fd).abs() <= 1e-6 * (1.0 + j.d1.abs()));
                assert!((j.d2 - d2_fd).abs() <= 1e-4 * (1.0 + j.d2.abs()));
            }
        }
    }

    #[test]
    fn z_decreases_toward_the_lower_admissible_edge() {
        let flow = ZFlow::integrate(params(ZConvention::Consistent)).unwrap();
        let z_end = flow.sol.end_y()[0];
        assert!(z_end < 2.0 && z_end > 1.0, "z at end: {z_end}");
    }
}
