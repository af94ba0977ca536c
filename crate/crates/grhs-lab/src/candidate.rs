//! Full soliton candidates on warped products B ×_f F.

use serde_json::{json, Value};
use thiserror::Error;

use crate::factor::{FactorError, InvariantDirection, SemiEuclideanFactor};
use crate::profile::{self, Profile, ProfileError};

#[derive(Debug, Error)]
pub enum CandidateError {
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("{profile} must be strictly positive, found {value} at t = {t}")]
    NonPositiveProfile {
        profile: &'static str,
        value: f64,
        t: f64,
    },
    #[error("theta must be a nonnegative finite real, got {0}")]
    BadTheta(f64),
    #[error("{0} must be finite")]
    NonFiniteConstant(&'static str),
    #[error("fiber conformal factor requires a fiber invariant direction")]
    TauWithoutBeta,
    #[error("fiber-placed harmonic map requires a concrete fiber metric (tau and beta)")]
    FiberPlacementNeedsTau,
    #[error("candidate JSON does not match candidate-v1: {0}")]
    Schema(String),
}

/// Which factor the harmonic map u depends on. Base means u = u(ξ), fiber
/// means u = u(ζ).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UPlacement {
    Base,
    Fiber,
}

/// Candidate metric g = φ^{-2}g₀ + f²τ^{-2}g₀′ with profiles depending on
/// the invariant coordinates ξ (base) and ζ (fiber), together with potential
/// h, harmonic map u, coupling θ and the soliton/Einstein constants λ, μ.
///
/// `tau = None` leaves the fiber abstract: an Einstein fiber with
/// Ric_F = μ·g_F and no concrete coordinates. Everything that only needs the
/// fiber through its Einstein constant still works in that mode.
#[derive(Clone, Debug)]
pub struct WarpedCandidate {
    pub base: SemiEuclideanFactor,
    pub alpha: InvariantDirection,
    pub phi: Profile,
    pub fiber: SemiEuclideanFactor,
    pub beta: Option<InvariantDirection>,
    pub tau: Option<Profile>,
    pub f: Profile,
    pub h: Profile,
    pub u: Profile,
    pub u_placement: UPlacement,
    pub theta: f64,
    pub lambda: f64,
    pub mu: f64,
}

/// Points at which positivity of φ, f, τ is spot-checked; the domains may be
/// unbounded, so sampling is clamped to a finite window first.
const POSITIVITY_SAMPLES: usize = 33;
const POSITIVITY_WINDOW: f64 = 20.0;

impl WarpedCandidate {
    pub fn n(&self) -> usize {
        self.base.dim()
    }

    pub fn m(&self) -> usize {
        self.fiber.dim()
    }

    pub fn alpha_norm_sq(&self) -> f64 {
        self.alpha.pseudo_norm_sq()
    }

    pub fn beta_norm_sq(&self) -> Option<f64> {
        self.beta.as_ref().map(InvariantDirection::pseudo_norm_sq)
    }

    /// Structural checks plus positivity spot checks on φ, f and τ.
    pub fn validate(&self) -> Result<(), CandidateError> {
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(CandidateError::BadTheta(self.theta));
        }
        if !self.lambda.is_finite() {
            return Err(CandidateError::NonFiniteConstant("lambda"));
        }
        if !self.mu.is_finite() {
            return Err(CandidateError::NonFiniteConstant("mu"));
        }
        if self.tau.is_some() && self.beta.is_none() {
            return Err(CandidateError::TauWithoutBeta);
        }
        if self.u_placement == UPlacement::Fiber
            && (self.tau.is_none() || self.beta.is_none())
        {
            return Err(CandidateError::FiberPlacementNeedsTau);
        }
        check_positive(&self.phi, "phi")?;
        check_positive(&self.f, "f")?;
        if let Some(tau) = &self.tau {
            check_positive(tau, "tau")?;
        }
        Ok(())
    }
}

fn check_positive(p: &Profile, name: &'static str) -> Result<(), CandidateError> {
    let (lo, hi) = p.domain();
    let a = lo.max(-POSITIVITY_WINDOW);
    let b = hi.min(POSITIVITY_WINDOW);
    if !(a < b) {
        return Ok(());
    }
    // Pull in from the open endpoints.
    let pad = 1e-6 * (b - a);
    let (a, b) = (a + pad, b - pad);
    for i in 0..POSITIVITY_SAMPLES {
        let t = a + (b - a) * i as f64 / (POSITIVITY_SAMPLES - 1) as f64;
        let v = p.value(t)?;
        if v <= 0.0 {
            return Err(CandidateError::NonPositiveProfile {
                profile: name,
                value: v,
                t,
            });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// candidate-v1 JSON

pub fn to_value(c: &WarpedCandidate) -> Result<Value, CandidateError> {
    Ok(json!({
        "version": "candidate-v1",
        "base": {"signature": c.base.signature()},
        "alpha": c.alpha.coefficients(),
        "phi": profile::to_value(&c.phi)?,
        "fiber": {"signature": c.fiber.signature()},
        "beta": c.beta.as_ref().map(InvariantDirection::coefficients),
        "tau": c.tau.as_ref().map(profile::to_value).transpose()?,
        "f": profile::to_value(&c.f)?,
        "h": profile::to_value(&c.h)?,
        "u": profile::to_value(&c.u)?,
        "u_placement": match c.u_placement {
            UPlacement::Base => "base",
            UPlacement::Fiber => "fiber",
        },
        "theta": c.theta,
        "lambda": c.lambda,
        "mu": c.mu,
    }))
}

pub fn from_value(v: &Value) -> Result<WarpedCandidate, CandidateError> {
    let obj = v
        .as_object()
        .ok_or_else(|| CandidateError::Schema("expected object".into()))?;
    match obj.get("version").and_then(Value::as_str) {
        Some("candidate-v1") => {}
        other => {
            return Err(CandidateError::Schema(format!(
                "unsupported version {other:?}"
            )))
        }
    }
    let factor = |key: &str| -> Result<SemiEuclideanFactor, CandidateError> {
        let sig = obj
            .get(key)
            .and_then(|f| f.get("signature"))
            .and_then(Value::as_array)
            .ok_or_else(|| CandidateError::Schema(format!("missing {key}.signature")))?;
        let sig: Vec<i8> = sig
            .iter()
            .map(|e| {
                e.as_i64()
                    .map(|x| x as i8)
                    .ok_or_else(|| CandidateError::Schema("bad signature entry".into()))
            })
            .collect::<Result<_, _>>()?;
        Ok(SemiEuclideanFactor::new(sig)?)
    };
    let reals = |key: &str| -> Result<Option<Vec<f64>>, CandidateError> {
        match obj.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::Array(a)) => Ok(Some(
                a.iter()
                    .map(|e| {
                        e.as_f64()
                            .ok_or_else(|| CandidateError::Schema(format!("bad {key} entry")))
                    })
                    .collect::<Result<_, _>>()?,
            )),
            _ => Err(CandidateError::Schema(format!("{key} must be an array"))),
        }
    };
    let prof = |key: &str| -> Result<Profile, CandidateError> {
        let pv = obj
            .get(key)
            .ok_or_else(|| CandidateError::Schema(format!("missing {key}")))?;
        Ok(profile::from_value(pv)?)
    };
    let real = |key: &str| -> Result<f64, CandidateError> {
        obj.get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| CandidateError::Schema(format!("missing {key}")))
    };

    let base = factor("base")?;
    let fiber = factor("fiber")?;
    let alpha_coeffs = reals("alpha")?
        .ok_or_else(|| CandidateError::Schema("missing alpha".into()))?;
    let alpha = InvariantDirection::new(&base, alpha_coeffs)?;
    let beta = reals("beta")?
        .map(|c| InvariantDirection::new(&fiber, c))
        .transpose()?;
    let tau = match obj.get("tau") {
        None | Some(Value::Null) => None,
        Some(tv) => Some(profile::from_value(tv)?),
    };
    let u_placement = match obj.get("u_placement").and_then(Value::as_str) {
        Some("base") => UPlacement::Base,
        Some("fiber") => UPlacement::Fiber,
        other => {
            return Err(CandidateError::Schema(format!(
                "u_placement must be base or fiber, got {other:?}"
            )))
        }
    };

    let candidate = WarpedCandidate {
        base,
        alpha,
        phi: prof("phi")?,
        fiber,
        beta,
        tau,
        f: prof("f")?,
        h: prof("h")?,
        u: prof("u")?,
        u_placement,
        theta: real("theta")?,
        lambda: real("lambda")?,
        mu: real("mu")?,
    };
    candidate.validate()?;
    Ok(candidate)
}
