//! One-variable profiles with exact first and second derivatives.
//!
//! A [`Profile`] is a closed expression tree over constants, the identity,
//! sums, products, negation, real-exponent powers, `exp` and `log`, plus an
//! antiderivative node (value by adaptive quadrature, derivatives taken from
//! the integrand exactly) and an escape hatch for externally defined fields
//! such as ODE dense output. Derivatives come from structural differentiation
//! of the tree, never from finite differences; the finite-difference oracle in
//! the test suite exists to check exactly that.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex};

use serde_json::{json, Value};
use thiserror::Error;

use crate::quad;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("argument {t} outside domain ({lo}, {hi})")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },
    #[error("{op} produced a non-finite value at t = {t}")]
    NonFinite { op: &'static str, t: f64 },
    #[error("log of non-positive value {value} at t = {t}")]
    LogDomain { t: f64, value: f64 },
    #[error("power {exponent} of non-positive base {base} at t = {t}")]
    PowDomain { t: f64, base: f64, exponent: f64 },
    #[error("negative power of zero base at t = {t}")]
    PowZeroBase { t: f64 },
    #[error("expression cannot be differentiated structurally: {0}")]
    NotDifferentiable(&'static str),
    #[error("profile JSON does not match profile-v1: {0}")]
    Schema(String),
}

/// Value together with first and second derivative at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub const fn new(v: f64, d1: f64, d2: f64) -> Self {
        Jet { v, d1, d2 }
    }

    fn add(self, o: Jet) -> Jet {
        Jet::new(self.v + o.v, self.d1 + o.d1, self.d2 + o.d2)
    }

    fn mul(self, o: Jet) -> Jet {
        Jet::new(
            self.v * o.v,
            self.d1 * o.v + self.v * o.d1,
            self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        )
    }

    fn neg(self) -> Jet {
        Jet::new(-self.v, -self.d1, -self.d2)
    }

    fn is_finite(self) -> bool {
        self.v.is_finite() && self.d1.is_finite() && self.d2.is_finite()
    }
}

/// Externally defined scalar field exposing exact jets, used for profiles
/// produced by ODE integration. Serialization samples the field; a profile
/// rebuilt from those samples interpolates and is flagged non-portable-exact.
pub trait ExternalField: Send + Sync {
    fn eval(&self, t: f64) -> Result<Jet, ProfileError>;
    /// Open interval on which `eval` is defined.
    fn domain(&self) -> (f64, f64);
    fn label(&self) -> &str;
}

#[derive(Clone)]
pub enum Expr {
    Const(f64),
    Var,
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Neg(Box<Expr>),
    /// Base raised to a fixed real exponent. Integer exponents admit negative
    /// bases; fractional exponents require a strictly positive base.
    Pow(Box<Expr>, f64),
    Exp(Box<Expr>),
    Log(Box<Expr>),
    /// t ↦ ∫_reference^t integrand. Value by adaptive quadrature to `tol`,
    /// first derivative is the integrand itself, second its derivative.
    Antiderivative {
        integrand: Box<Expr>,
        reference: f64,
        tol: f64,
        cache: Arc<SegmentCache>,
    },
    External(Arc<dyn ExternalField>),
}

/// Cumulative quadrature checkpoints for one antiderivative node, keyed by
/// signed panel index from the reference point, plus a bounded memo of full
/// values keyed by the exact argument bits. Each checkpoint is a fixed sum
/// of fixed-endpoint panel integrals and each memoized value is what a fresh
/// computation at that argument returns, so nothing here depends on which
/// evaluation (or thread) fills it in first; concurrent fills race only to
/// write identical numbers. Shared across clones of the node so nested
/// antiderivatives reuse the inner node's warmup.
#[derive(Default)]
pub struct SegmentCache {
    panels: Mutex<HashMap<i64, f64>>,
    values: Mutex<HashMap<u64, f64>>,
}

/// Memo entries per antiderivative node before insertion stops. Verification
/// grids revisit the same abscissas constantly; unbounded flows do not get to
/// exhaust memory.
const VALUE_MEMO_CAP: usize = 1 << 16;

/// Panel width for cached antiderivative checkpoints. Narrow enough that the
/// final partial-panel integral stays cheap, wide enough that a sweep over a
/// verification grid touches only a few dozen panels.
const PANEL_WIDTH: f64 = 0.5;

/// Panels beyond this index fall back to one direct integral over the whole
/// span; a cache that far from the reference would only burn memory.
const PANEL_LIMIT: i64 = 1 << 20;

fn checkpoint(
    cache: &SegmentCache,
    integrand: &Expr,
    reference: f64,
    k: i64,
    panel_tol: f64,
) -> Result<f64, ProfileError> {
    if k == 0 {
        return Ok(0.0);
    }
    let step = if k > 0 { 1 } else { -1 };
    // Resume from the nearest cached checkpoint between the reference and k.
    let (mut j, mut acc) = {
        let map = cache.panels.lock().unwrap();
        if let Some(v) = map.get(&k) {
            return Ok(*v);
        }
        let mut i = k - step;
        loop {
            if i == 0 {
                break (0, 0.0);
            }
            if let Some(v) = map.get(&i) {
                break (i, *v);
            }
            i -= step;
        }
    };
    while j != k {
        let a = reference + j as f64 * PANEL_WIDTH;
        let b = reference + (j + step) as f64 * PANEL_WIDTH;
        let mut f = |s: f64| eval_value(integrand, s);
        acc += quad::integrate(&mut f, a, b, panel_tol)?;
        j += step;
        cache.panels.lock().unwrap().insert(j, acc);
    }
    Ok(acc)
}

/// Antiderivative value at `t`: cumulative checkpoint plus the remaining
/// partial panel. Deterministic in `t` alone, so repeated runs reproduce the
/// same bits regardless of evaluation order.
fn antiderivative_value(
    cache: &SegmentCache,
    integrand: &Expr,
    reference: f64,
    tol: f64,
    t: f64,
) -> Result<f64, ProfileError> {
    if !t.is_finite() {
        return Err(ProfileError::NonFinite {
            op: "antiderivative",
            t,
        });
    }
    let key = t.to_bits();
    if let Some(v) = cache.values.lock().unwrap().get(&key) {
        return Ok(*v);
    }
    let mut f = |s: f64| eval_value(integrand, s);
    let k = ((t - reference) / PANEL_WIDTH).trunc() as i64;
    let v = if k.abs() >= PANEL_LIMIT {
        quad::integrate(&mut f, reference, t, tol)?
    } else {
        let base = checkpoint(cache, integrand, reference, k, tol / 32.0)?;
        let start = reference + k as f64 * PANEL_WIDTH;
        base + quad::integrate(&mut f, start, t, tol / 2.0)?
    };
    let mut memo = cache.values.lock().unwrap();
    if memo.len() < VALUE_MEMO_CAP {
        memo.insert(key, v);
    }
    Ok(v)
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "Const({c})"),
            Expr::Var => write!(f, "Var"),
            Expr::Sum(v) => f.debug_tuple("Sum").field(v).finish(),
            Expr::Product(v) => f.debug_tuple("Product").field(v).finish(),
            Expr::Neg(e) => f.debug_tuple("Neg").field(e).finish(),
            Expr::Pow(e, p) => f.debug_tuple("Pow").field(e).field(p).finish(),
            Expr::Exp(e) => f.debug_tuple("Exp").field(e).finish(),
            Expr::Log(e) => f.debug_tuple("Log").field(e).finish(),
            Expr::Antiderivative {
                integrand,
                reference,
                tol,
                ..
            } => f
                .debug_struct("Antiderivative")
                .field("integrand", integrand)
                .field("reference", reference)
                .field("tol", tol)
                .finish(),
            Expr::External(ext) => write!(f, "External({})", ext.label()),
        }
    }
}

// ---------------------------------------------------------------------------
// Builders

pub fn constant(c: f64) -> Expr {
    Expr::Const(c)
}

/// The identity profile t ↦ t.
pub fn var() -> Expr {
    Expr::Var
}

/// a·t + b.
pub fn affine(a: f64, b: f64) -> Expr {
    constant(a) * var() + constant(b)
}

impl Expr {
    pub fn pow(self, p: f64) -> Expr {
        Expr::Pow(Box::new(self), p)
    }

    pub fn sqrt(self) -> Expr {
        self.pow(0.5)
    }

    pub fn exp(self) -> Expr {
        Expr::Exp(Box::new(self))
    }

    pub fn log(self) -> Expr {
        Expr::Log(Box::new(self))
    }

    pub fn antiderivative(self, reference: f64) -> Expr {
        self.antiderivative_with_tol(reference, quad::DEFAULT_TOL)
    }

    pub fn antiderivative_with_tol(self, reference: f64, tol: f64) -> Expr {
        Expr::Antiderivative {
            integrand: Box::new(self),
            reference,
            tol,
            cache: Arc::new(SegmentCache::default()),
        }
    }

    /// Structural derivative of the tree, with constant folding only.
    pub fn differentiate(&self) -> Result<Expr, ProfileError> {
        let d = match self {
            Expr::Const(_) => constant(0.0),
            Expr::Var => constant(1.0),
            Expr::Sum(terms) => {
                let parts = terms
                    .iter()
                    .map(|t| t.differentiate())
                    .collect::<Result<Vec<_>, _>>()?;
                Expr::Sum(parts)
            }
            Expr::Product(factors) => {
                let mut terms = Vec::with_capacity(factors.len());
                for (i, fi) in factors.iter().enumerate() {
                    let mut parts = factors.clone();
                    parts[i] = fi.differentiate()?;
                    terms.push(Expr::Product(parts));
                }
                Expr::Sum(terms)
            }
            Expr::Neg(e) => Expr::Neg(Box::new(e.differentiate()?)),
            Expr::Pow(base, p) => {
                if *p == 0.0 {
                    constant(0.0)
                } else {
                    Expr::Product(vec![
                        constant(*p),
                        base.as_ref().clone().pow(p - 1.0),
                        base.differentiate()?,
                    ])
                }
            }
            Expr::Exp(e) => Expr::Product(vec![self.clone(), e.differentiate()?]),
            Expr::Log(e) => {
                Expr::Product(vec![e.differentiate()?, e.as_ref().clone().pow(-1.0)])
            }
            Expr::Antiderivative { integrand, .. } => integrand.as_ref().clone(),
            Expr::External(_) => {
                return Err(ProfileError::NotDifferentiable(
                    "externally defined field",
                ))
            }
        };
        Ok(fold(d))
    }
}

/// Constant folding: flatten nested sums/products, drop zero terms and unit
/// factors, collapse all-constant nodes. No other simplification.
fn fold(e: Expr) -> Expr {
    match e {
        Expr::Sum(terms) => {
            let mut acc = 0.0;
            let mut rest = Vec::new();
            for t in terms {
                match fold(t) {
                    Expr::Const(c) => acc += c,
                    Expr::Sum(inner) => rest.extend(inner),
                    other => rest.push(other),
                }
            }
            if acc != 0.0 || rest.is_empty() {
                rest.push(constant(acc));
            }
            if rest.len() == 1 {
                rest.pop().unwrap()
            } else {
                Expr::Sum(rest)
            }
        }
        Expr::Product(factors) => {
            let mut acc = 1.0;
            let mut rest = Vec::new();
            for t in factors {
                match fold(t) {
                    Expr::Const(c) => acc *= c,
                    Expr::Product(inner) => rest.extend(inner),
                    other => rest.push(other),
                }
            }
            if acc == 0.0 {
                return constant(0.0);
            }
            if acc != 1.0 || rest.is_empty() {
                rest.insert(0, constant(acc));
            }
            if rest.len() == 1 {
                rest.pop().unwrap()
            } else {
                Expr::Product(rest)
            }
        }
        Expr::Neg(inner) => match fold(*inner) {
            Expr::Const(c) => constant(-c),
            other => Expr::Neg(Box::new(other)),
        },
        other => other,
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Sum(vec![self, rhs])
    }
}

impl Add<f64> for Expr {
    type Output = Expr;
    fn add(self, rhs: f64) -> Expr {
        self + constant(rhs)
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sum(vec![self, Expr::Neg(Box::new(rhs))])
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Product(vec![self, rhs])
    }
}

impl Mul<f64> for Expr {
    type Output = Expr;
    fn mul(self, rhs: f64) -> Expr {
        self * constant(rhs)
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

// ---------------------------------------------------------------------------
// Profile

/// Expression tree together with its open domain interval.
#[derive(Clone, Debug)]
pub struct Profile {
    expr: Expr,
    lo: f64,
    hi: f64,
}

impl Profile {
    /// Wrap an expression; the domain defaults to (−∞, ∞) narrowed by the
    /// positivity requirements of `log` and fractional-power nodes whose
    /// arguments are affine in t.
    pub fn new(expr: Expr) -> Self {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        narrow(&expr, &mut lo, &mut hi);
        Profile { expr, lo, hi }
    }

    pub fn constant(c: f64) -> Self {
        Profile::new(constant(c))
    }

    pub fn var() -> Self {
        Profile::new(var())
    }

    /// Intersect the domain with (lo, hi). Automatic narrowing is kept: an
    /// explicit domain can only shrink the valid interval, never extend it.
    pub fn with_domain(mut self, lo: f64, hi: f64) -> Self {
        self.lo = self.lo.max(lo);
        self.hi = self.hi.min(hi);
        self
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// Value, first and second derivative at `t`.
    pub fn eval(&self, t: f64) -> Result<Jet, ProfileError> {
        if !(t > self.lo && t < self.hi) {
            return Err(ProfileError::OutOfDomain {
                t,
                lo: self.lo,
                hi: self.hi,
            });
        }
        let jet = eval_jet(&self.expr, t)?;
        if jet.is_finite() {
            Ok(jet)
        } else {
            Err(ProfileError::NonFinite { op: "profile", t })
        }
    }

    pub fn value(&self, t: f64) -> Result<f64, ProfileError> {
        if !(t > self.lo && t < self.hi) {
            return Err(ProfileError::OutOfDomain {
                t,
                lo: self.lo,
                hi: self.hi,
            });
        }
        let v = eval_value(&self.expr, t)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ProfileError::NonFinite { op: "profile", t })
        }
    }

    /// Profile of the structural derivative.
    pub fn differentiate(&self) -> Result<Profile, ProfileError> {
        Ok(Profile {
            expr: self.expr.differentiate()?,
            lo: self.lo,
            hi: self.hi,
        })
    }
}

fn narrow(e: &Expr, lo: &mut f64, hi: &mut f64) {
    match e {
        Expr::Const(_) | Expr::Var => {}
        Expr::Sum(v) | Expr::Product(v) => v.iter().for_each(|c| narrow(c, lo, hi)),
        Expr::Neg(c) | Expr::Exp(c) => narrow(c, lo, hi),
        Expr::Log(arg) => {
            narrow_positive(arg, lo, hi);
            narrow(arg, lo, hi);
        }
        Expr::Pow(base, p) => {
            if p.fract() != 0.0 {
                narrow_positive(base, lo, hi);
            }
            narrow(base, lo, hi);
        }
        Expr::Antiderivative { integrand, .. } => narrow(integrand, lo, hi),
        Expr::External(ext) => {
            let (l, h) = ext.domain();
            *lo = lo.max(l);
            *hi = hi.min(h);
        }
    }
}

/// If `arg` is affine a·t + b, restrict (lo, hi) to where it is positive.
fn narrow_positive(arg: &Expr, lo: &mut f64, hi: &mut f64) {
    if let Some((a, b)) = as_affine(arg) {
        if a > 0.0 {
            *lo = lo.max(-b / a);
        } else if a < 0.0 {
            *hi = hi.min(-b / a);
        } else if b <= 0.0 {
            // Constant non-positive argument: empty domain.
            *lo = f64::INFINITY;
            *hi = f64::NEG_INFINITY;
        }
    }
}

fn as_affine(e: &Expr) -> Option<(f64, f64)> {
    match e {
        Expr::Const(c) => Some((0.0, *c)),
        Expr::Var => Some((1.0, 0.0)),
        Expr::Neg(inner) => as_affine(inner).map(|(a, b)| (-a, -b)),
        Expr::Sum(terms) => {
            let mut a = 0.0;
            let mut b = 0.0;
            for t in terms {
                let (ta, tb) = as_affine(t)?;
                a += ta;
                b += tb;
            }
            Some((a, b))
        }
        Expr::Product(factors) => {
            let mut acc = (0.0, 1.0);
            let mut seen_var = false;
            for f in factors {
                match as_affine(f)? {
                    (0.0, c) => {
                        acc.0 *= c;
                        acc.1 *= c;
                    }
                    (a, b) => {
                        if seen_var {
                            return None;
                        }
                        seen_var = true;
                        acc = (a * acc.1, b * acc.1);
                    }
                }
            }
            Some(acc)
        }
        _ => None,
    }
}

fn eval_jet(e: &Expr, t: f64) -> Result<Jet, ProfileError> {
    match e {
        Expr::Const(c) => Ok(Jet::new(*c, 0.0, 0.0)),
        Expr::Var => Ok(Jet::new(t, 1.0, 0.0)),
        Expr::Sum(terms) => {
            let mut acc = Jet::new(0.0, 0.0, 0.0);
            for term in terms {
                acc = acc.add(eval_jet(term, t)?);
            }
            Ok(acc)
        }
        Expr::Product(factors) => {
            let mut acc = Jet::new(1.0, 0.0, 0.0);
            for f in factors {
                acc = acc.mul(eval_jet(f, t)?);
            }
            Ok(acc)
        }
        Expr::Neg(inner) => Ok(eval_jet(inner, t)?.neg()),
        Expr::Pow(base, p) => pow_jet(eval_jet(base, t)?, *p, t),
        Expr::Exp(inner) => {
            let a = eval_jet(inner, t)?;
            let v = a.v.exp();
            if !v.is_finite() {
                return Err(ProfileError::NonFinite { op: "exp", t });
            }
            Ok(Jet::new(v, v * a.d1, v * (a.d2 + a.d1 * a.d1)))
        }
        Expr::Log(inner) => {
            let a = eval_jet(inner, t)?;
            if a.v <= 0.0 {
                return Err(ProfileError::LogDomain { t, value: a.v });
            }
            let d1 = a.d1 / a.v;
            Ok(Jet::new(a.v.ln(), d1, a.d2 / a.v - d1 * d1))
        }
        Expr::Antiderivative {
            integrand,
            reference,
            tol,
            cache,
        } => {
            let v = antiderivative_value(cache, integrand, *reference, *tol, t)?;
            let g = eval_jet(integrand, t)?;
            Ok(Jet::new(v, g.v, g.d1))
        }
        Expr::External(ext) => ext.eval(t),
    }
}

fn eval_value(e: &Expr, t: f64) -> Result<f64, ProfileError> {
    match e {
        Expr::Const(c) => Ok(*c),
        Expr::Var => Ok(t),
        Expr::Sum(terms) => {
            let mut acc = 0.0;
            for term in terms {
                acc += eval_value(term, t)?;
            }
            Ok(acc)
        }
        Expr::Product(factors) => {
            let mut acc = 1.0;
            for f in factors {
                acc *= eval_value(f, t)?;
            }
            Ok(acc)
        }
        Expr::Neg(inner) => Ok(-eval_value(inner, t)?),
        Expr::Pow(base, p) => {
            let b = eval_value(base, t)?;
            pow_value(b, *p, t)
        }
        Expr::Exp(inner) => {
            let v = eval_value(inner, t)?.exp();
            if v.is_finite() {
                Ok(v)
            } else {
                Err(ProfileError::NonFinite { op: "exp", t })
            }
        }
        Expr::Log(inner) => {
            let v = eval_value(inner, t)?;
            if v <= 0.0 {
                return Err(ProfileError::LogDomain { t, value: v });
            }
            Ok(v.ln())
        }
        Expr::Antiderivative {
            integrand,
            reference,
            tol,
            cache,
        } => antiderivative_value(cache, integrand, *reference, *tol, t),
        Expr::External(ext) => Ok(ext.eval(t)?.v),
    }
}

fn is_integer_exp(p: f64) -> bool {
    p.fract() == 0.0 && p.abs() <= i32::MAX as f64
}

fn pow_value(b: f64, p: f64, t: f64) -> Result<f64, ProfileError> {
    if p == 0.0 {
        return Ok(1.0);
    }
    if is_integer_exp(p) {
        if b == 0.0 && p < 0.0 {
            return Err(ProfileError::PowZeroBase { t });
        }
        Ok(b.powi(p as i32))
    } else {
        if b <= 0.0 {
            return Err(ProfileError::PowDomain {
                t,
                base: b,
                exponent: p,
            });
        }
        Ok(b.powf(p))
    }
}

fn pow_jet(b: Jet, p: f64, t: f64) -> Result<Jet, ProfileError> {
    if p == 0.0 {
        return Ok(Jet::new(1.0, 0.0, 0.0));
    }
    let (v, vm1, vm2) = if is_integer_exp(p) {
        if b.v == 0.0 && p < 3.0 {
            // b^p fine for p ≥ 0, but p−1 or p−2 negative hits 1/0.
            if p < 0.0 {
                return Err(ProfileError::PowZeroBase { t });
            }
            // p ∈ {1, 2}: derivatives stay polynomial; handle directly.
            let i = p as i32;
            let v = b.v.powi(i);
            let vm1 = if i >= 1 { b.v.powi(i - 1) } else { 0.0 };
            let vm2 = if i >= 2 { b.v.powi(i - 2) } else { 0.0 };
            (v, vm1, vm2)
        } else {
            let i = p as i32;
            (b.v.powi(i), b.v.powi(i - 1), b.v.powi(i - 2))
        }
    } else {
        if b.v <= 0.0 {
            return Err(ProfileError::PowDomain {
                t,
                base: b.v,
                exponent: p,
            });
        }
        (b.v.powf(p), b.v.powf(p - 1.0), b.v.powf(p - 2.0))
    };
    let d1 = p * vm1 * b.d1;
    let d2 = p * (p - 1.0) * vm2 * b.d1 * b.d1 + p * vm1 * b.d2;
    Ok(Jet::new(v, d1, d2))
}

// ---------------------------------------------------------------------------
// profile-v1 JSON

/// Serialize to the profile-v1 JSON form. Antiderivative nodes carry their
/// defining data; external fields are sampled into an interpolant node and
/// flagged `non_portable_exact`.
pub fn to_value(p: &Profile) -> Result<Value, ProfileError> {
    Ok(json!({
        "version": "profile-v1",
        "domain": [interval_out(p.lo), interval_out(p.hi)],
        "expr": expr_to_value(&p.expr, p.lo, p.hi)?,
    }))
}

fn interval_out(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn interval_in(v: &Value, fallback: f64) -> Result<f64, ProfileError> {
    match v {
        Value::Null => Ok(fallback),
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| ProfileError::Schema("bad domain bound".into())),
        _ => Err(ProfileError::Schema("bad domain bound".into())),
    }
}

fn expr_to_value(e: &Expr, lo: f64, hi: f64) -> Result<Value, ProfileError> {
    Ok(match e {
        Expr::Const(c) => json!({"op": "const", "const": c}),
        Expr::Var => json!({"op": "var"}),
        Expr::Sum(v) => json!({"op": "sum", "args": values(v, lo, hi)?}),
        Expr::Product(v) => json!({"op": "product", "args": values(v, lo, hi)?}),
        Expr::Neg(a) => json!({"op": "neg", "args": [expr_to_value(a, lo, hi)?]}),
        Expr::Pow(a, p) => json!({"op": "pow", "args": [expr_to_value(a, lo, hi)?], "const": p}),
        Expr::Exp(a) => json!({"op": "exp", "args": [expr_to_value(a, lo, hi)?]}),
        Expr::Log(a) => json!({"op": "log", "args": [expr_to_value(a, lo, hi)?]}),
        Expr::Antiderivative {
            integrand,
            reference,
            tol,
            ..
        } => json!({
            "op": "antiderivative",
            "args": [expr_to_value(integrand, lo, hi)?],
            "const": reference,
            "tol": tol,
        }),
        Expr::External(ext) => {
            let samples = sample_external(ext.as_ref(), lo, hi)?;
            json!({
                "op": "interpolant",
                "label": ext.label(),
                "non_portable_exact": true,
                "samples": samples,
            })
        }
    })
}

fn values(v: &[Expr], lo: f64, hi: f64) -> Result<Vec<Value>, ProfileError> {
    v.iter().map(|e| expr_to_value(e, lo, hi)).collect()
}

const EXTERNAL_SAMPLES: usize = 201;

fn sample_external(
    ext: &dyn ExternalField,
    lo: f64,
    hi: f64,
) -> Result<Vec<[f64; 4]>, ProfileError> {
    let (dlo, dhi) = ext.domain();
    let a = lo.max(dlo);
    let b = hi.min(dhi);
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(ProfileError::Schema(
            "external field has no finite sampling interval".into(),
        ));
    }
    // Pull in from the open endpoints.
    let pad = 1e-9 * (b - a);
    let (a, b) = (a + pad, b - pad);
    let mut rows = Vec::with_capacity(EXTERNAL_SAMPLES);
    for i in 0..EXTERNAL_SAMPLES {
        let t = a + (b - a) * i as f64 / (EXTERNAL_SAMPLES - 1) as f64;
        let j = ext.eval(t)?;
        rows.push([t, j.v, j.d1, j.d2]);
    }
    Ok(rows)
}

/// Deserialize a profile-v1 JSON document.
pub fn from_value(v: &Value) -> Result<Profile, ProfileError> {
    let obj = v
        .as_object()
        .ok_or_else(|| ProfileError::Schema("expected object".into()))?;
    match obj.get("version").and_then(Value::as_str) {
        Some("profile-v1") => {}
        other => {
            return Err(ProfileError::Schema(format!(
                "unsupported version {other:?}"
            )))
        }
    }
    let dom = obj
        .get("domain")
        .and_then(Value::as_array)
        .ok_or_else(|| ProfileError::Schema("missing domain".into()))?;
    if dom.len() != 2 {
        return Err(ProfileError::Schema("domain must have two bounds".into()));
    }
    let lo = interval_in(&dom[0], f64::NEG_INFINITY)?;
    let hi = interval_in(&dom[1], f64::INFINITY)?;
    let expr = obj
        .get("expr")
        .ok_or_else(|| ProfileError::Schema("missing expr".into()))?;
    Ok(Profile::new(expr_from_value(expr)?).with_domain(lo, hi))
}

fn expr_from_value(v: &Value) -> Result<Expr, ProfileError> {
    let obj = v
        .as_object()
        .ok_or_else(|| ProfileError::Schema("expected node object".into()))?;
    let op = obj
        .get("op")
        .and_then(Value::as_str)
        .ok_or_else(|| ProfileError::Schema("node missing op".into()))?;
    let args = || -> Result<Vec<Expr>, ProfileError> {
        obj.get("args")
            .and_then(Value::as_array)
            .ok_or_else(|| ProfileError::Schema(format!("{op} missing args")))?
            .iter()
            .map(expr_from_value)
            .collect()
    };
    let one_arg = |op: &str| -> Result<Expr, ProfileError> {
        let mut a = args()?;
        if a.len() != 1 {
            return Err(ProfileError::Schema(format!("{op} takes one argument")));
        }
        Ok(a.pop().unwrap())
    };
    let get_const = || -> Result<f64, ProfileError> {
        obj.get("const")
            .and_then(Value::as_f64)
            .ok_or_else(|| ProfileError::Schema(format!("{op} missing const")))
    };
    Ok(match op {
        "const" => Expr::Const(get_const()?),
        "var" => Expr::Var,
        "sum" => Expr::Sum(args()?),
        "product" => Expr::Product(args()?),
        "neg" => Expr::Neg(Box::new(one_arg("neg")?)),
        "pow" => Expr::Pow(Box::new(one_arg("pow")?), get_const()?),
        "exp" => Expr::Exp(Box::new(one_arg("exp")?)),
        "log" => Expr::Log(Box::new(one_arg("log")?)),
        "antiderivative" => Expr::Antiderivative {
            integrand: Box::new(one_arg("antiderivative")?),
            reference: get_const()?,
            tol: obj
                .get("tol")
                .and_then(Value::as_f64)
                .unwrap_or(quad::DEFAULT_TOL),
            cache: Arc::new(SegmentCache::default()),
        },
        "interpolant" => {
            let rows = obj
                .get("samples")
                .and_then(Value::as_array)
                .ok_or_else(|| ProfileError::Schema("interpolant missing samples".into()))?;
            let mut ts = Vec::with_capacity(rows.len());
            let mut jets = Vec::with_capacity(rows.len());
            for row in rows {
                let r = row
                    .as_array()
                    .filter(|r| r.len() == 4)
                    .ok_or_else(|| ProfileError::Schema("bad interpolant row".into()))?;
                let nums: Vec<f64> = r
                    .iter()
                    .map(|x| {
                        x.as_f64()
                            .ok_or_else(|| ProfileError::Schema("bad interpolant entry".into()))
                    })
                    .collect::<Result<_, _>>()?;
                ts.push(nums[0]);
                jets.push([nums[1], nums[2], nums[3]]);
            }
            let label = obj
                .get("label")
                .and_then(Value::as_str)
                .unwrap_or("interpolant")
                .to_string();
            Expr::External(Arc::new(HermiteSamples::new(ts, jets, label)?))
        }
        other => return Err(ProfileError::Schema(format!("unknown op {other}"))),
    })
}

// ---------------------------------------------------------------------------
// Quintic Hermite interpolation of sampled jets (deserialized interpolants)

/// Piecewise quintic matching value, first and second derivative at each
/// sample. Rebuilt interpolants approximate the original field; they are the
/// non-portable-exact leg of profile serialization.
pub struct HermiteSamples {
    ts: Vec<f64>,
    jets: Vec<[f64; 3]>,
    label: String,
}

impl HermiteSamples {
    pub fn new(
        ts: Vec<f64>,
        jets: Vec<[f64; 3]>,
        label: String,
    ) -> Result<Self, ProfileError> {
        if ts.len() < 2 || ts.len() != jets.len() {
            return Err(ProfileError::Schema(
                "interpolant needs at least two aligned samples".into(),
            ));
        }
        if ts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ProfileError::Schema(
                "interpolant samples must be strictly increasing".into(),
            ));
        }
        Ok(HermiteSamples { ts, jets, label })
    }
}

impl ExternalField for HermiteSamples {
    fn eval(&self, t: f64) -> Result<Jet, ProfileError> {
        let n = self.ts.len();
        if t < self.ts[0] || t > self.ts[n - 1] {
            return Err(ProfileError::OutOfDomain {
                t,
                lo: self.ts[0],
                hi: self.ts[n - 1],
            });
        }
        let idx = match self.ts.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        let h = self.ts[idx + 1] - self.ts[idx];
        let s = (t - self.ts[idx]) / h;
        let [y0, y0p, y0pp] = self.jets[idx];
        let [y1, y1p, y1pp] = self.jets[idx + 1];

        // Quintic Hermite basis on [0,1] matching (value, d1, d2) per end.
        let (s2, s3, s4, s5) = (s * s, s * s * s, s * s * s * s, s * s * s * s * s);
        let h00 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
        let h10 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
        let h20 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
        let h01 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
        let h11 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
        let h21 = 0.5 * s3 - s4 + 0.5 * s5;

        let d00 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
        let d10 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
        let d20 = s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4;
        let d01 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;
        let d11 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
        let d21 = 1.5 * s2 - 4.0 * s3 + 2.5 * s4;

        let e00 = -60.0 * s + 180.0 * s2 - 120.0 * s3;
        let e10 = -36.0 * s + 96.0 * s2 - 60.0 * s3;
        let e20 = 1.0 - 9.0 * s + 18.0 * s2 - 10.0 * s3;
        let e01 = 60.0 * s - 180.0 * s2 + 120.0 * s3;
        let e11 = -24.0 * s + 84.0 * s2 - 60.0 * s3;
        let e21 = 3.0 * s - 12.0 * s2 + 10.0 * s3;

        let v = y0 * h00
            + h * y0p * h10
            + h * h * y0pp * h20
            + y1 * h01
            + h * y1p * h11
            + h * h * y1pp * h21;
        let d1 = (y0 * d00
            + h * y0p * d10
            + h * h * y0pp * d20
            + y1 * d01
            + h * y1p * d11
            + h * h * y1pp * d21)
            / h;
        let d2 = (y0 * e00
            + h * y0p * e10
            + h * h * y0pp * e20
            + y1 * e01
            + h * y1p * e11
            + h * h * y1pp * e21)
            / (h * h);
        Ok(Jet::new(v, d1, d2))
    }

    fn domain(&self) -> (f64, f64) {
        (self.ts[0], self.ts[self.ts.len() - 1])
    }

    fn label(&self) -> &str {
        &self.label
    }
}
