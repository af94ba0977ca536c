//! Curvature of conformal invariant metrics and warped products, plus an
//! independent finite-difference Ricci oracle on the full product metric.
//!
//! Closed forms keep the pseudo-norm ||α||² as an explicit factor wherever it
//! appears, so null invariant directions annihilate their terms exactly in
//! floating point, not merely to round-off.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::candidate::WarpedCandidate;
use crate::factor::{InvariantDirection, SemiEuclideanFactor};
use crate::profile::{Jet, Profile, ProfileError};

#[derive(Debug, Error)]
pub enum CurvatureError {
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("{name} must be positive, found {value} at t = {t}")]
    NonPositive {
        name: &'static str,
        value: f64,
        t: f64,
    },
    #[error("metric is numerically singular in entry {index}")]
    SingularMetric { index: usize },
}

/// Symmetric 2-tensor on the product, stored per block. The mixed block of
/// every operator here vanishes identically; it is carried so the oracle
/// comparison can assert that, not assume it.
#[derive(Clone, Debug)]
pub struct BlockMatrix {
    pub base: DMatrix<f64>,
    pub mixed: DMatrix<f64>,
    pub fiber: DMatrix<f64>,
}

impl BlockMatrix {
    pub fn zeros(n: usize, m: usize) -> Self {
        BlockMatrix {
            base: DMatrix::zeros(n, n),
            mixed: DMatrix::zeros(n, m),
            fiber: DMatrix::zeros(m, m),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.base
            .iter()
            .chain(self.mixed.iter())
            .chain(self.fiber.iter())
            .fold(0.0f64, |acc, &v| acc.max(v.abs()))
    }

    pub fn block_sups(&self) -> (f64, f64, f64) {
        let sup = |m: &DMatrix<f64>| m.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
        (sup(&self.base), sup(&self.mixed), sup(&self.fiber))
    }

    /// Assemble the full (n+m)×(n+m) matrix, for comparison with the
    /// finite-difference oracle.
    pub fn assemble(&self) -> DMatrix<f64> {
        let n = self.base.nrows();
        let m = self.fiber.nrows();
        let mut full = DMatrix::zeros(n + m, n + m);
        full.view_mut((0, 0), (n, n)).copy_from(&self.base);
        full.view_mut((0, n), (n, m)).copy_from(&self.mixed);
        full.view_mut((n, 0), (m, n))
            .copy_from(&self.mixed.transpose());
        full.view_mut((n, n), (m, m)).copy_from(&self.fiber);
        full
    }
}

fn eval_positive(
    p: &Profile,
    t: f64,
    name: &'static str,
) -> Result<Jet, CurvatureError> {
    let j = p.eval(t)?;
    if j.v <= 0.0 {
        return Err(CurvatureError::NonPositive {
            name,
            value: j.v,
            t,
        });
    }
    Ok(j)
}

/// Ricci tensor of the conformal metric φ^{-2}g₀ in coordinates, for profiles
/// invariant along `dir`: entry (i,j) is
/// (n−2)(φ''/φ)αᵢαⱼ + δᵢⱼ εᵢ ||α||² [φ''/φ − (n−1)(φ'/φ)²].
pub fn conformal_ricci(
    phi: &Profile,
    dir: &InvariantDirection,
    factor: &SemiEuclideanFactor,
    t: f64,
) -> Result<DMatrix<f64>, CurvatureError> {
    let n = factor.dim();
    let p = eval_positive(phi, t, "conformal factor")?;
    let r2 = p.d2 / p.v;
    let r1 = p.d1 / p.v;
    let trace_part = dir.pseudo_norm_sq() * (r2 - (n as f64 - 1.0) * r1 * r1);
    let off = (n as f64 - 2.0) * r2;
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            // αᵢαⱼ first: products commute exactly, so the matrix comes out
            // symmetric to the bit, not merely to round-off.
            let aij = dir.coefficient(i) * dir.coefficient(j);
            let mut v = off * aij;
            if i == j {
                v += factor.epsilon(i) * trace_part;
            }
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// Hessian of an invariant scalar with respect to φ^{-2}g₀:
/// entry (i,j) = αᵢαⱼ s'' + (2αᵢαⱼ − δᵢⱼ εᵢ ||α||²)(φ'/φ) s'.
pub fn conformal_hessian(
    scal: &Profile,
    phi: &Profile,
    dir: &InvariantDirection,
    factor: &SemiEuclideanFactor,
    t: f64,
) -> Result<DMatrix<f64>, CurvatureError> {
    let n = factor.dim();
    let p = eval_positive(phi, t, "conformal factor")?;
    let s = scal.eval(t)?;
    let r1 = p.d1 / p.v;
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let aij = dir.coefficient(i) * dir.coefficient(j);
            let mut v = aij * s.d2 + 2.0 * aij * r1 * s.d1;
            if i == j {
                v -= factor.epsilon(i) * dir.pseudo_norm_sq() * r1 * s.d1;
            }
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// Laplace–Beltrami of an invariant scalar under φ^{-2}g₀:
/// ||α||² φ² (s'' − (n−2)(φ'/φ) s').
pub fn conformal_laplacian(
    scal: &Profile,
    phi: &Profile,
    dir: &InvariantDirection,
    t: f64,
) -> Result<f64, CurvatureError> {
    let n = dir.coefficients().len();
    let p = eval_positive(phi, t, "conformal factor")?;
    let s = scal.eval(t)?;
    Ok(dir.pseudo_norm_sq()
        * p.v
        * p.v
        * (s.d2 - (n as f64 - 2.0) * (p.d1 / p.v) * s.d1))
}

/// ⟨∇a, ∇b⟩ under φ^{-2}g₀ for invariant scalars: ||α||² φ² a' b'.
pub fn conformal_pairing(
    a: &Profile,
    b: &Profile,
    phi: &Profile,
    dir: &InvariantDirection,
    t: f64,
) -> Result<f64, CurvatureError> {
    let p = eval_positive(phi, t, "conformal factor")?;
    let ja = a.eval(t)?;
    let jb = b.eval(t)?;
    Ok(dir.pseudo_norm_sq() * p.v * p.v * ja.d1 * jb.d1)
}

/// |∇a|² under φ^{-2}g₀.
pub fn gradient_sq(
    a: &Profile,
    phi: &Profile,
    dir: &InvariantDirection,
    t: f64,
) -> Result<f64, CurvatureError> {
    conformal_pairing(a, a, phi, dir, t)
}

/// Covariant components of du ⊗ du for an invariant scalar:
/// entry (i,j) = αᵢαⱼ (u')². Metric-independent.
pub fn invariant_outer(
    u: &Profile,
    dir: &InvariantDirection,
    t: f64,
) -> Result<DMatrix<f64>, CurvatureError> {
    let n = dir.coefficients().len();
    let j = u.eval(t)?;
    let usq = j.d1 * j.d1;
    let mut out = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            out[(a, b)] = dir.coefficient(a) * dir.coefficient(b) * usq;
        }
    }
    Ok(out)
}

/// Diagonal of the fiber metric g_F = τ^{-2}g₀′ in fiber coordinates, as an
/// m×m matrix. Absent τ means the flat semi-Euclidean fiber g₀′.
pub fn fiber_metric(
    c: &WarpedCandidate,
    zeta: f64,
) -> Result<DMatrix<f64>, CurvatureError> {
    let m = c.m();
    let scale = match &c.tau {
        Some(tau) => {
            let t = eval_positive(tau, zeta, "tau")?;
            1.0 / (t.v * t.v)
        }
        None => 1.0,
    };
    let mut out = DMatrix::zeros(m, m);
    for j in 0..m {
        out[(j, j)] = scale * c.fiber.epsilon(j);
    }
    Ok(out)
}

/// Ricci tensor of the warped metric g = g_B + f² g_F, blockwise:
/// base = Ric_B − (m/f) Hess_B f, mixed = 0,
/// fiber = Ric_F − (f Δ_B f + (m−1)|∇f|²_B) g_F.
/// With τ absent the fiber Ricci is taken as μ·g_F (abstract Einstein fiber).
pub fn warped_ricci(
    c: &WarpedCandidate,
    point: (f64, f64),
) -> Result<BlockMatrix, CurvatureError> {
    let (xi, zeta) = point;
    let n = c.n();
    let m = c.m();
    let fj = eval_positive(&c.f, xi, "f")?;

    let ric_b = conformal_ricci(&c.phi, &c.alpha, &c.base, xi)?;
    let hess_f = conformal_hessian(&c.f, &c.phi, &c.alpha, &c.base, xi)?;
    let base = ric_b - hess_f * (m as f64 / fj.v);

    let lap_f = conformal_laplacian(&c.f, &c.phi, &c.alpha, xi)?;
    let grad_f_sq = gradient_sq(&c.f, &c.phi, &c.alpha, xi)?;
    let bracket = fj.v * lap_f + (m as f64 - 1.0) * grad_f_sq;

    let g_f = fiber_metric(c, zeta)?;
    let ric_f = match (&c.tau, &c.beta) {
        (Some(tau), Some(beta)) => conformal_ricci(tau, beta, &c.fiber, zeta)?,
        _ => &g_f * c.mu,
    };
    let fiber = ric_f - &g_f * bracket;

    Ok(BlockMatrix {
        base,
        mixed: DMatrix::zeros(n, m),
        fiber,
    })
}

// ---------------------------------------------------------------------------
// Finite-difference oracle

type DiagonalEval = dyn Fn(&[f64]) -> Result<Vec<f64>, CurvatureError> + Send + Sync;

/// Diagonal metric on R^d given pointwise; the oracle sees nothing but this.
pub struct MetricField {
    dim: usize,
    eval: Box<DiagonalEval>,
}

impl MetricField {
    pub fn new<F>(dim: usize, eval: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>, CurvatureError> + Send + Sync + 'static,
    {
        MetricField {
            dim,
            eval: Box::new(eval),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diagonal(&self, x: &[f64]) -> Result<Vec<f64>, CurvatureError> {
        (self.eval)(x)
    }

    /// The conformal metric φ^{-2}g₀ alone, on the factor's R^n.
    pub fn conformal(
        phi: Profile,
        dir: InvariantDirection,
        factor: SemiEuclideanFactor,
    ) -> Self {
        let dim = factor.dim();
        MetricField::new(dim, move |x| {
            let t = dir.invariant_coordinate(x);
            let p = eval_positive(&phi, t, "conformal factor")?;
            let s = 1.0 / (p.v * p.v);
            Ok((0..dim).map(|i| s * factor.epsilon(i)).collect())
        })
    }

    /// The full warped metric (φ^{-2}ε ; f²τ^{-2}ε′) of a candidate on
    /// R^{n+m}. Absent τ gives the flat fiber f²ε′.
    pub fn from_candidate(c: &WarpedCandidate) -> Self {
        let c = c.clone();
        let n = c.n();
        let dim = n + c.m();
        MetricField::new(dim, move |x| {
            let xi = c.alpha.invariant_coordinate(&x[..n]);
            let p = eval_positive(&c.phi, xi, "phi")?;
            let f = eval_positive(&c.f, xi, "f")?;
            let tau_scale = match (&c.tau, &c.beta) {
                (Some(tau), Some(beta)) => {
                    let zeta = beta.invariant_coordinate(&x[n..]);
                    let t = eval_positive(tau, zeta, "tau")?;
                    1.0 / (t.v * t.v)
                }
                _ => 1.0,
            };
            let base_scale = 1.0 / (p.v * p.v);
            let fiber_scale = f.v * f.v * tau_scale;
            let mut g = Vec::with_capacity(dim);
            for i in 0..n {
                g.push(base_scale * c.base.epsilon(i));
            }
            for j in 0..c.m() {
                g.push(fiber_scale * c.fiber.epsilon(j));
            }
            Ok(g)
        })
    }
}

/// Step that balances truncation against cancellation in the nested
/// second-derivative stencils; scaled per coordinate inside fd_ricci.
pub fn default_step() -> f64 {
    f64::EPSILON.powf(0.25)
}

/// Ricci tensor by central differences only:
/// Γ^k_{ij} = ½ g^{kl}(∂ᵢg_{jl} + ∂ⱼg_{il} − ∂_l g_{ij}),
/// R_{ij} = ∂_kΓ^k_{ij} − ∂ⱼΓ^k_{ik} + Γ^k_{kl}Γ^l_{ij} − Γ^k_{jl}Γ^l_{ik}.
/// Shares no formula with the closed-form path above.
pub fn fd_ricci(
    metric: &MetricField,
    x: &[f64],
    step: f64,
) -> Result<DMatrix<f64>, CurvatureError> {
    let d = metric.dim();
    assert_eq!(x.len(), d, "point dimension mismatch");
    // Per-direction steps frozen at the center point so nested stencils use
    // identical offsets and the estimator stays cleanly second order.
    let h: Vec<f64> = x.iter().map(|xi| step * (1.0 + xi.abs())).collect();

    let christoffel = |y: &[f64]| -> Result<Vec<DMatrix<f64>>, CurvatureError> {
        let g = metric.diagonal(y)?;
        for (index, &gi) in g.iter().enumerate() {
            if gi.abs() < 1e-14 {
                return Err(CurvatureError::SingularMetric { index });
            }
        }
        // dg[dir][entry] = ∂_dir g_entry
        let mut dg = vec![vec![0.0; d]; d];
        let mut buf = y.to_vec();
        for dir in 0..d {
            buf[dir] = y[dir] + h[dir];
            let gp = metric.diagonal(&buf)?;
            buf[dir] = y[dir] - h[dir];
            let gm = metric.diagonal(&buf)?;
            buf[dir] = y[dir];
            for e in 0..d {
                dg[dir][e] = (gp[e] - gm[e]) / (2.0 * h[dir]);
            }
        }
        let mut gam = vec![DMatrix::zeros(d, d); d];
        for k in 0..d {
            let ginv = 1.0 / g[k];
            for i in 0..d {
                for j in 0..d {
                    let mut v = 0.0;
                    if j == k {
                        v += dg[i][j];
                    }
                    if i == k {
                        v += dg[j][i];
                    }
                    if i == j {
                        v -= dg[k][i];
                    }
                    gam[k][(i, j)] = 0.5 * ginv * v;
                }
            }
        }
        Ok(gam)
    };

    let gam0 = christoffel(x)?;
    let mut dgam: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(d);
    let mut buf = x.to_vec();
    for dir in 0..d {
        buf[dir] = x[dir] + h[dir];
        let gp = christoffel(&buf)?;
        buf[dir] = x[dir] - h[dir];
        let gm = christoffel(&buf)?;
        buf[dir] = x[dir];
        dgam.push(
            gp.into_iter()
                .zip(gm)
                .map(|(a, b)| (a - b) / (2.0 * h[dir]))
                .collect(),
        );
    }

    let mut ric = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let mut r = 0.0;
            for k in 0..d {
                r += dgam[k][k][(i, j)];
                r -= dgam[j][k][(i, k)];
                for l in 0..d {
                    r += gam0[k][(k, l)] * gam0[l][(i, j)];
                    r -= gam0[k][(j, l)] * gam0[l][(i, k)];
                }
            }
            ric[(i, j)] = r;
        }
    }
    Ok(ric)
}

/// Blockwise sups of |fd_ricci − warped_ricci| over a set of points in the
/// product chart. `overall()` is the quantity whose step-halving ratio
/// certifies second-order agreement of the two routes.
#[derive(Clone, Copy, Debug)]
pub struct OracleError {
    pub step: f64,
    pub base: f64,
    pub mixed: f64,
    pub fiber: f64,
}

impl OracleError {
    pub fn overall(&self) -> f64 {
        self.base.max(self.mixed).max(self.fiber)
    }
}

/// Compare the closed-form warped Ricci blocks against the pure
/// finite-difference route at every point, keeping the worst error per
/// block. Points live in R^{n+m}.
pub fn ricci_oracle_error(
    c: &WarpedCandidate,
    points: &[Vec<f64>],
    step: f64,
) -> Result<OracleError, CurvatureError> {
    let metric = MetricField::from_candidate(c);
    let n = c.n();
    let m = c.m();
    let mut out = OracleError {
        step,
        base: 0.0,
        mixed: 0.0,
        fiber: 0.0,
    };
    for x in points {
        assert_eq!(x.len(), n + m, "point dimension mismatch");
        let xi = c.alpha.invariant_coordinate(&x[..n]);
        let zeta = match &c.beta {
            Some(beta) => beta.invariant_coordinate(&x[n..]),
            None => 0.0,
        };
        let closed = warped_ricci(c, (xi, zeta))?.assemble();
        let fd = fd_ricci(&metric, x, step)?;
        let diff = fd - closed;
        for i in 0..n + m {
            for j in 0..n + m {
                let e = diff[(i, j)].abs();
                if i < n && j < n {
                    out.base = out.base.max(e);
                } else if i >= n && j >= n {
                    out.fiber = out.fiber.max(e);
                } else {
                    out.mixed = out.mixed.max(e);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{constant, var, Expr};

    fn lorentzian_null_pair() -> (SemiEuclideanFactor, InvariantDirection) {
        let f = SemiEuclideanFactor::lorentzian(3).unwrap();
        let d = InvariantDirection::new(&f, vec![1.0, 1.0, 0.0]).unwrap();
        (f, d)
    }

    fn euclidean_axis(n: usize) -> (SemiEuclideanFactor, InvariantDirection) {
        let f = SemiEuclideanFactor::euclidean(n).unwrap();
        let mut c = vec![0.0; n];
        c[0] = 1.0;
        let d = InvariantDirection::new(&f, c).unwrap();
        (f, d)
    }

    #[test]
    fn flat_conformal_ricci_is_exactly_zero() {
        let (fac, dir) = euclidean_axis(3);
        let ric = conformal_ricci(&Profile::constant(1.0), &dir, &fac, 0.7).unwrap();
        assert!(ric.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn null_direction_exponential_ricci_is_rank_one() {
        // φ = e^{kξ} with ||α||² = 0: only (n−2)k² α⊗α survives, exactly.
        let (fac, dir) = lorentzian_null_pair();
        let phi = Profile::new(Expr::Exp(Box::new(var() * 2.0)));
        let ric = conformal_ricci(&phi, &dir, &fac, 0.3).unwrap();
        let k2 = 4.0;
        for i in 0..3 {
            for j in 0..3 {
                let want = (3.0 - 2.0) * k2 * dir.coefficient(i) * dir.coefficient(j);
                assert!((ric[(i, j)] - want).abs() < 1e-12 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn conformal_outputs_are_symmetric() {
        let fac = SemiEuclideanFactor::lorentzian(3).unwrap();
        let dir = InvariantDirection::new(&fac, vec![1.2, -0.4, 0.9]).unwrap();
        let phi = Profile::new(Expr::Exp(Box::new(var() * 0.3 + constant(0.1))));
        let scal = Profile::new(var() * var() + var() * 0.5);
        let r = conformal_ricci(&phi, &dir, &fac, 0.4).unwrap();
        let h = conformal_hessian(&scal, &phi, &dir, &fac, 0.4).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(r[(i, j)], r[(j, i)]);
                assert_eq!(h[(i, j)], h[(j, i)]);
            }
        }
    }

    #[test]
    fn hessian_of_constant_vanishes_and_flat_case_is_euclidean() {
        let (fac, dir) = euclidean_axis(2);
        let phi = Profile::constant(1.0);
        let hc = conformal_hessian(&Profile::constant(3.0), &phi, &dir, &fac, 1.0).unwrap();
        assert!(hc.iter().all(|&v| v == 0.0));

        let scal = Profile::new(var() * var());
        let he = conformal_hessian(&scal, &phi, &dir, &fac, 1.0).unwrap();
        // α = e₁: Hessian is s'' in the (0,0) slot only.
        assert_eq!(he[(0, 0)], 2.0);
        assert_eq!(he[(0, 1)], 0.0);
        assert_eq!(he[(1, 1)], 0.0);
    }

    #[test]
    fn laplacian_null_direction_annihilates() {
        let (fac, dir) = lorentzian_null_pair();
        let _ = fac;
        let phi = Profile::new(Expr::Exp(Box::new(var())));
        let scal = Profile::new(var() * var() * var());
        assert_eq!(conformal_laplacian(&scal, &phi, &dir, 0.9).unwrap(), 0.0);
        assert_eq!(
            conformal_pairing(&scal, &scal, &phi, &dir, 0.9).unwrap(),
            0.0
        );
    }

    #[test]
    fn laplacian_matches_hessian_trace() {
        let fac = SemiEuclideanFactor::lorentzian(3).unwrap();
        let dir = InvariantDirection::new(&fac, vec![0.7, 1.1, -0.2]).unwrap();
        let phi = Profile::new(Expr::Exp(Box::new(var() * -0.2 + constant(0.4))));
        let scal = Profile::new(var() * var() + var().exp() * 0.1);
        for idx in 0..20 {
            let t = -1.0 + 0.1 * idx as f64;
            let lap = conformal_laplacian(&scal, &phi, &dir, t).unwrap();
            let hess = conformal_hessian(&scal, &phi, &dir, &fac, t).unwrap();
            let pj = phi.eval(t).unwrap();
            let trace: f64 = (0..3)
                .map(|k| pj.v * pj.v * fac.epsilon(k) * hess[(k, k)])
                .sum();
            assert!(
                (lap - trace).abs() < 1e-11 * (1.0 + lap.abs()),
                "trace identity broke at t = {t}"
            );
        }
    }

    #[test]
    fn fd_ricci_of_flat_metric_is_zero() {
        let metric = MetricField::new(3, |_| Ok(vec![1.0, 1.0, -1.0]));
        let r = fd_ricci(&metric, &[0.3, -0.7, 2.0], 1e-3).unwrap();
        assert!(r.iter().all(|&v| v.abs() < 1e-13));
    }

    /// Genuinely curved 2D conformal metric: φ = exp(0.3ξ²) has
    /// (log φ)'' = 0.6, so the Ricci tensor does not vanish (φ = e^{cξ}
    /// would be flat in dimension two and leave the oracle nothing to check).
    fn curved_plane() -> (SemiEuclideanFactor, InvariantDirection, Profile) {
        let fac = SemiEuclideanFactor::euclidean(2).unwrap();
        let dir = InvariantDirection::new(&fac, vec![1.0, 0.0]).unwrap();
        let phi = Profile::new(Expr::Exp(Box::new(var() * var() * 0.3)));
        (fac, dir, phi)
    }

    #[test]
    fn fd_ricci_matches_conformal_ricci() {
        let (fac, dir, phi) = curved_plane();
        let closed = conformal_ricci(&phi, &dir, &fac, 0.25).unwrap();
        assert!(closed.iter().any(|&v| v.abs() > 0.1), "test metric is flat");
        let metric = MetricField::conformal(phi, dir, fac);
        let fd = fd_ricci(&metric, &[0.25, 1.3], 1e-3).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (closed[(i, j)] - fd[(i, j)]).abs() < 1e-5,
                    "entry ({i},{j}): closed {} vs fd {}",
                    closed[(i, j)],
                    fd[(i, j)]
                );
            }
        }
    }

    #[test]
    fn fd_ricci_halving_step_is_second_order() {
        let (fac, dir, phi) = curved_plane();
        let closed = conformal_ricci(&phi, &dir, &fac, 0.25).unwrap();
        let metric = MetricField::conformal(phi, dir, fac);
        let err = |step: f64| {
            let fd = fd_ricci(&metric, &[0.25, 1.3], step).unwrap();
            (&fd - &closed).iter().fold(0.0f64, |a, &v| a.max(v.abs()))
        };
        let ratio = err(2e-3) / err(1e-3);
        assert!(
            (3.0..=5.0).contains(&ratio),
            "expected second-order convergence, ratio {ratio}"
        );
    }

    #[test]
    fn singular_metric_is_reported() {
        let metric = MetricField::new(2, |x: &[f64]| Ok(vec![x[0], 1.0]));
        assert!(matches!(
            fd_ricci(&metric, &[0.0, 0.0], 1e-3),
            Err(CurvatureError::SingularMetric { index: 0 })
        ));
    }

    #[test]
    fn warped_oracle_is_second_order_on_gallery_and_random_candidates() {
        let mut cands =
            vec![crate::constructor::gallery("1.5", &Default::default()).unwrap()];
        for seed in 0..3 {
            cands.push(crate::sampling::oracle_candidate(seed));
        }
        for (i, c) in cands.iter().enumerate() {
            let points = crate::sampling::oracle_points(c, 7, 5);
            let coarse = ricci_oracle_error(c, &points, 1e-3).unwrap();
            assert!(coarse.overall() <= 1e-5, "candidate {i}: {coarse:?}");
            let fine = ricci_oracle_error(c, &points, 5e-4).unwrap();
            let ratio = coarse.overall() / fine.overall();
            assert!(
                (3.0..=5.0).contains(&ratio),
                "candidate {i}: ratio {ratio}"
            );
        }
    }
}
