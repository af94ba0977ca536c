//! Adaptive Dormand-Prince 5(4) with FSAL and dense output.
//!
//! Accepted nodes keep state and derivative, so any interior time can be
//! sampled by cubic Hermite interpolation without re-integrating. The
//! integrator never panics on a failing right-hand side: depending on
//! `stop_on_rhs_error` the error either propagates or ends the trajectory
//! with a recorded stop reason, which is what trajectory probes need when a
//! profile runs off its domain.

/// Why integration ended where it did.
#[derive(Clone, Debug, PartialEq)]
pub enum StopReason {
    Completed,
    /// Step size fell below `min_step_rel * (1 + |t|)`.
    StepCollapse { t: f64 },
    /// State norm exceeded `norm_cap`.
    NormExceeded { t: f64 },
    MaxSteps { t: f64 },
    /// Right-hand side failed and `stop_on_rhs_error` was set.
    RhsError { t: f64, message: String },
}

impl StopReason {
    pub fn is_completed(&self) -> bool {
        matches!(self, StopReason::Completed)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; estimated from the first derivative when absent.
    pub h0: Option<f64>,
    pub max_steps: usize,
    /// Sup-norm ceiling on the state; `None` disables the check.
    pub norm_cap: Option<f64>,
    pub min_step_rel: f64,
    pub stop_on_rhs_error: bool,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            h0: None,
            max_steps: 1_000_000,
            norm_cap: None,
            min_step_rel: 1e-12,
            stop_on_rhs_error: false,
        }
    }
}

/// Accepted trajectory with derivative data at every node.
#[derive(Clone, Debug)]
pub struct Solution {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    pub dys: Vec<Vec<f64>>,
    pub stop: StopReason,
    pub steps: usize,
}

impl Solution {
    pub fn end_t(&self) -> f64 {
        *self.ts.last().expect("solution has at least the initial node")
    }

    pub fn end_y(&self) -> &[f64] {
        self.ys.last().expect("solution has at least the initial node")
    }

    /// Cubic Hermite sample; `None` outside the covered interval.
    pub fn sample(&self, t: f64) -> Option<Vec<f64>> {
        let fwd = self.end_t() >= self.ts[0];
        let (lo, hi) = if fwd {
            (self.ts[0], self.end_t())
        } else {
            (self.end_t(), self.ts[0])
        };
        if t < lo || t > hi {
            return None;
        }
        // Last node k with ts[k] on the start side of t.
        let k = match self.ts.binary_search_by(|probe| {
            if fwd {
                probe.partial_cmp(&t).unwrap()
            } else {
                t.partial_cmp(probe).unwrap()
            }
        }) {
            Ok(i) => return Some(self.ys[i].clone()),
            Err(i) => i.saturating_sub(1).min(self.ts.len() - 2),
        };
        let dt = self.ts[k + 1] - self.ts[k];
        let th = (t - self.ts[k]) / dt;
        let th2 = th * th;
        let th3 = th2 * th;
        let h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
        let h10 = th3 - 2.0 * th2 + th;
        let h01 = -2.0 * th3 + 3.0 * th2;
        let h11 = th3 - th2;
        Some(
            (0..self.ys[k].len())
                .map(|i| {
                    h00 * self.ys[k][i]
                        + h10 * dt * self.dys[k][i]
                        + h01 * self.ys[k + 1][i]
                        + h11 * dt * self.dys[k + 1][i]
                })
                .collect(),
        )
    }
}

const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
// Fifth-order weights equal the last A row (FSAL); these are y5 - y4.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

/// Integrate `dy/dt = rhs(t, y)` from `t0` to `t_end` (either direction).
pub fn integrate<E2, F>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
) -> Result<Solution, E2>
where
    E2: std::fmt::Display,
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, E2>,
{
    let dim = y0.len();
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = match rhs(t, &y) {
        Ok(v) => v,
        Err(e) => {
            if opts.stop_on_rhs_error {
                return Ok(Solution {
                    ts: vec![t0],
                    ys: vec![y],
                    dys: vec![vec![0.0; dim]],
                    stop: StopReason::RhsError {
                        t: t0,
                        message: e.to_string(),
                    },
                    steps: 0,
                });
            }
            return Err(e);
        }
    };

    let mut h = opts.h0.map(|v| v.abs()).unwrap_or_else(|| {
        // First-derivative heuristic; the controller corrects from here.
        let h = 0.01 * (1.0 + sup(&y)) / sup(&k1).max(1e-4);
        h.clamp(10.0 * opts.min_step_rel * (1.0 + t0.abs()), 1.0)
    }) * dir;
    let span = (t_end - t0).abs();
    if h.abs() > span && span > 0.0 {
        h = span * dir;
    }

    let mut ts = vec![t];
    let mut ys = vec![y.clone()];
    let mut dys = vec![k1.clone()];
    let mut steps = 0usize;
    let mut stop = StopReason::Completed;

    if t0 == t_end {
        return Ok(Solution {
            ts,
            ys,
            dys,
            stop,
            steps,
        });
    }

    'outer: loop {
        if steps >= opts.max_steps {
            stop = StopReason::MaxSteps { t };
            break;
        }
        if h.abs() < opts.min_step_rel * (1.0 + t.abs()) {
            stop = StopReason::StepCollapse { t };
            break;
        }
        // Land exactly on t_end.
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }

        let mut ks: Vec<Vec<f64>> = Vec::with_capacity(7);
        ks.push(k1.clone());
        for stage in 0..6 {
            let mut ystage = y.clone();
            for (j, kj) in ks.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    for i in 0..dim {
                        ystage[i] += h * a * kj[i];
                    }
                }
            }
            match rhs(t + C[stage] * h, &ystage) {
                Ok(v) => ks.push(v),
                Err(e) => {
                    if opts.stop_on_rhs_error {
                        stop = StopReason::RhsError {
                            t,
                            message: e.to_string(),
                        };
                        break 'outer;
                    }
                    return Err(e);
                }
            }
        }

        // FSAL: stage 6 state is the fifth-order candidate.
        let mut ynew = y.clone();
        for (j, kj) in ks.iter().enumerate().take(6) {
            let a = A[5][j];
            if a != 0.0 {
                for i in 0..dim {
                    ynew[i] += h * a * kj[i];
                }
            }
        }

        let mut err = 0.0f64;
        for i in 0..dim {
            let mut e = 0.0;
            for (j, kj) in ks.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= h;
            let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sc) * (e / sc);
        }
        err = (err / dim as f64).sqrt();
        steps += 1;

        if err <= 1.0 {
            t += h;
            y = ynew;
            k1 = ks.pop().expect("seven stages");
            ts.push(t);
            ys.push(y.clone());
            dys.push(k1.clone());
            if let Some(cap) = opts.norm_cap {
                if sup(&y) > cap {
                    stop = StopReason::NormExceeded { t };
                    break;
                }
            }
            if (t - t_end) * dir >= 0.0 {
                break;
            }
        }

        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }

    Ok(Solution {
        ts,
        ys,
        dys,
        stop,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn ok(rhs: impl Fn(f64, &[f64]) -> Vec<f64>) -> impl FnMut(f64, &[f64]) -> Result<Vec<f64>, Infallible> {
        move |t, y| Ok(rhs(t, y))
    }

    #[test]
    fn exponential_growth_to_machine_accuracy() {
        let sol = integrate(ok(|_, y| vec![y[0]]), 0.0, &[1.0], 2.0, &OdeOptions::default())
            .unwrap();
        assert!(sol.stop.is_completed());
        assert!((sol.end_y()[0] - 2.0f64.exp()).abs() < 1e-9);
        for &t in &[0.1, 0.77, 1.5] {
            let s = sol.sample(t).unwrap();
            assert!((s[0] - t.exp()).abs() < 1e-7, "dense sample at {t}");
        }
    }

    #[test]
    fn backward_integration_reaches_the_start() {
        let sol = integrate(ok(|_, y| vec![y[0]]), 0.0, &[1.0], -3.0, &OdeOptions::default())
            .unwrap();
        assert!(sol.stop.is_completed());
        assert!((sol.end_y()[0] - (-3.0f64).exp()).abs() < 1e-11);
        let s = sol.sample(-1.5).unwrap();
        assert!((s[0] - (-1.5f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn oscillator_conserves_energy() {
        let sol = integrate(
            ok(|_, y| vec![y[1], -y[0]]),
            0.0,
            &[1.0, 0.0],
            100.0,
            &OdeOptions::default(),
        )
        .unwrap();
        assert!(sol.stop.is_completed());
        let e = sol.end_y()[0].powi(2) + sol.end_y()[1].powi(2);
        assert!((e - 1.0).abs() < 1e-8, "energy drift {}", e - 1.0);
    }

    #[test]
    fn blowup_hits_norm_cap() {
        let opts = OdeOptions {
            norm_cap: Some(1e12),
            ..OdeOptions::default()
        };
        // y' = y^2 from y(0)=1 blows up at t=1.
        let sol = integrate(ok(|_, y| vec![y[0] * y[0]]), 0.0, &[1.0], 2.0, &opts).unwrap();
        match sol.stop {
            StopReason::NormExceeded { t } | StopReason::StepCollapse { t } => {
                assert!((t - 1.0).abs() < 1e-3, "stopped at {t}")
            }
            ref other => panic!("expected blowup stop, got {other:?}"),
        }
    }

    #[test]
    fn rhs_error_terminates_when_requested() {
        let opts = OdeOptions {
            stop_on_rhs_error: true,
            ..OdeOptions::default()
        };
        let sol = integrate(
            |t: f64, _y: &[f64]| {
                if t > 1.0 {
                    Err("left the domain")
                } else {
                    Ok(vec![1.0])
                }
            },
            0.0,
            &[0.0],
            2.0,
            &opts,
        )
        .unwrap();
        assert!(matches!(sol.stop, StopReason::RhsError { .. }));
        // Everything accepted before the failure is still usable.
        assert!(sol.end_t() <= 1.0 + 1e-9);
    }

    #[test]
    fn rhs_error_propagates_by_default() {
        let r: Result<Solution, &str> = integrate(
            |_t: f64, _y: &[f64]| Err("bad"),
            0.0,
            &[0.0],
            1.0,
            &OdeOptions::default(),
        );
        assert_eq!(r.unwrap_err(), "bad");
    }
}
