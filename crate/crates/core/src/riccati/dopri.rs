//! Dormand–Prince 5(4) with PI step control, landing exactly on output times.

use crate::error::{Error, Result};

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
}

/// Outcome of the post-step hook.
pub(crate) enum Verdict {
    Accept,
    /// Accepted after the hook changed the state.
    Repaired,
    Reject,
}

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Counters {
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrates `y' = f(y)` from `t = 0` through the increasing `targets`,
/// calling `record` at each one. `hook` may modify an accepted candidate
/// state in place or veto it, which halves the step.
pub(crate) fn integrate(
    y: &mut Vec<f64>,
    targets: &[f64],
    tol: Tolerances,
    mut f: impl FnMut(&[f64], &mut [f64]),
    mut hook: impl FnMut(&mut [f64]) -> Verdict,
    mut record: impl FnMut(usize, &[f64]),
) -> Result<Counters> {
    let n = y.len();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut counters = Counters::default();
    let mut t = 0.0;
    let mut h = tol.max_step.min(1e-3);
    let mut err_prev: f64 = 1e-4;
    let mut fsal_valid = false;

    for (idx, &target) in targets.iter().enumerate() {
        while t < target {
            let remaining = target - t;
            let landing = h >= remaining * (1.0 - 1e-12);
            let step = if landing { remaining } else { h.min(tol.max_step) };
            if step <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t });
            }
            if !fsal_valid {
                f(y, &mut k[0]);
            }
            for s in 1..7 {
                let (head, tail) = k.split_at_mut(s);
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in head.iter().enumerate() {
                        let a = A[s][j];
                        if a != 0.0 {
                            acc += step * a * kj[i];
                        }
                    }
                    stage[i] = acc;
                }
                f(&stage, &mut tail[0]);
            }
            // The last stage is evaluated at the fifth-order solution.
            y_new.copy_from_slice(&stage);
            let mut err = 0.0;
            for i in 0..n {
                let mut e = 0.0;
                for (s, ks) in k.iter().enumerate() {
                    e += E[s] * ks[i];
                }
                let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
                err += (step * e / sc).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                counters.rejected += 1;
                h = step * 0.2;
                fsal_valid = true;
                continue;
            }
            if err <= 1.0 {
                let verdict = hook(&mut y_new);
                if let Verdict::Reject = verdict {
                    counters.rejected += 1;
                    h = step * 0.5;
                    fsal_valid = true;
                    continue;
                }
                counters.accepted += 1;
                let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
                let fac = fac.clamp(0.2, 5.0);
                err_prev = err.max(1e-4);
                t = if landing { target } else { t + step };
                std::mem::swap(y, &mut y_new);
                let grow = if landing { h.max(step) } else { step };
                h = (grow * fac).min(tol.max_step);
                if let Verdict::Repaired = verdict {
                    f(y, &mut k[0]);
                } else {
                    k.swap(0, 6);
                }
                fsal_valid = true;
            } else {
                counters.rejected += 1;
                let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                h = step * fac;
                fsal_valid = true;
            }
        }
        record(idx, y);
    }
    Ok(counters)
}
