//! Dormand–Prince 5(4) with FSAL and forced stop times.

use crate::error::{GeomError, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// Accepted point of a run.
#[derive(Debug, Clone)]
pub struct Node {
    pub t: f64,
    pub y: Vec<f64>,
    /// True when `t` is one of the requested stop times.
    pub stop: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerance {
    pub fn relative(rtol: f64) -> Self {
        Tolerance { rtol, atol: rtol * 1e-3 }
    }
}

/// Integrates y' = f(t, y) from `t0` to `t1`, landing exactly on every time in
/// `stops` (sorted, inside (t0, t1]). Returns every accepted point including
/// the start.
pub fn solve<F>(f: F, t0: f64, y0: &[f64], t1: f64, stops: &[f64], tol: Tolerance) -> Result<Vec<Node>>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let dim = y0.len();
    let mut out = vec![Node { t: t0, y: y0.to_vec(), stop: false }];
    if t1 <= t0 {
        return Ok(out);
    }
    let mut k = vec![vec![0.0; dim]; 7];
    let mut tmp = vec![0.0; dim];
    let mut ynew = vec![0.0; dim];
    let mut y = y0.to_vec();
    let mut t = t0;
    f(t, &y, &mut k[0])?;
    let span = t1 - t0;
    let mut h = (0.01f64).min(span);
    let mut next_stop = stops.iter().position(|&s| s > t0).unwrap_or(stops.len());

    while t < t1 {
        let target = if next_stop < stops.len() { stops[next_stop].min(t1) } else { t1 };
        let mut hit = false;
        if t + h >= target - 1e-14 * target.abs().max(1.0) {
            h = target - t;
            hit = true;
        }
        if h <= 1e-13 * t.abs().max(1.0) {
            return Err(GeomError::StepCollapse { t });
        }
        let mut stage_ok = true;
        for s in 1..7 {
            let (head, tail) = k.split_at_mut(s);
            for i in 0..dim {
                let acc: f64 = head.iter().zip(&A[s]).map(|(kj, a)| a * kj[i]).sum();
                tmp[i] = y[i] + h * acc;
            }
            if f(t + C[s] * h, &tmp, &mut tail[0]).is_err() {
                stage_ok = false;
                break;
            }
        }
        if stage_ok {
            ynew.copy_from_slice(&tmp);
        }

        let mut err = f64::INFINITY;
        if stage_ok {
            let mut acc = 0.0;
            for i in 0..dim {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    e += E[j] * kj[i];
                }
                let sc = tol.atol + tol.rtol * y[i].abs().max(ynew[i].abs());
                let r = h * e / sc;
                acc += r * r;
            }
            err = (acc / dim as f64).sqrt();
        }

        if err.is_finite() && err <= 1.0 {
            t = if hit { target } else { t + h };
            y.copy_from_slice(&ynew);
            k.swap(0, 6);
            let stop = hit && next_stop < stops.len() && target == stops[next_stop].min(t1);
            if stop {
                next_stop += 1;
            }
            out.push(Node { t, y: y.clone(), stop });
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
        } else {
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
            h *= fac;
        }
    }
    Ok(out)
}
