//! Theta-series heat kernels.

use std::f64::consts::PI;

const TERM_CUTOFF: f64 = 1e-16;

/// Density (w.r.t. Lebesgue on a circle of length `period`) of a centred
/// Gaussian with variance `t` wrapped onto the circle, at displacement `delta`.
///
/// Short times sum Gaussian images; long times use the dual Fourier series.
/// Either series stops once its terms drop below `1e-16` of the running sum.
pub(crate) fn wrapped_gaussian(delta: f64, t: f64, period: f64) -> f64 {
    let mut d = delta.rem_euclid(period);
    if d > 0.5 * period {
        d -= period;
    }
    if t < 0.1 * period * period {
        let norm = 1.0 / (2.0 * PI * t).sqrt();
        let term = |n: f64| {
            let y = d + n * period;
            (-y * y / (2.0 * t)).exp()
        };
        let mut sum = term(0.0);
        let mut n = 1.0;
        loop {
            let add = term(n) + term(-n);
            sum += add;
            if add <= TERM_CUTOFF * sum {
                break;
            }
            n += 1.0;
        }
        sum * norm
    } else {
        let q = 2.0 * PI * PI * t / (period * period);
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            let decay = (-q * k * k).exp();
            if decay < TERM_CUTOFF {
                break;
            }
            sum += 2.0 * decay * (2.0 * PI * k * d / period).cos();
            k += 1.0;
        }
        sum / period
    }
}

/// Heat kernel of `½Δ` on the unit sphere w.r.t. normalized area, as a
/// function of `cos θ`: `Σ (2l+1) P_l(cos θ) exp(-l(l+1)t/2)`.
pub(crate) fn sphere_kernel(cos_theta: f64, t: f64) -> f64 {
    let (mut p_prev, mut p) = (1.0, cos_theta);
    let mut sum = 1.0;
    let mut l = 1usize;
    loop {
        let lf = l as f64;
        let weight = (2.0 * lf + 1.0) * (-lf * (lf + 1.0) * t / 2.0).exp();
        sum += weight * p;
        // terms decrease monotonically once l(l+1)t/2 exceeds ln(2l+1)
        if weight < TERM_CUTOFF && lf * t > 1.0 {
            break;
        }
        if l > 200_000 {
            break;
        }
        let next = ((2.0 * lf + 1.0) * cos_theta * p - lf * p_prev) / (lf + 1.0);
        p_prev = p;
        p = next;
        l += 1;
    }
    sum
}
