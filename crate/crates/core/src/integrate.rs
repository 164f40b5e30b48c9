//! Fixed-step fourth-order Runge-Kutta on flat real state vectors, plus the
//! trapezoidal window averages used for every time-averaged observable.

/// One classical RK4 step of `dy/dt = f(y)` (autonomous systems only).
pub fn rk4_step<const D: usize, F>(f: &F, y: &[f64; D], dt: f64) -> [f64; D]
where
    F: Fn(&[f64; D]) -> [f64; D],
{
    let k1 = f(y);
    let k2 = f(&axpy(y, &k1, 0.5 * dt));
    let k3 = f(&axpy(y, &k2, 0.5 * dt));
    let k4 = f(&axpy(y, &k3, dt));
    let mut out = *y;
    let w = dt / 6.0;
    for i in 0..D {
        out[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn axpy<const D: usize>(y: &[f64; D], k: &[f64; D], h: f64) -> [f64; D] {
    let mut out = *y;
    for i in 0..D {
        out[i] += h * k[i];
    }
    out
}

/// Trapezoidal average of `values` sampled on the uniform grid `times` over
/// `[times[0], t_end]`.
///
/// A window ending between two samples closes with a linearly interpolated
/// end point. A window reaching past the last sample is truncated there.
/// The result is normalized by the summed quadrature weights, so a constant
/// integrand averages to itself up to rounding, and a constant 1 exactly.
pub fn window_average(times: &[f64], values: &[f64], t_end: f64) -> f64 {
    assert_eq!(times.len(), values.len());
    match values.len() {
        0 => return f64::NAN,
        1 => return values[0],
        _ => {}
    }
    let t0 = times[0];
    if t_end <= t0 {
        return values[0];
    }
    let mut weighted = 0.0;
    let mut total = 0.0;
    for k in 1..times.len() {
        let (ta, tb) = (times[k - 1], times[k]);
        if ta >= t_end {
            break;
        }
        let (va, vb) = (values[k - 1], values[k]);
        let (h, v_end) = if tb > t_end {
            let frac = (t_end - ta) / (tb - ta);
            (t_end - ta, va + frac * (vb - va))
        } else {
            (tb - ta, vb)
        };
        let w = 0.5 * h;
        weighted += w * va + w * v_end;
        total += w + w;
    }
    weighted / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rk4_exponential_decay() {
        let f = |y: &[f64; 1]| [-y[0]];
        let mut y = [1.0];
        let dt = 0.01;
        for _ in 0..100 {
            y = rk4_step(&f, &y, dt);
        }
        assert_relative_eq!(y[0], (-1.0_f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn constant_average_is_exact() {
        let times: Vec<f64> = (0..1001).map(|k| k as f64 * 0.0137).collect();
        let values = vec![1.0; times.len()];
        assert_eq!(window_average(&times, &values, 7.3), 1.0);
        assert_eq!(window_average(&times, &values, 1e9), 1.0);
    }

    #[test]
    fn linear_average_with_partial_interval() {
        let times: Vec<f64> = (0..11).map(|k| k as f64 * 0.1).collect();
        let values: Vec<f64> = times.iter().map(|t| 2.0 * t).collect();
        // mean of 2t over [0, 0.55] is 0.55
        assert_relative_eq!(window_average(&times, &values, 0.55), 0.55, epsilon = 1e-14);
    }

    #[test]
    fn cosine_over_full_period_averages_to_zero() {
        let n = 20_000;
        let period = 2.0 * std::f64::consts::PI;
        let times: Vec<f64> = (0..=n).map(|k| k as f64 * period / n as f64).collect();
        let values: Vec<f64> = times.iter().map(|t| t.cos()).collect();
        assert!(window_average(&times, &values, period).abs() < 1e-12);
    }
}
