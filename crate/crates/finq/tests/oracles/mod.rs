//! Independent reference implementations used only to check the library:
//! a quadrature-based t CDF (no gamma or beta functions anywhere) and a
//! brute-force Welch statistic on shifted compensated sums.

/// Neumaier compensated summation.
pub fn neumaier_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut compensation = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

/// Direct evaluation of the Welch statistic and the Welch–Satterthwaite
/// degrees of freedom: values are shifted by their first element (exact
/// identity) and accumulated with compensated sums of x and x², a different
/// algebraic route than the library's centered two-pass.
pub fn brute_force_welch(x: &[f64], y: &[f64]) -> (f64, f64) {
    fn moments(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let shift = v[0];
        let shifted: Vec<f64> = v.iter().map(|w| w - shift).collect();
        let squares: Vec<f64> = shifted.iter().map(|w| w * w).collect();
        let s1 = neumaier_sum(&shifted);
        let s2 = neumaier_sum(&squares);
        let mean = shift + s1 / n;
        let var = (s2 - s1 * s1 / n) / (n - 1.0);
        (mean, var)
    }
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let (mx, vx) = moments(x);
    let (my, vy) = moments(y);
    let sx = vx / n1;
    let sy = vy / n2;
    let t = (mx - my) / (sx + sy).sqrt();
    let nu = (sx + sy) * (sx + sy) / (sx * sx / (n1 - 1.0) + sy * sy / (n2 - 1.0));
    (t, nu)
}

/// Adaptive Simpson quadrature.
fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 60)
}

/// P(T ≤ t) for Student's t with `nu` degrees of freedom, by numerical
/// integration. The substitution u = atan(s/√ν) maps the density onto
/// √ν·cos(u)^(ν−1) over (−π/2, π/2), a finite smooth integrand, so no
/// special functions are needed; normalization divides by the full
/// integral.
pub fn t_cdf_by_quadrature(t: f64, nu: f64) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    let f = move |u: f64| u.cos().powf(nu - 1.0);
    let upper = (t / nu.sqrt()).atan();
    let full = adaptive_simpson(&f, -FRAC_PI_2, FRAC_PI_2, 1e-13);
    // Integrate the smaller side for accuracy, using symmetry.
    if t <= 0.0 {
        adaptive_simpson(&f, -FRAC_PI_2, upper, 1e-14) / full
    } else {
        1.0 - adaptive_simpson(&f, upper, FRAC_PI_2, 1e-14) / full
    }
}

#[cfg(test)]
mod self_checks {
    use super::*;

    #[test]
    fn quadrature_oracle_matches_closed_forms() {
        // Cauchy (nu = 1): CDF(t) = 1/2 + atan(t)/pi.
        for t in [-20.0f64, -3.0, -0.5, 0.0, 1.0, 10.0] {
            let expected = 0.5 + t.atan() / std::f64::consts::PI;
            let got = t_cdf_by_quadrature(t, 1.0);
            assert!(
                (got - expected).abs() < 1e-12,
                "t = {t}: {got} vs {expected}"
            );
        }
        // nu = 2 closed form: 1/2 + t / (2 sqrt(2 + t^2)).
        for t in [-8.0f64, -1.0, 0.4, 5.0] {
            let expected = 0.5 + t / (2.0 * (2.0 + t * t).sqrt());
            let got = t_cdf_by_quadrature(t, 2.0);
            assert!(
                (got - expected).abs() < 1e-12,
                "t = {t}: {got} vs {expected}"
            );
        }
    }
}
