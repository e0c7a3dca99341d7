//! Statistical machinery for the prediction-error study: log mean squared
//! error, the one-sided Welch two-sample test, and the Student's t CDF it
//! needs.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("length mismatch: {0} predictions vs {1} truths")]
    LengthMismatch(usize, usize),
    #[error("empty series")]
    Empty,
    #[error("mean squared error is zero; its log is undefined")]
    ZeroMse,
    #[error("each group needs at least two samples")]
    TooFewSamples,
    #[error("both groups have zero variance")]
    DegenerateVariance,
}

/// Log mean squared error of one prediction task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogMseResult {
    pub horizon: usize,
    pub mse: f64,
    pub log_mse: f64,
}

/// Natural log of the mean squared residual over the horizon.
pub fn log_mse(predictions: &[f64], truths: &[f64]) -> Result<LogMseResult, StatsError> {
    if predictions.len() != truths.len() {
        return Err(StatsError::LengthMismatch(predictions.len(), truths.len()));
    }
    if predictions.is_empty() {
        return Err(StatsError::Empty);
    }
    let horizon = truths.len();
    let mse = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / horizon as f64;
    if mse == 0.0 {
        return Err(StatsError::ZeroMse);
    }
    Ok(LogMseResult {
        horizon,
        mse,
        log_mse: mse.ln(),
    })
}

/// Direction of the one-sided alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// H1: mean(X) < mean(Y); p = P(T_nu <= t).
    Less,
    /// H1: mean(X) > mean(Y); p = P(T_nu >= t).
    Greater,
}

/// Welch two-sample test result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelchResult {
    pub n1: usize,
    pub n2: usize,
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub t: f64,
    pub nu: f64,
    pub p: f64,
    pub alternative: Alternative,
}

fn mean_and_var(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// One-sided Welch's t-test with Welch–Satterthwaite degrees of freedom and
/// p-values from the Student's t distribution. Sample variances use the
/// n−1 denominator.
pub fn welch_one_sided(
    x: &[f64],
    y: &[f64],
    alternative: Alternative,
) -> Result<WelchResult, StatsError> {
    if x.len() < 2 || y.len() < 2 {
        return Err(StatsError::TooFewSamples);
    }
    let (n1, n2) = (x.len(), y.len());
    let (mean_x, var_x) = mean_and_var(x);
    let (mean_y, var_y) = mean_and_var(y);
    if var_x == 0.0 && var_y == 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let sx = var_x / n1 as f64;
    let sy = var_y / n2 as f64;
    let se = (sx + sy).sqrt();
    let t = (mean_x - mean_y) / se;
    let nu = (sx + sy) * (sx + sy) / (sx * sx / (n1 as f64 - 1.0) + sy * sy / (n2 as f64 - 1.0));
    let p = match alternative {
        Alternative::Less => t_cdf(t, nu),
        Alternative::Greater => 1.0 - t_cdf(t, nu),
    };
    Ok(WelchResult {
        n1,
        n2,
        mean_x,
        mean_y,
        var_x,
        var_y,
        t,
        nu,
        p,
        alternative,
    })
}

// ---------------------------------------------------------------------------
// Student's t CDF via the regularized incomplete beta function
// ---------------------------------------------------------------------------

/// P(T <= t) for the Student's t distribution with `nu` degrees of freedom,
/// through the identity with I_x(nu/2, 1/2) at x = nu/(nu + t^2).
pub fn t_cdf(t: f64, nu: f64) -> f64 {
    assert!(nu > 0.0, "degrees of freedom must be positive");
    if t.is_nan() {
        return f64::NAN;
    }
    if t == 0.0 {
        return 0.5;
    }
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let x = nu / (nu + t * t);
    let half_tail = 0.5 * regularized_inc_beta(0.5 * nu, 0.5, x);
    if t < 0.0 {
        half_tail
    } else {
        1.0 - half_tail
    }
}

/// Lanczos approximation (g = 7, 9 terms), accurate to ~1e-14 relative for
/// positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    // Published coefficients, kept at full printed precision.
    #[allow(clippy::excessive_precision)]
    const COEFFS: [f64; 8] = [
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    #[allow(clippy::excessive_precision)]
    let mut acc = 0.999_999_999_999_809_93;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized incomplete beta I_x(a, b) by continued fraction (modified
/// Lentz), using the symmetry transform for fast convergence.
pub fn regularized_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "beta parameters must be positive");
    assert!((0.0..=1.0).contains(&x), "x must lie in [0, 1]");
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cont_frac(a, b, x) / a
    } else {
        1.0 - front * beta_cont_frac(b, a, 1.0 - x) / b
    }
}

fn beta_cont_frac(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 400;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_residuals_have_zero_log_mse() {
        let r = log_mse(&[2.0, 2.0], &[1.0, 1.0]).unwrap();
        assert_eq!(r.mse, 1.0);
        assert_eq!(r.log_mse, 0.0);
    }

    #[test]
    #[allow(clippy::approx_constant)] // 2.302585 is the documented expected value
    fn ln_ten_example() {
        // residuals 2 and 4 -> mse = (4 + 16)/2 = 10
        let r = log_mse(&[3.0, 5.0], &[1.0, 1.0]).unwrap();
        assert_eq!(r.mse, 10.0);
        assert!((r.log_mse - 10f64.ln()).abs() < 1e-15);
        assert!((r.log_mse - 2.302585).abs() < 1e-6);
    }

    #[test]
    fn perfect_prediction_is_zero_mse() {
        assert_eq!(log_mse(&[1.5, 2.5], &[1.5, 2.5]), Err(StatsError::ZeroMse));
        assert_eq!(
            log_mse(&[1.0], &[1.0, 2.0]),
            Err(StatsError::LengthMismatch(1, 2))
        );
    }

    #[test]
    fn worked_welch_example() {
        // X = [1,2,3,4], Y = [5,6,7,8]: t = -4/sqrt(5/6), nu = 6.
        let r = welch_one_sided(
            &[1.0, 2.0, 3.0, 4.0],
            &[5.0, 6.0, 7.0, 8.0],
            Alternative::Less,
        )
        .unwrap();
        assert!((r.mean_x - 2.5).abs() < 1e-15);
        assert!((r.mean_y - 6.5).abs() < 1e-15);
        assert!((r.var_x - 5.0 / 3.0).abs() < 1e-15);
        assert!((r.t - (-4.0 / (5.0f64 / 6.0).sqrt())).abs() < 1e-12);
        assert!((r.t - (-4.38178)).abs() < 1e-5);
        assert!((r.nu - 6.0).abs() < 1e-12);
        // Exact one-sided p, cross-checked against independent quadrature.
        assert!((r.p - 0.002329607472).abs() < 1e-9, "p = {}", r.p);
        assert!((r.p - 0.00233).abs() < 5e-6);
    }

    #[test]
    fn identical_groups_give_half() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let r = welch_one_sided(&x, &x, Alternative::Less).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p, 0.5);
    }

    #[test]
    fn equal_sizes_and_variances_give_2n_minus_2() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [11.0, 12.0, 13.0, 14.0, 15.0];
        let r = welch_one_sided(&x, &y, Alternative::Less).unwrap();
        assert!((r.nu - 8.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_variance_is_rejected() {
        assert_eq!(
            welch_one_sided(&[1.0, 1.0], &[2.0, 2.0], Alternative::Less),
            Err(StatsError::DegenerateVariance)
        );
        assert_eq!(
            welch_one_sided(&[1.0], &[2.0, 3.0], Alternative::Less),
            Err(StatsError::TooFewSamples)
        );
    }

    #[test]
    fn t_cdf_symmetry_and_limits() {
        for nu in [1.0, 2.0, 5.0, 30.0, 1000.0] {
            assert_eq!(t_cdf(0.0, nu), 0.5);
            assert!(t_cdf(-1e300, nu) < 1e-12);
            assert!(t_cdf(1e300, nu) > 1.0 - 1e-12);
            for t in [-7.3, -1.1, 0.4, 2.9] {
                let sym = t_cdf(t, nu) + t_cdf(-t, nu);
                assert!((sym - 1.0).abs() < 1e-13, "nu={nu} t={t} sym={sym}");
            }
        }
    }

    #[test]
    fn t_cdf_known_values() {
        // nu = 1 is a Cauchy: CDF(t) = 1/2 + atan(t)/pi.
        for t in [-5.0f64, -1.0, -0.3, 0.7, 4.2] {
            let cauchy = 0.5 + t.atan() / std::f64::consts::PI;
            assert!((t_cdf(t, 1.0) - cauchy).abs() < 1e-13, "t={t}");
        }
        // Worked example from the Welch test above.
        assert!((t_cdf(-4.38178, 6.0) - 0.0023296086).abs() < 1e-9);
        // Classic two-sided 95% quantile for nu = 10.
        assert!((t_cdf(2.228, 10.0) - 0.975).abs() < 1e-4);
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        for (x, expected) in [
            (1.0, 0.0),
            (2.0, 0.0),
            (5.0, 24.0f64.ln()),
            (10.0, 362880.0f64.ln()),
        ] {
            assert!((ln_gamma(x) - expected).abs() < 1e-11, "x={x}");
        }
        // Gamma(1/2) = sqrt(pi).
        assert!((ln_gamma(0.5) - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-12);
    }

    #[test]
    fn shift_and_scale_behaviour() {
        let x = [3.1, 4.5, 2.2, 7.8, 5.0];
        let y = [9.4, 8.8, 10.1, 7.7, 9.9];
        let base = welch_one_sided(&x, &y, Alternative::Less).unwrap();

        let shift = 13.25;
        let xs: Vec<f64> = x.iter().map(|v| v + shift).collect();
        let ys: Vec<f64> = y.iter().map(|v| v + shift).collect();
        let shifted = welch_one_sided(&xs, &ys, Alternative::Less).unwrap();
        assert!((base.t - shifted.t).abs() < 1e-9);
        assert!((base.nu - shifted.nu).abs() < 1e-9);

        let c = 3.5;
        let xc: Vec<f64> = x.iter().map(|v| v * c).collect();
        let yc: Vec<f64> = y.iter().map(|v| v * c).collect();
        let scaled = welch_one_sided(&xc, &yc, Alternative::Less).unwrap();
        assert!((base.t - scaled.t).abs() < 1e-9);
        assert!((base.nu - scaled.nu).abs() < 1e-9);
    }

    #[test]
    fn antisymmetry_of_one_sided_p() {
        let x = [3.1, 4.5, 2.2, 7.8, 5.0];
        let y = [9.4, 8.8, 10.1, 7.7];
        let xy = welch_one_sided(&x, &y, Alternative::Less).unwrap();
        let yx = welch_one_sided(&y, &x, Alternative::Less).unwrap();
        assert!((xy.t + yx.t).abs() < 1e-12);
        assert!((xy.p - (1.0 - yx.p)).abs() < 1e-12);
    }
}
