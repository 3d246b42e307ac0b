//! Asymptotic inference for the fitted parameters: information estimate,
//! standard errors, confidence intervals, and Wald statistics.

use crate::error::Result;
use crate::likelihood::LikelihoodContext;
use crate::linalg;
use crate::scalar::{cast, Scalar};

/// `I_hat = (1/k) * sum_t Cov_t(Z_t)` at the supplied point, which is
/// `-H/k` by the Hessian identity. Symmetric PSD up to round-off.
pub fn information_estimate<F: Scalar>(
    ctx: &LikelihoodContext<F>,
    beta_hat: &[F],
) -> Result<Vec<F>> {
    let h = ctx.hessian(beta_hat)?;
    let k = cast::<F>(ctx.k() as f64);
    Ok(h.iter().map(|&v| -v / k).collect())
}

#[derive(Debug, Clone)]
pub struct InferenceResult<F: Scalar> {
    /// The information estimate that was inverted, d x d row-major.
    pub info_hat: Vec<F>,
    pub se: Vec<F>,
    pub ci: Vec<(F, F)>,
    pub tstats: Vec<F>,
    /// Raised when the information matrix cannot be inverted or its inverse
    /// has a non-positive diagonal entry; mirrors the bookkeeping of
    /// numerical errors rather than throwing.
    pub numerical_flag: bool,
}

/// Standard errors and two-sided confidence intervals at level `alpha`:
/// `se_a = sqrt([I_hat^{-1}]_aa / (k - burn_in))`,
/// `ci_a = beta_a -+ z_{1-alpha/2} se_a`.
pub fn standard_errors_ci<F: Scalar>(
    info_hat: &[F],
    beta_hat: &[F],
    k: usize,
    alpha: F,
    burn_in: usize,
) -> InferenceResult<F> {
    let d = beta_hat.len();
    assert_eq!(info_hat.len(), d * d);
    assert!(burn_in < k, "burn-in must leave at least one step");
    let nan = F::nan();
    let mut result = InferenceResult {
        info_hat: info_hat.to_vec(),
        se: vec![nan; d],
        ci: vec![(nan, nan); d],
        tstats: vec![nan; d],
        numerical_flag: false,
    };
    let Some(inv) = linalg::invert(info_hat, d, cast(1e-12)) else {
        result.numerical_flag = true;
        return result;
    };
    let denom = cast::<F>((k - burn_in) as f64);
    let z = normal_quantile(F::one() - alpha / cast(2.0));
    for a in 0..d {
        let diag = inv[a * d + a];
        if !(diag > F::zero()) {
            result.numerical_flag = true;
            continue;
        }
        let se = (diag / denom).sqrt();
        result.se[a] = se;
        result.ci[a] = (beta_hat[a] - z * se, beta_hat[a] + z * se);
        if se > F::zero() {
            result.tstats[a] = (beta_hat[a] / se).abs();
        }
    }
    result
}

/// Absolute Wald statistics `|beta_a / se_a|`; zero or invalid standard
/// errors yield NaN entries.
pub fn wald_stats<F: Scalar>(beta_hat: &[F], se: &[F]) -> Vec<F> {
    beta_hat
        .iter()
        .zip(se)
        .map(|(&b, &s)| {
            if s > F::zero() {
                (b / s).abs()
            } else {
                F::nan()
            }
        })
        .collect()
}

/// Coordinate order sorted by decreasing |t|; NaN entries go last.
pub fn wald_order<F: Scalar>(tstats: &[F]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..tstats.len()).collect();
    idx.sort_by(|&a, &b| {
        let (ta, tb) = (tstats[a], tstats[b]);
        match (ta.is_nan(), tb.is_nan()) {
            (true, true) => std::cmp::Ordering::Equal,
            (true, false) => std::cmp::Ordering::Greater,
            (false, true) => std::cmp::Ordering::Less,
            (false, false) => tb.partial_cmp(&ta).unwrap(),
        }
    });
    idx
}

/// Inverse standard normal CDF by the Acklam rational approximation
/// (Beasley-Springer style), absolute error below 1e-9 over (0, 1).
pub fn normal_quantile<F: Scalar>(p: F) -> F {
    let p = crate::scalar::to_f64(p);
    if !(0.0..=1.0).contains(&p) || p == 0.0 || p == 1.0 {
        return F::nan();
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    cast(x)
}
