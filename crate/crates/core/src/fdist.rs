//! Fisher–Snedecor F distribution: CDF through the regularized incomplete
//! beta function, and its quantile by safeguarded Newton–bisection.

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum DomainError {
    #[error("probability {0} outside (0, 1)")]
    Probability(f64),
    #[error("degrees of freedom must be >= 1, got ({0}, {1})")]
    DegreesOfFreedom(u32, u32),
    #[error("quantile search did not converge")]
    NoConvergence,
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for x > 0 (Lanczos approximation).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 10_000;

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

/// Regularized incomplete beta function I_x(a, b), returned together with
/// its complement 1 − I_x(a, b) computed without cancellation.
fn beta_reg_pair(a: f64, b: f64, x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0);
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        let lower = ln_front.exp() * beta_cf(a, b, x) / a;
        (lower, 1.0 - lower)
    } else {
        let upper = ln_front.exp() * beta_cf(b, a, 1.0 - x) / b;
        (1.0 - upper, upper)
    }
}

/// Regularized incomplete beta function I_x(a, b).
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    beta_reg_pair(a, b, x).0
}

fn beta_pdf(a: f64, b: f64, x: f64) -> f64 {
    ((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)).exp()
}

/// CDF of F(d1, d2) at q.
pub fn f_cdf(q: f64, d1: f64, d2: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    if q.is_infinite() {
        return 1.0;
    }
    let x = d1 * q / (d1 * q + d2);
    let xc = d2 / (d1 * q + d2);
    if x < 0.5 {
        beta_reg_pair(d1 / 2.0, d2 / 2.0, x).0
    } else {
        beta_reg_pair(d2 / 2.0, d1 / 2.0, xc).1
    }
}

const MAX_ITER: usize = 200;
const INTERVAL_TOL: f64 = 1e-12;

/// Quantile of F(d1, d2): the q with CDF(q) = p.
pub fn f_quantile(p: f64, d1: u32, d2: u32) -> Result<f64, DomainError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(DomainError::Probability(p));
    }
    if d1 < 1 || d2 < 1 {
        return Err(DomainError::DegreesOfFreedom(d1, d2));
    }
    let a = f64::from(d1) / 2.0;
    let b = f64::from(d2) / 2.0;

    // Solve I_x(a, b) = p for x in (0, 1), then map x back to the F scale.
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut x = 0.5;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let g = beta_reg(a, b, x) - p;
        if g == 0.0 {
            converged = true;
            break;
        }
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let pdf = beta_pdf(a, b, x);
        let newton = x - g / pdf;
        let next = if pdf.is_finite() && pdf > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - x).abs();
        x = next;
        if step <= 1e-15 * x || hi - lo <= INTERVAL_TOL * x {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(DomainError::NoConvergence);
    }
    Ok(f64::from(d2) * x / (f64::from(d1) * (1.0 - x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        // ln(10!) = ln(3628800)
        assert!((ln_gamma(11.0) - 3_628_800f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn beta_reg_symmetry_and_ends() {
        assert_eq!(beta_reg(2.0, 3.0, 0.0), 0.0);
        assert_eq!(beta_reg(2.0, 3.0, 1.0), 1.0);
        assert!((beta_reg(3.5, 3.5, 0.5) - 0.5).abs() < 1e-15);
        // I_x(1, 1) = x
        assert!((beta_reg(1.0, 1.0, 0.3) - 0.3).abs() < 1e-15);
        // I_x(a, 1) = x^a
        assert!((beta_reg(2.5, 1.0, 0.4) - 0.4f64.powf(2.5)).abs() < 1e-15);
    }

    #[test]
    fn median_of_equal_dof_is_one() {
        for d in [1, 2, 7, 20] {
            let q = f_quantile(0.5, d, d).unwrap();
            assert!((q - 1.0).abs() < 1e-10, "d={d} q={q}");
        }
    }

    #[test]
    fn quantile_monotone_in_p() {
        let q95 = f_quantile(0.95, 5, 450).unwrap();
        let q99 = f_quantile(0.99, 5, 450).unwrap();
        assert!(q99 > q95);
    }

    #[test]
    fn domain_errors() {
        assert_eq!(f_quantile(0.0, 1, 1), Err(DomainError::Probability(0.0)));
        assert_eq!(f_quantile(1.0, 1, 1), Err(DomainError::Probability(1.0)));
        assert!(f_quantile(f64::NAN, 1, 1).is_err());
        assert_eq!(
            f_quantile(0.5, 0, 3),
            Err(DomainError::DegreesOfFreedom(0, 3))
        );
    }

    #[test]
    fn f1_1_closed_form() {
        // F(1,1) CDF = (2/π)·atan(√q)
        for q in [0.1f64, 1.0, 3.0, 40.0] {
            let expected = 2.0 / std::f64::consts::PI * q.sqrt().atan();
            assert!((f_cdf(q, 1.0, 1.0) - expected).abs() < 1e-14);
        }
    }
}
