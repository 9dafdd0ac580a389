//! Composite Gauss-Legendre quadrature for smooth integrands.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}

/// Integral of `f` over `[a, b]` using `panels` equal panels of an
/// `order`-point Gauss-Legendre rule.
pub fn integrate_complex(f: impl Fn(f64) -> Complex64, a: f64, b: f64, panels: usize, order: usize) -> Complex64 {
    let rule = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for &(x, w) in &rule {
            total += f(mid + 0.5 * h * x) * w;
        }
    }
    total * (0.5 * h)
}

pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    integrate_complex(|x| Complex64::new(f(x), 0.0), a, b, panels, order).re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        for n in 1..=10 {
            let rule = gauss_legendre(n);
            assert!((rule.iter().map(|r| r.1).sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in 0..(2 * n) {
                let q: f64 = rule.iter().map(|&(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn composite_rule_on_transcendental() {
        let v = integrate(f64::exp, 0.0, 3.0, 8, 8);
        assert!((v - (3f64.exp() - 1.0)).abs() < 1e-12);
    }
}
