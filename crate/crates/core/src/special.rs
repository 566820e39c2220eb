//! Special functions and quadrature shared by the analytic and capacity code.

use std::f64::consts::{PI, SQRT_2};

/// Gaussian tail probability `Q(x) = P(Z > x)` for a standard normal `Z`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Natural log of `Q(x)`, finite far beyond the point where `Q` itself underflows.
pub fn log_q_function(x: f64) -> f64 {
    if x < 0.0 {
        return (-q_function(-x)).ln_1p();
    }
    if x < 35.0 {
        return q_function(x).ln();
    }
    // Asymptotic tail: Q(x) ~ phi(x)/x * (1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8)
    let inv2 = 1.0 / (x * x);
    let series = 1.0 - inv2 * (1.0 - 3.0 * inv2 * (1.0 - 5.0 * inv2 * (1.0 - 7.0 * inv2)));
    -0.5 * x * x - (x * (2.0 * PI).sqrt()).ln() + series.ln()
}

/// `Q(x)^2`, routed through the log domain when `Q(x)` is subnormal-small.
pub fn q_function_squared(x: f64) -> f64 {
    let q = q_function(x);
    if q > 1e-150 {
        q * q
    } else {
        (2.0 * log_q_function(x)).exp()
    }
}

const BESSEL_SWITCH: f64 = 25.0;

/// Exponentially scaled modified Bessel function `I0(x) e^{-|x|}`.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    let x = x.abs();
    if x < BESSEL_SWITCH {
        i0_series(x) * (-x).exp()
    } else {
        i0e_asymptotic(x)
    }
}

/// `ln I0(x)`, computed as `x + ln(I0(x) e^{-x})` so large arguments never overflow.
pub fn log_bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x < BESSEL_SWITCH {
        i0_series(x).ln()
    } else {
        x + i0e_asymptotic(x).ln()
    }
}

// Power series sum_k (x^2/4)^k / (k!)^2; every term is positive so the sum is well conditioned.
fn i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term < 1e-17 * sum {
            return sum;
        }
        k += 1.0;
    }
}

// Hankel expansion: I0(x) e^{-x} ~ (2 pi x)^{-1/2} sum_k ((2k-1)!!)^2 / (k! (8x)^k).
fn i0e_asymptotic(x: f64) -> f64 {
    let inv8x = 1.0 / (8.0 * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        let odd = (2 * k - 1) as f64;
        let next = term * odd * odd * inv8x / k as f64;
        if next > term {
            break;
        }
        term = next;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum / (2.0 * PI * x).sqrt()
}

/// Gauss–Legendre rule, stored on the unit interval `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds an `n`-point rule by Newton iteration on the Legendre polynomial roots.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess for the i-th largest root.
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // Map [-1, 1] -> [0, 1]: node (1 + x)/2, weight w/2.
            nodes[i] = 0.5 * (1.0 - x);
            weights[i] = 0.5 * w;
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes on `[0, 1]` in increasing order.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights matching [`GaussLegendre::nodes`]; they sum to one.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let width = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&v, &w)| w * f(a + width * v))
            .sum::<f64>()
            * width
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Numerically stable `ln(sum_i exp(a_i))`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Trapezoid on the periodic integrand of I0(x) e^{-x} = (1/pi) int_0^pi e^{x (cos t - 1)} dt,
    // spectrally accurate and independent of both series branches.
    fn i0e_oracle(x: f64) -> f64 {
        let n = 4000;
        let h = PI / n as f64;
        let mut s = 0.5 * (1.0 + (-2.0 * x).exp());
        for k in 1..n {
            s += (x * ((k as f64 * h).cos() - 1.0)).exp();
        }
        s * h / PI
    }

    #[test]
    fn q_function_basics() {
        assert_eq!(q_function(0.0), 0.5);
        let x = 1.7;
        assert!((q_function(-x) - (1.0 - q_function(x))).abs() < 1e-15);
    }

    #[test]
    fn q_function_matches_tail_quadrature() {
        // int_3^inf phi(t) dt on [3, 40] with a dense rule.
        let gl = GaussLegendre::new(400);
        let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
        let tail = gl.integrate(3.0, 12.0, phi);
        let q3 = q_function(3.0);
        assert!((q3 - tail).abs() / tail < 1e-12, "{q3} vs {tail}");
        assert!((q3 - 1.3499e-3).abs() < 1e-7);
    }

    #[test]
    fn q_function_relative_accuracy_on_range() {
        let gl = GaussLegendre::new(600);
        let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
        for &x in &[0.5, 2.0, 4.5, 6.0, 8.0] {
            let tail = gl.integrate(x, x + 12.0, phi);
            assert!((q_function(x) - tail).abs() / tail < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn log_q_is_continuous_across_branch() {
        let below = log_q_function(34.999_999);
        let above = log_q_function(35.0);
        assert!((below - above).abs() < 1e-4);
        assert!((log_q_function(20.0) - q_function(20.0).ln()).abs() < 1e-12);
        assert!(log_q_function(60.0).is_finite());
        assert!((log_q_function(-1.0) - q_function(-1.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn q_squared_survives_underflow() {
        assert!((q_function_squared(2.0) - q_function(2.0).powi(2)).abs() < 1e-18);
        assert_eq!(q_function_squared(40.0), 0.0);
        let x = 17.0;
        let direct = q_function(x) * q_function(x);
        assert!((q_function_squared(x) - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn bessel_scaled_matches_integral_oracle() {
        for &x in &[0.0, 1e-3, 0.5, 3.0, 10.0, 24.9, 25.0, 25.1, 40.0, 200.0, 1500.0] {
            let want = i0e_oracle(x);
            let got = bessel_i0_scaled(x);
            assert!((got - want).abs() / want < 1e-13, "x = {x}: {got} vs {want}");
        }
    }

    #[test]
    fn log_bessel_is_smooth_at_switch() {
        let a = log_bessel_i0(BESSEL_SWITCH - 1e-9);
        let b = log_bessel_i0(BESSEL_SWITCH);
        // slope of ln I0 is below one, so a 1e-9 step moves it by less than 1e-9
        assert!((a - b).abs() < 1e-9 + 1e-13 * b.abs());
        assert!((log_bessel_i0(1e4) - (1e4 + bessel_i0_scaled(1e4).ln())).abs() < 1e-9);
        assert_eq!(log_bessel_i0(0.0), 0.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        // degree 15 is exact for 8 nodes
        let val = gl.integrate(0.0, 1.0, |x| x.powi(15));
        assert!((val - 1.0 / 16.0).abs() < 1e-15);
        assert!((gl.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let big = GaussLegendre::new(1024);
        assert!((big.weights().iter().sum::<f64>() - 1.0).abs() < 1e-13);
        assert!(big.nodes().windows(2).all(|w| w[0] < w[1]));
        let s = big.integrate(0.0, PI, f64::sin);
        assert!((s - 2.0).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_known_nodes() {
        let gl = GaussLegendre::new(3);
        let x = (0.6f64).sqrt();
        assert!((gl.nodes()[0] - 0.5 * (1.0 - x)).abs() < 1e-15);
        assert!((gl.nodes()[1] - 0.5).abs() < 1e-15);
        assert!((gl.weights()[1] - 4.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn log_sum_exp_handles_large_values() {
        let v = [1000.0, 1000.0];
        assert!((log_sum_exp(&v) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }
}
