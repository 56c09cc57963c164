//! Macdonald functions and the free resolvent kernel of `-Δ + κ²` in ℝ^ν.
//!
//! Everything here works with the exponentially scaled function `e^x K(x)`
//! internally; the kernel routines rescale at the boundary so that large
//! inter-well distances do not underflow intermediate products.
//!
//! Orders that occur are `η = ν/2 - 1` and `η + 1`, i.e. integers for even ν
//! and half-integers for odd ν. Half-integer orders use the finite closed
//! form; integer orders use the power series for `x <= 2`, Steed's continued
//! fraction above, and upward recurrence from orders 0 and 1.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 2.0;
const MAX_TERMS: usize = 10_000;

/// Order of a Macdonald function that the kernel formula can produce:
/// `n` or `n + 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Order {
    Integer(u32),
    HalfInteger(u32),
}

impl Order {
    fn classify(order: f64) -> Result<Self> {
        if !order.is_finite() || order < 0.0 {
            return Err(Error::Domain(format!("Bessel order must be >= 0, got {order}")));
        }
        let twice = 2.0 * order;
        if (twice - twice.round()).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "only integer and half-integer orders are supported, got {order}"
            )));
        }
        let twice = twice.round() as u32;
        Ok(if twice % 2 == 0 {
            Order::Integer(twice / 2)
        } else {
            Order::HalfInteger(twice / 2)
        })
    }
}

fn check_argument(x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Bessel argument must be positive, got {x}")));
    }
    Ok(())
}

/// `e^x K_order(x)` for integer or half-integer `order >= 0` and `x > 0`.
pub fn bessel_k_scaled(order: f64, x: f64) -> Result<f64> {
    check_argument(x)?;
    let order = Order::classify(order)?;
    Ok(pair_scaled(order, x).0)
}

/// `(e^x K_order(x), e^x K_{order+1}(x))`, sharing one recurrence.
fn pair_scaled(order: Order, x: f64) -> (f64, f64) {
    match order {
        Order::HalfInteger(n) => (half_integer_scaled(n, x), half_integer_scaled(n + 1, x)),
        Order::Integer(n) => {
            let (mut k_prev, mut k_cur) = k0_k1_scaled(x);
            for m in 1..=n {
                let k_next = k_prev + 2.0 * f64::from(m) / x * k_cur;
                k_prev = k_cur;
                k_cur = k_next;
            }
            (k_prev, k_cur)
        }
    }
}

/// `e^x K_{n+1/2}(x) = sqrt(π/2x) Σ_{k=0}^{n} (n+k)! / (k! (n-k)!) (2x)^{-k}`.
fn half_integer_scaled(n: u32, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..n {
        let k = f64::from(k);
        let n = f64::from(n);
        // ratio of consecutive coefficients: (n+k+1)(n-k) / (k+1)
        term *= (n + k + 1.0) * (n - k) / ((k + 1.0) * 2.0 * x);
        sum += term;
    }
    (PI / (2.0 * x)).sqrt() * sum
}

/// `(e^x K_0(x), e^x K_1(x))`.
pub(crate) fn k0_k1_scaled(x: f64) -> (f64, f64) {
    if x <= SERIES_LIMIT {
        let (k0, k1) = k0_k1_series(x);
        let e = x.exp();
        (k0 * e, k1 * e)
    } else {
        k0_k1_continued_fraction(x)
    }
}

/// Unscaled `K_0`, `K_1` from the ascending series (accurate for `x <= 2`).
fn k0_k1_series(x: f64) -> (f64, f64) {
    let y = 0.25 * x * x;
    let log_term = (0.5 * x).ln();

    // K0 = -ln(x/2) I0 + Σ ψ(k+1) y^k / (k!)^2
    // K1 = 1/x + ln(x/2) I1 - (x/4) Σ (ψ(k+1) + ψ(k+2)) y^k / (k! (k+1)!)
    let mut i0 = 0.0;
    let mut i1 = 0.0;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut t0 = 1.0; // y^k / (k!)^2
    let mut t1 = 1.0; // y^k / (k! (k+1)!)
    let mut psi = -EULER_GAMMA; // ψ(k+1)
    for k in 0..MAX_TERMS {
        let kf = k as f64;
        let psi_next = psi + 1.0 / (kf + 1.0);
        i0 += t0;
        i1 += t1;
        s0 += psi * t0;
        s1 += (psi + psi_next) * t1;
        if t0 < 1e-18 * i0.abs() && k > 2 {
            break;
        }
        t0 *= y / ((kf + 1.0) * (kf + 1.0));
        t1 *= y / ((kf + 1.0) * (kf + 2.0));
        psi = psi_next;
    }
    let i1 = 0.5 * x * i1;
    let k0 = -log_term * i0 + s0;
    let k1 = 1.0 / x + log_term * i1 - 0.25 * x * s1;
    (k0, k1)
}

/// Steed's continued fraction (CF2) for order zero, valid for `x >= 2`.
fn k0_k1_continued_fraction(x: f64) -> (f64, f64) {
    let a1 = 0.25; // 1/4 - μ², μ = 0
    let mut a = -a1;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = delh;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_TERMS {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

fn gamma_of_half_nu(nu: u32) -> f64 {
    // Γ(ν/2) for integer ν >= 1
    if nu % 2 == 0 {
        (1..nu / 2).map(f64::from).product()
    } else {
        let mut g = PI.sqrt();
        let mut k = 0.5;
        while k < f64::from(nu) / 2.0 - 0.25 {
            g *= k;
            k += 1.0;
        }
        g
    }
}

/// Dimension and spectral parameter of the kernel `R_κ` of `(-Δ + κ²)^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    nu: u32,
    kappa: f64,
    eta: f64,
}

impl KernelParams {
    pub fn new(nu: u32, kappa: f64) -> Result<Self> {
        if nu < 2 {
            return Err(Error::Domain(format!("dimension must be >= 2, got {nu}")));
        }
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::Domain(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Self {
            nu,
            kappa,
            eta: f64::from(nu) / 2.0 - 1.0,
        })
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Macdonald order `η = ν/2 - 1`.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    fn order(&self) -> Order {
        if self.nu % 2 == 0 {
            Order::Integer(self.nu / 2 - 1)
        } else {
            Order::HalfInteger((self.nu - 3) / 2)
        }
    }

    fn prefactor(&self) -> f64 {
        (2.0 * PI).powf(-f64::from(self.nu) / 2.0)
    }

    /// Kernel value without argument checks; `r` must be positive.
    pub(crate) fn kernel_unchecked(&self, r: f64) -> f64 {
        let x = self.kappa * r;
        let k = match self.order() {
            Order::Integer(0) => k0_k1_scaled(x).0,
            Order::HalfInteger(0) => half_integer_scaled(0, x),
            order => pair_scaled(order, x).0,
        };
        let radial = if self.nu == 2 {
            1.0
        } else {
            (self.kappa / r).powf(self.eta)
        };
        self.prefactor() * radial * k * (-x).exp()
    }

    /// `∫_{|x|<ε} R_κ(|x|) dx` in closed form:
    /// `κ^{-2} [1 - (κε)^{η+1} K_{η+1}(κε) / (2^η Γ(η+1))]`.
    pub fn ball_integral(&self, eps: f64) -> Result<f64> {
        check_argument(eps)?;
        let x = self.kappa * eps;
        let k_next = pair_scaled(self.order(), x).1 * (-x).exp();
        let norm = 2f64.powf(self.eta) * gamma_of_half_nu(self.nu);
        Ok((1.0 - x.powf(self.eta + 1.0) * k_next / norm) / (self.kappa * self.kappa))
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!(
            "kernel distance must be positive, got {r}"
        )));
    }
    Ok(())
}

/// `R_κ(r) = (2π)^{-ν/2} (κ/r)^η K_η(κr)`.
pub fn resolvent_kernel(p: &KernelParams, r: f64) -> Result<f64> {
    check_radius(r)?;
    Ok(p.kernel_unchecked(r))
}

/// `dR_κ/dr = -(2π)^{-ν/2} κ^{η+1} r^{-η} K_{η+1}(κr)`.
pub fn resolvent_kernel_deriv(p: &KernelParams, r: f64) -> Result<f64> {
    check_radius(r)?;
    let x = p.kappa * r;
    let k_next = pair_scaled(p.order(), x).1;
    Ok(-p.prefactor() * p.kappa.powf(p.eta + 1.0) * r.powf(-p.eta) * k_next * (-x).exp())
}

/// `R''/|R'| = (ν-1)/r + κ K_η(κr) / K_{η+1}(κr)`, always above `(ν-1)/r`.
pub fn log_convexity_ratio(p: &KernelParams, r: f64) -> Result<f64> {
    check_radius(r)?;
    let (k, k_next) = pair_scaled(p.order(), p.kappa * r);
    Ok(f64::from(p.nu - 1) / r + p.kappa * k / k_next)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `∫_0^∞ e^{-x(cosh t - 1)} cosh(νt) dt` by the trapezoid rule, which is
    /// spectrally accurate for this analytic, rapidly decaying integrand.
    fn scaled_k_quadrature(order: f64, x: f64) -> f64 {
        let step = (0.02f64).min(0.25 / x.sqrt());
        let mut sum = 0.5;
        let mut t = step;
        loop {
            let f = (-x * (t.cosh() - 1.0) + order * t).exp() * 0.5
                + (-x * (t.cosh() - 1.0) - order * t).exp() * 0.5;
            sum += f;
            if f < 1e-20 * sum {
                break;
            }
            t += step;
        }
        sum * step
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn half_order_closed_form() {
        let v = bessel_k_scaled(0.5, 1.0).unwrap();
        assert!(rel(v, (PI / 2.0).sqrt()) < 1e-15);
        assert!((v - 1.253_314_137_3).abs() < 1e-10);
    }

    #[test]
    fn order_zero_at_one_matches_quadrature() {
        let oracle = scaled_k_quadrature(0.0, 1.0);
        assert!(rel(oracle, 1.0f64.exp() * 0.421_024_438_24) < 1e-10);
        let v = bessel_k_scaled(0.0, 1.0).unwrap();
        assert!(rel(v, oracle) < 1e-12, "{v} vs {oracle}");
        assert!((v - 1.144_463_08).abs() < 1e-8);
    }

    #[test]
    fn order_two_obeys_recurrence_against_quadrature() {
        let k0 = scaled_k_quadrature(0.0, 1.0);
        let k1 = scaled_k_quadrature(1.0, 1.0);
        let k2 = bessel_k_scaled(2.0, 1.0).unwrap();
        assert!(rel(k2, k0 + 2.0 * k1) < 1e-12);
    }

    #[test]
    fn integer_and_half_orders_match_quadrature_over_range() {
        let xs = [1e-6, 1e-3, 0.1, 0.7, 1.9, 2.0, 2.1, 5.0, 17.0, 80.0, 350.0, 700.0];
        for &order in &[0.0, 1.0, 2.0, 3.0, 0.5, 1.5, 2.5] {
            for &x in &xs {
                let oracle = scaled_k_quadrature(order, x);
                let v = bessel_k_scaled(order, x).unwrap();
                assert!(v.is_finite() && v > 0.0);
                assert!(rel(v, oracle) < 1e-10, "order {order} x {x}: {v} vs {oracle}");
            }
        }
    }

    #[test]
    fn recurrence_residual_small() {
        for &eta in &[1.0, 1.5, 2.0] {
            for i in 0..=100 {
                let x = 0.1 * (500.0f64).powf(f64::from(i) / 100.0);
                let km = bessel_k_scaled(eta - 1.0, x).unwrap();
                let k = bessel_k_scaled(eta, x).unwrap();
                let kp = bessel_k_scaled(eta + 1.0, x).unwrap();
                let residual = (kp - km - 2.0 * eta / x * k).abs() / kp;
                assert!(residual <= 1e-10, "eta {eta} x {x}: {residual}");
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_k_scaled(0.0, 0.0).is_err());
        assert!(bessel_k_scaled(0.0, -1.0).is_err());
        assert!(bessel_k_scaled(-1.0, 1.0).is_err());
        assert!(bessel_k_scaled(0.3, 1.0).is_err());
        let p = KernelParams::new(2, 1.0).unwrap();
        assert!(resolvent_kernel(&p, 0.0).is_err());
        assert!(resolvent_kernel_deriv(&p, -1.0).is_err());
        assert!(log_convexity_ratio(&p, 0.0).is_err());
        assert!(KernelParams::new(1, 1.0).is_err());
        assert!(KernelParams::new(2, 0.0).is_err());
    }

    #[test]
    fn kernel_examples() {
        let p3 = KernelParams::new(3, 1.0).unwrap();
        let v = resolvent_kernel(&p3, 2.0).unwrap();
        assert!(rel(v, (-2.0f64).exp() / (8.0 * PI)) < 1e-14);
        assert!((v - 5.38482e-3).abs() < 1e-8);

        let p2 = KernelParams::new(2, 1.0).unwrap();
        let v = resolvent_kernel(&p2, 1.0).unwrap();
        assert!(rel(v, 0.421_024_438_24 / (2.0 * PI)) < 1e-10);
        assert!((v - 6.70059e-2).abs() < 5e-6);
        assert!(v > resolvent_kernel(&p2, 2.0).unwrap());
        assert!((p2.eta() - 0.0).abs() == 0.0);
        assert!((p3.eta() - 0.5).abs() == 0.0);
    }

    #[test]
    fn derivative_examples() {
        let p3 = KernelParams::new(3, 1.0).unwrap();
        let d = resolvent_kernel_deriv(&p3, 2.0).unwrap();
        let exact = -(-2.0f64).exp() * (0.5 + 0.25) / (4.0 * PI);
        assert!(rel(d, exact) < 1e-14);
        assert!((d + 8.0772e-3).abs() < 1e-7);

        let p2 = KernelParams::new(2, 1.0).unwrap();
        let r = 1.0;
        let h = f64::EPSILON.cbrt() * r;
        let fd = (resolvent_kernel(&p2, r + h).unwrap() - resolvent_kernel(&p2, r - h).unwrap())
            / (2.0 * h);
        let d = resolvent_kernel_deriv(&p2, r).unwrap();
        assert!(rel(d, fd) < 1e-6);
    }

    #[test]
    fn convexity_ratio_examples() {
        let p3 = KernelParams::new(3, 1.0).unwrap();
        assert!(rel(log_convexity_ratio(&p3, 1.0).unwrap(), 2.5) < 1e-14);

        let p2 = KernelParams::new(2, 1.0).unwrap();
        let v = log_convexity_ratio(&p2, 10.0).unwrap();
        assert!(rel(v, 1.1) < 0.05);

        let p4 = KernelParams::new(4, 2.0).unwrap();
        assert!(log_convexity_ratio(&p4, 0.5).unwrap() > 6.0);
    }

    #[test]
    fn nu3_specialization_matches_closed_form() {
        for &kappa in &[0.5, 1.0, 2.0] {
            let p = KernelParams::new(3, kappa).unwrap();
            for i in 0..=200 {
                let r = 0.05 * 1000f64.powf(f64::from(i) / 200.0);
                let exact = (-kappa * r).exp() / (4.0 * PI * r);
                assert!(rel(resolvent_kernel(&p, r).unwrap(), exact) <= 1e-12);
            }
        }
    }

    #[test]
    fn ball_integral_matches_radial_quadrature() {
        use gauss_quad::legendre::GaussLegendre;
        let rule = GaussLegendre::new(200).unwrap();
        for nu in 2..=6u32 {
            for &kappa in &[0.3, 1.0, 4.0] {
                let p = KernelParams::new(nu, kappa).unwrap();
                let eps = 0.37;
                // surface area of the unit sphere in ℝ^ν is 2π^{ν/2}/Γ(ν/2)
                let area = 2.0 * PI.powf(f64::from(nu) / 2.0) / gamma_of_half_nu(nu);
                // substitute r = eps t^2 to tame the r^{ν-1} R(r) endpoint behaviour
                let oracle = rule.integrate(0.0, 1.0, |t| {
                    let r = eps * t * t;
                    area * r.powi(nu as i32 - 1) * p.kernel_unchecked(r) * 2.0 * eps * t
                });
                let v = p.ball_integral(eps).unwrap();
                assert!(rel(v, oracle) < 1e-9, "nu {nu} kappa {kappa}: {v} vs {oracle}");
            }
        }
    }

    #[test]
    fn nu2_kernel_bounded_by_inverse_distance() {
        // K0(x) <= c/x: x K0(x) stays bounded on the grid
        let sup = (1..=2000)
            .map(|i| {
                let x = 1e-4 * f64::from(i).powi(2);
                x * bessel_k_scaled(0.0, x).unwrap() * (-x).exp()
            })
            .fold(0.0f64, f64::max);
        assert!(sup < 1.0);
    }
}
