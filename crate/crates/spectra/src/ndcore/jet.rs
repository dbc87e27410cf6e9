//! Truncated Taylor jets: value plus derivatives up to order 3 along a
//! single input coordinate.
//!
//! Coefficients are stored as raw derivatives `(u, u', u'', u''')`, not
//! Taylor coefficients, so `coeff(k)` is directly the k-th partial along
//! the seeded axis. Arithmetic follows the Leibniz rule and unary
//! elementaries propagate through Faà di Bruno up to order 3.

use super::NdError;

/// Maximum supported derivative order.
pub const MAX_ORDER: usize = 3;

/// Value and input-derivatives along one designated coordinate.
///
/// An order-0 jet behaves exactly like a scalar; orders 1–3 carry
/// `∂u/∂s`, `∂²u/∂s²`, `∂³u/∂s³` in `c[1..=3]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    order: u8,
    c: [f64; MAX_ORDER + 1],
}

impl Jet {
    /// Constant jet: all derivatives zero.
    #[inline]
    pub fn constant(value: f64, order: usize) -> Self {
        debug_assert!(order <= MAX_ORDER);
        let mut c = [0.0; 4];
        c[0] = value;
        Jet { order: order as u8, c }
    }

    /// Seed jet for the differentiation variable itself: `(x, scale, 0, 0)`.
    ///
    /// `scale` is the chain-rule factor d(normalized coord)/d(physical
    /// coord), so derivatives downstream come out in physical units.
    #[inline]
    pub fn variable(value: f64, scale: f64, order: usize) -> Self {
        debug_assert!(order <= MAX_ORDER);
        let mut c = [0.0; 4];
        c[0] = value;
        if order >= 1 {
            c[1] = scale;
        }
        Jet { order: order as u8, c }
    }

    /// Internal constructor from a raw coefficient array.
    #[inline]
    pub(crate) fn from_raw(order: usize, c: [f64; MAX_ORDER + 1]) -> Self {
        debug_assert!(order <= MAX_ORDER);
        Jet { order: order as u8, c }
    }

    /// Build from explicit derivative coefficients.
    pub fn from_coeffs(coeffs: &[f64]) -> Result<Self, NdError> {
        if coeffs.is_empty() || coeffs.len() > MAX_ORDER + 1 {
            return Err(NdError::UnsupportedJetOrder {
                order: coeffs.len().wrapping_sub(1),
            });
        }
        let mut c = [0.0; 4];
        c[..coeffs.len()].copy_from_slice(coeffs);
        Ok(Jet {
            order: (coeffs.len() - 1) as u8,
            c,
        })
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order as usize
    }

    /// The k-th derivative coefficient (`k = 0` is the value).
    #[inline]
    pub fn coeff(&self, k: usize) -> f64 {
        debug_assert!(k <= self.order());
        self.c[k]
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Coefficient slice `[u, u', .., u^(order)]`.
    #[inline]
    pub fn coeffs(&self) -> &[f64] {
        &self.c[..=self.order()]
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.coeffs().iter().all(|v| v.is_finite())
    }

    #[inline]
    pub fn add(&self, rhs: &Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut c = [0.0; 4];
        for k in 0..=order as usize {
            c[k] = self.c[k] + rhs.c[k];
        }
        Jet { order, c }
    }

    #[inline]
    pub fn sub(&self, rhs: &Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut c = [0.0; 4];
        for k in 0..=order as usize {
            c[k] = self.c[k] - rhs.c[k];
        }
        Jet { order, c }
    }

    #[inline]
    pub fn neg(&self) -> Jet {
        let mut c = [0.0; 4];
        for k in 0..=self.order() {
            c[k] = -self.c[k];
        }
        Jet { order: self.order, c }
    }

    #[inline]
    pub fn scale(&self, a: f64) -> Jet {
        let mut c = [0.0; 4];
        for k in 0..=self.order() {
            c[k] = a * self.c[k];
        }
        Jet { order: self.order, c }
    }

    #[inline]
    pub fn add_const(&self, a: f64) -> Jet {
        let mut out = *self;
        out.c[0] += a;
        out
    }

    /// Leibniz product: `(uv)^(k) = Σ_j C(k,j) u^(j) v^(k-j)`.
    #[inline]
    pub fn mul(&self, rhs: &Jet) -> Jet {
        let order = self.order.min(rhs.order) as usize;
        let a = &self.c;
        let b = &rhs.c;
        let mut c = [0.0; 4];
        c[0] = a[0] * b[0];
        if order >= 1 {
            c[1] = a[1] * b[0] + a[0] * b[1];
        }
        if order >= 2 {
            c[2] = a[2] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[2];
        }
        if order >= 3 {
            c[3] = a[3] * b[0] + 3.0 * a[2] * b[1] + 3.0 * a[1] * b[2] + a[0] * b[3];
        }
        Jet { order: order as u8, c }
    }

    /// Compose `φ ∘ self` given `derivs = [φ(u), φ'(u), φ''(u), φ'''(u)]`
    /// evaluated at `u = self.value()` (Faà di Bruno to order 3).
    #[inline]
    pub fn compose(&self, d: &[f64; 4]) -> Jet {
        let order = self.order();
        let z = &self.c;
        let mut c = [0.0; 4];
        c[0] = d[0];
        if order >= 1 {
            c[1] = d[1] * z[1];
        }
        if order >= 2 {
            c[2] = d[2] * z[1] * z[1] + d[1] * z[2];
        }
        if order >= 3 {
            c[3] = d[3] * z[1] * z[1] * z[1] + 3.0 * d[2] * z[1] * z[2] + d[1] * z[3];
        }
        Jet { order: self.order, c }
    }

    pub fn tanh(&self) -> Jet {
        self.compose(&tanh_derivs(self.c[0]))
    }

    pub fn sin(&self) -> Jet {
        self.compose(&sin_derivs(self.c[0]))
    }

    pub fn cos(&self) -> Jet {
        self.compose(&cos_derivs(self.c[0]))
    }

    pub fn exp(&self) -> Jet {
        self.compose(&exp_derivs(self.c[0]))
    }

    /// Integer power via repeated products (exact for jets).
    pub fn powi(&self, n: i32) -> Jet {
        let mut acc = Jet::constant(1.0, self.order());
        for _ in 0..n.unsigned_abs() {
            acc = acc.mul(self);
        }
        if n < 0 {
            // 1/acc via reciprocal composition
            acc.compose(&recip_derivs(acc.c[0]))
        } else {
            acc
        }
    }
}

/// `[tanh u, tanh' u, tanh'' u, tanh''' u]`.
#[inline]
pub fn tanh_derivs(u: f64) -> [f64; 4] {
    let t = u.tanh();
    let s = 1.0 - t * t; // sech²
    [t, s, -2.0 * t * s, -2.0 * s * (s - 2.0 * t * t)]
}

/// Extends [`tanh_derivs`] with the 4th derivative (needed by the tape's
/// backward pass through order-3 jets).
#[inline]
pub fn tanh_derivs5(u: f64) -> [f64; 5] {
    let t = u.tanh();
    let s = 1.0 - t * t;
    let d1 = s;
    let d2 = -2.0 * t * s;
    let d3 = -2.0 * (d1 * d1 + t * d2);
    let d4 = -2.0 * (3.0 * d1 * d2 + t * d3);
    [t, d1, d2, d3, d4]
}

#[inline]
pub fn sin_derivs(u: f64) -> [f64; 4] {
    let (s, c) = u.sin_cos();
    [s, c, -s, -c]
}

#[inline]
pub fn cos_derivs(u: f64) -> [f64; 4] {
    let (s, c) = u.sin_cos();
    [c, -s, -c, s]
}

#[inline]
pub fn exp_derivs(u: f64) -> [f64; 4] {
    let e = u.exp();
    [e, e, e, e]
}

#[inline]
pub fn recip_derivs(u: f64) -> [f64; 4] {
    let r = 1.0 / u;
    let r2 = r * r;
    [r, -r2, 2.0 * r2 * r, -6.0 * r2 * r2]
}

/// Elementary function tags accepted by [`jet_compose`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Elementary {
    Tanh,
    Sin,
    Cos,
    Exp,
    Add,
    Mul,
    Scale(f64),
    Power(i32),
}

/// Apply an elementary to one or two jets, propagating derivatives.
///
/// Unary tags take one argument; `Add`/`Mul` take two. Anything else is
/// an [`NdError::UnsupportedElementary`].
pub fn jet_compose(f: Elementary, args: &[Jet]) -> Result<Jet, NdError> {
    let unary = |args: &[Jet]| -> Result<Jet, NdError> {
        if args.len() != 1 {
            return Err(NdError::UnsupportedElementary(format!(
                "{f:?} expects 1 argument, got {}",
                args.len()
            )));
        }
        Ok(args[0])
    };
    match f {
        Elementary::Tanh => Ok(unary(args)?.tanh()),
        Elementary::Sin => Ok(unary(args)?.sin()),
        Elementary::Cos => Ok(unary(args)?.cos()),
        Elementary::Exp => Ok(unary(args)?.exp()),
        Elementary::Scale(a) => Ok(unary(args)?.scale(a)),
        Elementary::Power(n) => Ok(unary(args)?.powi(n)),
        Elementary::Add | Elementary::Mul => {
            if args.len() != 2 {
                return Err(NdError::UnsupportedElementary(format!(
                    "{f:?} expects 2 arguments, got {}",
                    args.len()
                )));
            }
            Ok(match f {
                Elementary::Add => args[0].add(&args[1]),
                _ => args[0].mul(&args[1]),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn order_zero_matches_scalar_arithmetic() {
        let a = Jet::constant(2.5, 0);
        let b = Jet::constant(-1.5, 0);
        assert_eq!(a.add(&b).value(), 1.0);
        assert_eq!(a.mul(&b).value(), -3.75);
        assert_eq!(a.tanh().value(), 2.5f64.tanh());
    }

    #[test]
    fn sin_jet_at_zero() {
        // derivatives of sin at 0 are 0, 1, 0, −1
        let x = Jet::variable(0.0, 1.0, 3);
        let y = x.sin();
        assert_eq!(y.coeffs(), &[0.0, 1.0, 0.0, -1.0]);
    }

    #[test]
    fn tanh_jet_at_zero() {
        // tanh'''(0) = −2
        let x = Jet::variable(0.0, 1.0, 3);
        let y = x.tanh();
        assert_relative_eq!(y.coeff(0), 0.0);
        assert_relative_eq!(y.coeff(1), 1.0);
        assert_relative_eq!(y.coeff(2), 0.0);
        assert_relative_eq!(y.coeff(3), -2.0);
    }

    #[test]
    fn product_of_s_plus_one_squared() {
        // (s+1)² at s=0: value 1, first 2, second 2, third 0
        let a = Jet::from_coeffs(&[1.0, 1.0, 0.0, 0.0]).unwrap();
        let y = a.mul(&a);
        assert_eq!(y.coeffs(), &[1.0, 2.0, 2.0, 0.0]);
    }

    #[test]
    fn jet_compose_dispatch_and_errors() {
        let a = Jet::from_coeffs(&[1.0, 1.0, 0.0, 0.0]).unwrap();
        let y = jet_compose(Elementary::Mul, &[a, a]).unwrap();
        assert_eq!(y.coeffs(), &[1.0, 2.0, 2.0, 0.0]);
        let e = jet_compose(Elementary::Mul, &[a]);
        assert!(matches!(e, Err(NdError::UnsupportedElementary(_))));
        let e = jet_compose(Elementary::Tanh, &[a, a]);
        assert!(matches!(e, Err(NdError::UnsupportedElementary(_))));
    }

    /// Central finite differences of the order-0 evaluation, adaptive step.
    fn fd_derivs(f: impl Fn(f64) -> f64, x: f64) -> [f64; 4] {
        let h = 1e-3 * (1.0 + x.abs());
        let fp = |x: f64| f(x);
        let d1 = (fp(x + h) - fp(x - h)) / (2.0 * h);
        let d2 = (fp(x + h) - 2.0 * fp(x) + fp(x - h)) / (h * h);
        let d3 = (fp(x + 2.0 * h) - 2.0 * fp(x + h) + 2.0 * fp(x - h) - fp(x - 2.0 * h))
            / (2.0 * h * h * h);
        [fp(x), d1, d2, d3]
    }

    #[test]
    fn elementaries_match_finite_differences() {
        let points = [-1.3, -0.4, 0.2, 0.9, 1.7];
        for &x in &points {
            let jet = Jet::variable(x, 1.0, 3);
            let cases: [(Jet, Box<dyn Fn(f64) -> f64>); 4] = [
                (jet.tanh(), Box::new(|x: f64| x.tanh())),
                (jet.sin(), Box::new(|x: f64| x.sin())),
                (jet.cos(), Box::new(|x: f64| x.cos())),
                (jet.exp(), Box::new(|x: f64| x.exp())),
            ];
            for (j, f) in &cases {
                let fd = fd_derivs(f, x);
                for k in 0..=3 {
                    assert_relative_eq!(j.coeff(k), fd[k], max_relative = 1e-4, epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn composite_chain_matches_finite_differences() {
        // tanh(sin(x)·x + exp(−x²)) through jets vs FD
        let f = |x: f64| (x.sin() * x + (-x * x).exp()).tanh();
        for &x in &[-0.7, 0.3, 1.1] {
            let xj = Jet::variable(x, 1.0, 3);
            let y = xj.sin().mul(&xj).add(&xj.mul(&xj).neg().exp()).tanh();
            let fd = fd_derivs(&f, x);
            for k in 0..=3 {
                assert_relative_eq!(y.coeff(k), fd[k], max_relative = 2e-4, epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn chain_rule_scale_for_normalized_inputs() {
        // u(x) = sin(2x) written as sin(s) with s = 2x: seeding scale 2
        // must produce physical derivatives.
        let x = 0.4;
        let s = Jet::variable(2.0 * x, 2.0, 3);
        let y = s.sin();
        assert_relative_eq!(y.coeff(1), 2.0 * (2.0 * x).cos(), max_relative = 1e-12);
        assert_relative_eq!(y.coeff(3), -8.0 * (2.0 * x).cos(), max_relative = 1e-12);
    }

    #[test]
    fn powi_and_recip() {
        let x = Jet::variable(1.5, 1.0, 3);
        let y = x.powi(3);
        assert_relative_eq!(y.coeff(0), 3.375);
        assert_relative_eq!(y.coeff(1), 3.0 * 1.5 * 1.5);
        assert_relative_eq!(y.coeff(2), 6.0 * 1.5);
        assert_relative_eq!(y.coeff(3), 6.0);
        let inv = x.powi(-1);
        assert_relative_eq!(inv.coeff(0), 1.0 / 1.5, max_relative = 1e-14);
        assert_relative_eq!(inv.coeff(1), -1.0 / (1.5 * 1.5), max_relative = 1e-14);
    }
}
