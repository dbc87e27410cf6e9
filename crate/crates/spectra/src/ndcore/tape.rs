//! Reverse-mode gradient tape over jet-valued nodes.
//!
//! The tape records a forward computation whose scalars are [`Jet`]s
//! (value + input-derivatives along one coordinate). A backward sweep
//! then accumulates d(seeded scalar)/d(parameters) — reverse-over-forward,
//! so parameter gradients of any jet coefficient (u, u_x, u_xxx, ...) come
//! out of the same machinery.
//!
//! Dense layers are fused into single [`Node::Linear`] records so a
//! network forward pass costs a handful of nodes rather than one per
//! multiply. Parameter values are read from the caller's flat slice at
//! both forward and backward time; the tape itself stores only offsets.
//! Replaying backward on an unchanged tape is bit-deterministic.

use super::jet::{cos_derivs, exp_derivs, recip_derivs, sin_derivs, tanh_derivs5, Jet};
use super::NdError;

/// Handle to one scalar (jet) slot on the tape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Var(pub(crate) u32);

/// Handle to a contiguous run of slots treated as a vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VecVar {
    pub(crate) start: u32,
    pub(crate) len: u32,
}

impl VecVar {
    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// View element `i` as a scalar handle.
    #[inline]
    pub fn at(&self, i: usize) -> Var {
        debug_assert!(i < self.len());
        Var(self.start + i as u32)
    }
}

/// Unary elementaries available as tape ops. Each supplies value and
/// derivatives up to order 4 (order-3 jets need φ⁗ in the backward pass).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UnFn {
    Tanh,
    Sin,
    Cos,
    Exp,
    Recip,
    Square,
    /// `sin(ω·u)` — SIREN activation with layer frequency scale.
    SinOmega(f64),
    /// Gaussian RBF bump `exp(−((u−c)/h)²)`.
    RbfGauss { center: f64, inv_h: f64 },
    /// Cubic B-spline bump `B₃((u−c)/h)`, support `|s| < 2`.
    CubicBspline { center: f64, inv_h: f64 },
}

impl UnFn {
    /// `[φ(u), φ'(u), φ''(u), φ'''(u), φ''''(u)]`.
    #[inline]
    pub fn derivs5(&self, u: f64) -> [f64; 5] {
        match *self {
            UnFn::Tanh => tanh_derivs5(u),
            UnFn::Sin => {
                let d = sin_derivs(u);
                [d[0], d[1], d[2], d[3], d[0]]
            }
            UnFn::Cos => {
                let d = cos_derivs(u);
                [d[0], d[1], d[2], d[3], d[0]]
            }
            UnFn::Exp => {
                let d = exp_derivs(u);
                [d[0], d[1], d[2], d[3], d[0]]
            }
            UnFn::Recip => {
                let d = recip_derivs(u);
                let r = 1.0 / u;
                [d[0], d[1], d[2], d[3], 24.0 * r * r * r * r * r]
            }
            UnFn::Square => [u * u, 2.0 * u, 2.0, 0.0, 0.0],
            UnFn::SinOmega(w) => {
                let (s, c) = (w * u).sin_cos();
                [s, w * c, -w * w * s, -w * w * w * c, w * w * w * w * s]
            }
            UnFn::RbfGauss { center, inv_h } => {
                let s = (u - center) * inv_h;
                let e = (-s * s).exp();
                // dⁿ/dxⁿ e^{−s²} = (−1)ⁿ Hₙ(s) e^{−s²} · inv_hⁿ
                let h1 = inv_h;
                let h2 = h1 * inv_h;
                let h3 = h2 * inv_h;
                let h4 = h3 * inv_h;
                [
                    e,
                    -2.0 * s * e * h1,
                    (4.0 * s * s - 2.0) * e * h2,
                    (-8.0 * s * s * s + 12.0 * s) * e * h3,
                    (16.0 * s * s * s * s - 48.0 * s * s + 12.0) * e * h4,
                ]
            }
            UnFn::CubicBspline { center, inv_h } => {
                let s = (u - center) * inv_h;
                let a = s.abs();
                let sign = if s < 0.0 { -1.0 } else { 1.0 };
                let (v, d1, d2, d3) = if a >= 2.0 {
                    (0.0, 0.0, 0.0, 0.0)
                } else if a >= 1.0 {
                    let w = 2.0 - a;
                    (w * w * w / 6.0, -sign * w * w / 2.0, w, -sign)
                } else {
                    (
                        2.0 / 3.0 - s * s + a * a * a / 2.0,
                        -2.0 * s + 1.5 * s * a,
                        -2.0 + 3.0 * a,
                        3.0 * sign,
                    )
                };
                let h1 = inv_h;
                let h2 = h1 * inv_h;
                let h3 = h2 * inv_h;
                [v, d1 * h1, d2 * h2, d3 * h3, 0.0]
            }
        }
    }

    #[inline]
    fn derivs4(&self, u: f64) -> [f64; 4] {
        let d = self.derivs5(u);
        [d[0], d[1], d[2], d[3]]
    }
}

#[derive(Clone, Copy, Debug)]
enum Node {
    /// Input or constant jet; no gradient flow.
    Leaf,
    /// Scalar parameter `params[idx]` lifted onto the tape.
    Param { idx: u32 },
    Unary { f: UnFn, a: u32 },
    Add { a: u32, b: u32 },
    Sub { a: u32, b: u32 },
    Mul { a: u32, b: u32 },
    Scale { a: u32, k: f64 },
    AddConst { a: u32 },
    /// Coefficient extraction: order-0 jet holding `vals[a].coeff(k)`.
    Coeff { a: u32, k: u8 },
    /// Fused dense layer `y = W x (+ b)`, weights row-major at `w_off`.
    Linear {
        x: VecVar,
        w_off: u32,
        /// `u32::MAX` when the layer has no bias.
        b_off: u32,
        out_dim: u32,
    },
    /// Inner product of two equal-length vectors.
    Dot { a: VecVar, b: VecVar },
    /// Gather scattered slots into a contiguous vector (indices live in
    /// `Tape::pack_srcs`).
    Pack { src_start: u32, len: u32 },
}

const NO_BIAS: u32 = u32::MAX;

/// Per-evaluation record of a jet-valued forward computation.
///
/// Create one per evaluation (or [`reset`](Tape::reset) and reuse); the
/// tape is not thread-safe and is meant to be privately owned.
pub struct Tape {
    nodes: Vec<Node>,
    /// First value slot of each node (nodes may span several slots).
    starts: Vec<u32>,
    vals: Vec<Jet>,
    adj: Vec<[f64; 4]>,
    pack_srcs: Vec<u32>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            starts: Vec::new(),
            vals: Vec::new(),
            adj: Vec::new(),
            pack_srcs: Vec::new(),
        }
    }

    /// Clear recorded nodes, keeping allocations.
    pub fn reset(&mut self) {
        self.nodes.clear();
        self.starts.clear();
        self.vals.clear();
        self.pack_srcs.clear();
    }

    #[inline]
    pub fn value(&self, v: Var) -> Jet {
        self.vals[v.0 as usize]
    }

    #[inline]
    pub fn vec_value(&self, v: VecVar, i: usize) -> Jet {
        self.vals[(v.start + i as u32) as usize]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    fn push(&mut self, node: Node, vals: &[Jet]) -> u32 {
        let start = self.vals.len() as u32;
        self.nodes.push(node);
        self.starts.push(start);
        self.vals.extend_from_slice(vals);
        start
    }

    pub fn leaf(&mut self, j: Jet) -> Var {
        Var(self.push(Node::Leaf, &[j]))
    }

    pub fn leaf_vec(&mut self, js: &[Jet]) -> VecVar {
        let start = self.push(Node::Leaf, js);
        VecVar {
            start,
            len: js.len() as u32,
        }
    }

    pub fn constant(&mut self, v: f64, order: usize) -> Var {
        self.leaf(Jet::constant(v, order))
    }

    /// Lift `params[idx]` onto the tape as an order-`order` constant jet.
    pub fn param(&mut self, params: &[f64], idx: usize, order: usize) -> Var {
        let j = Jet::constant(params[idx], order);
        Var(self.push(Node::Param { idx: idx as u32 }, &[j]))
    }

    pub fn unary(&mut self, f: UnFn, a: Var) -> Var {
        let y = self.vals[a.0 as usize].compose(&f.derivs4(self.vals[a.0 as usize].value()));
        Var(self.push(Node::Unary { f, a: a.0 }, &[y]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let y = self.vals[a.0 as usize].add(&self.vals[b.0 as usize]);
        Var(self.push(Node::Add { a: a.0, b: b.0 }, &[y]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let y = self.vals[a.0 as usize].sub(&self.vals[b.0 as usize]);
        Var(self.push(Node::Sub { a: a.0, b: b.0 }, &[y]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let y = self.vals[a.0 as usize].mul(&self.vals[b.0 as usize]);
        Var(self.push(Node::Mul { a: a.0, b: b.0 }, &[y]))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let y = self.vals[a.0 as usize].scale(k);
        Var(self.push(Node::Scale { a: a.0, k }, &[y]))
    }

    pub fn add_const(&mut self, a: Var, k: f64) -> Var {
        let y = self.vals[a.0 as usize].add_const(k);
        Var(self.push(Node::AddConst { a: a.0 }, &[y]))
    }

    /// Extract jet coefficient `k` of `a` as an order-0 scalar.
    pub fn coeff(&mut self, a: Var, k: usize) -> Var {
        let y = Jet::constant(self.vals[a.0 as usize].coeff(k), 0);
        Var(self.push(
            Node::Coeff {
                a: a.0,
                k: k as u8,
            },
            &[y],
        ))
    }

    /// Fused dense layer `y = W x + b` with `W` row-major at
    /// `params[w_off..]` (`out_dim × in_dim`) and optional bias at `b_off`.
    pub fn linear(
        &mut self,
        params: &[f64],
        w_off: usize,
        b_off: Option<usize>,
        out_dim: usize,
        x: VecVar,
    ) -> VecVar {
        let in_dim = x.len();
        let order = if in_dim > 0 {
            self.vals[x.start as usize].order()
        } else {
            0
        };
        let mut out = Vec::with_capacity(out_dim);
        for i in 0..out_dim {
            let mut acc = [0.0f64; 4];
            if let Some(b) = b_off {
                acc[0] = params[b + i];
            }
            let row = &params[w_off + i * in_dim..w_off + (i + 1) * in_dim];
            for (j, &w) in row.iter().enumerate() {
                let xj = &self.vals[(x.start + j as u32) as usize];
                for (k, a) in acc.iter_mut().enumerate().take(order + 1) {
                    *a += w * xj.coeff_or_zero(k);
                }
            }
            out.push(Jet::from_raw(order, acc));
        }
        let start = self.push(
            Node::Linear {
                x,
                w_off: w_off as u32,
                b_off: b_off.map(|b| b as u32).unwrap_or(NO_BIAS),
                out_dim: out_dim as u32,
            },
            &out,
        );
        VecVar {
            start,
            len: out_dim as u32,
        }
    }

    /// Elementwise unary over a vector, fused into one node per element
    /// would waste records; this emits a single vector node.
    pub fn act_vec(&mut self, f: UnFn, x: VecVar) -> VecVar {
        // Represented as individual Unary nodes sharing the fused input;
        // per-element nodes keep backward uniform and cost one record each.
        let mut start = 0;
        for i in 0..x.len() {
            let a = x.at(i);
            let v = self.unary(f, a);
            if i == 0 {
                start = v.0;
            }
        }
        VecVar {
            start,
            len: x.len as u32,
        }
    }

    /// Gather arbitrary slots into one contiguous vector node.
    pub fn pack(&mut self, srcs: &[Var]) -> VecVar {
        let src_start = self.pack_srcs.len() as u32;
        self.pack_srcs.extend(srcs.iter().map(|v| v.0));
        let vals: Vec<Jet> = srcs.iter().map(|v| self.vals[v.0 as usize]).collect();
        let start = self.push(
            Node::Pack {
                src_start,
                len: srcs.len() as u32,
            },
            &vals,
        );
        VecVar {
            start,
            len: srcs.len() as u32,
        }
    }

    /// Multiply every element of `x` by scalar `s`; output is contiguous.
    pub fn mul_scalar_vec(&mut self, x: VecVar, s: Var) -> VecVar {
        let mut start = 0;
        for i in 0..x.len() {
            let v = self.mul(x.at(i), s);
            if i == 0 {
                start = v.0;
            }
        }
        VecVar {
            start,
            len: x.len,
        }
    }

    /// Chebyshev basis `T_0..T_D` of a scalar via the three-term
    /// recurrence `T_{d+1} = 2x·T_d − T_{d−1}` (jet-compatible and stable
    /// on [−1, 1], unlike the acos/cos form).
    pub fn cheb_expand(&mut self, x: Var, degree: usize) -> VecVar {
        let order = self.vals[x.0 as usize].order();
        let mut basis = Vec::with_capacity(degree + 1);
        basis.push(self.constant(1.0, order));
        if degree >= 1 {
            basis.push(x);
        }
        for d in 2..=degree {
            let m = self.mul(x, basis[d - 1]);
            let m2 = self.scale(m, 2.0);
            basis.push(self.sub(m2, basis[d - 2]));
        }
        self.pack(&basis)
    }

    /// Apply a family of unary basis functions to one scalar; outputs are
    /// consecutive slots, so the result is already contiguous.
    pub fn basis_expand(&mut self, x: Var, fns: &[UnFn]) -> VecVar {
        let mut start = 0;
        for (i, f) in fns.iter().enumerate() {
            let v = self.unary(*f, x);
            if i == 0 {
                start = v.0;
            }
        }
        VecVar {
            start,
            len: fns.len() as u32,
        }
    }

    pub fn dot(&mut self, a: VecVar, b: VecVar) -> Var {
        debug_assert_eq!(a.len(), b.len());
        let order = if a.is_empty() {
            0
        } else {
            self.vals[a.start as usize].order()
        };
        let mut acc = Jet::constant(0.0, order);
        for i in 0..a.len() {
            let p = self.vals[(a.start + i as u32) as usize].mul(&self.vals[(b.start + i as u32) as usize]);
            acc = acc.add(&p);
        }
        Var(self.push(Node::Dot { a, b }, &[acc]))
    }

    /// Reverse sweep accumulating `Σ seeds_i · d(var_i)/d(params)` into
    /// `grad` (added, not overwritten). Seeds apply to coefficient 0 of
    /// each seeded var unless a coefficient index is given.
    pub fn backward_seeded(
        &mut self,
        params: &[f64],
        seeds: &[(Var, f64)],
        grad: &mut [f64],
    ) -> Result<(), NdError> {
        self.adj.clear();
        self.adj.resize(self.vals.len(), [0.0; 4]);
        for &(v, s) in seeds {
            if !s.is_finite() || !self.vals[v.0 as usize].is_finite() {
                return Err(self.non_finite_error(v.0 as usize));
            }
            self.adj[v.0 as usize][0] += s;
        }
        for ni in (0..self.nodes.len()).rev() {
            let start = self.starts[ni] as usize;
            match self.nodes[ni] {
                Node::Leaf => {}
                Node::Param { idx } => {
                    grad[idx as usize] += self.adj[start][0];
                }
                Node::Unary { f, a } => {
                    let ay = self.adj[start];
                    if ay == [0.0; 4] {
                        continue;
                    }
                    let z = self.vals[a as usize];
                    let d = f.derivs5(z.value());
                    let (z1, z2, z3) = (z.coeff_or_zero(1), z.coeff_or_zero(2), z.coeff_or_zero(3));
                    let az = &mut self.adj[a as usize];
                    az[0] += ay[0] * d[1]
                        + ay[1] * d[2] * z1
                        + ay[2] * (d[3] * z1 * z1 + d[2] * z2)
                        + ay[3] * (d[4] * z1 * z1 * z1 + 3.0 * d[3] * z1 * z2 + d[2] * z3);
                    az[1] += ay[1] * d[1]
                        + ay[2] * 2.0 * d[2] * z1
                        + ay[3] * (3.0 * d[3] * z1 * z1 + 3.0 * d[2] * z2);
                    az[2] += ay[2] * d[1] + ay[3] * 3.0 * d[2] * z1;
                    az[3] += ay[3] * d[1];
                }
                Node::Add { a, b } => {
                    let ay = self.adj[start];
                    for k in 0..4 {
                        self.adj[a as usize][k] += ay[k];
                    }
                    for k in 0..4 {
                        self.adj[b as usize][k] += ay[k];
                    }
                }
                Node::Sub { a, b } => {
                    let ay = self.adj[start];
                    for k in 0..4 {
                        self.adj[a as usize][k] += ay[k];
                    }
                    for k in 0..4 {
                        self.adj[b as usize][k] -= ay[k];
                    }
                }
                Node::Mul { a, b } => {
                    let ay = self.adj[start];
                    if ay == [0.0; 4] {
                        continue;
                    }
                    let u = self.vals[a as usize];
                    let v = self.vals[b as usize];
                    accumulate_mul_adjoint(&mut self.adj[a as usize], &ay, &v);
                    accumulate_mul_adjoint(&mut self.adj[b as usize], &ay, &u);
                }
                Node::Scale { a, k } => {
                    let ay = self.adj[start];
                    for c in 0..4 {
                        self.adj[a as usize][c] += k * ay[c];
                    }
                }
                Node::AddConst { a } => {
                    let ay = self.adj[start];
                    for c in 0..4 {
                        self.adj[a as usize][c] += ay[c];
                    }
                }
                Node::Coeff { a, k } => {
                    let s = self.adj[start][0];
                    self.adj[a as usize][k as usize] += s;
                }
                Node::Linear {
                    x,
                    w_off,
                    b_off,
                    out_dim,
                } => {
                    let in_dim = x.len();
                    let order = if in_dim > 0 {
                        self.vals[x.start as usize].order()
                    } else {
                        0
                    };
                    for i in 0..out_dim as usize {
                        let ay = self.adj[start + i];
                        if ay == [0.0; 4] {
                            continue;
                        }
                        if b_off != NO_BIAS {
                            grad[b_off as usize + i] += ay[0];
                        }
                        let w_row = w_off as usize + i * in_dim;
                        for j in 0..in_dim {
                            let xs = (x.start as usize) + j;
                            let xj = self.vals[xs];
                            let mut gw = 0.0;
                            for k in 0..=order {
                                gw += ay[k] * xj.coeff_or_zero(k);
                            }
                            grad[w_row + j] += gw;
                            let w = params[w_row + j];
                            let axj = &mut self.adj[xs];
                            for k in 0..=order {
                                axj[k] += w * ay[k];
                            }
                        }
                    }
                }
                Node::Dot { a, b } => {
                    let ay = self.adj[start];
                    if ay == [0.0; 4] {
                        continue;
                    }
                    for i in 0..a.len() {
                        let ia = (a.start as usize) + i;
                        let ib = (b.start as usize) + i;
                        let u = self.vals[ia];
                        let v = self.vals[ib];
                        accumulate_mul_adjoint(&mut self.adj[ia], &ay, &v);
                        accumulate_mul_adjoint(&mut self.adj[ib], &ay, &u);
                    }
                }
            }
        }
        if grad.iter().any(|g| !g.is_finite()) {
            let node = self
                .vals
                .iter()
                .position(|v| !v.is_finite())
                .unwrap_or(0);
            return Err(NdError::NonFiniteGradient { node });
        }
        Ok(())
    }

    /// Gradient of a single scalar var with unit seed.
    pub fn backward(
        &mut self,
        params: &[f64],
        loss: Var,
        grad: &mut [f64],
    ) -> Result<(), NdError> {
        self.backward_seeded(params, &[(loss, 1.0)], grad)
    }

    fn non_finite_error(&self, fallback: usize) -> NdError {
        let node = self
            .vals
            .iter()
            .position(|v| !v.is_finite())
            .unwrap_or(fallback);
        NdError::NonFiniteGradient { node }
    }
}

impl Jet {
    #[inline]
    fn coeff_or_zero(&self, k: usize) -> f64 {
        if k <= self.order() {
            self.coeff(k)
        } else {
            0.0
        }
    }
}

/// Adjoint of the Leibniz product: contribution to `adj_u` from output
/// adjoint `ay` and the co-factor value `v`.
#[inline]
fn accumulate_mul_adjoint(au: &mut [f64; 4], ay: &[f64; 4], v: &Jet) {
    let (v0, v1, v2, v3) = (
        v.coeff_or_zero(0),
        v.coeff_or_zero(1),
        v.coeff_or_zero(2),
        v.coeff_or_zero(3),
    );
    au[0] += ay[0] * v0 + ay[1] * v1 + ay[2] * v2 + ay[3] * v3;
    au[1] += ay[1] * v0 + 2.0 * ay[2] * v1 + 3.0 * ay[3] * v2;
    au[2] += ay[2] * v0 + 3.0 * ay[3] * v1;
    au[3] += ay[3] * v0;
}
