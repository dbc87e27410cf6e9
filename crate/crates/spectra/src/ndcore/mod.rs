//! Dense tensor arithmetic, forward-mode univariate jets, and a
//! reverse-mode gradient tape.
//!
//! Input derivatives (u_x, u_xx, u_xxx, u_t, ...) come from truncated
//! Taylor jets seeded per axis; parameter gradients come from a reverse
//! sweep over the jet-augmented forward pass. All arithmetic is f64 —
//! the quasi-Newton optimizers depend on full precision.

mod jet;
mod tape;
mod tensor;

pub use jet::{
    cos_derivs, exp_derivs, jet_compose, recip_derivs, sin_derivs, tanh_derivs, tanh_derivs5,
    Elementary, Jet, MAX_ORDER,
};
pub use tape::{Tape, UnFn, Var, VecVar};
pub use tensor::Tensor;

use thiserror::Error;

/// Errors raised by tensor, jet, and tape operations.
#[derive(Debug, Error, PartialEq)]
pub enum NdError {
    #[error("shape product {expected} does not match data length {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("unsupported elementary: {0}")]
    UnsupportedElementary(String),
    #[error("unsupported jet order {order} (max 3)")]
    UnsupportedJetOrder { order: usize },
    #[error("non-finite value encountered during gradient accumulation at node {node}")]
    NonFiniteGradient { node: usize },
    #[error("non-finite loss value")]
    NonFiniteLoss,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grad_of_square_is_two_w() {
        // loss = w² at w = 3 → gradient 6
        let params = [3.0];
        let mut tape = Tape::new();
        let w = tape.param(&params, 0, 0);
        let loss = tape.mul(w, w);
        let mut grad = vec![0.0; 1];
        tape.backward(&params, loss, &mut grad).unwrap();
        assert_relative_eq!(grad[0], 6.0);
    }

    #[test]
    fn grad_of_sum_of_squared_offsets() {
        // loss = Σ (wᵢ − 1)² at w = (0, 2) → (−2, 2)
        let params = [0.0, 2.0];
        let mut tape = Tape::new();
        let mut terms = Vec::new();
        for i in 0..2 {
            let w = tape.param(&params, i, 0);
            let d = tape.add_const(w, -1.0);
            terms.push(tape.mul(d, d));
        }
        let loss = tape.add(terms[0], terms[1]);
        let mut grad = vec![0.0; 2];
        tape.backward(&params, loss, &mut grad).unwrap();
        assert_eq!(grad, vec![-2.0, 2.0]);
    }

    #[test]
    fn grad_is_linear_in_seeds() {
        // grad(a·L1 + b·L2) = a·grad(L1) + b·grad(L2)
        let params = [0.7, -1.3];
        let build = |tape: &mut Tape| -> (Var, Var) {
            let w0 = tape.param(&params, 0, 0);
            let w1 = tape.param(&params, 1, 0);
            let l1 = {
                let t = tape.unary(UnFn::Tanh, w0);
                tape.mul(t, w1)
            };
            let l2 = {
                let s = tape.unary(UnFn::Sin, w1);
                tape.mul(s, s)
            };
            (l1, l2)
        };
        let (a, b) = (1.7, -0.4);

        let mut tape = Tape::new();
        let (l1, l2) = build(&mut tape);
        let mut g1 = vec![0.0; 2];
        tape.backward(&params, l1, &mut g1).unwrap();
        let mut g2 = vec![0.0; 2];
        tape.backward(&params, l2, &mut g2).unwrap();

        let mut tape2 = Tape::new();
        let (l1, l2) = build(&mut tape2);
        let mut g = vec![0.0; 2];
        tape2
            .backward_seeded(&params, &[(l1, a), (l2, b)], &mut g)
            .unwrap();

        for i in 0..2 {
            assert_relative_eq!(g[i], a * g1[i] + b * g2[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn backward_replay_is_bit_identical() {
        let params = [0.3, 0.9, -0.2];
        let mut tape = Tape::new();
        let x = tape.leaf(Jet::variable(0.5, 1.0, 2));
        let xv = tape.leaf_vec(&[Jet::variable(0.5, 1.0, 2)]);
        let h = tape.linear(&params, 0, Some(1), 1, xv);
        let a = tape.act_vec(UnFn::Tanh, h);
        let w2 = tape.param(&params, 2, 2);
        let y = tape.mul(a.at(0), w2);
        let yx = tape.coeff(y, 1);
        let loss = tape.mul(yx, yx);
        let _ = x;
        let mut g1 = vec![0.0; 3];
        tape.backward(&params, loss, &mut g1).unwrap();
        let mut g2 = vec![0.0; 3];
        tape.backward(&params, loss, &mut g2).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn linear_node_gradient_matches_finite_differences() {
        // y = tanh(W x + b), loss = (∂y/∂x)²; gradient w.r.t. (W, b) by FD
        let x0 = 0.37;
        let eval = |p: &[f64]| -> f64 {
            let mut tape = Tape::new();
            let xv = tape.leaf_vec(&[Jet::variable(x0, 1.0, 1)]);
            let h = tape.linear(p, 0, Some(4), 4, xv);
            let a = tape.act_vec(UnFn::Tanh, h);
            let o = tape.linear(p, 8, Some(12), 1, a);
            tape.value(o.at(0)).coeff(1)
        };
        let params: Vec<f64> = (0..13).map(|i| 0.3 * ((i as f64) * 0.7).sin()).collect();

        let mut tape = Tape::new();
        let xv = tape.leaf_vec(&[Jet::variable(x0, 1.0, 1)]);
        let h = tape.linear(&params, 0, Some(4), 4, xv);
        let a = tape.act_vec(UnFn::Tanh, h);
        let o = tape.linear(&params, 8, Some(12), 1, a);
        let dy = tape.coeff(o.at(0), 1);
        let mut grad = vec![0.0; 13];
        tape.backward(&params, dy, &mut grad).unwrap();

        for i in 0..13 {
            let mut pp = params.clone();
            let h = 1e-6 * (1.0 + params[i].abs());
            pp[i] += h;
            let fp = eval(&pp);
            pp[i] -= 2.0 * h;
            let fm = eval(&pp);
            let fd = (fp - fm) / (2.0 * h);
            assert_relative_eq!(grad[i], fd, max_relative = 1e-5, epsilon = 1e-9);
        }
    }

    #[test]
    fn third_order_jet_gradient_matches_finite_differences() {
        // Parameter-gradient of u_xxx for a tiny tanh net vs FD of the
        // jet coefficient — the reverse-over-forward contract.
        let x0 = 0.3;
        let n_hidden = 4;
        let n_params = n_hidden * 2 + n_hidden + 1; // W1, b1, W2, b2
        let params: Vec<f64> = (0..n_params)
            .map(|i| 0.5 * ((i as f64) * 1.3).cos())
            .collect();
        let eval_uxxx = |p: &[f64]| -> f64 {
            let mut tape = Tape::new();
            let xv = tape.leaf_vec(&[Jet::variable(x0, 1.0, 3)]);
            let h = tape.linear(p, 0, Some(n_hidden), n_hidden, xv);
            let a = tape.act_vec(UnFn::Tanh, h);
            let o = tape.linear(p, 2 * n_hidden, Some(3 * n_hidden), 1, a);
            tape.value(o.at(0)).coeff(3)
        };

        let mut tape = Tape::new();
        let xv = tape.leaf_vec(&[Jet::variable(x0, 1.0, 3)]);
        let h = tape.linear(&params, 0, Some(n_hidden), n_hidden, xv);
        let a = tape.act_vec(UnFn::Tanh, h);
        let o = tape.linear(&params, 2 * n_hidden, Some(3 * n_hidden), 1, a);
        let uxxx = tape.coeff(o.at(0), 3);
        let mut grad = vec![0.0; n_params];
        tape.backward(&params, uxxx, &mut grad).unwrap();

        for i in 0..n_params {
            let mut pp = params.clone();
            let step = 1e-5 * (1.0 + params[i].abs());
            pp[i] += step;
            let fp = eval_uxxx(&pp);
            pp[i] -= 2.0 * step;
            let fm = eval_uxxx(&pp);
            let fd = (fp - fm) / (2.0 * step);
            assert_relative_eq!(grad[i], fd, max_relative = 1e-3, epsilon = 1e-7);
        }
    }

    #[test]
    fn non_finite_gradient_reports_node() {
        let params = [0.0];
        let mut tape = Tape::new();
        let w = tape.param(&params, 0, 0);
        let r = tape.unary(UnFn::Recip, w); // 1/0 = inf
        let mut grad = vec![0.0; 1];
        let err = tape.backward(&params, r, &mut grad).unwrap_err();
        assert!(matches!(err, NdError::NonFiniteGradient { .. }));
    }
}
