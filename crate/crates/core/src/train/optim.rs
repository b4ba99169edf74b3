use alloc::format;

use crate::error::{Error, Result};
use crate::model::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates with the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: ParamStore,
    pub v: ParamStore,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ParamStore) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(
    params: &mut ParamStore,
    grads: &ParamStore,
    state: &mut AdamState,
    lr: f64,
    hyper: AdamHyper,
) -> Result<()> {
    if !params.same_layout(grads) || !params.same_layout(&state.m) || !params.same_layout(&state.v) {
        return Err(Error::invalid("adam step", "parameter, gradient and moment layouts differ"));
    }
    if let Some((key, _)) = grads.iter().find(|(_, g)| !g.is_finite()) {
        return Err(Error::invalid("adam step", format!("non-finite gradient for `{key}`")));
    }
    state.t += 1;
    let t = state.t as f64;
    let AdamHyper { beta1, beta2, eps } = hyper;
    let c1 = 1.0 - libm::pow(beta1, t);
    let c2 = 1.0 - libm::pow(beta2, t);
    let moments = state.m.iter_mut().zip(state.v.iter_mut());
    for (((_, p), (_, g)), ((_, m), (_, v))) in params.iter_mut().zip(grads.iter()).zip(moments) {
        for (((p, &g), m), v) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (libm::sqrt(v_hat) + eps);
        }
    }
    Ok(())
}

/// `(λ/2)·Σw²` over weight tensors, and its gradient `λ·w` (zero for biases).
pub fn l2_term(params: &ParamStore, lambda: f64) -> (f64, ParamStore) {
    let mut grad = params.zeros_like();
    let mut penalty = 0.0;
    for ((key, w), (_, g)) in params.iter().zip(grad.iter_mut()) {
        if !ParamStore::is_weight(key) {
            continue;
        }
        penalty += w.sum_squares();
        for (g, &w) in g.data_mut().iter_mut().zip(w.data()) {
            *g = lambda * w;
        }
    }
    (lambda / 2.0 * penalty, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn scalar_store(w: f64, b: f64) -> ParamStore {
        let mut s = ParamStore::new();
        s.insert("fc.weight", Tensor::vector(alloc::vec![w]));
        s.insert("fc.bias", Tensor::vector(alloc::vec![b]));
        s
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = scalar_store(0.7, -0.2);
        let before = p.clone();
        let mut st = AdamState::new(&p);
        let zero = p.zeros_like();
        adam_step(&mut p, &zero, &mut st, 1e-3, AdamHyper::default()).unwrap();
        assert_eq!(p, before);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn first_step_closed_form() {
        let mut p = scalar_store(0.0, 0.0);
        let mut st = AdamState::new(&p);
        let g = scalar_store(0.3, -2.0);
        adam_step(&mut p, &g, &mut st, 0.01, AdamHyper::default()).unwrap();
        let w = p.get("fc.weight").unwrap().data()[0];
        let b = p.get("fc.bias").unwrap().data()[0];
        assert!((w - -0.01 * 0.3 / (0.3 + 1e-8)).abs() < 1e-15);
        assert!((b - 0.01 * 2.0 / (2.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut p = scalar_store(0.0, 0.0);
        let mut st = AdamState::new(&p);
        let g = scalar_store(f64::NAN, 0.0);
        assert!(adam_step(&mut p, &g, &mut st, 0.01, AdamHyper::default()).is_err());
        assert_eq!(st.t, 0);
    }

    #[test]
    fn l2_weights_only() {
        let p = scalar_store(2.0, 5.0);
        let (pen, g) = l2_term(&p, 0.1);
        assert!((pen - 0.2).abs() < 1e-15);
        assert!((g.get("fc.weight").unwrap().data()[0] - 0.2).abs() < 1e-15);
        assert_eq!(g.get("fc.bias").unwrap().data()[0], 0.0);
        let (pen, g) = l2_term(&p, 0.0);
        assert_eq!(pen, 0.0);
        assert_eq!(g.norm(), 0.0);
    }
}
