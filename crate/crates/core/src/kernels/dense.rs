use alloc::format;
use alloc::vec;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

fn check(input: &Tensor, weights: &Tensor) -> Result<(usize, usize)> {
    let (m, n) = match *weights.shape() {
        [m, n] => (m, n),
        _ => {
            return Err(Error::shape(
                "dense weights",
                format!("expected m×n matrix, got {:?}", weights.shape()),
            ))
        }
    };
    if input.shape() != [n] {
        return Err(Error::shape(
            "dense input",
            format!("expected [{n}], got {:?}", input.shape()),
        ));
    }
    Ok((m, n))
}

/// `W·x + b` for a flat input.
pub fn dense(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (m, n) = check(input, weights)?;
    if bias.shape() != [m] {
        return Err(Error::shape(
            "dense bias",
            format!("expected [{m}], got {:?}", bias.shape()),
        ));
    }
    input.ensure_finite("dense input")?;
    let x = input.data();
    let out = weights
        .data()
        .chunks_exact(n)
        .zip(bias.data())
        .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
        .collect();
    Ok(Tensor::vector(out))
}

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

/// `Wᵀg` for the input, `g·xᵀ` for the weights, `g` for the bias.
pub fn dense_backward(input: &Tensor, weights: &Tensor, grad_out: &Tensor) -> Result<DenseGrads> {
    let (m, n) = check(input, weights)?;
    if grad_out.shape() != [m] {
        return Err(Error::shape(
            "dense backward",
            format!("upstream gradient {:?}, expected [{m}]", grad_out.shape()),
        ));
    }
    let x = input.data();
    let mut grad_in = vec![0.0; n];
    let mut grad_w = vec![0.0; m * n];
    for ((row, grow), &g) in weights
        .data()
        .chunks_exact(n)
        .zip(grad_w.chunks_exact_mut(n))
        .zip(grad_out.data())
    {
        for ((gi, gw), (w, xv)) in grad_in.iter_mut().zip(grow.iter_mut()).zip(row.iter().zip(x)) {
            *gi += w * g;
            *gw = g * xv;
        }
    }
    Ok(DenseGrads {
        input: Tensor::vector(grad_in),
        weights: Tensor::new(vec![m, n], grad_w)?,
        bias: grad_out.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_weights() {
        let x = Tensor::vector(vec![1.0, -2.0, 3.5]);
        let w = Tensor::from_fn(&[3, 3], |i| if i % 4 == 0 { 1.0 } else { 0.0 });
        assert_eq!(dense(&x, &w, &Tensor::zeros(&[3])).unwrap(), x);
    }

    #[test]
    fn zero_weights_give_bias() {
        let x = Tensor::vector(vec![1.0, 2.0]);
        let b = Tensor::vector(vec![0.25, -4.0, 9.0]);
        assert_eq!(dense(&x, &Tensor::zeros(&[3, 2]), &b).unwrap(), b);
    }

    #[test]
    fn mismatched_shapes_rejected() {
        let x = Tensor::vector(vec![1.0, 2.0]);
        assert!(dense(&x, &Tensor::zeros(&[3, 3]), &Tensor::zeros(&[3])).is_err());
        assert!(dense(&x, &Tensor::zeros(&[3, 2]), &Tensor::zeros(&[2])).is_err());
    }
}
