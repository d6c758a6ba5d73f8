//! Central-difference verification of tape gradients.

use crate::error::{Error, Result};
use crate::tape::{Tape, Var};
use crate::tensor::ParamStore;

/// Gradients below this size are judged on an absolute scale: at step 1e-5
/// the central difference itself carries round-off near 1e-11.
pub const DENOMINATOR_FLOOR: f64 = 1e-6;

/// Compares the tape gradient of `loss` against `(f(p+ε) − f(p−ε)) / 2ε` for
/// every trainable parameter entry and returns the worst relative error, with
/// denominator `max(|analytic|, |numeric|, DENOMINATOR_FLOOR)`.
///
/// `params` is restored to its original values on return. Existing gradient
/// buffers are ignored.
pub fn finite_difference_check<F>(params: &mut ParamStore, step: f64, loss: F) -> Result<f64>
where
    F: Fn(&mut Tape<'_>) -> Result<Var>,
{
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::precondition("finite-difference step must be positive"));
    }
    let eval = |params: &ParamStore| -> Result<f64> {
        let mut tape = Tape::new(params);
        let l = loss(&mut tape)?;
        tape.scalar(l)
    };

    let first = eval(params)?;
    let second = eval(params)?;
    if first.to_bits() != second.to_bits() {
        return Err(Error::NonDeterministic { first, second });
    }

    let grads = {
        let mut tape = Tape::new(params);
        let l = loss(&mut tape)?;
        tape.backward(l)?
    };

    let ids: alloc::vec::Vec<_> = params.iter().filter(|(_, p)| p.trainable).map(|(id, _)| id).collect();
    let mut worst = 0.0f64;
    for id in ids {
        let n = params.get(id).numel();
        let analytic = grads.dense(id, n);
        for (i, &analytic_i) in analytic.iter().enumerate() {
            let orig = params.get(id).data()[i];
            params.get_mut(id).data_mut()[i] = orig + step;
            let plus = eval(params);
            params.get_mut(id).data_mut()[i] = orig - step;
            let minus = eval(params);
            params.get_mut(id).data_mut()[i] = orig;
            let numeric = (plus? - minus?) / (2.0 * step);
            let denom = analytic_i.abs().max(numeric.abs()).max(DENOMINATOR_FLOOR);
            worst = worst.max((analytic_i - numeric).abs() / denom);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;
    use alloc::vec;

    #[test]
    fn linear_function_is_exact() {
        let mut store = ParamStore::new();
        let a = store.add("a", Tensor::matrix(2, 3, vec![0.1, -0.2, 0.3, 0.4, -0.5, 0.6]).unwrap());
        let err = finite_difference_check(&mut store, 1e-5, |t| {
            let w = t.param(a);
            let x = t.input(vec![1.0, 2.0, -1.5])?;
            let y = t.matvec(w, x)?;
            t.sum_all(y)
        })
        .unwrap();
        assert!(err <= 1e-10, "{err}");
    }

    #[test]
    fn zero_step_is_a_precondition_violation() {
        let mut store = ParamStore::new();
        let a = store.add("a", Tensor::vector(vec![1.0]).unwrap());
        let r = finite_difference_check(&mut store, 0.0, |t| {
            let w = t.param(a);
            t.sum_all(w)
        });
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn detects_non_determinism() {
        use core::cell::Cell;
        let mut store = ParamStore::new();
        let a = store.add("a", Tensor::vector(vec![1.0]).unwrap());
        let counter = Cell::new(0.0);
        let r = finite_difference_check(&mut store, 1e-5, |t| {
            counter.set(counter.get() + 1.0);
            let w = t.param(a);
            let x = t.input(vec![counter.get()])?;
            let y = t.mul(w, x)?;
            t.sum_all(y)
        });
        assert!(matches!(r, Err(Error::NonDeterministic { .. })));
    }

    #[test]
    fn skips_frozen_parameters() {
        let mut store = ParamStore::new();
        let a = store.add("a", Tensor::vector(vec![0.7]).unwrap());
        let err = finite_difference_check(&mut store, 1e-5, |t| {
            let w = t.param(a);
            let s = t.tanh(w)?;
            t.sum_all(s)
        })
        .unwrap();
        assert!(err < 1e-8);
        store.set_trainable(a, false);
        let err = finite_difference_check(&mut store, 1e-5, |t| {
            let w = t.param(a);
            t.sum_all(w)
        })
        .unwrap();
        assert_eq!(err, 0.0);
    }
}
