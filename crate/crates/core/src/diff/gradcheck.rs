use super::{Gradients, ParamStore};
use crate::error::Result;

/// Floor on the denominator of the relative error so that vanishing
/// gradients are compared absolutely.
pub const GRADCHECK_FLOOR: f64 = 1e-5;

/// Largest relative error between `analytic` and central finite differences
/// of `loss` over every parameter entry.
pub fn max_gradient_error(
    store: &ParamStore<f64>,
    analytic: &Gradients<f64>,
    h: f64,
    mut loss: impl FnMut(&ParamStore<f64>) -> Result<f64>,
) -> Result<f64> {
    let mut probe = store.clone();
    let mut worst = 0.0f64;
    for id in store.ids() {
        for j in 0..store.get(id).len() {
            let orig = store.get(id).data()[j];
            probe.get_mut(id).data_mut()[j] = orig + h;
            let up = loss(&probe)?;
            probe.get_mut(id).data_mut()[j] = orig - h;
            let down = loss(&probe)?;
            probe.get_mut(id).data_mut()[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.get(id).data()[j];
            let denom = a.abs().max(numeric.abs()).max(GRADCHECK_FLOOR);
            worst = worst.max((a - numeric).abs() / denom);
        }
    }
    Ok(worst)
}
