use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::tape::{softplus_scalar, Tape, Var};
use super::Matrix;
use crate::error::{NavError, Result};
use crate::scalar::Scalar;

const LN_2: f64 = std::f64::consts::LN_2;
/// log(2π)/2
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// The odd saturating map from ℝ into (−1, 1).
pub fn squash<T: Scalar>(x: T) -> T {
    x.tanh()
}

/// log(1 − tanh²(u)) without cancellation.
pub fn log_squash_jacobian<T: Scalar>(u: T) -> T {
    T::lit(2.0) * (T::lit(LN_2) - u - softplus_scalar(T::lit(-2.0) * u))
}

/// Action used in deterministic mode.
pub fn deterministic_action<T: Scalar>(mu: &[T]) -> Vec<T> {
    mu.iter().map(|m| squash(*m)).collect()
}

fn check_sigma<T: Scalar>(mu: &[T], sigma: &[T]) -> Result<()> {
    if mu.len() != sigma.len() {
        return Err(NavError::Shape(format!("{} means, {} deviations", mu.len(), sigma.len())));
    }
    if let Some(s) = sigma.iter().find(|s| !(**s > T::zero()) || !s.is_finite()) {
        return Err(NavError::Domain(format!("standard deviation must be positive and finite, got {s}")));
    }
    Ok(())
}

/// Log-density of the pre-squash value `u`, including the squash correction.
pub fn squashed_log_prob_pre<T: Scalar>(mu: &[T], sigma: &[T], u: &[T]) -> T {
    mu.iter().zip(sigma).zip(u).fold(T::zero(), |acc, ((m, s), u)| {
        let z = (*u - *m) / *s;
        acc - T::lit(0.5) * z * z - s.ln() - T::lit(HALF_LN_2PI) - log_squash_jacobian(*u)
    })
}

/// Log-density of a squashed action `a ∈ (−1, 1)^k`.
pub fn squashed_log_prob<T: Scalar>(mu: &[T], sigma: &[T], action: &[T]) -> Result<T> {
    check_sigma(mu, sigma)?;
    if action.len() != mu.len() {
        return Err(NavError::Shape("action width".into()));
    }
    if action.iter().any(|a| !(a.abs() < T::one())) {
        return Err(NavError::Domain("squashed action must lie strictly inside (-1, 1)".into()));
    }
    let u: Vec<T> = action.iter().map(|a| a.atanh()).collect();
    Ok(squashed_log_prob_pre(mu, sigma, &u))
}

/// Draws a squashed Gaussian action with a caller-owned generator.
pub fn sample_squashed<T: Scalar, R: Rng + ?Sized>(mu: &[T], sigma: &[T], rng: &mut R) -> Result<(Vec<T>, T)> {
    check_sigma(mu, sigma)?;
    let u: Vec<T> = mu
        .iter()
        .zip(sigma)
        .map(|(m, s)| {
            let e: f64 = rng.sample(StandardNormal);
            *m + *s * T::lit(e)
        })
        .collect();
    let logp = squashed_log_prob_pre(mu, sigma, &u);
    Ok((u.into_iter().map(squash).collect(), logp))
}

/// Draws a squashed Gaussian action; identical seeds give identical draws.
pub fn gaussian_head_sample<T: Scalar>(mu: &[T], sigma: &[T], seed: u64) -> Result<(Vec<T>, T)> {
    sample_squashed(mu, sigma, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Reparameterized squashed sample on a tape.
///
/// `eps` holds standard-normal noise with the shape of `mu`. Returns the
/// action and its log-probability as an r×1 column.
pub fn sample_tape<T: Scalar>(tape: &mut Tape<'_, T>, mu: Var, log_std: Var, eps: Matrix<T>) -> Result<(Var, Var)> {
    if tape.shape(mu) != eps.shape() || tape.shape(log_std) != eps.shape() {
        return Err(NavError::Shape("noise shape differs from the head".into()));
    }
    let e = tape.input(eps.clone());
    let std = tape.exp(log_std);
    let noise = tape.mul(std, e)?;
    let u = tape.add(mu, noise)?;
    let action = tape.tanh(u);
    // −½ε² − log σ − ½log 2π − log(1 − tanh² u)
    let k = eps.cols() as f64;
    let e2 = eps.map(|v| v * v);
    let e2_sum: Vec<T> = (0..e2.rows()).map(|r| e2.row(r).iter().fold(T::zero(), |a, b| a + *b)).collect();
    let base = tape.input(Matrix::from_vec(e2.rows(), 1, e2_sum)?.map(|v| T::lit(-0.5) * v - T::lit(k * HALF_LN_2PI)));
    let sum_log_std = tape.sum_cols(log_std);
    let m2u = tape.scale(u, T::lit(-2.0));
    let sp = tape.softplus(m2u);
    let t = tape.add(u, sp)?;
    let corr_inner = tape.scale(t, T::lit(-2.0));
    let corr = tape.add_scalar(corr_inner, T::lit(2.0 * LN_2));
    let corr_sum = tape.sum_cols(corr);
    let a = tape.sub(base, sum_log_std)?;
    let logp = tape.sub(a, corr_sum)?;
    Ok((action, logp))
}
