use rand::Rng;

use crate::error::{Error, Result};
use crate::gradcode::scheme::{DecoderKind, GCScheme};
use crate::linalg::Matrix;
use crate::rng::substream;

/// Random 0/1 encoding with i.i.d. `Bernoulli(s / k)` entries, decoded by
/// least squares unless another decoder is selected.
pub fn bernoulli_scheme(n: usize, k: usize, s: usize, seed: u64) -> Result<GCScheme> {
    if n == 0 || k == 0 || s == 0 || s > k || s >= n {
        return Err(Error::InvalidParameter(format!(
            "need 0 < s <= k and s < n, got n = {n}, k = {k}, s = {s}"
        )));
    }
    let p = s as f64 / k as f64;
    let mut rng = substream(seed, "bernoulli-gc", 0);
    let g = Matrix::from_fn_real(n, k, |_, _| if rng.random_bool(p) { 1.0 } else { 0.0 });
    Ok(GCScheme::from_parts("bernoulli", s, g, DecoderKind::OptimalLsq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcode::scheme::{decoding_error, gc_max_error, one_step_decoder, optimal_decoder};
    use itertools::Itertools;

    #[test]
    fn reproducible_max_error() {
        let a = gc_max_error(&bernoulli_scheme(10, 10, 3, 42).unwrap(), 3).unwrap();
        let b = gc_max_error(&bernoulli_scheme(10, 10, 3, 42).unwrap(), 3).unwrap();
        assert_eq!(a.sets_evaluated, 120);
        assert_eq!(a.error.to_bits(), b.error.to_bits());
        assert_eq!(a.stragglers, b.stragglers);
    }

    #[test]
    fn optimal_dominates_one_step() {
        let scheme = bernoulli_scheme(10, 10, 3, 7).unwrap();
        for responders in (0..10).combinations(7) {
            let best = decoding_error(&scheme, &optimal_decoder(scheme.encoding(), &responders).unwrap());
            for rho in [0.1, 0.25, 0.5, 1.0] {
                let fixed = decoding_error(&scheme, &one_step_decoder(10, &responders, rho));
                assert!(best <= fixed + 1e-12);
            }
        }
    }

    #[test]
    fn validation() {
        assert!(bernoulli_scheme(10, 5, 6, 1).is_err());
        assert!(bernoulli_scheme(10, 5, 0, 1).is_err());
    }
}
