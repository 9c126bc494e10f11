use crate::error::{Error, Result};
use crate::gradcode::scheme::{DecoderKind, GCScheme};
use crate::linalg::Matrix;

/// Fractional repetition code: `n / (s + 1)` partitions, each replicated on
/// a consecutive group of `s + 1` servers.
pub fn frc_scheme(n: usize, s: usize) -> Result<GCScheme> {
    if n == 0 || !n.is_multiple_of(s + 1) {
        return Err(Error::InvalidParameter(format!(
            "s + 1 = {} must divide n = {n}",
            s + 1
        )));
    }
    let k = n / (s + 1);
    let g = Matrix::from_fn_real(n, k, |i, j| if i / (s + 1) == j { 1.0 } else { 0.0 });
    Ok(GCScheme::from_parts("frc", s, g, DecoderKind::ExactFrc))
}
