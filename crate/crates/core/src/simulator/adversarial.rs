use crate::error::Result;
use crate::gradcode::{gc_max_error, GCScheme};
use crate::simulator::round::check_budget;

/// Exhaustive worst straggler set of size `s` and its decoding error.
pub fn adversarial_straggler_search(scheme: &GCScheme, s: usize) -> Result<(Vec<usize>, f64)> {
    check_budget(scheme.servers(), s)?;
    let worst = gc_max_error(scheme, s)?;
    Ok((worst.stragglers, worst.error))
}
