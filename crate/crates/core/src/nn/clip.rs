use super::ParamBlock;

/// Global L2 norm of all gradients.
pub fn global_grad_norm(blocks: &[&mut ParamBlock]) -> f64 {
    blocks
        .iter()
        .map(|b| b.grads.sum_squares())
        .sum::<f64>()
        .sqrt()
}

/// Rescales gradients so their global L2 norm is at most `max_norm`.
///
/// Returns the factor applied (1 when no scaling happened).
pub fn clip_grad_norm(blocks: &mut [&mut ParamBlock], max_norm: f64) -> f64 {
    assert!(max_norm > 0.0, "max_norm must be positive");
    let norm = global_grad_norm(blocks);
    if norm <= max_norm || !norm.is_finite() {
        return 1.0;
    }
    let factor = max_norm / norm;
    for b in blocks.iter_mut() {
        b.grads.values_mut().iter_mut().for_each(|g| *g *= factor);
    }
    factor
}
