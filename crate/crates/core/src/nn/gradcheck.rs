//! Central finite differences, used as an oracle for the analytic gradients.

/// `(L(θ + h e_k) − L(θ − h e_k)) / 2h` for each requested coordinate `k`.
pub fn finite_difference<M>(
    model: &mut M,
    indices: &[usize],
    h: f64,
    mut param: impl FnMut(&mut M, usize) -> &mut f64,
    mut loss: impl FnMut(&M) -> f64,
) -> Vec<f64> {
    indices
        .iter()
        .map(|&k| {
            let original = *param(model, k);
            *param(model, k) = original + h;
            let plus = loss(model);
            *param(model, k) = original - h;
            let minus = loss(model);
            *param(model, k) = original;
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖ / (‖a‖ + ‖b‖)`, or 0 when both vectors vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    let scale = norm(&mut a.iter().copied()) + norm(&mut b.iter().copied());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Outcome of comparing one network's analytic gradient against finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub network: String,
    pub checked: usize,
    pub relative_error: f64,
}

impl GradCheck {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.relative_error < tolerance
    }
}

/// Picks up to `count` distinct coordinates out of `len`, always including the
/// last one (an output bias), in ascending order.
pub fn sample_indices<R: rand::Rng + ?Sized>(len: usize, count: usize, rng: &mut R) -> Vec<usize> {
    if count >= len {
        return (0..len).collect();
    }
    let mut picked = rand::seq::index::sample(rng, len - 1, count.saturating_sub(1)).into_vec();
    picked.push(len - 1);
    picked.sort_unstable();
    picked
}
