//! Central finite differences, used to verify the tape's analytic
//! gradients.

use super::Tensor;

/// Numerical gradient of `f` with respect to every entry of `params`.
pub fn central_difference<F>(mut f: F, params: &[Tensor], h: f64) -> Vec<Tensor>
where
    F: FnMut(&[Tensor]) -> f64,
{
    let mut work = params.to_vec();
    let mut out = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let mut g = Tensor::zeros(params[i].shape());
        for j in 0..params[i].len() {
            let orig = work[i].data()[j];
            work[i].data_mut()[j] = orig + h;
            let up = f(&work);
            work[i].data_mut()[j] = orig - h;
            let down = f(&work);
            work[i].data_mut()[j] = orig;
            g.data_mut()[j] = (up - down) / (2.0 * h);
        }
        out.push(g);
    }
    out
}

/// `max |a − n| / max(|a|, |n|, floor)` over all entries.
pub fn max_relative_error(analytic: &[Tensor], numeric: &[Tensor], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .flat_map(|(a, n)| a.data().iter().zip(n.data()))
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic() {
        let p = [Tensor::vector(vec![2.0, -1.0])];
        let g = central_difference(|p| p[0].data().iter().map(|v| v * v * v).sum(), &p, 1e-5);
        assert!((g[0].data()[0] - 12.0).abs() < 1e-8);
        assert!((g[0].data()[1] - 3.0).abs() < 1e-8);
    }
}
