/// Gaussian smoothing of a 1-D signal. The kernel is truncated at
/// `±ceil(3σ)` and renormalized wherever it overhangs the ends, so every
/// output is a convex combination of inputs.
pub fn gaussian_smooth_1d(signal: &[f64], sigma: f64) -> Vec<f64> {
    assert!(sigma > 0.0, "sigma must be positive");
    if signal.is_empty() {
        return Vec::new();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let n = signal.len() as isize;
    (0..n)
        .map(|i| {
            let (mut acc, mut norm) = (0.0, 0.0);
            for (k, &wk) in (-radius..=radius).zip(&kernel) {
                let j = i + k;
                if (0..n).contains(&j) {
                    acc += wk * signal[j as usize];
                    norm += wk;
                }
            }
            acc / norm
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_preserved() {
        let out = gaussian_smooth_1d(&[2.5; 17], 3.0);
        assert!(out.iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn impulse_mass() {
        let mut s = vec![0.0; 41];
        s[20] = 1.0;
        let out = gaussian_smooth_1d(&s, 3.0);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(out.len(), 41);
    }

    #[test]
    fn empty_in_empty_out() {
        assert!(gaussian_smooth_1d(&[], 1.0).is_empty());
    }
}
