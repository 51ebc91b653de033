/// Adversarial weight ramp `2 / (1 + e^(-γ·p)) − 1` for training progress `p ∈ [0, 1]`.
pub fn lambda_schedule(progress: f64, gamma: f64) -> f64 {
    2.0 / (1.0 + (-gamma * progress).exp()) - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        assert_eq!(lambda_schedule(0.0, 10.0), 0.0);
        assert!((lambda_schedule(0.5, 10.0) - 0.98661).abs() < 1e-5);
        assert!((lambda_schedule(1.0, 10.0) - 0.99991).abs() < 1e-5);
    }

    #[test]
    fn monotone() {
        let v: Vec<f64> = (0..100).map(|i| lambda_schedule(i as f64 / 99.0, 10.0)).collect();
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        assert!(v.iter().all(|&x| (0.0..1.0).contains(&x)));
    }
}
