/// Accuracy of a softmax-regression probe trained on `train` and scored on `test`.
///
/// Features are standardised with the training-set mean and deviation, so
/// the result does not depend on the overall scale of the representation.
pub fn probe_accuracy(
    train_x: &[Vec<f32>],
    train_y: &[usize],
    test_x: &[Vec<f32>],
    test_y: &[usize],
    n_classes: usize,
    epochs: usize,
) -> f64 {
    if train_x.is_empty() || test_x.is_empty() {
        return 0.0;
    }
    let d = train_x[0].len();
    let n = train_x.len() as f64;
    let mut mean = vec![0.0f64; d];
    for x in train_x {
        for (m, &v) in mean.iter_mut().zip(x) {
            *m += v as f64 / n;
        }
    }
    let mut std = vec![0.0f64; d];
    for x in train_x {
        for ((s, &v), m) in std.iter_mut().zip(x).zip(&mean) {
            *s += (v as f64 - m).powi(2) / n;
        }
    }
    let std: Vec<f64> = std.into_iter().map(|v| v.sqrt().max(1e-8)).collect();
    let norm = |x: &[f32]| -> Vec<f64> { x.iter().zip(&mean).zip(&std).map(|((&v, m), s)| (v as f64 - m) / s).collect() };
    let tx: Vec<Vec<f64>> = train_x.iter().map(|x| norm(x)).collect();

    let mut w = vec![0.0f64; n_classes * d];
    let mut b = vec![0.0f64; n_classes];
    let lr = 0.5;
    let l2 = 1e-3;
    let logits = |w: &[f64], b: &[f64], x: &[f64]| -> Vec<f64> {
        (0..n_classes)
            .map(|c| b[c] + w[c * d..(c + 1) * d].iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
            .collect()
    };
    for _ in 0..epochs {
        let mut gw = vec![0.0f64; n_classes * d];
        let mut gb = vec![0.0f64; n_classes];
        for (x, &y) in tx.iter().zip(train_y) {
            let z = logits(&w, &b, x);
            let mx = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = z.iter().map(|v| (v - mx).exp()).collect();
            let s: f64 = e.iter().sum();
            for c in 0..n_classes {
                let g = e[c] / s - if c == y { 1.0 } else { 0.0 };
                gb[c] += g / n;
                for (k, v) in x.iter().enumerate() {
                    gw[c * d + k] += g * v / n;
                }
            }
        }
        for (wi, gi) in w.iter_mut().zip(&gw) {
            *wi -= lr * (gi + l2 * *wi);
        }
        for (bi, gi) in b.iter_mut().zip(&gb) {
            *bi -= lr * gi;
        }
    }
    let correct = test_x
        .iter()
        .zip(test_y)
        .filter(|(x, &y)| {
            let z = logits(&w, &b, &norm(x));
            let pred = (0..n_classes).max_by(|&a, &c| z[a].total_cmp(&z[c])).unwrap_or(0);
            pred == y
        })
        .count();
    correct as f64 / test_x.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_classes_are_learned() {
        let x: Vec<Vec<f32>> = (0..40).map(|i| vec![(i % 2) as f32 * 3.0 + (i as f32 * 0.01), 1.0]).collect();
        let y: Vec<usize> = (0..40).map(|i| i % 2).collect();
        assert_eq!(probe_accuracy(&x, &y, &x, &y, 2, 200), 1.0);
    }

    #[test]
    fn uninformative_features_score_near_chance() {
        let x: Vec<Vec<f32>> = (0..40).map(|i| vec![((i * 7919) % 13) as f32]).collect();
        let y: Vec<usize> = (0..40).map(|i| (i / 2) % 2).collect();
        let acc = probe_accuracy(&x[..20], &y[..20], &x[20..], &y[20..], 2, 200);
        assert!(acc <= 0.8, "{acc}");
    }
}
