//! Inverted dropout: survivors are scaled by 1/(1-p) at train time so
//! inference needs no rescaling.

use rand::Rng;

use super::Mode;

/// Per-component multipliers (0 or 1/(1-p)) kept for the backward pass.
pub type DropoutMask = Vec<f64>;

pub fn dropout_forward<R: Rng>(x: &[f64], p: f64, mode: Mode, rng: &mut R) -> (Vec<f64>, DropoutMask) {
    assert!((0.0..1.0).contains(&p), "dropout rate out of range: {p}");
    match mode {
        Mode::Eval => (x.to_vec(), vec![1.0; x.len()]),
        Mode::Train => {
            if p == 0.0 {
                return (x.to_vec(), vec![1.0; x.len()]);
            }
            let keep = 1.0 - p;
            let mask: Vec<f64> = x
                .iter()
                .map(|_| if rng.gen::<f64>() < p { 0.0 } else { 1.0 / keep })
                .collect();
            let y = x.iter().zip(&mask).map(|(v, m)| v * m).collect();
            (y, mask)
        }
    }
}

pub fn dropout_backward(d_out: &[f64], mask: &[f64]) -> Vec<f64> {
    assert_eq!(d_out.len(), mask.len());
    d_out.iter().zip(mask).map(|(d, m)| d * m).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_rate_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = vec![1.0, -2.0, 3.0];
        let (y, _) = dropout_forward(&x, 0.0, Mode::Train, &mut rng);
        assert_eq!(y, x);
        let (y, _) = dropout_forward(&x, 0.0, Mode::Eval, &mut rng);
        assert_eq!(y, x);
    }

    #[test]
    fn eval_mode_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = vec![1.0; 100];
        let (y, _) = dropout_forward(&x, 0.7, Mode::Eval, &mut rng);
        assert_eq!(y, x);
    }

    #[test]
    fn survivor_fraction_near_keep_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = vec![1.0; 100_000];
        let (y, _) = dropout_forward(&x, 0.2, Mode::Train, &mut rng);
        let survivors = y.iter().filter(|&&v| v != 0.0).count() as f64 / 1e5;
        assert!((survivors - 0.8).abs() < 0.01, "survivor fraction {survivors}");
        // expectation matches eval output
        let mean = y.iter().sum::<f64>() / 1e5;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    #[should_panic]
    fn rejects_rate_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        dropout_forward(&[1.0], 1.0, Mode::Train, &mut rng);
    }
}
