use crate::error::{Error, Result};

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::Dimension {
            expected: b.len().max(1),
            got: a.len(),
        });
    }
    Ok(())
}

/// `Δ = (1/n) Σ |α − α_i|` between true and predicted exponents.
pub fn mean_abs_error(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(predicted, truth)?;
    Ok(predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| (t - p).abs())
        .sum::<f64>()
        / predicted.len() as f64)
}

/// `δ = (1/n) Σ |(A − A_i)/A|`, relative to the true amplitude `A`.
pub fn mean_rel_error(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(predicted, truth)?;
    if let Some(&bad) = truth.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::NonPositiveAmplitude(bad));
    }
    Ok(predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| ((t - p) / t).abs())
        .sum::<f64>()
        / predicted.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn abs_error_examples() {
        assert_eq!(mean_abs_error(&[0.5, 2.5], &[0.5, 2.5]).unwrap(), 0.0);
        assert!((mean_abs_error(&[1.1, 1.9], &[1.0, 2.0]).unwrap() - 0.1).abs() < 1e-15);
        assert!(mean_abs_error(&[], &[]).is_err());
        assert!(mean_abs_error(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rel_error_examples() {
        assert_eq!(mean_rel_error(&[1e-5, 3e-3], &[1e-5, 3e-3]).unwrap(), 0.0);
        assert!((mean_rel_error(&[1.05e-5], &[1e-5]).unwrap() - 0.05).abs() < 1e-12);
        assert!(matches!(
            mean_rel_error(&[1.0], &[0.0]),
            Err(Error::NonPositiveAmplitude(_))
        ));
    }

    /// Compensated (Neumaier) summation as an extended-precision reference.
    fn neumaier(values: impl Iterator<Item = f64>) -> f64 {
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for v in values {
            let t = sum + v;
            if sum.abs() >= v.abs() {
                comp += (sum - t) + v;
            } else {
                comp += (v - t) + sum;
            }
            sum = t;
        }
        sum + comp
    }

    proptest! {
        #[test]
        fn abs_error_matches_compensated_sum(pairs in prop::collection::vec((0.0f64..3.0, 0.0f64..3.0), 1..300)) {
            let (p, t): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let reference = neumaier(p.iter().zip(&t).map(|(a, b)| (a - b).abs())) / p.len() as f64;
            prop_assert!((mean_abs_error(&p, &t).unwrap() - reference).abs() < 1e-12);
        }

        #[test]
        fn rel_error_matches_compensated_sum(pairs in prop::collection::vec((-8.0f64..-2.0, -8.0f64..-2.0), 1..300)) {
            let p: Vec<f64> = pairs.iter().map(|x| 10f64.powf(x.0)).collect();
            let t: Vec<f64> = pairs.iter().map(|x| 10f64.powf(x.1)).collect();
            let reference = neumaier(p.iter().zip(&t).map(|(a, b)| ((b - a) / b).abs())) / p.len() as f64;
            let got = mean_rel_error(&p, &t).unwrap();
            prop_assert!((got - reference).abs() <= 1e-12 * reference.max(1.0));
        }
    }
}
