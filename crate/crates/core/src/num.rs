//! Scalar abstraction for probabilities and summary statistics.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::Serialize;

/// Floating-point type used for probabilities, rates and timing summaries.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Default + Debug + Display + Serialize + Send + Sync + 'static
{
    fn of_f64(v: f64) -> Self {
        Self::from_f64(v).expect("finite conversion")
    }

    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("finite conversion")
    }

    fn of_u128(v: u128) -> Self {
        Self::from_u128(v).unwrap_or_else(Self::infinity)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Mean and population standard deviation.
pub fn mean_std<R: Real>(values: &[R]) -> (R, R) {
    if values.is_empty() {
        return (R::zero(), R::zero());
    }
    let n = R::of_usize(values.len());
    let mean = values.iter().fold(R::zero(), |a, &v| a + v) / n;
    let var = values
        .iter()
        .fold(R::zero(), |a, &v| a + (v - mean) * (v - mean))
        / n;
    (mean, var.sqrt())
}

/// Mean and sample (n - 1) standard deviation.
pub fn mean_sample_std<R: Real>(values: &[R]) -> (R, R) {
    let (mean, pop) = mean_std(values);
    if values.len() < 2 {
        return (mean, R::zero());
    }
    let n = R::of_usize(values.len());
    (mean, pop * (n / (n - R::one())).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summaries() {
        let (m, s) = mean_std(&[2.0f64, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!((m, s), (5.0, 2.0));
        let (m, s) = mean_sample_std(&[1.0f32, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2.0f32.sqrt()).abs() < 1e-6);
        assert_eq!(mean_std::<f64>(&[]), (0.0, 0.0));
    }

    #[test]
    fn huge_counts_saturate() {
        assert_eq!(<f32 as Real>::of_u128(u128::MAX), f32::INFINITY);
        assert!(<f64 as Real>::of_u128(u128::MAX).is_finite());
    }
}
