use std::marker::PhantomData;

use num_traits::Float;

use super::Metric;
use crate::error::Error;
use crate::scalar::Distance;

/// `‖x − y‖₂`, failing when the dimensions differ.
pub fn euclidean<T: Float>(x: &[T], y: &[T]) -> Result<T, Error> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let d = a - b;
            d * d
        })
        .fold(T::zero(), |acc, v| acc + v)
        .sqrt())
}

/// Euclidean distance over dense vectors of `T`.
///
/// All vectors in one collection share a dimension; comparing vectors of
/// different length through the [`Metric`] trait panics.
#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean<T = f64>(PhantomData<T>);

impl<T> Euclidean<T> {
    pub fn new() -> Self {
        Euclidean(PhantomData)
    }
}

impl<T: Float + Distance> Metric<[T]> for Euclidean<T> {
    type Distance = T;

    #[inline]
    fn distance(&self, a: &[T], b: &[T]) -> T {
        euclidean(a, b).expect("euclidean metric applied to vectors of different dimension")
    }
}

impl<T: Float + Distance> Metric<Vec<T>> for Euclidean<T> {
    type Distance = T;

    #[inline]
    fn distance(&self, a: &Vec<T>, b: &Vec<T>) -> T {
        Metric::<[T]>::distance(self, a.as_slice(), b.as_slice())
    }
}
