//! Distance scalar abstraction.
//!
//! Every index is generic over the value a metric returns. Floating-point
//! metrics use `f32`/`f64`; edit distances use unsigned integers; the
//! LZ-Jaccard distance uses an exact [`Ratio`] so that the metric axioms hold
//! without rounding slack.
//!
//! Pruning tests throughout the crate are written in additive form
//! (`a + b > c` rather than `a > c - b`) so that unsigned types never
//! underflow.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Value type produced by a [`Metric`](crate::metrics::Metric).
pub trait Distance:
    Copy + PartialOrd + Num + ToPrimitive + FromPrimitive + Debug + Display + Send + Sync + 'static
{
    /// The covering radius `2^exp` used by the cover tree.
    ///
    /// Floating-point and rational types return the exact power. Integer
    /// types return `floor(2^exp)`, which is zero for negative exponents;
    /// since integer distances below one are zero, covering semantics are
    /// unchanged.
    fn pow2(exp: i32) -> Self;

    /// Lossy conversion used for variance computations and reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable in distance type")
    }
}

/// Total order over distances; incomparable values (NaN) are treated as equal.
#[inline]
pub fn cmp_dist<D: PartialOrd>(a: &D, b: &D) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

#[inline]
pub fn max_dist<D: PartialOrd>(a: D, b: D) -> D {
    if b > a {
        b
    } else {
        a
    }
}

#[inline]
pub fn min_dist<D: PartialOrd>(a: D, b: D) -> D {
    if b < a {
        b
    } else {
        a
    }
}

/// Smallest `level` with `2^level >= d`, assuming `d > 0`.
pub fn ceil_log2<D: Distance>(d: D) -> i32 {
    let approx = d.to_f64_lossy();
    let mut level = if approx > 0.0 && approx.is_finite() {
        approx.log2().ceil() as i32
    } else {
        0
    };
    // The float estimate can be off by one for exact types; settle exactly.
    while D::pow2(level) < d {
        level += 1;
    }
    while level > i32::MIN + 1 && D::pow2(level - 1) >= d && D::pow2(level - 1) > D::zero() {
        level -= 1;
    }
    level
}

macro_rules! float_distance {
    ($($t:ty),*) => {$(
        impl Distance for $t {
            #[inline]
            fn pow2(exp: i32) -> Self {
                (2.0 as $t).powi(exp)
            }
        }
    )*};
}

float_distance!(f32, f64);

macro_rules! int_distance {
    ($($t:ty),*) => {$(
        impl Distance for $t {
            fn pow2(exp: i32) -> Self {
                if exp < 0 {
                    0
                } else {
                    (1 as $t)
                        .checked_shl(exp as u32)
                        .filter(|v| *v != 0 && exp < <$t>::BITS as i32 - 1)
                        .expect("cover-tree level exceeds the range of the distance type")
                }
            }
        }
    )*};
}

int_distance!(u32, u64, i64, usize);

macro_rules! ratio_distance {
    ($($t:ty),*) => {$(
        impl Distance for Ratio<$t> {
            fn pow2(exp: i32) -> Self {
                let bits = <$t>::BITS as i32 - 2;
                assert!(
                    exp.abs() <= bits,
                    "cover-tree level {exp} exceeds the range of the rational distance type"
                );
                let p = (1 as $t) << exp.unsigned_abs();
                if exp >= 0 {
                    Ratio::from_integer(p)
                } else {
                    Ratio::new_raw(1, p)
                }
            }
        }
    )*};
}

ratio_distance!(u64, i64);
