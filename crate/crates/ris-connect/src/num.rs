//! Scalar abstraction for the numeric kernels.
//!
//! Everything mathematical in this crate (geometry, path loss, SNR algebra,
//! Laplacian spectra, the closed-form split) is written against [`Scalar`] so
//! it runs identically on `f32` and `f64`. The random hooks exist so sampling
//! code does not have to thread `rand_distr` bounds through every signature.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal, StandardUniform};

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Display
    + LowerExp
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, for literals inside generic code.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in Scalar")
    }

    /// Standard normal draw.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform draw on `[0, 1)`.
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Gamma draw with the given shape and scale.
    fn gamma_draw<R: Rng + ?Sized>(rng: &mut R, shape: Self, scale: Self) -> Self;
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardUniform.sample(rng)
            }

            fn gamma_draw<R: Rng + ?Sized>(rng: &mut R, shape: Self, scale: Self) -> Self {
                Gamma::new(shape, scale)
                    .expect("gamma parameters validated upstream")
                    .sample(rng)
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hooks_work_for_both_widths() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a: f64 = Scalar::gamma_draw(&mut rng, 2.0, 0.5);
        let b: f32 = Scalar::gamma_draw(&mut rng, 2.0, 0.5);
        assert!(a.is_finite() && a > 0.0);
        assert!(b.is_finite() && b > 0.0);
        let u: f64 = Scalar::unit_uniform(&mut rng);
        assert!((0.0..1.0).contains(&u));
    }

    #[test]
    fn of_round_trips_literals() {
        assert_eq!(f64::of(32.4), 32.4);
        assert_eq!(f32::of(0.5), 0.5f32);
    }
}
