use rand::distributions::uniform::SampleUniform;
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point scalar: `f32` or `f64`.
pub trait Float:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + num_traits::NumAssign
    + SampleUniform
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Draw one sample from the standard normal distribution.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Shorthand for `from_f64(..).unwrap()`; panics only for non-finite
    /// inputs, which never appear in the fixed constants this is used for.
    fn cast(value: f64) -> Self {
        Self::from_f64(value).expect("finite constant")
    }
}

impl Float for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Float for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}
