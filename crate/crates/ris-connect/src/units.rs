//! dB/dBm conversions.
//!
//! Quantities configured in dB or dBm are stored as entered and cross this
//! boundary exactly once; all SNR algebra downstream is linear (watts for
//! powers) unless a function name says `_db`.

use crate::num::Scalar;

/// dB ratio to linear ratio: `10^(x/10)`.
pub fn db_to_linear<T: Scalar>(db: T) -> T {
    T::of(10.0).powf(db / T::of(10.0))
}

/// Linear ratio to dB. Zero and negative inputs map to `-inf`.
pub fn linear_to_db<T: Scalar>(x: T) -> T {
    T::of(10.0) * x.log10()
}

/// dBm to watts: `10^((x - 30)/10)`.
pub fn dbm_to_watts<T: Scalar>(dbm: T) -> T {
    T::of(10.0).powf((dbm - T::of(30.0)) / T::of(10.0))
}
