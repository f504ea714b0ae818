//! Exact kernel for Cantor space: bit strings, binary rationals, clopen sets
//! in canonical form, and the uniform measure.

mod bitstring;
mod clopen;
mod dyadic;
pub mod ratio;

pub use bitstring::BitString;
pub use clopen::ClopenSet;
pub use dyadic::Dyadic;
pub use ratio::Rational;

/// `{xΩ}` as a canonical clopen set.
pub fn cylinder(x: BitString) -> ClopenSet {
    ClopenSet::cylinder(x)
}

/// λ(a).
pub fn measure(a: &ClopenSet) -> Dyadic {
    a.measure()
}
