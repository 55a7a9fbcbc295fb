//! Pointwise positivity of Hermitian curvature.

pub mod charclass;
pub mod curvature;
pub mod discriminant;
pub mod fiber;
pub mod linalg;
pub mod multilinear;
pub mod opsearch;
pub mod psi;
pub mod rankmin;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/conventions.md")]
    mod conventions {}
    #[doc = include_str!("../../../book/src/positivity.md")]
    mod positivity {}
    #[doc = include_str!("../../../book/src/forms.md")]
    mod forms {}
    #[doc = include_str!("../../../book/src/maps.md")]
    mod maps {}
    #[doc = include_str!("../../../book/src/discriminants.md")]
    mod discriminants {}
    #[doc = include_str!("../../../book/src/fiber.md")]
    mod fiber {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
