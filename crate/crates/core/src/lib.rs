//! Computable Paley theory on free groups.
//!
//! The crate is layered bottom-up:
//!
//! * [`free_words`]: reduced words in the rank-k free group and length functions.
//! * [`magnus`]: truncated Magnus series in noncommuting variables and J-coefficients.
//! * [`magnus_order`]: the bi-invariant dictionary order induced by the Magnus embedding.
//! * [`cnd_kernels`]: finite certificates of conditional negativity and Schoenberg positivity.
//! * [`lacunarity`]: ψ-lacunarity, integer lacunarity, Rudin window counts.
//! * [`nc_fourier`]: exact algebra of finitely supported operator-valued Fourier series.
//! * [`norm_estimation`]: compressions to word balls, operator norms, Krylov trace functionals.
//! * [`paley`]: BMO/H¹/L⁴ verifications and the Paley split.

pub mod budget;
pub mod cnd_kernels;
pub mod error;
pub mod free_words;
pub mod lacunarity;
pub mod magnus;
pub mod magnus_order;
pub mod nc_fourier;
pub mod norm_estimation;
pub mod paley;
pub mod real;

pub use error::{Error, Result};
pub use free_words::{LengthFunction, Word};
pub use magnus::NCPolynomial;
pub use nc_fourier::FourierElement;
pub use real::Real;
