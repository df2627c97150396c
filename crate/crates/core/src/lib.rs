//! L² invariants of finite cochain complexes of free based modules over group
//! rings of concrete amenable and residually finite groups.
//!
//! The pipeline is exact up to the point where a group-ring operator is
//! compressed to a finite matrix, either on a Følner box ([`spectral::compress_folner`])
//! or on a finite quotient ([`spectral::compress_quotient`]). From there the
//! spectrum gives the normalized spectral density, whose log-moment and mass
//! at zero estimate the Fuglede–Kadison determinant and the von Neumann
//! dimension of the kernel.
//!
//! Module map:
//! - [`groups`]: group models, word metric, Følner boxes, finite quotients.
//! - [`groupring`]: exact rational group-ring arithmetic, involution, trace τ.
//! - [`complexes`]: cochain complexes, Laplacians, chain maps, mapping cones.
//! - [`spectral`]: compressions, eigenvalues, spectral density functions.
//! - [`invariants`]: determinant, Betti, torsion and Whitehead estimators.
//! - [`oracles`]: Mahler measure and regular-representation determinants.
//! - [`io`]: JSON file formats.

pub mod complexes;
pub mod error;
pub mod groupring;
pub mod groups;
pub mod invariants;
pub mod io;
pub mod oracles;
pub mod spectral;

pub use complexes::{ChainMap, CochainComplex, LaplacianFamily, Violation};
pub use error::{Error, ErrorClass, Result};
pub use groupring::{RingElement, RingMatrix};
pub use groups::{FolnerSet, GroupElement, GroupSpec, QuotientSpec};
pub use invariants::{DetEstimate, Evaluation, Schedule, Scheme, TorsionReport};
pub use spectral::{Compression, SpectralDensity};
