//! Truncated Fock-space realization of `−L_A + V_λ`.

pub mod basis;
pub mod hamiltonian;
pub mod lanczos;
pub mod precision;
pub mod scan;
pub mod wick;

pub use basis::FockBasis;
pub use hamiltonian::{assemble_hamiltonian, FockCouplings, FockHamiltonian, FockOptions};
pub use lanczos::{lowest_eigenpairs, lowest_eigenvalues, LanczosOptions, SpectrumResult};
pub use scan::{gap_scan, low_spectrum, semiclassical_limit_check, GapRow, LimitCheck, LimitRow, LowSpectrum, ScanOptions};
pub use wick::{smearing_constant, wick_coefficients, WickTable};
