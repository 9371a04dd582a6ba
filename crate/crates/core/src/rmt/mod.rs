//! Correlation-matrix spectra against the random-matrix null.
//!
//! Returns and polarities are standardized row-wise, their correlation
//! matrices are diagonalized, and the eigenvalues are compared with the
//! Marčenko–Pastur noise band. Eigenvector localization is measured by the
//! inverse participation ratio and the time dynamics by sliding windows.

mod correlation;
mod eigen;
mod mp;
mod returns;
mod stats;
mod student_t;
mod window;

pub use correlation::{correlation_matrix, eigendecompose, mean_correlation, CorrelationMatrix};
pub use eigen::{ipr, symmetric_eigen, Spectrum};
pub use mp::{mp_bounds, mp_density, MpParams};
pub use returns::{compute_returns, mean_std, normalize_panel, NormalizedPanel};
pub use stats::{average_ranks, pearson, spearman};
pub use student_t::{fit_student_t, StudentTFit, DOF_MAX, DOF_MIN};
pub use window::{sliding_spectra, window_count, WindowSpectrum};
