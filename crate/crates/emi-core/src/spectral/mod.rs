//! Toeplitz symbols, full spectra and eigenvalue-distribution checks.

mod distribution;
mod eigen;
mod symbol;

pub use distribution::{
    distribution_distance, gauss_legendre, quantile_distance, quantiles, weighted_quantiles, weyl_battery,
    CombinedSymbol, ConstantSymbol, DistributionReport, SpectralTarget, TestFunction, GAUSS_PANELS, GAUSS_POINTS, GRID_PER_AXIS,
    MAX_QUANTILES,
};
pub use eigen::{eig_rearranged, eig_rearranged_with, generalized_eigenvalues, numerical_rank, to_dense, Spectrum, DENSE_THRESHOLD};
pub use symbol::{
    laplacian_1d_symbol, laplacian_toeplitz_eigenvalues, p1_laplacian_symbol, sample_grid, toeplitz_from_symbol,
    SymbolFunction,
};
