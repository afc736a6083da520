//! Analytic side: Poisson tails and the fixed-point equations whose solutions
//! give asymptotic k-core sizes.

pub mod finite_type;
pub mod poisson;
pub mod quad;
pub mod rank1;
pub mod solver;
pub mod uniform;

pub use finite_type::{
    b_d_iterates_finite_type, beta_finite_type, beta_plus_by_type, beta_plus_finite_type,
    FiniteTypeKernel,
};
pub use poisson::{poisson_head, poisson_pmf, poisson_tail, PoissonSampler};
pub use rank1::{
    a_rank1, asymptotic_a, asymptotic_a_k2, asymptotic_beta_plus, asymptotic_beta_plus_k2,
    beta_plus_rank1, beta_profile, f_k, f_k_quadrature, g_k, g_k_quadrature, h_k,
    h_k_quadrature, kernel_discretize, Rank1PowerLawKernel,
};
pub use solver::{CoreOrder, FixedPointConfig, SolveResult};
pub use uniform::{b_d_iterates, b_plus_d, beta_plus_uniform, beta_uniform, lambda_c};
