//! Infinite-width and analytic results for shallow networks with Gaussian
//! parameters, plus the Gaussian-bump picture of finite erf networks.

pub mod bayes;
pub mod bumps;
pub mod hypergeom;
pub mod nngp;
pub mod ntk;
pub mod omega;

pub use bayes::{bayes_volume_ratio, chi_factor};
pub use bumps::{erf_bump_decomposition, BumpDecomposition, GaussianBump};
pub use hypergeom::hyp2f1_terminating;
pub use nngp::{
    monomial_nngp_kernel, monomial_ricci_threshold, nngp_geometry, nngp_metric, spherical_ricci, NngpGeometry,
};
pub use ntk::ntk_metric;
pub use omega::{gaussian_moments, omega_profile, omega_profile_quadrature, GaussMoments, GaussPrior, OmegaProfile};
