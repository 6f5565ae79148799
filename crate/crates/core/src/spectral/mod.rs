//! Fourier-Galerkin discretization on the periodic torus `[0, 2 pi)^2`.
//!
//! Fields are zero-mean and divergence-free, expanded as
//! `u(x) = sum_k u_hat(k) e^{i k.x}` over `0 < |k| <= K_max`. With this
//! convention `||u||_H^2 = (2 pi)^2 sum |u_hat(k)|^2` and the Stokes operator is
//! multiplication by `|k|^2`.

mod basis;
pub mod checkpoint;
mod field;
mod ops;
mod transform;

pub use basis::{build_basis, collocation_size, Basis, StokesSpectrum, WaveVector, MAX_K};
pub use field::{PhysicalField, SpectralField};
pub use ops::{
    apply_a, apply_a_power, convective_term, damping_term, divergence_residual, inner_h, leray_project, norm_a,
    norm_h, norm_h2, norm_lp, norm_v, norm_v2, norm_v_dual, project_pm, project_qm, random_field, trilinear,
    weighted_norm2, Workspace,
};
pub use transform::{from_physical, to_physical};
