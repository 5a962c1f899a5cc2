//! Numerical laboratory for quasiconvexity questions about planar
//! hyperelastic energies: closed-form 2x2 kinematics, a registry of
//! isotropic energy densities, rank-one convexity scans, laminate and
//! radial competitor families, FEM and neural energy minimizers, and a
//! curl-penalized relaxation over incompatible fields.

pub mod config;
pub mod convexity;
pub mod curl;
pub mod energy;
pub mod families;
pub mod fem;
pub mod laminate;
pub mod mat2;
pub mod mesh;
pub mod pinn;
pub mod runner;
pub mod sparse;
pub mod trust_region;

pub use energy::EnergyDensity;
pub use mat2::Mat2;
