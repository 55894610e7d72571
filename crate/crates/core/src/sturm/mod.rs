//! The two-interval Sturm–Liouville problem commuting with the truncated transform.
//!
//! `L ψ = (P ψ′)′ + 2 (x − σ)² ψ` on `(a2, a3) ∪ (a3, a4)` with
//! `P(x) = ∏ (x − a_i)` and `σ = (a1 + a2 + a3 + a4)/4`. The self-adjoint
//! realization requires `ψ` bounded at `a2` and `a4` and keeps both the
//! bounded part and the log coefficient continuous across `a3`.

pub mod eigenfunction;
pub mod propagate;
pub mod series;
pub mod shooting;

pub use eigenfunction::{apply_l_jet, apply_l_sampled, assemble_eigenfunction, fd_jet, PiecewiseEigenfunction};
pub use propagate::{integrate_interior, PropagationOptions};
pub use series::{frobenius_coefficients, FrobeniusExpansion, Jet, State};
pub use shooting::{boundary_defect, eigen_search, first_eigenvalues, match_log_basis, shoot, SolverParams};
