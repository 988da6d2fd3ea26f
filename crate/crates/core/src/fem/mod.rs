//! Linear elastic statics on P1 tetrahedra and the resulting stress field.

pub mod bc;
pub mod material;
pub mod solve;
pub mod stress;

pub use bc::{BoundaryConditions, Dirichlet, Neumann, Selector};
pub use material::Material;
pub use solve::{solve_static, StaticSolution};
pub use stress::{cauchy_stress, stress_spd, StressField};
