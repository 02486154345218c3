//! Desk-scale computations for Anti-de Sitter quasi-Fuchsian groups.

pub mod boundary;
pub mod checks;
pub mod cli;
pub mod groups;
pub mod lorentz;
pub mod mat2;
pub mod orbit;
pub mod ps;
