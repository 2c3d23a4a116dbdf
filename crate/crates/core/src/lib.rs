//! Building labeled definienda datasets from LaTeX sources of mathematical
//! papers, and scoring definienda extraction systems against them.

pub mod corpus;
pub mod dataset;
pub mod diag;
pub mod eval;
pub mod extract;
pub mod pipeline;
pub mod render;
pub mod tex;
pub mod text;
pub mod timestamp;
