pub mod cli;
pub mod complexity;
pub mod data;
pub mod evaluation;
pub mod model;
pub mod nn;
pub mod numeric;
