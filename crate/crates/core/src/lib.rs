pub mod bundles;
pub mod chern;
pub mod cli;
pub mod scalars;
pub mod torsion;
pub mod transfer;
pub mod verify;
