pub mod error;
pub mod exec;
pub mod fe_basis;
pub mod mesh;
pub mod assembly;
pub mod krylov;
pub mod estimators;
pub mod criteria;
pub mod experiment;
pub mod verify;
