pub mod analysis;
pub mod artifact;
pub mod classical;
pub mod distribution;
pub mod error;
pub mod fit;
pub mod oracle;
pub mod reproduce;
pub mod spectral;
pub mod sum;
pub mod walk1d;
pub mod walk2d;
