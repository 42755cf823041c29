pub mod domain;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod metrics;
pub mod time;
pub mod trajectory;
pub mod trajopt;
pub mod transport;
pub mod velocity;

pub use error::{Error, Result};
