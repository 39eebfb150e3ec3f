pub mod blockmap;
pub mod born;
pub mod cli;
pub mod error;
pub mod generalized;
pub mod graded;
pub mod nogo;
pub mod optimizer;
pub mod report;
pub mod scheme;
