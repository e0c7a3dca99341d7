//! Natural-language financial database queries routed through a vetted
//! library of parameterized SQL templates, with a text-to-SQL baseline and
//! an evaluation harness.

pub mod baseline;
pub mod cli;
pub mod config;
pub mod eval;
pub mod fixtures;
pub mod library;
pub mod period;
pub mod protocol;
pub mod resolver;
pub mod router;
pub mod store;
pub mod templates;
pub mod vocab;
