//! Command implementations and the HTTP router behind the `fdive` binary.

pub mod api;
pub mod commands;
