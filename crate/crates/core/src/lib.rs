pub mod canonical;
pub mod discourse;
pub mod grammar;
pub mod interop;
pub mod notebook;
pub mod pattern;
