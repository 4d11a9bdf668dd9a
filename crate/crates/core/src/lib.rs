pub mod cli;
pub mod gf;
pub mod gnq;
pub mod linop;
pub mod perm;
pub mod poly;
pub mod transition;
