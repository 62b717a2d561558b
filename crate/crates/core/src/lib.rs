pub mod atomic;
pub mod formula;
pub mod sexp;
pub mod bes;
pub mod par;
pub mod argstruct;
pub mod reduction;
pub mod samples;
pub mod validity;
pub mod constructions;
