pub mod catalog;
pub mod determining;
pub mod diffop;
pub mod expr;
pub mod numeric;
pub mod verifier;
