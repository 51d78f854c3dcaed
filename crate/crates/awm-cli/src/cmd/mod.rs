pub mod analyze;
pub mod bench;
pub mod compile;
pub mod decode;
pub mod sim;
