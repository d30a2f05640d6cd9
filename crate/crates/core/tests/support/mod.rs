pub mod gradcheck;
pub mod synthetic;
pub mod layer_checks;
pub mod oracles;
