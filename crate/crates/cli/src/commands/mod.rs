pub mod eval;
pub mod gen_toy;
pub mod rasterize;
pub mod restore;
pub mod sweep;
pub mod synth;
pub mod train;
