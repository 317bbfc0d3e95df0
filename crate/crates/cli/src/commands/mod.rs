pub mod bench;
pub mod evaluate;
pub mod fedsim;
pub mod preprocess;
pub mod synth;
pub mod train;

pub use bench::cmd_bench;
pub use evaluate::cmd_evaluate;
pub use fedsim::cmd_fedsim;
pub use preprocess::cmd_preprocess;
pub use synth::cmd_synth;
pub use train::cmd_train;
