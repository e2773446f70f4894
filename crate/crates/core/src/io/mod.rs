//! File formats and the run harness.

pub mod description;
pub mod run;
pub mod trace;
pub mod weights;

pub use description::{load_network, save_network, Drive, Network, NetworkDescription};
pub use run::{run, Driver, RunOptions, RunOutput};
pub use trace::{write_cycles, RasterFile, RasterRecord, StimulusRecord, StimulusTrace};
pub use weights::WeightImage;
