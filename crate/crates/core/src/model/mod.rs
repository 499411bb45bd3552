//! Data model: block structures, dictionaries, coefficients, planted
//! instances, random generation, and on-disk serialization.

mod coefficients;
mod dictionary;
mod generate;
mod instance;
mod io;
mod structure;

pub use coefficients::BlockSparseCoefficients;
pub use dictionary::Dictionary;
pub use generate::{generate_dictionary, plant_signal};
pub use instance::PlantedInstance;
pub use io::{atomic_write, load_dictionary, load_instance, save_dictionary, save_instance};
pub use structure::BlockStructure;
