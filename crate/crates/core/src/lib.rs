pub mod debugger;
pub mod falsifier;
pub mod logic;
pub mod monitor;
pub mod plant;
pub mod rational;
pub mod satcheck;
pub mod templates;
#[cfg(feature = "testing")]
pub mod testing;
pub mod trace;
