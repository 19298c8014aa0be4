pub mod calibrate;
pub mod estimate;
pub mod parse;
pub mod report;
pub mod simulate;
