//! File formats, OpenDRIVE output and validation, batch generation and the
//! command line, built on `roadforge-core`.

pub mod odr;
pub mod odrcheck;
pub mod records;
pub mod svg;
pub mod template;
pub mod tilefile;
pub mod cli;
pub mod generate;
pub mod pipeline;
