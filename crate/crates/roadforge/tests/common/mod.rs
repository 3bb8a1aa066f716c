#![allow(dead_code)]

use std::path::PathBuf;

use roadforge::odr::emit_opendrive;
use roadforge::template::parse_template;
use roadforge_core::netgen::resolve;
use roadforge_core::variation::{sample, SampleContext};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn tiles_dir() -> PathBuf {
    fixtures().join("tiles")
}

pub fn template_path() -> PathBuf {
    fixtures().join("templates/x_junction.template.xml")
}

pub fn template_xml() -> String {
    std::fs::read_to_string(template_path()).unwrap()
}

/// OpenDRIVE text of map `index` drawn from the bundled template.
pub fn sample_map(seed: u64, index: u64) -> String {
    let t = parse_template(&template_xml()).unwrap();
    let b = sample(&t.vars, &SampleContext::new(seed, index)).unwrap();
    emit_opendrive(&resolve(&t, &b).unwrap()).unwrap().1
}

/// Replaces the value of the `nth` occurrence of `attr="..."` found after `anchor`.
pub fn set_attr_after(xml: &str, anchor: &str, attr: &str, nth: usize, f: impl Fn(&str) -> String) -> String {
    let start = xml.find(anchor).unwrap_or_else(|| panic!("{anchor} not in document"));
    let key = format!(" {attr}=\"");
    let mut pos = start;
    for _ in 0..=nth {
        pos = xml[pos..].find(&key).map(|p| pos + p + key.len()).unwrap();
    }
    let end = pos + xml[pos..].find('"').unwrap();
    format!("{}{}{}", &xml[..pos], f(&xml[pos..end]), &xml[end..])
}

pub fn shift(by: f64) -> impl Fn(&str) -> String {
    move |v| format!("{:.16e}", v.parse::<f64>().unwrap() + by)
}

/// Runs the command line and returns (exit code, stdout, stderr).
pub fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = roadforge::cli::run(std::iter::once("roadforge").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}
