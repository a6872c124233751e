//! Bundled case-study systems.

pub const PROTEIN: &str = include_str!("../data/protein.sys");
pub const GENERIC3D: &str = include_str!("../data/generic3d.sys");

/// `(name, text)` for every bundled system.
pub const ALL: &[(&str, &str)] = &[("generic3d", GENERIC3D), ("protein", PROTEIN)];

pub fn by_name(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn names() -> Vec<&'static str> {
    ALL.iter().map(|(n, _)| *n).collect()
}
