//! Public test cases bundled with the crate.

pub const CASE9: &str = include_str!("../data/case9.m");
pub const CASE14: &str = include_str!("../data/case14.m");
pub const CASE30: &str = include_str!("../data/case30.m");
pub const CASE57: &str = include_str!("../data/case57.m");
pub const CASE118: &str = include_str!("../data/case118.m");

/// All bundled cases as `(name, text)`.
pub const ALL: [(&str, &str); 5] = [
    ("case9", CASE9),
    ("case14", CASE14),
    ("case30", CASE30),
    ("case57", CASE57),
    ("case118", CASE118),
];

/// Looks up a bundled case by name (`case9`, `case14`, ...).
pub fn by_name(name: &str) -> Option<&'static str> {
    let name = name.trim_end_matches(".m");
    ALL.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
