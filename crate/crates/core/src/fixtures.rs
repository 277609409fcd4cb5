//! Levels and feature files bundled with the crate.

macro_rules! level {
    ($name:literal) => {
        ($name, include_str!(concat!("../fixtures/levels/", $name, ".lvl")))
    };
}

pub const DEMO_LAB: &str = include_str!("../fixtures/levels/demo_lab.lvl");
pub const STATION_LAB: &str = include_str!("../fixtures/levels/station_lab.lvl");
pub const MINIMAL: &str = include_str!("../fixtures/levels/minimal.lvl");

/// Every bundled level, by name.
pub const LEVELS: &[(&str, &str)] = &[
    level!("demo_lab"),
    level!("station_lab"),
    level!("minimal"),
    level!("sealed"),
    level!("monster_lab"),
];

/// Absolute path of the bundled fixture directory.
pub fn dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}
