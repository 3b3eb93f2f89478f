//! Bundled example groups and group-file loading.
//!
//! Seven ready-made presentations ship with the crate:
//!
//! | name             | dim | description                                            |
//! |------------------|-----|--------------------------------------------------------|
//! | `trivial`        | 3   | no generators                                          |
//! | `cyclic-half`    | 3   | vertical translation, length 1/2                       |
//! | `cyclic-one`     | 3   | vertical translation, length 1                         |
//! | `cyclic-two`     | 3   | vertical translation, length 2                         |
//! | `schottky-plane` | 2   | free rank-2 plane group pairing disks at ±1, ±3 (r=½)  |
//! | `schottky-space` | 3   | free rank-2 space group pairing disks at ±3, ±3i (r=1) |
//! | `parabolic`      | 3   | unipotent translation `z ↦ z + 1` (no certificate)     |

use std::path::Path;

use crate::group_orbits::GroupPresentation;
use crate::{Error, Result};

const BUNDLED: &[(&str, &str)] = &[
    ("trivial", include_str!("../groups/trivial.json")),
    ("cyclic-half", include_str!("../groups/cyclic-half.json")),
    ("cyclic-one", include_str!("../groups/cyclic-one.json")),
    ("cyclic-two", include_str!("../groups/cyclic-two.json")),
    (
        "schottky-plane",
        include_str!("../groups/schottky-plane.json"),
    ),
    (
        "schottky-space",
        include_str!("../groups/schottky-space.json"),
    ),
    ("parabolic", include_str!("../groups/parabolic.json")),
];

/// Names of the bundled groups, in registry order.
pub fn bundled_group_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(name, _)| *name).collect()
}

/// Load a bundled group by name.
pub fn bundled_group(name: &str) -> Result<GroupPresentation> {
    let (_, text) = BUNDLED.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        Error::GroupFile(format!(
            "unknown bundled group `{name}` (available: {})",
            bundled_group_names().join(", ")
        ))
    })?;
    GroupPresentation::from_json(text)
}

/// Load a group presentation from a JSON file.
pub fn load_group(path: &Path) -> Result<GroupPresentation> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::GroupFile(format!("{}: {e}", path.display())))?;
    GroupPresentation::from_json(&text)
}

/// Resolve a group given either a bundled name or a path to a JSON file.
pub fn resolve_group(spec: &str) -> Result<GroupPresentation> {
    if BUNDLED.iter().any(|(n, _)| *n == spec) {
        bundled_group(spec)
    } else {
        load_group(Path::new(spec))
    }
}
