//! Bundled example programs and their input cases.

/// Isosceles check with a missing `x == z` comparison.
pub const ISOSCELES_SRC: &str = include_str!("../fixtures/isisosceles.mini");
pub const ISOSCELES_CASES: &str = include_str!("../fixtures/isisosceles.cases");

/// Partial identity on `{10, 20, 30}` whose fallback returns 30.
pub const PARTIAL_ID_SRC: &str = include_str!("../fixtures/partial_id.mini");
pub const PARTIAL_ID_CASES: &str = include_str!("../fixtures/partial_id.cases");

/// Class codes on which `partial_id` is the identity.
pub const PARTIAL_ID_MEMBERS: [i64; 3] = [10, 20, 30];
