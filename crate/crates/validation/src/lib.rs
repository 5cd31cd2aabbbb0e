//! Test-only package; see `tests/acceptance.rs`. It sorts after the other
//! workspace members, so a failing criterion does not stop their suites.
