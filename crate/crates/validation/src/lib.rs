//! Acceptance runs live in `tests/acceptance.rs`.
