//! Host crate for the `acceptance` test target; see `tests/acceptance.rs`.
