//! Holds the `acceptance` test target: `cargo test -p scl-suite`.
