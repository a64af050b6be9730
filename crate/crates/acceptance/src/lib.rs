//! Acceptance suite for `pitchlog`. The criteria live in `tests/acceptance.rs`;
//! run them with `cargo test -p pitchlog-validation --test acceptance -- --nocapture`.
