//! Holds the `acceptance` test target, which checks the simulator end to end
//! against fixed numerical criteria. Run it with
//! `cargo test -p tfsim-validation --test acceptance -- --nocapture`.
