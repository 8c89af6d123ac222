//! Holds the `acceptance` test target. Run it with
//! `cargo test --release -p sts-validation --test acceptance`.
