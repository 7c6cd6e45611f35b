//! Holds the `acceptance` test target only; run it with
//! `cargo test -p kbqa-acceptance --test acceptance`.
