//! End-to-end acceptance checks of the collocation library and the `hjmm`
//! tool. Run them with `cargo test -p hjmm-validation --test acceptance`.
