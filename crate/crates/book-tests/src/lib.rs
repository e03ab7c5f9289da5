//! Runs the Rust listings in `book/src` as doc-tests.
//!
//! mdbook cannot link against workspace crates, so each chapter is pulled in
//! as the docs of an empty module and `cargo test --doc` does the rest.

macro_rules! chapters {
    ($($name:ident => $file:literal),* $(,)?) => {
        $(
            #[cfg(doctest)]
            #[doc = include_str!(concat!("../../../book/src/", $file))]
            pub mod $name {}
        )*
    };
}

chapters! {
    introduction => "introduction.md",
    geometry => "geometry.md",
    patterns => "patterns.md",
    blocks => "blocks.md",
    attention => "attention.md",
    complexity => "complexity.md",
    error_bound => "error-bound.md",
    decay => "decay.md",
    presets => "presets.md",
    cli => "cli.md",
}

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
pub mod readme {}
