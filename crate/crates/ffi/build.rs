//! Generates `include/riscap.h` from the public extern "C" surface.

use std::env;
use std::path::PathBuf;

fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").expect("manifest dir"));
    let header = crate_dir.join("include").join("riscap.h");
    let config = cbindgen::Config::from_file(crate_dir.join("cbindgen.toml"))
        .expect("cbindgen.toml parses");

    match cbindgen::Builder::new().with_crate(&crate_dir).with_config(config).generate() {
        Ok(bindings) => {
            bindings.write_to_file(&header);
        }
        // Keep `cargo check`-style invocations alive even if header
        // generation hits a parse issue; the FFI tests still compile the
        // Rust side and the committed header stays in place.
        Err(e) => println!("cargo:warning=cbindgen failed: {e}"),
    }
}
