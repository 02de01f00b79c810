fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    let header = std::path::Path::new(&crate_dir).join("include/lieconf.h");
    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("LIECONF_H".to_string()),
        cpp_compat: true,
        documentation: true,
        header: Some("/* C interface of the lieconf computer-algebra library. */".to_string()),
        ..Default::default()
    };
    match cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
    {
        Ok(bindings) => {
            bindings.write_to_file(header);
        }
        Err(e) => {
            // keep the checked-in header if regeneration is impossible
            println!("cargo:warning=cbindgen failed: {e}");
        }
    }
    println!("cargo:rerun-if-changed=src/lib.rs");
}
