fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    let mut config = cbindgen::Config::default();
    config.language = cbindgen::Language::C;
    config.include_guard = Some("IAS_H".to_owned());
    config.cpp_compat = true;
    config.enumeration.rename_variants = cbindgen::RenameRule::ScreamingSnakeCase;
    config.enumeration.prefix_with_name = true;
    cbindgen::Builder::new()
        .with_config(config)
        .with_crate(".")
        .generate()
        .expect("Unable to generate bindings")
        .write_to_file("include/ias.h");
}
