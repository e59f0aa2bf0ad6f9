//! Writes the bundled samples to a fixtures directory.
//!
//! ```text
//! cargo run -p signcoach-core --example export_samples -- fixtures
//! ```

use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    for (path, text) in signcoach_core::samples::fixture_files() {
        let path = root.join(path);
        std::fs::create_dir_all(path.parent().expect("fixture paths have a directory"))?;
        std::fs::write(&path, text)?;
        println!("{}", path.display());
    }
    Ok(())
}
