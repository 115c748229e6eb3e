//! Writes the procedural toy dataset: 16 textures of 128x128, a 12-image
//! training manifest, a 4-image test manifest and a matching config.
//!
//!     cargo run --release -p mirnet-forge --example toy_data -- <dir>

use std::fs;
use std::path::PathBuf;

use mirnet_core::data::{procedural_texture, save_ppm};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "toy".into()));
    fs::create_dir_all(&dir)?;
    let mut train = String::new();
    let mut test = String::new();
    for i in 0..16u64 {
        let name = format!("tex{i:02}.ppm");
        save_ppm(&procedural_texture(128, 128, i), dir.join(&name))?;
        let list = if i < 12 { &mut train } else { &mut test };
        list.push_str(&name);
        list.push('\n');
    }
    fs::write(dir.join("train.txt"), train)?;
    fs::write(dir.join("test.txt"), test)?;
    fs::write(dir.join("toy.cfg"), "data.manifest = train.txt\ndata.noise_sigma = 25\neval.manifest = test.txt\n")?;
    println!("wrote {}", dir.display());
    Ok(())
}
