//! Reading, scaling and re-writing a sparse `label idx:val ...` classification file.
//!
//! ```bash
//! cargo run --example parse_dataset -- path/to/file [--zero-based]
//! ```
//! Without a path a small inline sample is parsed.

use proxyprox::data_io::{
    parse_sparse_classification, parse_sparse_classification_str, scale_features, to_sparse_classification_string,
    ParseOptions, ScalingMode,
};

const SAMPLE: &str = "\
+1 1:0.5 3:2.0
-1 2:1.5
+1 1:-1.0 2:0.25 3:4.0 # trailing comment
-1 3:1.0
";

fn main() -> proxyprox::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let opts = ParseOptions {
        zero_based: args.iter().any(|a| a == "--zero-based"),
        dim: None,
    };
    let data = match args.iter().find(|a| !a.starts_with("--")) {
        Some(path) => parse_sparse_classification(path, opts)?,
        None => parse_sparse_classification_str(SAMPLE, opts)?,
    };
    let positives = data.labels.iter().filter(|&&y| y == 1.0).count();
    println!("{} rows, {} features, {} nonzeros, {positives} positive", data.n(), data.d(), data.features.nnz());
    println!("sha256 {}", data.content_hash());

    for mode in [ScalingMode::UnitColumns, ScalingMode::UnitRows] {
        let scaled = scale_features(&data, mode);
        let max = scaled.features.to_dense().amax();
        println!("{mode}: max |x_ij| = {max:.4}");
    }
    if data.n() <= 10 {
        print!("canonical form:\n{}", to_sparse_classification_string(&data));
    }
    Ok(())
}
