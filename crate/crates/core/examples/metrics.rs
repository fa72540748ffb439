//! Accuracy, macro-F1, confusion counts and relative improvement.

use gtg::prelude::*;

fn main() -> Result<()> {
    let truth = [0, 0, 1, 1, 2, 2, 2];
    let pred = [0, 1, 1, 1, 2, 0, 2];
    println!("accuracy {:.4}", accuracy(&pred, &truth)?);
    println!("macro-F1 {:.4}", macro_f1(&pred, &truth, 3)?);
    println!("confusion (rows = truth):");
    for row in confusion(&pred, &truth, 3)?.to_rows() {
        println!("  {row:?}");
    }

    // a class that is never predicted scores zero
    println!(
        "all-zero predictor macro-F1 {:.4}",
        macro_f1(&[0, 0, 0, 0], &[0, 0, 1, 1], 2)?
    );
    println!("0.362 over 0.266: {:+.2}%", 100.0 * relative_improvement(0.362, 0.266)?);
    Ok(())
}
