//! Exhaustive enumeration of the hierarchical model lattice, and the
//! random-guess baselines it implies for model-recovery experiments.

use gramediate::*;

fn main() -> Result<()> {
    for n in 2..=5 {
        let start = std::time::Instant::now();
        let models = enumerate_hierarchical(n)?;
        println!(
            "{n} variables: {:>5} hierarchical models  (baseline 1/{} = {:.4}, {:?})",
            models.len(),
            models.len(),
            1.0 / models.len() as f64,
            start.elapsed()
        );
    }

    // show the full 3-variable lattice
    let schema = Schema::new(vec![
        VariableSchema::new("A", &["0", "1"]).unwrap(),
        VariableSchema::new("B", &["0", "1"]).unwrap(),
        VariableSchema::new("C", &["0", "1"]).unwrap(),
    ])?;
    println!("\nall models over three variables:");
    for m in enumerate_hierarchical(3)? {
        println!("  {}", m.format(&schema));
    }
    Ok(())
}
