//! Builds a comparison dataset, applies both perturbations and round-trips
//! it through CSV.

use prefmono::{Comparison, ComparisonDomain, Dataset};

fn main() -> prefmono::Result<()> {
    let data = Dataset::new(
        ComparisonDomain::interval(-1.0, 1.0)?,
        vec![
            Comparison::new("x", "y", "z", 0.5),
            Comparison::new("x", "z", "y", -0.2),
            Comparison::new("x", "y", "w", 1.0),
        ],
    )?;
    println!(
        "occurrences of (x, y, z) in either orientation: {}",
        data.occurrences("x", "y", "z")
    );

    let pushed = data.intensify("x", "y", "z", 0.3)?;
    let added = data.add_unequivocal("x", "y", "z", 0.01)?;
    for (name, d) in [
        ("original", &data),
        ("intensified by 0.3", &pushed),
        ("plus unequivocal", &added),
    ] {
        println!("{name}:");
        let mut out = Vec::new();
        d.to_writer(&mut out).expect("writing to memory");
        print!("{}", String::from_utf8_lossy(&out));
    }

    let mut csv = Vec::new();
    pushed.to_writer(&mut csv).expect("writing to memory");
    let back = Dataset::from_reader(&csv[..], pushed.domain().clone())?;
    println!("CSV round trip exact: {}", back == pushed);
    Ok(())
}
