//! Evaluates every loss family and its derivatives, then checks which
//! families satisfy the two sign assumptions the audits rely on.

use prefmono::loss::{check_assumption_cross, check_assumption_max, default_s_grid, linspace};
use prefmono::{LossFamily, RootLaw};

fn main() -> prefmono::Result<()> {
    let families = [
        LossFamily::BradleyTerry,
        LossFamily::UniformGbt,
        LossFamily::GaussianGbt,
        LossFamily::Gbt(RootLaw::Uniform { lo: -2.0, hi: 2.0 }),
        LossFamily::Slic,
        LossFamily::Ipo,
    ];
    let s = 0.7;
    println!(
        "{:<14} {:>10} {:>10} {:>10} {:>10}",
        "family", "loss", "dl/ds", "d2l/ds2", "d2l/dcds"
    );
    for family in &families {
        let c = family.domain().max().unwrap_or(1.0);
        let cross = family
            .dcds_cross(s, c)
            .map(|v| format!("{v:>10.4}"))
            .unwrap_or_else(|_| format!("{:>10}", "n/a"));
        println!(
            "{:<14} {:>10.4} {:>10.4} {:>10.4} {cross}",
            family.name(),
            family.loss_value(s, c)?,
            family.dloss_ds(s, c)?,
            family.d2loss_ds2(s, c)?,
        );
    }

    let grid = default_s_grid();
    println!("\nassumption checks on s in [-20, 20]:");
    for family in &families {
        let c_grid = match (family.domain().min(), family.domain().max()) {
            (Some(lo), Some(hi)) => linspace(lo, hi, 21),
            _ => linspace(-20.0, 20.0, 41),
        };
        println!(
            "{:<14} max comparison: {}\n{:<14} intensification: {}",
            family.name(),
            check_assumption_max(family, &grid),
            "",
            check_assumption_cross(family, &grid, &c_grid),
        );
    }

    let tabulated = RootLaw::tabulated(linspace(-1.0, 1.0, 201), vec![0.5; 201])?;
    println!(
        "\nuniform root law at s = 2: closed form Φ = {:.8}, tabulated Φ = {:.8}",
        RootLaw::Uniform { lo: -1.0, hi: 1.0 }.cumulant(2.0)?,
        tabulated.cumulant(2.0)?
    );
    Ok(())
}
