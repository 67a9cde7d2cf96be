// Solves the decoupling problem for the four-link chain and compares the
// friend with the readings of the block gain `[0, -k I, 0, k D, 0]`.

use chain_ddp::ddp::{check_gain_readings, solve_ddp, DdpOptions};
use chain_ddp::model::{linearize, ChainCartParams, EquilibriumConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = ChainCartParams::four_link_example();
    let m = linearize(&p, &EquilibriumConfig::hanging(4))?;
    let sol = solve_ddp(&m, &DdpOptions::default())?;
    println!(
        "decouplable = {}, dim V* = {}, iterations = {}",
        sol.decouplable,
        sol.v_star.dim(),
        sol.iterations
    );
    println!(
        "residuals: containment {:e}, invariance {:e}, chain {:e}",
        sol.containment_residual, sol.invariance_residual, sol.chain_residual
    );
    assert!(sol.decouplable);

    let names = m.layout.column_names();
    for (j, name) in names.iter().enumerate() {
        let col = sol.friend.column(j);
        if col.amax() > 1e-9 {
            println!("  F[:, {name:>12}] = ({:9.4}, {:9.4})", col[0], col[1]);
        }
    }

    for check in check_gain_readings(&m, &sol.v_star)? {
        println!(
            "  {:<36} invariance {:.2e}  chain {:.2e}",
            check.reading, check.invariance_residual, check.chain_residual
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
