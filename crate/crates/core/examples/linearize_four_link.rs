// Linearizes the four-link chain and prints its block structure.

use chain_ddp::model::{linearize, mass_blocks, ChainCartParams, EquilibriumConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = ChainCartParams::four_link_example();
    let blocks = mass_blocks(&p);
    println!("M00 = {}, c_i = {:?}", blocks.m00, blocks.m0);

    for eq in [
        EquilibriumConfig::hanging(4),
        EquilibriumConfig::inverted(4),
        EquilibriumConfig::new(vec![1, -1, -1, 1])?,
    ] {
        let m = linearize(&p, &eq)?;
        let he = &m.h * &m.e;
        let (prev, last) = m.last_link_tilt_coupling().expect("n >= 2");
        println!(
            "s = [{}]: A is {}x{}, |HE| = {:e}, last link couples {prev:.4} / {last:.4}",
            eq.describe(),
            m.a.nrows(),
            m.a.ncols(),
            he.amax()
        );
    }

    let m = linearize(&p, &EquilibriumConfig::hanging(4))?;
    println!("E (first 4 rows):\n{}", m.e.rows(0, 4));
    for (i, name) in m.layout.column_names().iter().enumerate().take(6) {
        println!("  state {i:2}: {name}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
