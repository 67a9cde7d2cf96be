// Free nonlinear motion (energy and unit directions), then the gap between
// the nonlinear chain and its linearization as the perturbation shrinks.

use chain_ddp::ddp::{solve_ddp, DdpOptions};
use chain_ddp::model::{energy, linearize, ChainCartParams, EquilibriumConfig, NonlinearState};
use chain_ddp::sim::{linearization_gap, simulate_nonlinear, DisturbanceSignal};
use nalgebra::{DVector, Vector2};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = ChainCartParams::four_link_example();
    let eq = EquilibriumConfig::hanging(4);
    let m = linearize(&p, &eq)?;

    let mut x0 = DVector::zeros(m.dim());
    for i in 1..=4 {
        let tilt = m.layout.link_tilt(i);
        x0[tilt.start] = 0.3 / i as f64;
        x0[tilt.start + 1] = 0.1 * i as f64 - 0.2;
    }
    let init = NonlinearState::from_linear_coordinates(&eq, &x0)?;
    let e0 = energy(&p, &init);
    let traj = simulate_nonlinear(&p, |_| Vector2::zeros(), &DisturbanceSignal::Zero, &init, 2.0, 1e-3)?;
    let mut drift = 0.0f64;
    for y in &traj.states {
        let st = NonlinearState::from_vector(y)?;
        drift = drift.max(((energy(&p, &st) - e0) / e0).abs());
    }
    println!("relative energy drift over 2 s: {drift:.2e}");

    let sol = solve_ddp(&m, &DdpOptions::default())?;
    let mut dir = DVector::zeros(m.dim());
    for i in 1..=4 {
        dir[m.layout.link_tilt(i).start] = 1.0;
    }
    dir /= dir.norm();
    let mut previous: Option<(f64, f64)> = None;
    for eps in [1e-2, 5e-3, 2.5e-3] {
        let gap = linearization_gap(&p, &m, &sol.friend, &(&dir * eps), 1.0, 1e-3)?;
        print!("eps {eps:.1e}: configuration gap {:.3e}, output gap {:.3e}", gap.configuration, gap.output);
        if let Some((c, o)) = previous {
            print!("  (ratios {:.2}, {:.2})", c / gap.configuration, o / gap.output);
        }
        println!();
        previous = Some((gap.configuration, gap.output));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
