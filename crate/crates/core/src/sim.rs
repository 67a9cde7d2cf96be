//! Fixed-step RK4 simulation of the linear closed loop and the nonlinear
//! chain, and the with/without feedback difference experiment.

use nalgebra::{DMatrix, DVector, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    embed, nonlinear_accelerations, ChainCartParams, EquilibriumConfig, LinearModel,
    NonlinearState, StateLayout, StateSpace,
};

pub const DEFAULT_T_END: f64 = 20.0;
pub const DEFAULT_DT: f64 = 1e-3;

/// Planar disturbance force on the cart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceSignal {
    Zero,
    Step {
        amplitude: [f64; 2],
        #[serde(default)]
        t0: f64,
    },
    Sine {
        amplitude: [f64; 2],
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl Default for DisturbanceSignal {
    fn default() -> Self {
        DisturbanceSignal::default_step()
    }
}

impl DisturbanceSignal {
    /// Unit step along the first axis starting at `t = 0`.
    pub fn default_step() -> Self {
        DisturbanceSignal::Step {
            amplitude: [1.0, 0.0],
            t0: 0.0,
        }
    }

    /// Unit sine along the first axis at 0.5 Hz.
    pub fn default_sine() -> Self {
        DisturbanceSignal::Sine {
            amplitude: [1.0, 0.0],
            frequency: 0.5,
            phase: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DisturbanceSignal::Zero => Ok(()),
            DisturbanceSignal::Step { amplitude, t0 } => {
                if !amplitude.iter().all(|a| a.is_finite()) || !t0.is_finite() {
                    return Err(Error::InvalidParams("non-finite step signal".into()));
                }
                Ok(())
            }
            DisturbanceSignal::Sine {
                amplitude,
                frequency,
                phase,
            } => {
                if !amplitude.iter().all(|a| a.is_finite()) || !phase.is_finite() {
                    return Err(Error::InvalidParams("non-finite sine signal".into()));
                }
                if !(frequency > 0.0 && frequency.is_finite()) {
                    return Err(Error::InvalidParams(format!(
                        "sine frequency must be positive, got {frequency}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn at(&self, t: f64) -> Vector2<f64> {
        match *self {
            DisturbanceSignal::Zero => Vector2::zeros(),
            DisturbanceSignal::Step { amplitude, t0 } => {
                if t >= t0 {
                    Vector2::from(amplitude)
                } else {
                    Vector2::zeros()
                }
            }
            DisturbanceSignal::Sine {
                amplitude,
                frequency,
                phase,
            } => Vector2::from(amplitude) * (std::f64::consts::TAU * frequency * t + phase).sin(),
        }
    }

    /// The same signal with its two axes exchanged.
    pub fn swapped_axes(&self) -> Self {
        let swap = |a: [f64; 2]| [a[1], a[0]];
        match *self {
            DisturbanceSignal::Zero => DisturbanceSignal::Zero,
            DisturbanceSignal::Step { amplitude, t0 } => DisturbanceSignal::Step {
                amplitude: swap(amplitude),
                t0,
            },
            DisturbanceSignal::Sine {
                amplitude,
                frequency,
                phase,
            } => DisturbanceSignal::Sine {
                amplitude: swap(amplitude),
                frequency,
                phase,
            },
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            DisturbanceSignal::Zero => "zero".into(),
            DisturbanceSignal::Step { amplitude, t0 } => {
                format!("step ({}, {}) N at t0 = {} s", amplitude[0], amplitude[1], t0)
            }
            DisturbanceSignal::Sine {
                amplitude,
                frequency,
                phase,
            } => format!(
                "sine ({}, {}) N at {} Hz, phase {} rad",
                amplitude[0], amplitude[1], frequency, phase
            ),
        }
    }
}

/// Sampled run: one state and one planar output per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub outputs: Vec<Vector2<f64>>,
    pub meta: String,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `max_t |y_axis(t)|`.
    pub fn max_abs_output(&self, axis: usize) -> f64 {
        self.outputs.iter().map(|y| y[axis].abs()).fold(0.0, f64::max)
    }

    pub fn final_state(&self) -> Option<&DVector<f64>> {
        self.states.last()
    }
}

/// Number of steps covering `[0, t_end]`, i.e. `floor(t_end / dt)` with a
/// guard against `t_end / dt` landing just below an integer.
pub fn step_count(t_end: f64, dt: f64) -> usize {
    let ratio = t_end / dt;
    let near = ratio.round();
    if (ratio - near).abs() <= 1e-9 * near.max(1.0) {
        near as usize
    } else {
        ratio.floor() as usize
    }
}

fn check_horizon(t_end: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Precondition(format!("dt must be positive, got {dt}")));
    }
    if !(t_end.is_finite() && t_end >= dt) {
        return Err(Error::Precondition(format!(
            "t_end must be at least dt, got t_end = {t_end}, dt = {dt}"
        )));
    }
    Ok(())
}

/// One classical Runge-Kutta step of `y' = f(t, y)`.
pub fn rk4_step<F>(f: &mut F, t: f64, y: &DVector<f64>, dt: f64) -> Result<DVector<f64>>
where
    F: FnMut(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let half = 0.5 * dt;
    let k1 = f(t, y)?;
    let k2 = f(t + half, &(y + &k1 * half))?;
    let k3 = f(t + half, &(y + &k2 * half))?;
    let k4 = f(t + dt, &(y + &k3 * dt))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

fn planar(m: &DVector<f64>) -> Vector2<f64> {
    Vector2::new(m[0], m[1])
}

/// Integrates `x' = (A + BF) x + E w(t)` and records `y = H x`.
pub fn simulate_linear(
    sys: &StateSpace,
    f: &DMatrix<f64>,
    w: &DisturbanceSignal,
    x0: &DVector<f64>,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    sys.check_shapes()?;
    sys.check_feedback(f)?;
    if sys.h.nrows() != 2 || sys.e.ncols() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "expected a planar output and disturbance, got H {}x{} and E {}x{}",
            sys.h.nrows(),
            sys.h.ncols(),
            sys.e.nrows(),
            sys.e.ncols()
        )));
    }
    if x0.len() != sys.dim() {
        return Err(Error::ShapeMismatch(format!(
            "initial state has length {}, model has dimension {}",
            x0.len(),
            sys.dim()
        )));
    }
    check_horizon(t_end, dt)?;
    w.validate()?;

    let closed = sys.closed_loop(f);
    let mut rhs = |t: f64, x: &DVector<f64>| -> Result<DVector<f64>> {
        Ok(&closed * x + &sys.e * w.at(t))
    };
    let steps = step_count(t_end, dt);
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        outputs: Vec::with_capacity(steps + 1),
        meta: format!("linear, n = {}, w: {}", sys.dim(), w.describe()),
    };
    let mut x = x0.clone();
    for k in 0..=steps {
        let t = k as f64 * dt;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { time: t });
        }
        traj.times.push(t);
        traj.outputs.push(planar(&(&sys.h * &x)));
        if k < steps {
            let next = rk4_step(&mut rhs, t, &x, dt)?;
            traj.states.push(std::mem::replace(&mut x, next));
        } else {
            traj.states.push(x.clone());
        }
    }
    Ok(traj)
}

/// Integrates the nonlinear chain in the flat layout of
/// [`NonlinearState::to_vector`]. After every step the directions are
/// renormalized and the angular velocities projected. The output is
/// `C^T w_n`.
pub fn simulate_nonlinear<C>(
    p: &ChainCartParams,
    controller: C,
    w: &DisturbanceSignal,
    init: &NonlinearState,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory>
where
    C: Fn(&NonlinearState) -> Vector2<f64>,
{
    p.validate()?;
    if init.n() != p.n() {
        return Err(Error::ShapeMismatch(format!(
            "initial state has {} links, parameters have {}",
            init.n(),
            p.n()
        )));
    }
    init.validate(1e-9)?;
    check_horizon(t_end, dt)?;
    w.validate()?;

    let n = p.n();
    let mut rhs = |t: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        let st = NonlinearState::from_vector(y)?;
        let u = controller(&st);
        let acc = nonlinear_accelerations(p, &st, &u, &w.at(t))
            .map_err(|_| Error::SingularDynamics { time: t })?;
        let mut d = DVector::zeros(y.len());
        d.fixed_rows_mut::<2>(0).copy_from(&st.v);
        d.fixed_rows_mut::<2>(2).copy_from(&acc.cart);
        for i in 0..n {
            d.fixed_rows_mut::<3>(4 + 3 * i)
                .copy_from(&st.omega[i].cross(&st.q[i]));
            d.fixed_rows_mut::<3>(4 + 3 * n + 3 * i)
                .copy_from(&acc.omega_dot[i]);
        }
        Ok(d)
    };
    let c_t = embed().transpose();
    let steps = step_count(t_end, dt);
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        outputs: Vec::with_capacity(steps + 1),
        meta: format!("nonlinear, n = {n}, w: {}", w.describe()),
    };
    let mut y = init.to_vector();
    for k in 0..=steps {
        let t = k as f64 * dt;
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { time: t });
        }
        let omega_n: Vector3<f64> = y.fixed_rows::<3>(4 + 6 * n - 3).into_owned();
        traj.times.push(t);
        traj.outputs.push(c_t * omega_n);
        traj.states.push(y.clone());
        if k < steps {
            let stepped = rk4_step(&mut rhs, t, &y, dt)?;
            if !stepped.iter().all(|v| v.is_finite()) {
                return Err(Error::Divergence { time: t + dt });
            }
            let mut st = NonlinearState::from_vector(&stepped)?;
            st.renormalize();
            y = st.to_vector();
        }
    }
    Ok(traj)
}

/// State feedback `u = F x_lin` evaluated on the linear coordinates of a
/// nonlinear state about `eq`.
pub fn linear_feedback<'a>(
    f: &'a DMatrix<f64>,
    eq: &'a EquilibriumConfig,
) -> impl Fn(&NonlinearState) -> Vector2<f64> + 'a {
    move |st| planar(&(f * st.linear_coordinates(eq)))
}

/// Output differences (disturbed minus undisturbed) with and without
/// feedback.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceSeries {
    pub times: Vec<f64>,
    pub with_feedback: Vec<Vector2<f64>>,
    pub without_feedback: Vec<Vector2<f64>>,
}

fn axis_max(series: &[Vector2<f64>], axis: usize) -> f64 {
    series.iter().map(|d| d[axis].abs()).fold(0.0, f64::max)
}

impl DifferenceSeries {
    pub fn max_with(&self, axis: usize) -> f64 {
        axis_max(&self.with_feedback, axis)
    }

    pub fn max_without(&self, axis: usize) -> f64 {
        axis_max(&self.without_feedback, axis)
    }
}

fn output_difference(a: &Trajectory, b: &Trajectory) -> Vec<Vector2<f64>> {
    a.outputs.iter().zip(&b.outputs).map(|(x, y)| x - y).collect()
}

/// Four linear runs from `x0 = 0`: `{F, 0} x {w, zero}`.
pub fn difference_experiment(
    sys: &StateSpace,
    f: &DMatrix<f64>,
    w: &DisturbanceSignal,
    t_end: f64,
    dt: f64,
) -> Result<DifferenceSeries> {
    sys.check_feedback(f)?;
    let x0 = DVector::zeros(sys.dim());
    let open = DMatrix::zeros(f.nrows(), f.ncols());
    let zero = DisturbanceSignal::Zero;
    let run = |gain: &DMatrix<f64>, sig: &DisturbanceSignal| {
        simulate_linear(sys, gain, sig, &x0, t_end, dt)
    };
    let ((fw, f0), (ow, o0)) = rayon::join(
        || rayon::join(|| run(f, w), || run(f, &zero)),
        || rayon::join(|| run(&open, w), || run(&open, &zero)),
    );
    let (fw, f0, ow, o0) = (fw?, f0?, ow?, o0?);
    Ok(DifferenceSeries {
        times: fw.times.clone(),
        with_feedback: output_difference(&fw, &f0),
        without_feedback: output_difference(&ow, &o0),
    })
}

/// `C^T xi_n` per sample of a linear trajectory.
pub fn link_position_series(traj: &Trajectory, model: &LinearModel) -> Result<Vec<Vector2<f64>>> {
    let layout = StateLayout { n: model.n };
    let rows = layout.link_tilt(model.n);
    traj.states
        .iter()
        .map(|x| {
            if x.len() != layout.dim() {
                return Err(Error::ShapeMismatch(format!(
                    "state of length {} does not match the {}-link layout",
                    x.len(),
                    model.n
                )));
            }
            Ok(Vector2::new(x[rows.start], x[rows.start + 1]))
        })
        .collect()
}

/// Gap between a nonlinear run and the linear closed loop started from the
/// same small perturbation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizationGap {
    /// `max_t |y_nl - y_lin|` on the output `C^T w_n`.
    pub output: f64,
    /// `max_t` over the cart position and every link direction of the
    /// distance between the nonlinear configuration and the linear one
    /// mapped to `R^3` as `q_i^0 + xi_i x q_i^0`.
    pub configuration: f64,
}

/// Runs the nonlinear chain and the linear closed loop from
/// `x_lin(0) = x0`, both under `u = F x_lin` and zero disturbance.
pub fn linearization_gap(
    p: &ChainCartParams,
    model: &LinearModel,
    f: &DMatrix<f64>,
    x0: &DVector<f64>,
    t_end: f64,
    dt: f64,
) -> Result<LinearizationGap> {
    let eq = &model.equilibrium;
    let zero = DisturbanceSignal::Zero;
    let lin = simulate_linear(model, f, &zero, x0, t_end, dt)?;
    let init = NonlinearState::from_linear_coordinates(eq, x0)?;
    let nl = simulate_nonlinear(p, linear_feedback(f, eq), &zero, &init, t_end, dt)?;

    let n = model.n;
    let layout = &model.layout;
    let c = embed();
    let mut gap = LinearizationGap {
        output: 0.0,
        configuration: 0.0,
    };
    for (k, (xl, yn)) in lin.states.iter().zip(&nl.states).enumerate() {
        gap.output = gap.output.max((lin.outputs[k] - nl.outputs[k]).norm());
        let st = NonlinearState::from_vector(yn)?;
        let cart = layout.cart_position();
        let mut worst = (st.x - Vector2::new(xl[cart.start], xl[cart.start + 1])).norm();
        for i in 0..n {
            let rows = layout.link_tilt(i + 1);
            let xi = c * Vector2::new(xl[rows.start], xl[rows.start + 1]);
            let rest = Vector3::z() * eq.sign(i);
            worst = worst.max((st.q[i] - (rest + xi.cross(&rest))).norm());
        }
        gap.configuration = gap.configuration.max(worst);
    }
    Ok(gap)
}
