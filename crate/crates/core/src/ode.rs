//! Classical fourth-order Runge–Kutta for the falling-body state `(x, v)`.

/// State of a body moving along the vertical axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub height: f64,
    pub velocity: f64,
}

impl State {
    pub fn new(height: f64, velocity: f64) -> Self {
        Self { height, velocity }
    }

    pub fn is_finite(&self) -> bool {
        self.height.is_finite() && self.velocity.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.height.abs().max(self.velocity.abs())
    }
}

/// One RK4 step of `ẋ = v, v̇ = accel(x, v)`.
pub fn rk4_step<F>(accel: &F, s: State, h: f64) -> State
where
    F: Fn(f64, f64) -> f64,
{
    let k1x = s.velocity;
    let k1v = accel(s.height, s.velocity);
    let k2x = s.velocity + 0.5 * h * k1v;
    let k2v = accel(s.height + 0.5 * h * k1x, k2x);
    let k3x = s.velocity + 0.5 * h * k2v;
    let k3v = accel(s.height + 0.5 * h * k2x, k3x);
    let k4x = s.velocity + h * k3v;
    let k4v = accel(s.height + h * k3x, k4x);
    State {
        height: s.height + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        velocity: s.velocity + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    }
}

/// Outcome of a fixed-grid integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Integration {
    /// States at `k·dt` for every grid point reached.
    pub states: Vec<State>,
    /// Set when integration stopped early: grid index of the failing step.
    pub stopped_at: Option<usize>,
}

/// Integrates over `n_steps` grid intervals of length `dt`, each split into
/// `substeps` RK4 steps. Stops early when `stop(state)` returns true; the
/// offending state is not recorded.
pub fn integrate<F, S>(
    accel: F,
    initial: State,
    dt: f64,
    n_steps: usize,
    substeps: usize,
    stop: S,
) -> Integration
where
    F: Fn(f64, f64) -> f64,
    S: Fn(&State) -> bool,
{
    let h = dt / substeps.max(1) as f64;
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(initial);
    let mut s = initial;
    for k in 1..=n_steps {
        for _ in 0..substeps.max(1) {
            s = rk4_step(&accel, s, h);
            if stop(&s) {
                return Integration {
                    states,
                    stopped_at: Some(k),
                };
            }
        }
        states.push(s);
    }
    Integration {
        states,
        stopped_at: None,
    }
}

/// Fixed-step RK4 for a general first-order system `ẏ = f(y)`. Returns the
/// state at every grid point `k·dt`, `k = 0..=n_steps`, each interval split
/// into `substeps` steps.
pub fn integrate_system<F>(
    f: F,
    initial: &[f64],
    dt: f64,
    n_steps: usize,
    substeps: usize,
) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let h = dt / substeps.max(1) as f64;
    let axpy = |y: &[f64], k: &[f64], a: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(y, k)| y + a * k).collect()
    };
    let mut out = Vec::with_capacity(n_steps + 1);
    let mut y = initial.to_vec();
    out.push(y.clone());
    for _ in 0..n_steps {
        for _ in 0..substeps.max(1) {
            let k1 = f(&y);
            let k2 = f(&axpy(&y, &k1, 0.5 * h));
            let k3 = f(&axpy(&y, &k2, 0.5 * h));
            let k4 = f(&axpy(&y, &k3, h));
            for i in 0..y.len() {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        out.push(y.clone());
    }
    out
}
