//! Vector-valued linear fluid network `dq/dt = B u + alpha` with allocation
//! constraints `C u <= 1`, `u >= 0`.

use alloc::vec;
use alloc::vec::Vec;

use crate::numeric::{linear_crossing, NeumaierSum};

/// Slack on `C u <= 1` and `u >= 0` before a row counts as violated.
const ALLOCATION_TOL: f64 = 1e-12;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, FluidError> {
        if data.len() != rows * cols {
            return Err(FluidError::Dimension {
                what: "matrix data",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self, FluidError> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(FluidError::Dimension {
                    what: "matrix row",
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `out = self * x`. Lengths must already agree.
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.rows) {
            *o = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FluidError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid fluid model: {0}")]
    InvalidModel(&'static str),
    #[error("allocation violates constraints at t = {t}")]
    ConstraintViolation { t: f64, report: AllocationViolation },
    #[error("step size and horizon must be finite and positive")]
    BadSettings,
}

/// Rows of `C u <= 1` that fail, and components of `u` that are negative.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AllocationViolation {
    pub overloaded_rows: Vec<usize>,
    pub negative_components: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AllocationError {
    #[error("allocation has {got} components, constituency matrix has {expected} columns")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("allocation violates rows {:?}, negative components {:?}", .0.overloaded_rows, .0.negative_components)]
    Violation(AllocationViolation),
}

/// Checks `u >= 0` and `C u <= 1` componentwise.
pub fn validate_allocation(c: &Matrix, u: &[f64]) -> Result<(), AllocationError> {
    if u.len() != c.cols() {
        return Err(AllocationError::DimensionMismatch {
            expected: c.cols(),
            got: u.len(),
        });
    }
    let negative_components: Vec<usize> = u
        .iter()
        .enumerate()
        .filter(|(_, &x)| !(x >= -ALLOCATION_TOL))
        .map(|(i, _)| i)
        .collect();
    let overloaded_rows: Vec<usize> = (0..c.rows())
        .filter(|&i| {
            let load: f64 = c.row(i).iter().zip(u).map(|(a, b)| a * b).sum();
            !(load <= 1.0 + ALLOCATION_TOL)
        })
        .collect();
    if negative_components.is_empty() && overloaded_rows.is_empty() {
        Ok(())
    } else {
        Err(AllocationError::Violation(AllocationViolation {
            overloaded_rows,
            negative_components,
        }))
    }
}

/// Linear fluid network: `N` buffers, `N_u` activities, `N_m` resources.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FluidNetworkModel {
    /// `N x N_u` effects of each activity on each buffer.
    effects: Matrix,
    /// `N_m x N_u` 0/1 constituency matrix.
    constituency: Matrix,
    arrival: Vec<f64>,
    upper_bounds: Option<Vec<f64>>,
}

impl FluidNetworkModel {
    pub fn new(
        effects: Matrix,
        constituency: Matrix,
        arrival: Vec<f64>,
        upper_bounds: Option<Vec<f64>>,
    ) -> Result<Self, FluidError> {
        if arrival.len() != effects.rows() {
            return Err(FluidError::Dimension {
                what: "arrival vector",
                expected: effects.rows(),
                got: arrival.len(),
            });
        }
        if constituency.cols() != effects.cols() {
            return Err(FluidError::Dimension {
                what: "constituency columns",
                expected: effects.cols(),
                got: constituency.cols(),
            });
        }
        if effects.data.iter().chain(&arrival).any(|x| !x.is_finite()) {
            return Err(FluidError::InvalidModel("non-finite effects or arrivals"));
        }
        if constituency.data.iter().any(|&x| x != 0.0 && x != 1.0) {
            return Err(FluidError::InvalidModel(
                "constituency entries must be 0 or 1",
            ));
        }
        if (0..constituency.rows()).any(|i| constituency.row(i).iter().sum::<f64>() < 1.0) {
            return Err(FluidError::InvalidModel(
                "constituency row without activity",
            ));
        }
        if let Some(bounds) = &upper_bounds {
            if bounds.len() != arrival.len() {
                return Err(FluidError::Dimension {
                    what: "upper bounds",
                    expected: arrival.len(),
                    got: bounds.len(),
                });
            }
            if bounds.iter().any(|&b| !(b > 0.0)) {
                return Err(FluidError::InvalidModel("upper bounds must be > 0"));
            }
        }
        Ok(Self {
            effects,
            constituency,
            arrival,
            upper_bounds,
        })
    }

    /// One buffer served at rate `mu` by one activity, arrivals at `alpha`.
    pub fn single_server(mu: f64, alpha: f64) -> Result<Self, FluidError> {
        Self::new(
            Matrix::from_rows(&[&[-mu]])?,
            Matrix::identity(1),
            vec![alpha],
            None,
        )
    }

    pub fn buffers(&self) -> usize {
        self.effects.rows()
    }

    pub fn activities(&self) -> usize {
        self.effects.cols()
    }

    pub fn effects(&self) -> &Matrix {
        &self.effects
    }

    pub fn constituency(&self) -> &Matrix {
        &self.constituency
    }

    pub fn arrival(&self) -> &[f64] {
        &self.arrival
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FluidOutcome {
    HorizonReached,
    /// Buffer `component` exceeded its upper bound at time `t`.
    Overflow {
        t: f64,
        component: usize,
    },
}

/// Sampled fluid trajectory with cumulative allocation `z(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub cumulative: Vec<Vec<f64>>,
    pub outcome: FluidOutcome,
}

impl FluidTrajectory {
    /// First time every buffer is at most `tol`, interpolated linearly.
    pub fn drain_time(&self, tol: f64) -> Option<f64> {
        let level = |q: &[f64]| q.iter().copied().fold(0.0, f64::max) - tol;
        let mut prev: Option<(f64, f64)> = None;
        for (t, q) in self.times.iter().zip(&self.states) {
            let g = level(q);
            if g <= 0.0 {
                return Some(match prev {
                    Some((t0, g0)) => linear_crossing(t0, g0, *t, g),
                    None => *t,
                });
            }
            prev = Some((*t, g));
        }
        None
    }

    pub fn final_cumulative(&self) -> &[f64] {
        self.cumulative.last().map_or(&[], |z| z.as_slice())
    }
}

/// Integrates `dq/dt = B u + alpha` on `[0, t_max]`, clamping each buffer at
/// zero. `allocation(t, q, u)` writes the control held over the next step.
pub fn simulate_fluid<F>(
    model: &FluidNetworkModel,
    q0: &[f64],
    mut allocation: F,
    t_max: f64,
    dt: f64,
) -> Result<FluidTrajectory, FluidError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if !(dt.is_finite() && dt > 0.0 && t_max.is_finite() && t_max > 0.0) {
        return Err(FluidError::BadSettings);
    }
    let n = model.buffers();
    if q0.len() != n {
        return Err(FluidError::Dimension {
            what: "initial state",
            expected: n,
            got: q0.len(),
        });
    }
    if q0.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(FluidError::InvalidModel(
            "initial state must be finite and >= 0",
        ));
    }

    let mut q = q0.to_vec();
    let mut u = vec![0.0; model.activities()];
    let mut drift = vec![0.0; n];
    let mut z = vec![NeumaierSum::new(); model.activities()];

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut cumulative = Vec::new();
    let mut step: u64 = 0;
    let mut t = 0.0;

    let outcome = loop {
        times.push(t);
        states.push(q.clone());
        cumulative.push(z.iter().map(NeumaierSum::value).collect());

        if let Some(bounds) = &model.upper_bounds {
            if let Some(i) = q.iter().zip(bounds).position(|(x, b)| x > b) {
                break FluidOutcome::Overflow { t, component: i };
            }
        }
        if t >= t_max {
            break FluidOutcome::HorizonReached;
        }

        u.iter_mut().for_each(|x| *x = 0.0);
        allocation(t, &q, &mut u);
        match validate_allocation(&model.constituency, &u) {
            Ok(()) => {}
            Err(AllocationError::Violation(report)) => {
                return Err(FluidError::ConstraintViolation { t, report })
            }
            Err(AllocationError::DimensionMismatch { expected, got }) => {
                return Err(FluidError::Dimension {
                    what: "allocation",
                    expected,
                    got,
                })
            }
        }

        step += 1;
        let t_next = (step as f64 * dt).min(t_max);
        let h = t_next - t;
        model.effects.mul_vec_into(&u, &mut drift);
        for ((x, d), a) in q.iter_mut().zip(&drift).zip(&model.arrival) {
            *x = (*x + (d + a) * h).max(0.0);
        }
        for (acc, ui) in z.iter_mut().zip(&u) {
            acc.add(ui * h);
        }
        t = t_next;
    };

    Ok(FluidTrajectory {
        times,
        states,
        cumulative,
        outcome,
    })
}
