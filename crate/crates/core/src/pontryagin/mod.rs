//! Solvability geometry for the game.
//!
//! In matrix form the game reads `q' = A q + w - u` with
//! `A = [[0, k], [0, 0]]`, the adversarial input `w = (alpha, v)` ranging over
//! `[0, alpha_max] x [0, nu]` and the defender's `u` over
//! `{u >= 0, u1 + u2 <= mu}`. The set of control surpluses that work against
//! every `w` is the triangle
//!
//! ```text
//! W = {x >= 0 : x1 + x2 <= eps},   eps = mu - nu - alpha_max
//! ```
//!
//! and the Pontryagin map is `omega(t) = e^{At} W`. The state can be steered
//! to the origin by time `T` (ignoring the queue capacity) if
//! `e^{AT} q0` lies in the set integral of `omega` over `[0, T]`. That set is
//! convex, so membership is tested through its support function, which is
//! the time integral of the support function of `omega`.

mod polytope;

use alloc::vec::Vec;

pub use polytope::{GeometryError, Mat2, Polytope2, Vec2};

use crate::model::{GameParams, GameState};
use crate::numeric::NeumaierSum;

pub const DEFAULT_N_DIRS: usize = 256;
pub const DEFAULT_N_QUAD: usize = 4;
/// Relative slack on the membership test: `tol = MEMBERSHIP_TOL * (1 + |x|)`.
pub const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum PontryaginError {
    #[error("condition 1 fails: mu - nu - alpha_max = {epsilon} is not positive")]
    Condition1Violated { epsilon: f64 },
    #[error("quadrature needs at least 2 nodes per interval, got {0}")]
    TooFewQuadNodes(usize),
    #[error("direction grid needs at least 8 directions, got {0}")]
    TooFewDirections(usize),
    #[error("time must be finite and >= 0, got {0}")]
    BadTime(f64),
    #[error("capture search tolerance must be finite and > 0")]
    BadTolerance,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn require_condition1(params: &GameParams) -> Result<f64, PontryaginError> {
    let epsilon = params.epsilon();
    if epsilon > 0.0 {
        Ok(epsilon)
    } else {
        Err(PontryaginError::Condition1Violated { epsilon })
    }
}

/// Unit directions at angles `2 pi i / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionGrid {
    dirs: Vec<Vec2>,
}

impl DirectionGrid {
    pub fn new(n_dirs: usize) -> Result<Self, PontryaginError> {
        if n_dirs < 8 {
            return Err(PontryaginError::TooFewDirections(n_dirs));
        }
        let dirs = (0..n_dirs)
            .map(|i| {
                let angle = core::f64::consts::TAU * i as f64 / n_dirs as f64;
                let (s, c) = libm::sincos(angle);
                Vec2::new(c, s)
            })
            .collect();
        Ok(Self { dirs })
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn directions(&self) -> &[Vec2] {
        &self.dirs
    }
}

impl Default for DirectionGrid {
    fn default() -> Self {
        Self::new(DEFAULT_N_DIRS).expect("default grid is large enough")
    }
}

/// `co{(0,0), (eps,0), (0,eps)}`: a point when `eps = 0`, empty when
/// `eps < 0`.
pub fn control_deficit_polytope(params: &GameParams) -> Polytope2 {
    let eps = params.epsilon();
    if eps < 0.0 {
        Polytope2::empty()
    } else {
        Polytope2::hull(&[Vec2::ZERO, Vec2::new(eps, 0.0), Vec2::new(0.0, eps)])
    }
}

/// `e^{At} = I + A t`; `A` is nilpotent.
pub fn matrix_exp_at(params: &GameParams, t: f64) -> Mat2 {
    Mat2([[1.0, params.k * t], [0.0, 1.0]])
}

/// `omega(t) = co{(0,0), (eps,0), (k t eps, eps)}`.
pub fn pontryagin_map(t: f64, params: &GameParams) -> Polytope2 {
    let eps = params.epsilon();
    if eps < 0.0 {
        return Polytope2::empty();
    }
    Polytope2::hull(&[
        Vec2::ZERO,
        Vec2::new(eps, 0.0),
        Vec2::new(params.k * t * eps, eps),
    ])
}

/// `mu > nu + alpha_max`.
pub fn condition1(params: &GameParams) -> bool {
    params.mu > params.nu + params.alpha_max
}

/// `q1_max - q1(0) >= k / (2 eps) * q2(0)^2`, evaluated as
/// `q1(0) + k q2(0)^2 / (2 eps) <= q1_max` so that a capacity set to the
/// peak bound passes exactly.
pub fn condition2(params: &GameParams, q0: &GameState) -> Result<bool, PontryaginError> {
    let eps = require_condition1(params)?;
    Ok(q0.q1 + 0.5 * params.k * q0.q2 * q0.q2 / eps <= params.q1_max)
}

/// Support function of `poly` in `direction`.
pub fn support(poly: &Polytope2, direction: Vec2) -> Result<f64, PontryaginError> {
    Ok(poly.support(direction)?)
}

/// Support of the set integral of `omega` over `[0, t_end]` in `direction`:
/// `int_0^T h_omega(tau)(p) dtau`.
///
/// The integrand is the maximum of three functions linear in `tau` (one per
/// vertex), so it is integrated piecewise between their crossings with an
/// `n_quad`-node trapezoid rule, which is exact on each piece.
pub fn aumann_integral_support(
    t_end: f64,
    direction: Vec2,
    params: &GameParams,
    n_quad: usize,
) -> Result<f64, PontryaginError> {
    if n_quad < 2 {
        return Err(PontryaginError::TooFewQuadNodes(n_quad));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(PontryaginError::BadTime(t_end));
    }
    let eps = require_condition1(params)?;
    if t_end == 0.0 {
        return Ok(0.0);
    }

    // <p, vertex(tau)> = offset + slope * tau for each vertex of omega(tau).
    let p = direction;
    let lines = [
        (0.0, 0.0),
        (p.x * eps, 0.0),
        (p.y * eps, p.x * params.k * eps),
    ];
    let mut knots: Vec<f64> = Vec::with_capacity(5);
    knots.push(0.0);
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let (ci, di) = lines[i];
            let (cj, dj) = lines[j];
            if di != dj {
                let tau = (cj - ci) / (di - dj);
                if tau > 0.0 && tau < t_end {
                    knots.push(tau);
                }
            }
        }
    }
    knots.push(t_end);
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let mut total = NeumaierSum::new();
    let panels = (n_quad - 1) as f64;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let h = (b - a) / panels;
        for i in 0..n_quad {
            let tau = if i == n_quad - 1 { b } else { a + i as f64 * h };
            let weight = if i == 0 || i == n_quad - 1 { 0.5 } else { 1.0 };
            total.add(weight * h * pontryagin_map(tau, params).support(p)?);
        }
    }
    Ok(total.value())
}

/// `e^{AT} q0 = (q1 + k T q2, q2)`.
pub fn propagated_state(t_end: f64, q0: &GameState, params: &GameParams) -> Vec2 {
    matrix_exp_at(params, t_end).apply(Vec2::new(q0.q1, q0.q2))
}

/// Largest violation `<p, e^{AT} q0> - int h(p)` over the grid. Non-positive
/// means the propagated state lies inside the sampled outer approximation.
pub fn nikolsky_margin(
    t_end: f64,
    q0: &GameState,
    params: &GameParams,
    grid: &DirectionGrid,
    n_quad: usize,
) -> Result<f64, PontryaginError> {
    let x = propagated_state(t_end, q0, params);
    let mut worst = f64::NEG_INFINITY;
    for &p in grid.directions() {
        let gap = p.dot(x) - aumann_integral_support(t_end, p, params, n_quad)?;
        worst = worst.max(gap);
    }
    Ok(worst)
}

/// Whether `e^{AT} q0` lies in the set integral of `omega` over `[0, T]`,
/// tested on every grid direction with slack `1e-8 (1 + |x|)`.
pub fn nikolsky_membership(
    t_end: f64,
    q0: &GameState,
    params: &GameParams,
    grid: &DirectionGrid,
    n_quad: usize,
) -> Result<bool, PontryaginError> {
    let x = propagated_state(t_end, q0, params);
    let tol = MEMBERSHIP_TOL * (1.0 + x.norm());
    Ok(nikolsky_margin(t_end, q0, params, grid, n_quad)? <= tol)
}

/// Settings for [`min_capture_time`].
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureSearch {
    pub grid: DirectionGrid,
    pub n_quad: usize,
    /// Bisection tolerance; the scan starts at this value.
    pub tol_t: f64,
    /// Largest time tried. Defaults to `1e6 * tol_t`.
    pub horizon: f64,
}

impl CaptureSearch {
    pub fn new(grid: DirectionGrid, n_quad: usize, tol_t: f64) -> Self {
        Self {
            grid,
            n_quad,
            tol_t,
            horizon: 1e6 * tol_t,
        }
    }
}

impl Default for CaptureSearch {
    fn default() -> Self {
        Self::new(DirectionGrid::default(), DEFAULT_N_QUAD, 1e-4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CaptureTime {
    /// First membership time, `None` if none up to the horizon.
    pub time: Option<f64>,
    /// `false` if a scan point after the first membership failed the test.
    pub monotone: bool,
    /// Membership evaluations performed.
    pub evaluations: usize,
}

/// Smallest `T` at which the membership test holds.
///
/// Scans `T = tol_t * 2^j` up to the horizon, bisects the first bracket down
/// to `tol_t`, and keeps testing the remaining scan points to flag any
/// non-monotone behaviour. The returned time is the upper end of the final
/// bracket, so it always satisfies the test.
pub fn min_capture_time(
    q0: &GameState,
    params: &GameParams,
    search: &CaptureSearch,
) -> Result<CaptureTime, PontryaginError> {
    require_condition1(params)?;
    if !(search.tol_t.is_finite() && search.tol_t > 0.0) {
        return Err(PontryaginError::BadTolerance);
    }
    let mut evaluations = 0usize;
    let mut member = |t: f64| {
        evaluations += 1;
        nikolsky_membership(t, q0, params, &search.grid, search.n_quad)
    };

    if member(0.0)? {
        return Ok(CaptureTime {
            time: Some(0.0),
            monotone: true,
            evaluations: 1,
        });
    }

    let mut lo = 0.0;
    let mut bracket = None;
    let mut t = search.tol_t;
    while t <= search.horizon {
        if member(t)? {
            bracket = Some((lo, t));
            break;
        }
        lo = t;
        t *= 2.0;
    }
    let Some((mut lo, mut hi)) = bracket else {
        return Ok(CaptureTime {
            time: None,
            monotone: true,
            evaluations,
        });
    };

    let mut monotone = true;
    let mut later = hi * 2.0;
    while later <= search.horizon {
        if !member(later)? {
            monotone = false;
        }
        later *= 2.0;
    }

    while hi - lo > search.tol_t {
        let mid = 0.5 * (lo + hi);
        if member(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    Ok(CaptureTime {
        time: Some(hi),
        monotone,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(mu: f64, nu: f64, alpha_max: f64, k: f64) -> GameParams {
        GameParams::new(mu, nu, alpha_max, k, 5.0).unwrap()
    }

    fn tri(eps: f64) -> [Vec2; 3] {
        [Vec2::ZERO, Vec2::new(eps, 0.0), Vec2::new(0.0, eps)]
    }

    #[test]
    fn deficit_triangle() {
        assert_eq!(
            control_deficit_polytope(&params(3.0, 1.0, 1.0, 1.0)).vertices(),
            &tri(1.0)
        );
        assert_eq!(
            control_deficit_polytope(&params(5.0, 2.0, 2.0, 1.0)).vertices(),
            &tri(1.0)
        );
        assert_eq!(
            control_deficit_polytope(&params(2.0, 1.0, 1.0, 1.0)).vertices(),
            &[Vec2::ZERO]
        );
        assert!(control_deficit_polytope(&params(1.0, 1.0, 1.0, 1.0)).is_empty());
    }

    #[test]
    fn nilpotent_exponential() {
        let p = params(3.0, 1.0, 1.0, 1.0);
        assert_eq!(matrix_exp_at(&p, 2.0), Mat2([[1.0, 2.0], [0.0, 1.0]]));
        assert_eq!(matrix_exp_at(&p, 0.0), Mat2::IDENTITY);
    }

    #[test]
    fn map_vertices() {
        let p = params(3.0, 1.0, 1.0, 1.0);
        assert_eq!(pontryagin_map(0.0, &p).vertices(), &tri(1.0));
        assert_eq!(
            pontryagin_map(2.0, &p).vertices(),
            &[Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(2.0, 1.0)]
        );
        let decoupled = params(3.0, 1.0, 1.0, 0.0);
        for t in [0.0, 1.0, 17.5] {
            assert_eq!(pontryagin_map(t, &decoupled).vertices(), &tri(1.0));
        }
    }

    #[test]
    fn conditions() {
        assert!(condition1(&params(3.0, 1.0, 1.0, 1.0)));
        assert!(!condition1(&params(2.0, 1.0, 1.0, 1.0)));
        assert!(!condition1(&params(1.0, 1.0, 1.0, 1.0)));

        let p = params(3.0, 1.0, 1.0, 1.0);
        assert_eq!(condition2(&p, &GameState::initial(2.0, 2.0)), Ok(true));
        let tight = GameParams { q1_max: 3.9, ..p };
        assert_eq!(condition2(&tight, &GameState::initial(2.0, 2.0)), Ok(false));
        assert_eq!(condition2(&p, &GameState::initial(5.0, 0.0)), Ok(true));
        assert!(condition2(&params(2.0, 1.0, 1.0, 1.0), &GameState::initial(0.0, 0.0)).is_err());
    }

    #[test]
    fn integral_support_closed_forms() {
        let p = params(3.0, 1.0, 1.0, 1.0);
        let h = aumann_integral_support(2.0, Vec2::new(1.0, 0.0), &p, 2).unwrap();
        assert!((h - 2.5).abs() < 1e-12);
        let h = aumann_integral_support(3.0, Vec2::new(0.0, 1.0), &p, 2).unwrap();
        assert!((h - 3.0).abs() < 1e-12);
        assert_eq!(
            aumann_integral_support(0.0, Vec2::new(0.3, 0.7), &p, 2),
            Ok(0.0)
        );
        assert_eq!(
            aumann_integral_support(1.0, Vec2::new(1.0, 0.0), &p, 1),
            Err(PontryaginError::TooFewQuadNodes(1))
        );
    }

    #[test]
    fn membership_examples() {
        let p = params(3.0, 1.0, 1.0, 1.0);
        let grid = DirectionGrid::default();
        for t in [0.0, 0.5, 10.0] {
            assert!(nikolsky_membership(t, &GameState::initial(0.0, 0.0), &p, &grid, 4).unwrap());
        }
        assert!(!nikolsky_membership(0.1, &GameState::initial(2.0, 2.0), &p, &grid, 4).unwrap());
    }

    #[test]
    fn capture_time_at_origin_is_zero() {
        let p = params(3.0, 1.0, 1.0, 1.0);
        let r =
            min_capture_time(&GameState::initial(0.0, 0.0), &p, &CaptureSearch::default()).unwrap();
        assert_eq!(r.time, Some(0.0));
    }

    #[test]
    fn capture_time_refuses_without_condition1() {
        let p = params(2.0, 1.0, 1.0, 1.0);
        let err = min_capture_time(&GameState::initial(1.0, 1.0), &p, &CaptureSearch::default())
            .unwrap_err();
        assert_eq!(err, PontryaginError::Condition1Violated { epsilon: 0.0 });
    }

    #[test]
    fn grid_rejects_coarse() {
        assert_eq!(
            DirectionGrid::new(4),
            Err(PontryaginError::TooFewDirections(4))
        );
        let g = DirectionGrid::new(8).unwrap();
        assert!(g
            .directions()
            .iter()
            .all(|d| (d.norm() - 1.0).abs() < 1e-12));
    }
}
