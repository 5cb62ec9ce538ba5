use nalgebra::Vector2;

use super::ReferenceError;

/// One coordinate of a natural cubic spline (zero curvature at both ends).
#[derive(Clone, Debug)]
struct NaturalCubic {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl NaturalCubic {
    fn fit(knots: &[f64], values: &[f64]) -> Self {
        let n = knots.len();
        let mut second = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system for the interior second derivatives.
            let m = n - 2;
            let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
            let mut diag = vec![0.0; m];
            let mut upper = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for r in 0..m {
                let i = r + 1;
                diag[r] = 2.0 * (h[i - 1] + h[i]);
                upper[r] = h[i];
                rhs[r] = 6.0
                    * ((values[i + 1] - values[i]) / h[i] - (values[i] - values[i - 1]) / h[i - 1]);
            }
            // Thomas algorithm; the sub-diagonal entry of row r is h[r].
            for r in 1..m {
                let w = h[r] / diag[r - 1];
                diag[r] -= w * upper[r - 1];
                rhs[r] -= w * rhs[r - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for r in (0..m - 1).rev() {
                second[r + 1] = (rhs[r] - upper[r] * second[r + 2]) / diag[r];
            }
        }
        Self {
            knots: knots.to_vec(),
            values: values.to_vec(),
            second,
        }
    }

    fn segment(&self, t: f64) -> usize {
        let last = self.knots.len() - 2;
        self.knots.partition_point(|&k| k <= t).saturating_sub(1).min(last)
    }

    /// Value, first and second derivative at `t`; extrapolates the end segments.
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        let i = self.segment(t);
        let h = self.knots[i + 1] - self.knots[i];
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let s = t - self.knots[i];
        let b = (y1 - y0) / h - h * (2.0 * m0 + m1) / 6.0;
        let c = m0 / 2.0;
        let d = (m1 - m0) / (6.0 * h);
        (
            y0 + s * (b + s * (c + s * d)),
            b + s * (2.0 * c + 3.0 * s * d),
            2.0 * c + 6.0 * s * d,
        )
    }
}

/// Time-parameterized planar spline through waypoints.
#[derive(Clone, Debug)]
pub struct WaypointSpline {
    x: NaturalCubic,
    y: NaturalCubic,
}

/// Derivatives of the reference position at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathState {
    pub position: Vector2<f64>,
    pub velocity: Vector2<f64>,
    pub acceleration: Vector2<f64>,
}

const GAUSS_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];
const TIMING_ITERATIONS: usize = 50;

impl WaypointSpline {
    /// Fits the spline so that every segment is traversed at `avg_speed` on
    /// average. Knot times start from chord lengths and are refined until
    /// each segment duration equals its arc length over `avg_speed`.
    pub fn fit(waypoints: &[Vector2<f64>], avg_speed: f64) -> Result<Self, ReferenceError> {
        if waypoints.len() < 2 {
            return Err(ReferenceError::TooFewWaypoints(waypoints.len()));
        }
        if !(avg_speed.is_finite() && avg_speed > 0.0) {
            return Err(ReferenceError::NonPositiveSpeed(avg_speed));
        }
        if let Some(i) = waypoints.windows(2).position(|w| (w[1] - w[0]).norm() == 0.0) {
            return Err(ReferenceError::DuplicateWaypoint(i + 1));
        }
        let xs: Vec<f64> = waypoints.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = waypoints.iter().map(|p| p.y).collect();
        let mut durations: Vec<f64> = waypoints
            .windows(2)
            .map(|w| (w[1] - w[0]).norm() / avg_speed)
            .collect();
        let mut spline = Self::with_durations(&xs, &ys, &durations);
        for _ in 0..TIMING_ITERATIONS {
            let updated: Vec<f64> = (0..durations.len())
                .map(|i| spline.segment_length(i) / avg_speed)
                .collect();
            let change = updated
                .iter()
                .zip(&durations)
                .map(|(a, b)| ((a - b) / b).abs())
                .fold(0.0, f64::max);
            durations = updated;
            spline = Self::with_durations(&xs, &ys, &durations);
            if change < 1e-13 {
                break;
            }
        }
        Ok(spline)
    }

    fn with_durations(xs: &[f64], ys: &[f64], durations: &[f64]) -> Self {
        let mut knots = Vec::with_capacity(xs.len());
        knots.push(0.0);
        for d in durations {
            knots.push(knots.last().unwrap() + d);
        }
        Self {
            x: NaturalCubic::fit(&knots, xs),
            y: NaturalCubic::fit(&knots, ys),
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.x.knots
    }

    pub fn duration(&self) -> f64 {
        *self.x.knots.last().unwrap()
    }

    pub fn eval(&self, t: f64) -> PathState {
        let (x, dx, ddx) = self.x.eval(t);
        let (y, dy, ddy) = self.y.eval(t);
        PathState {
            position: Vector2::new(x, y),
            velocity: Vector2::new(dx, dy),
            acceleration: Vector2::new(ddx, ddy),
        }
    }

    /// Arc length of segment `i` by composite 5-point Gauss-Legendre.
    pub fn segment_length(&self, i: usize) -> f64 {
        const PIECES: usize = 8;
        let (t0, t1) = (self.x.knots[i], self.x.knots[i + 1]);
        let h = (t1 - t0) / PIECES as f64;
        let mut total = 0.0;
        for piece in 0..PIECES {
            let mid = t0 + h * (piece as f64 + 0.5);
            for (node, weight) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                let t = mid + node * h / 2.0;
                total += weight * h / 2.0 * self.eval(t).velocity.norm();
            }
        }
        total
    }
}
