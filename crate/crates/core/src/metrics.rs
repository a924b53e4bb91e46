//! Distances, the least-squares Euclidean surrogate, and the composite edge
//! cost shared by the solver, the model builder and the reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{projection_lengths_8, Point};
use crate::rng::SplitMix64;

pub fn euclidean(p: Point, q: Point) -> f64 {
    (p.x - q.x).hypot(p.y - q.y)
}

pub fn manhattan(p: Point, q: Point) -> f64 {
    (p.x - q.x).abs() + (p.y - q.y).abs()
}

/// Affine estimate of the Euclidean length from `|dx|` and `|dy|`:
///
/// `c_dx * (|dx| - mean_dx) + c_dy * (|dy| - mean_dy) + bias`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub c_dx: f64,
    pub c_dy: f64,
    pub mean_dx: f64,
    pub mean_dy: f64,
    pub bias: f64,
}

/// Coefficients reported for a normalize-then-dense network trained on a
/// private random sample. The normalization means were not published, so
/// only the slopes and bias are kept. Reference values, not used by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceCoefficients {
    pub c_dx: f64,
    pub c_dy: f64,
    pub bias: f64,
}

pub const PUBLISHED_REFERENCE: ReferenceCoefficients = ReferenceCoefficients {
    c_dx: 170.98 / 235.656533,
    c_dy: 168.928 / 235.695644,
    bias: 503.279,
};

impl RegressionModel {
    /// Unclamped affine prediction.
    pub fn predict_raw(&self, abs_dx: f64, abs_dy: f64) -> f64 {
        self.c_dx * (abs_dx - self.mean_dx) + self.c_dy * (abs_dy - self.mean_dy) + self.bias
    }

    /// Prediction clamped below at zero, so it can serve as an edge cost.
    pub fn predict(&self, abs_dx: f64, abs_dy: f64) -> f64 {
        self.predict_raw(abs_dx, abs_dy).max(0.0)
    }

    /// Constant part of the prediction: `bias - c_dx * mean_dx - c_dy * mean_dy`.
    pub fn offset(&self) -> f64 {
        self.bias - self.c_dx * self.mean_dx - self.c_dy * self.mean_dy
    }

    /// Coefficient of determination of the unclamped prediction.
    pub fn r_squared(&self, samples: &[RegressionSample]) -> f64 {
        let n = samples.len() as f64;
        let mean = samples.iter().map(|s| s.euclid).sum::<f64>() / n;
        let (mut ss_res, mut ss_tot) = (0.0, 0.0);
        for s in samples {
            let r = s.euclid - self.predict_raw(s.abs_dx, s.abs_dy);
            ss_res += r * r;
            ss_tot += (s.euclid - mean).powi(2);
        }
        1.0 - ss_res / ss_tot
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("regression model: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionSample {
    pub abs_dx: f64,
    pub abs_dy: f64,
    pub euclid: f64,
}

impl RegressionSample {
    pub fn between(p: Point, q: Point) -> Self {
        Self {
            abs_dx: (p.x - q.x).abs(),
            abs_dy: (p.y - q.y).abs(),
            euclid: euclidean(p, q),
        }
    }
}

/// `n` point pairs uniform in `[0, range]^2`. Each pair consumes four draws
/// in the order `p.x, p.y, q.x, q.y`.
pub fn draw_samples(n: usize, coord_range: f64, seed: u64) -> Vec<RegressionSample> {
    let mut rng = SplitMix64::new(seed);
    (0..n)
        .map(|_| {
            let p = Point::new(rng.uniform(0.0, coord_range), rng.uniform(0.0, coord_range));
            let q = Point::new(rng.uniform(0.0, coord_range), rng.uniform(0.0, coord_range));
            RegressionSample::between(p, q)
        })
        .collect()
}

/// Ordinary least squares on mean-centered inputs, solved through the 2x2
/// normal equations. A feature with zero variance gets coefficient 0.
pub fn fit_samples(samples: &[RegressionSample]) -> Result<RegressionModel> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no regression samples".into()));
    }
    let n = samples.len() as f64;
    let mean_dx = samples.iter().map(|s| s.abs_dx).sum::<f64>() / n;
    let mean_dy = samples.iter().map(|s| s.abs_dy).sum::<f64>() / n;
    let mean_e = samples.iter().map(|s| s.euclid).sum::<f64>() / n;

    let (mut sxx, mut syy, mut sxy, mut sxe, mut sye) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for s in samples {
        let (a, b, e) = (s.abs_dx - mean_dx, s.abs_dy - mean_dy, s.euclid - mean_e);
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
        sxe += a * e;
        sye += b * e;
    }

    let scale = sxx.max(syy);
    let tiny = 1e-12 * scale;
    let (c_dx, c_dy) = if scale <= f64::MIN_POSITIVE {
        return Err(Error::Degenerate("all regression samples are identical".into()));
    } else if sxx <= tiny {
        (0.0, sye / syy)
    } else if syy <= tiny {
        (sxe / sxx, 0.0)
    } else {
        let det = sxx * syy - sxy * sxy;
        if det <= 1e-12 * sxx * syy {
            return Err(Error::Degenerate("regression inputs are collinear".into()));
        }
        ((syy * sxe - sxy * sye) / det, (sxx * sye - sxy * sxe) / det)
    };

    Ok(RegressionModel {
        c_dx,
        c_dy,
        mean_dx,
        mean_dy,
        bias: mean_e,
    })
}

pub fn fit_regression(n_samples: usize, coord_range: f64, seed: u64) -> Result<RegressionModel> {
    if n_samples < 100 {
        return Err(Error::InvalidArgument("regression needs at least 100 samples".into()));
    }
    if !(coord_range > 0.0 && coord_range.is_finite()) {
        return Err(Error::InvalidArgument("coordinate range must be positive".into()));
    }
    fit_samples(&draw_samples(n_samples, coord_range, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveMode {
    #[default]
    Manhattan,
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveConfig {
    pub mode: ObjectiveMode,
    pub projection8: bool,
    pub projection_weight: f64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            mode: ObjectiveMode::Manhattan,
            projection8: false,
            projection_weight: 1.0,
        }
    }
}

impl ObjectiveConfig {
    pub fn manhattan() -> Self {
        Self::default()
    }

    pub fn with_projection(mut self, on: bool) -> Self {
        self.projection8 = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.projection_weight >= 0.0 && self.projection_weight.is_finite()) {
            return Err(Error::InvalidArgument("projection weight must be >= 0".into()));
        }
        Ok(())
    }
}

/// An [`ObjectiveConfig`] resolved against its regression model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeCost {
    pub cfg: ObjectiveConfig,
    pub model: Option<RegressionModel>,
}

impl EdgeCost {
    pub fn new(cfg: ObjectiveConfig, model: Option<&RegressionModel>) -> Result<Self> {
        cfg.validate()?;
        let model = match cfg.mode {
            ObjectiveMode::Manhattan => None,
            ObjectiveMode::Regression => Some(*model.ok_or(Error::MissingRegression)?),
        };
        Ok(Self { cfg, model })
    }

    pub fn manhattan() -> Self {
        Self {
            cfg: ObjectiveConfig::default(),
            model: None,
        }
    }

    /// True when the cost is plain `|dx| + |dy|`.
    pub fn is_pure_manhattan(&self) -> bool {
        self.model.is_none() && !(self.cfg.projection8 && self.cfg.projection_weight > 0.0)
    }

    pub fn cost(&self, p: Point, q: Point) -> f64 {
        let (adx, ady) = ((p.x - q.x).abs(), (p.y - q.y).abs());
        let mut c = match &self.model {
            None => adx + ady,
            Some(m) => m.predict(adx, ady),
        };
        if self.cfg.projection8 {
            let proj: f64 = projection_lengths_8(q.sub(p)).iter().sum();
            c += self.cfg.projection_weight * proj;
        }
        c
    }
}

pub fn edge_cost(
    cfg: &ObjectiveConfig,
    model: Option<&RegressionModel>,
    p: Point,
    q: Point,
) -> Result<f64> {
    Ok(EdgeCost::new(*cfg, model)?.cost(p, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn distances() {
        let o = Point::new(0.0, 0.0);
        assert_eq!(euclidean(o, Point::new(3.0, 4.0)), 5.0);
        assert_eq!(euclidean(o, o), 0.0);
        assert_abs_diff_eq!(euclidean(Point::new(1.0, 1.0), Point::new(2.0, 2.0)), 2f64.sqrt());
        assert_eq!(manhattan(o, Point::new(3.0, 4.0)), 7.0);
        assert_eq!(manhattan(o, Point::new(5.0, 0.0)), 5.0);
        assert_eq!(manhattan(o, Point::new(5.0, 0.0)), euclidean(o, Point::new(5.0, 0.0)));
        assert_eq!(manhattan(o, o), 0.0);
    }

    #[test]
    fn metric_sandwich() {
        let mut rng = SplitMix64::new(3);
        for _ in 0..10_000 {
            let p = Point::new(rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3));
            let q = Point::new(rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3));
            let (m, e) = (manhattan(p, q), euclidean(p, q));
            assert!(m >= e - 1e-9);
            assert!(e >= m / 2f64.sqrt() - 1e-9);
        }
    }

    #[test]
    fn fit_recovers_axis_slice() {
        let mut rng = SplitMix64::new(11);
        let samples: Vec<_> = (0..1000)
            .map(|_| {
                let p = Point::new(rng.uniform(0.0, 100.0), 7.0);
                let q = Point::new(rng.uniform(0.0, 100.0), 7.0);
                RegressionSample::between(p, q)
            })
            .collect();
        let m = fit_samples(&samples).unwrap();
        assert_abs_diff_eq!(m.c_dx, 1.0, epsilon = 1e-9);
        assert_eq!(m.c_dy, 0.0);
        for s in &samples {
            assert_abs_diff_eq!(m.predict_raw(s.abs_dx, 0.0), s.abs_dx, epsilon = 1e-6);
        }
    }

    #[test]
    fn fit_passes_through_means_and_residuals_are_orthogonal() {
        let samples = draw_samples(20_000, 1200.0, 8);
        let m = fit_samples(&samples).unwrap();
        let n = samples.len() as f64;
        let mean_e = samples.iter().map(|s| s.euclid).sum::<f64>() / n;
        assert_abs_diff_eq!(m.predict_raw(m.mean_dx, m.mean_dy), mean_e, epsilon = 1e-9);
        let (mut dot_x, mut dot_y) = (0.0, 0.0);
        for s in &samples {
            let r = s.euclid - m.predict_raw(s.abs_dx, s.abs_dy);
            dot_x += r * (s.abs_dx - m.mean_dx);
            dot_y += r * (s.abs_dy - m.mean_dy);
        }
        // Scale: n * range^2.
        let scale = n * 1200.0 * 1200.0;
        assert!(dot_x.abs() < 1e-6 * scale, "{dot_x}");
        assert!(dot_y.abs() < 1e-6 * scale, "{dot_y}");
    }

    #[test]
    fn fit_is_deterministic_and_guarded() {
        assert_eq!(fit_regression(500, 100.0, 4).unwrap(), fit_regression(500, 100.0, 4).unwrap());
        assert!(fit_regression(99, 100.0, 4).is_err());
        let same = vec![
            RegressionSample {
                abs_dx: 1.0,
                abs_dy: 2.0,
                euclid: 5f64.sqrt()
            };
            200
        ];
        assert!(matches!(fit_samples(&same), Err(Error::Degenerate(_))));
    }

    #[test]
    fn published_reference_ratios() {
        assert_abs_diff_eq!(PUBLISHED_REFERENCE.c_dx, 0.7256, epsilon = 1e-4);
        assert_abs_diff_eq!(PUBLISHED_REFERENCE.c_dy, 0.7167, epsilon = 1e-4);
    }

    #[test]
    fn edge_costs() {
        let o = Point::new(0.0, 0.0);
        let manh = ObjectiveConfig::default();
        assert_eq!(edge_cost(&manh, None, o, Point::new(3.0, 4.0)).unwrap(), 7.0);

        let proj = manh.with_projection(true);
        // 1 + sum_k |cos(k pi / 8)| = 1 + cot(pi / 16)
        assert_abs_diff_eq!(
            edge_cost(&proj, None, o, Point::new(1.0, 0.0)).unwrap(),
            6.027_339_492_125_848,
            epsilon = 1e-12
        );

        let reg = ObjectiveConfig {
            mode: ObjectiveMode::Regression,
            ..manh
        };
        assert_eq!(edge_cost(&reg, None, o, o), Err(Error::MissingRegression));
        let unit = RegressionModel {
            c_dx: 1.0,
            c_dy: 1.0,
            mean_dx: 0.0,
            mean_dy: 0.0,
            bias: 0.0,
        };
        let mut rng = SplitMix64::new(1);
        for _ in 0..100 {
            let p = Point::new(rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0));
            let q = Point::new(rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0));
            assert_eq!(
                edge_cost(&reg, Some(&unit), p, q).unwrap(),
                edge_cost(&manh, None, p, q).unwrap()
            );
        }
    }

    #[test]
    fn regression_clamped_at_zero() {
        let m = RegressionModel {
            c_dx: 0.7,
            c_dy: 0.7,
            mean_dx: 400.0,
            mean_dy: 400.0,
            bias: 100.0,
        };
        assert!(m.predict_raw(0.0, 0.0) < 0.0);
        assert_eq!(m.predict(0.0, 0.0), 0.0);
    }

    #[test]
    fn edge_cost_symmetric() {
        let model = fit_regression(1000, 500.0, 2).unwrap();
        let mut rng = SplitMix64::new(17);
        for (mode, proj) in [
            (ObjectiveMode::Manhattan, false),
            (ObjectiveMode::Manhattan, true),
            (ObjectiveMode::Regression, false),
            (ObjectiveMode::Regression, true),
        ] {
            let cfg = ObjectiveConfig {
                mode,
                projection8: proj,
                projection_weight: 0.5,
            };
            let ec = EdgeCost::new(cfg, Some(&model)).unwrap();
            for _ in 0..500 {
                let p = Point::new(rng.uniform(0.0, 500.0), rng.uniform(0.0, 500.0));
                let q = Point::new(rng.uniform(0.0, 500.0), rng.uniform(0.0, 500.0));
                assert_abs_diff_eq!(ec.cost(p, q), ec.cost(q, p), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn model_json_has_five_fields() {
        let m = fit_regression(200, 10.0, 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(v.as_object().unwrap().len(), 5);
        assert_eq!(RegressionModel::from_json(&m.to_json()).unwrap(), m);
    }
}
