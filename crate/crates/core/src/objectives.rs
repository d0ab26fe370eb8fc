//! Closed-form benchmark objectives with known maxima.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::domain::Domain;
use crate::error::{Error, Result};

/// `f(x) = cos(3x) - x^2/9 + x/6` on `[-3, 3]`.
pub fn example_function(x: f64) -> f64 {
    (3.0 * x).cos() - x * x / 9.0 + x / 6.0
}

/// The Branin function negated, to be maximized on `[-5, 10] x [0, 15]`.
pub fn branin_negative(x1: f64, x2: f64) -> f64 {
    let b = x2 - 51.0 * x1 * x1 / (40.0 * PI * PI) + 5.0 * x1 / PI - 6.0;
    -b * b - 10.0 * (1.0 - 1.0 / (8.0 * PI)) * x1.cos() - 10.0
}

/// Maximum of the negated Branin function, attained at three points.
pub const BRANIN_MAX: f64 = -5.0 / (4.0 * PI);

pub fn branin_maximizers() -> [[f64; 2]; 3] {
    [
        [-PI, 491.0 / 40.0],
        [PI, 91.0 / 40.0],
        [3.0 * PI, 99.0 / 40.0],
    ]
}

/// Maximizer and maximum of [`example_function`] on `[-3, 3]`: a scan at
/// `1e-4` resolution followed by golden-section refinement around the best
/// grid point.
pub fn example_maximum() -> (f64, f64) {
    static CELL: OnceLock<(f64, f64)> = OnceLock::new();
    *CELL.get_or_init(|| {
        let (lo, h) = (-3.0, 1e-4);
        let n = 60_000;
        let (mut best_x, mut best_f) = (lo, example_function(lo));
        for i in 1..=n {
            let x = lo + h * i as f64;
            let f = example_function(x);
            if f > best_f {
                best_x = x;
                best_f = f;
            }
        }
        let x = golden_section_max(
            example_function,
            (best_x - h).max(-3.0),
            (best_x + h).min(3.0),
        );
        let f = example_function(x);
        if f > best_f {
            (x, f)
        } else {
            (best_x, best_f)
        }
    })
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    for _ in 0..200 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - ratio * (b - a);
        d = a + ratio * (b - a);
        if (b - a).abs() < 1e-15 {
            break;
        }
    }
    0.5 * (a + b)
}

type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// An objective with a known maximum value and maximizer set.
#[derive(Clone)]
pub struct BenchObjective {
    pub name: String,
    pub domain: Domain,
    pub f_star: f64,
    pub optimizers: Vec<Vec<f64>>,
    evaluator: Evaluator,
}

impl fmt::Debug for BenchObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BenchObjective")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("f_star", &self.f_star)
            .field("optimizers", &self.optimizers)
            .finish()
    }
}

impl BenchObjective {
    pub fn new(
        name: impl Into<String>,
        domain: Domain,
        f_star: f64,
        optimizers: Vec<Vec<f64>>,
        evaluator: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            domain,
            f_star,
            optimizers,
            evaluator: Arc::new(evaluator),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        (self.evaluator)(x)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Every listed optimizer must reach `f_star` within `1e-9`.
    pub fn self_check(&self) -> Result<()> {
        for x in &self.optimizers {
            let v = self.evaluate(x);
            if (v - self.f_star).abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "objective {}: optimizer {:?} gives {v}, expected {}",
                    self.name, x, self.f_star
                )));
            }
        }
        Ok(())
    }

    pub fn constant(domain: Domain, value: f64) -> Self {
        let centre: Vec<f64> = domain
            .lower()
            .iter()
            .zip(domain.upper())
            .map(|(l, u)| 0.5 * (l + u))
            .collect();
        Self::new("constant", domain, value, vec![centre], move |_| value)
    }
}

pub fn example_objective() -> BenchObjective {
    let (x, f) = example_maximum();
    BenchObjective::new(
        "example",
        Domain::interval(-3.0, 3.0).expect("valid"),
        f,
        vec![vec![x]],
        |x| example_function(x[0]),
    )
}

pub fn branin_objective() -> BenchObjective {
    BenchObjective::new(
        "branin",
        Domain::new(vec![-5.0, 0.0], vec![10.0, 15.0]).expect("valid"),
        BRANIN_MAX,
        branin_maximizers().iter().map(|p| p.to_vec()).collect(),
        |x| branin_negative(x[0], x[1]),
    )
}
