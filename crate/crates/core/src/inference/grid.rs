//! Parameter grids for test inversion.

use crate::error::{Error, Result};
use crate::model::Theta;

/// Values taken by one coordinate of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis(pub Vec<f64>);

impl Axis {
    pub fn point(v: f64) -> Self {
        Axis(vec![v])
    }

    /// `steps` equally spaced values from `lo` to `hi` inclusive.
    pub fn linspace(lo: f64, hi: f64, steps: usize) -> Result<Self> {
        match steps {
            0 => Err(Error::InvalidInput(
                "grid axis needs at least one step".into(),
            )),
            1 if lo == hi => Ok(Axis(vec![lo])),
            1 => Err(Error::InvalidInput(format!(
                "one-step axis needs lo == hi, got {lo}:{hi}"
            ))),
            _ => Ok(Axis(
                (0..steps)
                    .map(|t| lo + (hi - lo) * t as f64 / (steps - 1) as f64)
                    .collect(),
            )),
        }
    }

    /// Parses `"v"` or `"lo:hi:steps"`.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
        let num = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Config(format!("bad number {s:?} in grid axis {spec:?}")))
        };
        match parts.as_slice() {
            [v] => Ok(Axis::point(num(v)?)),
            [lo, hi, steps] => {
                let steps = steps
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad step count in grid axis {spec:?}")))?;
                Axis::linspace(num(lo)?, num(hi)?, steps)
            }
            _ => Err(Error::Config(format!(
                "grid axis {spec:?} must be \"v\" or \"lo:hi:steps\""
            ))),
        }
    }
}

/// Grid points in a fixed order: coordinates `b1`, `b2`, `r0`, `r1` with the
/// last one varying fastest. Points with invalid rates are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaGrid {
    dim: usize,
    points: Vec<Theta>,
}

impl ThetaGrid {
    pub fn from_axes(b1: [Axis; 3], b2: Vec<Axis>, r0: Axis, r1: Axis) -> Result<Self> {
        let dim = b2.len();
        let mut axes: Vec<&Axis> = b1.iter().collect();
        axes.extend(&b2);
        axes.push(&r0);
        axes.push(&r1);
        let total: usize = axes.iter().map(|a| a.0.len()).product();
        let mut points = Vec::new();
        let mut coord = vec![0.0; axes.len()];
        for flat in 0..total {
            let mut rest = flat;
            for (k, axis) in axes.iter().enumerate().rev() {
                coord[k] = axis.0[rest % axis.0.len()];
                rest /= axis.0.len();
            }
            let (r0, r1) = (coord[3 + dim], coord[4 + dim]);
            if let Ok(theta) = Theta::new(
                [coord[0], coord[1], coord[2]],
                coord[3..3 + dim].to_vec(),
                r0,
                r1,
            ) {
                points.push(theta);
            }
        }
        Self::from_points(dim, points)
    }

    pub fn from_points(dim: usize, points: Vec<Theta>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput(
                "parameter grid has no admissible points".into(),
            ));
        }
        if points.iter().any(|t| t.b2.len() != dim) {
            return Err(Error::Dimension("grid points disagree in b2 length".into()));
        }
        Ok(Self { dim, points })
    }

    /// Length of `b2`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Theta] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
