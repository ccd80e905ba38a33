//! Regular rectangular grids.
//!
//! A grid is stored as an anchor point plus per-axis spacing and index ranges,
//! so the anchor (typically a candidate minimum) is hit exactly rather than
//! reconstructed as `lo + i·h` with rounding.

use crate::error::{Error, Result};
use crate::expr::BoxDomain;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    anchor: Vec<f64>,
    step: Vec<f64>,
    below: Vec<usize>,
    above: Vec<usize>,
    /// Sign tolerance ζ used when classifying kinks on this grid.
    pub zeta: f64,
}

impl GridSpec {
    /// `steps[i]` evenly spaced points from `lo[i]` to `hi[i]` inclusive.
    pub fn uniform(lo: &[f64], hi: &[f64], steps: &[usize]) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != steps.len() || lo.is_empty() {
            return Err(Error::Argument(
                "grid bounds and step counts must have equal, non-zero length".into(),
            ));
        }
        if let Some(&s) = steps.iter().find(|&&s| s < 2) {
            return Err(Error::Argument(format!(
                "grid needs at least 2 points per axis, got {s}"
            )));
        }
        let step = lo
            .iter()
            .zip(hi)
            .zip(steps)
            .map(|((a, b), s)| (b - a) / (*s - 1) as f64)
            .collect::<Vec<_>>();
        if step.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::Argument(
                "grid box must have positive width on every axis".into(),
            ));
        }
        Ok(GridSpec {
            anchor: lo.to_vec(),
            step,
            below: vec![0; lo.len()],
            above: steps.iter().map(|s| s - 1).collect(),
            zeta: 0.0,
        })
    }

    /// Grid covering a whole box with `steps` points per axis.
    pub fn over_box(domain: &BoxDomain, steps: usize) -> Result<Self> {
        GridSpec::uniform(domain.lo(), domain.hi(), &vec![steps; domain.dim()])
    }

    /// Grid of spacing `h` through `center`, extending `radius` in every axis but
    /// truncated to the box.
    pub fn around(center: &[f64], radius: f64, h: f64, domain: &BoxDomain) -> Result<Self> {
        if !(h > 0.0 && radius > 0.0) {
            return Err(Error::Argument(format!(
                "grid needs h > 0 and radius > 0, got h={h}, radius={radius}"
            )));
        }
        domain.check(center)?;
        let n = center.len();
        let reach = (radius / h + 1e-9).floor() as usize;
        let mut below = vec![0; n];
        let mut above = vec![0; n];
        for i in 0..n {
            let room_lo = ((center[i] - domain.lo()[i]) / h + 1e-9).floor() as usize;
            let room_hi = ((domain.hi()[i] - center[i]) / h + 1e-9).floor() as usize;
            below[i] = reach.min(room_lo);
            above[i] = reach.min(room_hi);
        }
        if below.iter().zip(&above).any(|(b, a)| b + a == 0) {
            return Err(Error::Argument(
                "grid around the centre collapses to a single point on some axis".into(),
            ));
        }
        Ok(GridSpec {
            anchor: center.to_vec(),
            step: vec![h; n],
            below,
            above,
            zeta: 0.0,
        })
    }

    pub fn with_zeta(mut self, zeta: f64) -> Self {
        self.zeta = zeta;
        self
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    /// Points per axis.
    pub fn counts(&self) -> Vec<usize> {
        self.below
            .iter()
            .zip(&self.above)
            .map(|(b, a)| b + a + 1)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.counts().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest spacing over the axes.
    pub fn spacing(&self) -> f64 {
        self.step.iter().cloned().fold(0.0, f64::max)
    }

    /// Distance within which every point of the covered box has a grid neighbour: `h·√n`.
    pub fn resolution_bound(&self) -> f64 {
        self.spacing() * (self.dim() as f64).sqrt()
    }

    pub fn lo(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.coord(i, 0)).collect()
    }

    pub fn hi(&self) -> Vec<f64> {
        let counts = self.counts();
        (0..self.dim())
            .map(|i| self.coord(i, counts[i] - 1))
            .collect()
    }

    fn coord(&self, axis: usize, k: usize) -> f64 {
        let j = k as f64 - self.below[axis] as f64;
        self.anchor[axis] + j * self.step[axis]
    }

    /// Row-major point (last axis fastest).
    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let counts = self.counts();
        let mut p = vec![0.0; self.dim()];
        for axis in (0..self.dim()).rev() {
            let k = index % counts[axis];
            index /= counts[axis];
            p[axis] = self.coord(axis, k);
        }
        p
    }

    /// Same box, spacing divided by `factor`.
    pub fn refine(&self, factor: usize) -> Self {
        GridSpec {
            anchor: self.anchor.clone(),
            step: self.step.iter().map(|h| h / factor as f64).collect(),
            below: self.below.iter().map(|b| b * factor).collect(),
            above: self.above.iter().map(|a| a * factor).collect(),
            zeta: self.zeta,
        }
    }

    /// Fails unless the grid box lies in `domain` (up to rounding of the last point).
    pub fn check_within(&self, domain: &BoxDomain) -> Result<()> {
        if domain.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: domain.dim(),
                got: self.dim(),
            });
        }
        let (lo, hi) = (self.lo(), self.hi());
        for i in 0..self.dim() {
            let slack = 1e-9 * (1.0 + domain.hi()[i].abs().max(domain.lo()[i].abs()));
            if lo[i] < domain.lo()[i] - slack || hi[i] > domain.hi()[i] + slack {
                return Err(Error::Argument(format!(
                    "grid axis {i} spans [{}, {}] outside the domain [{}, {}]",
                    lo[i],
                    hi[i],
                    domain.lo()[i],
                    domain.hi()[i]
                )));
            }
        }
        Ok(())
    }

    /// All points, clamped into `domain` to absorb rounding at the far edge.
    pub fn points_in(&self, domain: &BoxDomain) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| {
                let mut p = self.point(i);
                domain.clamp(&mut p);
                p
            })
            .collect()
    }
}
