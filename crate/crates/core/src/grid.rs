use crate::error::{Error, Result};

/// Uniform propagation grid over [0, z_max] with `n_steps` integrator
/// intervals, recording every `output_stride`-th point.
///
/// All engines share this type so observables sampled at matching indices
/// refer to the same physical distance. The endpoint is always recorded:
/// n_steps must be a multiple of output_stride.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationGrid {
    z_max: f64,
    n_steps: usize,
    output_stride: usize,
}

impl PropagationGrid {
    /// Grid with an explicit interval count, recording every step.
    pub fn with_steps(z_max: f64, n_steps: usize) -> Result<Self> {
        if !z_max.is_finite() || z_max <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "z_max must be finite and positive, got {z_max}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidGrid("n_steps must be at least 1".into()));
        }
        Ok(Self {
            z_max,
            n_steps,
            output_stride: 1,
        })
    }

    /// Grid with a target step size; the count is rounded up so the actual
    /// step never exceeds `dz_max`.
    pub fn new(z_max: f64, dz_max: f64) -> Result<Self> {
        if !dz_max.is_finite() || dz_max <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "dz_max must be finite and positive, got {dz_max}"
            )));
        }
        if !z_max.is_finite() || z_max <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "z_max must be finite and positive, got {z_max}"
            )));
        }
        let n_steps = (z_max / dz_max).ceil() as usize;
        Self::with_steps(z_max, n_steps.max(1))
    }

    /// Record only every `stride`-th step. The endpoint must stay recorded,
    /// so stride has to divide n_steps.
    pub fn output_stride(mut self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidGrid("output_stride must be at least 1".into()));
        }
        if self.n_steps % stride != 0 {
            return Err(Error::InvalidGrid(format!(
                "output_stride {stride} does not divide n_steps {}",
                self.n_steps
            )));
        }
        self.output_stride = stride;
        Ok(self)
    }

    /// Convenience: choose the largest stride that keeps roughly
    /// `max_outputs` recorded intervals. Falls back to recording every step
    /// when n_steps is awkwardly prime.
    pub fn thinned(self, max_outputs: usize) -> Self {
        if max_outputs == 0 || self.n_steps <= max_outputs {
            return self;
        }
        let target = self.n_steps / max_outputs;
        let mut stride = 1;
        for s in (1..=target).rev() {
            if self.n_steps % s == 0 {
                stride = s;
                break;
            }
        }
        Self {
            output_stride: stride,
            ..self
        }
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn stride(&self) -> usize {
        self.output_stride
    }

    pub fn dz(&self) -> f64 {
        self.z_max / self.n_steps as f64
    }

    /// Number of recorded states, endpoints included.
    pub fn n_outputs(&self) -> usize {
        self.n_steps / self.output_stride + 1
    }

    /// Coordinates of the recorded states.
    pub fn output_points(&self) -> Vec<f64> {
        let dz = self.dz();
        (0..self.n_outputs())
            .map(|i| (i * self.output_stride) as f64 * dz)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_size_and_count_are_consistent() {
        let g = PropagationGrid::with_steps(10.0, 400).unwrap();
        assert_eq!(g.n_steps(), 400);
        assert!((g.dz() - 0.025).abs() < 1e-15);
        let pts = g.output_points();
        assert_eq!(pts.len(), 401);
        assert_eq!(pts[0], 0.0);
        assert!((pts[400] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn rounded_grid_never_exceeds_requested_step() {
        let g = PropagationGrid::new(1.0, 0.3).unwrap();
        assert!(g.dz() <= 0.3 + 1e-15);
        assert_eq!(g.n_steps(), 4);
    }

    #[test]
    fn stride_thins_outputs_but_keeps_endpoint() {
        let g = PropagationGrid::with_steps(8.0, 400)
            .unwrap()
            .output_stride(100)
            .unwrap();
        assert_eq!(g.n_outputs(), 5);
        let pts = g.output_points();
        assert_eq!(pts.len(), 5);
        assert!((pts[4] - 8.0).abs() < 1e-12);
        assert!((pts[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn stride_must_divide_steps() {
        let g = PropagationGrid::with_steps(1.0, 10).unwrap();
        assert!(g.clone().output_stride(3).is_err());
        assert!(g.clone().output_stride(0).is_err());
        assert!(g.output_stride(5).is_ok());
    }

    #[test]
    fn thinning_picks_a_divisor() {
        let g = PropagationGrid::with_steps(1.0, 1000).unwrap().thinned(100);
        assert_eq!(g.stride(), 10);
        assert_eq!(g.n_outputs(), 101);
        let g = PropagationGrid::with_steps(1.0, 7).unwrap().thinned(100);
        assert_eq!(g.stride(), 1);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(PropagationGrid::with_steps(0.0, 10).is_err());
        assert!(PropagationGrid::with_steps(-1.0, 10).is_err());
        assert!(PropagationGrid::with_steps(f64::NAN, 10).is_err());
        assert!(PropagationGrid::with_steps(1.0, 0).is_err());
        assert!(PropagationGrid::new(1.0, 0.0).is_err());
        assert!(PropagationGrid::new(1.0, -0.5).is_err());
    }
}
