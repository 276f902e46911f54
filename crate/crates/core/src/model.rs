//! Model parameters of the discretized contact process and its bond
//! probabilities `p(0) = 1 - eps`, `p(z) = lambda eps D(z)`.

use crate::error::{Error, Result};
use crate::kernel::KernelD;
use crate::lattice::{SparseKernel, Window};

#[derive(Debug, Clone)]
pub struct ModelParams {
    pub kernel: KernelD,
    pub eps: f64,
    pub lambda: f64,
    /// Horizon in time slices.
    pub n_max: usize,
    /// Half-width of the spatial window.
    pub radius: usize,
}

impl ModelParams {
    /// Parameters with the smallest window that holds every cluster up to
    /// the horizon.
    pub fn new(kernel: KernelD, eps: f64, lambda: f64, n_max: usize) -> Result<Self> {
        let radius = kernel.support_radius() * n_max;
        Self::with_radius(kernel, eps, lambda, n_max, radius)
    }

    pub fn with_radius(
        kernel: KernelD,
        eps: f64,
        lambda: f64,
        n_max: usize,
        radius: usize,
    ) -> Result<Self> {
        let p = ModelParams {
            kernel,
            eps,
            lambda,
            n_max,
            radius,
        };
        p.validate_probabilities()?;
        Ok(p)
    }

    pub fn validate_probabilities(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::validation("eps", format!("{} not in (0, 1]", self.eps)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::validation("lambda", format!("{} must be >= 0", self.lambda)));
        }
        let top = self.lambda * self.eps * self.kernel.max_mass();
        if top > 1.0 {
            return Err(Error::validation(
                "lambda",
                format!("spatial bond probability {top} exceeds 1"),
            ));
        }
        Ok(())
    }

    /// Checks that no cluster can leave the window before the horizon.
    pub fn check_window(&self) -> Result<()> {
        let required = self.kernel.support_radius() * self.n_max;
        if self.radius < required {
            return Err(Error::WindowTooSmall {
                radius: self.radius,
                required,
                slices: self.n_max,
            });
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.kernel.d()
    }

    pub fn window(&self) -> Window {
        Window::new(self.kernel.d(), self.radius)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::with_radius(self.kernel.clone(), self.eps, lambda, self.n_max, self.radius)
    }

    pub fn bond_probability(&self, offset: &[i64]) -> f64 {
        if offset.iter().all(|v| *v == 0) {
            1.0 - self.eps
        } else {
            self.lambda * self.eps * self.kernel.mass(offset)
        }
    }

    /// Offsets with nonzero bond probability, in lexicographic order.
    pub fn bond_entries(&self) -> Vec<(Vec<i64>, f64)> {
        let d = self.kernel.d();
        let mut out: Vec<(Vec<i64>, f64)> = self
            .kernel
            .entries()
            .iter()
            .map(|(x, m)| (x.clone(), self.lambda * self.eps * m))
            .filter(|e| e.1 > 0.0)
            .collect();
        if self.eps < 1.0 {
            out.push((vec![0; d], 1.0 - self.eps));
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// `p_eps` as a sparse convolution operator on window `w`.
    pub fn bond_kernel(&self, w: Window) -> SparseKernel {
        SparseKernel::new(w, self.bond_entries())
    }

    /// `sum_x p_eps(x) = 1 - eps + lambda eps`.
    pub fn bond_mass(&self) -> f64 {
        1.0 - self.eps + self.lambda * self.eps
    }

    /// `p^_eps(k)`.
    pub fn bond_hat(&self, kv: &[f64]) -> f64 {
        1.0 - self.eps + self.lambda * self.eps * crate::kernel::kernel_hat(&self.kernel, kv)
    }

    /// `sum_x |x|^2 p_eps(x) = lambda eps sigma^2`.
    pub fn bond_second_moment(&self) -> f64 {
        self.bond_entries()
            .iter()
            .map(|(x, p)| crate::lattice::norm2(x) * p)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::make_uniform_kernel;

    #[test]
    fn bond_probabilities() {
        let k = make_uniform_kernel(1, 1).unwrap();
        let p = ModelParams::new(k.clone(), 1.0, 0.7, 3).unwrap();
        assert_eq!(p.bond_probability(&[0]), 0.0);
        assert_eq!(p.bond_probability(&[2]), 0.0);
        let p = ModelParams::new(k, 0.25, 1.0, 3).unwrap();
        assert_eq!(p.bond_probability(&[1]), 0.125);
        assert_eq!(p.bond_probability(&[0]), 0.75);
        assert!((p.bond_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        let k = make_uniform_kernel(1, 1).unwrap();
        assert!(ModelParams::new(k.clone(), 0.0, 1.0, 2).is_err());
        assert!(ModelParams::new(k.clone(), 1.0, 2.5, 2).is_err());
        let p = ModelParams::with_radius(k, 1.0, 1.0, 4, 2).unwrap();
        assert!(matches!(p.check_window(), Err(Error::WindowTooSmall { .. })));
    }
}
