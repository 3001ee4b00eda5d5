//! Named access to layer parameters and state buffers.
//!
//! Parameters are visited as flat slices under dotted names
//! (e.g. `trunk.conv1.weight`); buffers cover non-trainable state such as
//! batch-norm running statistics, needed for checkpoints but never updated
//! by the optimizer.

use super::{BatchNorm2d, Conv2d, Linear};

pub trait ParamVisit {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64]));
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64]));
    fn visit_buffers(&self, _prefix: &str, _f: &mut dyn FnMut(&str, &[f64])) {}
    fn visit_buffers_mut(&mut self, _prefix: &str, _f: &mut dyn FnMut(&str, &mut [f64])) {}
}

impl ParamVisit for Linear {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        f(&format!("{prefix}.weight"), self.w.as_slice().expect("owned row-major"));
        f(&format!("{prefix}.bias"), self.b.as_slice().expect("owned"));
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        f(&format!("{prefix}.weight"), self.w.as_slice_mut().expect("owned row-major"));
        f(&format!("{prefix}.bias"), self.b.as_slice_mut().expect("owned"));
    }
}

impl ParamVisit for Conv2d {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        f(&format!("{prefix}.weight"), self.w.as_slice().expect("owned row-major"));
        if self.has_bias {
            f(&format!("{prefix}.bias"), self.b.as_slice().expect("owned"));
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        f(&format!("{prefix}.weight"), self.w.as_slice_mut().expect("owned row-major"));
        if self.has_bias {
            f(&format!("{prefix}.bias"), self.b.as_slice_mut().expect("owned"));
        }
    }
}

impl ParamVisit for BatchNorm2d {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        f(&format!("{prefix}.gamma"), self.gamma.as_slice().expect("owned"));
        f(&format!("{prefix}.beta"), self.beta.as_slice().expect("owned"));
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        f(&format!("{prefix}.gamma"), self.gamma.as_slice_mut().expect("owned"));
        f(&format!("{prefix}.beta"), self.beta.as_slice_mut().expect("owned"));
    }

    fn visit_buffers(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        f(&format!("{prefix}.running_mean"), self.running_mean.as_slice().expect("owned"));
        f(&format!("{prefix}.running_var"), self.running_var.as_slice().expect("owned"));
    }

    fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        f(&format!("{prefix}.running_mean"), self.running_mean.as_slice_mut().expect("owned"));
        f(&format!("{prefix}.running_var"), self.running_var.as_slice_mut().expect("owned"));
    }
}
