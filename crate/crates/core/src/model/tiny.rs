//! Small conv-pool backbone for CPU-scale experiments: three
//! conv3x3-tanh-avgpool stages followed by an affine map to the feature
//! dimension. Same contracts as the large backbone, only smaller.

use ndarray::{Array2, Array4};
use rand::Rng;

use crate::nn::{
    avg_pool2, avg_pool2_backward, tanh_backward, tanh_forward, Conv2d, Conv2dCache, GradStore,
    Linear, ParamVisit,
};

const CHANNELS: [usize; 3] = [8, 16, 32];

#[derive(Debug, Clone)]
pub struct TinyNet {
    pub conv1: Conv2d,
    pub conv2: Conv2d,
    pub conv3: Conv2d,
    pub fc: Linear,
    pub input_side: usize,
}

pub struct TinyCache {
    c1: Conv2dCache,
    c2: Conv2dCache,
    c3: Conv2dCache,
    a1: Array4<f64>,
    a2: Array4<f64>,
    a3: Array4<f64>,
    flat: Array2<f64>,
    pool_dims: [(usize, usize); 3],
}

impl TinyNet {
    pub fn new<R: Rng>(input_side: usize, feature_dim: usize, rng: &mut R) -> Self {
        let conv1 = Conv2d::new(3, CHANNELS[0], 3, 1, 1, rng);
        let conv2 = Conv2d::new(CHANNELS[0], CHANNELS[1], 3, 1, 1, rng);
        let conv3 = Conv2d::new(CHANNELS[1], CHANNELS[2], 3, 1, 1, rng);
        let side3 = input_side / 2 / 2 / 2;
        let fc = Linear::new(CHANNELS[2] * side3 * side3, feature_dim, rng);
        Self {
            conv1,
            conv2,
            conv3,
            fc,
            input_side,
        }
    }

    pub fn forward(&self, x: &Array4<f64>) -> (Array2<f64>, TinyCache) {
        let (z1, c1) = self.conv1.forward(x);
        let a1 = tanh_forward(&z1);
        let p1 = avg_pool2(&a1);

        let (z2, c2) = self.conv2.forward(&p1);
        let a2 = tanh_forward(&z2);
        let p2 = avg_pool2(&a2);

        let (z3, c3) = self.conv3.forward(&p2);
        let a3 = tanh_forward(&z3);
        let p3 = avg_pool2(&a3);

        let (b, ch, h, w) = p3.dim();
        let flat = p3
            .into_shape_with_order((b, ch * h * w))
            .expect("contiguous pool output");
        let feat = self.fc.forward(&flat);
        let pool_dims = [
            (a1.shape()[2], a1.shape()[3]),
            (a2.shape()[2], a2.shape()[3]),
            (a3.shape()[2], a3.shape()[3]),
        ];
        (
            feat,
            TinyCache {
                c1,
                c2,
                c3,
                a1,
                a2,
                a3,
                flat,
                pool_dims,
            },
        )
    }

    /// Final-affine parameter gradients for upstream `dfeat`.
    pub fn fc_param_grads(&self, cache: &TinyCache, dfeat: &Array2<f64>, grads: &mut GradStore) {
        let (dw, db) = self.fc.param_grads(&cache.flat, dfeat);
        grads.accumulate("final_fc.weight", dw.into_dyn());
        grads.accumulate("final_fc.bias", db.into_dyn());
    }

    /// Propagate `dfeat` through the final affine without touching its
    /// parameters, then through the conv stages, accumulating trunk grads.
    pub fn trunk_backward(&self, cache: &TinyCache, dfeat: &Array2<f64>, grads: &mut GradStore) {
        let dflat = self.fc.input_grad(dfeat);
        let (b, _) = dflat.dim();
        let (h3, w3) = cache.pool_dims[2];
        let dp3 = dflat
            .into_shape_with_order((b, CHANNELS[2], h3 / 2, w3 / 2))
            .expect("flat matches pooled shape");

        let da3 = avg_pool2_backward(&dp3, h3, w3);
        let dz3 = tanh_backward(&cache.a3, &da3);
        let (dw3, db3, dp2) = self.conv3.backward(&cache.c3, &dz3);
        grads.accumulate("trunk.conv3.weight", dw3.into_dyn());
        grads.accumulate("trunk.conv3.bias", db3.into_dyn());

        let (h2, w2) = cache.pool_dims[1];
        let da2 = avg_pool2_backward(&dp2, h2, w2);
        let dz2 = tanh_backward(&cache.a2, &da2);
        let (dw2, db2, dp1) = self.conv2.backward(&cache.c2, &dz2);
        grads.accumulate("trunk.conv2.weight", dw2.into_dyn());
        grads.accumulate("trunk.conv2.bias", db2.into_dyn());

        let (h1, w1) = cache.pool_dims[0];
        let da1 = avg_pool2_backward(&dp1, h1, w1);
        let dz1 = tanh_backward(&cache.a1, &da1);
        let (dw1, db1, _) = self.conv1.backward(&cache.c1, &dz1);
        grads.accumulate("trunk.conv1.weight", dw1.into_dyn());
        grads.accumulate("trunk.conv1.bias", db1.into_dyn());
    }
}

impl ParamVisit for TinyNet {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        self.conv1.visit(&format!("{prefix}trunk.conv1"), f);
        self.conv2.visit(&format!("{prefix}trunk.conv2"), f);
        self.conv3.visit(&format!("{prefix}trunk.conv3"), f);
        self.fc.visit(&format!("{prefix}final_fc"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.conv1.visit_mut(&format!("{prefix}trunk.conv1"), f);
        self.conv2.visit_mut(&format!("{prefix}trunk.conv2"), f);
        self.conv3.visit_mut(&format!("{prefix}trunk.conv3"), f);
        self.fc.visit_mut(&format!("{prefix}final_fc"), f);
    }
}
