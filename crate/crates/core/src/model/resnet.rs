//! 18-layer residual backbone: standard stem (7x7/2 conv, 3x3/2 max pool)
//! and four stages of two basic blocks, global average pooling, then an
//! affine map to the 512-d feature. Batch norm runs in batch-statistics
//! mode during training and running-statistics mode at evaluation.

use ndarray::{Array2, Array4};
use rand::Rng;

use crate::nn::{
    global_avg_pool, global_avg_pool_backward, max_pool, max_pool_backward, relu, relu_backward,
    BatchNorm2d, BnCache, Conv2d, Conv2dCache, GradStore, Linear, MaxPoolCache, ParamVisit,
};

#[derive(Debug, Clone)]
struct BasicBlock {
    conv1: Conv2d,
    bn1: BatchNorm2d,
    conv2: Conv2d,
    bn2: BatchNorm2d,
    /// 1x1 strided projection when the block changes resolution/width.
    down: Option<(Conv2d, BatchNorm2d)>,
}

struct BlockCache {
    c1: Conv2dCache,
    b1: BnCache,
    z1: Array4<f64>,
    c2: Conv2dCache,
    b2: BnCache,
    down: Option<(Conv2dCache, BnCache)>,
    pre_relu: Array4<f64>,
}

impl BasicBlock {
    fn new<R: Rng>(in_ch: usize, out_ch: usize, stride: usize, rng: &mut R) -> Self {
        let down = if stride != 1 || in_ch != out_ch {
            Some((Conv2d::new_no_bias(in_ch, out_ch, 1, stride, 0, rng), BatchNorm2d::new(out_ch)))
        } else {
            None
        };
        Self {
            conv1: Conv2d::new_no_bias(in_ch, out_ch, 3, stride, 1, rng),
            bn1: BatchNorm2d::new(out_ch),
            conv2: Conv2d::new_no_bias(out_ch, out_ch, 3, 1, 1, rng),
            bn2: BatchNorm2d::new(out_ch),
            down,
        }
    }

    fn forward_train(&mut self, x: &Array4<f64>) -> (Array4<f64>, BlockCache) {
        let (y1, c1) = self.conv1.forward(x);
        let (n1, b1) = self.bn1.forward_train(&y1);
        let z1 = relu(&n1);
        let (y2, c2) = self.conv2.forward(&z1);
        let (n2, b2) = self.bn2.forward_train(&y2);
        let (identity, down_cache) = match &mut self.down {
            Some((conv, bn)) => {
                let (yd, cd) = conv.forward(x);
                let (nd, bd) = bn.forward_train(&yd);
                (nd, Some((cd, bd)))
            }
            None => (x.clone(), None),
        };
        let pre_relu = &n2 + &identity;
        let out = relu(&pre_relu);
        (
            out,
            BlockCache {
                c1,
                b1,
                z1,
                c2,
                b2,
                down: down_cache,
                pre_relu,
            },
        )
    }

    fn forward_eval(&self, x: &Array4<f64>) -> Array4<f64> {
        let (y1, _) = self.conv1.forward(x);
        let z1 = relu(&self.bn1.forward_eval(&y1));
        let (y2, _) = self.conv2.forward(&z1);
        let n2 = self.bn2.forward_eval(&y2);
        let identity = match &self.down {
            Some((conv, bn)) => bn.forward_eval(&conv.forward(x).0),
            None => x.clone(),
        };
        relu(&(&n2 + &identity))
    }

    fn backward(&self, cache: &BlockCache, dy: &Array4<f64>, prefix: &str, grads: &mut GradStore) -> Array4<f64> {
        let dpre = relu_backward(&cache.pre_relu, dy);

        let (dg2, db2, dn2) = self.bn2.backward(&cache.b2, &dpre);
        grads.accumulate(&format!("{prefix}.bn2.gamma"), dg2.into_dyn());
        grads.accumulate(&format!("{prefix}.bn2.beta"), db2.into_dyn());
        let (dw2, _, dz1) = self.conv2.backward(&cache.c2, &dn2);
        grads.accumulate(&format!("{prefix}.conv2.weight"), dw2.into_dyn());

        let dn1 = relu_backward(&cache.z1, &dz1);
        let (dg1, db1, dy1) = self.bn1.backward(&cache.b1, &dn1);
        grads.accumulate(&format!("{prefix}.bn1.gamma"), dg1.into_dyn());
        grads.accumulate(&format!("{prefix}.bn1.beta"), db1.into_dyn());
        let (dw1, _, mut dx) = self.conv1.backward(&cache.c1, &dy1);
        grads.accumulate(&format!("{prefix}.conv1.weight"), dw1.into_dyn());

        match (&self.down, &cache.down) {
            (Some((conv, bn)), Some((cd, bd))) => {
                let (dgd, dbd, dnd) = bn.backward(bd, &dpre);
                grads.accumulate(&format!("{prefix}.down.bn.gamma"), dgd.into_dyn());
                grads.accumulate(&format!("{prefix}.down.bn.beta"), dbd.into_dyn());
                let (dwd, _, dxd) = conv.backward(cd, &dnd);
                grads.accumulate(&format!("{prefix}.down.conv.weight"), dwd.into_dyn());
                dx += &dxd;
            }
            (None, None) => dx += &dpre,
            _ => unreachable!("cache shape matches block shape"),
        }
        dx
    }
}

impl ParamVisit for BasicBlock {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        self.conv1.visit(&format!("{prefix}.conv1"), f);
        self.bn1.visit(&format!("{prefix}.bn1"), f);
        self.conv2.visit(&format!("{prefix}.conv2"), f);
        self.bn2.visit(&format!("{prefix}.bn2"), f);
        if let Some((conv, bn)) = &self.down {
            conv.visit(&format!("{prefix}.down.conv"), f);
            bn.visit(&format!("{prefix}.down.bn"), f);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.conv1.visit_mut(&format!("{prefix}.conv1"), f);
        self.bn1.visit_mut(&format!("{prefix}.bn1"), f);
        self.conv2.visit_mut(&format!("{prefix}.conv2"), f);
        self.bn2.visit_mut(&format!("{prefix}.bn2"), f);
        if let Some((conv, bn)) = &mut self.down {
            conv.visit_mut(&format!("{prefix}.down.conv"), f);
            bn.visit_mut(&format!("{prefix}.down.bn"), f);
        }
    }

    fn visit_buffers(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        self.bn1.visit_buffers(&format!("{prefix}.bn1"), f);
        self.bn2.visit_buffers(&format!("{prefix}.bn2"), f);
        if let Some((_, bn)) = &self.down {
            bn.visit_buffers(&format!("{prefix}.down.bn"), f);
        }
    }

    fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.bn1.visit_buffers_mut(&format!("{prefix}.bn1"), f);
        self.bn2.visit_buffers_mut(&format!("{prefix}.bn2"), f);
        if let Some((_, bn)) = &mut self.down {
            bn.visit_buffers_mut(&format!("{prefix}.down.bn"), f);
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResNet18 {
    stem_conv: Conv2d,
    stem_bn: BatchNorm2d,
    blocks: Vec<BasicBlock>,
    pub fc: Linear,
    pub input_side: usize,
}

pub struct ResNetCache {
    stem_c: Conv2dCache,
    stem_b: BnCache,
    stem_relu_in: Array4<f64>,
    pool: MaxPoolCache,
    block_caches: Vec<BlockCache>,
    gap_hw: (usize, usize),
    feat_in: Array2<f64>,
}

impl ResNet18 {
    pub fn new<R: Rng>(input_side: usize, feature_dim: usize, rng: &mut R) -> Self {
        let stem_conv = Conv2d::new_no_bias(3, 64, 7, 2, 3, rng);
        let stem_bn = BatchNorm2d::new(64);
        let mut blocks = Vec::with_capacity(8);
        let widths = [64usize, 128, 256, 512];
        let mut in_ch = 64;
        for (stage, &width) in widths.iter().enumerate() {
            let stride = if stage == 0 { 1 } else { 2 };
            blocks.push(BasicBlock::new(in_ch, width, stride, rng));
            blocks.push(BasicBlock::new(width, width, 1, rng));
            in_ch = width;
        }
        let fc = Linear::new(512, feature_dim, rng);
        Self {
            stem_conv,
            stem_bn,
            blocks,
            fc,
            input_side,
        }
    }

    pub fn forward_train(&mut self, x: &Array4<f64>) -> (Array2<f64>, ResNetCache) {
        let (y, stem_c) = self.stem_conv.forward(x);
        let (n, stem_b) = self.stem_bn.forward_train(&y);
        let r = relu(&n);
        let (p, pool) = max_pool(&r, 3, 2, 1);
        let mut h = p;
        let mut block_caches = Vec::with_capacity(self.blocks.len());
        for block in &mut self.blocks {
            let (out, cache) = block.forward_train(&h);
            block_caches.push(cache);
            h = out;
        }
        let gap_hw = (h.shape()[2], h.shape()[3]);
        let feat_in = global_avg_pool(&h);
        let feat = self.fc.forward(&feat_in);
        (
            feat,
            ResNetCache {
                stem_c,
                stem_b,
                stem_relu_in: n,
                pool,
                block_caches,
                gap_hw,
                feat_in,
            },
        )
    }

    pub fn forward_eval(&self, x: &Array4<f64>) -> Array2<f64> {
        let (y, _) = self.stem_conv.forward(x);
        let r = relu(&self.stem_bn.forward_eval(&y));
        let (p, _) = max_pool(&r, 3, 2, 1);
        let mut h = p;
        for block in &self.blocks {
            h = block.forward_eval(&h);
        }
        self.fc.forward(&global_avg_pool(&h))
    }

    pub fn fc_param_grads(&self, cache: &ResNetCache, dfeat: &Array2<f64>, grads: &mut GradStore) {
        let (dw, db) = self.fc.param_grads(&cache.feat_in, dfeat);
        grads.accumulate("final_fc.weight", dw.into_dyn());
        grads.accumulate("final_fc.bias", db.into_dyn());
    }

    pub fn trunk_backward(&self, cache: &ResNetCache, dfeat: &Array2<f64>, grads: &mut GradStore) {
        let dgap = self.fc.input_grad(dfeat);
        let mut dh = global_avg_pool_backward(&dgap, cache.gap_hw.0, cache.gap_hw.1);
        for (i, block) in self.blocks.iter().enumerate().rev() {
            dh = block.backward(&cache.block_caches[i], &dh, &format!("trunk.block{i}"), grads);
        }
        let dr = max_pool_backward(&cache.pool, &dh);
        let dn = relu_backward(&cache.stem_relu_in, &dr);
        let (dg, db, dy) = self.stem_bn.backward(&cache.stem_b, &dn);
        grads.accumulate("trunk.stem.bn.gamma", dg.into_dyn());
        grads.accumulate("trunk.stem.bn.beta", db.into_dyn());
        let (dw, _, _) = self.stem_conv.backward(&cache.stem_c, &dy);
        grads.accumulate("trunk.stem.conv.weight", dw.into_dyn());
    }
}

impl ParamVisit for ResNet18 {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        self.stem_conv.visit(&format!("{prefix}trunk.stem.conv"), f);
        self.stem_bn.visit(&format!("{prefix}trunk.stem.bn"), f);
        for (i, block) in self.blocks.iter().enumerate() {
            block.visit(&format!("{prefix}trunk.block{i}"), f);
        }
        self.fc.visit(&format!("{prefix}final_fc"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.stem_conv.visit_mut(&format!("{prefix}trunk.stem.conv"), f);
        self.stem_bn.visit_mut(&format!("{prefix}trunk.stem.bn"), f);
        for i in 0..self.blocks.len() {
            self.blocks[i].visit_mut(&format!("{prefix}trunk.block{i}"), f);
        }
        self.fc.visit_mut(&format!("{prefix}final_fc"), f);
    }

    fn visit_buffers(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        self.stem_bn.visit_buffers(&format!("{prefix}trunk.stem.bn"), f);
        for (i, block) in self.blocks.iter().enumerate() {
            block.visit_buffers(&format!("{prefix}trunk.block{i}"), f);
        }
    }

    fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.stem_bn.visit_buffers_mut(&format!("{prefix}trunk.stem.bn"), f);
        for i in 0..self.blocks.len() {
            self.blocks[i].visit_buffers_mut(&format!("{prefix}trunk.block{i}"), f);
        }
    }
}
