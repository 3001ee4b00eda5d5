//! Feature extractor φ plus the three head configurations, with an
//! explicit gradient-flow policy.
//!
//! The backbone parameters are partitioned into `trunk` (everything up to
//! the last affine layer) and `final_fc` (the affine layer producing the
//! feature vector). Each loss is routed to a set of partitions; gradients
//! only ever reach the partitions its route names. The disentangled
//! default keeps the attribute cross-entropy out of the trunk and the
//! confusion loss out of the attribute heads.

mod checkpoint;
mod resnet;
mod tiny;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
pub use resnet::ResNet18;
pub use tiny::TinyNet;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use ndarray::{Array2, Array4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{self, LossBreakdown};
use crate::nn::{softmax_rows, Adam, GradStore, Linear, ParamVisit};
use crate::schema::AttributeSchema;

/// Parameter partitions addressable by the gradient policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Trunk,
    FinalFc,
    PrimaryHead,
    AttributeHeads,
    AttributeProjection,
}

impl Partition {
    /// Partition of a named parameter, by prefix.
    pub fn of(name: &str) -> Option<Partition> {
        if name.starts_with("trunk.") {
            Some(Partition::Trunk)
        } else if name.starts_with("final_fc.") {
            Some(Partition::FinalFc)
        } else if name.starts_with("head.primary.") {
            Some(Partition::PrimaryHead)
        } else if name.starts_with("head.attr.") {
            Some(Partition::AttributeHeads)
        } else if name.starts_with("head.proj.") {
            Some(Partition::AttributeProjection)
        } else {
            None
        }
    }
}

/// The three loss components a route can reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Exp,
    S,
    Conf,
}

impl LossKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LossKind::Exp => "exp",
            LossKind::S => "s",
            LossKind::Conf => "conf",
        }
    }

    pub fn parse(name: &str) -> Option<LossKind> {
        match name {
            "exp" => Some(LossKind::Exp),
            "s" => Some(LossKind::S),
            "conf" => Some(LossKind::Conf),
            _ => None,
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Routing table: which parameter partitions each loss may update.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradientPolicy {
    routes: BTreeMap<LossKind, BTreeSet<Partition>>,
}

impl GradientPolicy {
    pub fn new(routes: BTreeMap<LossKind, BTreeSet<Partition>>) -> Self {
        Self { routes }
    }

    /// Baseline: the expression loss reaches everything it touches.
    pub fn baseline_default() -> Self {
        Self::single(
            LossKind::Exp,
            &[Partition::Trunk, Partition::FinalFc, Partition::PrimaryHead],
        )
    }

    /// Attribute-aware: the expression loss additionally trains the
    /// attribute projection.
    pub fn attribute_aware_default() -> Self {
        Self::single(
            LossKind::Exp,
            &[
                Partition::Trunk,
                Partition::FinalFc,
                Partition::PrimaryHead,
                Partition::AttributeProjection,
            ],
        )
    }

    /// Disentangled default: L_exp → trunk + final_fc + primary head;
    /// L_s → final_fc + attribute heads (never the trunk); L_conf → trunk
    /// + final_fc (never the attribute heads).
    pub fn disentangled_default() -> Self {
        let mut routes = BTreeMap::new();
        routes.insert(
            LossKind::Exp,
            [Partition::Trunk, Partition::FinalFc, Partition::PrimaryHead].into(),
        );
        routes.insert(LossKind::S, [Partition::FinalFc, Partition::AttributeHeads].into());
        routes.insert(LossKind::Conf, [Partition::Trunk, Partition::FinalFc].into());
        Self { routes }
    }

    fn single(kind: LossKind, partitions: &[Partition]) -> Self {
        let mut routes = BTreeMap::new();
        routes.insert(kind, partitions.iter().copied().collect());
        Self { routes }
    }

    pub fn route(&self, loss: LossKind) -> Result<&BTreeSet<Partition>> {
        self.routes
            .get(&loss)
            .ok_or_else(|| Error::config(format!("no gradient route defined for loss {loss}")))
    }

    pub fn allows(&self, loss: LossKind, partition: Partition) -> bool {
        self.routes.get(&loss).is_some_and(|set| set.contains(&partition))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackboneVariant {
    Resnet18,
    Tiny,
}

#[derive(Debug, Clone)]
enum Net {
    Tiny(TinyNet),
    Resnet(ResNet18),
}

/// Shared feature extractor φ: image batch (B, 3, c, c) → features (B, D).
#[derive(Debug, Clone)]
pub struct Backbone {
    pub variant: BackboneVariant,
    pub input_side: usize,
    pub feature_dim: usize,
    net: Net,
}

pub enum BackboneCache {
    Tiny(tiny::TinyCache),
    Resnet(resnet::ResNetCache),
}

impl Backbone {
    /// `feature_dim` is 512 for resnet18 and configurable for tiny (64 by
    /// default in the experiment configs).
    pub fn new<R: rand::Rng>(
        variant: BackboneVariant,
        input_side: usize,
        feature_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        match variant {
            BackboneVariant::Tiny => {
                if input_side / 8 == 0 {
                    return Err(Error::validation(format!(
                        "tiny backbone needs input side >= 8, got {input_side}"
                    )));
                }
                Ok(Self {
                    variant,
                    input_side,
                    feature_dim,
                    net: Net::Tiny(TinyNet::new(input_side, feature_dim, rng)),
                })
            }
            BackboneVariant::Resnet18 => {
                if input_side < 32 {
                    return Err(Error::validation(format!(
                        "resnet18 backbone needs input side >= 32, got {input_side}"
                    )));
                }
                Ok(Self {
                    variant,
                    input_side,
                    feature_dim,
                    net: Net::Resnet(ResNet18::new(input_side, feature_dim, rng)),
                })
            }
        }
    }

    fn check_input(&self, x: &Array4<f64>) -> Result<()> {
        let (_, c, h, w) = x.dim();
        if c != 3 || h != self.input_side || w != self.input_side {
            return Err(Error::validation(format!(
                "expected image batch (B, 3, {side}, {side}), got {:?}",
                x.dim(),
                side = self.input_side
            )));
        }
        Ok(())
    }

    /// Training-mode forward with cache (batch-norm uses batch statistics).
    pub fn forward_train(&mut self, x: &Array4<f64>) -> Result<(Array2<f64>, BackboneCache)> {
        self.check_input(x)?;
        Ok(match &mut self.net {
            Net::Tiny(net) => {
                let (feat, cache) = net.forward(x);
                (feat, BackboneCache::Tiny(cache))
            }
            Net::Resnet(net) => {
                let (feat, cache) = net.forward_train(x);
                (feat, BackboneCache::Resnet(cache))
            }
        })
    }

    /// Inference-mode forward (running statistics, no cache).
    pub fn forward_eval(&self, x: &Array4<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        Ok(match &self.net {
            Net::Tiny(net) => net.forward(x).0,
            Net::Resnet(net) => net.forward_eval(x),
        })
    }

    fn fc_param_grads(&self, cache: &BackboneCache, dfeat: &Array2<f64>, grads: &mut GradStore) {
        match (&self.net, cache) {
            (Net::Tiny(net), BackboneCache::Tiny(c)) => net.fc_param_grads(c, dfeat, grads),
            (Net::Resnet(net), BackboneCache::Resnet(c)) => net.fc_param_grads(c, dfeat, grads),
            _ => unreachable!("cache variant matches net variant"),
        }
    }

    fn trunk_backward(&self, cache: &BackboneCache, dfeat: &Array2<f64>, grads: &mut GradStore) {
        match (&self.net, cache) {
            (Net::Tiny(net), BackboneCache::Tiny(c)) => net.trunk_backward(c, dfeat, grads),
            (Net::Resnet(net), BackboneCache::Resnet(c)) => net.trunk_backward(c, dfeat, grads),
            _ => unreachable!("cache variant matches net variant"),
        }
    }
}

impl ParamVisit for Backbone {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        match &self.net {
            Net::Tiny(net) => net.visit(prefix, f),
            Net::Resnet(net) => net.visit(prefix, f),
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        match &mut self.net {
            Net::Tiny(net) => net.visit_mut(prefix, f),
            Net::Resnet(net) => net.visit_mut(prefix, f),
        }
    }

    fn visit_buffers(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        match &self.net {
            Net::Tiny(net) => net.visit_buffers(prefix, f),
            Net::Resnet(net) => net.visit_buffers(prefix, f),
        }
    }

    fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        match &mut self.net {
            Net::Tiny(net) => net.visit_buffers_mut(prefix, f),
            Net::Resnet(net) => net.visit_buffers_mut(prefix, f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    Baseline,
    AttributeAware,
    Disentangled,
}

/// Classification head(s) on top of φ.
#[derive(Debug, Clone)]
pub struct Head {
    pub kind: HeadKind,
    pub k: usize,
    pub schema: Option<AttributeSchema>,
    /// Expression classifier, D → K.
    pub primary: Linear,
    /// Attribute upsampling Σ|S_j| → D (attribute-aware only).
    pub projection: Option<Linear>,
    /// One branch D → |S_j| per group (disentangled only).
    pub attr_heads: Vec<Linear>,
    /// Confusion-loss weight (disentangled only).
    pub alpha: f64,
}

impl Head {
    pub fn baseline<R: rand::Rng>(feature_dim: usize, k: usize, rng: &mut R) -> Self {
        Self {
            kind: HeadKind::Baseline,
            k,
            schema: None,
            primary: Linear::new(feature_dim, k, rng),
            projection: None,
            attr_heads: Vec::new(),
            alpha: 0.0,
        }
    }

    pub fn attribute_aware<R: rand::Rng>(
        feature_dim: usize,
        k: usize,
        schema: AttributeSchema,
        rng: &mut R,
    ) -> Self {
        let projection = Linear::new(schema.one_hot_width(), feature_dim, rng);
        Self {
            kind: HeadKind::AttributeAware,
            k,
            schema: Some(schema),
            primary: Linear::new(feature_dim, k, rng),
            projection: Some(projection),
            attr_heads: Vec::new(),
            alpha: 0.0,
        }
    }

    pub fn disentangled<R: rand::Rng>(
        feature_dim: usize,
        k: usize,
        schema: AttributeSchema,
        alpha: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if alpha < 0.0 {
            return Err(Error::validation("alpha must be >= 0"));
        }
        let attr_heads = schema
            .groups()
            .iter()
            .map(|g| Linear::new(feature_dim, g.categories.len(), rng))
            .collect();
        Ok(Self {
            kind: HeadKind::Disentangled,
            k,
            schema: Some(schema),
            primary: Linear::new(feature_dim, k, rng),
            projection: None,
            attr_heads,
            alpha,
        })
    }
}

impl ParamVisit for Head {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        self.primary.visit(&format!("{prefix}head.primary"), f);
        if let Some(proj) = &self.projection {
            proj.visit(&format!("{prefix}head.proj"), f);
        }
        if let Some(schema) = &self.schema {
            for (head, group) in self.attr_heads.iter().zip(schema.groups()) {
                head.visit(&format!("{prefix}head.attr.{}", group.name), f);
            }
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.primary.visit_mut(&format!("{prefix}head.primary"), f);
        if let Some(proj) = &mut self.projection {
            proj.visit_mut(&format!("{prefix}head.proj"), f);
        }
        if let Some(schema) = self.schema.clone() {
            for (head, group) in self.attr_heads.iter_mut().zip(schema.groups()) {
                head.visit_mut(&format!("{prefix}head.attr.{}", group.name), f);
            }
        }
    }
}

/// Backbone + head + gradient policy: the unit the trainer owns.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub backbone: Backbone,
    pub head: Head,
    pub policy: GradientPolicy,
}

impl ModelBundle {
    pub fn new(backbone: Backbone, head: Head, policy: GradientPolicy) -> Result<Self> {
        if head.primary.in_dim() != backbone.feature_dim {
            return Err(Error::validation(format!(
                "head dimension {} does not match backbone feature dim {}",
                head.primary.in_dim(),
                backbone.feature_dim
            )));
        }
        Ok(Self {
            backbone,
            head,
            policy,
        })
    }

    /// Construct a seeded bundle with the default policy for its kind.
    pub fn build<R: rand::Rng>(
        variant: BackboneVariant,
        input_side: usize,
        feature_dim: usize,
        kind: HeadKind,
        k: usize,
        schema: Option<AttributeSchema>,
        alpha: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let backbone = Backbone::new(variant, input_side, feature_dim, rng)?;
        let (head, policy) = match kind {
            HeadKind::Baseline => (Head::baseline(feature_dim, k, rng), GradientPolicy::baseline_default()),
            HeadKind::AttributeAware => {
                let schema = schema.ok_or_else(|| {
                    Error::validation("attribute_aware head requires an attribute schema")
                })?;
                (
                    Head::attribute_aware(feature_dim, k, schema, rng),
                    GradientPolicy::attribute_aware_default(),
                )
            }
            HeadKind::Disentangled => {
                let schema = schema.ok_or_else(|| {
                    Error::validation("disentangled head requires an attribute schema")
                })?;
                (
                    Head::disentangled(feature_dim, k, schema, alpha, rng)?,
                    GradientPolicy::disentangled_default(),
                )
            }
        };
        ModelBundle::new(backbone, head, policy)
    }

    /// All parameter names with their partitions, in visit order.
    pub fn param_names(&self) -> Vec<(String, Partition)> {
        let mut names = Vec::new();
        self.visit("", &mut |name, _| {
            names.push((
                name.to_string(),
                Partition::of(name).expect("all model params belong to a partition"),
            ));
        });
        names
    }

    /// Clone of one named parameter as a flat vector.
    pub fn param_vec(&self, wanted: &str) -> Option<Vec<f64>> {
        let mut out = None;
        self.visit("", &mut |name, values| {
            if name == wanted {
                out = Some(values.to_vec());
            }
        });
        out
    }
}

impl ParamVisit for ModelBundle {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        self.backbone.visit(prefix, f);
        self.head.visit(prefix, f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.backbone.visit_mut(prefix, f);
        self.head.visit_mut(prefix, f);
    }

    fn visit_buffers(&self, prefix: &str, f: &mut dyn FnMut(&str, &[f64])) {
        self.backbone.visit_buffers(prefix, f);
    }

    fn visit_buffers_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [f64])) {
        self.backbone.visit_buffers_mut(prefix, f);
    }
}

/// Baseline inference: probability rows over the K expression classes.
pub fn forward_baseline(bundle: &ModelBundle, images: &Array4<f64>) -> Result<Array2<f64>> {
    if bundle.head.kind != HeadKind::Baseline {
        return Err(Error::validation("forward_baseline requires a baseline head"));
    }
    let feat = bundle.backbone.forward_eval(images)?;
    Ok(softmax_rows(&bundle.head.primary.forward(&feat)))
}

/// Attribute-aware inference: the classification layer reads
/// φ(x) + (W_s·s + b_s).
pub fn forward_attribute_aware(
    bundle: &ModelBundle,
    images: &Array4<f64>,
    attribute_vectors: &Array2<f64>,
) -> Result<Array2<f64>> {
    if bundle.head.kind != HeadKind::AttributeAware {
        return Err(Error::validation("forward_attribute_aware requires an attribute_aware head"));
    }
    let projection = bundle
        .head
        .projection
        .as_ref()
        .expect("attribute_aware head has a projection");
    if attribute_vectors.dim().1 != projection.in_dim() {
        return Err(Error::validation(format!(
            "attribute vector width {} does not match projection input {}",
            attribute_vectors.dim().1,
            projection.in_dim()
        )));
    }
    if attribute_vectors.dim().0 != images.dim().0 {
        return Err(Error::validation("attribute vector batch size mismatch"));
    }
    let feat = bundle.backbone.forward_eval(images)?;
    let combined = &feat + &projection.forward(attribute_vectors);
    Ok(softmax_rows(&bundle.head.primary.forward(&combined)))
}

/// Disentangled inference: expression probabilities plus one probability
/// block per attribute group, all branches reading the same φ(x).
pub fn forward_disentangled(
    bundle: &ModelBundle,
    images: &Array4<f64>,
) -> Result<(Array2<f64>, Vec<Array2<f64>>)> {
    if bundle.head.kind != HeadKind::Disentangled {
        return Err(Error::validation("forward_disentangled requires a disentangled head"));
    }
    let feat = bundle.backbone.forward_eval(images)?;
    let primary = softmax_rows(&bundle.head.primary.forward(&feat));
    let groups = bundle
        .head
        .attr_heads
        .iter()
        .map(|h| softmax_rows(&h.forward(&feat)))
        .collect();
    Ok((primary, groups))
}

/// Expression inference for any head kind; attribute-aware heads require
/// attribute vectors.
pub fn forward_expression(
    bundle: &ModelBundle,
    images: &Array4<f64>,
    attribute_vectors: Option<&Array2<f64>>,
) -> Result<Array2<f64>> {
    match bundle.head.kind {
        HeadKind::Baseline => forward_baseline(bundle, images),
        HeadKind::AttributeAware => {
            let attrs = attribute_vectors.ok_or_else(|| {
                Error::validation("attribute_aware inference requires attribute vectors")
            })?;
            forward_attribute_aware(bundle, images, attrs)
        }
        HeadKind::Disentangled => Ok(forward_disentangled(bundle, images)?.0),
    }
}

/// Targets for one training batch.
#[derive(Debug, Clone)]
pub struct BatchTargets {
    pub expressions: Vec<usize>,
    /// Per-sample attribute indices (sample-major), required for the
    /// attribute-aware and disentangled heads.
    pub attributes: Vec<Vec<usize>>,
}

impl BatchTargets {
    /// Group-major transpose of the attribute labels.
    fn group_major(&self, groups: usize) -> Vec<Vec<usize>> {
        (0..groups)
            .map(|j| self.attributes.iter().map(|a| a[j]).collect())
            .collect()
    }
}

/// d(mean CE)/d(logits) for a softmax + cross-entropy head:
/// (p − onehot(y)) / B.
fn ce_logit_grad(probs: &Array2<f64>, labels: &[usize]) -> Array2<f64> {
    let (b, _) = probs.dim();
    let mut d = probs.clone();
    for (i, &y) in labels.iter().enumerate() {
        d[[i, y]] -= 1.0;
    }
    d / b as f64
}

/// d(mean CE against uniform)/d(logits): (p − 1/|S|) / B.
fn uniform_ce_logit_grad(probs: &Array2<f64>) -> Array2<f64> {
    let (b, width) = probs.dim();
    let uniform = 1.0 / width as f64;
    probs.mapv(|p| p - uniform) / b as f64
}

/// Loss values and routed gradients for one training batch.
///
/// `components` selects which losses contribute gradient (each with its
/// weight in the total); the returned breakdown always reports all loss
/// values for the head kind. Gradients are only accumulated into the
/// partitions the policy routes each loss to.
pub fn compute_gradients(
    bundle: &mut ModelBundle,
    images: &Array4<f64>,
    targets: &BatchTargets,
    attribute_vectors: Option<&Array2<f64>>,
    components: &[LossKind],
) -> Result<(LossBreakdown, GradStore)> {
    let batch = images.dim().0;
    if targets.expressions.len() != batch {
        return Err(Error::validation("expression label count does not match batch"));
    }
    let mut grads = GradStore::new();
    let policy = bundle.policy.clone();

    match bundle.head.kind {
        HeadKind::Baseline | HeadKind::AttributeAware => {
            if !components.contains(&LossKind::Exp) {
                return Err(Error::validation(
                    "this head kind only produces the expression loss",
                ));
            }
            let (feat, cache) = bundle.backbone.forward_train(images)?;
            let (input_to_primary, proj_input) = match bundle.head.kind {
                HeadKind::Baseline => (feat.clone(), None),
                HeadKind::AttributeAware => {
                    let projection = bundle.head.projection.as_ref().expect("projection present");
                    let attrs = attribute_vectors.ok_or_else(|| {
                        Error::validation("attribute_aware training requires attribute vectors")
                    })?;
                    if attrs.dim() != (batch, projection.in_dim()) {
                        return Err(Error::validation("attribute vector shape mismatch"));
                    }
                    ((&feat + &projection.forward(attrs)), Some(attrs))
                }
                HeadKind::Disentangled => unreachable!(),
            };
            let probs = softmax_rows(&bundle.head.primary.forward(&input_to_primary));
            let l_exp = losses::expression_loss(&probs, &targets.expressions)?;
            let breakdown = losses::total_loss(l_exp, 0.0, 0.0, 0.0)?;

            let route = policy.route(LossKind::Exp)?;
            let dlogits = ce_logit_grad(&probs, &targets.expressions);
            if route.contains(&Partition::PrimaryHead) {
                let (dw, db) = bundle.head.primary.param_grads(&input_to_primary, &dlogits);
                grads.accumulate("head.primary.weight", dw.into_dyn());
                grads.accumulate("head.primary.bias", db.into_dyn());
            }
            let dcombined = bundle.head.primary.input_grad(&dlogits);
            if route.contains(&Partition::AttributeProjection) {
                if let (Some(projection), Some(attrs)) = (&bundle.head.projection, proj_input) {
                    let (dw, db) = projection.param_grads(attrs, &dcombined);
                    grads.accumulate("head.proj.weight", dw.into_dyn());
                    grads.accumulate("head.proj.bias", db.into_dyn());
                }
            }
            if route.contains(&Partition::FinalFc) {
                bundle.backbone.fc_param_grads(&cache, &dcombined, &mut grads);
            }
            if route.contains(&Partition::Trunk) {
                bundle.backbone.trunk_backward(&cache, &dcombined, &mut grads);
            }
            Ok((breakdown, grads))
        }
        HeadKind::Disentangled => {
            let schema = bundle.head.schema.clone().expect("disentangled head has a schema");
            if targets.attributes.len() != batch {
                return Err(Error::validation("attribute label count does not match batch"));
            }
            let (feat, cache) = bundle.backbone.forward_train(images)?;
            let primary_probs = softmax_rows(&bundle.head.primary.forward(&feat));
            let group_probs: Vec<Array2<f64>> = bundle
                .head
                .attr_heads
                .iter()
                .map(|h| softmax_rows(&h.forward(&feat)))
                .collect();

            let group_labels = targets.group_major(schema.groups().len());
            let l_exp = losses::expression_loss(&primary_probs, &targets.expressions)?;
            let l_s = losses::attribute_loss(&group_probs, &group_labels)?;
            let l_conf = losses::confusion_loss(&group_probs, &schema)?;
            let alpha = bundle.head.alpha;
            let breakdown = losses::total_loss(l_exp, l_s, l_conf, alpha)?;

            // Per-component gradients at the feature boundary.
            let mut dfeat_fc = Array2::zeros(feat.raw_dim());
            let mut dfeat_trunk = Array2::zeros(feat.raw_dim());
            for &kind in components {
                let weight = match kind {
                    LossKind::Conf => alpha,
                    _ => 1.0,
                };
                if weight == 0.0 {
                    continue;
                }
                let route = policy.route(kind)?;
                let dfeat: Array2<f64> = match kind {
                    LossKind::Exp => {
                        let dlogits = ce_logit_grad(&primary_probs, &targets.expressions);
                        if route.contains(&Partition::PrimaryHead) {
                            let (dw, db) = bundle.head.primary.param_grads(&feat, &dlogits);
                            grads.accumulate_scaled("head.primary.weight", dw.into_dyn(), weight);
                            grads.accumulate_scaled("head.primary.bias", db.into_dyn(), weight);
                        }
                        bundle.head.primary.input_grad(&dlogits)
                    }
                    LossKind::S => {
                        let mut dfeat = Array2::zeros(feat.raw_dim());
                        for (j, (head, group)) in
                            bundle.head.attr_heads.iter().zip(schema.groups()).enumerate()
                        {
                            let dlogits = ce_logit_grad(&group_probs[j], &group_labels[j]);
                            if route.contains(&Partition::AttributeHeads) {
                                let (dw, db) = head.param_grads(&feat, &dlogits);
                                grads.accumulate_scaled(
                                    &format!("head.attr.{}.weight", group.name),
                                    dw.into_dyn(),
                                    weight,
                                );
                                grads.accumulate_scaled(
                                    &format!("head.attr.{}.bias", group.name),
                                    db.into_dyn(),
                                    weight,
                                );
                            }
                            dfeat += &head.input_grad(&dlogits);
                        }
                        dfeat
                    }
                    LossKind::Conf => {
                        let mut dfeat = Array2::zeros(feat.raw_dim());
                        for (j, (head, group)) in
                            bundle.head.attr_heads.iter().zip(schema.groups()).enumerate()
                        {
                            let dlogits = uniform_ce_logit_grad(&group_probs[j]);
                            if route.contains(&Partition::AttributeHeads) {
                                let (dw, db) = head.param_grads(&feat, &dlogits);
                                grads.accumulate_scaled(
                                    &format!("head.attr.{}.weight", group.name),
                                    dw.into_dyn(),
                                    weight,
                                );
                                grads.accumulate_scaled(
                                    &format!("head.attr.{}.bias", group.name),
                                    db.into_dyn(),
                                    weight,
                                );
                            }
                            dfeat += &head.input_grad(&dlogits);
                        }
                        dfeat
                    }
                };
                if route.contains(&Partition::FinalFc) {
                    dfeat_fc.scaled_add(weight, &dfeat);
                }
                if route.contains(&Partition::Trunk) {
                    dfeat_trunk.scaled_add(weight, &dfeat);
                }
            }
            if dfeat_fc.iter().any(|&v| v != 0.0) {
                bundle.backbone.fc_param_grads(&cache, &dfeat_fc, &mut grads);
            }
            if dfeat_trunk.iter().any(|&v| v != 0.0) {
                bundle.backbone.trunk_backward(&cache, &dfeat_trunk, &mut grads);
            }
            Ok((breakdown, grads))
        }
    }
}

/// All loss components for the head kind.
pub fn all_components(kind: HeadKind) -> &'static [LossKind] {
    match kind {
        HeadKind::Baseline | HeadKind::AttributeAware => &[LossKind::Exp],
        HeadKind::Disentangled => &[LossKind::Exp, LossKind::S, LossKind::Conf],
    }
}

/// Apply a gradient set for one named loss through the optimizer,
/// touching only the partitions the policy routes that loss to.
pub fn apply_gradients(
    bundle: &mut ModelBundle,
    loss_name: &str,
    grads: &GradStore,
    opt: &mut Adam,
    lr: f64,
) -> Result<()> {
    let kind = LossKind::parse(loss_name)
        .ok_or_else(|| Error::config(format!("unknown loss name {loss_name:?}")))?;
    let route = bundle.policy.route(kind)?.clone();
    apply_to_partitions(bundle, grads, &route, opt, lr);
    Ok(())
}

/// Apply a pre-routed gradient set (as produced by `compute_gradients`)
/// in a single optimizer step over every partition.
pub fn apply_all_gradients(bundle: &mut ModelBundle, grads: &GradStore, opt: &mut Adam, lr: f64) {
    let all: BTreeSet<Partition> = [
        Partition::Trunk,
        Partition::FinalFc,
        Partition::PrimaryHead,
        Partition::AttributeHeads,
        Partition::AttributeProjection,
    ]
    .into();
    apply_to_partitions(bundle, grads, &all, opt, lr);
}

fn apply_to_partitions(
    bundle: &mut ModelBundle,
    grads: &GradStore,
    partitions: &BTreeSet<Partition>,
    opt: &mut Adam,
    lr: f64,
) {
    bundle.visit_mut("", &mut |name, param| {
        let Some(partition) = Partition::of(name) else {
            return;
        };
        if !partitions.contains(&partition) {
            return;
        }
        if let Some(grad) = grads.get(name) {
            opt.update(name, param, grad.as_slice().expect("owned grads"), lr);
        }
    });
}
