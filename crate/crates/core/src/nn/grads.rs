//! Named gradient accumulator.

use std::collections::BTreeMap;

use ndarray::ArrayD;

/// Gradients keyed by parameter name. Accumulating twice under the same
/// name adds elementwise; iteration order is the sorted name order, which
/// keeps optimizer updates deterministic.
#[derive(Debug, Clone, Default)]
pub struct GradStore {
    map: BTreeMap<String, ArrayD<f64>>,
}

impl GradStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn accumulate(&mut self, name: &str, grad: ArrayD<f64>) {
        match self.map.get_mut(name) {
            Some(existing) => *existing += &grad,
            None => {
                self.map.insert(name.to_string(), grad);
            }
        }
    }

    /// Accumulate `weight * grad`.
    pub fn accumulate_scaled(&mut self, name: &str, grad: ArrayD<f64>, weight: f64) {
        if weight == 1.0 {
            self.accumulate(name, grad);
        } else {
            self.accumulate(name, grad * weight);
        }
    }

    pub fn get(&self, name: &str) -> Option<&ArrayD<f64>> {
        self.map.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ArrayD<f64>)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    /// Sum of `weight * other` into self, used to combine per-loss stores.
    pub fn add_scaled(&mut self, other: &GradStore, weight: f64) {
        for (name, grad) in other.iter() {
            self.accumulate_scaled(name, grad.clone(), weight);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;

    #[test]
    fn accumulate_adds_elementwise() {
        let mut g = GradStore::new();
        g.accumulate("w", arr1(&[1.0, 2.0]).into_dyn());
        g.accumulate("w", arr1(&[0.5, -1.0]).into_dyn());
        assert_eq!(g.get("w").unwrap().as_slice().unwrap(), &[1.5, 1.0]);
    }

    #[test]
    fn scaled_accumulation() {
        let mut g = GradStore::new();
        g.accumulate_scaled("w", arr1(&[2.0]).into_dyn(), 0.5);
        assert_eq!(g.get("w").unwrap().as_slice().unwrap(), &[1.0]);
    }
}
