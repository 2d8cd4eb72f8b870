//! Horizontally layered propagation medium.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One homogeneous slab of the medium.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Slab thickness along depth (m).
    pub thickness: f64,
    /// Longitudinal sound speed (m/s).
    pub speed: f64,
    /// Mass density (kg/m³).
    pub density: f64,
}

impl Layer {
    pub fn new(thickness: f64, speed: f64, density: f64) -> Self {
        Self { thickness, speed, density }
    }

    /// Acoustic impedance Z = ρc.
    pub fn impedance(&self) -> f64 {
        self.density * self.speed
    }
}

/// Layers stacked outward from the transducer face, which sits at depth 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LayersRaw", into = "LayersRaw")]
pub struct LayeredMedium {
    layers: Vec<Layer>,
}

#[derive(Serialize, Deserialize)]
struct LayersRaw {
    layers: Vec<Layer>,
}

impl TryFrom<LayersRaw> for LayeredMedium {
    type Error = Error;
    fn try_from(raw: LayersRaw) -> Result<Self> {
        LayeredMedium::new(raw.layers)
    }
}

impl From<LayeredMedium> for LayersRaw {
    fn from(m: LayeredMedium) -> Self {
        LayersRaw { layers: m.layers }
    }
}

impl LayeredMedium {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::config("medium needs at least one layer"));
        }
        for (i, l) in layers.iter().enumerate() {
            let ok = |v: f64| v > 0.0 && v.is_finite();
            if !(ok(l.thickness) && ok(l.speed) && ok(l.density)) {
                return Err(Error::config(format!(
                    "layer {i}: thickness, speed and density must be positive and finite"
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Single homogeneous slab.
    pub fn homogeneous(thickness: f64, speed: f64, density: f64) -> Result<Self> {
        Self::new(vec![Layer::new(thickness, speed, density)])
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn total_thickness(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness).sum()
    }

    /// Depth intervals `[top, bottom)` of every layer.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64, &Layer)> + '_ {
        let mut top = 0.0;
        self.layers.iter().map(move |l| {
            let t = top;
            top += l.thickness;
            (t, top, l)
        })
    }

    /// Index of the layer containing `depth`. Depths on an interface belong
    /// to the deeper layer; the bottom face belongs to the last layer.
    pub fn layer_index_at(&self, depth: f64) -> Option<usize> {
        if depth < 0.0 || depth > self.total_thickness() {
            return None;
        }
        let mut top = 0.0;
        for (i, l) in self.layers.iter().enumerate() {
            top += l.thickness;
            if depth < top {
                return Some(i);
            }
        }
        Some(self.layers.len() - 1)
    }

    pub fn layer_at(&self, depth: f64) -> Option<&Layer> {
        self.layer_index_at(depth).map(|i| &self.layers[i])
    }

    /// Depths of the internal interfaces (excludes the face and the bottom).
    pub fn interface_depths(&self) -> Vec<f64> {
        self.intervals()
            .take(self.layers.len().saturating_sub(1))
            .map(|(_, bottom, _)| bottom)
            .collect()
    }
}

/// Normal-incidence pressure reflection coefficient (Z₂ − Z₁)/(Z₂ + Z₁)
/// for a wave travelling from `from` into `to`.
pub fn reflection_coefficient(from: &Layer, to: &Layer) -> f64 {
    let (z1, z2) = (from.impedance(), to.impedance());
    (z2 - z1) / (z2 + z1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn water_to_concrete_reflection() {
        let water = Layer::new(0.06, 1500.0, 997.0);
        let concrete = Layer::new(0.1, 2620.0, 1970.0);
        let expected = (1970.0 * 2620.0 - 997.0 * 1500.0) / (1970.0 * 2620.0 + 997.0 * 1500.0);
        let r = reflection_coefficient(&water, &concrete);
        assert_eq!(r, expected);
        assert!((r - 0.552).abs() < 2e-3);
    }

    #[test]
    fn rejects_nonpositive_layers() {
        assert!(LayeredMedium::new(vec![]).is_err());
        assert!(LayeredMedium::new(vec![Layer::new(0.0, 1500.0, 1000.0)]).is_err());
        assert!(LayeredMedium::new(vec![Layer::new(0.1, -1.0, 1000.0)]).is_err());
        assert!(LayeredMedium::new(vec![Layer::new(0.1, 1500.0, f64::NAN)]).is_err());
    }

    #[test]
    fn layer_lookup() {
        let m = LayeredMedium::new(vec![
            Layer::new(0.05, 1500.0, 997.0),
            Layer::new(0.01, 2820.0, 1180.0),
            Layer::new(0.2, 2620.0, 1970.0),
        ])
        .unwrap();
        assert_eq!(m.layer_index_at(0.0), Some(0));
        assert_eq!(m.layer_index_at(0.05), Some(1));
        assert_eq!(m.layer_index_at(0.1), Some(2));
        assert_eq!(m.layer_index_at(0.26), Some(2));
        assert_eq!(m.layer_index_at(0.27), None);
        assert_eq!(m.layer_index_at(-0.01), None);
        assert_eq!(m.interface_depths().len(), 2);
    }
}
