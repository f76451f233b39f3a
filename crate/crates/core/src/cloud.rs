use crate::error::{Error, Result};

/// A point cloud: positions plus named per-point attribute channels.
///
/// Point order is identity: index `i` in `positions` and in every channel
/// refers to the same point, and it is never reordered by the codec.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    positions: Vec<[f64; 3]>,
    channels: Vec<(String, Vec<f64>)>,
}

impl PointCloud {
    pub fn new(positions: Vec<[f64; 3]>) -> Self {
        Self {
            positions,
            channels: Vec::new(),
        }
    }

    pub fn point_count(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn require_channel(&self, name: &str) -> Result<&[f64]> {
        self.channel(name)
            .ok_or_else(|| Error::MissingChannel(name.to_string()))
    }

    pub fn has_channel(&self, name: &str) -> bool {
        self.channel(name).is_some()
    }

    pub fn channel_names(&self) -> impl Iterator<Item = &str> {
        self.channels.iter().map(|(n, _)| n.as_str())
    }

    /// Inserts or replaces a channel. Insertion order is kept for new names.
    pub fn set_channel(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.point_count() {
            return Err(Error::ChannelLength {
                name,
                len: values.len(),
                expected: self.point_count(),
            });
        }
        match self.channels.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = values,
            None => self.channels.push((name, values)),
        }
        Ok(())
    }

    pub fn with_channel(mut self, name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        self.set_channel(name, values)?;
        Ok(self)
    }

    pub fn remove_channel(&mut self, name: &str) -> Option<Vec<f64>> {
        let idx = self.channels.iter().position(|(n, _)| n == name)?;
        Some(self.channels.remove(idx).1)
    }

    /// Copy of the geometry without any attribute channels.
    pub fn geometry(&self) -> PointCloud {
        PointCloud::new(self.positions.clone())
    }
}
