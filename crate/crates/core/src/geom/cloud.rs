use nalgebra::Point3;

use super::GeomError;

/// Metric 3D positions with optional RGB colors and per-point vote counts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    positions: Vec<Point3<f64>>,
    colors: Option<Vec<[u8; 3]>>,
    votes: Option<Vec<u32>>,
}

impl PointCloud {
    pub fn new(positions: Vec<Point3<f64>>) -> Result<Self, GeomError> {
        if !positions.iter().all(|p| p.coords.iter().all(|v| v.is_finite())) {
            return Err(GeomError::NonFinite("point positions"));
        }
        Ok(Self { positions, colors: None, votes: None })
    }

    pub fn with_colors(mut self, colors: Vec<[u8; 3]>) -> Result<Self, GeomError> {
        check_len("colors", self.positions.len(), colors.len())?;
        self.colors = Some(colors);
        Ok(self)
    }

    pub fn with_votes(mut self, votes: Vec<u32>) -> Result<Self, GeomError> {
        check_len("votes", self.positions.len(), votes.len())?;
        self.votes = Some(votes);
        Ok(self)
    }

    pub fn without_votes(mut self) -> Self {
        self.votes = None;
        self
    }

    pub(crate) fn with_positions_unchecked(&self, positions: Vec<Point3<f64>>) -> Self {
        debug_assert_eq!(positions.len(), self.positions.len());
        Self { positions, colors: self.colors.clone(), votes: self.votes.clone() }
    }

    pub fn positions(&self) -> &[Point3<f64>] {
        &self.positions
    }

    pub fn colors(&self) -> Option<&[[u8; 3]]> {
        self.colors.as_deref()
    }

    pub fn votes(&self) -> Option<&[u32]> {
        self.votes.as_deref()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Keeps the points at `indices` (in the given order) with their attributes.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            positions: indices.iter().map(|&i| self.positions[i]).collect(),
            colors: self.colors.as_ref().map(|c| indices.iter().map(|&i| c[i]).collect()),
            votes: self.votes.as_ref().map(|v| indices.iter().map(|&i| v[i]).collect()),
        }
    }
}

fn check_len(attribute: &'static str, expected: usize, got: usize) -> Result<(), GeomError> {
    if expected != got {
        return Err(GeomError::AttributeLength { attribute, expected, got });
    }
    Ok(())
}
