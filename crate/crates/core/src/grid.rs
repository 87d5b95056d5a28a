//! Uniform tensor grids over the unit cube.
//!
//! Axis `i` is split into `m_i` equal pieces; node `j_i` sits at `j_i / m_i`.
//! Blocks are half-open on the right except the last one on each axis, which
//! is closed, so every point of `[0, 1]^n` belongs to exactly one block.

use crate::error::{Error, Result};

const MODULE: &str = "grid";

/// Coordinates that leave `[0, 1]` by at most this much are clamped back.
pub const CLAMP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    m: Vec<usize>,
}

/// Multi-index `j` of the block `D_j = prod [j_i/m_i, (j_i+1)/m_i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockIndex(pub Vec<usize>);

impl Grid {
    pub fn new(m: &[usize]) -> Result<Self> {
        if m.is_empty() {
            return Err(Error::pre(MODULE, "grid needs at least one axis"));
        }
        if let Some((i, &mi)) = m.iter().enumerate().find(|(_, &mi)| mi < 2) {
            return Err(Error::pre(
                MODULE,
                format!("m[{i}] = {mi}, every axis needs at least 2 subdivisions"),
            ));
        }
        Ok(Grid { m: m.to_vec() })
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn m(&self) -> &[usize] {
        &self.m
    }

    /// Number of nodes along each axis (`m_i + 1`).
    pub fn nodes_per_axis(&self) -> Vec<usize> {
        self.m.iter().map(|&mi| mi + 1).collect()
    }

    pub fn node_count(&self) -> usize {
        self.m.iter().map(|&mi| mi + 1).product()
    }

    pub fn block_count(&self) -> usize {
        self.m.iter().product()
    }

    /// Coordinate of node `j` on `axis`. Computed fresh as `j / m`.
    #[inline]
    pub fn node(&self, axis: usize, j: usize) -> f64 {
        j as f64 / self.m[axis] as f64
    }

    pub fn node_coords(&self, j: &[usize]) -> Result<Vec<f64>> {
        self.check_len(j.len())?;
        j.iter()
            .enumerate()
            .map(|(i, &ji)| {
                if ji > self.m[i] {
                    Err(Error::pre(
                        MODULE,
                        format!("node index j[{i}] = {ji} exceeds m[{i}] = {}", self.m[i]),
                    ))
                } else {
                    Ok(self.node(i, ji))
                }
            })
            .collect()
    }

    /// Validates `x` against the cube, clamping round-off within [`CLAMP_SLACK`].
    pub fn clamp_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        x.iter()
            .enumerate()
            .map(|(i, &xi)| clamp_unit(xi).ok_or_else(|| {
                Error::pre(MODULE, format!("coordinate x[{i}] = {xi} lies outside [0, 1]"))
            }))
            .collect()
    }

    /// Block index along one axis under the half-open convention.
    /// `x` must already lie in `[0, 1]`.
    pub fn locate_axis(&self, axis: usize, x: f64) -> usize {
        let m = self.m[axis];
        let mut k = ((x * m as f64).floor() as usize).min(m - 1);
        // x * m can land one ulp off an integer when x is a node, so compare
        // against the node coordinates themselves.
        if k + 1 < m && x >= self.node(axis, k + 1) {
            k += 1;
        } else if k > 0 && x < self.node(axis, k) {
            k -= 1;
        }
        k
    }

    pub fn locate_block(&self, x: &[f64]) -> Result<BlockIndex> {
        let x = self.clamp_point(x)?;
        Ok(BlockIndex(
            x.iter().enumerate().map(|(i, &xi)| self.locate_axis(i, xi)).collect(),
        ))
    }

    pub fn check_block(&self, j: &BlockIndex) -> Result<()> {
        self.check_len(j.0.len())?;
        for (i, &ji) in j.0.iter().enumerate() {
            if ji >= self.m[i] {
                return Err(Error::pre(
                    MODULE,
                    format!("block index j[{i}] = {ji} must be below m[{i}] = {}", self.m[i]),
                ));
            }
        }
        Ok(())
    }

    /// Lower and upper corners of block `j`.
    pub fn block_bounds(&self, j: &BlockIndex) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_block(j)?;
        let lo = j.0.iter().enumerate().map(|(i, &ji)| self.node(i, ji)).collect();
        let hi = j.0.iter().enumerate().map(|(i, &ji)| self.node(i, ji + 1)).collect();
        Ok((lo, hi))
    }

    /// All block indices in row-major order, axis 0 slowest.
    pub fn blocks(&self) -> impl Iterator<Item = BlockIndex> + '_ {
        MultiIndexIter::new(self.m.clone()).map(BlockIndex)
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::pre(
                MODULE,
                format!("expected {} coordinates, got {len}", self.dim()),
            ));
        }
        Ok(())
    }
}

pub(crate) fn clamp_unit(x: f64) -> Option<f64> {
    if !x.is_finite() || x < -CLAMP_SLACK || x > 1.0 + CLAMP_SLACK {
        None
    } else {
        Some(x.clamp(0.0, 1.0))
    }
}

/// Row-major iterator over `prod [0, extent_i)`, last index fastest.
#[derive(Debug, Clone)]
pub struct MultiIndexIter {
    extents: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl MultiIndexIter {
    pub fn new(extents: Vec<usize>) -> Self {
        let next = if extents.iter().all(|&e| e > 0) {
            Some(vec![0; extents.len()])
        } else {
            None
        };
        MultiIndexIter { extents, next }
    }
}

impl Iterator for MultiIndexIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for axis in (0..succ.len()).rev() {
            succ[axis] += 1;
            if succ[axis] < self.extents[axis] {
                self.next = Some(succ);
                return Some(current);
            }
            succ[axis] = 0;
        }
        Some(current)
    }
}
