use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Discrete Skorokhod decomposition `x = y + push` of a path started at a
/// grid index `start_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectedSegment {
    pub start_index: usize,
    /// Reflected values, all ≥ 0.
    pub x: Vec<f64>,
    /// Cumulative pushing term; non-decreasing and only grows where `x = 0`.
    pub push: Vec<f64>,
}

/// Reflect `y` at zero: `x(k) = y(k) + max(0, max_{j≤k} −y(j))`.
pub fn skorokhod_reflect(y: &[f64]) -> Result<ReflectedSegment> {
    let Some(&y0) = y.first() else {
        return domain("cannot reflect an empty path");
    };
    if !(y0 >= 0.0) {
        return domain(format!("reflected path must start at a non-negative value, got {y0}"));
    }
    let mut x = Vec::with_capacity(y.len());
    let mut push = Vec::with_capacity(y.len());
    let mut level = 0.0f64;
    for &v in y {
        level = level.max(-v);
        push.push(level);
        x.push(v + level);
    }
    Ok(ReflectedSegment {
        start_index: 0,
        x,
        push,
    })
}

impl ReflectedSegment {
    pub fn with_start(mut self, start_index: usize) -> Self {
        self.start_index = start_index;
        self
    }

    /// `Σ_k x(k)·(push(k) − push(k−1))`; zero for an exact Skorokhod pair.
    pub fn complementarity(&self) -> f64 {
        (1..self.x.len())
            .map(|k| self.x[k] * (self.push[k] - self.push[k - 1]))
            .sum()
    }
}
