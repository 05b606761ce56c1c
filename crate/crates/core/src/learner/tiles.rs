use alloc::vec::Vec;

use crate::ObservationSpec;

/// Maps an observation to `n_tilings` active feature indices.
///
/// For tiling `t` and dimension `d`: `x_norm = clip01((x_d - low_d) /
/// (high_d - low_d))`, cell `c = min(tiles - 1, floor(x_norm * tiles + t /
/// n_tilings))`, and the feature index is `t * tiles^D + Σ_d c_d * tiles^d`.
/// Values outside the observation bounds are clipped for feature computation only.
#[derive(Debug, Clone, PartialEq)]
pub struct TileCoder {
    n_tilings: usize,
    tiles_per_dim: usize,
    lows: Vec<f64>,
    highs: Vec<f64>,
    per_tiling: usize,
}

impl TileCoder {
    pub fn new(spec: &ObservationSpec, n_tilings: u32, tiles_per_dim: u32) -> Self {
        Self::from_bounds(
            spec.variables().iter().map(|v| (v.low, v.high)).collect(),
            n_tilings,
            tiles_per_dim,
        )
    }

    pub fn from_bounds(bounds: Vec<(f64, f64)>, n_tilings: u32, tiles_per_dim: u32) -> Self {
        let tiles = tiles_per_dim as usize;
        let per_tiling = tiles.checked_pow(bounds.len() as u32).expect("tile grid size overflows usize");
        let (lows, highs) = bounds.into_iter().unzip();
        Self { n_tilings: n_tilings as usize, tiles_per_dim: tiles, lows, highs, per_tiling }
    }

    pub fn n_tilings(&self) -> usize {
        self.n_tilings
    }

    /// Total number of features across all tilings.
    pub fn n_features(&self) -> usize {
        self.n_tilings * self.per_tiling
    }

    /// Writes the active indices into `out`, which must hold `n_tilings` slots.
    pub fn features_into(&self, obs: &[f64], out: &mut [usize]) {
        debug_assert_eq!(out.len(), self.n_tilings);
        let tiles = self.tiles_per_dim as f64;
        for (t, slot) in out.iter_mut().enumerate() {
            let offset = t as f64 / self.n_tilings as f64;
            let mut index = t * self.per_tiling;
            let mut stride = 1;
            for (d, &x) in obs.iter().enumerate() {
                let norm = ((x - self.lows[d]) / (self.highs[d] - self.lows[d])).clamp(0.0, 1.0);
                let cell = (libm::floor(norm * tiles + offset) as usize).min(self.tiles_per_dim - 1);
                index += cell * stride;
                stride *= self.tiles_per_dim;
            }
            *slot = index;
        }
    }

    pub fn features(&self, obs: &[f64]) -> Vec<usize> {
        let mut out = alloc::vec![0; self.n_tilings];
        self.features_into(obs, &mut out);
        out
    }
}
