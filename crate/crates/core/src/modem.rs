//! Constellations, Gray labelling and symbol-by-symbol detectors.

use crate::error::{Error, Result};
use crate::params::NoiseParams;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Geometry {
    /// Square QAM grid `{(2a - (side-1)) delta}`, sliced per axis.
    Square { side: usize, delta: f64 },
    Generic,
}

/// A labelled constellation. Point `i` carries label `labels()[i]` (MSB first).
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    labels: Vec<u32>,
    bits_per_symbol: usize,
    geometry: Geometry,
}

fn gray(i: u32) -> u32 {
    i ^ (i >> 1)
}

impl Constellation {
    /// 16-QAM with half-distance `delta`: points `a + jb`, `a, b ∈ {±delta, ±3 delta}`.
    ///
    /// Points are indexed row-major, `i = 4 col + row` with the in-phase level
    /// rising with `col` and the quadrature level falling with `row`, so index 0 is
    /// the corner `-3Δ + 3jΔ`. The first two label bits are the BRGC of the
    /// in-phase level, the last two that of the quadrature level.
    pub fn qam16(delta: f64) -> Self {
        let mut points = Vec::with_capacity(16);
        let mut labels = Vec::with_capacity(16);
        for col in 0..4u32 {
            for row in 0..4u32 {
                let re = (2.0 * col as f64 - 3.0) * delta;
                let im = (3.0 - 2.0 * row as f64) * delta;
                points.push(Complex64::new(re, im));
                labels.push(gray(col) << 2 | gray(row));
            }
        }
        Self {
            points,
            labels,
            bits_per_symbol: 4,
            geometry: Geometry::Square { side: 4, delta },
        }
    }

    /// 16-QAM scaled to average power `power` (`power = 10 delta²`).
    pub fn qam16_with_power(power: f64) -> Self {
        Self::qam16((power / 10.0).sqrt())
    }

    /// Gray-labelled QPSK with average (and constant) power `power`.
    pub fn qpsk(power: f64) -> Self {
        let d = (power / 2.0).sqrt();
        let mut points = Vec::with_capacity(4);
        let mut labels = Vec::with_capacity(4);
        for col in 0..2u32 {
            for row in 0..2u32 {
                points.push(Complex64::new((2.0 * col as f64 - 1.0) * d, (1.0 - 2.0 * row as f64) * d));
                labels.push(col << 1 | row);
            }
        }
        Self {
            points,
            labels,
            bits_per_symbol: 2,
            geometry: Geometry::Square { side: 2, delta: d },
        }
    }

    /// Arbitrary labelled point set; detection falls back to exhaustive search.
    pub fn from_points(points: Vec<Complex64>, labels: Vec<u32>) -> Result<Self> {
        let m = points.len();
        if m == 0 {
            return Err(Error::Empty("constellation"));
        }
        if !m.is_power_of_two() || labels.len() != m {
            return Err(crate::error::invalid(
                "constellation",
                "size must be a power of two with one label per point",
            ));
        }
        let bits_per_symbol = m.trailing_zeros() as usize;
        Ok(Self {
            points,
            labels,
            bits_per_symbol,
            geometry: Geometry::Generic,
        })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Grid half-distance `delta`, for square QAM constellations.
    pub fn scale(&self) -> Option<f64> {
        match self.geometry {
            Geometry::Square { delta, .. } => Some(delta),
            Geometry::Generic => None,
        }
    }

    pub fn average_power(&self) -> f64 {
        self.points.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.len() as f64
    }

    pub fn min_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.min((a - b).norm());
            }
        }
        best
    }

    /// Same constellation with every point multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        let geometry = match self.geometry {
            Geometry::Square { side, delta } => Geometry::Square { side, delta: delta * c },
            Geometry::Generic => Geometry::Generic,
        };
        Self {
            points: self.points.iter().map(|p| p * c).collect(),
            labels: self.labels.clone(),
            bits_per_symbol: self.bits_per_symbol,
            geometry,
        }
    }

    /// Index of the point carrying `label`.
    pub fn index_of_label(&self, label: u32) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// Maps each group of `bits_per_symbol` bits (MSB first) to its labelled point.
    pub fn modulate(&self, bits: &[bool]) -> Result<Vec<Complex64>> {
        let m = self.bits_per_symbol;
        if bits.len() % m != 0 {
            return Err(Error::BitLengthMismatch {
                len: bits.len(),
                bits_per_symbol: m,
            });
        }
        let lookup = self.label_lookup();
        Ok(bits
            .chunks(m)
            .map(|chunk| {
                let label = chunk.iter().fold(0u32, |acc, &b| acc << 1 | b as u32);
                self.points[lookup[label as usize]]
            })
            .collect())
    }

    /// Bits carried by point `index`, MSB first.
    pub fn demap(&self, index: usize, out: &mut Vec<bool>) {
        let label = self.labels[index];
        for q in (0..self.bits_per_symbol).rev() {
            out.push(label >> q & 1 == 1);
        }
    }

    fn label_lookup(&self) -> Vec<usize> {
        let mut lookup = vec![0; self.len()];
        for (i, &l) in self.labels.iter().enumerate() {
            lookup[l as usize] = i;
        }
        lookup
    }

    /// Minimum-Euclidean-distance decision. Ties go to the lowest index.
    pub fn detect_med(&self, y: Complex64) -> usize {
        match self.geometry {
            Geometry::Square { side, delta } => {
                let col = slice_axis(y.re / delta, side, false);
                let row = slice_axis(y.im / delta, side, true);
                col * side + row
            }
            Geometry::Generic => self.detect_med_exhaustive(y),
        }
    }

    /// Exhaustive `argmin_i |y - s_i|²`.
    pub fn detect_med_exhaustive(&self, y: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, s) in self.points.iter().enumerate() {
            let d = (y - s).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Genie-aided symbol-by-symbol ML decision,
    /// `argmin_i [ln sigma_i² + |y - s_i|²/sigma_i²]` with
    /// `sigma_i² = rho(|s_i|² + neighbor_energy)`.
    pub fn detect_genie_ml(
        &self,
        y: Complex64,
        neighbor_energy: f64,
        memory: usize,
        noise: &NoiseParams,
    ) -> usize {
        let mut best = 0;
        let mut best_metric = f64::INFINITY;
        for (i, s) in self.points.iter().enumerate() {
            let var = noise.rho(s.norm_sqr() + neighbor_energy, memory);
            let metric = var.ln() + (y - s).norm_sqr() / var;
            if metric < best_metric {
                best_metric = metric;
                best = i;
            }
        }
        best
    }

    /// Number of label bits that differ between points `i` and `j`.
    pub fn bit_distance(&self, i: usize, j: usize) -> u32 {
        (self.labels[i] ^ self.labels[j]).count_ones()
    }
}

// Level index along one axis; levels are (2a - (side-1)) in units of delta.
// Ties on a threshold resolve toward the lower point index.
#[inline]
fn slice_axis(v: f64, side: usize, descending: bool) -> usize {
    let half = (side as f64 - 1.0) / 2.0;
    // thresholds at 2t - (side - 2), t = 0..side-1
    let mut a = 0;
    for t in 0..side - 1 {
        let thr = 2.0 * (t as f64 - half) + 1.0;
        let above = if descending { v < -thr } else { v > thr };
        if above {
            a += 1;
        }
    }
    a
}

/// Which symbol-by-symbol detector to run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Med,
    /// Symbol-by-symbol ML rule with genie knowledge of the neighbour energy.
    GenieMl { memory: usize, noise: NoiseParams },
}
