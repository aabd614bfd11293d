//! Stacked intelligent metasurface geometry and wave-domain transfer function.
//!
//! Meta-atoms are numbered `1..=N` row by row on an `n_max × n_max` lattice in
//! the xz-plane. Layers are separated by a uniform gap `d = D / L`, which is
//! also the distance between the antenna array and the first layer.
//! Propagation between elements follows the Rayleigh-Sommerfeld coefficient
//! ([`diffraction_coefficient`]).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;

/// Physical layout of the antenna array and the metasurface stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimGeometry {
    pub num_layers: usize,
    pub atoms_per_layer: usize,
    pub num_antennas: usize,
    pub num_users: usize,
    /// Spacing between adjacent meta-atoms, meters.
    pub atom_spacing: f64,
    /// Carrier wavelength, meters.
    pub wavelength: f64,
    /// Distance from the antenna array to the output layer, meters.
    pub total_thickness: f64,
    /// Area of a single meta-atom, square meters.
    pub atom_area: f64,
}

impl SimGeometry {
    pub fn new(
        num_layers: usize,
        atoms_per_layer: usize,
        num_antennas: usize,
        num_users: usize,
        atom_spacing: f64,
        wavelength: f64,
        total_thickness: f64,
        atom_area: f64,
    ) -> Result<Self> {
        let geom = Self {
            num_layers,
            atoms_per_layer,
            num_antennas,
            num_users,
            atom_spacing,
            wavelength,
            total_thickness,
            atom_area,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Standard layout for a given size: `d_a = λ/2`, `D = 5λ`, `A_t = λ²/4`
    /// at λ = 10.7 mm.
    pub fn standard(
        num_layers: usize,
        atoms_per_layer: usize,
        num_antennas: usize,
        num_users: usize,
    ) -> Result<Self> {
        let wavelength = 10.7e-3;
        Self::new(
            num_layers,
            atoms_per_layer,
            num_antennas,
            num_users,
            wavelength / 2.0,
            wavelength,
            5.0 * wavelength,
            wavelength * wavelength / 4.0,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 {
            return Err(Error::config("num_layers", "must be positive"));
        }
        if self.atoms_per_layer == 0 {
            return Err(Error::config("atoms_per_layer", "must be positive"));
        }
        let root = (self.atoms_per_layer as f64).sqrt().round() as usize;
        if root * root != self.atoms_per_layer {
            return Err(Error::config(
                "atoms_per_layer",
                format!("{} is not a perfect square", self.atoms_per_layer),
            ));
        }
        if self.num_antennas == 0 {
            return Err(Error::config("num_antennas", "must be positive"));
        }
        if self.num_users == 0 {
            return Err(Error::config("num_users", "must be positive"));
        }
        if self.num_users > self.num_antennas {
            return Err(Error::config(
                "num_users",
                format!(
                    "{} users exceed {} antennas",
                    self.num_users, self.num_antennas
                ),
            ));
        }
        for (name, v) in [
            ("atom_spacing", self.atom_spacing),
            ("wavelength", self.wavelength),
            ("total_thickness", self.total_thickness),
            ("atom_area", self.atom_area),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Side length of the square lattice.
    pub fn n_max(&self) -> usize {
        (self.atoms_per_layer as f64).sqrt().round() as usize
    }

    /// Uniform gap between consecutive layers (and antenna to first layer).
    pub fn layer_gap(&self) -> f64 {
        self.total_thickness / self.num_layers as f64
    }

    pub fn antenna_spacing(&self) -> f64 {
        self.wavelength / 2.0
    }

    fn check_atom(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.atoms_per_layer {
            return Err(Error::domain(format!(
                "atom index {n} outside 1..={}",
                self.atoms_per_layer
            )));
        }
        Ok(())
    }
}

/// Lattice coordinates `(n_x, n_z)` of the 1-based atom `n`.
pub fn atom_index(n: usize, n_max: usize) -> Result<(usize, usize)> {
    if n_max == 0 || n == 0 || n > n_max * n_max {
        return Err(Error::domain(format!(
            "atom index {n} outside 1..={}",
            n_max * n_max
        )));
    }
    let nx = (n - 1) % n_max + 1;
    let nz = n.div_ceil(n_max);
    Ok((nx, nz))
}

/// Distance between atoms `n` and `n2` on the same layer.
pub fn intra_layer_distance(n: usize, n2: usize, geom: &SimGeometry) -> Result<f64> {
    geom.check_atom(n)?;
    geom.check_atom(n2)?;
    let n_max = geom.n_max();
    let (ax, az) = atom_index(n, n_max)?;
    let (bx, bz) = atom_index(n2, n_max)?;
    let dx = ax as f64 - bx as f64;
    let dz = az as f64 - bz as f64;
    Ok(geom.atom_spacing * (dx * dx + dz * dz).sqrt())
}

/// Distance from atom `n` on one layer to atom `n2` on the next.
pub fn inter_layer_distance(n: usize, n2: usize, geom: &SimGeometry) -> Result<f64> {
    let lateral = intra_layer_distance(n, n2, geom)?;
    Ok(lateral.hypot(geom.layer_gap()))
}

/// Distance from antenna `k` (1-based) to atom `n` on the first layer.
///
/// The antenna array is a uniform linear array along z with half-wavelength
/// spacing, centered on the lattice.
pub fn antenna_to_layer_distance(k: usize, n: usize, geom: &SimGeometry) -> Result<f64> {
    if k == 0 || k > geom.num_antennas {
        return Err(Error::domain(format!(
            "antenna index {k} outside 1..={}",
            geom.num_antennas
        )));
    }
    geom.check_atom(n)?;
    let n_max = geom.n_max();
    let (nx, nz) = atom_index(n, n_max)?;
    let center = (n_max as f64 + 1.0) / 2.0;
    let ant_center = (geom.num_antennas as f64 + 1.0) / 2.0;
    let z_off = (nz as f64 - center) * geom.atom_spacing
        - geom.antenna_spacing() * (k as f64 - ant_center);
    let x_off = (nx as f64 - center) * geom.atom_spacing;
    let d = geom.layer_gap();
    Ok((z_off * z_off + x_off * x_off + d * d).sqrt())
}

/// Rayleigh-Sommerfeld transmission coefficient over distance `dist`.
///
/// `w = (A_t d / dist²) (1/(2π dist) − j/λ) exp(j 2π dist / λ)`
pub fn diffraction_coefficient(dist: f64, geom: &SimGeometry) -> Result<Complex64> {
    if !(dist.is_finite() && dist > 0.0) {
        return Err(Error::domain(format!(
            "propagation distance must be positive, got {dist}"
        )));
    }
    let lambda = geom.wavelength;
    let amplitude = geom.atom_area * geom.layer_gap() / (dist * dist);
    let obliquity = Complex64::new(1.0 / (TWO_PI * dist), -1.0 / lambda);
    let phase = Complex64::from_polar(1.0, TWO_PI * dist / lambda);
    Ok(obliquity * phase * amplitude)
}

/// Continuous phase shifts for every meta-atom, stored layer-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfiguration {
    num_layers: usize,
    atoms_per_layer: usize,
    phases: Vec<f64>,
}

impl PhaseConfiguration {
    /// Builds a configuration from `L·N` phases that must already lie in `[0, 2π)`.
    pub fn new(num_layers: usize, atoms_per_layer: usize, phases: Vec<f64>) -> Result<Self> {
        if phases.len() != num_layers * atoms_per_layer {
            return Err(Error::shape(format!(
                "expected {} phases, got {}",
                num_layers * atoms_per_layer,
                phases.len()
            )));
        }
        if let Some(bad) = phases.iter().find(|p| !(0.0..TWO_PI).contains(*p)) {
            return Err(Error::domain(format!("phase {bad} outside [0, 2π)")));
        }
        Ok(Self {
            num_layers,
            atoms_per_layer,
            phases,
        })
    }

    /// Reduces arbitrary finite angles into `[0, 2π)`.
    pub fn wrapped(num_layers: usize, atoms_per_layer: usize, angles: &[f64]) -> Result<Self> {
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::domain("non-finite phase"));
        }
        let phases = angles.iter().map(|&a| wrap_phase(a)).collect();
        Self::new(num_layers, atoms_per_layer, phases)
    }

    pub fn zeros(num_layers: usize, atoms_per_layer: usize) -> Self {
        Self {
            num_layers,
            atoms_per_layer,
            phases: vec![0.0; num_layers * atoms_per_layer],
        }
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn atoms_per_layer(&self) -> usize {
        self.atoms_per_layer
    }

    /// Phases of layer `l` (0-based).
    pub fn layer(&self, l: usize) -> &[f64] {
        let n = self.atoms_per_layer;
        &self.phases[l * n..(l + 1) * n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.phases
    }
}

/// Maps any finite angle into `[0, 2π)`.
pub fn wrap_phase(angle: f64) -> f64 {
    let r = angle.rem_euclid(TWO_PI);
    if r >= TWO_PI {
        0.0
    } else {
        r
    }
}

/// Free-space propagation between the antennas and across the stack.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationMatrices {
    /// Antenna → first layer, `N × K`.
    pub w1: DMatrix<Complex64>,
    /// Layer `l−1 → l` for `l = 2..=L`, each `N × N`.
    pub inner: Vec<DMatrix<Complex64>>,
}

pub fn build_propagation_matrices(geom: &SimGeometry) -> Result<PropagationMatrices> {
    geom.validate()?;
    let n = geom.atoms_per_layer;
    let k = geom.num_antennas;
    let mut w1 = DMatrix::zeros(n, k);
    for atom in 1..=n {
        for ant in 1..=k {
            let dist = antenna_to_layer_distance(ant, atom, geom)?;
            w1[(atom - 1, ant - 1)] = diffraction_coefficient(dist, geom)?;
        }
    }
    let mut layer = DMatrix::zeros(n, n);
    for a in 1..=n {
        for b in 1..=n {
            let dist = inter_layer_distance(b, a, geom)?;
            layer[(a - 1, b - 1)] = diffraction_coefficient(dist, geom)?;
        }
    }
    let inner = vec![layer; geom.num_layers - 1];
    Ok(PropagationMatrices { w1, inner })
}

/// `diag(e^{jθ_1}, …, e^{jθ_N})`.
pub fn phase_matrix(layer_phases: &[f64]) -> Result<DMatrix<Complex64>> {
    if let Some(bad) = layer_phases.iter().find(|p| !(0.0..TWO_PI).contains(*p)) {
        return Err(Error::domain(format!("phase {bad} outside [0, 2π)")));
    }
    let diag: Vec<Complex64> = layer_phases
        .iter()
        .map(|&t| Complex64::from_polar(1.0, t))
        .collect();
    Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)))
}

/// Cascaded response `G = Φ^L W^L Φ^{L−1} … Φ² W² Φ¹` (excludes `W¹`).
pub fn transfer_function(
    phases: &PhaseConfiguration,
    props: &PropagationMatrices,
) -> Result<DMatrix<Complex64>> {
    let n = phases.atoms_per_layer();
    let layers = phases.num_layers();
    if props.inner.len() + 1 != layers {
        return Err(Error::shape(format!(
            "{} phase layers but {} inter-layer matrices",
            layers,
            props.inner.len()
        )));
    }
    if props.w1.nrows() != n || props.inner.iter().any(|w| w.shape() != (n, n)) {
        return Err(Error::shape(format!(
            "propagation matrices do not match {n} atoms per layer"
        )));
    }
    let mut g = phase_matrix(phases.layer(0))?;
    for (l, w) in props.inner.iter().enumerate() {
        let mut next = w * &g;
        scale_rows(&mut next, phases.layer(l + 1));
        g = next;
    }
    Ok(g)
}

fn scale_rows(m: &mut DMatrix<Complex64>, phases: &[f64]) {
    for (r, &t) in phases.iter().enumerate() {
        let f = Complex64::from_polar(1.0, t);
        for c in 0..m.ncols() {
            m[(r, c)] *= f;
        }
    }
}
