//! Spatially correlated Rician channels from the output metasurface to the
//! users and the eavesdropper, plus the eavesdropper's imperfect CSI.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{atom_index, intra_layer_distance, SimGeometry, TWO_PI};

pub type CVector = DVector<Complex64>;

/// Converts decibels to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) / 1000.0
}

/// Position of a receiver relative to the base station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodePlacement {
    /// Horizontal distance, meters.
    pub horizontal_distance: f64,
    /// Azimuth in `[0, 2π)`.
    pub azimuth: f64,
    /// Elevation in `[0, π/2]`.
    pub elevation: f64,
    /// Base-station (SIM) height, meters.
    pub bs_height: f64,
}

impl NodePlacement {
    pub fn link_distance(&self) -> f64 {
        self.bs_height.hypot(self.horizontal_distance)
    }

    /// Uniform horizontal distance in `[min_dist, max_dist]`, uniform azimuth
    /// and uniform elevation.
    pub fn sample<R: Rng + ?Sized>(
        rng: &mut R,
        min_dist: f64,
        max_dist: f64,
        bs_height: f64,
    ) -> Self {
        let horizontal_distance = if max_dist > min_dist {
            rng.random_range(min_dist..=max_dist)
        } else {
            min_dist
        };
        Self {
            horizontal_distance,
            azimuth: rng.random_range(0.0..TWO_PI),
            elevation: rng.random_range(0.0..=FRAC_PI_2),
            bs_height,
        }
    }
}

/// Large- and small-scale fading parameters, all in linear units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub rician_factor: f64,
    pub ref_path_loss: f64,
    pub path_loss_exponent: f64,
    /// Watts.
    pub noise_power_user: f64,
    /// Watts.
    pub noise_power_eve: f64,
    pub csi_uncertainty: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            rician_factor: db_to_linear(-30.0),
            ref_path_loss: db_to_linear(-35.0),
            path_loss_exponent: 3.5,
            noise_power_user: dbm_to_watts(-104.0),
            noise_power_eve: dbm_to_watts(-104.0),
            csi_uncertainty: 0.1,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("rician_factor", self.rician_factor >= 0.0),
            ("ref_path_loss", self.ref_path_loss > 0.0),
            ("path_loss_exponent", self.path_loss_exponent > 0.0),
            ("noise_power_user", self.noise_power_user > 0.0),
            ("noise_power_eve", self.noise_power_eve > 0.0),
            ("csi_uncertainty", self.csi_uncertainty >= 0.0),
        ];
        for (field, ok) in checks {
            if !ok {
                return Err(Error::config(field, "out of range"));
            }
        }
        Ok(())
    }
}

/// All channel vectors for one quasi-static block.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h_users: Vec<CVector>,
    pub h_eve_true: CVector,
    /// Estimate available to the transmitter.
    pub h_eve_est: CVector,
    /// Estimation error, `h_eve_true = h_eve_est + h_eve_err`.
    pub h_eve_err: CVector,
}

impl ChannelRealization {
    pub fn num_atoms(&self) -> usize {
        self.h_eve_true.len()
    }

    pub fn num_users(&self) -> usize {
        self.h_users.len()
    }
}

/// Normalized sinc, `sin(πx)/(πx)` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Isotropic-scattering correlation across the output layer,
/// `R[n, n'] = sinc(2 d_{n,n'} / λ)`.
pub fn spatial_correlation(geom: &SimGeometry) -> Result<DMatrix<f64>> {
    let n = geom.atoms_per_layer;
    let mut r = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let d = intra_layer_distance(a + 1, b + 1, geom)?;
            let v = sinc(2.0 * d / geom.wavelength);
            r[(a, b)] = v;
            r[(b, a)] = v;
        }
    }
    Ok(r)
}

/// Symmetric square root of a correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationFactor {
    pub sqrt: DMatrix<f64>,
    /// Smallest eigenvalue before clipping.
    pub min_eigenvalue: f64,
    /// Eigenvalues after clipping at zero.
    pub eigenvalues: Vec<f64>,
}

impl CorrelationFactor {
    /// `R^{1/2} = V diag(√max(λ, 0)) Vᵀ`.
    pub fn new(r: &DMatrix<f64>) -> Result<Self> {
        if !r.is_square() {
            return Err(Error::shape("correlation matrix must be square"));
        }
        let eig = SymmetricEigen::new(r.clone());
        let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if !min_eigenvalue.is_finite() {
            return Err(Error::Numerical("eigendecomposition failed".into()));
        }
        let clipped: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
        let roots = DVector::from_iterator(clipped.len(), clipped.iter().map(|l| l.sqrt()));
        let v = &eig.eigenvectors;
        let sqrt = v * DMatrix::from_diagonal(&roots) * v.transpose();
        Ok(Self {
            sqrt,
            min_eigenvalue,
            eigenvalues: clipped,
        })
    }
}

/// Line-of-sight array response of the output layer toward `placement`.
pub fn los_steering(placement: &NodePlacement, geom: &SimGeometry) -> Result<CVector> {
    let n_max = geom.n_max();
    let k = TWO_PI * geom.atom_spacing / geom.wavelength;
    let sx = placement.azimuth.sin() * placement.elevation.sin();
    let sz = placement.elevation.cos();
    let mut out = CVector::zeros(geom.atoms_per_layer);
    for n in 1..=geom.atoms_per_layer {
        let (nx, nz) = atom_index(n, n_max)?;
        out[n - 1] = Complex64::from_polar(1.0, k * (nx as f64 * sx + nz as f64 * sz));
    }
    Ok(out)
}

/// Distance-dependent path loss `C0 · d^{−α}`, valid from the 1 m reference.
pub fn path_loss(distance: f64, params: &ChannelParams) -> Result<f64> {
    if !(distance >= 1.0) {
        return Err(Error::domain(format!(
            "link distance {distance} m is below the 1 m reference"
        )));
    }
    Ok(params.ref_path_loss * distance.powf(-params.path_loss_exponent))
}

/// Draws `z ~ CN(0, I_n)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, n: usize, variance: f64) -> CVector {
    let s = (variance / 2.0).sqrt();
    CVector::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * s, im * s)
    })
}

/// Rician channel `√(β/(1+κ)) (√κ h_LoS + R^{1/2} z)`.
pub fn sample_channel<R: Rng + ?Sized>(
    placement: &NodePlacement,
    params: &ChannelParams,
    correlation: &CorrelationFactor,
    geom: &SimGeometry,
    rng: &mut R,
) -> Result<CVector> {
    let beta = path_loss(placement.link_distance(), params)?;
    sample_channel_with_gain(beta, placement, params, correlation, geom, rng)
}

/// Same as [`sample_channel`] with an explicit large-scale gain `beta`.
pub fn sample_channel_with_gain<R: Rng + ?Sized>(
    beta: f64,
    placement: &NodePlacement,
    params: &ChannelParams,
    correlation: &CorrelationFactor,
    geom: &SimGeometry,
    rng: &mut R,
) -> Result<CVector> {
    let n = geom.atoms_per_layer;
    if correlation.sqrt.shape() != (n, n) {
        return Err(Error::shape("correlation factor does not match geometry"));
    }
    let los = los_steering(placement, geom)?;
    let z = complex_gaussian(rng, n, 1.0);
    let nlos = correlation.sqrt.map(|v| Complex64::new(v, 0.0)) * z;
    let kappa = params.rician_factor;
    let scale = (beta / (1.0 + kappa)).sqrt();
    Ok((los * Complex64::new(kappa.sqrt(), 0.0) + nlos) * Complex64::new(scale, 0.0))
}

/// Splits the true eavesdropper channel into `(estimate, error)`.
///
/// The error has i.i.d. `CN(0, δ²‖h_e‖²/N)` entries and the estimate is
/// `h_e − Δh_e`.
pub fn corrupt_eve_csi<R: Rng + ?Sized>(
    h_eve: &CVector,
    delta: f64,
    rng: &mut R,
) -> Result<(CVector, CVector)> {
    if !(delta >= 0.0) {
        return Err(Error::domain(format!("CSI uncertainty {delta} is negative")));
    }
    let n = h_eve.len();
    if delta == 0.0 || n == 0 {
        return Ok((h_eve.clone(), CVector::zeros(n)));
    }
    let variance = delta * delta / n as f64 * h_eve.norm_squared();
    let err = complex_gaussian(rng, n, variance);
    Ok((h_eve - &err, err))
}
