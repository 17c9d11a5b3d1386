//! Volumetric data type, minimal NIfTI-1 file I/O, separable Gaussian
//! smoothing, binary masks, thresholding and block-mean downsampling.
//!
//! All operations are pure functions of their inputs; values are safe to
//! share read-only across threads.

mod nifti;
mod smooth;

pub use nifti::{read_nifti, write_nifti};
pub use smooth::{fwhm_to_sigma, gaussian_kernel_1d, gaussian_smooth};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum VolumeError {
    #[error("data length {got} does not match dims {dims:?} ({expected} voxels)")]
    DataLength {
        dims: (usize, usize, usize),
        expected: usize,
        got: usize,
    },
    #[error("voxel spacing must be strictly positive and finite, got {0:?}")]
    BadSpacing((f32, f32, f32)),
    #[error("volume contains non-finite values")]
    NonFinite,
    #[error("dimensions must be positive, got {0:?}")]
    ZeroDim((usize, usize, usize)),
    #[error("downsample factor {0:?} leaves no voxels along some axis")]
    BadFactor((usize, usize, usize)),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Nifti(#[from] nifti::NiftiError),
}

pub use nifti::NiftiError;

/// Grid geometry shared by [`Volume3D`] and [`BinaryMask`]: dimensions,
/// voxel spacing in millimeters and the world position of voxel (0,0,0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeom {
    pub dims: (usize, usize, usize),
    pub spacing_mm: (f32, f32, f32),
    pub origin_mm: (f32, f32, f32),
}

impl GridGeom {
    pub fn new(dims: (usize, usize, usize), spacing_mm: (f32, f32, f32)) -> Self {
        Self {
            dims,
            spacing_mm,
            origin_mm: (0.0, 0.0, 0.0),
        }
    }

    pub fn numel(&self) -> usize {
        self.dims.0 * self.dims.1 * self.dims.2
    }

    /// Millimeter volume of a single voxel.
    pub fn voxel_volume_mm3(&self) -> f64 {
        self.spacing_mm.0 as f64 * self.spacing_mm.1 as f64 * self.spacing_mm.2 as f64
    }

    /// World coordinates of the center of voxel (x, y, z).
    pub fn voxel_center_mm(&self, x: usize, y: usize, z: usize) -> (f32, f32, f32) {
        (
            self.origin_mm.0 + x as f32 * self.spacing_mm.0,
            self.origin_mm.1 + y as f32 * self.spacing_mm.1,
            self.origin_mm.2 + z as f32 * self.spacing_mm.2,
        )
    }

    /// True when dims match exactly and spacing matches within 1e-4 mm.
    pub fn compatible(&self, other: &GridGeom) -> bool {
        self.dims == other.dims
            && (self.spacing_mm.0 - other.spacing_mm.0).abs() < 1e-4
            && (self.spacing_mm.1 - other.spacing_mm.1).abs() < 1e-4
            && (self.spacing_mm.2 - other.spacing_mm.2).abs() < 1e-4
    }
}

/// A dense 3D scalar field. Data is row-major with x fastest:
/// `data[x + nx * (y + ny * z)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume3D {
    geom: GridGeom,
    data: Vec<f32>,
}

impl Volume3D {
    pub fn new(geom: GridGeom, data: Vec<f32>) -> Result<Self, VolumeError> {
        let (nx, ny, nz) = geom.dims;
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(VolumeError::ZeroDim(geom.dims));
        }
        let expected = geom.numel();
        if data.len() != expected {
            return Err(VolumeError::DataLength {
                dims: geom.dims,
                expected,
                got: data.len(),
            });
        }
        let (sx, sy, sz) = geom.spacing_mm;
        for s in [sx, sy, sz] {
            if !(s.is_finite() && s > 0.0) {
                return Err(VolumeError::BadSpacing(geom.spacing_mm));
            }
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(VolumeError::NonFinite);
        }
        Ok(Self { geom, data })
    }

    pub fn zeros(geom: GridGeom) -> Self {
        Self::new(geom, vec![0.0; geom.numel()]).expect("zero volume is always valid")
    }

    pub fn geom(&self) -> &GridGeom {
        &self.geom
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.geom.dims
    }

    pub fn spacing_mm(&self) -> (f32, f32, f32) {
        self.geom.spacing_mm
    }

    pub fn origin_mm(&self) -> (f32, f32, f32) {
        self.geom.origin_mm
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        let (nx, ny, _) = self.geom.dims;
        x + nx * (y + ny * z)
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[self.index(x, y, z)]
    }

    pub fn min_max(&self) -> (f32, f32) {
        let mut lo = f32::INFINITY;
        let mut hi = f32::NEG_INFINITY;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum()
    }

    /// Voxel-wise absolute value.
    pub fn abs(&self) -> Volume3D {
        Volume3D {
            geom: self.geom,
            data: self.data.iter().map(|v| v.abs()).collect(),
        }
    }

    /// Binary mask of voxels with value strictly greater than `t`.
    pub fn threshold(&self, t: f32) -> BinaryMask {
        BinaryMask {
            geom: self.geom,
            data: self.data.iter().map(|&v| v > t).collect(),
        }
    }

    /// Block-mean pooling by integer factors per axis. Trailing voxels that
    /// do not fill a complete block are truncated. Spacing is multiplied by
    /// the factor and the origin moves to the center of the first block.
    pub fn downsample(&self, factor: (usize, usize, usize)) -> Result<Volume3D, VolumeError> {
        let (fx, fy, fz) = factor;
        let (nx, ny, nz) = self.geom.dims;
        if fx == 0 || fy == 0 || fz == 0 {
            return Err(VolumeError::BadFactor(factor));
        }
        let (ox, oy, oz) = (nx / fx, ny / fy, nz / fz);
        if ox == 0 || oy == 0 || oz == 0 {
            return Err(VolumeError::BadFactor(factor));
        }
        let mut out = vec![0.0f32; ox * oy * oz];
        let inv = 1.0 / (fx * fy * fz) as f64;
        for z in 0..oz {
            for y in 0..oy {
                for x in 0..ox {
                    let mut acc = 0.0f64;
                    for dz in 0..fz {
                        for dy in 0..fy {
                            for dx in 0..fx {
                                acc += self.at(x * fx + dx, y * fy + dy, z * fz + dz) as f64;
                            }
                        }
                    }
                    out[x + ox * (y + oy * z)] = (acc * inv) as f32;
                }
            }
        }
        let (sx, sy, sz) = self.geom.spacing_mm;
        let (px, py, pz) = self.geom.origin_mm;
        Volume3D::new(
            GridGeom {
                dims: (ox, oy, oz),
                spacing_mm: (sx * fx as f32, sy * fy as f32, sz * fz as f32),
                origin_mm: (
                    px + sx * (fx as f32 - 1.0) / 2.0,
                    py + sy * (fy as f32 - 1.0) / 2.0,
                    pz + sz * (fz as f32 - 1.0) / 2.0,
                ),
            },
            out,
        )
    }
}

/// A boolean field on the same grid contract as [`Volume3D`].
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    geom: GridGeom,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(geom: GridGeom, data: Vec<bool>) -> Result<Self, VolumeError> {
        let expected = geom.numel();
        if data.len() != expected {
            return Err(VolumeError::DataLength {
                dims: geom.dims,
                expected,
                got: data.len(),
            });
        }
        Ok(Self { geom, data })
    }

    pub fn empty(geom: GridGeom) -> Self {
        Self {
            geom,
            data: vec![false; geom.numel()],
        }
    }

    pub fn geom(&self) -> &GridGeom {
        &self.geom
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.geom.dims
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [bool] {
        &mut self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        let (nx, ny, _) = self.geom.dims;
        x + nx * (y + ny * z)
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> bool {
        self.data[self.index(x, y, z)]
    }

    /// Number of true voxels.
    pub fn voxel_count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Indices of all true voxels.
    pub fn true_indices(&self) -> Vec<usize> {
        self.data
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    /// Render as a 0/1 volume on the same grid.
    pub fn to_volume(&self) -> Volume3D {
        Volume3D {
            geom: self.geom,
            data: self.data.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }

    /// Morphological dilation by `r` steps of the 26-neighborhood
    /// (Chebyshev ball of radius `r`).
    pub fn dilate(&self, r: usize) -> BinaryMask {
        let mut cur = self.clone();
        let (nx, ny, nz) = self.geom.dims;
        for _ in 0..r {
            let mut next = cur.data.clone();
            for z in 0..nz {
                for y in 0..ny {
                    for x in 0..nx {
                        if cur.at(x, y, z) {
                            continue;
                        }
                        'neigh: for dz in -1isize..=1 {
                            for dy in -1isize..=1 {
                                for dx in -1isize..=1 {
                                    let (qx, qy, qz) = (
                                        x as isize + dx,
                                        y as isize + dy,
                                        z as isize + dz,
                                    );
                                    if qx < 0
                                        || qy < 0
                                        || qz < 0
                                        || qx >= nx as isize
                                        || qy >= ny as isize
                                        || qz >= nz as isize
                                    {
                                        continue;
                                    }
                                    if cur.at(qx as usize, qy as usize, qz as usize) {
                                        next[x + nx * (y + ny * z)] = true;
                                        break 'neigh;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            cur = BinaryMask {
                geom: self.geom,
                data: next,
            };
        }
        cur
    }
}
