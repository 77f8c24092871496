//! Thin channel geometry and the cell-centred grid carrying every field.
//!
//! The channel is the box `(0, ε)² × (0, lz)` with `lz = 1`. For the scaled
//! inequality checks the same type also describes the isotropically scaled
//! cube `ε·(0,1)³` (`lz = ε`).

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Box geometry `(0,lx) × (0,ly) × (0,lz)` with its scale parameters and grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinDomain<T> {
    pub epsilon: T,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub lx: T,
    pub ly: T,
    pub lz: T,
    /// Diameter of the box.
    pub d: T,
    /// Volume of the box.
    pub v: T,
}

fn check_resolution(nx: usize, ny: usize, nz: usize) -> Result<()> {
    if nx < 2 || ny < 2 || nz < 2 {
        return Err(Error::config(format!(
            "grid resolution must be at least 2 in every direction, got {nx}x{ny}x{nz}"
        )));
    }
    Ok(())
}

fn check_epsilon<T: Real>(epsilon: T) -> Result<()> {
    if !(epsilon > T::zero() && epsilon <= T::one()) {
        return Err(Error::config(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    Ok(())
}

/// The thin channel `Q_ε × (0,1)` with square cross-section `Q_ε = (0,ε)²`.
pub fn build_channel<T: Real>(epsilon: T, nx: usize, ny: usize, nz: usize) -> Result<ThinDomain<T>> {
    check_epsilon(epsilon)?;
    check_resolution(nx, ny, nz)?;
    let two = T::lit(2.0);
    Ok(ThinDomain {
        epsilon,
        nx,
        ny,
        nz,
        lx: epsilon,
        ly: epsilon,
        lz: T::one(),
        d: (two * epsilon * epsilon + T::one()).sqrt(),
        v: epsilon * epsilon,
    })
}

/// The cube `ε·(0,1)³`, isotropic rescaling of the unit cube.
pub fn build_scaled_cube<T: Real>(epsilon: T, nx: usize, ny: usize, nz: usize) -> Result<ThinDomain<T>> {
    check_epsilon(epsilon)?;
    check_resolution(nx, ny, nz)?;
    Ok(ThinDomain {
        epsilon,
        nx,
        ny,
        nz,
        lx: epsilon,
        ly: epsilon,
        lz: epsilon,
        d: T::lit(3.0).sqrt() * epsilon,
        v: epsilon * epsilon * epsilon,
    })
}

/// Returns the stored `(d, v)` pair.
pub fn domain_metrics<T: Real>(domain: &ThinDomain<T>) -> (T, T) {
    (domain.d, domain.v)
}

impl<T: Real> ThinDomain<T> {
    #[inline]
    pub fn hx(&self) -> T {
        self.lx / T::from_usize_lossy(self.nx)
    }

    #[inline]
    pub fn hy(&self) -> T {
        self.ly / T::from_usize_lossy(self.ny)
    }

    #[inline]
    pub fn hz(&self) -> T {
        self.lz / T::from_usize_lossy(self.nz)
    }

    #[inline]
    pub fn spacing(&self) -> [T; 3] {
        [self.hx(), self.hy(), self.hz()]
    }

    #[inline]
    pub fn min_spacing(&self) -> T {
        self.hx().min(self.hy()).min(self.hz())
    }

    #[inline]
    pub fn cell_volume(&self) -> T {
        self.hx() * self.hy() * self.hz()
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    #[inline]
    pub fn ncells(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    /// Cross-sectional area `|Q_ε|`.
    #[inline]
    pub fn cross_section(&self) -> T {
        self.lx * self.ly
    }

    #[inline]
    pub fn x(&self, i: usize) -> T {
        (T::from_usize_lossy(i) + T::lit(0.5)) * self.hx()
    }

    #[inline]
    pub fn y(&self, j: usize) -> T {
        (T::from_usize_lossy(j) + T::lit(0.5)) * self.hy()
    }

    #[inline]
    pub fn z(&self, k: usize) -> T {
        (T::from_usize_lossy(k) + T::lit(0.5)) * self.hz()
    }

    /// Same grid resolution and extents.
    pub fn same_grid(&self, other: &Self) -> bool {
        self.dims() == other.dims() && self.lx == other.lx && self.ly == other.ly && self.lz == other.lz
    }

    /// Copy of this domain refined (or coarsened) to another resolution.
    pub fn with_resolution(&self, nx: usize, ny: usize, nz: usize) -> Result<Self> {
        check_resolution(nx, ny, nz)?;
        Ok(ThinDomain { nx, ny, nz, ..self.clone() })
    }
}

/// Cell-centred field with 1, 3 or 9 components, stored component-major.
///
/// Index of component `c` at cell `(i, j, k)` is `c·n + (k·ny + j)·nx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T> {
    dims: [usize; 3],
    ncomp: usize,
    data: Vec<T>,
}

impl<T: Real> GridFunction<T> {
    pub fn zeros(dims: [usize; 3], ncomp: usize) -> Self {
        let n = dims[0] * dims[1] * dims[2];
        GridFunction { dims, ncomp, data: vec![T::zero(); n * ncomp] }
    }

    pub fn constant(dims: [usize; 3], ncomp: usize, value: T) -> Self {
        let n = dims[0] * dims[1] * dims[2];
        GridFunction { dims, ncomp, data: vec![value; n * ncomp] }
    }

    pub fn from_vec(dims: [usize; 3], ncomp: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != dims[0] * dims[1] * dims[2] * ncomp {
            return Err(Error::config(format!(
                "grid function data length {} does not match {}x{}x{}x{}",
                data.len(),
                dims[0],
                dims[1],
                dims[2],
                ncomp
            )));
        }
        Ok(GridFunction { dims, ncomp, data })
    }

    /// Samples a scalar function at cell centres.
    pub fn scalar_from_fn(domain: &ThinDomain<T>, f: impl Fn(T, T, T) -> T) -> Self {
        let mut g = Self::zeros(domain.dims(), 1);
        let (nx, ny) = (domain.nx, domain.ny);
        for k in 0..domain.nz {
            let z = domain.z(k);
            for j in 0..ny {
                let y = domain.y(j);
                for i in 0..nx {
                    g.data[(k * ny + j) * nx + i] = f(domain.x(i), y, z);
                }
            }
        }
        g
    }

    /// Samples a vector function at cell centres.
    pub fn vector_from_fn(domain: &ThinDomain<T>, f: impl Fn(T, T, T) -> [T; 3]) -> Self {
        let mut g = Self::zeros(domain.dims(), 3);
        let n = domain.ncells();
        let (nx, ny) = (domain.nx, domain.ny);
        for k in 0..domain.nz {
            let z = domain.z(k);
            for j in 0..ny {
                let y = domain.y(j);
                for i in 0..nx {
                    let v = f(domain.x(i), y, z);
                    let idx = (k * ny + j) * nx + i;
                    g.data[idx] = v[0];
                    g.data[n + idx] = v[1];
                    g.data[2 * n + idx] = v[2];
                }
            }
        }
        g
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn ncomp(&self) -> usize {
        self.ncomp
    }

    #[inline]
    pub fn ncells(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    #[inline]
    pub fn get(&self, c: usize, i: usize, j: usize, k: usize) -> T {
        self.data[c * self.ncells() + self.index(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, i: usize, j: usize, k: usize, value: T) {
        let idx = c * self.ncells() + self.index(i, j, k);
        self.data[idx] = value;
    }

    #[inline]
    pub fn component(&self, c: usize) -> &[T] {
        let n = self.ncells();
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn component_mut(&mut self, c: usize) -> &mut [T] {
        let n = self.ncells();
        &mut self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Extracts a single component as a scalar field.
    pub fn component_field(&self, c: usize) -> Self {
        GridFunction { dims: self.dims, ncomp: 1, data: self.component(c).to_vec() }
    }

    /// Stacks scalar fields into one multi-component field.
    pub fn stack(parts: &[&GridFunction<T>]) -> Result<Self> {
        let dims = parts.first().map(|p| p.dims).ok_or_else(|| Error::config("nothing to stack"))?;
        let mut data = Vec::new();
        let mut ncomp = 0;
        for p in parts {
            if p.dims != dims {
                return Err(Error::config("stacked fields live on different grids"));
            }
            data.extend_from_slice(&p.data);
            ncomp += p.ncomp;
        }
        Ok(GridFunction { dims, ncomp, data })
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        GridFunction { dims: self.dims, ncomp: self.ncomp, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(GridFunction {
            dims: self.dims,
            ncomp: self.ncomp,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    /// Pointwise Euclidean magnitude over components.
    pub fn magnitude(&self) -> Self {
        let n = self.ncells();
        let mut out = Self::zeros(self.dims, 1);
        for c in 0..self.ncomp {
            for (o, &v) in out.data.iter_mut().zip(&self.data[c * n..(c + 1) * n]) {
                *o = *o + v * v;
            }
        }
        for o in out.data.iter_mut() {
            *o = o.sqrt();
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> T {
        self.data.iter().fold(T::infinity(), |m, &v| m.min(v))
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims || self.ncomp != other.ncomp {
            return Err(Error::config(format!(
                "grid function shape mismatch: {:?}x{} vs {:?}x{}",
                self.dims, self.ncomp, other.dims, other.ncomp
            )));
        }
        Ok(())
    }

    pub fn check_on(&self, domain: &ThinDomain<T>) -> Result<()> {
        if self.dims != domain.dims() {
            return Err(Error::config(format!(
                "grid function on {:?} used with domain {:?}",
                self.dims,
                domain.dims()
            )));
        }
        Ok(())
    }
}
