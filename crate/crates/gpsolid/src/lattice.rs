//! Uniform cell-centered grids in 1D/2D, complex fields, the boundary-aware
//! discrete Laplacian, the Ω×Ω interaction convolution and the energy,
//! gradient and residual evaluators of the grand-canonical functional.
//!
//! Discretization: nodes sit at cell centers x_i = origin + (i+½)h. Kinetic
//! energy is the forward-difference sum over axis gaps; a Dirichlet wall
//! contributes the node-to-zero jump at each boundary cell, Neumann walls
//! contribute nothing (mirrored ghost). With the matching ghost conventions
//! in the Laplacian stencil, energy and stencil are an exact adjoint pair
//! under the uniform weight h^d.
//!
//! The contact part ε₀δ₀ of the interaction enters energies as ½ε₀h^dΣ|u|⁴
//! and the GP operator as ε₀|u|²u; it is never discretized as a kernel value.

use crate::numerics::{pairwise_sum, pairwise_sum_by};
use crate::potential::Potential;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("grid extent {extent} is not an integer multiple of the spacing {spacing}")]
    NonCommensurate { extent: f64, spacing: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field has {got} values but the grid has {want} nodes")]
    LengthMismatch { got: usize, want: usize },
    #[error("non-finite field entry at node {0}")]
    NonFinite(usize),
    #[error("density must be real and nonnegative (node {node}: {value})")]
    NegativeDensity { node: usize, value: f64 },
    #[error("grids do not match")]
    GridMismatch,
    #[error("dimension mismatch: potential is {potential}D, grid is {grid}D")]
    DimensionMismatch { potential: usize, grid: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Dirichlet,
    Neumann,
}

impl Boundary {
    pub fn as_str(&self) -> &'static str {
        match self {
            Boundary::Dirichlet => "dirichlet",
            Boundary::Neumann => "neumann",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scalar {
    Real,
    Complex,
}

/// Uniform lattice over a box, cell-centered.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    origin: [f64; 2],
    extents: [f64; 2],
    spacing: f64,
    boundary: Boundary,
    shape: [usize; 2],
}

impl Grid {
    pub fn line(extent: f64, spacing: f64, boundary: Boundary) -> Result<Self, LatticeError> {
        Self::build(1, [0.0, 0.0], [extent, 0.0], spacing, boundary)
    }

    pub fn rect(
        extents: [f64; 2],
        spacing: f64,
        boundary: Boundary,
    ) -> Result<Self, LatticeError> {
        Self::build(2, [0.0, 0.0], extents, spacing, boundary)
    }

    pub fn with_origin(mut self, origin: [f64; 2]) -> Self {
        self.origin = origin;
        self
    }

    fn build(
        dim: usize,
        origin: [f64; 2],
        extents: [f64; 2],
        spacing: f64,
        boundary: Boundary,
    ) -> Result<Self, LatticeError> {
        if !(spacing > 0.0) {
            return Err(LatticeError::InvalidGrid("spacing must be positive".into()));
        }
        let mut shape = [1usize; 2];
        for axis in 0..dim {
            let extent = extents[axis];
            if !(extent > 0.0) {
                return Err(LatticeError::InvalidGrid("extents must be positive".into()));
            }
            let n = (extent / spacing).round();
            if (n * spacing - extent).abs() > 1e-9 * extent.max(1.0) || n < 2.0 {
                return Err(LatticeError::NonCommensurate { extent, spacing });
            }
            shape[axis] = n as usize;
        }
        Ok(Grid { dim, origin, extents, spacing, boundary, shape })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }
    pub fn shape(&self) -> [usize; 2] {
        self.shape
    }
    pub fn extents(&self) -> [f64; 2] {
        self.extents
    }
    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }
    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    /// |Ω| of the box.
    pub fn volume(&self) -> f64 {
        match self.dim {
            1 => self.extents[0],
            _ => self.extents[0] * self.extents[1],
        }
    }
    /// h^d quadrature weight per node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.shape[1] + iy
    }

    /// Node coordinate, reproducible bit-exactly from (origin, h, index).
    pub fn coord(&self, idx: usize) -> [f64; 2] {
        let (ix, iy) = (idx / self.shape[1], idx % self.shape[1]);
        [
            self.origin[0] + (ix as f64 + 0.5) * self.spacing,
            self.origin[1] + (iy as f64 + 0.5) * self.spacing,
        ]
    }
}

/// Sample array over a grid; real fields carry zero imaginary parts.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
    scalar: Scalar,
}

impl Field {
    pub fn from_real(grid: Grid, values: Vec<f64>) -> Result<Self, LatticeError> {
        if values.len() != grid.len() {
            return Err(LatticeError::LengthMismatch { got: values.len(), want: grid.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LatticeError::NonFinite(i));
        }
        let values = values.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        Ok(Field { grid, values, scalar: Scalar::Real })
    }

    pub fn from_complex(grid: Grid, values: Vec<Complex64>) -> Result<Self, LatticeError> {
        if values.len() != grid.len() {
            return Err(LatticeError::LengthMismatch { got: values.len(), want: grid.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(LatticeError::NonFinite(i));
        }
        Ok(Field { grid, values, scalar: Scalar::Complex })
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        let n = grid.len();
        Field { grid, values: vec![Complex64::new(value, 0.0); n], scalar: Scalar::Real }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn scalar(&self) -> Scalar {
        self.scalar
    }

    /// |u|² per node.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// h^d Σ |u|² with a deterministic reduction.
    pub fn mass(&self) -> f64 {
        self.grid.cell_volume() * pairwise_sum_by(self.values.len(), |i| self.values[i].norm_sqr())
    }

    /// Mean of |u|² over the box.
    pub fn mean_density(&self) -> f64 {
        self.mass() / self.grid.volume()
    }
}

/// Tail part of w sampled on index offsets, with an FFT fast path for the
/// zero-padded cyclic convolution (identical to the direct Ω×Ω sum).
pub struct InteractionKernel {
    grid: Grid,
    contact: f64,
    /// tail(|Δx|) on offsets (mx, my) ∈ [-(nx-1), nx-1] × [-(ny-1), ny-1],
    /// flattened with index (mx + nx-1)·(2ny-1) + (my + ny-1)
    tail_table: Vec<f64>,
    padded: [usize; 2],
    spectrum: Vec<Complex64>,
    fwd: [Arc<dyn Fft<f64>>; 2],
    inv: [Arc<dyn Fft<f64>>; 2],
}

impl InteractionKernel {
    pub fn new(p: &Potential, grid: &Grid) -> Result<Self, LatticeError> {
        if p.dim() != grid.dim() {
            return Err(LatticeError::DimensionMismatch { potential: p.dim(), grid: grid.dim() });
        }
        let [nx, ny] = grid.shape();
        let h = grid.spacing();
        let (tx, ty) = (2 * nx - 1, 2 * ny - 1);
        let mut tail_table = vec![0.0; tx * ty];
        for mx in 0..tx {
            let dx = (mx as isize - (nx as isize - 1)) as f64 * h;
            for my in 0..ty {
                let dy = (my as isize - (ny as isize - 1)) as f64 * h;
                tail_table[mx * ty + my] = p.tail_at((dx * dx + dy * dy).sqrt());
            }
        }
        let padded = [(2 * nx).next_power_of_two(), if ny == 1 { 1 } else { (2 * ny).next_power_of_two() }];
        let mut planner = FftPlanner::new();
        let fwd = [planner.plan_fft_forward(padded[0]), planner.plan_fft_forward(padded[1])];
        let inv = [planner.plan_fft_inverse(padded[0]), planner.plan_fft_inverse(padded[1])];
        // kernel image on the padded torus: index m ↦ tail(m·h) with negative
        // offsets wrapped to the top
        let (mx, my) = (padded[0], padded[1]);
        let mut kern = vec![Complex64::new(0.0, 0.0); mx * my];
        for ox in -(nx as isize - 1)..=(nx as isize - 1) {
            let px = ((ox + mx as isize) % mx as isize) as usize;
            for oy in -(ny as isize - 1)..=(ny as isize - 1) {
                let py = ((oy + my as isize) % my as isize) as usize;
                let tv = tail_table
                    [((ox + nx as isize - 1) as usize) * ty + (oy + ny as isize - 1) as usize];
                kern[px * my + py] = Complex64::new(tv, 0.0);
            }
        }
        fft_2d(&mut kern, mx, my, &fwd[0], &fwd[1]);
        // fold the quadrature weight and the inverse-FFT normalization in
        let scale = grid.cell_volume() / (mx * my) as f64;
        for v in kern.iter_mut() {
            *v *= scale;
        }
        Ok(InteractionKernel {
            grid: grid.clone(),
            contact: p.contact_coefficient(),
            tail_table,
            padded,
            spectrum: kern,
            fwd,
            inv,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn contact(&self) -> f64 {
        self.contact
    }

    /// h^d Σ_j tail(x_i − x_j) ρ_j via zero-padded FFT; Ω×Ω only, no wrap.
    pub fn convolve_tail(&self, rho: &[f64]) -> Vec<f64> {
        let [nx, ny] = self.grid.shape();
        let (mx, my) = (self.padded[0], self.padded[1]);
        let mut buf = vec![Complex64::new(0.0, 0.0); mx * my];
        for ix in 0..nx {
            for iy in 0..ny {
                buf[ix * my + iy] = Complex64::new(rho[ix * ny + iy], 0.0);
            }
        }
        fft_2d(&mut buf, mx, my, &self.fwd[0], &self.fwd[1]);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        fft_2d(&mut buf, mx, my, &self.inv[0], &self.inv[1]);
        let mut out = vec![0.0; nx * ny];
        for ix in 0..nx {
            for iy in 0..ny {
                out[ix * ny + iy] = buf[ix * my + iy].re;
            }
        }
        out
    }

    /// Direct O(N²) reference sum, h^d Σ_j tail(x_i − x_j) ρ_j.
    pub fn convolve_tail_direct(&self, rho: &[f64]) -> Vec<f64> {
        let [nx, ny] = self.grid.shape();
        let ty = 2 * ny - 1;
        let hd = self.grid.cell_volume();
        let mut out = vec![0.0; nx * ny];
        for ix in 0..nx {
            for iy in 0..ny {
                let mut acc = 0.0;
                for jx in 0..nx {
                    let ox = (ix as isize - jx as isize + nx as isize - 1) as usize;
                    for jy in 0..ny {
                        let oy = (iy as isize - jy as isize + ny as isize - 1) as usize;
                        acc += self.tail_table[ox * ty + oy] * rho[jx * ny + jy];
                    }
                }
                out[ix * ny + iy] = hd * acc;
            }
        }
        out
    }

    /// Full interaction potential w∗ρ = ε₀ρ + h^d Σ tail·ρ.
    pub fn apply(&self, rho: &[f64]) -> Vec<f64> {
        let mut out = self.convolve_tail(rho);
        if self.contact != 0.0 {
            for (o, r) in out.iter_mut().zip(rho) {
                *o += self.contact * r;
            }
        }
        out
    }
}

fn fft_2d(buf: &mut [Complex64], mx: usize, my: usize, fx: &Arc<dyn Fft<f64>>, fy: &Arc<dyn Fft<f64>>) {
    if my > 1 {
        // rows (contiguous)
        for row in buf.chunks_exact_mut(my) {
            fy.process(row);
        }
        // columns through a scratch row
        let mut col = vec![Complex64::new(0.0, 0.0); mx];
        for y in 0..my {
            for x in 0..mx {
                col[x] = buf[x * my + y];
            }
            fx.process(&mut col);
            for x in 0..mx {
                buf[x * my + y] = col[x];
            }
        }
    } else {
        fx.process(buf);
    }
}

/// Central second-order stencil; Dirichlet pads ghost nodes with zero,
/// Neumann mirrors the boundary-adjacent value.
pub fn laplacian_apply(f: &Field) -> Field {
    let grid = f.grid();
    let [nx, ny] = grid.shape();
    let h2 = grid.spacing() * grid.spacing();
    let u = f.values();
    let mut out = vec![Complex64::new(0.0, 0.0); u.len()];
    let mirror = grid.boundary() == Boundary::Neumann;
    for ix in 0..nx {
        for iy in 0..ny {
            let idx = ix * ny + iy;
            let c = u[idx];
            let mut acc = Complex64::new(0.0, 0.0);
            // x-axis neighbours
            if nx > 1 {
                let left = if ix > 0 {
                    u[idx - ny]
                } else if mirror {
                    c
                } else {
                    Complex64::new(0.0, 0.0)
                };
                let right = if ix + 1 < nx {
                    u[idx + ny]
                } else if mirror {
                    c
                } else {
                    Complex64::new(0.0, 0.0)
                };
                acc += left + right - 2.0 * c;
            }
            if ny > 1 {
                let down = if iy > 0 {
                    u[idx - 1]
                } else if mirror {
                    c
                } else {
                    Complex64::new(0.0, 0.0)
                };
                let up = if iy + 1 < ny {
                    u[idx + 1]
                } else if mirror {
                    c
                } else {
                    Complex64::new(0.0, 0.0)
                };
                acc += down + up - 2.0 * c;
            }
            out[idx] = acc / h2;
        }
    }
    Field { grid: grid.clone(), values: out, scalar: f.scalar() }
}

/// w∗ρ over Ω for a real nonnegative density; contact term included as ε₀ρ.
pub fn interaction_field(p: &Potential, density: &Field) -> Result<Field, LatticeError> {
    let rho: Vec<f64> = density.values().iter().map(|v| v.re).collect();
    for (i, v) in density.values().iter().enumerate() {
        if v.im != 0.0 {
            return Err(LatticeError::NegativeDensity { node: i, value: v.re });
        }
        if v.re < -1e-12 {
            return Err(LatticeError::NegativeDensity { node: i, value: v.re });
        }
    }
    let kernel = InteractionKernel::new(p, density.grid())?;
    let out = kernel.apply(&rho);
    Ok(Field {
        grid: density.grid().clone(),
        values: out.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
        scalar: Scalar::Real,
    })
}

/// Kinetic + interaction + contact energy terms and the mass, all with
/// deterministic reductions.
#[derive(Debug, Clone, Copy)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub interaction: f64,
    pub mass: f64,
}

impl EnergyBreakdown {
    pub fn energy(&self) -> f64 {
        self.kinetic + self.interaction
    }
    pub fn free_energy(&self, mu: f64) -> f64 {
        self.energy() - mu * self.mass
    }
}

/// Reusable evaluator holding the interaction kernel for a (potential, grid)
/// pair; all heavy paths of the solver go through this.
pub struct GpEvaluator {
    kernel: InteractionKernel,
}

impl GpEvaluator {
    pub fn new(p: &Potential, grid: &Grid) -> Result<Self, LatticeError> {
        Ok(GpEvaluator { kernel: InteractionKernel::new(p, grid)? })
    }

    pub fn grid(&self) -> &Grid {
        self.kernel.grid()
    }

    pub fn kernel(&self) -> &InteractionKernel {
        &self.kernel
    }

    /// Kinetic sum over axis gaps: h^{d-2}·Σ|Δu|², with Dirichlet wall jumps.
    pub fn kinetic(&self, u: &[Complex64]) -> f64 {
        let grid = self.kernel.grid();
        let [nx, ny] = grid.shape();
        let coef = grid.cell_volume() / (grid.spacing() * grid.spacing());
        let dirichlet = grid.boundary() == Boundary::Dirichlet;
        // gaps along x
        let mut total = 0.0;
        if nx > 1 {
            total += coef
                * pairwise_sum_by((nx - 1) * ny, |g| {
                    let (ix, iy) = (g / ny, g % ny);
                    (u[(ix + 1) * ny + iy] - u[ix * ny + iy]).norm_sqr()
                });
            if dirichlet {
                total += coef
                    * pairwise_sum_by(2 * ny, |g| {
                        let iy = g % ny;
                        let ix = if g < ny { 0 } else { nx - 1 };
                        u[ix * ny + iy].norm_sqr()
                    });
            }
        }
        if ny > 1 {
            total += coef
                * pairwise_sum_by(nx * (ny - 1), |g| {
                    let (ix, iy) = (g / (ny - 1), g % (ny - 1));
                    (u[ix * ny + iy + 1] - u[ix * ny + iy]).norm_sqr()
                });
            if dirichlet {
                total += coef
                    * pairwise_sum_by(2 * nx, |g| {
                        let ix = g % nx;
                        let iy = if g < nx { 0 } else { ny - 1 };
                        u[ix * ny + iy].norm_sqr()
                    });
            }
        }
        total
    }

    /// Energy terms of the discrete functional.
    pub fn breakdown(&self, u: &[Complex64]) -> EnergyBreakdown {
        let grid = self.kernel.grid();
        let hd = grid.cell_volume();
        let rho: Vec<f64> = u.iter().map(|v| v.norm_sqr()).collect();
        let conv = self.kernel.convolve_tail(&rho);
        let inter = 0.5 * hd * pairwise_sum_by(rho.len(), |i| rho[i] * conv[i])
            + 0.5 * self.kernel.contact() * hd * pairwise_sum_by(rho.len(), |i| rho[i] * rho[i]);
        EnergyBreakdown {
            kinetic: self.kinetic(u),
            interaction: inter,
            mass: hd * pairwise_sum(&rho),
        }
    }

    /// Gradient of the free energy: 2(−Δ + w∗|u|² − μ)u, exact for the
    /// discrete functional (⟨g, v⟩h^d = d/dt F(u+tv)|₀ for every direction).
    pub fn gradient(&self, u: &[Complex64], mu: f64, out: &mut Vec<Complex64>) {
        let rho: Vec<f64> = u.iter().map(|v| v.norm_sqr()).collect();
        let mut pot = self.kernel.convolve_tail(&rho);
        let contact = self.kernel.contact();
        if contact != 0.0 {
            for (p, r) in pot.iter_mut().zip(&rho) {
                *p += contact * r;
            }
        }
        gradient_from_potential(self.kernel.grid(), u, &pot, mu, out);
    }

    /// Energy terms and gradient off a single interaction convolution.
    pub fn breakdown_and_gradient(
        &self,
        u: &[Complex64],
        mu: f64,
        out: &mut Vec<Complex64>,
    ) -> EnergyBreakdown {
        let grid = self.kernel.grid();
        let hd = grid.cell_volume();
        let contact = self.kernel.contact();
        let rho: Vec<f64> = u.iter().map(|v| v.norm_sqr()).collect();
        let conv = self.kernel.convolve_tail(&rho);
        let inter = 0.5 * hd * pairwise_sum_by(rho.len(), |i| rho[i] * conv[i])
            + 0.5 * contact * hd * pairwise_sum_by(rho.len(), |i| rho[i] * rho[i]);
        let breakdown = EnergyBreakdown {
            kinetic: self.kinetic(u),
            interaction: inter,
            mass: hd * pairwise_sum(&rho),
        };
        let mut pot = conv;
        if contact != 0.0 {
            for (p, r) in pot.iter_mut().zip(&rho) {
                *p += contact * r;
            }
        }
        gradient_from_potential(grid, u, &pot, mu, out);
        breakdown
    }
}

fn gradient_from_potential(
    grid: &Grid,
    u: &[Complex64],
    pot: &[f64],
    mu: f64,
    out: &mut Vec<Complex64>,
) {
    let [nx, ny] = grid.shape();
    let h2 = grid.spacing() * grid.spacing();
    let mirror = grid.boundary() == Boundary::Neumann;
    out.clear();
    out.resize(u.len(), Complex64::new(0.0, 0.0));
    for ix in 0..nx {
        for iy in 0..ny {
            let idx = ix * ny + iy;
            let c = u[idx];
            let mut lap = Complex64::new(0.0, 0.0);
            if nx > 1 {
                let left = if ix > 0 { u[idx - ny] } else if mirror { c } else { Complex64::new(0.0, 0.0) };
                let right = if ix + 1 < nx { u[idx + ny] } else if mirror { c } else { Complex64::new(0.0, 0.0) };
                lap += left + right - 2.0 * c;
            }
            if ny > 1 {
                let down = if iy > 0 { u[idx - 1] } else if mirror { c } else { Complex64::new(0.0, 0.0) };
                let up = if iy + 1 < ny { u[idx + 1] } else if mirror { c } else { Complex64::new(0.0, 0.0) };
                lap += down + up - 2.0 * c;
            }
            out[idx] = 2.0 * (-lap / h2 + (pot[idx] - mu) * c);
        }
    }
}

/// 𝓔_Ω(u): kinetic + Ω×Ω interaction (+ contact quartic term).
pub fn energy(f: &Field, p: &Potential) -> Result<f64, LatticeError> {
    let ev = GpEvaluator::new(p, f.grid())?;
    Ok(ev.breakdown(f.values()).energy())
}

/// 𝓕_{μ,Ω}(u) = 𝓔_Ω(u) − μ·h^dΣ|u|².
pub fn free_energy(f: &Field, p: &Potential, mu: f64) -> Result<f64, LatticeError> {
    let ev = GpEvaluator::new(p, f.grid())?;
    Ok(ev.breakdown(f.values()).free_energy(mu))
}

/// Discrete gradient of 𝓕_{μ,Ω}; see GpEvaluator::gradient.
pub fn gp_gradient(f: &Field, p: &Potential, mu: f64) -> Result<Field, LatticeError> {
    let ev = GpEvaluator::new(p, f.grid())?;
    let mut out = Vec::new();
    ev.gradient(f.values(), mu, &mut out);
    Ok(Field { grid: f.grid().clone(), values: out, scalar: f.scalar() })
}

/// Sup-norm of (−Δ + w∗|f|² − μ)f over the grid nodes; zero only at exact
/// discrete solutions.
pub fn gp_residual(f: &Field, p: &Potential, mu: f64) -> Result<f64, LatticeError> {
    let g = gp_gradient(f, p, mu)?;
    Ok(0.5 * g.values().iter().map(|v| v.norm()).fold(0.0, f64::max))
}

/// Lower bound −μ²/(2ε)·|Ω+B_r| of the grand-canonical energy, from the
/// superstability split: 𝓕 >= ½ε∫(δ_r∗|u|²)² − μ∫δ_r∗|u|² pointwise in the
/// smeared density. Tight for a pure contact interaction with ε = ε₀.
pub fn free_energy_floor(p: &Potential, grid: &Grid, mu: f64) -> f64 {
    let r = p.smear_radius();
    let fat_volume = match grid.dim() {
        1 => grid.extents()[0] + 2.0 * r,
        _ => (grid.extents()[0] + 2.0 * r) * (grid.extents()[1] + 2.0 * r),
    };
    -mu * mu / (2.0 * p.epsilon()) * fat_volume
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Potential;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn rand_field(grid: &Grid, scalar: Scalar, seed: u64) -> Field {
        let mut rng = StdRng::seed_from_u64(seed);
        let vals: Vec<Complex64> = (0..grid.len())
            .map(|_| match scalar {
                Scalar::Real => Complex64::new(rng.gen_range(-1.0..1.0), 0.0),
                Scalar::Complex => Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            })
            .collect();
        Field::from_complex(grid.clone(), vals).unwrap()
    }

    #[test]
    fn grid_construction_and_coords() {
        let g = Grid::line(40.0, 0.02, Boundary::Dirichlet).unwrap();
        assert_eq!(g.len(), 2000);
        assert_eq!(g.coord(0)[0], 0.01);
        assert!(Grid::line(1.0, 0.3, Boundary::Neumann).is_err());
        let r = Grid::rect([2.0, 1.0], 0.25, Boundary::Neumann).unwrap();
        assert_eq!(r.shape(), [8, 4]);
        assert_eq!(r.coord(r.index(1, 2)), [0.375, 0.625]);
    }

    #[test]
    fn field_rejects_nonfinite() {
        let g = Grid::line(1.0, 0.25, Boundary::Neumann).unwrap();
        assert!(Field::from_real(g.clone(), vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(Field::from_real(g, vec![0.0; 3]).is_err());
    }

    #[test]
    fn laplacian_annihilates_constants_under_neumann() {
        let g = Grid::line(5.0, 0.1, Boundary::Neumann).unwrap();
        let f = Field::constant(g, 3.2);
        let lap = laplacian_apply(&f);
        assert!(lap.values().iter().all(|v| v.norm() < 1e-12));

        let g2 = Grid::rect([2.0, 2.0], 0.25, Boundary::Neumann).unwrap();
        let f2 = Field::constant(g2, -1.7);
        assert!(laplacian_apply(&f2).values().iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn laplacian_eigenfunction_oracle() {
        // sin(πx/L) under Dirichlet: stencil error O(h²) away from the walls
        let check = |h: f64| -> f64 {
            let l = 4.0;
            let g = Grid::line(l, h, Boundary::Dirichlet).unwrap();
            let vals: Vec<f64> = (0..g.len()).map(|i| (PI * g.coord(i)[0] / l).sin()).collect();
            let f = Field::from_real(g.clone(), vals.clone()).unwrap();
            let lap = laplacian_apply(&f);
            let lam = -(PI / l) * (PI / l);
            let mut worst: f64 = 0.0;
            for i in 2..g.len() - 2 {
                let err = (lap.values()[i].re - lam * vals[i]).abs() / (lam * vals[i]).abs();
                worst = worst.max(err);
            }
            worst
        };
        let (e1, e2) = (check(0.05), check(0.025));
        assert!(e1 < 1e-3, "coarse error {e1}");
        // O(h²): quartering within a generous band
        assert!(e2 < e1 / 3.0, "refinement {e1} -> {e2} not O(h^2)");
    }

    #[test]
    fn laplacian_spike_stencil() {
        let g = Grid::line(2.0, 0.25, Boundary::Dirichlet).unwrap();
        let h2 = 0.25 * 0.25;
        let mut vals = vec![0.0; g.len()];
        vals[3] = 1.0;
        let f = Field::from_real(g, vals).unwrap();
        let lap = laplacian_apply(&f);
        assert_relative_eq!(lap.values()[3].re, -2.0 / h2);
        assert_relative_eq!(lap.values()[2].re, 1.0 / h2);
        assert_relative_eq!(lap.values()[4].re, 1.0 / h2);
        assert_eq!(lap.values()[5].re, 0.0);
    }

    #[test]
    fn interaction_constant_density_hits_full_integral() {
        // ρ ≡ 1 on (0,40): at the center the truncation deficit of the x^{-6}
        // tail at distance 20 is below 1e-6
        let p = Potential::vdw(1.0, 1).unwrap();
        let g = Grid::line(40.0, 0.02, Boundary::Dirichlet).unwrap();
        let rho = Field::constant(g.clone(), 1.0);
        let conv = interaction_field(&p, &rho).unwrap();
        let mid = g.len() / 2;
        assert_relative_eq!(conv.values()[mid].re, 2.0 * PI / 3.0, epsilon = 2e-4);
    }

    #[test]
    fn interaction_spike_reads_kernel_column() {
        let p = Potential::vdw(1.0, 1).unwrap();
        let g = Grid::line(4.0, 0.1, Boundary::Neumann).unwrap();
        let mut rho = vec![0.0; g.len()];
        let j = 13;
        rho[j] = 1.0;
        let f = Field::from_real(g.clone(), rho).unwrap();
        let conv = interaction_field(&p, &f).unwrap();
        for i in 0..g.len() {
            let dist = (i as f64 - j as f64).abs() * 0.1;
            assert_relative_eq!(conv.values()[i].re, 0.1 * p.tail_at(dist), epsilon = 1e-12);
        }
        // zero density stays zero
        let z = Field::zeros(g);
        let cz = interaction_field(&p, &z).unwrap();
        assert!(cz.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn interaction_rejects_negative_density() {
        let p = Potential::vdw(1.0, 1).unwrap();
        let g = Grid::line(1.0, 0.25, Boundary::Neumann).unwrap();
        let f = Field::from_real(g, vec![0.1, -0.5, 0.1, 0.1]).unwrap();
        assert!(matches!(interaction_field(&p, &f), Err(LatticeError::NegativeDensity { .. })));
    }

    #[test]
    fn fft_matches_direct_convolution() {
        // 1D, 64 nodes
        let p = Potential::vdw(1.0, 1).unwrap();
        let g = Grid::line(6.4, 0.1, Boundary::Neumann).unwrap();
        let kern = InteractionKernel::new(&p, &g).unwrap();
        let mut rng = StdRng::seed_from_u64(42);
        let rho: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(0.0..2.0)).collect();
        let fast = kern.convolve_tail(&rho);
        let direct = kern.convolve_tail_direct(&rho);
        let worst = fast.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-10, "1D FFT vs direct {worst}");

        // 2D, 24 x 16 nodes
        let p2 = Potential::gaussian(1.0, 0.5, 2).unwrap();
        let g2 = Grid::rect([2.4, 1.6], 0.1, Boundary::Dirichlet).unwrap();
        let kern2 = InteractionKernel::new(&p2, &g2).unwrap();
        let rho2: Vec<f64> = (0..g2.len()).map(|_| rng.gen_range(0.0..2.0)).collect();
        let fast2 = kern2.convolve_tail(&rho2);
        let direct2 = kern2.convolve_tail_direct(&rho2);
        let worst2 = fast2.iter().zip(&direct2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst2 < 1e-10, "2D FFT vs direct {worst2}");
    }

    #[test]
    fn energy_closed_forms() {
        // zero field
        let p = Potential::pure_contact(1.0, 1).unwrap();
        let g = Grid::line(8.0, 0.1, Boundary::Neumann).unwrap();
        assert_eq!(energy(&Field::zeros(g.clone()), &p).unwrap(), 0.0);
        // u ≡ 1 with a pure contact: interaction only, ½∫|u|⁴ = L/2
        let f = Field::constant(g.clone(), 1.0);
        assert_relative_eq!(energy(&f, &p).unwrap(), 4.0, epsilon = 1e-12);
        // free energy at μ: L/2 − μL
        assert_relative_eq!(free_energy(&f, &p, 0.7).unwrap(), 4.0 - 0.7 * 8.0, epsilon = 1e-12);
    }

    #[test]
    fn energy_against_naive_double_loop() {
        let p = Potential::vdw(0.8, 1).unwrap();
        let g = Grid::line(3.0, 0.1, Boundary::Dirichlet).unwrap();
        let f = rand_field(&g, Scalar::Real, 7);
        let h = g.spacing();
        // independent oracle: naive loops, textbook formula
        let u: Vec<f64> = f.values().iter().map(|v| v.re).collect();
        let n = u.len();
        let mut kin = u[0] * u[0] + u[n - 1] * u[n - 1];
        for i in 0..n - 1 {
            kin += (u[i + 1] - u[i]) * (u[i + 1] - u[i]);
        }
        kin /= h;
        let mut inter = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dist = (i as f64 - j as f64).abs() * h;
                inter += p.tail_at(dist) * u[i] * u[i] * u[j] * u[j];
            }
        }
        inter *= 0.5 * h * h;
        let expected = kin + inter;
        assert_relative_eq!(energy(&f, &p).unwrap(), expected, max_relative = 1e-10);
    }

    #[test]
    fn gradient_matches_directional_derivatives() {
        // 20 random directions x both boundary conditions x both scalar types
        let p = Potential::vdw(1.0, 1).unwrap();
        for bc in [Boundary::Dirichlet, Boundary::Neumann] {
            for scalar in [Scalar::Real, Scalar::Complex] {
                let g = Grid::line(3.0, 0.1, bc).unwrap();
                let f = rand_field(&g, scalar, 11);
                let ev = GpEvaluator::new(&p, &g).unwrap();
                let mu = 0.9;
                let mut grad = Vec::new();
                ev.gradient(f.values(), mu, &mut grad);
                let hd = g.cell_volume();
                let mut rng = StdRng::seed_from_u64(23);
                for _ in 0..20 {
                    let dir: Vec<Complex64> = (0..g.len())
                        .map(|_| match scalar {
                            Scalar::Real => Complex64::new(rng.gen_range(-1.0..1.0), 0.0),
                            Scalar::Complex => {
                                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                            }
                        })
                        .collect();
                    let t = 1e-5;
                    let shift = |sgn: f64| -> f64 {
                        let vals: Vec<Complex64> =
                            f.values().iter().zip(&dir).map(|(u, d)| u + sgn * t * d).collect();
                        ev.breakdown(&vals).free_energy(mu)
                    };
                    let fd = (shift(1.0) - shift(-1.0)) / (2.0 * t);
                    let inner: f64 = hd
                        * grad
                            .iter()
                            .zip(&dir)
                            .map(|(gv, dv)| gv.re * dv.re + gv.im * dv.im)
                            .sum::<f64>();
                    assert_relative_eq!(inner, fd, max_relative = 1e-6);
                }
            }
        }
    }

    #[test]
    fn gradient_vanishes_at_exact_stationary_point() {
        // constant field, pure contact, Neumann, μ = ε₀|u|²
        let p = Potential::pure_contact(2.0, 1).unwrap();
        let g = Grid::line(5.0, 0.1, Boundary::Neumann).unwrap();
        let f = Field::constant(g.clone(), 1.3);
        let mu = 2.0 * 1.3 * 1.3;
        let res = gp_residual(&f, &p, mu).unwrap();
        assert!(res < 1e-12, "residual {res}");
        // zero field is stationary too
        assert_eq!(gp_residual(&Field::zeros(g.clone()), &p, 0.4).unwrap(), 0.0);
        // a random field is not
        assert!(gp_residual(&rand_field(&g, Scalar::Real, 3), &p, 0.4).unwrap() > 1e-3);
    }

    #[test]
    fn phase_rotation_invariance() {
        let p = Potential::vdw(1.0, 1).unwrap();
        let g = Grid::line(3.0, 0.1, Boundary::Dirichlet).unwrap();
        let f = rand_field(&g, Scalar::Complex, 19);
        let phase = Complex64::from_polar(1.0, PI / 3.0);
        let rotated =
            Field::from_complex(g.clone(), f.values().iter().map(|v| v * phase).collect()).unwrap();
        assert_relative_eq!(f.mass(), rotated.mass(), max_relative = 1e-12);
        let (e1, e2) = (energy(&f, &p).unwrap(), energy(&rotated, &p).unwrap());
        assert_relative_eq!(e1, e2, max_relative = 1e-12);
        let g1 = gp_gradient(&f, &p, 0.5).unwrap();
        let g2 = gp_gradient(&rotated, &p, 0.5).unwrap();
        for (a, b) in g1.values().iter().zip(g2.values()) {
            assert_relative_eq!((a * phase).re, b.re, epsilon = 1e-10);
            assert_relative_eq!((a * phase).im, b.im, epsilon = 1e-10);
        }
    }

    #[test]
    fn energy_nonnegative_for_stable_potentials() {
        for p in [
            Potential::gaussian(1.0, 1.0, 1).unwrap(),
            Potential::pure_contact(1.0, 1).unwrap(),
            Potential::step(1.0, 1.0, 1).unwrap(),
            Potential::vdw(1.0, 1).unwrap(),
        ] {
            assert!(p.stability_check().is_sufficient());
            for seed in 0..5 {
                let g = Grid::line(6.0, 0.1, Boundary::Neumann).unwrap();
                let f = rand_field(&g, Scalar::Real, seed);
                assert!(energy(&f, &p).unwrap() >= -1e-12);
            }
        }
    }

    #[test]
    fn free_energy_floor_holds_for_minimizer_scale_fields() {
        let p = Potential::vdw(1.0, 1).unwrap();
        let g = Grid::line(10.0, 0.1, Boundary::Neumann).unwrap();
        let mu = 5.0;
        let floor = free_energy_floor(&p, &g, mu);
        let uc = (mu / p.int_w()).sqrt();
        let f = Field::constant(g.clone(), uc);
        assert!(free_energy(&f, &p, mu).unwrap() >= floor);
    }
}
