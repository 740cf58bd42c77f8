//! Minimizers for the grand-canonical and canonical discrete problems and the
//! 2D vortex boundary-value problem.
//!
//! All three run the same monotone first-order descent: Barzilai-Borwein step
//! proposals safeguarded by Armijo backtracking, so the objective never
//! increases between iterations. Multistart covers the fluid (constant) and
//! solid (cosine-modulated) basins; the lowest free energy wins, ties broken
//! by seed index.

use crate::criticality::{self, KGrid};
use crate::lattice::{Boundary, Field, GpEvaluator, Grid, LatticeError, Scalar};
use crate::numerics::pairwise_sum_by;
use crate::potential::Potential;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Snapshot(#[from] crate::snapshot::SnapshotError),
    #[error("potential stability is indeterminate and was not acknowledged")]
    IndeterminateStability,
    #[error("no seeds produced (multistart = 0?)")]
    NoSeeds,
    #[error("free energy {value} fell below the admissible floor {floor}")]
    FloorViolated { value: f64, floor: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Seed families for the descent.
#[derive(Debug, Clone)]
pub enum SeedStrategy {
    /// constant, cosine-modulated and random seeds, `multistart` in total
    Auto,
    Constant,
    /// constant profile modulated at the given wavenumber (defaults to the
    /// linear-instability wavenumber k₀ when absent)
    Cosine { wavenumber: Option<f64> },
    Random,
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    /// converged when residual <= grad_tol·max(1, μ) and the energy has
    /// plateaued (relative change < 1e-12 over 10 iterations)
    pub grad_tol: f64,
    pub armijo_c1: f64,
    pub shrink: f64,
    pub seed_strategy: SeedStrategy,
    pub multistart: usize,
    pub rng_seed: u64,
    /// proceed when the stability check is indeterminate (the check is only
    /// sufficient; pointwise nonnegative tails always pass it)
    pub acknowledge_indeterminate: bool,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            max_iters: 200_000,
            grad_tol: 1e-6,
            armijo_c1: 1e-4,
            shrink: 0.5,
            seed_strategy: SeedStrategy::Auto,
            multistart: 3,
            rng_seed: 0,
            acknowledge_indeterminate: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizationResult {
    pub field: Field,
    /// 𝓔_Ω of the final iterate
    pub energy: f64,
    /// 𝓕_{μ,Ω} = energy − multiplier·mass (exact identity of the stored values)
    pub free_energy: f64,
    /// h^d Σ|u|²
    pub mass: f64,
    /// μ as given (grand-canonical) or the Rayleigh estimate (canonical)
    pub multiplier: f64,
    /// sup-norm of (−Δ + w∗|u|² − μ)u over the grid
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// index of the winning seed
    pub seed_index: usize,
}

/// The fluid candidate u ≡ (μ/∫w)^{1/2}.
pub fn constant_candidate(p: &Potential, mu: f64, grid: &Grid) -> Field {
    let level = if mu > 0.0 { (mu / p.int_w()).sqrt() } else { 0.0 };
    Field::constant(grid.clone(), level)
}

struct DescentOutcome {
    u: Vec<Complex64>,
    value: f64,
    residual: f64,
    iterations: usize,
    converged: bool,
}

/// Monotone BB descent with Armijo backtracking.
///
/// `eval` returns the objective and fills the gradient; `project` restores
/// feasibility in place (identity for unconstrained problems). `residual_of`
/// maps the current gradient to the convergence residual.
fn descend<E, P, R>(
    mut u: Vec<Complex64>,
    weight: f64,
    tol: f64,
    opts: &MinimizeOptions,
    mut eval: E,
    project: P,
    residual_of: R,
) -> DescentOutcome
where
    E: FnMut(&[Complex64], &mut Vec<Complex64>) -> f64,
    P: Fn(&mut Vec<Complex64>),
    R: Fn(&[Complex64], &[Complex64]) -> f64,
{
    let mut grad = Vec::new();
    let mut grad_next = Vec::new();
    let mut value = eval(&u, &mut grad);
    let mut step: f64 = 1e-4;
    let mut plateau = 0usize;
    let mut trial: Vec<Complex64> = Vec::with_capacity(u.len());
    for it in 0..opts.max_iters {
        let gn2 = weight * pairwise_sum_by(grad.len(), |i| grad[i].norm_sqr());
        let residual = residual_of(&u, &grad);
        if residual <= tol && plateau >= 10 {
            return DescentOutcome { u, value, residual, iterations: it, converged: true };
        }
        if gn2 == 0.0 {
            // exact stationary point; let the plateau counter run out
            plateau += 1;
            if plateau >= 10 && residual <= tol {
                return DescentOutcome { u, value, residual, iterations: it, converged: true };
            }
            continue;
        }
        let mut s = step.clamp(1e-18, 1e12);
        let mut accepted = false;
        let mut value_next = value;
        for _ in 0..60 {
            trial.clear();
            trial.extend(u.iter().zip(&grad).map(|(uv, gv)| uv - s * gv));
            project(&mut trial);
            value_next = eval(&trial, &mut grad_next);
            if value_next <= value - opts.armijo_c1 * s * gn2 {
                accepted = true;
                break;
            }
            s *= opts.shrink;
        }
        if !accepted {
            // the line search hit numerical floor; report where we stand
            return DescentOutcome { u, value, residual, iterations: it, converged: residual <= tol };
        }
        // Barzilai-Borwein step for the next iteration (fallback: grow)
        let mut sy = 0.0;
        let mut ss = 0.0;
        for i in 0..u.len() {
            let du = trial[i] - u[i];
            let dg = grad_next[i] - grad[i];
            sy += du.re * dg.re + du.im * dg.im;
            ss += du.norm_sqr();
        }
        step = if sy > 0.0 { ss / sy } else { s * 2.0 };
        // descent is monotone by construction
        debug_assert!(value_next <= value + 1e-12 * value.abs().max(1.0));
        let rel_change = (value - value_next).abs() / value_next.abs().max(1.0);
        plateau = if rel_change < 1e-12 { plateau + 1 } else { 0 };
        std::mem::swap(&mut u, &mut trial);
        std::mem::swap(&mut grad, &mut grad_next);
        value = value_next;
    }
    let residual = residual_of(&u, &grad);
    DescentOutcome { u, value, residual, iterations: opts.max_iters, converged: false }
}

fn check_stability(p: &Potential, opts: &MinimizeOptions) -> Result<(), SolverError> {
    if !opts.acknowledge_indeterminate && !p.stability_check().is_sufficient() {
        return Err(SolverError::IndeterminateStability);
    }
    Ok(())
}

/// Default modulation wavenumber: the linear-instability k₀ when it exists,
/// otherwise an inverse-interaction-range scale.
fn modulation_wavenumber(p: &Potential) -> f64 {
    if let Ok((_, Some(k0))) = criticality::instability_threshold(p, KGrid::for_potential(p)) {
        return k0;
    }
    let m = p.moments();
    match m.second {
        Some(m2) if m2 > 0.0 => (m.abs_integral / m2).sqrt(),
        _ => 1.0,
    }
}

fn build_seeds(
    p: &Potential,
    mu: f64,
    grid: &Grid,
    opts: &MinimizeOptions,
) -> Result<Vec<Vec<Complex64>>, SolverError> {
    let n = grid.len();
    let level = if mu > 0.0 { (mu / p.int_w()).sqrt() } else { 0.0 };
    let count = opts.multistart.max(1);
    let constant = || vec![Complex64::new(level, 0.0); n];
    let cosine = |k: f64| -> Vec<Complex64> {
        let center = [
            grid.origin()[0] + 0.5 * grid.extents()[0],
            grid.origin()[1] + 0.5 * grid.extents()[1],
        ];
        (0..n)
            .map(|i| {
                let c = grid.coord(i);
                let phase = k * (c[0] - center[0]) + if grid.dim() == 2 { k * (c[1] - center[1]) } else { 0.0 };
                let factor = (1.0 + 0.3 * phase.cos()).max(1e-9).sqrt();
                Complex64::new(level * factor, 0.0)
            })
            .collect()
    };
    let random = |instance: u64| -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed.wrapping_add(instance));
        (0..n).map(|_| Complex64::new(level * rng.gen_range(0.5..1.5), 0.0)).collect()
    };
    let seeds = match &opts.seed_strategy {
        SeedStrategy::Constant => vec![constant()],
        SeedStrategy::Cosine { wavenumber } => {
            let k = wavenumber.unwrap_or_else(|| modulation_wavenumber(p));
            vec![cosine(k)]
        }
        SeedStrategy::Random => (0..count as u64).map(random).collect(),
        SeedStrategy::File(path) => {
            let f = crate::snapshot::read_field(path)?;
            if f.grid() != grid {
                return Err(SolverError::InvalidArgument(format!(
                    "seed snapshot grid does not match the requested grid ({:?})",
                    path
                )));
            }
            vec![f.values().to_vec()]
        }
        SeedStrategy::Auto => {
            let mut out = vec![constant()];
            if count > 1 {
                let k = modulation_wavenumber(p);
                out.push(cosine(k));
            }
            for i in 2..count as u64 {
                out.push(random(i - 2));
            }
            out
        }
    };
    if seeds.is_empty() {
        return Err(SolverError::NoSeeds);
    }
    Ok(seeds)
}

fn is_effectively_real(u: &[Complex64]) -> bool {
    u.iter().all(|v| v.im == 0.0)
}

fn assemble_result(
    grid: &Grid,
    ev: &GpEvaluator,
    out: DescentOutcome,
    mu: f64,
    seed_index: usize,
) -> MinimizationResult {
    let breakdown = ev.breakdown(&out.u);
    let scalar = if is_effectively_real(&out.u) { Scalar::Real } else { Scalar::Complex };
    let field = match scalar {
        Scalar::Real => Field::from_real(grid.clone(), out.u.iter().map(|v| v.re).collect()).unwrap(),
        Scalar::Complex => Field::from_complex(grid.clone(), out.u).unwrap(),
    };
    MinimizationResult {
        field,
        energy: breakdown.energy(),
        free_energy: breakdown.free_energy(mu),
        mass: breakdown.mass,
        multiplier: mu,
        residual: out.residual,
        iterations: out.iterations,
        converged: out.converged,
        seed_index,
    }
}

fn pick_best(results: Vec<(usize, MinimizationResult)>) -> MinimizationResult {
    // lowest free energy; ties (< 1e-12 relative) broken by seed index
    let mut best: Option<(usize, MinimizationResult)> = None;
    for (idx, r) in results {
        best = match best {
            None => Some((idx, r)),
            Some((bi, b)) => {
                let tie = (r.free_energy - b.free_energy).abs()
                    <= 1e-12 * b.free_energy.abs().max(1.0);
                if (r.free_energy < b.free_energy && !tie) || (tie && idx < bi) {
                    Some((idx, r))
                } else {
                    Some((bi, b))
                }
            }
        };
    }
    best.unwrap().1
}

/// Minimize 𝓕_{μ,Ω} over all fields on the grid. Multistart instances run in
/// parallel; the returned free energy never exceeds the constant candidate's
/// when the strategy includes it.
pub fn minimize_grand_canonical(
    p: &Potential,
    mu: f64,
    grid: &Grid,
    opts: &MinimizeOptions,
) -> Result<MinimizationResult, SolverError> {
    check_stability(p, opts)?;
    let ev = GpEvaluator::new(p, grid)?;
    let seeds = build_seeds(p, mu, grid, opts)?;
    let tol = opts.grad_tol * mu.abs().max(1.0);
    let weight = grid.cell_volume();
    let results: Vec<(usize, MinimizationResult)> = seeds
        .into_par_iter()
        .enumerate()
        .map(|(idx, seed)| {
            let ev_local = GpEvaluator::new(p, grid).expect("kernel construction");
            let out = descend(
                seed,
                weight,
                tol,
                opts,
                |u, g| ev_local.breakdown_and_gradient(u, mu, g).free_energy(mu),
                |_| {},
                |_, g| 0.5 * g.iter().map(|v| v.norm()).fold(0.0, f64::max),
            );
            (idx, assemble_result(grid, &ev_local, out, mu, idx))
        })
        .collect();
    let best = pick_best(results);
    let floor = crate::lattice::free_energy_floor(p, grid, mu);
    if best.free_energy < floor - 1e-9 * floor.abs().max(1.0) {
        return Err(SolverError::FloorViolated { value: best.free_energy, floor });
    }
    let _ = ev;
    Ok(best)
}

/// Minimize 𝓔_Ω at fixed mass λ by projected descent on the sphere
/// {h^dΣ|u|² = λ}; the multiplier is the Rayleigh quotient
/// ⟨u, (−Δ + w∗|u|²)u⟩/λ of the final iterate.
pub fn minimize_canonical(
    p: &Potential,
    lambda: f64,
    grid: &Grid,
    opts: &MinimizeOptions,
) -> Result<MinimizationResult, SolverError> {
    if !(lambda > 0.0) {
        return Err(SolverError::InvalidArgument("canonical mass must be positive".into()));
    }
    check_stability(p, opts)?;
    let weight = grid.cell_volume();
    let rho_guess = lambda / grid.volume();
    let mu_guess = rho_guess * p.int_w();
    let seeds = build_seeds(p, mu_guess, grid, opts)?;
    let renormalize = move |u: &mut Vec<Complex64>| {
        let m = weight * pairwise_sum_by(u.len(), |i| u[i].norm_sqr());
        let s = if m > 0.0 { (lambda / m).sqrt() } else { 0.0 };
        for v in u.iter_mut() {
            *v *= s;
        }
    };
    let results: Vec<(usize, MinimizationResult)> = seeds
        .into_par_iter()
        .enumerate()
        .map(|(idx, mut seed)| {
            renormalize(&mut seed);
            let ev_local = GpEvaluator::new(p, grid).expect("kernel construction");
            // gradient of 𝓔 projected on the tangent space of the sphere
            let eval = |u: &[Complex64], g: &mut Vec<Complex64>| -> f64 {
                let b = ev_local.breakdown_and_gradient(u, 0.0, g);
                let rayleigh = (b.kinetic + 2.0 * b.interaction) / lambda;
                for (gv, uv) in g.iter_mut().zip(u) {
                    *gv -= 2.0 * rayleigh * uv;
                }
                b.energy()
            };
            let residual =
                |_: &[Complex64], g: &[Complex64]| 0.5 * g.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let tol_local = opts.grad_tol * mu_guess.abs().max(1.0);
            let out = descend(seed, weight, tol_local, opts, eval, &renormalize, residual);
            let b = ev_local.breakdown(&out.u);
            let rayleigh = (b.kinetic + 2.0 * b.interaction) / lambda;
            let mut r = assemble_result(grid, &ev_local, out, rayleigh, idx);
            // canonical selection minimizes 𝓔; freeze the identity
            r.free_energy = r.energy - rayleigh * r.mass;
            (idx, r)
        })
        .collect();
    // lowest canonical energy wins
    let mut best: Option<(usize, MinimizationResult)> = None;
    for (idx, r) in results {
        best = match best {
            None => Some((idx, r)),
            Some((bi, b)) => {
                let tie = (r.energy - b.energy).abs() <= 1e-12 * b.energy.abs().max(1.0);
                if (r.energy < b.energy && !tie) || (tie && idx < bi) {
                    Some((idx, r))
                } else {
                    Some((bi, b))
                }
            }
        };
    }
    Ok(best.unwrap().1)
}

/// Vortex problem on the disk of the given radius: minimize
/// ∫|∇u|² + ½∬ (|u|²−ρ)(|u|²−ρ)w over complex fields on the disk-in-square
/// grid, the boundary ring clamped to g(x) = √ρ·(x₁+ix₂)/R; nodes outside the
/// disk are inactive. ρ = μ/∫w.
pub fn solve_vortex_disk(
    p: &Potential,
    mu: f64,
    radius: f64,
    spacing: f64,
    opts: &MinimizeOptions,
) -> Result<MinimizationResult, SolverError> {
    if p.dim() != 2 {
        return Err(SolverError::InvalidArgument("vortex problem needs a 2D potential".into()));
    }
    if !(mu > 0.0 && radius > 0.0) {
        return Err(SolverError::InvalidArgument("vortex needs mu > 0 and radius > 0".into()));
    }
    check_stability(p, opts)?;
    let grid = Grid::rect([2.0 * radius, 2.0 * radius], spacing, Boundary::Neumann)?
        .with_origin([-radius, -radius]);
    let n = grid.len();
    let rho_ref = mu / p.int_w();
    let ring_width = 1.5 * spacing;
    // node classification
    let mut active = vec![false; n];
    let mut in_disk = vec![false; n];
    for i in 0..n {
        let c = grid.coord(i);
        let r = (c[0] * c[0] + c[1] * c[1]).sqrt();
        in_disk[i] = r <= radius;
        active[i] = r < radius - ring_width;
    }
    // kinetic gaps: both endpoints inside the disk
    let [nx, ny] = grid.shape();
    let mut gaps: Vec<(usize, usize)> = Vec::new();
    for ix in 0..nx {
        for iy in 0..ny {
            let idx = ix * ny + iy;
            if !in_disk[idx] {
                continue;
            }
            if ix + 1 < nx && in_disk[idx + ny] {
                gaps.push((idx, idx + ny));
            }
            if iy + 1 < ny && in_disk[idx + 1] {
                gaps.push((idx, idx + 1));
            }
        }
    }
    let ev = GpEvaluator::new(p, &grid)?;
    let kernel = ev.kernel();
    let hd = grid.cell_volume();
    let h2 = spacing * spacing;
    let contact = p.contact_coefficient();
    // boundary data and seed
    let boundary_value = |c: [f64; 2]| -> Complex64 {
        Complex64::new(c[0], c[1]) * (rho_ref.sqrt() / radius)
    };
    let xi2 = 1.0 / mu;
    let mut seed = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let c = grid.coord(i);
        if !in_disk[i] {
            continue;
        }
        if active[i] {
            let r2 = c[0] * c[0] + c[1] * c[1];
            seed[i] = Complex64::new(c[0], c[1]) * (rho_ref.sqrt() / (r2 + xi2).sqrt());
        } else {
            seed[i] = boundary_value(c);
        }
    }
    let eval = |u: &[Complex64], g: &mut Vec<Complex64>| -> f64 {
        let phi: Vec<f64> =
            u.iter().zip(&in_disk).map(|(v, &d)| if d { v.norm_sqr() - rho_ref } else { 0.0 }).collect();
        let conv = kernel.convolve_tail(&phi);
        let kinetic = (hd / h2) * pairwise_sum_by(gaps.len(), |gi| (u[gaps[gi].1] - u[gaps[gi].0]).norm_sqr());
        let inter = 0.5 * hd * pairwise_sum_by(n, |i| phi[i] * conv[i])
            + 0.5 * contact * hd * pairwise_sum_by(n, |i| phi[i] * phi[i]);
        g.clear();
        g.resize(n, Complex64::new(0.0, 0.0));
        for &(a, b) in &gaps {
            let d = u[b] - u[a];
            g[a] -= d;
            g[b] += d;
        }
        // after the loop g holds −L (graph Laplacian), so −Δu = g/h²
        for i in 0..n {
            if active[i] {
                let pot = conv[i] + contact * phi[i];
                g[i] = 2.0 * (g[i] / h2 + pot * u[i]);
            } else {
                g[i] = Complex64::new(0.0, 0.0);
            }
        }
        kinetic + inter
    };
    let residual =
        |_: &[Complex64], g: &[Complex64]| 0.5 * g.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let tol = opts.grad_tol * mu.abs().max(1.0);
    let out = descend(seed, hd, tol, opts, eval, |_| {}, residual);
    let mass = hd
        * pairwise_sum_by(n, |i| if in_disk[i] { out.u[i].norm_sqr() } else { 0.0 });
    let objective = out.value;
    let field = Field::from_complex(grid.clone(), out.u).unwrap();
    let floor = crate::lattice::free_energy_floor(p, &grid, mu);
    if objective < floor - 1e-9 * floor.abs().max(1.0) {
        return Err(SolverError::FloorViolated { value: objective, floor });
    }
    Ok(MinimizationResult {
        field,
        energy: objective + mu * mass,
        free_energy: objective,
        mass,
        multiplier: mu,
        residual: out.residual,
        iterations: out.iterations,
        converged: out.converged,
        seed_index: 0,
    })
}
