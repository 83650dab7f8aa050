//! Static scalar-field computations on a discrete 3D grid.
//!
//! The grid is `n³` sites with unit spacing and zero Dirichlet values just
//! outside the box (a ghost shell), approximating a field that vanishes at
//! infinity. Sources live on the central z-plane. The field equation
//! `(−∇² + m²)·φ = A·w` uses the 7-point stencil and is solved by conjugate
//! gradients to a fixed relative residual.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("grid size must be at least 4, got {0}")]
    GridTooSmall(usize),
    #[error("mass squared must be nonnegative, got {0}")]
    NegativeMass(f64),
    #[error("source of diameter {diameter} needs a box of at least twice that, got n = {n}")]
    SourceTooWide { diameter: f64, n: usize },
    #[error("solver did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },
    #[error("operation requires {0}")]
    Unsupported(&'static str),
}

/// Residual target relative to `‖A·w‖`.
const RESIDUAL_TARGET: f64 = 1e-8;

/// Discrete scalar field with a planar source.
#[derive(Debug, Clone)]
pub struct ScalarFieldGrid {
    n: usize,
    mass2: f64,
    coupling: f64,
    source: Vec<f64>,
    field: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Surface-form and volume-form evaluations of the field energy.
#[derive(Debug, Clone, Copy)]
pub struct EnergyForms {
    /// `−(A/2)·Σ_plane w·φ`.
    pub surface: f64,
    /// `(1/2)·Σ(∇φ)² + (m²/2)·Σφ² − A·Σ w·φ`.
    pub volume: f64,
}

impl ScalarFieldGrid {
    pub fn new(n: usize, mass2: f64, coupling: f64) -> Result<Self, FieldError> {
        if n < 4 {
            return Err(FieldError::GridTooSmall(n));
        }
        if mass2 < 0.0 {
            return Err(FieldError::NegativeMass(mass2));
        }
        Ok(Self { n, mass2, coupling, source: vec![0.0; n * n * n], field: None })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mass2(&self) -> f64 {
        self.mass2
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    #[inline]
    fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (x * self.n + y) * self.n + z
    }

    fn center(&self) -> usize {
        self.n / 2
    }

    /// Sets the planar source from offsets relative to the plane center;
    /// the field must be re-solved afterwards.
    pub fn set_plane_source<F: Fn(i64, i64) -> f64>(&mut self, f: F) {
        let c = self.center() as i64;
        let zc = self.center();
        self.source.fill(0.0);
        for x in 0..self.n {
            for y in 0..self.n {
                let v = f(x as i64 - c, y as i64 - c);
                let idx = self.index(x, y, zc);
                self.source[idx] = v;
            }
        }
        self.field = None;
    }

    /// Uniform disk of value `w0` and the given diameter on the source plane.
    pub fn set_disk_source(&mut self, diameter: f64, w0: f64) -> Result<(), FieldError> {
        if 2.0 * diameter > self.n as f64 {
            return Err(FieldError::SourceTooWide { diameter, n: self.n });
        }
        let r2 = (diameter / 2.0) * (diameter / 2.0);
        self.set_plane_source(|dx, dy| if (dx * dx + dy * dy) as f64 <= r2 { w0 } else { 0.0 });
        Ok(())
    }

    /// Single-site source of weight `w0` at the plane center.
    pub fn set_point_source(&mut self, w0: f64) {
        self.set_plane_source(|dx, dy| if dx == 0 && dy == 0 { w0 } else { 0.0 });
    }

    pub fn source_at(&self, dx: i64, dy: i64) -> f64 {
        let c = self.center() as i64;
        self.source[self.index((c + dx) as usize, (c + dy) as usize, self.center())]
    }

    /// Solved field value at a plane offset; panics when not solved.
    pub fn phi_at(&self, dx: i64, dy: i64) -> f64 {
        let c = self.center() as i64;
        let idx = self.index((c + dx) as usize, (c + dy) as usize, self.center());
        self.field.as_ref().expect("field not solved")[idx]
    }

    pub fn is_solved(&self) -> bool {
        self.field.is_some()
    }

    /// CSV `(x, y, phi)` over the source plane.
    pub fn write_plane_csv<W: std::io::Write>(&self, w: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["x", "y", "phi"])?;
        let zc = self.center();
        let phi = self.field.as_ref().expect("field not solved");
        for x in 0..self.n {
            for y in 0..self.n {
                wtr.write_record([
                    x.to_string(),
                    y.to_string(),
                    format!("{:.17e}", phi[self.index(x, y, zc)]),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Padded-array stencil apply: `out = (−∇² + m²)·x` on the interior.
fn apply_operator(n: usize, mass2: f64, x: &[f64], out: &mut [f64]) {
    let stride_z = 1usize;
    let stride_y = n + 2;
    let stride_x = (n + 2) * (n + 2);
    let diag = 6.0 + mass2;
    for i in 1..=n {
        for j in 1..=n {
            let base = i * stride_x + j * stride_y;
            for k in 1..=n {
                let c = base + k;
                out[c] = diag * x[c]
                    - x[c - stride_x]
                    - x[c + stride_x]
                    - x[c - stride_y]
                    - x[c + stride_y]
                    - x[c - stride_z]
                    - x[c + stride_z];
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `(−∇² + m²)·φ = A·w` with zero boundary values by conjugate
/// gradients; signals non-convergence with the reached residual.
pub fn solve_static_field(grid: &mut ScalarFieldGrid) -> Result<SolveStats, FieldError> {
    let n = grid.n;
    let padded = (n + 2) * (n + 2) * (n + 2);
    let mut b = vec![0.0f64; padded];
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                b[(x + 1) * (n + 2) * (n + 2) + (y + 1) * (n + 2) + z + 1] =
                    grid.coupling * grid.source[grid.index(x, y, z)];
            }
        }
    }
    let b_norm = dot(&b, &b).sqrt();
    let mut phi = vec![0.0f64; padded];
    let mut stats = SolveStats { iterations: 0, residual: 0.0 };
    if b_norm > 0.0 {
        let tol = RESIDUAL_TARGET * b_norm;
        let mut r = b.clone();
        let mut p = r.clone();
        let mut ap = vec![0.0f64; padded];
        let mut rs = dot(&r, &r);
        let max_iterations = 30 * n + 1000;
        let mut converged = false;
        for it in 0..max_iterations {
            apply_operator(n, grid.mass2, &p, &mut ap);
            let alpha = rs / dot(&p, &ap);
            for i in 0..padded {
                phi[i] += alpha * p[i];
            }
            for i in 0..padded {
                r[i] -= alpha * ap[i];
            }
            let rs_next = dot(&r, &r);
            stats.iterations = it + 1;
            stats.residual = rs_next.sqrt();
            if stats.residual < tol {
                converged = true;
                break;
            }
            let beta = rs_next / rs;
            rs = rs_next;
            for i in 0..padded {
                p[i] = r[i] + beta * p[i];
            }
        }
        if !converged {
            return Err(FieldError::NonConvergence {
                residual: stats.residual,
                iterations: stats.iterations,
            });
        }
    }
    let mut unpadded = vec![0.0f64; n * n * n];
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                unpadded[grid.index(x, y, z)] =
                    phi[(x + 1) * (n + 2) * (n + 2) + (y + 1) * (n + 2) + z + 1];
            }
        }
    }
    grid.field = Some(unpadded);
    Ok(stats)
}

/// Both evaluations of the minimized field energy. The volume form sums
/// forward-difference gradients including the edges into the zero ghost
/// shell, so the two forms agree to solver tolerance.
pub fn energy_functional(grid: &ScalarFieldGrid) -> EnergyForms {
    let phi = grid.field.as_ref().expect("field not solved");
    let n = grid.n;
    let a = grid.coupling;
    let zc = grid.center();
    let mut source_phi = 0.0;
    for x in 0..n {
        for y in 0..n {
            let idx = grid.index(x, y, zc);
            source_phi += grid.source[idx] * phi[idx];
        }
    }
    let surface = -0.5 * a * source_phi;

    let mut grad_sq = 0.0;
    let at = |x: i64, y: i64, z: i64| -> f64 {
        if x < 0 || y < 0 || z < 0 || x >= n as i64 || y >= n as i64 || z >= n as i64 {
            0.0
        } else {
            phi[grid.index(x as usize, y as usize, z as usize)]
        }
    };
    for x in -1..n as i64 {
        for y in 0..n as i64 {
            for z in 0..n as i64 {
                let d = at(x + 1, y, z) - at(x, y, z);
                grad_sq += d * d;
            }
        }
    }
    for y in -1..n as i64 {
        for x in 0..n as i64 {
            for z in 0..n as i64 {
                let d = at(x, y + 1, z) - at(x, y, z);
                grad_sq += d * d;
            }
        }
    }
    for z in -1..n as i64 {
        for x in 0..n as i64 {
            for y in 0..n as i64 {
                let d = at(x, y, z + 1) - at(x, y, z);
                grad_sq += d * d;
            }
        }
    }
    let phi_sq: f64 = phi.iter().map(|v| v * v).sum();
    let volume = 0.5 * grad_sq + 0.5 * grid.mass2 * phi_sq - a * source_phi;
    EnergyForms { surface, volume }
}

/// Chemical potential of the continuum disk: solves the field of a uniform
/// unit disk of the given diameter and returns `μ = 2·w0·A·φ(center)`,
/// which approaches `w0·A²·L/2` for a massless field.
pub fn chemical_potential_continuum(
    grid: &mut ScalarFieldGrid,
    w0: f64,
    diameter: f64,
) -> Result<f64, FieldError> {
    grid.set_disk_source(diameter, 1.0)?;
    solve_static_field(grid)?;
    Ok(2.0 * w0 * grid.coupling * grid.phi_at(0, 0))
}

/// Energy of a derivative-coupled planar source against its predicted
/// contact form.
///
/// The grid's plane source is replaced by the forward difference `∂w/∂x` of
/// the given profile; the full minimized field energy is returned next to
/// the local prediction `−(A²/2)·Σ w²`.
pub fn goldstone_contact_energy(
    grid: &mut ScalarFieldGrid,
    profile: &dyn Fn(i64, i64) -> f64,
) -> Result<(f64, f64), FieldError> {
    if grid.mass2 != 0.0 {
        return Err(FieldError::Unsupported("a massless field (m² = 0)"));
    }
    let n = grid.n as i64;
    let c = grid.center() as i64;
    let w = |dx: i64, dy: i64| -> f64 {
        // profile vanishes outside the box
        if dx + c < 0 || dx + c >= n || dy + c < 0 || dy + c >= n {
            0.0
        } else {
            profile(dx, dy)
        }
    };
    grid.set_plane_source(|dx, dy| w(dx + 1, dy) - w(dx, dy));
    solve_static_field(grid)?;
    let a = grid.coupling;
    let mut field_energy = 0.0;
    let mut w_sq = 0.0;
    for dx in -c..(n - c) {
        for dy in -c..(n - c) {
            field_energy += grid.source_at(dx, dy) * grid.phi_at(dx, dy);
            let wv = w(dx, dy);
            w_sq += wv * wv;
        }
    }
    Ok((-0.5 * a * field_energy, -0.5 * a * a * w_sq))
}
