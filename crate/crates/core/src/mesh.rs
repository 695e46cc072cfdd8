//! Uniform P1 meshes of the unit interval and unit square, and zero-trace
//! vector fields on them.
//!
//! The square is cut into `m²` cells of side `h = 1/m`, each split along the
//! diagonal from its lower-left to its upper-right corner, so there are `2m²`
//! right triangles of area `h²/2`. Cells are never stored: vertex indices and
//! gradients are recomputed from the structured layout, which keeps meshes
//! with millions of triangles cheap.
//!
//! The L² inner product uses the lumped (diagonal) mass matrix, so the
//! discrete Hilbert space is a weighted Euclidean space.

use std::fmt::Write as _;
use std::io;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::mat2::Mat2;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("unsupported dimension n={0} (expected 1 or 2)")]
    UnsupportedDimension(usize),
    #[error("unsupported component count N={0} (expected 1 or 2)")]
    UnsupportedComponents(usize),
    #[error("resolution m={0} too small (need m >= 2)")]
    ResolutionTooSmall(usize),
    #[error("field has {got} values, mesh expects {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field is nonzero at boundary vertex {0}")]
    NonZeroBoundary(usize),
}

/// Uniform simplicial mesh of `[0,1]ⁿ` carrying `N`-component fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    components: usize,
    resolution: usize,
    coords: Vec<[f64; 2]>,
    boundary: Vec<bool>,
    mass: Vec<f64>,
}

impl Mesh {
    pub fn new(dim: usize, components: usize, resolution: usize) -> Result<Arc<Mesh>, MeshError> {
        if !(1..=2).contains(&dim) {
            return Err(MeshError::UnsupportedDimension(dim));
        }
        if !(1..=2).contains(&components) {
            return Err(MeshError::UnsupportedComponents(components));
        }
        if resolution < 2 {
            return Err(MeshError::ResolutionTooSmall(resolution));
        }
        let m = resolution;
        let h = 1.0 / m as f64;
        let side = m + 1;
        let (coords, boundary, mass) = if dim == 1 {
            let coords = (0..side).map(|i| [i as f64 * h, 0.0]).collect();
            let boundary = (0..side).map(|i| i == 0 || i == m).collect();
            let mass = (0..side).map(|i| if i == 0 || i == m { 0.5 * h } else { h }).collect();
            (coords, boundary, mass)
        } else {
            let mut coords = Vec::with_capacity(side * side);
            let mut boundary = Vec::with_capacity(side * side);
            for j in 0..side {
                for i in 0..side {
                    coords.push([i as f64 * h, j as f64 * h]);
                    boundary.push(i == 0 || j == 0 || i == m || j == m);
                }
            }
            // each triangle gives a third of its area to each of its corners
            let mut mass = vec![0.0; side * side];
            let share = 0.5 * h * h / 3.0;
            for j in 0..m {
                for i in 0..m {
                    let v00 = j * side + i;
                    let v10 = v00 + 1;
                    let v01 = v00 + side;
                    let v11 = v01 + 1;
                    for v in [v00, v10, v11, v00, v11, v01] {
                        mass[v] += share;
                    }
                }
            }
            (coords, boundary, mass)
        };
        Ok(Arc::new(Mesh {
            dim,
            components,
            resolution,
            coords,
            boundary,
            mass,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Cell size `h = 1/m`.
    pub fn h(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    pub fn vertex_count(&self) -> usize {
        self.coords.len()
    }

    pub fn cell_count(&self) -> usize {
        match self.dim {
            1 => self.resolution,
            _ => 2 * self.resolution * self.resolution,
        }
    }

    /// Length (n=1) or area (n=2) of every cell.
    pub fn cell_area(&self) -> f64 {
        let h = self.h();
        match self.dim {
            1 => h,
            _ => 0.5 * h * h,
        }
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn is_boundary(&self, vertex: usize) -> bool {
        self.boundary[vertex]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    /// Lumped mass weight per vertex; the weights sum to one.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Number of scalar unknowns, `vertex_count · N`.
    pub fn dof_count(&self) -> usize {
        self.vertex_count() * self.components
    }

    /// Vertices of a cell. Intervals repeat their right end point.
    pub fn cell_vertices(&self, cell: usize) -> [usize; 3] {
        if self.dim == 1 {
            return [cell, cell + 1, cell + 1];
        }
        let m = self.resolution;
        let side = m + 1;
        let sq = cell / 2;
        let v00 = (sq / m) * side + sq % m;
        let v11 = v00 + side + 1;
        if cell.is_multiple_of(2) {
            [v00, v00 + 1, v11]
        } else {
            [v00, v11, v00 + side]
        }
    }

    /// Constant gradient of the affine interpolant of `values` on `cell`.
    ///
    /// Row `r` holds the spatial gradient of component `r`; rows and columns
    /// beyond `N` and `n` are zero.
    pub fn cell_gradient(&self, values: &[f64], cell: usize) -> Mat2 {
        let nc = self.components;
        let inv_h = self.resolution as f64;
        let comp = |v: usize, r: usize| if r < nc { values[v * nc + r] } else { 0.0 };
        let [a, b, c] = self.cell_vertices(cell);
        if self.dim == 1 {
            let d = |r| (comp(b, r) - comp(a, r)) * inv_h;
            return Mat2::new(d(0), 0.0, d(1), 0.0);
        }
        let row = |r: usize| -> [f64; 2] {
            if cell.is_multiple_of(2) {
                // a = v00, b = v10, c = v11
                [(comp(b, r) - comp(a, r)) * inv_h, (comp(c, r) - comp(b, r)) * inv_h]
            } else {
                // a = v00, b = v11, c = v01
                [(comp(b, r) - comp(c, r)) * inv_h, (comp(c, r) - comp(a, r)) * inv_h]
            }
        };
        Mat2::from_rows(row(0), row(1))
    }

    /// Adds the adjoint of [`cell_gradient`](Self::cell_gradient) applied to
    /// `g` into `out`: afterwards `out · δu` has grown by `g : D(δu)|_cell`.
    pub fn scatter_cell(&self, g: Mat2, cell: usize, out: &mut [f64]) {
        let nc = self.components;
        let inv_h = self.resolution as f64;
        let [a, b, c] = self.cell_vertices(cell);
        let rows = [g.row1(), g.row2()];
        for (r, gr) in rows.iter().enumerate().take(nc) {
            if self.dim == 1 {
                out[a * nc + r] -= gr[0] * inv_h;
                out[b * nc + r] += gr[0] * inv_h;
            } else if cell.is_multiple_of(2) {
                out[a * nc + r] -= gr[0] * inv_h;
                out[b * nc + r] += (gr[0] - gr[1]) * inv_h;
                out[c * nc + r] += gr[1] * inv_h;
            } else {
                out[b * nc + r] += gr[0] * inv_h;
                out[c * nc + r] += (gr[1] - gr[0]) * inv_h;
                out[a * nc + r] -= gr[1] * inv_h;
            }
        }
    }
}

/// Builds a mesh; see [`Mesh::new`].
pub fn build_mesh(dim: usize, components: usize, resolution: usize) -> Result<Arc<Mesh>, MeshError> {
    Mesh::new(dim, components, resolution)
}

/// A piecewise-affine `N`-component field vanishing on the boundary.
///
/// Values are stored vertex-major: component `r` of vertex `v` lives at
/// `v·N + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(mesh: &Arc<Mesh>) -> Field {
        Field {
            mesh: Arc::clone(mesh),
            values: vec![0.0; mesh.dof_count()],
        }
    }

    /// Samples `f` at every vertex; boundary vertices are set to zero.
    pub fn from_fn(mesh: &Arc<Mesh>, f: impl Fn([f64; 2]) -> [f64; 2]) -> Field {
        let nc = mesh.components();
        let mut values = vec![0.0; mesh.dof_count()];
        for (v, x) in mesh.coords().iter().enumerate() {
            if mesh.is_boundary(v) {
                continue;
            }
            let val = f(*x);
            values[v * nc..(v + 1) * nc].copy_from_slice(&val[..nc]);
        }
        Field {
            mesh: Arc::clone(mesh),
            values,
        }
    }

    pub fn from_values(mesh: &Arc<Mesh>, values: Vec<f64>) -> Result<Field, MeshError> {
        if values.len() != mesh.dof_count() {
            return Err(MeshError::LengthMismatch {
                expected: mesh.dof_count(),
                got: values.len(),
            });
        }
        let nc = mesh.components();
        for v in 0..mesh.vertex_count() {
            if mesh.is_boundary(v) && values[v * nc..(v + 1) * nc].iter().any(|x| *x != 0.0) {
                return Err(MeshError::NonZeroBoundary(v));
            }
        }
        Ok(Field {
            mesh: Arc::clone(mesh),
            values,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, vertex: usize, component: usize) -> f64 {
        self.values[vertex * self.mesh.components() + component]
    }

    pub fn same_mesh(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh
    }

    /// Applies `f` to every interior degree of freedom; boundary entries stay zero.
    pub(crate) fn map_interior(&mut self, mut f: impl FnMut(usize, f64) -> f64) {
        let nc = self.mesh.components();
        for (i, x) in self.values.iter_mut().enumerate() {
            if !self.mesh.is_boundary(i / nc) {
                *x = f(i, *x);
            }
        }
    }

    /// Entrywise `self + s·other`.
    pub fn axpy(&self, s: f64, other: &Field) -> Field {
        debug_assert!(self.same_mesh(other));
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect();
        Field {
            mesh: Arc::clone(&self.mesh),
            values,
        }
    }

    pub fn add(&self, other: &Field) -> Field {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.axpy(-1.0, other)
    }

    pub fn scale(&self, s: f64) -> Field {
        Field {
            mesh: Arc::clone(&self.mesh),
            values: self.values.iter().map(|a| a * s).collect(),
        }
    }

    /// `a·self + b·other`.
    pub fn lincomb(&self, a: f64, b: f64, other: &Field) -> Field {
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Field {
            mesh: Arc::clone(&self.mesh),
            values,
        }
    }

    /// Lumped L² inner product `Σ_v m_v ⟨u(v), w(v)⟩`.
    pub fn dot(&self, other: &Field) -> f64 {
        debug_assert!(self.same_mesh(other));
        let nc = self.mesh.components();
        self.mesh
            .mass()
            .iter()
            .enumerate()
            .map(|(v, m)| {
                let a = &self.values[v * nc..(v + 1) * nc];
                let b = &other.values[v * nc..(v + 1) * nc];
                m * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
            })
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn cell_gradient(&self, cell: usize) -> Mat2 {
        self.mesh.cell_gradient(&self.values, cell)
    }

    /// Cell gradients, in cell order, without materializing them.
    pub fn gradients(&self) -> impl Iterator<Item = Mat2> + '_ {
        (0..self.mesh.cell_count()).map(move |c| self.cell_gradient(c))
    }

    /// `(u², u¹)` for a two-component field.
    pub fn swap_components(&self) -> Field {
        assert_eq!(self.mesh.components(), 2, "swap needs two components");
        let mut values = self.values.clone();
        for pair in values.chunks_exact_mut(2) {
            pair.swap(0, 1);
        }
        Field {
            mesh: Arc::clone(&self.mesh),
            values,
        }
    }

    /// Keeps component `keep` in slot `to`, zeroing everything else.
    pub fn component_field(&self, keep: usize, to: usize) -> Field {
        let nc = self.mesh.components();
        let mut values = vec![0.0; self.values.len()];
        for v in 0..self.mesh.vertex_count() {
            values[v * nc + to] = self.values[v * nc + keep];
        }
        Field {
            mesh: Arc::clone(&self.mesh),
            values,
        }
    }

    /// CSV with columns `vertex,x,y,u1[,u2]`.
    pub fn to_csv(&self) -> String {
        let nc = self.mesh.components();
        let mut s = String::from("vertex,x,y");
        for r in 0..nc {
            let _ = write!(s, ",u{}", r + 1);
        }
        s.push('\n');
        for (v, x) in self.mesh.coords().iter().enumerate() {
            let _ = write!(s, "{},{},{}", v, x[0], x[1]);
            for r in 0..nc {
                let _ = write!(s, ",{}", self.values[v * nc + r]);
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

/// Per-cell gradients of a field.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGradients {
    pub cells: Vec<Mat2>,
}

pub fn gradient_per_cell(u: &Field) -> CellGradients {
    CellGradients {
        cells: u.gradients().collect(),
    }
}

/// `(Σ m_v ⟨u,v⟩, (Σ_cells area·|Du|^p)^{1/p})`.
pub fn discrete_norms(u: &Field, v: &Field, p: f64) -> (f64, f64) {
    (u.dot(v), lp_grad(u, p))
}

/// `‖Du‖_{L^p}`, exact for piecewise-constant gradients.
pub fn lp_grad(u: &Field, p: f64) -> f64 {
    let area = u.mesh().cell_area();
    let sum: f64 = u.gradients().map(|g| area * g.norm().powf(p)).sum();
    sum.powf(1.0 / p)
}

/// `Σ_cells area·|Du|^p`.
pub fn lp_grad_pow(u: &Field, p: f64) -> f64 {
    let area = u.mesh().cell_area();
    u.gradients().map(|g| area * g.norm().powf(p)).sum()
}

/// I.i.d. uniform values in `[-amplitude, amplitude]` at interior vertices.
pub fn random_field(mesh: &Arc<Mesh>, seed: u64, amplitude: f64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = Field::zeros(mesh);
    u.map_interior(|_, _| rng.gen_range(-amplitude..=amplitude));
    u
}
