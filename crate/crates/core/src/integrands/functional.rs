use std::sync::Arc;

use super::{Coercivity, Density, Integrand, IntegrandError};
use crate::mesh::{Field, Mesh};

#[derive(Debug, Clone)]
enum Kind {
    Gradient(Arc<dyn Density>),
    /// `½‖u‖²` in the lumped L² product.
    HalfSquaredL2,
}

/// The discrete energy `I_h(u) = Σ_cells area·f(x_c, Du|_cell)` on a mesh.
///
/// Every field is in the effective domain, and `I_h` is differentiable, so
/// its subdifferential is the singleton `{∇I_h(u)}`.
#[derive(Debug, Clone)]
pub struct DiscreteFunctional {
    mesh: Arc<Mesh>,
    kind: Kind,
    label: String,
    uses_x: bool,
}

impl DiscreteFunctional {
    pub fn new(mesh: &Arc<Mesh>, integrand: Integrand) -> Result<Self, IntegrandError> {
        let label = integrand.name();
        Self::with_density(mesh, Arc::new(integrand), label)
    }

    /// A functional built from an arbitrary (possibly x-dependent) density.
    pub fn with_density(
        mesh: &Arc<Mesh>,
        density: Arc<dyn Density>,
        label: impl Into<String>,
    ) -> Result<Self, IntegrandError> {
        density.check_shape(mesh.components(), mesh.dim())?;
        Ok(DiscreteFunctional {
            mesh: Arc::clone(mesh),
            uses_x: density.depends_on_x(),
            kind: Kind::Gradient(density),
            label: label.into(),
        })
    }

    /// `u ↦ ½‖u‖²`, whose proximal map is known in closed form.
    pub fn half_squared_l2(mesh: &Arc<Mesh>) -> Self {
        DiscreteFunctional {
            mesh: Arc::clone(mesh),
            kind: Kind::HalfSquaredL2,
            label: "half_squared_l2".to_string(),
            uses_x: false,
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn density(&self) -> Option<&Arc<dyn Density>> {
        match &self.kind {
            Kind::Gradient(d) => Some(d),
            Kind::HalfSquaredL2 => None,
        }
    }

    pub fn is_convex(&self) -> bool {
        match &self.kind {
            Kind::Gradient(d) => d.is_convex(),
            Kind::HalfSquaredL2 => true,
        }
    }

    /// `(ν, L, p)` with `I_h(u) ≥ ν‖Du‖_p^p − L`, for gradient densities.
    pub fn coercivity(&self) -> Option<Coercivity> {
        match &self.kind {
            Kind::Gradient(d) => d.coercivity(),
            Kind::HalfSquaredL2 => None,
        }
    }

    pub fn energy(&self, u: &Field) -> f64 {
        match &self.kind {
            Kind::Gradient(d) => {
                let area = self.mesh.cell_area();
                let vals = u.values();
                (0..self.mesh.cell_count())
                    .map(|c| area * d.value(self.centroid(c), self.mesh.cell_gradient(vals, c)))
                    .sum()
            }
            Kind::HalfSquaredL2 => 0.5 * u.norm_sq(),
        }
    }

    /// The L²-gradient: the field `g` with `(g, φ) = d/dt I_h(u + tφ)` for all
    /// zero-boundary `φ`.
    pub fn gradient(&self, u: &Field) -> Field {
        self.energy_and_gradient(u).1
    }

    pub fn energy_and_gradient(&self, u: &Field) -> (f64, Field) {
        match &self.kind {
            Kind::Gradient(d) => {
                let area = self.mesh.cell_area();
                let vals = u.values();
                let mut raw = vec![0.0; self.mesh.dof_count()];
                let mut energy = 0.0;
                for c in 0..self.mesh.cell_count() {
                    let x = self.centroid(c);
                    let xi = self.mesh.cell_gradient(vals, c);
                    energy += area * d.value(x, xi);
                    self.mesh.scatter_cell(d.gradient(x, xi) * area, c, &mut raw);
                }
                let nc = self.mesh.components();
                let mass = self.mesh.mass();
                for (i, r) in raw.iter_mut().enumerate() {
                    let v = i / nc;
                    *r = if self.mesh.is_boundary(v) { 0.0 } else { *r / mass[v] };
                }
                let g = Field::from_values(&self.mesh, raw).expect("boundary entries were zeroed");
                (energy, g)
            }
            Kind::HalfSquaredL2 => (0.5 * u.norm_sq(), u.clone()),
        }
    }

    fn centroid(&self, cell: usize) -> [f64; 2] {
        if !self.uses_x {
            return [0.0; 2];
        }
        let co = self.mesh.coords();
        let [a, b, c] = self.mesh.cell_vertices(cell);
        if self.mesh.dim() == 1 {
            return [0.5 * (co[a][0] + co[b][0]), 0.0];
        }
        [(co[a][0] + co[b][0] + co[c][0]) / 3.0, (co[a][1] + co[b][1] + co[c][1]) / 3.0]
    }
}

pub fn assemble_energy(f: &DiscreteFunctional, u: &Field) -> f64 {
    f.energy(u)
}

pub fn assemble_gradient(f: &DiscreteFunctional, u: &Field) -> Field {
    f.gradient(u)
}
