//! Grid-sampled scalar and vector fields on the computational domain.

use ndarray::Array2;

/// Uniform rectangular grid. Sample points are `x_i = x0 + (i + offset) hx`
/// with `offset = 0` for the periodic collocated layout and `offset = 0.5`
/// for cell centers of the bounded staggered layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2 {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub x0: f64,
    pub y0: f64,
    pub offset: f64,
}

impl Grid2 {
    pub fn periodic(nx: usize, ny: usize, lx: f64, ly: f64) -> Self {
        Self {
            nx,
            ny,
            lx,
            ly,
            x0: 0.0,
            y0: 0.0,
            offset: 0.0,
        }
    }

    pub fn cell_centered(nx: usize, ny: usize, lx: f64, ly: f64) -> Self {
        Self {
            nx,
            ny,
            lx,
            ly,
            x0: 0.0,
            y0: 0.0,
            offset: 0.5,
        }
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + self.offset) * self.hx()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + (j as f64 + self.offset) * self.hy()
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }
}

/// Boundary handling tag carried by sampled fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryTag {
    Periodic,
    /// Dirichlet with a constant boundary value (cell-centered ghosts).
    DirichletConst(f64),
}

#[derive(Debug, Clone)]
pub struct ScalarField2D {
    pub grid: Grid2,
    pub data: Array2<f64>,
    pub bc: BoundaryTag,
}

impl ScalarField2D {
    pub fn zeros(grid: Grid2, bc: BoundaryTag) -> Self {
        Self {
            grid,
            data: Array2::zeros((grid.nx, grid.ny)),
            bc,
        }
    }

    pub fn from_fn(grid: Grid2, bc: BoundaryTag, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut data = Array2::zeros((grid.nx, grid.ny));
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                data[(i, j)] = f(grid.x(i), grid.y(j));
            }
        }
        Self { grid, data, bc }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    /// Grid-sum quadrature (exact for trigonometric polynomials on the
    /// periodic layout).
    pub fn integral(&self) -> f64 {
        self.data.sum() * self.grid.cell_area()
    }
}

/// Collocated vector field (both components sampled at the same points).
#[derive(Debug, Clone)]
pub struct VectorField2D {
    pub grid: Grid2,
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub bc: BoundaryTag,
}

impl VectorField2D {
    pub fn zeros(grid: Grid2, bc: BoundaryTag) -> Self {
        Self {
            grid,
            x: Array2::zeros((grid.nx, grid.ny)),
            y: Array2::zeros((grid.nx, grid.ny)),
            bc,
        }
    }

    pub fn from_fn(grid: Grid2, bc: BoundaryTag, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let mut vx = Array2::zeros((grid.nx, grid.ny));
        let mut vy = Array2::zeros((grid.nx, grid.ny));
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                let (a, b) = f(grid.x(i), grid.y(j));
                vx[(i, j)] = a;
                vy[(i, j)] = b;
            }
        }
        Self { grid, x: vx, y: vy, bc }
    }

    pub fn max_norm(&self) -> f64 {
        let mut m = 0.0_f64;
        for (a, b) in self.x.iter().zip(self.y.iter()) {
            m = m.max((a * a + b * b).sqrt());
        }
        m
    }
}
