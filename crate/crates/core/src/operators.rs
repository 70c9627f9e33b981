//! Backward-difference operators on the periodic grid.
//!
//! With `D_c` the first-order backward difference along axis `c`
//! (`(u_J - u_{J-e_c}) / h_c`):
//!
//! * gradient `G = (D_x, D_y, D_z)`, divergence `sum_c D_c`,
//! * curl `C` with `(C a)_x = D_y a_z - D_z a_y` and cyclic,
//! * Laplacian `L = sum_c D_c^2`, reaching two nodes back on each axis. This
//!   is *not* the centred three-point Laplacian; only its symmetric part
//!   `(L + L^T)/2` enters the equations of motion.
//!
//! Transposes are plain matrix transposes in the nodal basis (no cell-volume
//! weighting). [`Stencil`] caches the periodic neighbour tables and provides
//! slice-level kernels; the field-level functions are thin wrappers around it.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid3D, ScalarField, VectorField};
use crate::sparse::{SparseMatrix, TripletBuilder};

/// Periodic neighbour tables for one grid.
#[derive(Clone, Debug)]
pub struct Stencil {
    grid: Grid3D,
    back: [Vec<u32>; 3],
    fwd: [Vec<u32>; 3],
    inv_h: [f64; 3],
}

impl Stencil {
    pub fn new(grid: &Grid3D) -> Self {
        let m = grid.len();
        assert!(m <= u32::MAX as usize, "grid too large for 32-bit neighbour tables");
        let mut back: [Vec<u32>; 3] = [vec![0; m], vec![0; m], vec![0; m]];
        let mut fwd: [Vec<u32>; 3] = [vec![0; m], vec![0; m], vec![0; m]];
        for axis in Axis::ALL {
            let a = axis.index();
            for (flat, (b, f)) in back[a].iter_mut().zip(fwd[a].iter_mut()).enumerate() {
                *b = grid.neighbor(flat, axis, -1) as u32;
                *f = grid.neighbor(flat, axis, 1) as u32;
            }
        }
        let h = grid.spacing();
        Self { grid: *grid, back, fwd, inv_h: [1.0 / h[0], 1.0 / h[1], 1.0 / h[2]] }
    }

    pub fn grid(&self) -> &Grid3D {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub(crate) fn back(&self, axis: usize, flat: usize) -> usize {
        self.back[axis][flat] as usize
    }

    #[inline]
    pub(crate) fn fwd(&self, axis: usize, flat: usize) -> usize {
        self.fwd[axis][flat] as usize
    }

    #[inline]
    pub(crate) fn inv_h(&self, axis: usize) -> f64 {
        self.inv_h[axis]
    }

    /// `dst += coef * D_axis src`.
    pub fn add_back_diff(&self, axis: usize, src: &[f64], dst: &mut [f64], coef: f64) {
        let s = coef * self.inv_h[axis];
        for (j, (d, &b)) in dst.iter_mut().zip(&self.back[axis]).enumerate() {
            *d += s * (src[j] - src[b as usize]);
        }
    }

    /// `dst += coef * D_axis^T src`.
    pub fn add_back_diff_t(&self, axis: usize, src: &[f64], dst: &mut [f64], coef: f64) {
        let s = coef * self.inv_h[axis];
        for (j, (d, &f)) in dst.iter_mut().zip(&self.fwd[axis]).enumerate() {
            *d += s * (src[j] - src[f as usize]);
        }
    }

    /// `out = G u` (component blocks).
    pub fn grad(&self, u: &[f64], out: &mut [f64]) {
        let m = self.len();
        out.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..3 {
            self.add_back_diff(a, u, &mut out[a * m..(a + 1) * m], 1.0);
        }
    }

    /// `out = G^T w`.
    pub fn grad_t(&self, w: &[f64], out: &mut [f64]) {
        let m = self.len();
        out.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..3 {
            self.add_back_diff_t(a, &w[a * m..(a + 1) * m], out, 1.0);
        }
    }

    pub fn div(&self, a: &[f64], out: &mut [f64]) {
        let m = self.len();
        out.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..3 {
            self.add_back_diff(c, &a[c * m..(c + 1) * m], out, 1.0);
        }
    }

    /// `out = C a`.
    pub fn curl(&self, a: &[f64], out: &mut [f64]) {
        let m = self.len();
        let (ax, rest) = a.split_at(m);
        let (ay, az) = rest.split_at(m);
        let (ox, rest) = out.split_at_mut(m);
        let (oy, oz) = rest.split_at_mut(m);
        let [ix, iy, iz] = self.inv_h;
        for j in 0..m {
            let (bx, by, bz) = (self.back(0, j), self.back(1, j), self.back(2, j));
            ox[j] = (az[j] - az[by]) * iy - (ay[j] - ay[bz]) * iz;
            oy[j] = (ax[j] - ax[bz]) * iz - (az[j] - az[bx]) * ix;
            oz[j] = (ay[j] - ay[bx]) * ix - (ax[j] - ax[by]) * iy;
        }
    }

    /// `out[j] = f(j, (C^T w)[j])` for every entry.
    #[inline(always)]
    fn curl_t_map(&self, w: &[f64], out: &mut [f64], f: impl Fn(usize, f64) -> f64) {
        let m = self.len();
        let (wx, rest) = w.split_at(m);
        let (wy, wz) = rest.split_at(m);
        let (ox, rest) = out.split_at_mut(m);
        let (oy, oz) = rest.split_at_mut(m);
        let [ix, iy, iz] = self.inv_h;
        for j in 0..m {
            let (fx, fy, fz) = (self.fwd(0, j), self.fwd(1, j), self.fwd(2, j));
            ox[j] = f(j, (wy[j] - wy[fz]) * iz - (wz[j] - wz[fy]) * iy);
            oy[j] = f(m + j, (wz[j] - wz[fx]) * ix - (wx[j] - wx[fz]) * iz);
            oz[j] = f(2 * m + j, (wx[j] - wx[fy]) * iy - (wy[j] - wy[fx]) * ix);
        }
    }

    /// `out = C^T w`.
    pub fn curl_t(&self, w: &[f64], out: &mut [f64]) {
        self.curl_t_map(w, out, |_, v| v);
    }

    /// `out = C^T C a`; `scratch` has length `3M`.
    pub fn curl_t_curl(&self, a: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        self.curl(a, scratch);
        self.curl_t(scratch, out);
    }

    /// `out = a + s C^T C a`; `scratch` has length `3M`.
    pub fn shifted_curl_t_curl(&self, a: &[f64], s: f64, out: &mut [f64], scratch: &mut [f64]) {
        self.curl(a, scratch);
        self.curl_t_map(scratch, out, |j, v| a[j] + s * v);
    }

    /// `out = L u`.
    pub fn laplacian(&self, u: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for a in 0..3 {
                let b1 = self.back(a, j);
                let b2 = self.back(a, b1);
                acc += (u[j] - 2.0 * u[b1] + u[b2]) * self.inv_h[a] * self.inv_h[a];
            }
            *o = acc;
        }
    }

    /// `out = L^T u`.
    pub fn laplacian_t(&self, u: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for a in 0..3 {
                let f1 = self.fwd(a, j);
                let f2 = self.fwd(a, f1);
                acc += (u[j] - 2.0 * u[f1] + u[f2]) * self.inv_h[a] * self.inv_h[a];
            }
            *o = acc;
        }
    }

    /// `out = (L + L^T) u / 2`.
    pub fn sym_laplacian(&self, u: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for a in 0..3 {
                let b1 = self.back(a, j);
                let b2 = self.back(a, b1);
                let f1 = self.fwd(a, j);
                let f2 = self.fwd(a, f1);
                acc += (0.5 * (u[b2] + u[f2]) - (u[b1] + u[f1]) + u[j]) * self.inv_h[a] * self.inv_h[a];
            }
            *o = acc;
        }
    }
}

pub fn grad_d(psi: &ScalarField) -> VectorField {
    let grid = *psi.grid();
    let mut out = vec![0.0; 3 * grid.len()];
    Stencil::new(&grid).grad(psi.values(), &mut out);
    VectorField::from_values(grid, out).expect("gradient of a finite field")
}

/// `G^T w`, the nodal transpose of [`grad_d`].
pub fn grad_d_transpose(w: &VectorField) -> ScalarField {
    let grid = *w.grid();
    let mut out = vec![0.0; grid.len()];
    Stencil::new(&grid).grad_t(w.values(), &mut out);
    ScalarField::from_values(grid, out).expect("finite input")
}

pub fn div_d(a: &VectorField) -> ScalarField {
    let grid = *a.grid();
    let mut out = vec![0.0; grid.len()];
    Stencil::new(&grid).div(a.values(), &mut out);
    ScalarField::from_values(grid, out).expect("finite input")
}

pub fn curl_d(a: &VectorField) -> VectorField {
    let grid = *a.grid();
    let mut out = vec![0.0; 3 * grid.len()];
    Stencil::new(&grid).curl(a.values(), &mut out);
    VectorField::from_values(grid, out).expect("finite input")
}

pub fn curl_d_transpose(w: &VectorField) -> VectorField {
    let grid = *w.grid();
    let mut out = vec![0.0; 3 * grid.len()];
    Stencil::new(&grid).curl_t(w.values(), &mut out);
    VectorField::from_values(grid, out).expect("finite input")
}

pub fn laplacian_d(psi: &ScalarField) -> ScalarField {
    let grid = *psi.grid();
    let mut out = vec![0.0; grid.len()];
    Stencil::new(&grid).laplacian(psi.values(), &mut out);
    ScalarField::from_values(grid, out).expect("finite input")
}

pub fn laplacian_d_transpose(psi: &ScalarField) -> ScalarField {
    let grid = *psi.grid();
    let mut out = vec![0.0; grid.len()];
    Stencil::new(&grid).laplacian_t(psi.values(), &mut out);
    ScalarField::from_values(grid, out).expect("finite input")
}

/// Symmetric part `(L + L^T)/2` of the backward Laplacian applied to `psi`.
pub fn sym_laplacian(psi: &ScalarField) -> ScalarField {
    let grid = *psi.grid();
    let mut out = vec![0.0; grid.len()];
    Stencil::new(&grid).sym_laplacian(psi.values(), &mut out);
    ScalarField::from_values(grid, out).expect("finite input")
}

/// `C^T C a`: the gradient of `1/2 sum_K (curl_d a)_K^2` with respect to the
/// nodal values of `a`.
pub fn curl_t_curl(a: &VectorField) -> VectorField {
    let grid = *a.grid();
    let mut out = vec![0.0; 3 * grid.len()];
    let mut scratch = vec![0.0; 3 * grid.len()];
    Stencil::new(&grid).curl_t_curl(a.values(), &mut out, &mut scratch);
    VectorField::from_values(grid, out).expect("finite input")
}

/// Operators that can be assembled into a [`SparseMatrix`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OperatorKind<'a> {
    /// `3M x M`.
    Grad,
    /// `M x M` backward difference along one axis.
    GradAxis(Axis),
    /// `M x 3M`.
    Div,
    /// `3M x 3M`.
    Curl,
    Laplacian,
    SymLaplacian,
    /// `3M x 3M`.
    CurlTCurl,
    /// `1/2 sum_c (diag(A_c) D_c - D_c^T diag(A_c))`, the skew advection block
    /// of the quantum generator.
    Advection(&'a VectorField),
}

impl OperatorKind<'static> {
    /// Looks up a field-independent operator by name.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "grad" => OperatorKind::Grad,
            "grad_x" => OperatorKind::GradAxis(Axis::X),
            "grad_y" => OperatorKind::GradAxis(Axis::Y),
            "grad_z" => OperatorKind::GradAxis(Axis::Z),
            "div" => OperatorKind::Div,
            "curl" => OperatorKind::Curl,
            "laplacian" => OperatorKind::Laplacian,
            "sym_laplacian" => OperatorKind::SymLaplacian,
            "curl_t_curl" => OperatorKind::CurlTCurl,
            _ => return Err(Error::InvalidParameter("unknown operator kind")),
        })
    }
}

fn axis_diff_matrix(grid: &Grid3D, axis: Axis) -> SparseMatrix {
    let m = grid.len();
    let inv = 1.0 / grid.spacing()[axis.index()];
    let mut b = TripletBuilder::with_capacity(m, m, 2 * m);
    for j in 0..m {
        b.push(j, j, inv);
        b.push(j, grid.neighbor(j, axis, -1), -inv);
    }
    b.finish().expect("in bounds")
}

fn laplacian_matrix(grid: &Grid3D) -> SparseMatrix {
    let m = grid.len();
    let mut b = TripletBuilder::with_capacity(m, m, 9 * m);
    for j in 0..m {
        for axis in Axis::ALL {
            let h = grid.spacing()[axis.index()];
            let w = 1.0 / (h * h);
            b.push(j, j, w);
            b.push(j, grid.neighbor(j, axis, -1), -2.0 * w);
            b.push(j, grid.neighbor(j, axis, -2), w);
        }
    }
    b.finish().expect("in bounds")
}

fn curl_matrix(grid: &Grid3D) -> SparseMatrix {
    let m = grid.len();
    let d = Axis::ALL.map(|a| axis_diff_matrix(grid, a));
    let mut b = TripletBuilder::new(3 * m, 3 * m);
    // (C a)_x = D_y a_z - D_z a_y, and cyclic
    for c in 0..3 {
        let p = (c + 1) % 3;
        let q = (c + 2) % 3;
        b.push_block(c * m, q * m, &d[p], 1.0);
        b.push_block(c * m, p * m, &d[q], -1.0);
    }
    b.finish().expect("in bounds")
}

/// Assembles the matrix of `kind` on `grid`.
pub fn assemble_operator_matrix(kind: OperatorKind<'_>, grid: &Grid3D) -> Result<SparseMatrix> {
    let m = grid.len();
    Ok(match kind {
        OperatorKind::GradAxis(axis) => axis_diff_matrix(grid, axis),
        OperatorKind::Grad => {
            let mut b = TripletBuilder::new(3 * m, m);
            for axis in Axis::ALL {
                b.push_block(axis.index() * m, 0, &axis_diff_matrix(grid, axis), 1.0);
            }
            b.finish()?
        }
        OperatorKind::Div => {
            let mut b = TripletBuilder::new(m, 3 * m);
            for axis in Axis::ALL {
                b.push_block(0, axis.index() * m, &axis_diff_matrix(grid, axis), 1.0);
            }
            b.finish()?
        }
        OperatorKind::Curl => curl_matrix(grid),
        OperatorKind::Laplacian => laplacian_matrix(grid),
        OperatorKind::SymLaplacian => {
            let l = laplacian_matrix(grid);
            l.add_scaled(0.5, &l.transpose(), 0.5)?
        }
        OperatorKind::CurlTCurl => {
            let c = curl_matrix(grid);
            c.transpose().matmul(&c)?
        }
        OperatorKind::Advection(a) => {
            if a.grid() != grid {
                return Err(Error::GridMismatch);
            }
            let mut acc = SparseMatrix::zeros(m, m);
            for axis in Axis::ALL {
                let d = axis_diff_matrix(grid, axis);
                let ac = a.component(axis);
                let left = d.scale_rows(ac)?;
                let right = d.transpose().scale_cols(ac)?;
                acc = acc.add_scaled(1.0, &left.add_scaled(0.5, &right, -0.5)?, 1.0)?;
            }
            acc
        }
    })
}
