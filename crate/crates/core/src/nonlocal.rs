//! The nonlocal primitive `P` with `dP/dx = u`.
//!
//! Differentiation and integration act in Fourier space on the periodic
//! grid, so `derivative(antiderivative(u)) == u` on every resolved mode.
//! The Nyquist mode is not resolved by a first derivative and is dropped
//! by both operators.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::model::{Field, Grid1D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Gauge {
    /// `sum_i P_i dx = 0`.
    #[default]
    ZeroMean,
}

/// Relative tolerance for the zero-mean precondition, scaled by
/// `max(1, max|u|) * 2L`.
pub const MEAN_TOLERANCE: f64 = 1e-10;

pub fn mean_tolerance(values: &[f64], grid: &Grid1D) -> f64 {
    let scale = values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    MEAN_TOLERANCE * scale * grid.length()
}

pub(crate) fn check_zero_mean(values: &[f64], grid: &Grid1D) -> Result<()> {
    let mean = values.iter().sum::<f64>() * grid.dx();
    let tolerance = mean_tolerance(values, grid);
    if mean.abs() > tolerance {
        return Err(Error::MeanViolation { mean, tolerance });
    }
    Ok(())
}

/// FFT plans and work buffers for spectral differentiation on one grid size.
pub struct Spectral {
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl Spectral {
    pub fn new(grid: &Grid1D) -> Self {
        let n = grid.n_cells();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let base = std::f64::consts::PI / grid.half_width();
        let wavenumbers = (0..n)
            .map(|j| {
                if j < n / 2 {
                    j as f64 * base
                } else if j == n / 2 {
                    0.0
                } else {
                    (j as f64 - n as f64) * base
                }
            })
            .collect();
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            wavenumbers,
            forward,
            inverse,
            buffer: vec![Complex::new(0.0, 0.0); n],
            scratch: vec![Complex::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn len(&self) -> usize {
        self.wavenumbers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavenumbers.is_empty()
    }

    fn apply(&mut self, input: &[f64], out: &mut [f64], symbol: impl Fn(f64) -> Complex<f64>) {
        let n = self.len();
        debug_assert_eq!(input.len(), n);
        debug_assert_eq!(out.len(), n);
        for (b, &v) in self.buffer.iter_mut().zip(input) {
            *b = Complex::new(v, 0.0);
        }
        self.forward
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        for (b, &k) in self.buffer.iter_mut().zip(&self.wavenumbers) {
            *b *= symbol(k);
        }
        self.inverse
            .process_with_scratch(&mut self.buffer, &mut self.scratch);
        let scale = 1.0 / n as f64;
        for (o, b) in out.iter_mut().zip(&self.buffer) {
            *o = b.re * scale;
        }
    }

    /// Spectral first derivative `D1`.
    pub fn derivative_into(&mut self, input: &[f64], out: &mut [f64]) {
        self.apply(input, out, |k| Complex::new(0.0, k));
    }

    /// Zero-mean inverse of `D1`. Does not check the mean of `input`.
    pub fn antiderivative_into(&mut self, input: &[f64], out: &mut [f64]) {
        self.apply(input, out, |k| {
            if k == 0.0 {
                Complex::new(0.0, 0.0)
            } else {
                Complex::new(0.0, -1.0 / k)
            }
        });
    }

    /// Removes the Nyquist mode, leaving the part `D1` can see.
    pub fn resolved_part_into(&mut self, input: &[f64], out: &mut [f64]) {
        let n = self.len();
        let nyquist = input
            .iter()
            .enumerate()
            .map(|(i, v)| if i % 2 == 0 { *v } else { -*v })
            .sum::<f64>()
            / n as f64;
        for (i, (o, v)) in out.iter_mut().zip(input).enumerate() {
            *o = if i % 2 == 0 { v - nyquist } else { v + nyquist };
        }
    }
}

pub fn derivative(field: &Field, grid: &Grid1D) -> Result<Field> {
    field.check_grid(grid)?;
    let mut out = vec![0.0; grid.n_cells()];
    Spectral::new(grid).derivative_into(field.values(), &mut out);
    Field::new(out, field.time())
}

/// Periodic zero-mean `P` with `D1 P = u`.
pub fn antiderivative(u: &Field, grid: &Grid1D, gauge: Gauge) -> Result<Field> {
    u.check_grid(grid)?;
    check_zero_mean(u.values(), grid)?;
    let Gauge::ZeroMean = gauge;
    let mut out = vec![0.0; grid.n_cells()];
    Spectral::new(grid).antiderivative_into(u.values(), &mut out);
    Field::new(out, u.time())
}

/// Cumulative trapezoid primitive with the mean subtracted; second-order
/// accurate cross-check for [`antiderivative`].
pub fn antiderivative_trapezoid(u: &Field, grid: &Grid1D) -> Result<Field> {
    u.check_grid(grid)?;
    check_zero_mean(u.values(), grid)?;
    let v = u.values();
    let dx = grid.dx();
    let mut p = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    p.push(acc);
    for w in v.windows(2) {
        acc += 0.5 * dx * (w[0] + w[1]);
        p.push(acc);
    }
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    p.iter_mut().for_each(|x| *x -= mean);
    Field::new(p, u.time())
}

/// `dP/dt = (D1 P - u) / delta`, the relaxed evolution of the primitive.
pub fn relax_rhs(u: &Field, p: &Field, delta: f64, grid: &Grid1D) -> Result<Field> {
    if !(delta > 0.0) {
        return Err(Error::DivisionGuard);
    }
    u.check_grid(grid)?;
    p.check_grid(grid)?;
    let mut out = vec![0.0; grid.n_cells()];
    Spectral::new(grid).derivative_into(p.values(), &mut out);
    for (o, &ui) in out.iter_mut().zip(u.values()) {
        *o = (*o - ui) / delta;
    }
    Field::new(out, u.time())
}
