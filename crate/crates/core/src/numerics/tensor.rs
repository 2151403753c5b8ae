use alloc::vec;
use alloc::vec::Vec;

use super::{ComplexMatrix, C64};
use crate::{Error, Result};

/// Channel-major `C × H × W` complex array (CNN activations).
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexTensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<C64>,
}

impl ComplexTensor {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![C64::new(0.0, 0.0); channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::invalid(alloc::format!(
                "buffer of {} entries cannot form a {channels}x{height}x{width} tensor",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    /// One-channel tensor holding a copy of `m`.
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        Self {
            channels: 1,
            height: m.rows(),
            width: m.cols(),
            data: m.as_slice().to_vec(),
        }
    }

    /// Copies channel `c` out as a matrix.
    pub fn channel_matrix(&self, c: usize) -> ComplexMatrix {
        ComplexMatrix::from_vec(self.height, self.width, self.channel(c).to_vec())
            .expect("channel slice has plane size")
    }

    /// Builds a tensor from equally shaped channel matrices.
    pub fn from_channels(planes: &[ComplexMatrix]) -> Self {
        let (h, w) = planes.first().map_or((0, 0), ComplexMatrix::shape);
        let mut data = Vec::with_capacity(planes.len() * h * w);
        for p in planes {
            assert_eq!(p.shape(), (h, w), "channel planes must share a shape");
            data.extend_from_slice(p.as_slice());
        }
        Self {
            channels: planes.len(),
            height: h,
            width: w,
            data,
        }
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn channel(&self, c: usize) -> &[C64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [C64] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, c: usize, i: usize, j: usize) -> C64 {
        self.data[(c * self.height + i) * self.width + j]
    }

    #[inline]
    pub fn set(&mut self, c: usize, i: usize, j: usize, v: C64) {
        self.data[(c * self.height + i) * self.width + j] = v;
    }

    pub fn add_assign(&mut self, rhs: &Self) {
        assert_eq!(self.shape(), rhs.shape(), "tensor add shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        super::norm_sqr(&self.data)
    }

    /// Applies `f` to every channel plane (as a matrix) independently.
    pub fn map_channels(&self, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        let planes: Vec<ComplexMatrix> = (0..self.channels).map(|c| f(&self.channel_matrix(c))).collect();
        Self::from_channels(&planes)
    }
}
