use crate::Scalar;

/// Dense `[channel][y][x]` planes.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor<S> {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<S>,
}

impl<S: Scalar> FeatureTensor<S> {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        FeatureTensor { channels, height, width, values: vec![S::zero(); channels * height * width] }
    }

    #[inline]
    pub fn index(&self, c: usize, y: usize, x: usize) -> usize {
        (c * self.height + y) * self.width + x
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> S {
        self.values[self.index(c, y, x)]
    }

    pub fn set(&mut self, c: usize, y: usize, x: usize, v: S) {
        let i = self.index(c, y, x);
        self.values[i] = v;
    }

    pub fn plane(&self, c: usize) -> &[S] {
        let n = self.height * self.width;
        &self.values[c * n..(c + 1) * n]
    }

    pub fn plane_sum(&self, c: usize) -> S {
        self.plane(c).iter().copied().sum()
    }
}
