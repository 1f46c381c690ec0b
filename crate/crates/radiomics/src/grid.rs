//! Dense 3-D grids indexed `(x, y, z)` with x fastest, and neighbourhood
//! offsets shared by the texture families.

/// The 13 unique directions of the 26-neighbourhood (one of each ± pair).
pub const DIRECTIONS_13: [[isize; 3]; 13] = [
    [1, 0, 0],
    [0, 1, 0],
    [1, 1, 0],
    [1, -1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 0, -1],
    [0, 1, 1],
    [0, 1, -1],
    [1, 1, 1],
    [1, 1, -1],
    [1, -1, 1],
    [1, -1, -1],
];

/// All 26 neighbour offsets.
pub fn neighbors_26() -> impl Iterator<Item = [isize; 3]> {
    DIRECTIONS_13
        .iter()
        .flat_map(|d| [*d, [-d[0], -d[1], -d[2]]])
}

pub const NEIGHBORS_6: [[isize; 3]; 6] = [
    [1, 0, 0],
    [-1, 0, 0],
    [0, 1, 0],
    [0, -1, 0],
    [0, 0, 1],
    [0, 0, -1],
];

#[derive(Debug, Clone, PartialEq)]
pub struct Grid3<T> {
    dims: [usize; 3],
    data: Vec<T>,
}

impl<T: Clone> Grid3<T> {
    pub fn filled(dims: [usize; 3], value: T) -> Self {
        Grid3 {
            dims,
            data: vec![value; dims[0] * dims[1] * dims[2]],
        }
    }
}

impl<T> Grid3<T> {
    /// Panics if `data.len()` does not match `dims`.
    pub fn from_vec(dims: [usize; 3], data: Vec<T>) -> Self {
        assert_eq!(data.len(), dims[0] * dims[1] * dims[2], "grid data length");
        Grid3 { dims, data }
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    data.push(f(x, y, z));
                }
            }
        }
        Grid3 { dims, data }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (z * self.dims[1] + y) * self.dims[0] + x
    }

    #[inline]
    pub fn coords(&self, i: usize) -> [usize; 3] {
        let x = i % self.dims[0];
        let y = (i / self.dims[0]) % self.dims[1];
        [x, y, i / (self.dims[0] * self.dims[1])]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> &T {
        &self.data[self.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, v: T) {
        let i = self.index(x, y, z);
        self.data[i] = v;
    }

    /// Index of `p + d`, or `None` if it leaves the grid.
    #[inline]
    pub fn offset(&self, p: [usize; 3], d: [isize; 3]) -> Option<usize> {
        let mut q = [0usize; 3];
        for a in 0..3 {
            let v = p[a] as isize + d[a];
            if v < 0 || v >= self.dims[a] as isize {
                return None;
            }
            q[a] = v as usize;
        }
        Some(self.index(q[0], q[1], q[2]))
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid3<U> {
        Grid3 {
            dims: self.dims,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl Grid3<bool> {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Inclusive bounding box of the true voxels.
    pub fn bounding_box(&self) -> Option<([usize; 3], [usize; 3])> {
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        let mut any = false;
        for (i, &b) in self.data.iter().enumerate() {
            if b {
                any = true;
                let c = self.coords(i);
                for a in 0..3 {
                    lo[a] = lo[a].min(c[a]);
                    hi[a] = hi[a].max(c[a]);
                }
            }
        }
        any.then_some((lo, hi))
    }
}
