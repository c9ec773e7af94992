use serde::ser::{Serialize, SerializeSeq, Serializer};

/// Square matrix of per-pair quantities. Undefined cells (the diagonal, or
/// pairs that were never compared) hold `None` and serialize as `null`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairMatrix {
    n: usize,
    cells: Vec<Option<f64>>,
}

impl PairMatrix {
    pub fn undefined(n: usize) -> Self {
        Self {
            n,
            cells: vec![None; n * n],
        }
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Option<f64>>(n: usize, mut f: F) -> Self {
        let mut m = Self::undefined(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m.cells[i * n + j] = f(i, j);
                }
            }
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.cells[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Option<f64>) {
        self.cells[i * self.n + j] = value;
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Option<f64>]> {
        self.cells.chunks(self.n.max(1))
    }
}

impl Serialize for PairMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.n))?;
        for row in self.rows() {
            seq.serialize_element(row)?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_stays_undefined() {
        let m = PairMatrix::from_fn(3, |i, j| Some((i * 3 + j) as f64));
        assert_eq!(m.get(1, 1), None);
        assert_eq!(m.get(1, 2), Some(5.0));
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, "[[null,1.0,2.0],[3.0,null,5.0],[6.0,7.0,null]]");
    }
}
