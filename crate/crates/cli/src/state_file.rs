//! The JSON state file: `{"dims":[nA,nB],"matrix":[[re,im],...]}` with
//! entries row-major over the composite index `i = iA * nB + iB`.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use ensep::{DensityMatrix, Dims, HermitianOperator};
use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::exit::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dims: [usize; 2],
    pub matrix: Vec<[f64; 2]>,
}

impl StateFile {
    pub fn from_density(rho: &DensityMatrix) -> Self {
        let dims = rho.dims();
        let m = rho.op().matrix();
        let d = m.nrows();
        let matrix = (0..d * d).map(|k| m[(k / d, k % d)]).map(|z| [z.re, z.im]).collect();
        Self { dims: [dims.a, dims.b], matrix }
    }

    pub fn to_density(&self) -> Result<DensityMatrix, CliError> {
        let dims = Dims::new(self.dims[0], self.dims[1]).map_err(CliError::data)?;
        let d = dims.total();
        if self.matrix.len() != d * d {
            return Err(CliError::Data(format!(
                "matrix has {} entries, dims {:?} need {}",
                self.matrix.len(),
                self.dims,
                d * d
            )));
        }
        let mat = DMatrix::from_fn(d, d, |i, j| {
            let [re, im] = self.matrix[i * d + j];
            Complex::new(re, im)
        });
        let op = HermitianOperator::new(mat).map_err(CliError::data)?;
        DensityMatrix::new(op, dims).map_err(CliError::data)
    }
}

pub fn load(path: &Path) -> Result<DensityMatrix, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::NoInput(format!("{}: {e}", path.display())))?;
    let file: StateFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: not a state file: {e}", path.display())))?;
    file.to_density().map_err(|e| e.context(&path.display().to_string()))
}

pub fn save(rho: &DensityMatrix, path: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string(&StateFile::from_density(rho)).expect("state files always serialize");
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::CantCreate(format!("{}: {e}", p.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(CliError::io),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let rho: DensityMatrix = ensep::criteria::random_full_rank(Dims::new(2, 3).unwrap(), 5).unwrap();
        let file = StateFile::from_density(&rho);
        let json = serde_json::to_string(&file).unwrap();
        let back = serde_json::from_str::<StateFile>(&json).unwrap().to_density().unwrap();
        assert_eq!(back.op(), rho.op());
        assert_eq!(back.dims(), rho.dims());
    }

    #[test]
    fn composite_index_is_row_major() {
        let rho = ensep::criteria::diagonal(Dims::new(2, 2).unwrap(), &[0.1, 0.2, 0.3, 0.4]).unwrap();
        let file = StateFile::from_density(&rho);
        assert_eq!(file.matrix[0], [0.1, 0.0]);
        assert_eq!(file.matrix[5], [0.2, 0.0]);
        assert_eq!(file.matrix[15], [0.4, 0.0]);
    }

    #[test]
    fn rejects_bad_files() {
        let short = StateFile { dims: [2, 2], matrix: vec![[1.0, 0.0]] };
        assert!(matches!(short.to_density(), Err(CliError::Data(_))));
        let mut skew = StateFile::from_density(&DensityMatrix::maximally_mixed(Dims::new(2, 1).unwrap()));
        skew.matrix[1] = [0.3, 0.0];
        assert!(matches!(skew.to_density(), Err(CliError::Data(_))));
    }
}
