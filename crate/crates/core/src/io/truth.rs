//! Ground-truth sidecar written by `simulate`, read only by `validate`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_to_string, write_atomic};
use crate::error::{Error, Result};
use crate::sim::{GroundTruthTaxel, SimSkin};
use crate::types::SkinGeometry;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthFile {
    pub seed: u64,
    pub n_triangles: usize,
    pub taxels_per_triangle: usize,
    pub taxel_area_m2: f64,
    #[serde(rename = "taxel")]
    pub taxels: Vec<GroundTruthTaxel>,
}

impl TruthFile {
    pub fn from_skin(skin: &SimSkin) -> Self {
        let g = skin.geometry();
        TruthFile {
            seed: skin.seed(),
            n_triangles: g.n_triangles(),
            taxels_per_triangle: g.taxels_per_triangle(),
            taxel_area_m2: g.taxel_area(),
            taxels: skin.taxels().to_vec(),
        }
    }

    pub fn into_skin(self) -> Result<SimSkin> {
        let g = SkinGeometry::new(
            self.n_triangles,
            self.taxels_per_triangle,
            self.taxel_area_m2,
        )?;
        SimSkin::new(g, self.taxels, self.seed)
    }
}

pub fn write_truth_file(skin: &SimSkin, path: &Path) -> Result<()> {
    let text = toml::to_string(&TruthFile::from_skin(skin))
        .map_err(|e| Error::InvalidData(format!("cannot serialize ground truth: {e}")))?;
    write_atomic(
        path,
        format!("# taxel-calib simulator ground truth\n{text}").as_bytes(),
    )
}

pub fn load_truth_file(path: &Path) -> Result<SimSkin> {
    let text = read_to_string(path)?;
    let file: TruthFile = toml::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        line: e
            .span()
            .map_or(0, |s| text[..s.start].matches('\n').count() + 1),
        message: e.message().to_string(),
    })?;
    file.into_skin()
}
