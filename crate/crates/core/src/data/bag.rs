use crate::error::{Error, Result};
use crate::graph::{build_knn_graph, PatchGraph};
use crate::tensor::Tensor;

/// One patient's patch embeddings with per-row provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBag {
    pub patient_id: String,
    pub label: u8,
    /// Slide of origin per row.
    pub slide_ids: Vec<String>,
    /// Stain per row.
    pub stains: Vec<String>,
    /// `[rows×F]`.
    pub features: Tensor<f64>,
}

impl EmbeddingBag {
    pub fn new(
        patient_id: impl Into<String>,
        label: u8,
        slide_ids: Vec<String>,
        stains: Vec<String>,
        features: Tensor<f64>,
    ) -> Result<Self> {
        let patient_id = patient_id.into();
        if label > 1 {
            return Err(Error::Contract(format!("patient {patient_id}: label {label} is not binary")));
        }
        if !features.is_matrix() || features.rows() == 0 {
            return Err(Error::EmptyBag(format!("patient {patient_id} has no rows")));
        }
        let n = features.rows();
        if slide_ids.len() != n || stains.len() != n {
            return Err(Error::Dimension(format!(
                "patient {patient_id}: {n} rows but {} slide ids and {} stains",
                slide_ids.len(),
                stains.len()
            )));
        }
        Ok(EmbeddingBag { patient_id, label, slide_ids, stains, features })
    }

    pub fn rows(&self) -> usize {
        self.features.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    /// Rows of the given stain only; errors when none remain.
    pub fn filter_stain(&self, stain: &str) -> Result<Self> {
        let keep: Vec<usize> = (0..self.rows()).filter(|&i| self.stains[i] == stain).collect();
        if keep.is_empty() {
            return Err(Error::EmptyBag(format!(
                "patient {} has no rows with stain {stain}",
                self.patient_id
            )));
        }
        Ok(EmbeddingBag {
            patient_id: self.patient_id.clone(),
            label: self.label,
            slide_ids: keep.iter().map(|&i| self.slide_ids[i].clone()).collect(),
            stains: keep.iter().map(|&i| self.stains[i].clone()).collect(),
            features: self.features.select_rows(&keep),
        })
    }

    /// k-NN graph over the rows, nodes tagged with their slide.
    pub fn to_graph(&self, k: usize) -> Result<PatchGraph<f64>> {
        build_knn_graph(&self.features, k)?.with_slide_tags(self.slide_ids.clone())
    }
}
