//! Secure inference: linear SVM classification and feed-forward networks.

mod nn;
mod svm;
mod weights;

pub use nn::{nn_infer, plan_manifest, LayerSpec, NetSpec, Network, NnOutput, NnPlan};
pub use svm::{svm_classify, svm_manifest, svm_plain, SvmModel};
pub use weights::{load_weights, save_weights};

use serde::{Deserialize, Serialize};

/// Where non-linear layers run: GMW suits low-latency links, garbled
/// circuits (constant rounds) suit high-latency ones.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    #[default]
    Lan,
    Wan,
}

impl std::str::FromStr for Profile {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "lan" => Ok(Profile::Lan),
            "wan" => Ok(Profile::Wan),
            _ => Err(crate::Error::Model(format!("unknown profile {s:?}"))),
        }
    }
}
