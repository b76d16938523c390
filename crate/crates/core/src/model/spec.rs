//! Declarative architecture description for the model family: stacked IndRNN
//! layers with optional channel attention in front and optional dense
//! connectivity inside each block.

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::layers::Activation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Attention + dense blocks (pooling after each block).
    Adindrnn,
    /// Dense blocks without attention.
    Dindrnn,
    /// Attention + plain stack (pooling after every IndRNN+BN pair).
    Aindrnn,
    /// Plain stack without attention.
    Indrnn,
}

impl Variant {
    pub fn uses_attention(self) -> bool {
        matches!(self, Variant::Adindrnn | Variant::Aindrnn)
    }

    pub fn uses_dense_blocks(self) -> bool {
        matches!(self, Variant::Adindrnn | Variant::Dindrnn)
    }
}

/// One block: `layers` IndRNN+BN components sharing a state size.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub layers: usize,
    pub state_size: usize,
}

/// Initializer knobs. Defaults: attention kernel from a truncated normal with
/// standard deviation 0.1 (cut at two sigma), FC biases at 0.001, recurrent
/// weights drawn from `[0, 1]` with no post-step clipping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitSpec {
    pub attention_kernel_std: f64,
    pub fc_bias_value: f64,
    pub recurrent_clip: Option<f64>,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self {
            attention_kernel_std: 0.1,
            fc_bias_value: 0.001,
            recurrent_clip: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    pub n_channels: usize,
    pub blocks: Vec<BlockSpec>,
    #[serde(default = "default_fc_hidden")]
    pub fc_hidden: usize,
    #[serde(default = "default_n_classes")]
    pub n_classes: usize,
    #[serde(default = "default_pool")]
    pub pool_window: usize,
    #[serde(default = "default_pool")]
    pub pool_stride: usize,
    #[serde(default = "default_activation")]
    pub hidden_activation: Activation,
    #[serde(default = "default_activation")]
    pub output_activation: Activation,
    #[serde(default = "default_bn_epsilon")]
    pub bn_epsilon: f64,
    #[serde(default = "default_bn_momentum")]
    pub bn_momentum: f64,
    #[serde(default)]
    pub init: InitSpec,
}

fn default_fc_hidden() -> usize {
    100
}
fn default_n_classes() -> usize {
    2
}
fn default_pool() -> usize {
    2
}
fn default_activation() -> Activation {
    Activation::Relu
}
fn default_bn_epsilon() -> f64 {
    1e-5
}
fn default_bn_momentum() -> f64 {
    0.9
}

impl ModelSpec {
    /// Uniform-block constructor used by configs and tests; everything not
    /// passed here takes its default.
    pub fn uniform(
        variant: Variant,
        n_channels: usize,
        n_blocks: usize,
        layers_per_block: usize,
        state_sizes: &[usize],
    ) -> Self {
        assert_eq!(state_sizes.len(), n_blocks, "one state size per block");
        Self {
            variant,
            n_channels,
            blocks: state_sizes
                .iter()
                .map(|&s| BlockSpec {
                    layers: layers_per_block,
                    state_size: s,
                })
                .collect(),
            fc_hidden: default_fc_hidden(),
            n_classes: default_n_classes(),
            pool_window: default_pool(),
            pool_stride: default_pool(),
            hidden_activation: default_activation(),
            output_activation: default_activation(),
            bn_epsilon: default_bn_epsilon(),
            bn_momentum: default_bn_momentum(),
            init: InitSpec::default(),
        }
    }

    pub fn use_attention(&self) -> bool {
        self.variant.uses_attention()
    }

    pub fn total_layers(&self) -> usize {
        self.blocks.iter().map(|b| b.layers).sum()
    }

    /// Number of max-pooling stages: one per block for dense variants, one
    /// per layer for plain stacks.
    pub fn n_pool_stages(&self) -> usize {
        if self.variant.uses_dense_blocks() {
            self.blocks.len()
        } else {
            self.total_layers()
        }
    }

    /// Feature width entering the first FC layer.
    pub fn last_state_size(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.state_size)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.blocks.is_empty() {
            return Err(ModelError::InvalidSpec("blocks must be nonempty".into()));
        }
        if self.blocks.iter().any(|b| b.layers == 0 || b.state_size == 0) {
            return Err(ModelError::InvalidSpec(
                "every block needs at least one layer and a positive state size".into(),
            ));
        }
        if self.n_channels == 0 {
            return Err(ModelError::InvalidSpec("n_channels must be positive".into()));
        }
        if self.fc_hidden == 0 {
            return Err(ModelError::InvalidSpec("fc_hidden must be positive".into()));
        }
        if self.n_classes != 2 {
            return Err(ModelError::InvalidSpec(format!(
                "final FC size must equal the number of classes (2), got {}",
                self.n_classes
            )));
        }
        if self.pool_window == 0 || self.pool_stride == 0 {
            return Err(ModelError::InvalidSpec(
                "pool window and stride must be positive".into(),
            ));
        }
        if self.bn_epsilon <= 0.0 {
            return Err(ModelError::InvalidSpec("bn_epsilon must be positive".into()));
        }
        if self.bn_momentum <= 0.0 || self.bn_momentum >= 1.0 {
            return Err(ModelError::InvalidSpec(
                "bn_momentum must lie in (0, 1)".into(),
            ));
        }
        if self.init.attention_kernel_std <= 0.0 {
            return Err(ModelError::InvalidSpec(
                "attention kernel std must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Checks that a sequence of `len` steps survives every pooling stage,
    /// i.e. the depth is feasible for this input length.
    pub fn validate_input_len(&self, len: usize) -> Result<(), ModelError> {
        let mut t = len;
        for stage in 0..self.n_pool_stages() {
            if t < self.pool_window {
                return Err(ModelError::SequenceTooShort {
                    stage,
                    len: t,
                    window: self.pool_window,
                });
            }
            t = (t - self.pool_window) / self.pool_stride + 1;
        }
        Ok(())
    }

    /// Human-readable family name, e.g. `ADIndRNN-(3,3)` or `IndRNN-9`.
    pub fn name(&self) -> String {
        let prefix = if self.use_attention() { "A" } else { "" };
        if self.variant.uses_dense_blocks() {
            let layers = self.blocks.first().map_or(0, |b| b.layers);
            if self.blocks.iter().all(|b| b.layers == layers) {
                format!("{prefix}DIndRNN-({},{})", self.blocks.len(), layers)
            } else {
                let sizes: Vec<String> =
                    self.blocks.iter().map(|b| b.layers.to_string()).collect();
                format!("{prefix}DIndRNN-({})", sizes.join("+"))
            }
        } else {
            format!("{prefix}IndRNN-{}", self.total_layers())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn adindrnn33() -> ModelSpec {
        ModelSpec::uniform(Variant::Adindrnn, 17, 3, 3, &[80, 120, 160])
    }

    #[test]
    fn names_follow_family_convention() {
        assert_eq!(adindrnn33().name(), "ADIndRNN-(3,3)");
        let plain = ModelSpec::uniform(Variant::Indrnn, 17, 3, 3, &[80, 120, 160]);
        assert_eq!(plain.name(), "IndRNN-9");
        let attn = ModelSpec::uniform(Variant::Aindrnn, 17, 3, 3, &[80, 120, 160]);
        assert_eq!(attn.name(), "AIndRNN-9");
        let dense = ModelSpec::uniform(Variant::Dindrnn, 17, 3, 3, &[80, 120, 160]);
        assert_eq!(dense.name(), "DIndRNN-(3,3)");
    }

    #[test]
    fn validation_catches_bad_specs() {
        let mut spec = adindrnn33();
        spec.blocks.clear();
        assert!(spec.validate().is_err());

        let mut spec = adindrnn33();
        spec.n_classes = 3;
        assert!(spec.validate().is_err());

        let mut spec = adindrnn33();
        spec.blocks[1].state_size = 0;
        assert!(spec.validate().is_err());

        assert!(adindrnn33().validate().is_ok());
    }

    #[test]
    fn depth_is_checked_against_sequence_length() {
        // A 12-layer plain stack pools twelve times; 5888 steps survive
        // (5888 / 2^12 > 1) but 13 poolings would not.
        let twelve = ModelSpec::uniform(Variant::Indrnn, 17, 4, 3, &[80, 120, 160, 200]);
        assert!(twelve.validate_input_len(5888).is_ok());

        let thirteen = ModelSpec {
            blocks: vec![
                BlockSpec { layers: 13, state_size: 8 },
            ],
            ..ModelSpec::uniform(Variant::Indrnn, 17, 1, 1, &[8])
        };
        let err = thirteen.validate_input_len(5888).unwrap_err();
        assert!(matches!(err, ModelError::SequenceTooShort { stage: 12, .. }));

        // Dense variants pool once per block.
        assert!(adindrnn33().validate_input_len(8).is_ok());
        assert!(adindrnn33().validate_input_len(3).is_err());
    }

    #[test]
    fn serde_defaults_fill_optional_fields() {
        let json = r#"{
            "variant": "adindrnn",
            "n_channels": 17,
            "blocks": [
                {"layers": 3, "state_size": 80},
                {"layers": 3, "state_size": 120},
                {"layers": 3, "state_size": 160}
            ]
        }"#;
        let spec: ModelSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec, adindrnn33());
        assert_eq!(spec.fc_hidden, 100);
        assert_eq!(spec.init.fc_bias_value, 0.001);
    }
}
