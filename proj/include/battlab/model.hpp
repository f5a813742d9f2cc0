#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "battlab/errors.hpp"
#include "battlab/matrix.hpp"
#include "battlab/random.hpp"

namespace battlab::model {

struct ModelConfig {
  int d_model = 32;
  int n_heads = 4; // must divide d_model
  int n_layers = 2;
  int d_ff = 64;
  int max_seq_len = 128;
  double dropout_p = 0.0; // in [0, 1); 0 keeps training deterministic
  int input_dim = 1;      // feature width of one sequence step
};

void validate_config(const ModelConfig& config); // throws ConfigError

/// Closed-form total of trainable scalars for a config; equals the number of
/// stored parameter values exactly.
std::size_t count_parameters(const ModelConfig& config);

struct Param {
  std::string name;
  Mat value;
};

/// One input example: seq_len rows of input_dim features.
using Sequence = std::vector<std::vector<double>>;
using Batch = std::vector<Sequence>;

struct LayerParamIds {
  std::size_t ln1_scale, ln1_offset;
  std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
  std::size_t ln2_scale, ln2_offset;
  std::size_t w1, b1, w2, b2;
};

struct ParamLayout {
  std::size_t embed_w, embed_b, summary;
  std::vector<LayerParamIds> layers;
  std::size_t final_scale, final_offset;
  std::size_t head_w, head_b;
};

/// Pre-norm transformer encoder with a learned summary token and a scalar
/// regression head.
///
/// A sequence is linearly embedded to d_model, the summary token is
/// prepended, sinusoidal positional encodings are added, and n_layers of
/// x + MHSA(LN(x)) followed by x + FFN(LN(x)) are applied (GELU inside the
/// FFN). The prediction is a linear readout of the summary position after a
/// final layer norm.
///
/// Initialization is deterministic in (config, seed): weights are
/// uniform(+-sqrt(6/(fan_in+fan_out))) drawn in registration order, biases 0,
/// layer-norm scale 1 offset 0.
class TransformerRegressor {
public:
  TransformerRegressor(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }

  std::vector<Param>& parameters() { return params_; }
  const std::vector<Param>& parameters() const { return params_; }
  const ParamLayout& layout() const { return layout_; }

  std::size_t parameter_scalars() const;

  Mat& param(std::string_view name); // throws ConfigError on unknown name
  const Mat& param(std::string_view name) const;

  /// Sinusoidal table, (max_seq_len + 1) x d_model; row 0 is the summary slot.
  const Mat& positional_encoding() const { return pos_enc_; }

private:
  enum class Init { xavier, zeros, ones };
  std::size_t register_param(std::string name, std::size_t rows, std::size_t cols, Init init,
                             Rng& rng);

  ModelConfig cfg_;
  std::uint64_t seed_ = 0;
  std::vector<Param> params_;
  ParamLayout layout_;
  Mat pos_enc_;
};

/// Row-stochastic attention maps: by_layer[layer][head] is (L x L) where
/// L = sequence length + 1 (summary first).
struct AttentionMaps {
  std::vector<std::vector<Mat>> by_layer;
};

struct ForwardResult {
  std::vector<double> predictions;          // one scalar per sequence
  std::vector<AttentionMaps> attention;     // per sequence; empty unless requested
};

/// Run the batch through the model. Sequences are processed independently,
/// so predictions permute with the batch and duplicates predict identically.
/// Throws ShapeError on empty sequences, wrong feature width, or lengths
/// beyond max_seq_len (never silently truncates).
ForwardResult forward(const TransformerRegressor& model, const Batch& batch,
                      bool want_attention = true);

/// forward without attention bookkeeping; same predictions elementwise.
std::vector<double> predict(const TransformerRegressor& model, const Batch& batch);

/// Mean of squared residuals. Throws ArgumentError on length mismatch or
/// empty input.
double loss_mse(const std::vector<double>& predictions, const std::vector<double>& labels);

/// Gradient tensors aligned index-for-index with model.parameters().
struct Gradients {
  std::vector<Mat> by_param;
};

/// Exact reverse-mode gradients of loss_mse(forward(batch), labels) with
/// respect to every parameter.
Gradients backward(const TransformerRegressor& model, const Batch& batch,
                   const std::vector<double>& labels);

/// Fused training step helper: batch loss plus its gradients. When
/// dropout_rng is given and config.dropout_p > 0, inverted dropout is applied
/// to each sublayer output before the residual add (training mode only;
/// forward/predict never drop).
std::pair<double, Gradients> loss_and_gradients(const TransformerRegressor& model,
                                                const Batch& batch,
                                                const std::vector<double>& labels,
                                                Rng* dropout_rng = nullptr);

} // namespace battlab::model
