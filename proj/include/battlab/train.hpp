#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "battlab/ingest.hpp"
#include "battlab/model.hpp"

namespace battlab::model {

struct TrainOptions {
  int epochs = 5;
  int batch_size = 16;
  double lr = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t shuffle_seed = 1;
};

/// Per-epoch training metrics. Optimization runs on min-max normalized
/// labels (raw mAh targets are far too large for the default learning rate),
/// so both loss columns are in normalized-label units; predictions are
/// denormalized back to mAh by predict_capacity.
struct TrainReport {
  std::vector<double> train_mse; // example-weighted mean of the epoch's batch losses
  std::vector<double> test_mse;  // held-out MSE after the epoch, no updates
  std::vector<double> wall_seconds;
  std::vector<double> batches_per_second;
  int n_epochs = 0;
  std::size_t parameter_count = 0;
};

/// Adaptive moments with decoupled weight decay:
///   m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g^2
///   theta -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)
/// The decay term multiplies the raw parameter, not the gradient.
class AdamW {
public:
  AdamW(const TransformerRegressor& model, const TrainOptions& opts);
  void step(std::vector<Param>& params, const Gradients& grads);
  long steps_taken() const { return t_; }

private:
  TrainOptions opts_;
  std::vector<Mat> m_, v_;
  long t_ = 0;
};

/// Reshape selected flat feature rows into per-step sequences
/// (window steps x channel count).
Batch to_batch(const ingest::FeatureMatrix& features, const std::vector<std::size_t>& rows);

/// Run the epoch protocol: per epoch, shuffle the train rows (seeded), take
/// optimizer steps batch by batch, then score the test split without
/// updates. Deterministic for a fixed seed in this single-threaded
/// implementation. Throws DivergenceError when a batch loss or any parameter
/// goes non-finite; the model is restored to its last end-of-epoch snapshot
/// first.
TrainReport train(TransformerRegressor& model, const ingest::FeatureMatrix& features,
                  const TrainOptions& opts = {});

/// Predictions for the given rows, denormalized to mAh.
std::vector<double> predict_capacity(const TransformerRegressor& model,
                                     const ingest::FeatureMatrix& features,
                                     const std::vector<std::size_t>& rows);

/// Model checkpoint bundled with the feature normalization it was trained
/// with, so fresh data can be embedded identically at prediction time.
struct Checkpoint {
  TransformerRegressor model;
  std::vector<ingest::FeatureChannel> channels;
  int window = 1;
};

nlohmann::json checkpoint_to_json(const TransformerRegressor& model,
                                  const std::vector<ingest::FeatureChannel>& channels,
                                  int window);
Checkpoint checkpoint_from_json(const nlohmann::json& j); // throws ConfigError
void save_checkpoint(const std::filesystem::path& path, const TransformerRegressor& model,
                     const std::vector<ingest::FeatureChannel>& channels, int window);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace battlab::model
