#include "battlab/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

namespace battlab::model {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool all_finite(const std::vector<Param>& params) {
  for (const auto& p : params)
    for (double v : p.value.raw())
      if (!std::isfinite(v)) return false;
  return true;
}

double normalized_mse(const TransformerRegressor& model, const ingest::FeatureMatrix& fm,
                      const std::vector<std::size_t>& rows, int batch_size) {
  if (rows.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (std::size_t start = 0; start < rows.size();
       start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop = std::min(rows.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<std::size_t> chunk(rows.begin() + static_cast<std::ptrdiff_t>(start),
                                   rows.begin() + static_cast<std::ptrdiff_t>(stop));
    const auto preds = predict(model, to_batch(fm, chunk));
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const double resid = preds[i] - fm.normalize_label(fm.labels[chunk[i]]);
      total += resid * resid;
    }
  }
  return total / static_cast<double>(rows.size());
}

} // namespace

AdamW::AdamW(const TransformerRegressor& model, const TrainOptions& opts) : opts_(opts) {
  if (opts.lr < 0.0 || opts.weight_decay < 0.0) throw ArgumentError("negative optimizer rate");
  if (!(opts.beta1 >= 0.0 && opts.beta1 < 1.0 && opts.beta2 >= 0.0 && opts.beta2 < 1.0))
    throw ArgumentError("betas must lie in [0, 1)");
  m_.reserve(model.parameters().size());
  v_.reserve(model.parameters().size());
  for (const auto& p : model.parameters()) {
    m_.emplace_back(p.value.rows(), p.value.cols());
    v_.emplace_back(p.value.rows(), p.value.cols());
  }
}

void AdamW::step(std::vector<Param>& params, const Gradients& grads) {
  if (grads.by_param.size() != params.size()) throw ArgumentError("gradient layout mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& theta = params[p].value.raw();
    const auto& g = grads.by_param[p].raw();
    auto& m = m_[p].raw();
    auto& v = v_[p].raw();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g[i];
      v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      theta[i] -= opts_.lr * (m_hat / (std::sqrt(v_hat) + opts_.epsilon) +
                              opts_.weight_decay * theta[i]);
    }
  }
}

Batch to_batch(const ingest::FeatureMatrix& features, const std::vector<std::size_t>& rows) {
  const std::size_t channels = features.channels.size();
  Batch batch;
  batch.reserve(rows.size());
  for (std::size_t row : rows) {
    const auto& flat = features.rows.at(row);
    Sequence seq(static_cast<std::size_t>(features.window));
    for (std::size_t t = 0; t < seq.size(); ++t)
      seq[t].assign(flat.begin() + static_cast<std::ptrdiff_t>(t * channels),
                    flat.begin() + static_cast<std::ptrdiff_t>((t + 1) * channels));
    batch.push_back(std::move(seq));
  }
  return batch;
}

TrainReport train(TransformerRegressor& model, const ingest::FeatureMatrix& features,
                  const TrainOptions& opts) {
  if (opts.epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (opts.batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (features.train_indices.empty()) throw ArgumentError("feature matrix has no train split");
  if (features.channels.size() != static_cast<std::size_t>(model.config().input_dim))
    throw ShapeError("feature channel count " + std::to_string(features.channels.size()) +
                     " != model input_dim " + std::to_string(model.config().input_dim));

  TrainReport report;
  report.n_epochs = opts.epochs;
  report.parameter_count = model.parameter_scalars();

  AdamW optimizer(model, opts);
  Rng shuffle_rng(opts.shuffle_seed);
  Rng dropout_rng(opts.shuffle_seed ^ 0x9e3779b97f4a7c15ULL);
  Rng* drop = model.config().dropout_p > 0.0 ? &dropout_rng : nullptr;

  auto snapshot = model.parameters(); // last finite state
  std::vector<std::size_t> order = features.train_indices;

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    const auto epoch_t0 = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t example_count = 0, batch_count = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(opts.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(opts.batch_size));
      std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(stop));
      std::vector<double> labels(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i)
        labels[i] = features.normalize_label(features.labels[rows[i]]);

      auto [loss, grads] = loss_and_gradients(model, to_batch(features, rows), labels, drop);
      if (!std::isfinite(loss)) {
        model.parameters() = snapshot;
        throw DivergenceError("non-finite train loss in epoch " + std::to_string(epoch + 1));
      }
      optimizer.step(model.parameters(), grads);
      if (!all_finite(model.parameters())) {
        model.parameters() = snapshot;
        throw DivergenceError("non-finite parameter after update in epoch " +
                              std::to_string(epoch + 1));
      }
      loss_sum += loss * static_cast<double>(rows.size());
      example_count += rows.size();
      ++batch_count;
    }
    const double train_seconds = seconds_since(epoch_t0);

    report.train_mse.push_back(loss_sum / static_cast<double>(example_count));
    report.test_mse.push_back(
        normalized_mse(model, features, features.test_indices, opts.batch_size));
    report.batches_per_second.push_back(
        train_seconds > 0.0 ? static_cast<double>(batch_count) / train_seconds : 0.0);
    report.wall_seconds.push_back(seconds_since(epoch_t0));
    snapshot = model.parameters();
  }
  return report;
}

std::vector<double> predict_capacity(const TransformerRegressor& model,
                                     const ingest::FeatureMatrix& features,
                                     const std::vector<std::size_t>& rows) {
  const auto preds = predict(model, to_batch(features, rows));
  std::vector<double> out(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i)
    out[i] = features.denormalize_label(preds[i]);
  return out;
}

nlohmann::json checkpoint_to_json(const TransformerRegressor& model,
                                  const std::vector<ingest::FeatureChannel>& channels,
                                  int window) {
  const ModelConfig& cfg = model.config();
  nlohmann::json j;
  j["format"] = "battlab-checkpoint-v1";
  j["config"] = {{"d_model", cfg.d_model},   {"n_heads", cfg.n_heads},
                 {"n_layers", cfg.n_layers}, {"d_ff", cfg.d_ff},
                 {"max_seq_len", cfg.max_seq_len}, {"dropout_p", cfg.dropout_p},
                 {"input_dim", cfg.input_dim}};
  j["seed"] = model.seed();
  j["window"] = window;
  j["channels"] = nlohmann::json::array();
  for (const auto& ch : channels)
    j["channels"].push_back({{"name", ch.name}, {"min", ch.min}, {"max", ch.max}});
  nlohmann::json params = nlohmann::json::object();
  for (const auto& p : model.parameters()) params[p.name] = p.value.raw();
  j["parameters"] = std::move(params);
  return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "battlab-checkpoint-v1")
      throw ConfigError("unknown checkpoint format");
    const auto& jc = j.at("config");
    ModelConfig cfg;
    cfg.d_model = jc.at("d_model").get<int>();
    cfg.n_heads = jc.at("n_heads").get<int>();
    cfg.n_layers = jc.at("n_layers").get<int>();
    cfg.d_ff = jc.at("d_ff").get<int>();
    cfg.max_seq_len = jc.at("max_seq_len").get<int>();
    cfg.dropout_p = jc.at("dropout_p").get<double>();
    cfg.input_dim = jc.at("input_dim").get<int>();

    Checkpoint ckpt{TransformerRegressor(cfg, j.at("seed").get<std::uint64_t>()), {}, 1};
    ckpt.window = j.at("window").get<int>();
    for (const auto& jc2 : j.at("channels"))
      ckpt.channels.push_back({jc2.at("name").get<std::string>(), jc2.at("min").get<double>(),
                               jc2.at("max").get<double>()});

    const auto& jp = j.at("parameters");
    for (auto& p : ckpt.model.parameters()) {
      const auto it = jp.find(p.name);
      if (it == jp.end()) throw ConfigError("checkpoint missing parameter " + p.name);
      const auto values = it->get<std::vector<double>>();
      if (values.size() != p.value.size())
        throw ConfigError("checkpoint size mismatch for " + p.name);
      p.value.raw() = values;
    }
    if (jp.size() != ckpt.model.parameters().size())
      throw ConfigError("checkpoint carries unknown parameters");
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const TransformerRegressor& model,
                     const std::vector<ingest::FeatureChannel>& channels, int window) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << checkpoint_to_json(model, channels, window).dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint JSON: ") + e.what());
  }
  return checkpoint_from_json(j);
}

} // namespace battlab::model
