#include "trackmine/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "trackmine/error.hpp"
#include "trackmine/rng.hpp"
#include "trackmine/simd/kernels.hpp"

namespace trackmine {

EmbeddingModel::EmbeddingModel(Architecture arch, std::size_t in, std::size_t hidden,
                               std::size_t out)
    : arch_(arch), input_dim_(in), hidden_dim_(hidden), output_dim_(out) {
  const std::size_t n = arch == Architecture::Affine
                            ? out * in + out
                            : hidden * in + hidden + out * hidden + out;
  params_.assign(n, 0.0);
}

EmbeddingModel EmbeddingModel::affine(std::size_t input_dim, std::size_t output_dim) {
  return EmbeddingModel(Architecture::Affine, input_dim, 0, output_dim);
}

EmbeddingModel EmbeddingModel::hidden_tanh(std::size_t input_dim, std::size_t hidden_dim,
                                           std::size_t output_dim) {
  return EmbeddingModel(Architecture::HiddenTanh, input_dim, hidden_dim, output_dim);
}

void EmbeddingModel::initialize(std::uint64_t seed) {
  Rng rng(seed);
  auto fill = [&](std::size_t offset, std::size_t rows, std::size_t cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (std::size_t k = 0; k < rows * cols; ++k) params_[offset + k] = rng.uniform(-limit, limit);
    for (std::size_t k = 0; k < rows; ++k) params_[offset + rows * cols + k] = 0.0;
  };
  if (arch_ == Architecture::Affine) {
    fill(0, output_dim_, input_dim_);
  } else {
    fill(0, hidden_dim_, input_dim_);
    fill(hidden_dim_ * input_dim_ + hidden_dim_, output_dim_, hidden_dim_);
  }
}

namespace {

// out = W x + b with W (rows x cols) followed by b in params.
void affine_forward(const double* params, std::size_t rows, std::size_t cols, const double* x,
                    double* out) {
  const double* bias = params + rows * cols;
  const auto& k = simd::active();
  for (std::size_t r = 0; r < rows; ++r) out[r] = k.dot(params + r * cols, x, cols) + bias[r];
}

void affine_backward(std::size_t rows, std::size_t cols, const double* x, const double* g,
                     double* grad) {
  double* gbias = grad + rows * cols;
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    double* row = grad + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
    gbias[r] += gr;
  }
}

}  // namespace

void EmbeddingModel::forward(std::span<const double> x, std::span<double> out) const {
  if (x.size() != input_dim_ || out.size() != output_dim_) {
    throw Error(ErrorKind::LengthMismatch, "embedding model dimension mismatch");
  }
  if (arch_ == Architecture::Affine) {
    affine_forward(params_.data(), output_dim_, input_dim_, x.data(), out.data());
    return;
  }
  std::vector<double> h(hidden_dim_);
  affine_forward(params_.data(), hidden_dim_, input_dim_, x.data(), h.data());
  for (auto& v : h) v = std::tanh(v);
  affine_forward(params_.data() + hidden_dim_ * input_dim_ + hidden_dim_, output_dim_, hidden_dim_,
                 h.data(), out.data());
}

std::vector<double> EmbeddingModel::apply(std::span<const double> x) const {
  std::vector<double> out(output_dim_);
  forward(x, out);
  return out;
}

void EmbeddingModel::backward(std::span<const double> x, std::span<const double> grad_out,
                              std::span<double> grad_params) const {
  if (arch_ == Architecture::Affine) {
    affine_backward(output_dim_, input_dim_, x.data(), grad_out.data(), grad_params.data());
    return;
  }
  std::vector<double> h(hidden_dim_);
  affine_forward(params_.data(), hidden_dim_, input_dim_, x.data(), h.data());
  for (auto& v : h) v = std::tanh(v);

  const std::size_t second = hidden_dim_ * input_dim_ + hidden_dim_;
  const double* w2 = params_.data() + second;
  affine_backward(output_dim_, hidden_dim_, h.data(), grad_out.data(), grad_params.data() + second);

  std::vector<double> gz(hidden_dim_, 0.0);
  for (std::size_t o = 0; o < output_dim_; ++o) {
    const double g = grad_out[o];
    if (g == 0.0) continue;
    for (std::size_t k = 0; k < hidden_dim_; ++k) gz[k] += w2[o * hidden_dim_ + k] * g;
  }
  for (std::size_t k = 0; k < hidden_dim_; ++k) gz[k] *= 1.0 - h[k] * h[k];
  affine_backward(hidden_dim_, input_dim_, x.data(), gz.data(), grad_params.data());
}

void validate(const TripletBatch& batch) {
  if (batch.classes < 2 || batch.per_class < 2) {
    throw Error(ErrorKind::DegenerateBatch, "batch needs P >= 2 and K >= 2, got P=" +
                                                std::to_string(batch.classes) +
                                                " K=" + std::to_string(batch.per_class));
  }
  if (batch.features.size() != batch.size() * batch.input_dim) {
    throw Error(ErrorKind::LengthMismatch, "batch feature buffer has wrong size");
  }
}

namespace {

std::vector<double> embed_batch(const EmbeddingModel& model, const TripletBatch& batch) {
  const std::size_t dim = model.output_dim();
  std::vector<double> e(batch.size() * dim);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    model.forward(batch.row(r), std::span<double>(e.data() + r * dim, dim));
  }
  return e;
}

std::vector<double> distance_matrix(std::span<const double> e, std::size_t n, std::size_t dim) {
  std::vector<double> d(n * n, 0.0);
  const auto& k = simd::active();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::sqrt(k.squared_l2(e.data() + i * dim, e.data() + j * dim, dim));
      d[i * n + j] = v;
      d[j * n + i] = v;
    }
  }
  return d;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::vector<HardTerms> batch_hard_terms(std::span<const double> embeddings, std::size_t dim,
                                        std::size_t classes, std::size_t per_class) {
  if (classes < 2 || per_class < 2) {
    throw Error(ErrorKind::DegenerateBatch, "batch needs P >= 2 and K >= 2");
  }
  const std::size_t n = classes * per_class;
  if (embeddings.size() != n * dim) {
    throw Error(ErrorKind::LengthMismatch, "embedding buffer has wrong size");
  }
  const auto d = distance_matrix(embeddings, n, dim);
  std::vector<HardTerms> out(n);
  for (std::size_t a = 0; a < n; ++a) {
    const std::size_t cls = a / per_class;
    HardTerms t;
    t.d_pos = -1.0;
    for (std::size_t p = cls * per_class; p < (cls + 1) * per_class; ++p) {
      if (d[a * n + p] > t.d_pos) {
        t.d_pos = d[a * n + p];
        t.pos_index = p;
      }
    }
    t.d_neg = INFINITY;
    for (std::size_t r = 0; r < n; ++r) {
      if (r / per_class == cls) continue;
      if (d[a * n + r] < t.d_neg) {
        t.d_neg = d[a * n + r];
        t.neg_index = r;
      }
    }
    out[a] = t;
  }
  return out;
}

std::vector<HardTerms> batch_hard_terms(const EmbeddingModel& model, const TripletBatch& batch) {
  validate(batch);
  const auto e = embed_batch(model, batch);
  return batch_hard_terms(e, model.output_dim(), batch.classes, batch.per_class);
}

double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double triplet_loss(const EmbeddingModel& model, const TripletBatch& batch) {
  double loss = 0.0;
  for (const auto& t : batch_hard_terms(model, batch)) loss += softplus(t.d_pos - t.d_neg);
  return loss;
}

std::vector<double> loss_gradient(const EmbeddingModel& model, const TripletBatch& batch) {
  validate(batch);
  const std::size_t dim = model.output_dim();
  const std::size_t n = batch.size();
  const auto e = embed_batch(model, batch);
  const auto terms = batch_hard_terms(e, dim, batch.classes, batch.per_class);

  std::vector<double> ge(n * dim, 0.0);
  auto pull = [&](std::size_t a, std::size_t b, double dist, double scale) {
    // d dist(e_a, e_b) / d e_a = (e_a - e_b) / dist
    if (dist <= 0.0) return;
    const double c = scale / dist;
    for (std::size_t k = 0; k < dim; ++k) {
      const double diff = c * (e[a * dim + k] - e[b * dim + k]);
      ge[a * dim + k] += diff;
      ge[b * dim + k] -= diff;
    }
  };
  for (std::size_t a = 0; a < n; ++a) {
    const auto& t = terms[a];
    const double s = sigmoid(t.d_pos - t.d_neg);
    pull(a, t.pos_index, t.d_pos, s);
    pull(a, t.neg_index, t.d_neg, -s);
  }

  std::vector<double> grad(model.parameters().size(), 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    model.backward(batch.row(r), std::span<const double>(ge.data() + r * dim, dim), grad);
  }
  return grad;
}

double TrainConfig::learning_rate(std::uint64_t seen) const {
  if (seen >= second_decay_samples) return second_decay_lr;
  if (seen >= first_decay_samples) return first_decay_lr;
  return initial_lr;
}

void validate(const TrainConfig& cfg) {
  if (cfg.classes_per_batch < 2 || cfg.samples_per_class < 2) {
    throw Error(ErrorKind::DegenerateBatch, "training needs P >= 2 and K >= 2");
  }
  if (!(cfg.initial_lr > 0 && cfg.first_decay_lr > 0 && cfg.second_decay_lr > 0)) {
    throw Error(ErrorKind::Usage, "learning rates must be positive");
  }
  if (cfg.output_dim == 0 || (cfg.architecture == Architecture::HiddenTanh && cfg.hidden_dim == 0)) {
    throw Error(ErrorKind::Usage, "layer widths must be positive");
  }
}

namespace {

struct ClassIndex {
  std::vector<int> labels;                     // sorted distinct labels
  std::vector<std::vector<std::size_t>> rows;  // rows per label
};

ClassIndex index_classes(const LabeledSamples& data) {
  std::map<int, std::vector<std::size_t>> m;
  for (std::size_t i = 0; i < data.size(); ++i) m[data.labels[i]].push_back(i);
  ClassIndex idx;
  for (auto& [label, rows] : m) {
    idx.labels.push_back(label);
    idx.rows.push_back(std::move(rows));
  }
  return idx;
}

TripletBatch draw_batch(const LabeledSamples& data, const ClassIndex& idx, std::size_t classes,
                        std::size_t per_class, Rng& rng) {
  if (idx.labels.size() < classes) {
    throw Error(ErrorKind::InsufficientClasses, "need " + std::to_string(classes) +
                                                    " classes, data has " +
                                                    std::to_string(idx.labels.size()));
  }
  std::vector<std::size_t> order(idx.labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // Partial Fisher-Yates for the first P classes.
  for (std::size_t i = 0; i < classes; ++i) {
    const std::size_t j = i + rng.below(order.size() - i);
    std::swap(order[i], order[j]);
  }

  TripletBatch b;
  b.classes = classes;
  b.per_class = per_class;
  b.input_dim = data.dim;
  b.features.reserve(classes * per_class * data.dim);
  for (std::size_t i = 0; i < classes; ++i) {
    std::vector<std::size_t> rows = idx.rows[order[i]];
    std::vector<std::size_t> picked;
    if (rows.size() >= per_class) {
      for (std::size_t a = 0; a < per_class; ++a) {
        const std::size_t j = a + rng.below(rows.size() - a);
        std::swap(rows[a], rows[j]);
        picked.push_back(rows[a]);
      }
    } else {
      for (std::size_t a = 0; a < per_class; ++a) picked.push_back(rows[rng.below(rows.size())]);
    }
    for (std::size_t r : picked) {
      const auto x = data.row(r);
      b.features.insert(b.features.end(), x.begin(), x.end());
    }
  }
  return b;
}

}  // namespace

TripletBatch sample_batch(const LabeledSamples& data, std::size_t classes, std::size_t per_class,
                          std::uint64_t seed) {
  Rng rng(seed);
  return draw_batch(data, index_classes(data), classes, per_class, rng);
}

EmbeddingModel train_embedding(const LabeledSamples& data, const TrainConfig& cfg,
                               std::uint64_t seed, TrainLog* log) {
  validate(cfg);
  if (data.features.size() != data.size() * data.dim) {
    throw Error(ErrorKind::LengthMismatch, "training feature buffer has wrong size");
  }
  const ClassIndex idx = index_classes(data);
  if (idx.labels.size() < cfg.classes_per_batch) {
    throw Error(ErrorKind::InsufficientClasses,
                "need " + std::to_string(cfg.classes_per_batch) + " classes, data has " +
                    std::to_string(idx.labels.size()));
  }

  EmbeddingModel model = cfg.architecture == Architecture::Affine
                             ? EmbeddingModel::affine(data.dim, cfg.output_dim)
                             : EmbeddingModel::hidden_tanh(data.dim, cfg.hidden_dim, cfg.output_dim);
  model.initialize(seed);

  const std::uint64_t batch_samples = cfg.classes_per_batch * cfg.samples_per_class;
  const std::uint64_t steps = cfg.total_samples / batch_samples;
  Rng rng(seed ^ 0x9E3779B97F4A7C15ULL);

  const std::size_t np = model.parameters().size();
  std::vector<double> m(np, 0.0);
  std::vector<double> v(np, 0.0);
  double beta1_pow = 1.0;
  double beta2_pow = 1.0;

  for (std::uint64_t step = 0; step < steps; ++step) {
    const double lr = cfg.learning_rate(step * batch_samples);
    const TripletBatch batch =
        draw_batch(data, idx, cfg.classes_per_batch, cfg.samples_per_class, rng);
    if (log) log->batch_losses.push_back(triplet_loss(model, batch));
    const auto g = loss_gradient(model, batch);

    beta1_pow *= cfg.adam_beta1;
    beta2_pow *= cfg.adam_beta2;
    auto params = model.parameters();
    for (std::size_t k = 0; k < np; ++k) {
      m[k] = cfg.adam_beta1 * m[k] + (1.0 - cfg.adam_beta1) * g[k];
      v[k] = cfg.adam_beta2 * v[k] + (1.0 - cfg.adam_beta2) * g[k] * g[k];
      const double mhat = m[k] / (1.0 - beta1_pow);
      const double vhat = v[k] / (1.0 - beta2_pow);
      params[k] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
    }
    if (log) ++log->steps;
  }
  return model;
}

EmbeddingRecord representative_embedding(const std::vector<EmbeddingRecord>& track_vectors) {
  if (track_vectors.empty()) throw Error(ErrorKind::EmptyTrack, "track has no embeddings");
  const std::size_t dim = track_vectors.front().vector.size();
  std::vector<double> mean(dim, 0.0);
  for (const auto& r : track_vectors) {
    if (r.vector.size() != dim) {
      throw Error(ErrorKind::InconsistentInputs, "embedding dimensions differ within a track");
    }
    for (std::size_t k = 0; k < dim; ++k) mean[k] += r.vector[k];
  }
  for (auto& v : mean) v /= static_cast<double>(track_vectors.size());

  std::size_t best = 0;
  double best_d = INFINITY;
  for (std::size_t i = 0; i < track_vectors.size(); ++i) {
    const double d = simd::squared_l2(track_vectors[i].vector, mean);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return track_vectors[best];
}

std::vector<double> l2_normalize(std::span<const double> v) {
  const double norm = std::sqrt(simd::dot(v, v));
  if (norm == 0.0 || !std::isfinite(norm)) {
    throw Error(ErrorKind::ZeroVector, "cannot normalize a zero vector");
  }
  std::vector<double> out(v.begin(), v.end());
  for (auto& x : out) x /= norm;
  return out;
}

}  // namespace trackmine
