#pragma once

// Metric learning with the batch-hard soft-plus triplet loss:
//
//   L(theta, X) = sum_i sum_a g( max_p D(f(x_a^i), f(x_p^i)) - min_{j!=i, n} D(f(x_a^i), f(x_n^j)) )
//
// with g(x) = ln(1 + exp(x)) and D the Euclidean distance. The embedding map f is
// a small affine or one-hidden-layer (tanh) network over precomputed features.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace trackmine {

struct EmbeddingRecord {
  std::string key;
  std::vector<double> vector;

  friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

// P classes x K samples, class-major: sample (i, a) lives at row i*K + a.
struct TripletBatch {
  std::size_t classes = 0;           // P
  std::size_t per_class = 0;         // K
  std::size_t input_dim = 0;
  std::vector<double> features;      // (P*K) x input_dim, row-major

  std::size_t size() const { return classes * per_class; }
  std::span<const double> row(std::size_t r) const {
    return {features.data() + r * input_dim, input_dim};
  }
};

enum class Architecture { Affine, HiddenTanh };

class EmbeddingModel {
 public:
  EmbeddingModel() = default;

  // Zero-initialised parameters.
  static EmbeddingModel affine(std::size_t input_dim, std::size_t output_dim);
  static EmbeddingModel hidden_tanh(std::size_t input_dim, std::size_t hidden_dim,
                                    std::size_t output_dim);

  // Glorot-uniform weights, zero biases; deterministic in seed.
  void initialize(std::uint64_t seed);

  Architecture architecture() const { return arch_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }
  std::size_t output_dim() const { return output_dim_; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  void forward(std::span<const double> x, std::span<double> out) const;
  std::vector<double> apply(std::span<const double> x) const;

  // Adds J^T grad_out to grad_params for the input x.
  void backward(std::span<const double> x, std::span<const double> grad_out,
                std::span<double> grad_params) const;

  friend bool operator==(const EmbeddingModel&, const EmbeddingModel&) = default;

 private:
  EmbeddingModel(Architecture arch, std::size_t in, std::size_t hidden, std::size_t out);

  Architecture arch_ = Architecture::Affine;
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  std::size_t output_dim_ = 0;
  std::vector<double> params_;
};

struct HardTerms {
  double d_pos = 0;
  double d_neg = 0;
  std::size_t pos_index = 0;  // batch row attaining d_pos (first in row order)
  std::size_t neg_index = 0;  // batch row attaining d_neg (first in row order)

  friend bool operator==(const HardTerms&, const HardTerms&) = default;
};

// Throws DegenerateBatch when P < 2 or K < 2.
void validate(const TripletBatch& batch);

// Hardest positive and negative for every anchor, over already computed embeddings
// (row-major, batch.size() x dim).
std::vector<HardTerms> batch_hard_terms(std::span<const double> embeddings, std::size_t dim,
                                        std::size_t classes, std::size_t per_class);

std::vector<HardTerms> batch_hard_terms(const EmbeddingModel& model, const TripletBatch& batch);

// Numerically stable ln(1 + exp(x)).
double softplus(double x);

double triplet_loss(const EmbeddingModel& model, const TripletBatch& batch);

// Analytic dL/dtheta. Distances of zero contribute no gradient.
std::vector<double> loss_gradient(const EmbeddingModel& model, const TripletBatch& batch);

// Labelled feature vectors for training.
struct LabeledSamples {
  std::size_t dim = 0;
  std::vector<double> features;  // n x dim
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * dim, dim}; }
};

struct TrainConfig {
  Architecture architecture = Architecture::Affine;
  std::size_t hidden_dim = 64;
  std::size_t output_dim = 128;
  std::size_t classes_per_batch = 16;  // P
  std::size_t samples_per_class = 4;   // K
  double initial_lr = 1e-5;
  std::uint64_t first_decay_samples = 1'500'000;
  double first_decay_lr = 1e-6;
  std::uint64_t second_decay_samples = 2'500'000;
  double second_decay_lr = 1e-6;
  std::uint64_t total_samples = 5'000'000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  // Step size in effect after `seen` samples.
  double learning_rate(std::uint64_t seen) const;
};

void validate(const TrainConfig& cfg);

struct TrainLog {
  std::size_t steps = 0;
  std::vector<double> batch_losses;
};

// Adam over randomly composed P x K batches until total_samples crops were consumed.
// Classes with fewer than K samples are drawn with replacement. Deterministic in seed.
// Throws InsufficientClasses when fewer than P classes are present.
EmbeddingModel train_embedding(const LabeledSamples& data, const TrainConfig& cfg,
                               std::uint64_t seed, TrainLog* log = nullptr);

// Draws one P x K batch the same way training does.
TripletBatch sample_batch(const LabeledSamples& data, std::size_t classes, std::size_t per_class,
                          std::uint64_t seed);

// The member closest to the arithmetic mean (first one on ties). Throws EmptyTrack.
EmbeddingRecord representative_embedding(const std::vector<EmbeddingRecord>& track_vectors);

// Throws ZeroVector for an all-zero input.
std::vector<double> l2_normalize(std::span<const double> v);

}  // namespace trackmine
