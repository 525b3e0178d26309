#pragma once

// Clustering agreement metrics (entropies in nats) and the outlier-fraction sweep.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace trackmine {

// Joint counts of true class u (rows) and predicted cluster v (columns). Labels are
// compacted to 0.. in order of first appearance.
struct ContingencyTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint64_t> counts;  // rows x cols, row-major
  std::vector<std::uint64_t> row_sums;
  std::vector<std::uint64_t> col_sums;
  std::uint64_t total = 0;

  std::uint64_t at(std::size_t u, std::size_t v) const { return counts[u * cols + v]; }
};

ContingencyTable contingency(std::span<const int> labels_true, std::span<const int> labels_pred);

// Builds a table directly from counts (rows x cols). Used for fixtures.
ContingencyTable table_from_counts(std::size_t rows, std::size_t cols,
                                   std::vector<std::uint64_t> counts);

double entropy(std::span<const std::uint64_t> marginals, std::uint64_t total);
double mutual_information(const ContingencyTable& table);

// Expectation of MI over all labelings with the table's marginals.
double expected_mutual_information(std::span<const std::uint64_t> row_sums,
                                   std::span<const std::uint64_t> col_sums);
double expected_mutual_information(const ContingencyTable& table);

enum class Normalizer { Arithmetic, Max, Min, Geometric };

Normalizer parse_normalizer(const std::string& name);
const char* to_string(Normalizer n);

double ami(const ContingencyTable& table, Normalizer normalizer = Normalizer::Arithmetic);

struct HomogeneityCompleteness {
  double homogeneity = 1;
  double completeness = 1;
};

HomogeneityCompleteness homogeneity_completeness(const ContingencyTable& table);

struct SweepPoint {
  double fraction = 0;
  std::size_t retained = 0;
  double ami = 0;
  double homogeneity = 0;
  double completeness = 0;
};

struct SweepOptions {
  Normalizer normalizer = Normalizer::Arithmetic;
  // Score NOISE points as their own label (-1) instead of leaving them out.
  bool include_noise = false;
};

// Points kept after removing the `fraction` most outlying of n.
std::size_t retained_count(std::size_t n, double fraction);

// For each fraction f, removes the highest-scoring points (ties: larger score first,
// then smaller index) so that ceil((1-f)*N) remain, and scores the rest. N counts the
// points that take part at f=0. Without scores (empty span) a single point at f=0 is
// returned. Throws EmptyRemainder when nothing would be left.
std::vector<SweepPoint> outlier_sweep(std::span<const int> labels_pred,
                                      std::span<const double> outlier_scores,
                                      std::span<const int> labels_true,
                                      std::span<const double> fractions,
                                      const SweepOptions& options = {});

}  // namespace trackmine
