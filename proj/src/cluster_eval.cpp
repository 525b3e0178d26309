#include "trackmine/cluster_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "trackmine/error.hpp"
#include "trackmine/hdbscan.hpp"
#include "trackmine/parallel.hpp"

namespace trackmine {

namespace {

std::vector<std::size_t> compact(std::span<const int> labels, std::size_t& distinct) {
  std::unordered_map<int, std::size_t> ids;
  std::vector<std::size_t> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[i] = ids.try_emplace(labels[i], ids.size()).first->second;
  }
  distinct = ids.size();
  return out;
}

void fill_marginals(ContingencyTable& t) {
  t.row_sums.assign(t.rows, 0);
  t.col_sums.assign(t.cols, 0);
  t.total = 0;
  for (std::size_t u = 0; u < t.rows; ++u) {
    for (std::size_t v = 0; v < t.cols; ++v) {
      const auto c = t.at(u, v);
      t.row_sums[u] += c;
      t.col_sums[v] += c;
      t.total += c;
    }
  }
}

// Every nonzero cell fills its whole row (rows == false) or column.
bool cells_fill(const ContingencyTable& t, bool rows) {
  for (std::size_t u = 0; u < t.rows; ++u) {
    for (std::size_t v = 0; v < t.cols; ++v) {
      const auto c = t.at(u, v);
      if (c != 0 && c != (rows ? t.row_sums[u] : t.col_sums[v])) return false;
    }
  }
  return true;
}

// H(rows | cols) when given_cols, else H(cols | rows).
double conditional_entropy(const ContingencyTable& t, bool given_cols) {
  if (t.total == 0) return 0.0;
  const double n = static_cast<double>(t.total);
  double h = 0.0;
  for (std::size_t u = 0; u < t.rows; ++u) {
    for (std::size_t v = 0; v < t.cols; ++v) {
      const auto c = t.at(u, v);
      if (c == 0) continue;
      const double nc = static_cast<double>(c);
      const double m = static_cast<double>(given_cols ? t.col_sums[v] : t.row_sums[u]);
      h -= nc / n * std::log(nc / m);
    }
  }
  return std::max(h, 0.0);
}

}  // namespace

ContingencyTable contingency(std::span<const int> labels_true, std::span<const int> labels_pred) {
  if (labels_true.size() != labels_pred.size()) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(labels_true.size()) + " true labels vs " +
                                               std::to_string(labels_pred.size()) + " predicted");
  }
  ContingencyTable t;
  const auto u = compact(labels_true, t.rows);
  const auto v = compact(labels_pred, t.cols);
  t.counts.assign(t.rows * t.cols, 0);
  for (std::size_t i = 0; i < u.size(); ++i) ++t.counts[u[i] * t.cols + v[i]];
  fill_marginals(t);
  return t;
}

ContingencyTable table_from_counts(std::size_t rows, std::size_t cols,
                                   std::vector<std::uint64_t> counts) {
  if (counts.size() != rows * cols) throw Error(ErrorKind::LengthMismatch, "table shape mismatch");
  ContingencyTable t;
  t.rows = rows;
  t.cols = cols;
  t.counts = std::move(counts);
  fill_marginals(t);
  return t;
}

double entropy(std::span<const std::uint64_t> marginals, std::uint64_t total) {
  if (total == 0) return 0.0;
  const double n = static_cast<double>(total);
  double h = 0.0;
  for (auto a : marginals) {
    if (a == 0) continue;
    const double p = static_cast<double>(a) / n;
    h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

double mutual_information(const ContingencyTable& t) {
  if (t.total == 0) return 0.0;
  const double n = static_cast<double>(t.total);
  double mi = 0.0;
  for (std::size_t u = 0; u < t.rows; ++u) {
    for (std::size_t v = 0; v < t.cols; ++v) {
      const auto c = t.at(u, v);
      if (c == 0) continue;
      const double nc = static_cast<double>(c);
      mi += nc / n *
            std::log(nc * n / (static_cast<double>(t.row_sums[u]) * static_cast<double>(t.col_sums[v])));
    }
  }
  return std::max(mi, 0.0);
}

double expected_mutual_information(std::span<const std::uint64_t> row_sums,
                                   std::span<const std::uint64_t> col_sums) {
  std::uint64_t total = 0;
  for (auto a : row_sums) total += a;
  if (total == 0) return 0.0;

  // log k! for k = 0..N
  std::vector<double> lf(total + 1, 0.0);
  for (std::uint64_t k = 2; k <= total; ++k) lf[k] = lf[k - 1] + std::log(static_cast<double>(k));

  const double n = static_cast<double>(total);
  const double log_n = std::log(n);
  double emi = 0.0;
  for (auto a : row_sums) {
    if (a == 0) continue;
    for (auto b : col_sums) {
      if (b == 0) continue;
      const std::uint64_t lo = std::max<std::int64_t>(1, static_cast<std::int64_t>(a + b) -
                                                             static_cast<std::int64_t>(total));
      const std::uint64_t hi = std::min(a, b);
      const double fixed = lf[a] + lf[b] + lf[total - a] + lf[total - b] - lf[total];
      const double log_ab = std::log(static_cast<double>(a)) + std::log(static_cast<double>(b));
      for (std::uint64_t k = lo; k <= hi; ++k) {
        const double log_p = fixed - lf[k] - lf[a - k] - lf[b - k] - lf[total - a - b + k];
        const double kd = static_cast<double>(k);
        emi += kd / n * (log_n + std::log(kd) - log_ab) * std::exp(log_p);
      }
    }
  }
  return emi;
}

double expected_mutual_information(const ContingencyTable& t) {
  return expected_mutual_information(t.row_sums, t.col_sums);
}

Normalizer parse_normalizer(const std::string& name) {
  if (name == "arithmetic") return Normalizer::Arithmetic;
  if (name == "max") return Normalizer::Max;
  if (name == "min") return Normalizer::Min;
  if (name == "sqrt" || name == "geometric") return Normalizer::Geometric;
  throw Error(ErrorKind::Usage, "unknown normalizer '" + name + "'");
}

const char* to_string(Normalizer n) {
  switch (n) {
    case Normalizer::Arithmetic: return "arithmetic";
    case Normalizer::Max: return "max";
    case Normalizer::Min: return "min";
    case Normalizer::Geometric: return "sqrt";
  }
  return "?";
}

double ami(const ContingencyTable& t, Normalizer normalizer) {
  // Identical partitions up to renaming; the formula below only gets within rounding of 1.
  if (t.total > 0 && cells_fill(t, true) && cells_fill(t, false)) return 1.0;
  const double hu = entropy(t.row_sums, t.total);
  const double hv = entropy(t.col_sums, t.total);
  const double mi = mutual_information(t);
  const double emi = expected_mutual_information(t);
  double norm = 0.0;
  switch (normalizer) {
    case Normalizer::Arithmetic: norm = 0.5 * (hu + hv); break;
    case Normalizer::Max: norm = std::max(hu, hv); break;
    case Normalizer::Min: norm = std::min(hu, hv); break;
    case Normalizer::Geometric: norm = std::sqrt(hu * hv); break;
  }
  double denom = norm - emi;
  if (denom == 0.0 && mi == emi) return 1.0;
  constexpr double kEps = 2.220446049250313e-16;
  if (std::fabs(denom) < kEps) denom = denom < 0 ? -kEps : kEps;
  return (mi - emi) / denom;
}

HomogeneityCompleteness homogeneity_completeness(const ContingencyTable& t) {
  const double hc = entropy(t.row_sums, t.total);
  const double hk = entropy(t.col_sums, t.total);
  HomogeneityCompleteness out;
  out.homogeneity = hc == 0.0 ? 1.0 : std::clamp(1.0 - conditional_entropy(t, true) / hc, 0.0, 1.0);
  out.completeness = hk == 0.0 ? 1.0 : std::clamp(1.0 - conditional_entropy(t, false) / hk, 0.0, 1.0);
  return out;
}

std::size_t retained_count(std::size_t n, double fraction) {
  // The slack absorbs representation error in f*n (0.05 * 1000 is not exactly 50).
  const auto drop = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
  return n - std::min(drop, n);
}

std::vector<SweepPoint> outlier_sweep(std::span<const int> labels_pred,
                                      std::span<const double> outlier_scores,
                                      std::span<const int> labels_true,
                                      std::span<const double> fractions,
                                      const SweepOptions& options) {
  if (labels_pred.size() != labels_true.size()) {
    throw Error(ErrorKind::LengthMismatch, "prediction and truth lengths differ");
  }
  const bool scored = !outlier_scores.empty();
  if (scored && outlier_scores.size() != labels_pred.size()) {
    throw Error(ErrorKind::LengthMismatch, "outlier scores and predictions lengths differ");
  }
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] >= 0.0 && fractions[i] < 1.0) || (i > 0 && fractions[i] < fractions[i - 1])) {
      throw Error(ErrorKind::Usage, "fractions must be ascending in [0,1)");
    }
  }

  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < labels_pred.size(); ++i) {
    if (options.include_noise || labels_pred[i] != kNoise) pool.push_back(i);
  }
  // Most outlying first.
  if (scored) {
    std::stable_sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
      return outlier_scores[a] > outlier_scores[b];
    });
  }

  std::vector<double> fs(fractions.begin(), fractions.end());
  if (!scored) fs.assign(1, 0.0);

  std::vector<SweepPoint> out(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const std::size_t keep = retained_count(pool.size(), fs[i]);
    if (keep == 0) {
      throw Error(ErrorKind::EmptyRemainder, "fraction " + std::to_string(fs[i]) + " leaves no points");
    }
  }
  parallel_for(fs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t keep = retained_count(pool.size(), fs[i]);
      // Back to input order so f=0 reproduces the unswept table exactly.
      std::vector<std::size_t> kept(pool.end() - static_cast<std::ptrdiff_t>(keep), pool.end());
      std::sort(kept.begin(), kept.end());
      std::vector<int> t, p;
      t.reserve(keep);
      p.reserve(keep);
      for (auto k : kept) {
        t.push_back(labels_true[k]);
        p.push_back(labels_pred[k]);
      }
      const auto table = contingency(t, p);
      const auto hc = homogeneity_completeness(table);
      out[i] = {fs[i], keep, ami(table, options.normalizer), hc.homogeneity, hc.completeness};
    }
  });
  return out;
}

}  // namespace trackmine
