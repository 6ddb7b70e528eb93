#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "satbench/corpus.hpp"
#include "satbench/parser.hpp"

namespace satbench {

/// How an unparseable response enters the confusion matrix.
enum class UnparseablePolicy {
  kCountAsWrong,     // scored as the opposite of the gold label
  kExclude,          // left out of every metric denominator
  kCountAsNegative,  // scored as a non-satire prediction
};

std::string_view to_string(UnparseablePolicy policy);
std::optional<UnparseablePolicy> parse_policy(std::string_view text);

/// Binary confusion matrix with satire as the positive class.
///
/// n_unparseable counts every unparseable prediction. Under kCountAsWrong and
/// kCountAsNegative those predictions are also routed into tp/fp/fn/tn; under
/// kExclude they appear only in n_unparseable.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(UnparseablePolicy policy = UnparseablePolicy::kCountAsWrong)
      : policy_(policy) {}

  static ConfusionMatrix from_counts(std::size_t tp, std::size_t fp, std::size_t fn,
                                     std::size_t tn, std::size_t n_unparseable = 0,
                                     UnparseablePolicy policy = UnparseablePolicy::kCountAsWrong);

  void add(Label gold, Verdict predicted);

  /// Field-wise sum. Throws EvalError when policies differ.
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend ConfusionMatrix operator+(ConfusionMatrix a, const ConfusionMatrix& b) {
    a += b;
    return a;
  }
  bool operator==(const ConfusionMatrix&) const = default;

  std::size_t tp() const noexcept { return tp_; }
  std::size_t fp() const noexcept { return fp_; }
  std::size_t fn() const noexcept { return fn_; }
  std::size_t tn() const noexcept { return tn_; }
  std::size_t n_unparseable() const noexcept { return n_unparseable_; }
  UnparseablePolicy policy() const noexcept { return policy_; }

  /// tp + fp + fn + tn: the denominator of accuracy.
  std::size_t scored() const noexcept { return tp_ + fp_ + fn_ + tn_; }
  /// Every prediction that was accumulated.
  std::size_t records() const noexcept;

 private:
  UnparseablePolicy policy_;
  std::size_t tp_ = 0;
  std::size_t fp_ = 0;
  std::size_t fn_ = 0;
  std::size_t tn_ = 0;
  std::size_t n_unparseable_ = 0;
};

/// Throws EvalError if `policy` differs from the matrix policy.
ConfusionMatrix accumulate(ConfusionMatrix cm, Label gold, const ParsedPrediction& predicted,
                           UnparseablePolicy policy);

/// Percentages in [0, 100], unrounded. Use round1() for display.
struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double parse_rate = 0.0;
  UnparseablePolicy policy = UnparseablePolicy::kCountAsWrong;
};

/// Zero denominators yield 0 for precision, recall and F1.
/// Throws EvalError when nothing was scored.
MetricsReport metrics(const ConfusionMatrix& cm);

/// Harmonic mean on any common scale; 0 when precision + recall == 0.
double f1_score(double precision, double recall);

/// Round half away from zero to one decimal.
double round1(double value);

struct ConsistencyVerdict {
  bool consistent = false;
  double recomputed_f1 = 0.0;
  double deviation = 0.0;
};

/// Slack for one-decimal rounding of the published precision and recall.
inline constexpr double kPublishedF1Tolerance = 0.15;

/// Recomputes F1 from a published row's precision and recall.
/// Throws EvalError when any value lies outside [0, 100].
ConsistencyVerdict validate_published_row(double accuracy, double precision, double recall,
                                          double f1);

struct PublishedRow {
  std::size_t line = 0;
  std::string model;
  std::string prompt;
  std::string dataset;
  std::string approach;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Reads a CSV with header model,prompt,dataset,approach,accuracy,precision,recall,f1.
/// Only the four metric columns are required. Throws EvalError.
std::vector<PublishedRow> read_published_rows(std::istream& in);

}  // namespace satbench
