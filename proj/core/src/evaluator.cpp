#include "satbench/evaluator.hpp"

#include <charconv>
#include <cmath>

#include "satbench/csv.hpp"
#include "satbench/error.hpp"
#include "satbench/unicode.hpp"

namespace satbench {

std::string_view to_string(UnparseablePolicy policy) {
  switch (policy) {
    case UnparseablePolicy::kCountAsWrong:
      return "count-as-wrong";
    case UnparseablePolicy::kExclude:
      return "exclude";
    case UnparseablePolicy::kCountAsNegative:
      return "count-as-negative";
  }
  return "count-as-wrong";
}

std::optional<UnparseablePolicy> parse_policy(std::string_view text) {
  std::string lower = unicode::ascii_lower(text);
  for (char& c : lower) {
    if (c == '_') c = '-';
  }
  if (lower == "count-as-wrong" || lower == "wrong") return UnparseablePolicy::kCountAsWrong;
  if (lower == "exclude") return UnparseablePolicy::kExclude;
  if (lower == "count-as-negative" || lower == "negative") {
    return UnparseablePolicy::kCountAsNegative;
  }
  return std::nullopt;
}

ConfusionMatrix ConfusionMatrix::from_counts(std::size_t tp, std::size_t fp, std::size_t fn,
                                             std::size_t tn, std::size_t n_unparseable,
                                             UnparseablePolicy policy) {
  ConfusionMatrix cm(policy);
  cm.tp_ = tp;
  cm.fp_ = fp;
  cm.fn_ = fn;
  cm.tn_ = tn;
  cm.n_unparseable_ = n_unparseable;
  return cm;
}

void ConfusionMatrix::add(Label gold, Verdict predicted) {
  const bool satire = gold == Label::kSatire;
  if (predicted == Verdict::kUnparseable) {
    ++n_unparseable_;
    switch (policy_) {
      case UnparseablePolicy::kExclude:
        return;
      case UnparseablePolicy::kCountAsWrong:
        predicted = satire ? Verdict::kNonSatire : Verdict::kSatire;
        break;
      case UnparseablePolicy::kCountAsNegative:
        predicted = Verdict::kNonSatire;
        break;
    }
  }
  const bool positive = predicted == Verdict::kSatire;
  if (positive && satire) {
    ++tp_;
  } else if (positive) {
    ++fp_;
  } else if (satire) {
    ++fn_;
  } else {
    ++tn_;
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (policy_ != other.policy_) {
    throw EvalError("cannot merge confusion matrices with different unparseable policies");
  }
  tp_ += other.tp_;
  fp_ += other.fp_;
  fn_ += other.fn_;
  tn_ += other.tn_;
  n_unparseable_ += other.n_unparseable_;
  return *this;
}

std::size_t ConfusionMatrix::records() const noexcept {
  return scored() + (policy_ == UnparseablePolicy::kExclude ? n_unparseable_ : 0);
}

ConfusionMatrix accumulate(ConfusionMatrix cm, Label gold, const ParsedPrediction& predicted,
                           UnparseablePolicy policy) {
  if (policy != cm.policy()) {
    throw EvalError("accumulate policy " + std::string(to_string(policy)) +
                    " differs from matrix policy " + std::string(to_string(cm.policy())));
  }
  cm.add(gold, predicted.label);
  return cm;
}

double f1_score(double precision, double recall) {
  const double sum = precision + recall;
  return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

double round1(double value) { return std::round(value * 10.0) / 10.0; }

MetricsReport metrics(const ConfusionMatrix& cm) {
  if (cm.scored() == 0) throw EvalError("confusion matrix has nothing scored");
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  const double precision = ratio(cm.tp(), cm.tp() + cm.fp());
  const double recall = ratio(cm.tp(), cm.tp() + cm.fn());
  MetricsReport report;
  report.accuracy = 100.0 * ratio(cm.tp() + cm.tn(), cm.scored());
  report.precision = 100.0 * precision;
  report.recall = 100.0 * recall;
  report.f1 = 100.0 * f1_score(precision, recall);
  report.parse_rate = 100.0 * ratio(cm.records() - cm.n_unparseable(), cm.records());
  report.policy = cm.policy();
  return report;
}

ConsistencyVerdict validate_published_row(double accuracy, double precision, double recall,
                                          double f1) {
  for (double value : {accuracy, precision, recall, f1}) {
    if (!(value >= 0.0 && value <= 100.0)) {
      throw EvalError("published metric out of range [0, 100]: " + std::to_string(value));
    }
  }
  ConsistencyVerdict verdict;
  verdict.recomputed_f1 = f1_score(precision, recall);
  verdict.deviation = std::abs(verdict.recomputed_f1 - f1);
  // 1e-9 absorbs binary rounding at the boundary.
  verdict.consistent = verdict.deviation <= kPublishedF1Tolerance + 1e-9;
  return verdict;
}

namespace {

double parse_metric(const std::string& field, std::size_t line, std::string_view column) {
  const std::string trimmed = unicode::trim(field);
  double value = 0.0;
  const char* begin = trimmed.data();
  const char* end = begin + trimmed.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (trimmed.empty() || ec != std::errc() || ptr != end) {
    throw EvalError("line " + std::to_string(line) + ": column " + std::string(column) +
                    " is not a number: '" + field + "'");
  }
  return value;
}

}  // namespace

std::vector<PublishedRow> read_published_rows(std::istream& in) {
  std::vector<csv::Record> records;
  try {
    records = csv::read_all(in);
  } catch (const CorpusError& e) {
    throw EvalError(e.what());
  }
  if (records.empty()) throw EvalError("published table is empty");

  const std::vector<std::string>& header = records.front().fields;
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (unicode::ascii_lower(unicode::trim(header[i])) == name) return i;
    }
    return std::nullopt;
  };
  const auto accuracy = column("accuracy");
  const auto precision = column("precision");
  const auto recall = column("recall");
  const auto f1 = column("f1");
  if (!accuracy || !precision || !recall || !f1) {
    throw EvalError("published table header needs accuracy, precision, recall and f1 columns");
  }
  const auto model = column("model");
  const auto prompt = column("prompt");
  const auto dataset = column("dataset");
  const auto approach = column("approach");

  std::vector<PublishedRow> rows;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const csv::Record& record = records[r];
    if (record.fields.size() == 1 && unicode::trim(record.fields.front()).empty()) continue;
    if (record.fields.size() != header.size()) {
      throw EvalError("line " + std::to_string(record.line) + ": expected " +
                      std::to_string(header.size()) + " columns");
    }
    auto text = [&](std::optional<std::size_t> col) {
      return col ? unicode::trim(record.fields[*col]) : std::string();
    };
    PublishedRow row;
    row.line = record.line;
    row.model = text(model);
    row.prompt = text(prompt);
    row.dataset = text(dataset);
    row.approach = text(approach);
    row.accuracy = parse_metric(record.fields[*accuracy], record.line, "accuracy");
    row.precision = parse_metric(record.fields[*precision], record.line, "precision");
    row.recall = parse_metric(record.fields[*recall], record.line, "recall");
    row.f1 = parse_metric(record.fields[*f1], record.line, "f1");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace satbench
