#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "satbench/parser.hpp"

namespace {

const std::vector<std::string>& responses() {
  static const std::vector<std::string> kResponses = {
      "1",
      "٠",
      "Answer: the article is satirical, so 1.",
      "This article is not satirical; it reports a council vote in plain terms.",
      "هذا المقال ليس ساخرا بل هو خبر جاد عن الاقتصاد.",
      "I cannot determine this.",
  };
  return kResponses;
}

void BM_ParseLabel(benchmark::State& state) {
  const std::string& text = responses()[static_cast<std::size_t>(state.range(0))];
  for (auto _ : state) benchmark::DoNotOptimize(satbench::parse_label(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseLabel)->DenseRange(0, 5);

void BM_ParseLongAnalysis(benchmark::State& state) {
  std::string text;
  for (int i = 0; i < state.range(0); ++i) text += "the tone of the piece remains measured and ";
  text += "so the answer is 0";
  for (auto _ : state) benchmark::DoNotOptimize(satbench::parse_label(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseLongAnalysis)->Range(8, 512);

}  // namespace
