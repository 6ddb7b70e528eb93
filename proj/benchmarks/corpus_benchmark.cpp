#include <benchmark/benchmark.h>

#include <string>

#include "satbench/corpus.hpp"
#include "satbench/unicode.hpp"

namespace {

std::string article(bool arabic, int words) {
  std::string text;
  for (int i = 0; i < words; ++i) {
    text += arabic ? "الوزير" : "minister";
    text += i % 13 == 12 ? "\n" : " ";
  }
  return text;
}

void BM_WordCount(benchmark::State& state) {
  const std::string text = article(state.range(0) != 0, 2000);
  for (auto _ : state) benchmark::DoNotOptimize(satbench::word_count(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_WordCount)->Arg(0)->Arg(1);

void BM_Nfc(benchmark::State& state) {
  std::string text = article(state.range(0) != 0, 2000);
  text += "e\xCC\x81";
  for (auto _ : state) benchmark::DoNotOptimize(satbench::unicode::nfc(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Nfc)->Arg(0)->Arg(1);

}  // namespace
