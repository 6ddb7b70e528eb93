#include <benchmark/benchmark.h>

#include <random>

#include "satbench/backend.hpp"
#include "satbench/evaluator.hpp"
#include "satbench/prompt.hpp"

namespace {

satbench::Article make_article(int words) {
  satbench::Article a;
  a.id = "bench";
  for (int i = 0; i < words; ++i) a.text += "word ";
  return a;
}

void BM_RenderZeroShot(benchmark::State& state) {
  const satbench::TemplateSet templates = satbench::TemplateSet::bundled();
  const auto& tmpl = templates.get(satbench::Strategy::kZeroShot, satbench::Phase::kSingle,
                                   satbench::Language::kEnglish);
  const satbench::Article a = make_article(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(satbench::render(tmpl, a));
}
BENCHMARK(BM_RenderZeroShot)->Arg(100)->Arg(2500);

void BM_CacheKey(benchmark::State& state) {
  const satbench::TemplateSet templates = satbench::TemplateSet::bundled();
  const auto prompt = satbench::render(
      templates.get(satbench::Strategy::kZeroShot, satbench::Phase::kSingle,
                    satbench::Language::kEnglish),
      make_article(static_cast<int>(state.range(0))));
  const auto messages = satbench::to_messages(prompt, false);
  for (auto _ : state) {
    satbench::ChatRequest request("jais-13b-chat", messages, {});
    benchmark::DoNotOptimize(request.cache_key());
  }
}
BENCHMARK(BM_CacheKey)->Arg(100)->Arg(2500);

void BM_FitToContext(benchmark::State& state) {
  const satbench::TemplateSet templates = satbench::TemplateSet::bundled();
  const auto prompt = satbench::render(
      templates.get(satbench::Strategy::kZeroShot, satbench::Phase::kSingle,
                    satbench::Language::kEnglish),
      make_article(static_cast<int>(state.range(0))));
  const satbench::ChatRequest request("jais-13b-chat", satbench::to_messages(prompt, false), {});
  for (auto _ : state) benchmark::DoNotOptimize(satbench::fit_to_context(request));
}
BENCHMARK(BM_FitToContext)->Arg(100)->Arg(2500);

void BM_Accumulate(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::vector<std::pair<satbench::Label, satbench::Verdict>> events(4096);
  for (auto& e : events) {
    e = {rng() % 2 ? satbench::Label::kSatire : satbench::Label::kNonSatire,
         static_cast<satbench::Verdict>(rng() % 3)};
  }
  for (auto _ : state) {
    satbench::ConfusionMatrix cm;
    for (const auto& [gold, verdict] : events) cm.add(gold, verdict);
    benchmark::DoNotOptimize(cm);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * events.size()));
}
BENCHMARK(BM_Accumulate);

}  // namespace
