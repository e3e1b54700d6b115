#include <benchmark/benchmark.h>

#include "cx/contrastive.hpp"
#include "cx/ranking.hpp"
#include "cx/rng.hpp"
#include "cx/staining.hpp"

namespace {

cx::LinearHead random_head(std::size_t k, std::size_t d, cx::Rng& rng) {
  cx::Mat w(k, d);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < d; ++j) w(i, j) = rng.normal();
  std::vector<std::string> names;
  for (std::size_t i = 0; i < k; ++i) names.push_back("c" + std::to_string(i));
  return {w, cx::Vec(k, 0.0), cx::EventSpace(names)};
}

void BM_ContrastiveProjection(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  cx::Rng rng(1, 0);
  const auto head = random_head(3, d, rng);
  const auto dir = cx::direction(head, {"c0", "c1"});
  cx::Vec h(d);
  for (auto& x : h) x = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(cx::contrast_transform(h, dir));
}
BENCHMARK(BM_ContrastiveProjection)->Arg(16)->Arg(128)->Arg(1024);

struct StainedModel {
  cx::CorpusSplit data;
  cx::BowEncoder encoder;
  cx::LinearHead head;
};

const StainedModel& stained_model() {
  static const StainedModel model = [] {
    cx::TopicCorpusConfig tc;
    const auto scheme = cx::StainScheme::nli("entailment");
    auto data = cx::stain_dataset(cx::make_topic_corpus(tc, 0), scheme, 0.1, 0);
    auto encoder = cx::BowEncoder::build(data.train, {});
    cx::StainConfig sc;
    auto head = cx::train_logistic(data.train, encoder, sc.train);
    return StainedModel{std::move(data), std::move(encoder), std::move(head)};
  }();
  return model;
}

void BM_RankFactors(benchmark::State& state) {
  const auto& m = stained_model();
  const auto& ex = m.data.heldout.front();
  const auto fact = cx::predict(m.head, m.encoder.encode(ex)).fact;
  const std::string foil = m.head.event_space.name((fact + 1) % m.head.event_space.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(cx::rank_factors(m.head, m.encoder, ex, foil, cx::CandidateSpace::Both));
  }
}
BENCHMARK(BM_RankFactors);

void BM_TrainLogistic(benchmark::State& state) {
  const auto& m = stained_model();
  cx::TrainConfig tc;
  tc.epochs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(cx::train_logistic(m.data.train, m.encoder, tc));
}
BENCHMARK(BM_TrainLogistic)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
