#include <benchmark/benchmark.h>

#include "visattn/intervention.hpp"
#include "visattn/referee.hpp"
#include "visattn/scene.hpp"
#include "visattn/transformer.hpp"

using namespace visattn;

namespace {

ModelConfig transformer_config(std::uint32_t side) {
  ModelConfig c;
  c.patch_side = side;
  c.vocab_size = 44;
  c.max_seq = side * side + 64;
  return c;
}

struct Fixture {
  std::shared_ptr<const DecoderModel> model;
  TokenSequence seq;
};

Fixture transformer_fixture(std::uint32_t side) {
  const auto cfg = transformer_config(side);
  const auto set = generate_controlled_set(1, ControlledMode::A, 3, side);
  auto w = std::make_shared<const WeightSet>(seeded_weights(cfg, 5));
  return {std::make_shared<const TransformerModel>(w), encode_item(set.items[0], cfg)};
}

Fixture referee_fixture() {
  ModelConfig cfg;
  cfg.layers = 4;
  cfg.heads = 4;
  cfg.model_dim = 16;
  cfg.head_dim = 4;
  cfg.vocab_size = 44;
  cfg.patch_side = 24;
  cfg.max_seq = 24 * 24 + 64;
  const auto set = generate_controlled_set(1, ControlledMode::A, 3, 24);
  const auto& item = set.items[0];
  auto m = std::make_shared<const RefereeModel>(
      cfg, *item.scene, item.reversed,
      std::vector<Relation>{Relation::left, Relation::right, Relation::on, Relation::under});
  return {m, encode_item(item, cfg)};
}

InterventionSpec spec_for(int method) {
  InterventionSpec s;
  switch (method) {
    case 1: s.method = Method::scaling; s.alpha = 0.8; break;
    case 2:
      s.method = Method::adaptive;
      s.alpha1 = 0.5;
      s.alpha2 = 2.0;
      s.beta = 0.45;
      break;
    case 3: s.method = Method::additive; s.constant = 1.0; break;
    default: break;
  }
  return s;
}

void BM_TransformerForward(benchmark::State& state) {
  const auto f = transformer_fixture(static_cast<std::uint32_t>(state.range(0)));
  ForwardOptions o;
  o.capture = TraceCapture::none;
  for (auto _ : state) benchmark::DoNotOptimize(f.model->forward(f.seq, scaling_hook(0.8), o));
}
BENCHMARK(BM_TransformerForward)->Arg(8)->Arg(16)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_TransformerDecode(benchmark::State& state) {
  const auto f = transformer_fixture(8);
  const auto spec = spec_for(static_cast<int>(state.range(0)));
  DecodeOptions o;
  o.forward.capture = TraceCapture::none;
  for (auto _ : state) benchmark::DoNotOptimize(run_method(*f.model, f.seq, spec, o));
}
BENCHMARK(BM_TransformerDecode)->DenseRange(0, 3)->ArgName("method");

void BM_RefereeDecode(benchmark::State& state) {
  const auto f = referee_fixture();
  const auto spec = spec_for(static_cast<int>(state.range(0)));
  DecodeOptions o;
  o.forward.capture = TraceCapture::none;
  for (auto _ : state) benchmark::DoNotOptimize(run_method(*f.model, f.seq, spec, o));
}
BENCHMARK(BM_RefereeDecode)->DenseRange(0, 3)->ArgName("method");

}  // namespace

BENCHMARK_MAIN();
