#include <benchmark/benchmark.h>

#include <random>

#include "syncmatch/encoders.hpp"
#include "syncmatch/objectives.hpp"
#include "syncmatch/sampling.hpp"
#include "syncmatch/synthdata.hpp"

using namespace syncmatch;
using ndgrad::Graph;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

const synth::Track& track() {
  static const synth::Track t = synth::gen_track(synth::GenConfig{}, 1);
  return t;
}

}  // namespace

static void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto x = noise(c * 32 * 32, 1), k = noise(c * c * 9, 2), b = noise(c, 3);
  for (auto _ : state) {
    Graph g;
    ndgrad::Parameter kp("k", {c, c, 3, 3});
    std::copy(k.begin(), k.end(), kp.values().begin());
    const auto in = g.input({c, 32, 32}, x);
    const auto out = g.conv2d(in, g.param(kp), g.input({c}, b), {1, 1, 1, 1});
    g.backward(g.sum(out));
    benchmark::DoNotOptimize(kp.grad().data());
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_MfccWindow(benchmark::State& state) {
  const dsp::MfccExtractor mfcc(16000);
  const auto seg = audio_segment(track().waveform, 0);
  for (auto _ : state) benchmark::DoNotOptimize(mfcc(seg));
}
BENCHMARK(BM_MfccWindow)->Unit(benchmark::kMicrosecond);

static void BM_EmbedVisual(benchmark::State& state) {
  const auto enc = Encoders::build({}, 1);
  const auto stack = stack_frames(track().video, 0);
  for (auto _ : state) benchmark::DoNotOptimize(enc.embed_visual(stack));
}
BENCHMARK(BM_EmbedVisual)->Unit(benchmark::kMillisecond);

static void BM_EmbedAudio(benchmark::State& state) {
  const auto enc = Encoders::build({}, 1);
  const auto m = dsp::MfccExtractor(16000)(audio_segment(track().waveform, 0));
  for (auto _ : state) benchmark::DoNotOptimize(enc.embed_audio(m));
}
BENCHMARK(BM_EmbedAudio)->Unit(benchmark::kMicrosecond);

static void BM_MultiwayStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto enc = Encoders::build({}, 1);
  std::mt19937_64 rng(2);
  const auto ex = materialize(sample_multiway(TrackView::of(track()), n, rng), dsp::MfccExtractor(16000));
  for (auto _ : state) {
    Graph g;
    const auto b = enc.bind(g, GradMode::kTrainable, GradMode::kTrainable);
    const auto v = enc.visual_forward(g, b, ex.video);
    std::vector<ndgrad::Var> a;
    for (const auto& m : ex.audio_candidates) a.push_back(enc.audio_forward(g, b, m));
    g.backward(multiway_loss(g, v, a, ex.target));
    for (auto* p : enc.parameters()) p->zero_grad();
  }
}
BENCHMARK(BM_MultiwayStep)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
