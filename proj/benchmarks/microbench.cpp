#include <benchmark/benchmark.h>

#include "chameleon/analysis.hpp"
#include "chameleon/model.hpp"
#include "chameleon/prng.hpp"
#include "chameleon/quadrature.hpp"
#include "chameleon/station.hpp"
#include "chameleon/wire.hpp"

using namespace chameleon;
using model::Angle;

namespace {

void BM_HiddenStateStream(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(prng::hidden_state_stream(42, n));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HiddenStateStream)->Arg(10000)->Arg(100000);

void BM_RunStationFixed(benchmark::State& state) {
    const station::AnglePolicy policy = station::FixedPolicy{Angle(kPi / 4)};
    const auto n = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(station::run_station(1, 42, n, policy));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunStationFixed)->Arg(10000)->Arg(40000);

void BM_RunStationSeededRandom(benchmark::State& state) {
    const station::AnglePolicy policy =
        station::SeededRandomPolicy{{Angle(0), Angle(kPi / 3), Angle(2 * kPi / 3)}, 0x1001};
    const auto n = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(station::run_station(1, 42, n, policy));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunStationSeededRandom)->Arg(10000);

void BM_CorrelationQuadrature(benchmark::State& state) {
    const Angle a(0.7), b(2.1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(quadrature::correlation_quadrature(a, b, 1e-8));
    }
}
BENCHMARK(BM_CorrelationQuadrature);

void BM_ChangeOfVariables(benchmark::State& state) {
    const Angle a(0.7), b(2.1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(quadrature::correlation_change_of_variables(a, b, 1e-6));
    }
}
BENCHMARK(BM_ChangeOfVariables);

void BM_InvertTransport(benchmark::State& state) {
    const Angle a(0.7);
    double y = 0.0;
    for (auto _ : state) {
        y += kSqrtTwoPi / 512;
        if (y > kSqrtTwoPi) {
            y = 0.0;
        }
        benchmark::DoNotOptimize(model::invert_transport_station1(a, y));
    }
}
BENCHMARK(BM_InvertTransport);

void BM_EstimateCorrelation(benchmark::State& state) {
    const auto n = static_cast<std::uint64_t>(state.range(0));
    const auto r1 = station::run_station(1, 42, n, station::AnglePolicy{station::FixedPolicy{Angle(0)}});
    const auto r2 =
        station::run_station(2, 42, n, station::AnglePolicy{station::FixedPolicy{Angle(kPi / 4)}});
    for (auto _ : state) {
        benchmark::DoNotOptimize(analysis::estimate_correlation(r1, r2, nullptr));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EstimateCorrelation)->Arg(10000)->Arg(40000);

void BM_RecordsChunkRoundTrip(benchmark::State& state) {
    protocol::RecordsChunk chunk;
    const auto rs = station::run_station(
        1, 42, protocol::kRecordsChunkSize, station::AnglePolicy{station::FixedPolicy{Angle(1)}});
    chunk.records = rs.records;
    chunk.last = true;
    for (auto _ : state) {
        const std::string body = protocol::encode_message(chunk);
        benchmark::DoNotOptimize(protocol::decode_message(body));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(chunk.records.size()));
}
BENCHMARK(BM_RecordsChunkRoundTrip);

}  // namespace

BENCHMARK_MAIN();
