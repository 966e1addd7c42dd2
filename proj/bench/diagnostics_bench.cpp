// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

// Serial reference kernels against their OpenMP versions.

#include "pii/corpus.hpp"
#include "pii/kernels.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

using namespace pii::kernels;

// Token counts of a ViT-L/14 encoder at 224 px (257) and 336 px (577).
std::vector<float> make_attention(std::size_t layers, std::size_t heads, std::size_t tokens) {
    pii::SplitMix64 rng(1);
    std::vector<float> a(layers * heads * tokens * tokens);
    for (auto& x : a) x = static_cast<float>(rng.next() >> 40) / static_cast<float>(1u << 24) / tokens * 2;
    return a;
}

std::vector<float> make_hidden(std::size_t tokens, std::size_t dim, std::uint64_t seed) {
    pii::SplitMix64 rng(seed);
    std::vector<float> h(tokens * dim);
    for (auto& x : h) x = static_cast<float>(rng.next() >> 40) / static_cast<float>(1u << 24) - 0.5f;
    return h;
}

template <auto Kernel>
void BM_Received(benchmark::State& state) {
    const auto tokens = static_cast<std::size_t>(state.range(0));
    const auto data = make_attention(2, 16, tokens);
    const AttentionView v{data, 2, 16, tokens};
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(v, 1));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * 16 * tokens * tokens * sizeof(float)));
}

template <auto Kernel>
void BM_RowSums(benchmark::State& state) {
    const auto tokens = static_cast<std::size_t>(state.range(0));
    const auto data = make_attention(2, 16, tokens);
    const AttentionView v{data, 2, 16, tokens};
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(v, 1e-4));
}

template <auto Kernel>
void BM_RowCosines(benchmark::State& state) {
    const auto tokens = static_cast<std::size_t>(state.range(0));
    const auto a = make_hidden(tokens, 1024, 2), b = make_hidden(tokens, 1024, 3);
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(a, b, tokens, 1024));
}

template <auto Kernel>
void BM_PairwiseDistance(benchmark::State& state) {
    const auto tokens = static_cast<std::size_t>(state.range(0));
    const auto h = make_hidden(2 * tokens, 1024, 4);
    std::vector<std::size_t> img(tokens), txt(tokens);
    for (std::size_t i = 0; i < tokens; ++i) {
        img[i] = i;
        txt[i] = tokens + i;
    }
    for (auto _ : state) benchmark::DoNotOptimize(Kernel(h, 1024, img, txt));
}

BENCHMARK(BM_Received<serial::received_attention>)->Name("received/serial")->Arg(257)->Arg(577);
BENCHMARK(BM_Received<parallel::received_attention>)->Name("received/parallel")->Arg(257)->Arg(577);
BENCHMARK(BM_RowSums<serial::row_sum_violations>)->Name("row_sums/serial")->Arg(257)->Arg(577);
BENCHMARK(BM_RowSums<parallel::row_sum_violations>)->Name("row_sums/parallel")->Arg(257)->Arg(577);
BENCHMARK(BM_RowCosines<serial::row_cosines>)->Name("row_cosines/serial")->Arg(577);
BENCHMARK(BM_RowCosines<parallel::row_cosines>)->Name("row_cosines/parallel")->Arg(577);
BENCHMARK(BM_PairwiseDistance<serial::mean_pairwise_cosine_distance>)->Name("gap/serial")->Arg(256);
BENCHMARK(BM_PairwiseDistance<parallel::mean_pairwise_cosine_distance>)->Name("gap/parallel")->Arg(256);

}  // namespace

BENCHMARK_MAIN();
