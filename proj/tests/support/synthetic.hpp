// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

// Hand-built tensor dumps with known analytical answers.

#pragma once

#include "pii/corpus.hpp"
#include "pii/tensor_io.hpp"

#include <cstdint>

namespace pii::testing {

/// attn[L,H,T,T] with every entry 1/T. Token 0 is Cls when `with_cls`.
TensorDump uniform_attention_dump(std::size_t layers, std::size_t heads, std::size_t rows, std::size_t cols,
                                  bool with_cls);

/// Patch grid rows x cols without Cls; the last `text_patches` patches form the text region.
/// Diagonal is `text_diag` on the text region and `other_diag` elsewhere; off-diagonal mass
/// is spread evenly so rows sum to 1.
TensorDump planted_diagonal_dump(std::size_t layers, std::size_t heads, std::size_t rows, std::size_t cols,
                                 std::size_t text_patches, double text_diag, double other_diag);

/// hidden[T,D] with the given rows; image tokens first, then text tokens.
TensorDump decoder_dump(const std::vector<std::vector<float>>& image_rows,
                        const std::vector<std::vector<float>>& text_rows);

/// hidden[L,T,D] with random features and a Cls token at 0.
TensorDump vision_hidden_dump(std::size_t layers, std::size_t tokens, std::size_t dim, std::uint64_t seed);

/// Arbitrary well-formed dump for format round trips: random arrays, spans and attributes.
TensorDump random_dump(SplitMix64& rng);

double uniform01(SplitMix64& rng);

}  // namespace pii::testing
