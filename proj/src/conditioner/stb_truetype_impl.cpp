// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

// Single translation unit for the rasterizer; compiled with -ffp-contract=off.
#define STB_TRUETYPE_IMPLEMENTATION
#include "stb_truetype.h"
