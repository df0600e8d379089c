// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace dualsplat {

// Worker count: explicit override if set, else GS_THREADS (0 = auto).
std::size_t worker_count();

// Overrides GS_THREADS for the current process. 0 restores the default.
void set_worker_count(std::size_t n);

// Runs body(i) for i in [0, n). Iterations must write disjoint memory.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace dualsplat
