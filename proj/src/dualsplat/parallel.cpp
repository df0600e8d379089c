// Copyright 2026 The DualSplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "dualsplat/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace dualsplat {

namespace {
std::atomic<std::size_t> g_override{0};

std::size_t env_threads() {
  const char* env = std::getenv("GS_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  try {
    return static_cast<std::size_t>(std::stoul(env));
  } catch (...) {
    return 0;
  }
}
}  // namespace

std::size_t worker_count() {
  std::size_t n = g_override.load();
  if (n == 0) n = env_threads();
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

void set_worker_count(std::size_t n) { g_override.store(n); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
}

}  // namespace dualsplat
