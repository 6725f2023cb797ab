#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>

#include "nonherm/parallel.hpp"

using namespace nonherm;

TEST(ParallelForStatic, CoversEveryTaskExactlyOnce) {
  for (int workers : {1, 2, 3, 8, 50}) {
    std::vector<int> hits(37, 0);
    parallel_for_static(hits.size(), workers, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) ++hits[i];
    });
    for (int h : hits) EXPECT_EQ(h, 1) << workers;
  }
}

TEST(ParallelForStatic, ChunksAreContiguousAndBalanced) {
  std::vector<std::pair<std::size_t, std::size_t>> chunks(4);
  std::atomic<int> next{0};
  parallel_for_static(10, 4, [&](std::size_t b, std::size_t e) { chunks[static_cast<std::size_t>(next++)] = {b, e}; });
  std::sort(chunks.begin(), chunks.end());
  const std::vector<std::pair<std::size_t, std::size_t>> want{{0, 3}, {3, 6}, {6, 8}, {8, 10}};
  EXPECT_EQ(chunks, want);
}

TEST(ParallelForStatic, RethrowsLowestChunkError) {
  try {
    parallel_for_static(8, 4, [](std::size_t b, std::size_t) {
      if (b >= 2) throw std::runtime_error("chunk " + std::to_string(b));
    });
    FAIL() << "expected exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "chunk 2");
  }
}

TEST(ParallelForStatic, EmptyRangeDoesNothing) {
  bool called = false;
  parallel_for_static(0, 4, [&](std::size_t, std::size_t) { called = true; });
  EXPECT_FALSE(called);
}

TEST(WorkersFromEnv, ReadsVariableWithFallback) {
  ::setenv("NONHERM_WORKERS", "5", 1);
  EXPECT_EQ(workers_from_env(1), 5);
  ::setenv("NONHERM_WORKERS", "zero", 1);
  EXPECT_EQ(workers_from_env(2), 2);
  ::setenv("NONHERM_WORKERS", "0", 1);
  EXPECT_EQ(workers_from_env(3), 3);
  ::unsetenv("NONHERM_WORKERS");
  EXPECT_EQ(workers_from_env(4), 4);
}
