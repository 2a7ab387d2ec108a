// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "tracekit/harness/bench.hpp"
#include "tracekit/harness/scenario.hpp"

namespace tracekit::harness {

// Reports carry no wall-clock values so that equal inputs give equal bytes;
// timings go to a separate file.
std::string scenario_text(const ScenarioResult& r);
std::string scenario_jsonl(const ScenarioResult& r);
std::string scenario_timing_jsonl(const ScenarioResult& r);

std::string bench_text(const BenchResult& r);
std::string bench_jsonl(const BenchResult& r);

// Writes through a temporary file and a rename.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace tracekit::harness
