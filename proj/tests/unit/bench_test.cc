// Copyright 2026 The diffmpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "diffmpc/bench.hpp"

namespace diffmpc {
namespace {

BenchConfig small_config() {
  BenchConfig c;
  c.mass_counts = {3};
  c.repetitions = 1;
  c.warmup = 0;
  return c;
}

TEST(Bench, SmallRunProducesOneAgreeingRow) {
  const std::vector<TimingRow> rows = run_bench(small_config());
  ASSERT_EQ(rows.size(), 1u);
  const TimingRow& r = rows[0];
  EXPECT_EQ(r.n, 3);
  EXPECT_TRUE(r.ok) << r.status;
  EXPECT_EQ(r.status, "ok");
  EXPECT_GT(r.finitedifferences, 0.0);
  EXPECT_GT(r.dense, 0.0);
  EXPECT_GT(r.structured, 0.0);
  EXPECT_LE(r.max_rel_err, 1e-4);
  EXPECT_LE(r.max_residual, 1e-6);
  EXPECT_EQ(r.repetitions, 1);
}

TEST(Bench, TimingsCsvHasFrozenHeader) {
  TimingRow ok;
  ok.n = 4;
  ok.ok = true;
  ok.finitedifferences = 3.0;
  ok.dense = 2.0;
  ok.structured = 1.0;
  TimingRow bad;
  bad.n = 5;
  bad.status = "solve failed";
  std::ostringstream os;
  write_timings_csv(os, {ok, bad});
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "n,finitedifferences,dense,structured");
  std::getline(is, line);
  EXPECT_EQ(line.substr(0, 2), "4,");
  std::getline(is, line);
  EXPECT_NE(line.find("nan"), std::string::npos);
}

TEST(Bench, DetailCsvHasOneRowPerSize) {
  TimingRow r;
  r.n = 3;
  std::ostringstream os;
  write_detail_csv(os, {r, r});
  int lines = 0;
  std::istringstream is(os.str());
  for (std::string l; std::getline(is, l);) ++lines;
  EXPECT_EQ(lines, 3);
}

TEST(Bench, RelativeErrorScalesByLargerOperand) {
  Matrix a(1, 2), b(1, 2);
  a << 1.0, 2.0;
  b << 1.0, 2.2;
  EXPECT_NEAR(relative_error(a, b), 0.2 / 2.2, 1e-15);
  EXPECT_EQ(relative_error(a, a), 0.0);
  EXPECT_THROW(relative_error(a, Matrix(2, 1)), DimensionError);
}

TEST(BenchConfig, RejectsInvalidValues) {
  BenchConfig c = small_config();
  c.repetitions = 0;
  EXPECT_THROW(c.check(), PreconditionError);
  c = small_config();
  c.mass_counts = {7};
  EXPECT_THROW(c.check(), PreconditionError);
  c = small_config();
  c.fd_step = 0.0;
  EXPECT_THROW(c.check(), PreconditionError);
}

}  // namespace
}  // namespace diffmpc
