/**
 * Copyright 2026 The hetmap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <gtest/gtest.h>

#include "hetmap/heuristics.hpp"
#include "hetmap/oracle.hpp"
#include "hetmap/schedule.hpp"
#include "support.hpp"

namespace hetmap {
namespace {

using testing::make_problem;
using testing::tiny_problem;
using testing::TinySpec;

// a -> b on two devices, 10 bytes across a 5 B/ms link.
Problem chain2(int L = 1) {
  return make_problem({{"a", 4, 1, 10}, {"b", 6, 10, 2}}, {{"a", "b"}},
                      {{"x", 100, {1, 2}}, {"y", 100, {1, 2}}}, {{"x", "y", 5.0}, {"y", "x", 5.0}},
                      {{"a", "x", 1, 3}, {"a", "x", 2, 5}, {"a", "y", 1, 6}, {"a", "y", 2, 8},
                       {"b", "x", 1, 4}, {"b", "x", 2, 7}, {"b", "y", 1, 1}, {"b", "y", 2, 2}},
                      L);
}

Schedule split_chain() {
  // a on x [0,3), transfer 2 ms, b on y [5,6)
  Schedule s;
  s.batches = {{0, 0, {1}, 0.0, 3.0}, {1, 1, {1}, 5.0, 6.0}};
  s.objective = 6.0;
  return s;
}

ErrorCode rejection(const Problem& p, const Schedule& s) {
  try {
    validate_schedule(p, s);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIo;  // stands for "accepted"
}

TEST(Validator, AcceptsHandBuiltSchedule) {
  Problem p = chain2();
  EXPECT_DOUBLE_EQ(validate_schedule(p, split_chain()), 6.0);
}

TEST(Validator, CommunicationDelayEnforced) {
  Problem p = chain2();
  Schedule s = split_chain();
  s.batches[1].start = 4.0;
  s.batches[1].end = 5.0;
  s.objective = 5.0;
  EXPECT_EQ(rejection(p, s), ErrorCode::kPrecedence);
}

TEST(Validator, RejectsOverlap) {
  Problem p = make_problem({{"a", 0, 0, 0}, {"b", 0, 0, 0}}, {}, {{"x", 100, {1}}}, {},
                           {{"a", "x", 1, 3}, {"b", "x", 1, 3}}, 1);
  Schedule s;
  s.batches = {{0, 0, {1}, 0.0, 3.0}, {1, 0, {1}, 2.0, 5.0}};
  s.objective = 5.0;
  EXPECT_EQ(rejection(p, s), ErrorCode::kOverlap);
  s.batches[1] = {1, 0, {1}, 3.0, 6.0};
  s.objective = 6.0;
  EXPECT_DOUBLE_EQ(validate_schedule(p, s), 6.0);
}

TEST(Validator, RejectsAssignmentErrors) {
  Problem p = chain2(2);
  Schedule s;
  s.input_count = 2;
  s.batches = {{0, 0, {1, 2}, 0.0, 5.0}, {1, 0, {1, 2}, 5.0, 12.0}};
  s.objective = 12.0;
  EXPECT_DOUBLE_EQ(validate_schedule(p, s), 12.0);

  Schedule missing = s;
  missing.batches[1].inputs = {1};
  missing.batches[1].end = 9.0;
  missing.objective = 9.0;
  EXPECT_EQ(rejection(p, missing), ErrorCode::kAssignment);

  Schedule twice = s;
  twice.batches.push_back({1, 1, {2}, 12.0, 13.0});
  twice.objective = 13.0;
  EXPECT_EQ(rejection(p, twice), ErrorCode::kAssignment);

  Schedule wrong_l = s;
  wrong_l.input_count = 1;
  EXPECT_EQ(rejection(p, wrong_l), ErrorCode::kAssignment);
}

TEST(Validator, RejectsUnsupportedBatch) {
  Problem p = make_problem({{"a", 0, 0, 0}}, {}, {{"x", 100, {1}}, {"y", 100, {1, 2}}}, {{"x", "y", 1.0}},
                           {{"a", "x", 1, 3}, {"a", "y", 1, 3}, {"a", "y", 2, 4}}, 2);
  Schedule s;
  s.input_count = 2;
  s.batches = {{0, 0, {1, 2}, 0.0, 4.0}};
  s.objective = 4.0;
  EXPECT_EQ(rejection(p, s), ErrorCode::kUnsupportedBatch);
  s.batches[0].device = 1;
  EXPECT_DOUBLE_EQ(validate_schedule(p, s), 4.0);
}

TEST(Validator, MemoryCountsWeightsOncePerDevice) {
  // two batches of a on x: wm once, (im+om) per input
  Problem p = make_problem({{"a", 50, 10, 10}}, {}, {{"x", 90, {1}}}, {}, {{"a", "x", 1, 1}}, 2);
  Schedule s;
  s.input_count = 2;
  s.batches = {{0, 0, {1}, 0.0, 1.0}, {0, 0, {2}, 1.0, 2.0}};
  s.objective = 2.0;
  EXPECT_DOUBLE_EQ(memory_usage(p, s)[0], 90.0);
  EXPECT_DOUBLE_EQ(validate_schedule(p, s), 2.0);
  Problem tight = make_problem({{"a", 50, 10, 10}}, {}, {{"x", 89, {1}}}, {}, {{"a", "x", 1, 1}}, 2);
  EXPECT_EQ(rejection(tight, s), ErrorCode::kMemory);
}

TEST(Validator, RejectsEndMismatchAndObjective) {
  Problem p = chain2();
  Schedule s = split_chain();
  s.batches[0].end = 2.5;
  EXPECT_EQ(rejection(p, s), ErrorCode::kObjectiveMismatch);
  s = split_chain();
  s.objective = 7.0;
  EXPECT_EQ(rejection(p, s), ErrorCode::kObjectiveMismatch);
  s = split_chain();
  s.batches[0].start = -1.0;
  s.batches[0].end = 2.0;
  EXPECT_EQ(rejection(p, s), ErrorCode::kInvalidValue);
}

TEST(Validator, RejectsPinViolation) {
  Problem p = chain2();
  p.set_pin(0, 1);
  EXPECT_EQ(rejection(p, split_chain()), ErrorCode::kAssignment);
}

TEST(Validator, PerturbationsOfOptimaRejected) {
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    TinySpec spec;
    spec.tasks = 5;
    spec.devices = seed % 2 ? 2 : 3;
    spec.inputs = seed % 3 == 0 ? 2 : 1;
    Problem p = tiny_problem(seed, spec);
    Schedule s = brute_force(p).schedule;
    ASSERT_NO_THROW(validate_schedule(p, s));
    for (const auto& m : testing::perturbations(p, s)) {
      EXPECT_NE(rejection(p, m), ErrorCode::kIo) << "seed " << seed;
      ++checked;
    }
  }
  EXPECT_GT(checked, 60);
}

TEST(ScheduleJson, RoundTrip) {
  Problem p = chain2();
  Schedule s = split_chain();
  s.quasi_optimal = true;
  Schedule back = schedule_from_json(p, schedule_to_json(p, s));
  EXPECT_EQ(back, s);
}

TEST(ScheduleJson, EndDerivedWhenAbsent) {
  Problem p = chain2();
  auto doc = schedule_to_json(p, split_chain());
  for (auto& b : doc["batches"]) b.erase("end_ms");
  EXPECT_EQ(schedule_from_json(p, doc), split_chain());
  doc["batches"][0]["batch_size"] = 2;
  EXPECT_THROW(schedule_from_json(p, doc), Error);
}

}  // namespace
}  // namespace hetmap
