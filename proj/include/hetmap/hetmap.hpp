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
#pragma once
#pragma once

#include "hetmap/error.hpp"
#include "hetmap/graph.hpp"
#include "hetmap/hardware.hpp"
#include "hetmap/problem.hpp"
#include "hetmap/schedule.hpp"
#include "hetmap/timing.hpp"
#include "hetmap/milp_model.hpp"
#include "hetmap/formulation.hpp"
#include "hetmap/lp.hpp"
#include "hetmap/solver.hpp"
#include "hetmap/oracle.hpp"
#include "hetmap/splitting.hpp"
#include "hetmap/bounds.hpp"
#include "hetmap/rng.hpp"
#include "hetmap/heuristics.hpp"
#include "hetmap/benchgen.hpp"
#include "hetmap/gantt.hpp"
#include "hetmap/bench.hpp"
