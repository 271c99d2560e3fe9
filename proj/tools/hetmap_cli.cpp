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
// hetmap command line: gen, schedule, oracle, lowerbound, export-lp,
// validate, bench, gantt. Exit 0 ok, 1 infeasible or invalid schedule,
// 2 usage or input error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hetmap/hetmap.hpp"

namespace fs = std::filesystem;
using namespace hetmap;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// write to a sibling temp file, then rename
void write_file(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
    out << text;
  }
  fs::rename(tmp, target);
}

struct InstanceArgs {
  std::string graph;
  std::string hardware;
  std::string latency;
  int inputs = 1;

  void attach(CLI::App* app) {
    app->add_option("--graph", graph, "graph JSON")->required();
    app->add_option("--hardware", hardware, "hardware JSON")->required();
    app->add_option("--latency", latency, "latency JSON")->required();
    app->add_option("--inputs,-L", inputs, "number of inputs L")->check(CLI::PositiveNumber);
  }

  Problem load() const {
    return Problem(load_graph(read_file(graph)), load_hardware(read_file(hardware)), load_latency(read_file(latency)),
                   inputs);
  }
};

struct SolveArgs {
  double timeout = 60.0;
  std::string backend;
  std::string objective = "latency";
  std::string symmetry = "none";
  std::string groups;
  int channels = 1;
  std::uint64_t seed = 1;
  long budget = 2000;

  void attach(CLI::App* app) {
    app->add_option("--timeout", timeout, "solver time limit in seconds")->check(CLI::PositiveNumber);
    app->add_option("--backend", backend, "external MILP backend executable (default: $HETMAP_MILP_BACKEND)");
    app->add_option("--objective", objective)->check(CLI::IsMember({"latency", "throughput"}));
    app->add_option("--symmetry", symmetry)->check(CLI::IsMember({"none", "batch", "task", "time"}));
    app->add_option("--groups", groups, "symmetry groups JSON (default: detect identical devices)");
    app->add_option("--channels", channels, "cut budget for split / lowerbound")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed);
    app->add_option("--budget", budget, "fitness evaluations for sa / ea");
  }

  SolverOptions solver() const {
    SolverOptions o;
    o.timeout_s = timeout;
    o.backend = backend.empty() ? backend_from_env() : backend;
    return o;
  }

  AlgoOptions algo(const Problem& p) const {
    AlgoOptions a;
    auto s = solver();
    a.timeout_s = s.timeout_s;
    a.backend = s.backend;
    a.channels = channels;
    a.seed = seed;
    a.budget = budget;
    a.objective = objective == "throughput" ? Objective::kThroughput : Objective::kLatency;
    if (symmetry == "batch") a.symmetry = SymmetryCriterion::kBatch;
    if (symmetry == "task") a.symmetry = SymmetryCriterion::kTask;
    if (symmetry == "time") a.symmetry = SymmetryCriterion::kTime;
    if (a.symmetry != SymmetryCriterion::kNone) a.groups = load_groups(p);
    return a;
  }

  std::vector<DeviceBlocks> load_groups(const Problem& p) const {
    std::vector<DeviceBlocks> out;
    if (groups.empty()) {
      // classes of pairwise swappable single devices
      std::vector<int> cls(static_cast<size_t>(p.device_count()), -1);
      std::vector<std::vector<int>> plain;
      for (int u = 0; u < p.device_count(); ++u) {
        if (cls[static_cast<size_t>(u)] >= 0) continue;
        std::vector<int> c{u};
        for (int v = u + 1; v < p.device_count(); ++v) {
          if (cls[static_cast<size_t>(v)] < 0 && blocks_interchangeable(p, {u}, {v})) {
            cls[static_cast<size_t>(v)] = u;
            c.push_back(v);
          }
        }
        if (c.size() > 1) plain.push_back(c);
      }
      return device_groups(plain);
    }
    auto doc = nlohmann::json::parse(read_file(groups));
    for (const auto& g : doc) {
      DeviceBlocks blocks;
      for (const auto& b : g) {
        std::vector<int> block;
        for (const auto& id : b) block.push_back(p.hardware().require_index(id.get<std::string>()));
        blocks.push_back(block);
      }
      out.push_back(blocks);
    }
    return out;
  }
};

nlohmann::json groups_to_json(const HardwareSystem& hw, const std::vector<DeviceBlocks>& groups) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& g : groups) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : g) {
      nlohmann::json ids = nlohmann::json::array();
      for (int u : b) ids.push_back(hw.id(u));
      blocks.push_back(ids);
    }
    doc.push_back(blocks);
  }
  return doc;
}

ModuleModel parse_model(const std::string& name, double p, int k, int m) {
  if (name == "er") return ModuleModel::er(p);
  if (name == "ws") return ModuleModel::ws(k, p);
  return ModuleModel::ba(m);
}

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::kInfeasible:
    case ErrorCode::kAssignment:
    case ErrorCode::kPrecedence:
    case ErrorCode::kOverlap:
    case ErrorCode::kUnsupportedBatch:
    case ErrorCode::kMemory:
    case ErrorCode::kObjectiveMismatch:
      return 1;
    default:
      return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hetmap: DNN inference mapping on heterogeneous devices"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a benchmark instance");
  std::string family = "stack";
  std::string model = "er";
  double prob = 0.2;
  int ws_k = 4;
  int ba_m = 5;
  int n = 10;
  int modules = 1;
  int channels = 1;
  std::string mode = "sdep";
  std::uint64_t seed = 1;
  std::string profile = "default3";
  std::vector<int> batch_sizes{1};
  std::string out_dir = ".";
  int layers = 4;
  int nodes = 1;
  int per_node = 4;
  gen->add_option("--family", family)->check(CLI::IsMember({"stack", "transformer"}));
  gen->add_option("--model", model)->check(CLI::IsMember({"er", "ws", "ba"}));
  gen->add_option("--p", prob, "ER edge / WS rewiring probability");
  gen->add_option("--k", ws_k, "WS ring degree");
  gen->add_option("--m", ba_m, "BA attachments");
  gen->add_option("--n", n, "tasks per module")->check(CLI::Range(2, 10000));
  gen->add_option("--modules", modules)->check(CLI::PositiveNumber);
  gen->add_option("--channels", channels)->check(CLI::PositiveNumber);
  gen->add_option("--mode", mode)->check(CLI::IsMember({"sdep", "wdep"}));
  gen->add_option("--seed", seed);
  gen->add_option("--profile", profile)->check(CLI::IsMember({"default3"}));
  gen->add_option("--batch-sizes", batch_sizes)->delimiter(',');
  gen->add_option("--out-dir", out_dir);
  gen->add_option("--layers", layers)->check(CLI::PositiveNumber);
  gen->add_option("--nodes", nodes)->check(CLI::PositiveNumber);
  gen->add_option("--devices-per-node", per_node)->check(CLI::PositiveNumber);

  // schedule / oracle / lowerbound / export-lp
  InstanceArgs inst;
  SolveArgs sa;
  std::string algo = "split";
  std::string out = "-";
  auto* sched = app.add_subcommand("schedule", "compute a schedule");
  inst.attach(sched);
  sa.attach(sched);
  sched->add_option("--algo", algo)->check(CLI::IsMember(algorithm_names()));
  sched->add_option("--out,-o", out);

  InstanceArgs oinst;
  std::string oout = "-";
  auto* orc = app.add_subcommand("oracle", "exhaustive optimum of a tiny instance");
  oinst.attach(orc);
  orc->add_option("--out,-o", oout);

  InstanceArgs binst;
  SolveArgs bsa;
  std::string bout = "-";
  auto* lb = app.add_subcommand("lowerbound", "recursive module lower bound");
  binst.attach(lb);
  bsa.attach(lb);
  lb->add_option("--out,-o", bout);

  InstanceArgs einst;
  SolveArgs esa;
  std::string eout = "-";
  auto* exp = app.add_subcommand("export-lp", "write the MILP in LP format");
  einst.attach(exp);
  esa.attach(exp);
  exp->add_option("--out,-o", eout);

  InstanceArgs vinst;
  std::string vsched;
  auto* val = app.add_subcommand("validate", "check a schedule");
  vinst.attach(val);
  val->add_option("--schedule", vsched)->required();

  // bench
  auto* bench = app.add_subcommand("bench", "run algorithms over a generated suite, CSV out");
  BenchSpec spec;
  std::string bmodel = "er";
  std::string bmode = "sdep";
  std::vector<std::string> balgos;
  SolveArgs benchsa;
  std::string bench_out = "-";
  bench->add_option("--model", bmodel)->check(CLI::IsMember({"er", "ws", "ba"}));
  bench->add_option("--p", prob);
  bench->add_option("--k", ws_k);
  bench->add_option("--m", ba_m);
  bench->add_option("--n", spec.n);
  bench->add_option("--modules", spec.modules);
  bench->add_option("--mode", bmode)->check(CLI::IsMember({"sdep", "wdep"}));
  bench->add_option("--instances", spec.instances)->check(CLI::PositiveNumber);
  bench->add_option("--inputs,-L", spec.inputs)->check(CLI::PositiveNumber);
  bench->add_option("--batch-sizes", spec.batch_sizes)->delimiter(',');
  bench->add_option("--algos", balgos)->delimiter(',')->check(CLI::IsMember(algorithm_names()));
  bench->add_flag("!--no-bound", spec.with_bound, "skip the lower bound");
  benchsa.attach(bench);
  bench->add_option("--out,-o", bench_out);

  // gantt
  InstanceArgs ginst;
  std::string gsched;
  std::string gout = "-";
  auto* gan = app.add_subcommand("gantt", "render a schedule as SVG");
  ginst.attach(gan);
  gan->add_option("--schedule", gsched)->required();
  gan->add_option("--out,-o", gout);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      fs::create_directories(out_dir);
      auto path = [&](const char* f) { return (fs::path(out_dir) / f).string(); };
      if (family == "transformer") {
        auto t = gen_transformer_stack(layers, nodes, per_node);
        write_file(path("graph.json"), save_graph(t.graph) + "\n");
        write_file(path("hardware.json"), hardware_to_json(t.hardware).dump(1) + "\n");
        write_file(path("latency.json"), latency_to_json(t.latency).dump(1) + "\n");
        write_file(path("groups.json"), groups_to_json(t.hardware, t.groups).dump(1) + "\n");
        return 0;
      }
      auto st = gen_stacked(parse_model(model, prob, ws_k, ba_m), n, modules, channels,
                            mode == "sdep" ? ChannelMode::kSdep : ChannelMode::kWdep, seed);
      auto prof = synth_profile(st.graph, default3_devices(batch_sizes), seed);
      write_file(path("graph.json"), save_graph(st.graph) + "\n");
      write_file(path("hardware.json"), hardware_to_json(prof.hardware).dump(1) + "\n");
      write_file(path("latency.json"), latency_to_json(prof.latency).dump(1) + "\n");
      write_file(path("modules.json"), decomposition_to_json(st.graph, st.truth).dump(1) + "\n");
      return 0;
    }
    if (*sched) {
      Problem p = inst.load();
      auto run = run_algorithm(algo, p, sa.algo(p));
      validate_schedule(p, run.schedule);
      write_file(out, schedule_to_json(p, run.schedule).dump(1) + "\n");
      std::cerr << algo << ": " << run.schedule.objective << " ms";
      if (sa.objective == "throughput") std::cerr << ", " << 1000.0 * p.inputs() / run.schedule.objective << " inputs/s";
      std::cerr << " (" << run.wall_s << " s)\n";
      return 0;
    }
    if (*orc) {
      Problem p = oinst.load();
      auto r = brute_force(p);
      write_file(oout, schedule_to_json(p, r.schedule).dump(1) + "\n");
      return 0;
    }
    if (*lb) {
      Problem p = binst.load();
      auto d = k_edge_components(p.graph(), bsa.channels);
      auto rep = lower_bound(p, d, milp_module_solver(bsa.solver()));
      write_file(bout, bound_report_to_json(rep).dump(1) + "\n");
      return 0;
    }
    if (*exp) {
      Problem p = einst.load();
      auto a = esa.algo(p);
      BuildOptions build;
      build.objective = a.objective;
      auto f = build_milp(p, build);
      add_symmetry_constraints(f, p, a.groups, a.symmetry);
      write_file(eout, export_lp(f.model));
      return 0;
    }
    if (*val) {
      Problem p = vinst.load();
      Schedule s = schedule_from_json(p, nlohmann::json::parse(read_file(vsched)));
      double c = validate_schedule(p, s);
      std::cout << "valid, makespan " << c << " ms\n";
      return 0;
    }
    if (*bench) {
      spec.model = parse_model(bmodel, prob, ws_k, ba_m);
      spec.model_name = bmodel;
      spec.mode = bmode == "sdep" ? ChannelMode::kSdep : ChannelMode::kWdep;
      spec.channels = benchsa.channels;
      spec.seed = benchsa.seed;
      if (!balgos.empty()) spec.algos = balgos;
      auto so = benchsa.solver();
      spec.algo.timeout_s = so.timeout_s;
      spec.algo.backend = so.backend;
      spec.algo.channels = benchsa.channels;
      spec.algo.seed = benchsa.seed;
      spec.algo.budget = benchsa.budget;
      spec.algo.objective = benchsa.objective == "throughput" ? Objective::kThroughput : Objective::kLatency;
      write_file(bench_out, bench_csv(run_bench(spec)));
      return 0;
    }
    if (*gan) {
      Problem p = ginst.load();
      Schedule s = schedule_from_json(p, nlohmann::json::parse(read_file(gsched)));
      write_file(gout, render_gantt_svg(p, s));
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error[" << code_name(e.code()) << "]: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error[parse]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error[io]: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
