// Command-line front end for the phase segmentation toolkit. Talks to the
// shared library exclusively through the C API.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "phaseseg/phaseseg.h"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

void check(ps_status st, const std::string& context) {
  if (st != PS_OK) {
    std::fprintf(stderr, "phaseseg: %s: %s\n", context.c_str(), ps_last_error());
    std::exit(1);
  }
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

std::string labels_path_for(const std::string& demo_path) {
  fs::path p(demo_path);
  p.replace_extension();
  return p.string() + ".labels.csv";
}

struct DemoSet {
  std::vector<ps_demo*> demos;
  std::vector<std::string> stems;

  ~DemoSet() {
    for (auto* d : demos) ps_demo_free(d);
  }
  const ps_demo* const* data() const { return demos.data(); }
  int size() const { return static_cast<int>(demos.size()); }
};

void load_demos(const std::vector<std::string>& paths, bool want_labels, DemoSet* out) {
  for (const auto& path : paths) {
    ps_demo* demo = nullptr;
    check(ps_demo_read(path.c_str(), &demo), "reading " + path);
    out->demos.push_back(demo);
    out->stems.push_back(stem_of(path));
    if (want_labels) {
      const std::string lp = labels_path_for(path);
      if (!fs::exists(lp)) {
        std::fprintf(stderr, "phaseseg: %s needs ground-truth labels at %s\n", path.c_str(),
                     lp.c_str());
        std::exit(1);
      }
      check(ps_demo_load_labels(demo, lp.c_str()), "reading " + lp);
    }
  }
}

struct EmFlags {
  int max_iters = 100;
  double tol = 1e-4;
  double lr = 1e-3;
  int lr_iters = 50;
  double ridge = 1e-8;
  std::uint64_t seed = 0;
  std::string feature = "wrench";

  void add(CLI::App* cmd) {
    cmd->add_option("--max-iters", max_iters, "EM iteration cap");
    cmd->add_option("--tol", tol, "log-likelihood convergence tolerance");
    cmd->add_option("--lr", lr, "logistic gradient step size");
    cmd->add_option("--lr-iters", lr_iters, "logistic gradient steps per M-step");
    cmd->add_option("--ridge", ridge, "relative ridge regularizer");
    cmd->add_option("--seed", seed, "random seed")->required();
    cmd->add_option("--feature", feature, "transition feature source: wrench or state")
        ->check(CLI::IsMember({"wrench", "state"}));
  }
  ps_em_config config() const {
    ps_em_config c;
    ps_em_config_init(&c);
    c.max_iters = max_iters;
    c.loglik_tol = tol;
    c.lr_lambda = lr;
    c.lr_iters = lr_iters;
    c.ridge = ridge;
    c.seed = seed;
    return c;
  }
  ps_feature_source source() const {
    return feature == "state" ? PS_FEATURE_STATE : PS_FEATURE_WRENCH;
  }
};

ps_scenario scenario_of(const std::string& name) {
  if (name == "valley") return PS_SCENARIO_VALLEY;
  if (name == "hose") return PS_SCENARIO_HOSE;
  return PS_SCENARIO_FREE;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) {
    std::fprintf(stderr, "phaseseg: cannot write %s\n", path.c_str());
    std::exit(1);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

// Segmentation labels are per chain position; row t carries the timestamp of
// the sample opening that step. Exported phase ids are 1-based.
void write_segmentation(const ps_demo* demo, const ps_segmentation* seg, const fs::path& path) {
  auto out = open_out(path);
  out << "t,phase\n";
  const int n = ps_segmentation_length(seg);
  for (int i = 0; i < n; ++i) {
    double t = 0.0;
    check(ps_demo_point(demo, i, &t, nullptr, nullptr), "reading sample");
    out << fmt17(t) << ',' << ps_segmentation_label(seg, i) + 1 << '\n';
  }
}

void write_forward_probs(const ps_demo* demo, const ps_segmentation* seg, int n_phases,
                         const fs::path& path) {
  auto out = open_out(path);
  out << "t,series,value\n";
  const int n = ps_segmentation_length(seg);
  for (int i = 0; i < n; ++i) {
    double t = 0.0;
    check(ps_demo_point(demo, i, &t, nullptr, nullptr), "reading sample");
    for (int j = 0; j < n_phases; ++j)
      out << fmt17(t) << ",phase_" << j + 1 << ',' << fmt17(ps_segmentation_prob(seg, i, j))
          << '\n';
  }
}

void write_segmentation_outputs(const ps_model* model, const DemoSet& set, const fs::path& dir) {
  for (int i = 0; i < set.size(); ++i) {
    ps_segmentation* seg = nullptr;
    check(ps_segment(model, set.demos[i], &seg), "segmenting " + set.stems[i]);
    const fs::path seg_path = dir / ("segmentation_" + set.stems[i] + ".csv");
    const fs::path prob_path = dir / ("forward_probs_" + set.stems[i] + ".csv");
    write_segmentation(set.demos[i], seg, seg_path);
    write_forward_probs(set.demos[i], seg, ps_model_n_phases(model), prob_path);
    int switches = 0;
    for (int t = 1; t < ps_segmentation_length(seg); ++t)
      if (ps_segmentation_label(seg, t) != ps_segmentation_label(seg, t - 1)) ++switches;
    std::printf("segmented %s: %d steps, %d switches\n", set.stems[i].c_str(),
                ps_segmentation_length(seg), switches);
    ps_segmentation_free(seg);
  }
}

std::vector<double> parse_vec(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      std::fprintf(stderr, "phaseseg: cannot parse '%s' as a number\n", item.c_str());
      std::exit(1);
    }
  }
  return out;
}

const char* kStateCols3[] = {"x", "y", "z"};
const char* kStateCols6[] = {"x", "y", "z", "rx", "ry", "rz"};
const char* kWrenchCols3[] = {"fx", "fy", "fz"};
const char* kWrenchCols6[] = {"fx", "fy", "fz", "tx", "ty", "tz"};

/* ---------------------------------------------------------------- generate */

int cmd_generate(const std::string& world_name, const std::string& config_path,
                 const std::string& out_dir, std::uint64_t seed, double dt, double noise_pos,
                 double noise_force) {
  fs::create_directories(out_dir);
  ps_world* world = nullptr;
  std::vector<ps_demo*> demos;

  if (config_path.empty()) {
    check(ps_world_fixture(scenario_of(world_name), noise_pos, noise_force, &world),
          "building world");
    const int variants = world_name == "valley" ? 2 : 1;
    for (int v = 0; v < variants; ++v) {
      ps_demo* demo = nullptr;
      check(ps_generate_fixture(world, v, dt, seed + static_cast<std::uint64_t>(v), &demo),
            "generating demo");
      demos.push_back(demo);
    }
  } else {
    std::ifstream in(config_path);
    if (!in) {
      std::fprintf(stderr, "phaseseg: cannot open %s\n", config_path.c_str());
      return 1;
    }
    Json cfg;
    try {
      cfg = Json::parse(in);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "phaseseg: %s: %s\n", config_path.c_str(), e.what());
      return 1;
    }
    const std::string world_json = cfg.contains("world") ? cfg["world"].dump() : "{}";
    check(ps_world_from_json(world_json.c_str(), &world), "building world");
    dt = cfg.value("dt", dt);
    if (!cfg.contains("demos") || !cfg["demos"].is_array() || cfg["demos"].empty()) {
      std::fprintf(stderr, "phaseseg: config needs a non-empty 'demos' array\n");
      return 1;
    }
    const int m = ps_world_state_dim(world);
    int idx = 0;
    for (const auto& entry : cfg["demos"]) {
      if (!entry.contains("start") || !entry.contains("script")) {
        std::fprintf(stderr, "phaseseg: each demo needs 'start' and 'script'\n");
        return 1;
      }
      std::vector<double> start = entry["start"].get<std::vector<double>>();
      if (static_cast<int>(start.size()) != m) {
        std::fprintf(stderr, "phaseseg: demo start must have %d entries\n", m);
        return 1;
      }
      const std::string label = entry.value("label", "demo_" + std::to_string(idx));
      ps_demo* demo = nullptr;
      check(ps_generate(world, start.data(), entry["script"].dump().c_str(), dt,
                        seed + static_cast<std::uint64_t>(idx), label.c_str(), &demo),
            "generating " + label);
      demos.push_back(demo);
      ++idx;
    }
  }

  for (auto* demo : demos) {
    const std::string label = ps_demo_label(demo);
    const fs::path demo_path = fs::path(out_dir) / (label + ".csv");
    const fs::path labels_path = fs::path(out_dir) / (label + ".labels.csv");
    check(ps_demo_write_csv(demo, demo_path.c_str()), "writing " + demo_path.string());
    check(ps_demo_save_labels(demo, labels_path.c_str()), "writing " + labels_path.string());
    std::printf("wrote %s (%d samples)\n", demo_path.c_str(), ps_demo_length(demo));
    ps_demo_free(demo);
  }
  ps_world_free(world);
  return 0;
}

/* ------------------------------------------------------------------- train */

int cmd_train(const std::vector<std::string>& demo_paths, int n_phases, const EmFlags& flags,
              const std::string& out_dir) {
  fs::create_directories(out_dir);
  DemoSet set;
  load_demos(demo_paths, false, &set);

  ps_em_config config = flags.config();
  ps_model* model = nullptr;
  ps_em_report* report = nullptr;
  check(ps_train(set.data(), set.size(), n_phases, &config, flags.source(), &model, &report),
        "training");

  const fs::path model_path = fs::path(out_dir) / "model.json";
  check(ps_model_save(model, model_path.c_str()), "writing model");

  Json rep;
  rep["iterations"] = ps_em_report_iterations(report);
  rep["converged"] = ps_em_report_converged(report) != 0;
  Json trace = Json::array();
  for (int i = 0; i < ps_em_report_iterations(report); ++i)
    trace.push_back(ps_em_report_loglik(report, i));
  rep["loglik_trace"] = std::move(trace);
  write_text(fs::path(out_dir) / "em_report.json", rep.dump(2) + "\n");

  write_segmentation_outputs(model, set, out_dir);

  const int iters = ps_em_report_iterations(report);
  std::printf("%s after %d iterations, final loglik %s\n",
              ps_em_report_converged(report) ? "converged" : "stopped", iters,
              fmt17(ps_em_report_loglik(report, iters - 1)).c_str());
  std::printf("wrote %s\n", model_path.c_str());
  ps_em_report_free(report);
  ps_model_free(model);
  return 0;
}

/* ------------------------------------------------------------------ select */

int cmd_select(const std::vector<std::string>& demo_paths, const std::string& sweep,
               const EmFlags& flags, bool full_bic, const std::string& out_dir) {
  const auto dots = sweep.find("..");
  if (dots == std::string::npos) {
    std::fprintf(stderr, "phaseseg: --sweep wants MIN..MAX\n");
    return 1;
  }
  int n_min = 0, n_max = 0;
  try {
    n_min = std::stoi(sweep.substr(0, dots));
    n_max = std::stoi(sweep.substr(dots + 2));
  } catch (const std::exception&) {
    std::fprintf(stderr, "phaseseg: --sweep wants MIN..MAX\n");
    return 1;
  }

  fs::create_directories(out_dir);
  DemoSet set;
  load_demos(demo_paths, false, &set);

  ps_em_config config = flags.config();
  ps_bic_table* table = nullptr;
  check(ps_bic_sweep(set.data(), set.size(), n_min, n_max, &config, full_bic ? 1 : 0,
                     flags.source(), &table),
        "sweeping");

  auto out = open_out(fs::path(out_dir) / "bic.csv");
  out << "n_phases,loglik,n_params,n_obs,bic,status,message\n";
  for (int i = 0; i < ps_bic_rows(table); ++i) {
    int n = 0;
    double ll = 0.0, bic = 0.0;
    long long n_params = 0, n_obs = 0;
    const ps_status st = ps_bic_row(table, i, &n, &ll, &n_params, &n_obs, &bic);
    if (st == PS_OK) {
      out << n << ',' << fmt17(ll) << ',' << n_params << ',' << n_obs << ',' << fmt17(bic)
          << ",ok,\n";
    } else {
      out << n << ",,,,,failed," << ps_bic_message(table, i) << '\n';
    }
  }
  std::printf("selected n_phases = %d\n", ps_bic_selected(table));
  ps_bic_table_free(table);
  return 0;
}

/* ----------------------------------------------------------------- segment */

int cmd_segment(const std::string& model_path, const std::vector<std::string>& demo_paths,
                const std::string& out_dir) {
  fs::create_directories(out_dir);
  ps_model* model = nullptr;
  check(ps_model_load(model_path.c_str(), &model), "loading " + model_path);
  DemoSet set;
  load_demos(demo_paths, false, &set);
  write_segmentation_outputs(model, set, out_dir);
  ps_model_free(model);
  return 0;
}

/* --------------------------------------------------------------- reproduce */

int cmd_reproduce(const std::string& model_path, const std::vector<std::string>& demo_paths,
                  const std::string& world_name, const std::string& start_text, double dt,
                  int max_steps, double dwell, std::uint64_t seed, double noise_pos,
                  double noise_force, const std::string& out_dir) {
  fs::create_directories(out_dir);
  ps_model* model = nullptr;
  check(ps_model_load(model_path.c_str(), &model), "loading " + model_path);
  DemoSet set;
  load_demos(demo_paths, false, &set);

  ps_world* world = nullptr;
  check(ps_world_fixture(scenario_of(world_name), noise_pos, noise_force, &world),
        "building world");
  const int m = ps_world_state_dim(world);

  std::vector<double> start;
  if (!start_text.empty()) {
    start = parse_vec(start_text);
    if (static_cast<int>(start.size()) != m) {
      std::fprintf(stderr, "phaseseg: --start must have %d entries\n", m);
      return 1;
    }
  } else if (world_name == "valley") {
    start = {-0.10, 0.0, 0.24};
  } else if (world_name == "hose") {
    start = {0.0, 0.0, 0.10, 0.0, 0.0, 0.0};
  } else {
    start = {0.0, 0.0, 0.10};
  }

  ps_primitives* prims = nullptr;
  check(ps_extract_primitives(model, set.data(), set.size(), &prims), "extracting primitives");

  Json pj;
  Json phases = Json::array();
  for (int j = 0; j < ps_primitives_count(prims); ++j) {
    std::vector<double> dir(static_cast<size_t>(m));
    double speed = 0.0;
    int low = 0;
    check(ps_primitive(prims, j, dir.data(), &speed, &low), "reading primitive");
    Json entry;
    entry["phase"] = j + 1;
    entry["v_dir"] = dir;
    entry["speed"] = speed;
    entry["low_confidence"] = low != 0;
    phases.push_back(std::move(entry));
  }
  pj["primitives"] = std::move(phases);
  write_text(fs::path(out_dir) / "primitives.json", pj.dump(2) + "\n");

  ps_trace* trace = nullptr;
  check(ps_reproduce(model, prims, world, start.data(), dt, max_steps, dwell, seed, &trace),
        "reproducing");

  const char** scols = m == 6 ? kStateCols6 : kStateCols3;
  const char** wcols = m == 6 ? kWrenchCols6 : kWrenchCols3;
  auto out = open_out(fs::path(out_dir) / "trace.csv");
  out << "t,phase,primitive";
  for (int i = 0; i < m; ++i) out << ",cmd_" << scols[i];
  for (int i = 0; i < m; ++i) out << ",pos_" << scols[i];
  for (int i = 0; i < m; ++i) out << ',' << wcols[i];
  out << '\n';
  std::vector<double> xs(static_cast<size_t>(m)), x(static_cast<size_t>(m)),
      wrench(static_cast<size_t>(m));
  for (int i = 0; i < ps_trace_length(trace); ++i) {
    double t = 0.0;
    int phase = 0, prim = 0;
    check(ps_trace_step(trace, i, &t, xs.data(), x.data(), wrench.data(), &phase, &prim),
          "reading trace");
    out << fmt17(t) << ',' << phase + 1 << ',' << prim + 1;
    for (int k = 0; k < m; ++k) out << ',' << fmt17(xs[k]);
    for (int k = 0; k < m; ++k) out << ',' << fmt17(x[k]);
    for (int k = 0; k < m; ++k) out << ',' << fmt17(wrench[k]);
    out << '\n';
  }

  const int last = ps_trace_length(trace) - 1;
  double t_end = 0.0;
  int phase_end = 0, prim_end = 0;
  check(ps_trace_step(trace, last, &t_end, xs.data(), x.data(), wrench.data(), &phase_end,
                      &prim_end),
        "reading trace");
  std::printf("finished in phase %d after %s s at (", phase_end + 1, fmt17(t_end).c_str());
  for (int k = 0; k < m; ++k) std::printf(k ? ", %.4f" : "%.4f", x[k]);
  std::printf(")\n");

  ps_trace_free(trace);
  ps_primitives_free(prims);
  ps_world_free(world);
  ps_model_free(model);
  return 0;
}

/* ----------------------------------------------------------------- compare */

int cmd_compare(const std::vector<std::string>& demo_paths, int n_phases, const EmFlags& flags,
                const std::string& out_dir) {
  fs::create_directories(out_dir);
  DemoSet set;
  load_demos(demo_paths, true, &set);

  ps_em_config config = flags.config();
  char* report_json = nullptr;
  check(ps_compare_features(set.data(), set.size(), n_phases, &config, &report_json),
        "comparing feature modes");
  write_text(fs::path(out_dir) / "compare.json", report_json);

  Json rep = Json::parse(report_json);
  std::printf("wrench features: accuracy %.4f, %d spurious switches\n",
              rep["wrench"]["accuracy"].get<double>(),
              rep["wrench"]["spurious_switches"].get<int>());
  std::printf("state features:  accuracy %.4f, %d spurious switches\n",
              rep["state"]["accuracy"].get<double>(),
              rep["state"]["spurious_switches"].get<int>());
  ps_string_free(report_json);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase segmentation and reproduction for in-contact manipulation"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Simulate scripted demonstrations");
  std::string gen_world = "valley";
  std::string gen_config;
  std::string gen_out;
  std::uint64_t gen_seed = 0;
  double gen_dt = 0.01, gen_noise_pos = 3e-4, gen_noise_force = 0.05;
  gen->add_option("--world", gen_world, "fixture world: valley, hose or free")
      ->check(CLI::IsMember({"valley", "hose", "free"}));
  gen->add_option("--config", gen_config, "JSON file with world and demo scripts");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "random seed")->required();
  gen->add_option("--dt", gen_dt, "sample period [s]");
  gen->add_option("--noise-pos", gen_noise_pos, "position noise sigma [m]");
  gen->add_option("--noise-force", gen_noise_force, "wrench noise sigma [N]");

  // train
  auto* train = app.add_subcommand("train", "Fit a phase model with EM");
  std::vector<std::string> train_demos;
  int train_n = 0;
  std::string train_out;
  EmFlags train_flags;
  train->add_option("--demos", train_demos, "demonstration files")->required()->expected(-1);
  train->add_option("--n-phases", train_n, "number of phases")->required();
  train->add_option("--out", train_out, "output directory")->required();
  train_flags.add(train);

  // select
  auto* select = app.add_subcommand("select", "Pick the phase count by BIC");
  std::vector<std::string> select_demos;
  std::string select_sweep = "1..6";
  std::string select_out;
  bool full_bic = false;
  EmFlags select_flags;
  select->add_option("--demos", select_demos, "demonstration files")->required()->expected(-1);
  select->add_option("--sweep", select_sweep, "candidate range MIN..MAX");
  select->add_option("--out", select_out, "output directory")->required();
  select->add_flag("--full-bic", full_bic, "also count dynamics parameters");
  select_flags.add(select);

  // segment
  auto* seg = app.add_subcommand("segment", "Label demonstrations with a trained model");
  std::string seg_model;
  std::vector<std::string> seg_demos;
  std::string seg_out;
  seg->add_option("--model", seg_model, "model JSON file")->required();
  seg->add_option("--demos", seg_demos, "demonstration files")->required()->expected(-1);
  seg->add_option("--out", seg_out, "output directory")->required();

  // reproduce
  auto* rep = app.add_subcommand("reproduce", "Execute the learned task in simulation");
  std::string rep_model, rep_world = "valley", rep_start, rep_out;
  std::vector<std::string> rep_demos;
  double rep_dt = 0.01, rep_dwell = 0.5, rep_noise_pos = 3e-4, rep_noise_force = 0.05;
  int rep_max_steps = 3000;
  std::uint64_t rep_seed = 0;
  rep->add_option("--model", rep_model, "model JSON file")->required();
  rep->add_option("--demos", rep_demos, "demos used to extract primitives")
      ->required()
      ->expected(-1);
  rep->add_option("--world", rep_world, "fixture world: valley, hose or free")
      ->check(CLI::IsMember({"valley", "hose", "free"}));
  rep->add_option("--start", rep_start, "start state, comma separated");
  rep->add_option("--out", rep_out, "output directory")->required();
  rep->add_option("--dt", rep_dt, "control period [s]");
  rep->add_option("--max-steps", rep_max_steps, "step limit");
  rep->add_option("--dwell", rep_dwell, "terminal dwell [s]");
  rep->add_option("--seed", rep_seed, "measurement noise seed");
  rep->add_option("--noise-pos", rep_noise_pos, "position noise sigma [m]");
  rep->add_option("--noise-force", rep_noise_force, "wrench noise sigma [N]");

  // compare
  auto* cmp = app.add_subcommand("compare", "Wrench vs state transition features");
  std::vector<std::string> cmp_demos;
  int cmp_n = 0;
  std::string cmp_out;
  EmFlags cmp_flags;
  cmp->add_option("--demos", cmp_demos, "demonstration files with .labels.csv sidecars")
      ->required()
      ->expected(-1);
  cmp->add_option("--n-phases", cmp_n, "number of phases")->required();
  cmp->add_option("--out", cmp_out, "output directory")->required();
  cmp_flags.add(cmp);

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed())
    return cmd_generate(gen_world, gen_config, gen_out, gen_seed, gen_dt, gen_noise_pos,
                        gen_noise_force);
  if (train->parsed()) return cmd_train(train_demos, train_n, train_flags, train_out);
  if (select->parsed())
    return cmd_select(select_demos, select_sweep, select_flags, full_bic, select_out);
  if (seg->parsed()) return cmd_segment(seg_model, seg_demos, seg_out);
  if (rep->parsed())
    return cmd_reproduce(rep_model, rep_demos, rep_world, rep_start, rep_dt, rep_max_steps,
                         rep_dwell, rep_seed, rep_noise_pos, rep_noise_force, rep_out);
  if (cmp->parsed()) return cmd_compare(cmp_demos, cmp_n, cmp_flags, cmp_out);
  return 1;
}
