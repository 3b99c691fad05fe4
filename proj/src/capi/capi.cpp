#include "phaseseg/phaseseg.h"

#include <cstring>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "common/error.hpp"
#include "core/types.hpp"
#include "inference/inference.hpp"
#include "io/demo_io.hpp"
#include "io/model_io.hpp"
#include "learning/learning.hpp"
#include "selection/selection.hpp"
#include "simulate/fixtures.hpp"
#include "simulate/simulate.hpp"

using namespace phaseseg;

namespace {

thread_local std::string g_last_error;

ps_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument:
      return PS_ERR_INVALID_ARGUMENT;
    case ErrorCode::validation:
      return PS_ERR_VALIDATION;
    case ErrorCode::numeric:
      return PS_ERR_NUMERIC;
    case ErrorCode::io:
      return PS_ERR_IO;
    case ErrorCode::instability:
      return PS_ERR_INSTABILITY;
  }
  return PS_ERR_INTERNAL;
}

template <typename F>
ps_status guard(F&& f) {
  try {
    f();
    return PS_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return PS_ERR_INTERNAL;
  }
}

ps_status arg_error(const char* msg) {
  g_last_error = msg;
  return PS_ERR_INVALID_ARGUMENT;
}

}  // namespace

struct ps_demo {
  Demonstration demo;
  mutable std::vector<std::string> violations;  // filled by ps_demo_validate
};
struct ps_model {
  HmmModel model;
};
struct ps_em_report {
  EmReport report;
};
struct ps_bic_table {
  BicSweepResult sweep;
};
struct ps_segmentation {
  std::vector<int> labels;
  Mat probs;
};
struct ps_filter {
  HmmModel model;
  ForwardState state;
};
struct ps_world {
  ContactWorld world;
};
struct ps_primitives {
  std::vector<PhasePrimitive> prims;
  int state_dim = 0;
};
struct ps_trace {
  ReproductionTrace trace;
};

extern "C" {

const char* ps_last_error(void) { return g_last_error.c_str(); }

/* ------------------------------------------------------------------ demos */

ps_status ps_demo_read(const char* path, ps_demo** out) {
  if (!path || !out) return arg_error("null argument");
  return guard([&] { *out = new ps_demo{read_demo(path), {}}; });
}

ps_status ps_demo_write_csv(const ps_demo* demo, const char* path) {
  if (!demo || !path) return arg_error("null argument");
  return guard([&] { write_demo_csv(demo->demo, path); });
}

ps_status ps_demo_create(const double* t, const double* s, int m, const double* wrench, int dw,
                         int n, const char* label, ps_demo** out) {
  if (!t || !s || !wrench || !out) return arg_error("null argument");
  if (m < 1 || dw < 1 || n < 2) return arg_error("need m >= 1, dw >= 1, n >= 2");
  return guard([&] {
    Demonstration demo;
    demo.label = label ? label : "";
    demo.points.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      TrajectoryPoint& p = demo.points[static_cast<size_t>(i)];
      p.t = t[i];
      p.s = Eigen::Map<const Vec>(s + static_cast<long>(i) * m, m);
      p.a_raw = Eigen::Map<const Vec>(wrench + static_cast<long>(i) * dw, dw);
    }
    double dt = n > 1 ? t[1] - t[0] : 0.0;
    demo.dt = dt;
    *out = new ps_demo{std::move(demo), {}};
  });
}

void ps_demo_free(ps_demo* demo) { delete demo; }

int ps_demo_length(const ps_demo* demo) { return demo ? demo->demo.length() : 0; }
int ps_demo_state_dim(const ps_demo* demo) { return demo ? demo->demo.state_dim() : 0; }
int ps_demo_wrench_dim(const ps_demo* demo) { return demo ? demo->demo.wrench_dim() : 0; }
double ps_demo_dt(const ps_demo* demo) { return demo ? demo->demo.dt : 0.0; }
const char* ps_demo_label(const ps_demo* demo) { return demo ? demo->demo.label.c_str() : ""; }

ps_status ps_demo_point(const ps_demo* demo, int index, double* t, double* s, double* wrench) {
  if (!demo) return arg_error("null demo");
  if (index < 0 || index >= demo->demo.length()) return arg_error("sample index out of range");
  const TrajectoryPoint& p = demo->demo.points[static_cast<size_t>(index)];
  if (t) *t = p.t;
  if (s) Eigen::Map<Vec>(s, p.s.size()) = p.s;
  if (wrench) Eigen::Map<Vec>(wrench, p.a_raw.size()) = p.a_raw;
  return PS_OK;
}

int ps_demo_has_labels(const ps_demo* demo) {
  return demo && !demo->demo.regime_labels.empty() ? 1 : 0;
}

ps_status ps_demo_labels(const ps_demo* demo, int* out) {
  if (!demo || !out) return arg_error("null argument");
  if (demo->demo.regime_labels.empty()) return arg_error("demo has no labels");
  std::memcpy(out, demo->demo.regime_labels.data(),
              demo->demo.regime_labels.size() * sizeof(int));
  return PS_OK;
}

ps_status ps_demo_load_labels(ps_demo* demo, const char* path) {
  if (!demo || !path) return arg_error("null argument");
  return guard([&] {
    auto labels = read_labels_csv(path);
    if (static_cast<int>(labels.size()) != demo->demo.length())
      fail(ErrorCode::validation, std::string(path) + ": label count does not match samples");
    demo->demo.regime_labels = std::move(labels);
  });
}

ps_status ps_demo_save_labels(const ps_demo* demo, const char* path) {
  if (!demo || !path) return arg_error("null argument");
  if (demo->demo.regime_labels.empty()) return arg_error("demo has no labels");
  return guard([&] { write_labels_csv(demo->demo, demo->demo.regime_labels, path); });
}

int ps_demo_validate(const ps_demo* demo) {
  if (!demo) return 0;
  demo->violations = validate_demo(demo->demo);
  return static_cast<int>(demo->violations.size());
}

const char* ps_demo_violation(const ps_demo* demo, int index) {
  if (!demo || index < 0 || index >= static_cast<int>(demo->violations.size())) return "";
  return demo->violations[static_cast<size_t>(index)].c_str();
}

/* ----------------------------------------------------------------- models */

void ps_em_config_init(ps_em_config* config) {
  if (!config) return;
  EmConfig def;
  config->max_iters = def.max_iters;
  config->loglik_tol = def.loglik_tol;
  config->lr_lambda = def.lr_lambda;
  config->lr_iters = def.lr_iters;
  config->ridge = def.ridge;
  config->seed = def.seed;
}

namespace {

EmConfig to_config(const ps_em_config* config) {
  EmConfig out;
  if (config) {
    out.max_iters = config->max_iters;
    out.loglik_tol = config->loglik_tol;
    out.lr_lambda = config->lr_lambda;
    out.lr_iters = config->lr_iters;
    out.ridge = config->ridge;
    out.seed = config->seed;
  }
  return out;
}

std::vector<Demonstration> to_demos(const ps_demo* const* demos, int n_demos) {
  std::vector<Demonstration> out;
  out.reserve(static_cast<size_t>(n_demos));
  for (int i = 0; i < n_demos; ++i) {
    if (!demos[i]) fail(ErrorCode::invalid_argument, "null demo handle");
    out.push_back(demos[i]->demo);
  }
  return out;
}

}  // namespace

ps_status ps_train(const ps_demo* const* demos, int n_demos, int n_phases,
                   const ps_em_config* config, ps_feature_source source, ps_model** out_model,
                   ps_em_report** out_report) {
  if (!demos || n_demos < 1 || !out_model) return arg_error("null argument");
  return guard([&] {
    auto ds = to_demos(demos, n_demos);
    auto [model, report] = em_fit(ds, n_phases, to_config(config),
                                  source == PS_FEATURE_STATE ? FeatureSource::state
                                                             : FeatureSource::wrench);
    *out_model = new ps_model{std::move(model)};
    if (out_report) *out_report = new ps_em_report{std::move(report)};
  });
}

ps_status ps_model_load(const char* path, ps_model** out) {
  if (!path || !out) return arg_error("null argument");
  return guard([&] { *out = new ps_model{load_model(path)}; });
}

ps_status ps_model_save(const ps_model* model, const char* path) {
  if (!model || !path) return arg_error("null argument");
  return guard([&] { save_model(model->model, path); });
}

void ps_model_free(ps_model* model) { delete model; }

int ps_model_n_phases(const ps_model* model) { return model ? model->model.n_phases : 0; }
int ps_model_state_dim(const ps_model* model) { return model ? model->model.m : 0; }
int ps_model_feature_dim(const ps_model* model) { return model ? model->model.d : 0; }
ps_feature_source ps_model_feature_source(const ps_model* model) {
  return model && model->model.feature_source == FeatureSource::state ? PS_FEATURE_STATE
                                                                      : PS_FEATURE_WRENCH;
}

int ps_em_report_iterations(const ps_em_report* report) {
  return report ? report->report.iterations_run : 0;
}
int ps_em_report_converged(const ps_em_report* report) {
  return report && report->report.converged ? 1 : 0;
}
double ps_em_report_loglik(const ps_em_report* report, int iteration) {
  if (!report || iteration < 0 ||
      iteration >= static_cast<int>(report->report.loglik_trace.size()))
    return 0.0;
  return report->report.loglik_trace[static_cast<size_t>(iteration)];
}
void ps_em_report_free(ps_em_report* report) { delete report; }

/* -------------------------------------------------------------- selection */

ps_status ps_bic_sweep(const ps_demo* const* demos, int n_demos, int n_min, int n_max,
                       const ps_em_config* config, int full_count, ps_feature_source source,
                       ps_bic_table** out) {
  if (!demos || n_demos < 1 || !out) return arg_error("null argument");
  return guard([&] {
    auto ds = to_demos(demos, n_demos);
    auto sweep = bic_sweep(ds, n_min, n_max, to_config(config), full_count != 0,
                           source == PS_FEATURE_STATE ? FeatureSource::state
                                                      : FeatureSource::wrench);
    *out = new ps_bic_table{std::move(sweep)};
  });
}

int ps_bic_rows(const ps_bic_table* table) {
  return table ? static_cast<int>(table->sweep.results.size()) : 0;
}
int ps_bic_selected(const ps_bic_table* table) { return table ? table->sweep.selected : 0; }

ps_status ps_bic_row(const ps_bic_table* table, int index, int* n_phases, double* loglik,
                     long long* n_params, long long* n_obs, double* bic) {
  if (!table) return arg_error("null table");
  if (index < 0 || index >= static_cast<int>(table->sweep.results.size()))
    return arg_error("row index out of range");
  const BicResult& res = table->sweep.results[static_cast<size_t>(index)];
  if (n_phases) *n_phases = res.n_phases;
  if (loglik) *loglik = res.loglik;
  if (n_params) *n_params = res.n_params;
  if (n_obs) *n_obs = res.n_obs;
  if (bic) *bic = res.bic;
  if (!res.ok) {
    g_last_error = res.message;
    return PS_ERR_NUMERIC;
  }
  return PS_OK;
}

const char* ps_bic_message(const ps_bic_table* table, int index) {
  if (!table || index < 0 || index >= static_cast<int>(table->sweep.results.size())) return "";
  return table->sweep.results[static_cast<size_t>(index)].message.c_str();
}

void ps_bic_table_free(ps_bic_table* table) { delete table; }

/* ------------------------------------------------------------- inference */

ps_status ps_segment(const ps_model* model, const ps_demo* demo, ps_segmentation** out) {
  if (!model || !demo || !out) return arg_error("null argument");
  return guard([&] {
    Mat probs;
    auto labels = segment(model->model, demo->demo, &probs);
    *out = new ps_segmentation{std::move(labels), std::move(probs)};
  });
}

int ps_segmentation_length(const ps_segmentation* seg) {
  return seg ? static_cast<int>(seg->labels.size()) : 0;
}
int ps_segmentation_label(const ps_segmentation* seg, int index) {
  if (!seg || index < 0 || index >= static_cast<int>(seg->labels.size())) return -1;
  return seg->labels[static_cast<size_t>(index)];
}
double ps_segmentation_prob(const ps_segmentation* seg, int index, int j) {
  if (!seg || index < 0 || index >= seg->probs.rows() || j < 0 || j >= seg->probs.cols())
    return 0.0;
  return seg->probs(index, j);
}
void ps_segmentation_free(ps_segmentation* seg) { delete seg; }

ps_status ps_filter_create(const ps_model* model, const double* s1, const double* wrench1,
                           const double* s2, ps_filter** out) {
  if (!model || !s1 || !wrench1 || !s2 || !out) return arg_error("null argument");
  return guard([&] {
    const HmmModel& hm = model->model;
    Vec vs1 = Eigen::Map<const Vec>(s1, hm.m);
    Vec vw1 = Eigen::Map<const Vec>(wrench1, hm.d - 1);
    Vec vs2 = Eigen::Map<const Vec>(s2, hm.m);
    ForwardState st = filter_init(hm, vs1, feature(vw1), vs2);
    *out = new ps_filter{hm, std::move(st)};
  });
}

ps_status ps_filter_step(ps_filter* filter, const double* s_t, const double* wrench_t,
                         const double* s_next) {
  if (!filter || !s_t || !wrench_t || !s_next) return arg_error("null argument");
  return guard([&] {
    const HmmModel& hm = filter->model;
    Vec vs = Eigen::Map<const Vec>(s_t, hm.m);
    Vec vw = Eigen::Map<const Vec>(wrench_t, hm.d - 1);
    Vec vn = Eigen::Map<const Vec>(s_next, hm.m);
    filter->state = filter_step(filter->state, hm, vs, feature(vw), vn);
  });
}

int ps_filter_phase(const ps_filter* filter) { return filter ? filter->state.phase_estimate : -1; }

ps_status ps_filter_log_alpha(const ps_filter* filter, double* out) {
  if (!filter || !out) return arg_error("null argument");
  Eigen::Map<Vec>(out, filter->state.log_alpha.size()) = filter->state.log_alpha;
  return PS_OK;
}

void ps_filter_free(ps_filter* filter) { delete filter; }

ps_status ps_prediction_error(const ps_model* model, const ps_demo* demo, int j, double* out) {
  if (!model || !demo || !out) return arg_error("null argument");
  return guard([&] {
    const Demonstration* eff = &demo->demo;
    Demonstration transformed;
    if (model->model.feature_source == FeatureSource::state) {
      transformed = to_state_feature_demo(demo->demo);
      eff = &transformed;
    }
    auto predicted = predict_states(model->model, j, *eff);
    std::vector<Vec> actual;
    actual.reserve(predicted.size());
    for (int t = 1; t < eff->length(); ++t) actual.push_back(eff->points[t].s);
    *out = error_variance(predicted, actual);
  });
}

/* ------------------------------------------------------------- simulation */

namespace {

ContactWorld world_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io, std::string("world JSON parse error: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::io, "world JSON must be an object");
  ContactWorld w;
  const std::string sc = j.value("scenario", std::string("free"));
  if (sc == "valley")
    w.scenario = Scenario::valley;
  else if (sc == "hose")
    w.scenario = Scenario::hose_coupler;
  else if (sc == "free")
    w.scenario = Scenario::free_space;
  else
    fail(ErrorCode::io, "unknown scenario '" + sc + "'");
  auto get = [&](const char* key, double& field) {
    if (j.contains(key)) {
      if (!j[key].is_number()) fail(ErrorCode::io, std::string("world field '") + key + "' must be numeric");
      field = j[key].get<double>();
    }
  };
  get("plate_angle_deg", w.plate_angle_deg);
  get("apex_height", w.apex_height);
  get("table_z", w.table_z);
  get("coupler_z", w.coupler_z);
  get("coupler_lock_deg", w.coupler_lock_deg);
  get("coupler_detent_torque", w.coupler_detent_torque);
  get("stiffness_env", w.stiffness_env);
  get("friction_mu", w.friction_mu);
  get("noise_pos", w.noise_pos);
  get("noise_force", w.noise_force);
  get("force_cap", w.force_cap);
  get("torque_cap", w.torque_cap);
  for (auto it = j.begin(); it != j.end(); ++it) {
    static const char* known[] = {"scenario", "plate_angle_deg", "apex_height", "table_z",
                                  "coupler_z", "coupler_lock_deg", "coupler_detent_torque",
                                  "stiffness_env", "friction_mu", "noise_pos", "noise_force",
                                  "force_cap", "torque_cap"};
    bool found = false;
    for (const char* k : known)
      if (it.key() == k) found = true;
    if (!found) fail(ErrorCode::io, "unknown world field '" + it.key() + "'");
  }
  return w;
}

std::vector<ScriptSegment> script_from_json_text(const std::string& text, int m) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io, std::string("script JSON parse error: ") + e.what());
  }
  if (!j.is_array() || j.empty()) fail(ErrorCode::io, "script JSON must be a non-empty array");
  std::vector<ScriptSegment> out;
  for (const auto& entry : j) {
    if (!entry.is_object() || !entry.contains("dir") || !entry.contains("speed") ||
        !entry.contains("duration"))
      fail(ErrorCode::io, "each script segment needs dir, speed and duration");
    const auto& dir = entry["dir"];
    if (!dir.is_array() || static_cast<int>(dir.size()) != m)
      fail(ErrorCode::io, "segment dir must have " + std::to_string(m) + " entries");
    ScriptSegment seg;
    seg.v_dir.resize(m);
    for (int i = 0; i < m; ++i) seg.v_dir[i] = dir[i].get<double>();
    seg.speed = entry["speed"].get<double>();
    seg.duration = entry["duration"].get<double>();
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace

ps_status ps_world_fixture(ps_scenario scenario, double noise_pos, double noise_force,
                           ps_world** out) {
  if (!out) return arg_error("null argument");
  return guard([&] {
    ContactWorld w;
    switch (scenario) {
      case PS_SCENARIO_VALLEY:
        w = valley_world(noise_pos, noise_force);
        break;
      case PS_SCENARIO_HOSE:
        w = hose_world(noise_pos, noise_force);
        break;
      case PS_SCENARIO_FREE:
        w = free_world(noise_pos, noise_force);
        break;
      default:
        fail(ErrorCode::invalid_argument, "unknown scenario");
    }
    *out = new ps_world{w};
  });
}

ps_status ps_world_from_json(const char* json_text, ps_world** out) {
  if (!json_text || !out) return arg_error("null argument");
  return guard([&] { *out = new ps_world{world_from_json_text(json_text)}; });
}

int ps_world_state_dim(const ps_world* world) { return world ? world->world.state_dim() : 0; }

void ps_world_free(ps_world* world) { delete world; }

ps_status ps_generate(const ps_world* world, const double* start, const char* script_json,
                      double dt, uint64_t seed, const char* label, ps_demo** out) {
  if (!world || !start || !script_json || !out) return arg_error("null argument");
  return guard([&] {
    const int m = world->world.state_dim();
    Vec vstart = Eigen::Map<const Vec>(start, m);
    auto script = script_from_json_text(script_json, m);
    *out = new ps_demo{
        generate_demo(world->world, vstart, script, dt, seed, label ? label : "demo"), {}};
  });
}

ps_status ps_generate_fixture(const ps_world* world, int variant, double dt, uint64_t seed,
                              ps_demo** out) {
  if (!world || !out) return arg_error("null argument");
  return guard([&] {
    FixtureScript script;
    switch (world->world.scenario) {
      case Scenario::valley:
        script = valley_script(variant == 0 ? -1 : +1);
        break;
      case Scenario::hose_coupler:
        script = hose_script();
        break;
      case Scenario::free_space:
        script = free_script();
        break;
    }
    *out = new ps_demo{generate_fixture_demo(world->world, script, dt, seed), {}};
  });
}

ps_status ps_extract_primitives(const ps_model* model, const ps_demo* const* demos, int n_demos,
                                ps_primitives** out) {
  if (!model || !demos || n_demos < 1 || !out) return arg_error("null argument");
  return guard([&] {
    auto ds = to_demos(demos, n_demos);
    std::vector<Demonstration> eff = ds;
    if (model->model.feature_source == FeatureSource::state)
      for (auto& d : eff) d = to_state_feature_demo(d);
    auto posts = e_step(model->model, eff);
    auto prims = extract_primitives(model->model, eff, posts);
    *out = new ps_primitives{std::move(prims), model->model.m};
  });
}

int ps_primitives_count(const ps_primitives* prims) {
  return prims ? static_cast<int>(prims->prims.size()) : 0;
}

ps_status ps_primitive(const ps_primitives* prims, int j, double* v_dir, double* speed,
                       int* low_confidence) {
  if (!prims) return arg_error("null primitives");
  if (j < 0 || j >= static_cast<int>(prims->prims.size()))
    return arg_error("primitive index out of range");
  const PhasePrimitive& p = prims->prims[static_cast<size_t>(j)];
  if (v_dir) Eigen::Map<Vec>(v_dir, p.v_dir.size()) = p.v_dir;
  if (speed) *speed = p.speed;
  if (low_confidence) *low_confidence = p.low_confidence ? 1 : 0;
  return PS_OK;
}

void ps_primitives_free(ps_primitives* prims) { delete prims; }

ps_status ps_reproduce(const ps_model* model, const ps_primitives* prims, const ps_world* world,
                       const double* start, double dt, int max_steps, double dwell_s,
                       uint64_t seed, ps_trace** out) {
  if (!model || !prims || !world || !start || !out) return arg_error("null argument");
  return guard([&] {
    Vec vstart = Eigen::Map<const Vec>(start, world->world.state_dim());
    *out = new ps_trace{reproduce(model->model, prims->prims, world->world, vstart, dt,
                                  max_steps, dwell_s, seed)};
  });
}

int ps_trace_length(const ps_trace* trace) {
  return trace ? static_cast<int>(trace->trace.steps.size()) : 0;
}

ps_status ps_trace_step(const ps_trace* trace, int index, double* t, double* x_star, double* x,
                        double* wrench, int* phase, int* primitive) {
  if (!trace) return arg_error("null trace");
  if (index < 0 || index >= static_cast<int>(trace->trace.steps.size()))
    return arg_error("step index out of range");
  const TraceStep& s = trace->trace.steps[static_cast<size_t>(index)];
  if (t) *t = s.t;
  if (x_star) Eigen::Map<Vec>(x_star, s.x_star.size()) = s.x_star;
  if (x) Eigen::Map<Vec>(x, s.x.size()) = s.x;
  if (wrench) Eigen::Map<Vec>(wrench, s.wrench.size()) = s.wrench;
  if (phase) *phase = s.phase;
  if (primitive) *primitive = s.primitive;
  return PS_OK;
}

void ps_trace_free(ps_trace* trace) { delete trace; }

ps_status ps_compare_features(const ps_demo* const* demos, int n_demos, int n_phases,
                              const ps_em_config* config, char** out_json) {
  if (!demos || n_demos < 1 || !out_json) return arg_error("null argument");
  return guard([&] {
    auto ds = to_demos(demos, n_demos);
    CompareReport rep = compare_feature_modes(ds, n_phases, to_config(config));
    nlohmann::ordered_json j;
    j["n_demos"] = rep.n_demos;
    j["n_phases"] = n_phases;
    j["true_switches"] = rep.true_switches;
    auto mode = [](const FeatureModeReport& r) {
      nlohmann::ordered_json m;
      m["accuracy"] = r.accuracy;
      m["switches"] = r.switches;
      m["spurious_switches"] = r.spurious;
      return m;
    };
    j["wrench"] = mode(rep.wrench);
    j["state"] = mode(rep.state);
    const std::string text = j.dump(2) + "\n";
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out_json = buf;
  });
}

void ps_string_free(char* text) { delete[] text; }

}  // extern "C"
