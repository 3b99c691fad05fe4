#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <phaseseg/phaseseg.h>

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path(name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

struct SmallDemo {
  std::vector<double> t, s, w;
  int m = 2, dw = 1, n = 6;
};

SmallDemo ramp_demo() {
  SmallDemo d;
  for (int i = 0; i < d.n; ++i) {
    d.t.push_back(0.1 * i);
    d.s.push_back(0.5 * i);
    d.s.push_back(1.0 - 0.25 * i);
    d.w.push_back(0.0);
  }
  return d;
}

}  // namespace

TEST_CASE("demo handles expose the stored samples") {
  SmallDemo d = ramp_demo();
  ps_demo* demo = nullptr;
  REQUIRE(ps_demo_create(d.t.data(), d.s.data(), d.m, d.w.data(), d.dw, d.n, "ramp", &demo) ==
          PS_OK);
  CHECK(ps_demo_length(demo) == 6);
  CHECK(ps_demo_state_dim(demo) == 2);
  CHECK(ps_demo_wrench_dim(demo) == 1);
  CHECK(ps_demo_dt(demo) == doctest::Approx(0.1));
  CHECK(std::string(ps_demo_label(demo)) == "ramp");
  CHECK(ps_demo_has_labels(demo) == 0);

  double t = -1, s[2] = {0, 0}, w[1] = {9};
  REQUIRE(ps_demo_point(demo, 3, &t, s, w) == PS_OK);
  CHECK(t == d.t[3]);
  CHECK(s[0] == d.s[6]);
  CHECK(s[1] == d.s[7]);
  CHECK(w[0] == 0.0);
  CHECK(ps_demo_point(demo, 6, &t, s, w) == PS_ERR_INVALID_ARGUMENT);

  CHECK(ps_demo_validate(demo) == 0);
  ps_demo_free(demo);
}

TEST_CASE("creation guards and validation surface problems") {
  SmallDemo d = ramp_demo();
  ps_demo* demo = nullptr;
  CHECK(ps_demo_create(nullptr, d.s.data(), d.m, d.w.data(), d.dw, d.n, "x", &demo) ==
        PS_ERR_INVALID_ARGUMENT);
  CHECK(std::string(ps_last_error()) == "null argument");
  CHECK(ps_demo_create(d.t.data(), d.s.data(), d.m, d.w.data(), d.dw, 1, "x", &demo) ==
        PS_ERR_INVALID_ARGUMENT);

  d.s[4] = std::nan("");
  REQUIRE(ps_demo_create(d.t.data(), d.s.data(), d.m, d.w.data(), d.dw, d.n, "bad", &demo) ==
          PS_OK);
  const int n_violations = ps_demo_validate(demo);
  REQUIRE(n_violations >= 1);
  CHECK(std::string(ps_demo_violation(demo, 0)).find("non-finite") != std::string::npos);
  CHECK(std::string(ps_demo_violation(demo, n_violations)) == "");
  ps_demo_free(demo);

  CHECK(ps_demo_length(nullptr) == 0);
  CHECK(ps_demo_dt(nullptr) == 0.0);
  CHECK(std::string(ps_demo_label(nullptr)) == "");
}

TEST_CASE("status codes map the failure kinds") {
  ps_model* model = nullptr;
  CHECK(ps_model_load("capi_no_such_model.json", &model) == PS_ERR_IO);
  CHECK(std::string(ps_last_error()).find("cannot open") != std::string::npos);

  ps_demo* demo = nullptr;
  CHECK(ps_demo_read("capi_no_such_demo.csv", &demo) == PS_ERR_IO);
  CHECK(ps_demo_read(nullptr, &demo) == PS_ERR_INVALID_ARGUMENT);

  ps_world* world = nullptr;
  CHECK(ps_world_from_json("{\"scenario\":\"valley\",\"bogus\":1}", &world) == PS_ERR_IO);
  CHECK(std::string(ps_last_error()).find("unknown world field 'bogus'") != std::string::npos);
  CHECK(ps_world_from_json("{\"scenario\":\"mars\"}", &world) == PS_ERR_IO);
}

TEST_CASE("worlds come from fixtures or JSON") {
  ps_world* valley = nullptr;
  REQUIRE(ps_world_fixture(PS_SCENARIO_VALLEY, 0.0, 0.0, &valley) == PS_OK);
  CHECK(ps_world_state_dim(valley) == 3);
  ps_world_free(valley);

  ps_world* hose = nullptr;
  REQUIRE(ps_world_fixture(PS_SCENARIO_HOSE, 0.0, 0.0, &hose) == PS_OK);
  CHECK(ps_world_state_dim(hose) == 6);
  ps_world_free(hose);

  ps_world* custom = nullptr;
  REQUIRE(ps_world_from_json("{\"scenario\":\"valley\",\"friction_mu\":0.3,\"noise_pos\":0}",
                             &custom) == PS_OK);
  CHECK(ps_world_state_dim(custom) == 3);
  ps_world_free(custom);
}

TEST_CASE("demo files round trip through the C API") {
  ps_world* world = nullptr;
  REQUIRE(ps_world_fixture(PS_SCENARIO_FREE, 3e-4, 0.05, &world) == PS_OK);
  ps_demo* demo = nullptr;
  REQUIRE(ps_generate_fixture(world, 0, 0.01, 42, &demo) == PS_OK);
  REQUIRE(ps_demo_has_labels(demo) == 1);

  TempFile fcsv("capi_demo.csv"), flab("capi_demo.labels.csv");
  REQUIRE(ps_demo_write_csv(demo, fcsv.path.c_str()) == PS_OK);
  REQUIRE(ps_demo_save_labels(demo, flab.path.c_str()) == PS_OK);

  ps_demo* back = nullptr;
  REQUIRE(ps_demo_read(fcsv.path.c_str(), &back) == PS_OK);
  REQUIRE(ps_demo_length(back) == ps_demo_length(demo));
  CHECK(ps_demo_has_labels(back) == 0);
  REQUIRE(ps_demo_load_labels(back, flab.path.c_str()) == PS_OK);
  REQUIRE(ps_demo_has_labels(back) == 1);

  const int n = ps_demo_length(demo);
  std::vector<int> lab_a(n), lab_b(n);
  REQUIRE(ps_demo_labels(demo, lab_a.data()) == PS_OK);
  REQUIRE(ps_demo_labels(back, lab_b.data()) == PS_OK);
  CHECK(lab_a == lab_b);

  double ta, tb, sa[3], sb[3], wa[3], wb[3];
  REQUIRE(ps_demo_point(demo, n - 1, &ta, sa, wa) == PS_OK);
  REQUIRE(ps_demo_point(back, n - 1, &tb, sb, wb) == PS_OK);
  CHECK(ta == tb);
  for (int i = 0; i < 3; ++i) {
    CHECK(sa[i] == sb[i]);
    CHECK(wa[i] == wb[i]);
  }

  ps_demo_free(back);
  ps_demo_free(demo);
  ps_world_free(world);
}

TEST_CASE("training, segmentation and the online filter agree") {
  ps_world* world = nullptr;
  REQUIRE(ps_world_fixture(PS_SCENARIO_VALLEY, 3e-4, 0.05, &world) == PS_OK);
  ps_demo* left = nullptr;
  ps_demo* right = nullptr;
  REQUIRE(ps_generate_fixture(world, 0, 0.01, 42, &left) == PS_OK);
  REQUIRE(ps_generate_fixture(world, 1, 0.01, 43, &right) == PS_OK);

  ps_em_config config;
  ps_em_config_init(&config);
  CHECK(config.max_iters > 0);
  CHECK(config.ridge > 0.0);
  config.max_iters = 3;
  config.lr_lambda = 1e-5;
  config.lr_iters = 20;
  config.seed = 5;

  const ps_demo* demos[] = {left, right};
  ps_model* model = nullptr;
  ps_em_report* report = nullptr;
  REQUIRE(ps_train(demos, 2, 2, &config, PS_FEATURE_WRENCH, &model, &report) == PS_OK);
  CHECK(ps_model_n_phases(model) == 2);
  CHECK(ps_model_state_dim(model) == 3);
  CHECK(ps_model_feature_dim(model) == 4);
  CHECK(ps_model_feature_source(model) == PS_FEATURE_WRENCH);
  const int iters = ps_em_report_iterations(report);
  REQUIRE(iters >= 1);
  REQUIRE(iters <= 3);
  CHECK(std::isfinite(ps_em_report_loglik(report, iters - 1)));

  ps_segmentation* seg = nullptr;
  REQUIRE(ps_segment(model, left, &seg) == PS_OK);
  const int n = ps_demo_length(left);
  REQUIRE(ps_segmentation_length(seg) == n - 1);
  for (int k : {0, n / 2, n - 2}) {
    double total = 0.0;
    for (int j = 0; j < 2; ++j) total += ps_segmentation_prob(seg, k, j);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    const int lab = ps_segmentation_label(seg, k);
    CHECK(lab >= 0);
    CHECK(lab < 2);
  }

  std::vector<double> t(n), s(3 * n), w(3 * n);
  for (int i = 0; i < n; ++i)
    REQUIRE(ps_demo_point(left, i, &t[i], &s[3 * i], &w[3 * i]) == PS_OK);
  ps_filter* filter = nullptr;
  REQUIRE(ps_filter_create(model, &s[0], &w[0], &s[3], &filter) == PS_OK);
  CHECK(ps_filter_phase(filter) == ps_segmentation_label(seg, 0));
  bool phases_match = true;
  for (int i = 1; i + 1 < n; ++i) {
    REQUIRE(ps_filter_step(filter, &s[3 * i], &w[3 * i], &s[3 * (i + 1)]) == PS_OK);
    if (ps_filter_phase(filter) != ps_segmentation_label(seg, i)) phases_match = false;
  }
  CHECK(phases_match);
  double log_alpha[2];
  REQUIRE(ps_filter_log_alpha(filter, log_alpha) == PS_OK);
  CHECK(std::isfinite(log_alpha[0]));
  ps_filter_free(filter);

  double err0 = -1.0, err1 = -1.0;
  REQUIRE(ps_prediction_error(model, left, 0, &err0) == PS_OK);
  REQUIRE(ps_prediction_error(model, left, 1, &err1) == PS_OK);
  CHECK(err0 >= 0.0);
  CHECK(err1 >= 0.0);
  CHECK(ps_prediction_error(model, left, 7, &err0) != PS_OK);

  TempFile fmodel("capi_model.json");
  REQUIRE(ps_model_save(model, fmodel.path.c_str()) == PS_OK);
  ps_model* loaded = nullptr;
  REQUIRE(ps_model_load(fmodel.path.c_str(), &loaded) == PS_OK);
  CHECK(ps_model_n_phases(loaded) == 2);
  ps_segmentation* seg2 = nullptr;
  REQUIRE(ps_segment(loaded, left, &seg2) == PS_OK);
  bool labels_match = true;
  for (int k = 0; k + 1 < n; ++k)
    if (ps_segmentation_label(seg, k) != ps_segmentation_label(seg2, k)) labels_match = false;
  CHECK(labels_match);

  ps_segmentation_free(seg2);
  ps_segmentation_free(seg);
  ps_model_free(loaded);
  ps_em_report_free(report);
  ps_model_free(model);
  ps_demo_free(right);
  ps_demo_free(left);
  ps_world_free(world);
}

TEST_CASE("BIC sweep reports per-candidate rows including failures") {
  SmallDemo d = ramp_demo();
  ps_demo* demo = nullptr;
  REQUIRE(ps_demo_create(d.t.data(), d.s.data(), d.m, d.w.data(), d.dw, d.n, "ramp", &demo) ==
          PS_OK);
  const ps_demo* demos[] = {demo};

  ps_em_config config;
  ps_em_config_init(&config);
  config.max_iters = 2;
  config.lr_iters = 5;

  ps_bic_table* table = nullptr;
  REQUIRE(ps_bic_sweep(demos, 1, 1, 2, &config, 0, PS_FEATURE_WRENCH, &table) == PS_OK);
  REQUIRE(ps_bic_rows(table) == 2);
  CHECK(ps_bic_selected(table) == 1);

  int n_phases = 0;
  double loglik = 0.0, bic = 0.0;
  long long n_params = 0, n_obs = 0;
  REQUIRE(ps_bic_row(table, 0, &n_phases, &loglik, &n_params, &n_obs, &bic) == PS_OK);
  CHECK(n_phases == 1);
  CHECK(n_obs == 6);
  CHECK(n_params == 2);
  CHECK(std::isfinite(loglik));
  CHECK(bic == doctest::Approx(-2.0 * loglik + 2.0 * std::log(6.0)));

  CHECK(ps_bic_row(table, 1, &n_phases, &loglik, &n_params, &n_obs, &bic) == PS_ERR_NUMERIC);
  CHECK(std::string(ps_bic_message(table, 1)).find("distinct") != std::string::npos);
  CHECK(ps_bic_row(table, 2, nullptr, nullptr, nullptr, nullptr, nullptr) ==
        PS_ERR_INVALID_ARGUMENT);

  ps_bic_table_free(table);
  ps_demo_free(demo);
}

TEST_CASE("primitives and reproduction run end to end") {
  ps_world* world = nullptr;
  REQUIRE(ps_world_fixture(PS_SCENARIO_FREE, 3e-4, 0.05, &world) == PS_OK);
  ps_demo* demo = nullptr;
  REQUIRE(ps_generate_fixture(world, 0, 0.01, 9, &demo) == PS_OK);
  const ps_demo* demos[] = {demo};

  ps_em_config config;
  ps_em_config_init(&config);
  config.max_iters = 2;
  config.lr_iters = 5;
  config.lr_lambda = 1e-5;

  ps_model* model = nullptr;
  REQUIRE(ps_train(demos, 1, 1, &config, PS_FEATURE_WRENCH, &model, nullptr) == PS_OK);

  ps_primitives* prims = nullptr;
  REQUIRE(ps_extract_primitives(model, demos, 1, &prims) == PS_OK);
  REQUIRE(ps_primitives_count(prims) == 1);
  double v_dir[3], speed = 0.0;
  int low_confidence = -1;
  REQUIRE(ps_primitive(prims, 0, v_dir, &speed, &low_confidence) == PS_OK);
  const double norm = std::sqrt(v_dir[0] * v_dir[0] + v_dir[1] * v_dir[1] + v_dir[2] * v_dir[2]);
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(speed > 0.0);
  CHECK(low_confidence == 0);
  CHECK(ps_primitive(prims, 1, v_dir, &speed, &low_confidence) == PS_ERR_INVALID_ARGUMENT);

  const double start[3] = {0.0, 0.0, 0.1};
  ps_trace* trace = nullptr;
  REQUIRE(ps_reproduce(model, prims, world, start, 0.01, 20, 0.05, 1, &trace) == PS_OK);
  const int len = ps_trace_length(trace);
  REQUIRE(len >= 1);
  REQUIRE(len <= 20);
  double t = -1, x_star[3], x[3], wrench[3];
  int phase = -1, primitive = -1;
  REQUIRE(ps_trace_step(trace, len - 1, &t, x_star, x, wrench, &phase, &primitive) == PS_OK);
  CHECK(t > 0.0);
  CHECK(phase == 0);
  CHECK(primitive == 0);
  CHECK(ps_trace_step(trace, len, &t, x_star, x, wrench, &phase, &primitive) ==
        PS_ERR_INVALID_ARGUMENT);

  ps_trace_free(trace);
  ps_primitives_free(prims);
  ps_model_free(model);
  ps_demo_free(demo);
  ps_world_free(world);
}

TEST_CASE("feature comparison needs labels and emits JSON") {
  SmallDemo d = ramp_demo();
  ps_demo* unlabeled = nullptr;
  REQUIRE(ps_demo_create(d.t.data(), d.s.data(), d.m, d.w.data(), d.dw, d.n, "ramp", &unlabeled) ==
          PS_OK);
  const ps_demo* un[] = {unlabeled};
  ps_em_config config;
  ps_em_config_init(&config);
  config.max_iters = 2;
  config.lr_iters = 5;
  char* json = nullptr;
  CHECK(ps_compare_features(un, 1, 1, &config, &json) != PS_OK);
  CHECK(std::string(ps_last_error()).find("regime labels") != std::string::npos);
  ps_demo_free(unlabeled);

  ps_world* world = nullptr;
  REQUIRE(ps_world_fixture(PS_SCENARIO_FREE, 3e-4, 0.05, &world) == PS_OK);
  ps_demo* demo = nullptr;
  REQUIRE(ps_generate_fixture(world, 0, 0.01, 4, &demo) == PS_OK);
  const ps_demo* demos[] = {demo};
  REQUIRE(ps_compare_features(demos, 1, 1, &config, &json) == PS_OK);
  REQUIRE(json != nullptr);
  CHECK(std::strstr(json, "\"wrench\"") != nullptr);
  CHECK(std::strstr(json, "\"state\"") != nullptr);
  CHECK(std::strstr(json, "\"accuracy\"") != nullptr);
  CHECK(std::strstr(json, "\"spurious_switches\"") != nullptr);
  ps_string_free(json);
  ps_demo_free(demo);
  ps_world_free(world);
}
