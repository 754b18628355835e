#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include "poissonlab.h"

namespace fs = std::filesystem;

TEST_CASE("version and status names") {
  CHECK(std::strlen(plab_version()) > 0);
  CHECK(std::string(plab_status_name(PLAB_OK)) == "ok");
  CHECK(std::string(plab_status_name(PLAB_ERR_CONFIG)) == "config_error");
}

TEST_CASE("model lifecycle and window mass") {
  plab_model* m = nullptr;
  const double lo[1] = {-5.0}, hi[1] = {5.0};
  REQUIRE(plab_model_create("lebesgue", 0.0, 1, lo, hi, &m) == PLAB_OK);
  int dim = 0;
  CHECK(plab_model_dimension(m, &dim) == PLAB_OK);
  CHECK(dim == 1);
  double d = 0.0;
  const double x[1] = {0.3};
  CHECK(plab_model_density(m, x, &d) == PLAB_OK);
  CHECK(d == doctest::Approx(1.0));
  double mass = 0.0;
  const double wlo[1] = {0.0}, whi[1] = {2.0};
  CHECK(plab_model_window_mass(m, wlo, whi, 0.0, 0.5, &mass) == PLAB_OK);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
  plab_model_free(m);
}

TEST_CASE("window mass outside the declared region reports a domain error") {
  plab_model* m = nullptr;
  const double lo[1] = {-1.0}, hi[1] = {1.0};
  REQUIRE(plab_model_create("lebesgue", 0.0, 1, lo, hi, &m) == PLAB_OK);
  double mass = 0.0;
  const double wlo[1] = {0.0}, whi[1] = {30.0};
  CHECK(plab_model_window_mass(m, wlo, whi, 0.0, 1.0, &mass) == PLAB_ERR_DOMAIN);
  CHECK(std::strlen(plab_last_error()) > 0);
  plab_model_free(m);
}

TEST_CASE("bad catalog name reports a config error") {
  plab_model* m = nullptr;
  const double lo[1] = {-1.0}, hi[1] = {1.0};
  CHECK(plab_model_create("nope", 0.0, 1, lo, hi, &m) == PLAB_ERR_CONFIG);
}

TEST_CASE("simulation through the C surface is reproducible and Poisson") {
  plab_model* m = nullptr;
  const double lo[1] = {-2.0}, hi[1] = {3.0};
  REQUIRE(plab_model_create("lebesgue", 0.0, 1, lo, hi, &m) == PLAB_OK);
  const double wlo[1] = {0.0}, whi[1] = {1.0};

  double total = 0.0;
  const int reps = 20000;
  for (int r = 0; r < reps; ++r) {
    double* pts = nullptr;
    int count = -1;
    REQUIRE(plab_simulate(m, wlo, whi, 0.0, 1.0, 99, r, &pts, &count) == PLAB_OK);
    total += count;
    for (int i = 0; i < count; ++i) {
      CHECK(pts[2 * i] >= 0.0);
      CHECK(pts[2 * i] <= 1.0);
      CHECK(pts[2 * i + 1] >= 0.0);
      CHECK(pts[2 * i + 1] <= 1.0);
    }
    plab_buffer_free(pts);
  }
  CHECK(std::abs(total / reps - 1.0) < 0.03);

  double *a = nullptr, *b = nullptr;
  int ca = 0, cb = 0;
  REQUIRE(plab_simulate(m, wlo, whi, 0.0, 1.0, 7, 3, &a, &ca) == PLAB_OK);
  REQUIRE(plab_simulate(m, wlo, whi, 0.0, 1.0, 7, 3, &b, &cb) == PLAB_OK);
  REQUIRE(ca == cb);
  for (int i = 0; i < 2 * ca; ++i) CHECK(a[i] == b[i]);
  plab_buffer_free(a);
  plab_buffer_free(b);
  plab_model_free(m);
}

TEST_CASE("plab_run executes the simulate subcommand") {
  const std::string out = "test_out_capi";
  fs::remove_all(out);
  const std::string cfg = R"({
    "seed": 5,
    "model": {"name": "lebesgue", "dimension": 1},
    "window": {"lo": [0], "hi": [1]},
    "budgets": {"replicates": 2000}
  })";
  int exit_code = -1;
  char* report = nullptr;
  CHECK(plab_run("simulate", cfg.c_str(), out.c_str(), -1, 1, &exit_code, &report) == PLAB_OK);
  CHECK(exit_code == 0);
  REQUIRE(report != nullptr);
  CHECK(std::strlen(report) > 0);
  plab_string_free(report);
  CHECK(fs::exists(fs::path(out) / "points.csv"));
  fs::remove_all(out);
}

TEST_CASE("plab_run maps config problems to exit 2") {
  int exit_code = -1;
  CHECK(plab_run("simulate", R"({"window": {"lo": [0], "hi": [1]}})", nullptr, -1, 0,
                 &exit_code, nullptr) == PLAB_ERR_CONFIG);
  CHECK(exit_code == 2);
  CHECK(plab_run("bogus", R"({"seed": 1, "window": {"lo": [0], "hi": [1]}})", nullptr, -1, 0,
                 &exit_code, nullptr) == PLAB_ERR_CONFIG);
  CHECK(exit_code == 2);
}
