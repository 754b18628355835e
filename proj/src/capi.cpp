#include "poissonlab.h"

#include <cstring>
#include <string>

#include "poissonlab/harness.hpp"

using namespace plab;

namespace {

thread_local std::string g_last_error;

plab_status set_error(plab_status s, const char* what) {
  g_last_error = what ? what : "";
  return s;
}

plab_status translate(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return set_error(PLAB_ERR_CONFIG, e.what());
  if (dynamic_cast<const DomainError*>(&e)) return set_error(PLAB_ERR_DOMAIN, e.what());
  if (dynamic_cast<const BufferOverflowError*>(&e))
    return set_error(PLAB_ERR_BUFFER_OVERFLOW, e.what());
  if (dynamic_cast<const ContractError*>(&e)) return set_error(PLAB_ERR_CONTRACT, e.what());
  if (dynamic_cast<const ParameterError*>(&e))
    return set_error(PLAB_ERR_INVALID_ARGUMENT, e.what());
  return set_error(PLAB_ERR_INTERNAL, e.what());
}

}  // namespace

struct plab_model {
  std::shared_ptr<const IntensityModel> impl;
};

extern "C" {

const char* plab_version(void) {
  static const std::string v = library_version();
  return v.c_str();
}

const char* plab_status_name(plab_status s) {
  switch (s) {
    case PLAB_OK: return "ok";
    case PLAB_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case PLAB_ERR_DOMAIN: return "domain_error";
    case PLAB_ERR_CONFIG: return "config_error";
    case PLAB_ERR_CONTRACT: return "contract_error";
    case PLAB_ERR_BUFFER_OVERFLOW: return "buffer_overflow";
    case PLAB_ERR_INTERNAL: return "internal_error";
  }
  return "unknown";
}

const char* plab_last_error(void) { return g_last_error.c_str(); }

plab_status plab_model_create(const char* name, double param, int dim, const double* lo,
                              const double* hi, plab_model** out) {
  if (!name || !lo || !hi || !out || dim < 1 || dim > 3)
    return set_error(PLAB_ERR_INVALID_ARGUMENT, "plab_model_create: bad arguments");
  try {
    Box declared = Box::make(dim, lo, hi);
    for (int i = 0; i < dim; ++i) {
      declared.axes[i].lo = std::min(declared.axes[i].lo, 0.0);
      declared.axes[i].hi = std::max(declared.axes[i].hi, 0.0);
    }
    auto model = make_catalog_model(name, param, dim, declared);
    *out = new plab_model{std::move(model)};
    return PLAB_OK;
  } catch (const std::exception& e) {
    return translate(e);
  }
}

void plab_model_free(plab_model* m) { delete m; }

plab_status plab_model_dimension(const plab_model* m, int* out_dim) {
  if (!m || !out_dim) return set_error(PLAB_ERR_INVALID_ARGUMENT, "null argument");
  *out_dim = m->impl->dim();
  return PLAB_OK;
}

plab_status plab_model_density(const plab_model* m, const double* point, double* out) {
  if (!m || !point || !out) return set_error(PLAB_ERR_INVALID_ARGUMENT, "null argument");
  try {
    Mark u{0, 0, 0};
    for (int i = 0; i < m->impl->dim(); ++i) u[i] = point[i];
    *out = m->impl->density(u);
    return PLAB_OK;
  } catch (const std::exception& e) {
    return translate(e);
  }
}

plab_status plab_model_window_mass(const plab_model* m, const double* lo, const double* hi,
                                   double t0, double t1, double* out) {
  if (!m || !lo || !hi || !out) return set_error(PLAB_ERR_INVALID_ARGUMENT, "null argument");
  try {
    const Window w{Box::make(m->impl->dim(), lo, hi), Interval{t0, t1}};
    *out = window_mass(*m->impl, w);
    return PLAB_OK;
  } catch (const std::exception& e) {
    return translate(e);
  }
}

plab_status plab_simulate(const plab_model* m, const double* lo, const double* hi, double t0,
                          double t1, unsigned long long seed, unsigned long long replicate,
                          double** out_points, int* out_count) {
  if (!m || !lo || !hi || !out_points || !out_count)
    return set_error(PLAB_ERR_INVALID_ARGUMENT, "null argument");
  try {
    const int d = m->impl->dim();
    const Window w{Box::make(d, lo, hi), Interval{t0, t1}};
    Rng rng(StreamKey{seed, StreamPurpose::simulate, replicate, 0});
    const Configuration conf = simulate(*m->impl, w, rng);
    const std::size_t stride = static_cast<std::size_t>(d) + 1;
    double* buf = new double[std::max<std::size_t>(conf.size() * stride, 1)];
    std::size_t k = 0;
    for (const Point& p : conf.points()) {
      for (int i = 0; i < d; ++i) buf[k++] = p.u[i];
      buf[k++] = p.t;
    }
    *out_points = buf;
    *out_count = static_cast<int>(conf.size());
    return PLAB_OK;
  } catch (const std::exception& e) {
    return translate(e);
  }
}

void plab_buffer_free(double* buf) { delete[] buf; }

plab_status plab_run(const char* subcommand, const char* config_json, const char* out_dir,
                     long long seed_override, int workers, int* exit_code, char** report) {
  if (!subcommand || !config_json || !exit_code)
    return set_error(PLAB_ERR_INVALID_ARGUMENT, "null argument");
  try {
    const RunOutcome outcome = run_subcommand(
        subcommand, config_json, out_dir ? out_dir : "", seed_override, workers);
    *exit_code = outcome.exit_code;
    if (report) {
      char* buf = new char[outcome.report.size() + 1];
      std::memcpy(buf, outcome.report.c_str(), outcome.report.size() + 1);
      *report = buf;
    }
    return PLAB_OK;
  } catch (const ConfigError& e) {
    *exit_code = 2;
    return translate(e);
  } catch (const std::exception& e) {
    *exit_code = 2;
    return translate(e);
  }
}

void plab_string_free(char* s) { delete[] s; }

}  // extern "C"
