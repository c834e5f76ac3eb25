/*************************************************************************************************
 * C interface over the experiment runner and models
 *
 * Copyright 2026 The otbb Authors
 * Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file
 * except in compliance with the License.  You may obtain a copy of the License at
 *     https://www.apache.org/licenses/LICENSE-2.0
 * Unless required by applicable law or agreed to in writing, software distributed under the
 * License is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND,
 * either express or implied.  See the License for the specific language governing permissions
 * and limitations under the License.
 *************************************************************************************************/

#include "otbb/otbb.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "json.hpp"
#include "otbb/experiment.hpp"
#include "otbb/prox.hpp"

using namespace otbb;

struct otbb_experiment {
  ExperimentSpec spec;
};

struct otbb_result {
  ExperimentResult res;
};

struct otbb_model {
  std::shared_ptr<const DiscreteModel> model;
};

namespace {

thread_local otbb_status last_status = OTBB_OK;
thread_local std::string last_message;

otbb_status set_ok() {
  last_status = OTBB_OK;
  last_message.clear();
  return OTBB_OK;
}

otbb_status set_error(otbb_status st, const std::string& msg) {
  last_status = st;
  last_message = msg;
  return st;
}

// Runs fn and converts exceptions into status codes.
template <typename Fn>
otbb_status guarded(Fn&& fn) {
  try {
    fn();
    return set_ok();
  } catch (const Error& e) {
    return set_error(static_cast<otbb_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(OTBB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(OTBB_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void need(const void* p, const char* what) {
  if (!p) fail(ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

}  // namespace

extern "C" {

const char* otbb_version(void) { return "1.0.0"; }

const char* otbb_last_error(void) { return last_message.c_str(); }

otbb_status otbb_last_status(void) { return last_status; }

void otbb_free_string(char* s) { std::free(s); }

void otbb_set_jobs(int n) { set_jobs(n); }

otbb_status otbb_experiment_from_json(const char* json, const char* base_dir, otbb_experiment** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = nullptr;
    auto e = std::make_unique<otbb_experiment>();
    e->spec = ExperimentSpec::from_json(json, base_dir ? base_dir : "");
    *out = e.release();
  });
}

otbb_status otbb_experiment_from_file(const char* path, otbb_experiment** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto e = std::make_unique<otbb_experiment>();
    e->spec = ExperimentSpec::from_file(path);
    *out = e.release();
  });
}

void otbb_experiment_free(otbb_experiment* e) { delete e; }

otbb_status otbb_experiment_to_json(const otbb_experiment* e, char** out) {
  return guarded([&] {
    need(e, "experiment");
    need(out, "out");
    *out = dup_string(e->spec.to_json());
  });
}

otbb_status otbb_experiment_run(const otbb_experiment* e, otbb_result** out) {
  return guarded([&] {
    need(e, "experiment");
    need(out, "out");
    *out = nullptr;
    auto r = std::make_unique<otbb_result>();
    r->res = run_experiment(e->spec);
    *out = r.release();
  });
}

otbb_run_status otbb_result_status(const otbb_result* r) {
  return r ? static_cast<otbb_run_status>(r->res.status) : OTBB_RUN_OK;
}

const char* otbb_result_csv(const otbb_result* r) { return r ? r->res.csv.c_str() : ""; }

const char* otbb_result_json(const otbb_result* r) { return r ? r->res.json.c_str() : ""; }

const char* otbb_result_path(const otbb_result* r) { return r ? r->res.path.c_str() : ""; }

size_t otbb_result_line_count(const otbb_result* r) { return r ? r->res.lines.size() : 0; }

const char* otbb_result_line(const otbb_result* r, size_t i) {
  return r && i < r->res.lines.size() ? r->res.lines[i].c_str() : "";
}

otbb_status otbb_result_write(const otbb_experiment* e, const otbb_result* r) {
  return guarded([&] {
    need(e, "experiment");
    need(r, "result");
    write_outputs(e->spec, r->res);
  });
}

void otbb_result_free(otbb_result* r) { delete r; }

otbb_status otbb_model_create(const char* model_json, otbb_model** out) {
  return guarded([&] {
    need(model_json, "model_json");
    need(out, "out");
    *out = nullptr;
    nlohmann::json j;
    j["mode"] = "mesh-report";
    try {
      j["model"] = nlohmann::json::parse(model_json);
    } catch (const std::exception& ex) {
      fail(ErrorCode::kInvalidArgument, std::string("model JSON: ") + ex.what());
    }
    ExperimentSpec s = ExperimentSpec::from_json(j.dump());
    auto m = std::make_unique<otbb_model>();
    m->model = s.mesh.build();
    *out = m.release();
  });
}

void otbb_model_free(otbb_model* m) { delete m; }

int otbb_model_n_density(const otbb_model* m) { return m ? m->model->n_density() : 0; }

int otbb_model_n_momentum(const otbb_model* m) { return m ? m->model->n_momentum() : 0; }

double otbb_model_sigma(const otbb_model* m) { return m ? m->model->sigma() : 0.0; }

otbb_status otbb_model_sample(const otbb_model* m, const char* measure, double* out, size_t n) {
  return guarded([&] {
    need(m, "model");
    need(measure, "measure");
    need(out, "out");
    if (n != static_cast<size_t>(m->model->n_density()))
      fail(ErrorCode::kInvalidArgument, "output length does not match the number of densities");
    Vec P = m->model->sample_density(parse_measure(measure, *m->model));
    std::memcpy(out, P.data(), n * sizeof(double));
  });
}

otbb_status otbb_model_solve(const otbb_model* m, const double* P0, const double* P1, size_t n, int N,
                             const char* options_json, double* objective, int* converged, char** path_json) {
  return guarded([&] {
    need(m, "model");
    need(P0, "P0");
    need(P1, "P1");
    if (n != static_cast<size_t>(m->model->n_density()))
      fail(ErrorCode::kInvalidArgument, "density length does not match the model");
    SolverOptions opts;
    if (options_json) {
      nlohmann::json j;
      j["mode"] = "mesh-report";
      try {
        j["solver"] = nlohmann::json::parse(options_json);
      } catch (const std::exception& ex) {
        fail(ErrorCode::kInvalidArgument, std::string("options JSON: ") + ex.what());
      }
      opts = ExperimentSpec::from_json(j.dump()).solver;
    }
    Vec a = Eigen::Map<const Vec>(P0, static_cast<Eigen::Index>(n));
    Vec b = Eigen::Map<const Vec>(P1, static_cast<Eigen::Index>(n));
    SolveResult res = solve(assemble(m->model, a, b, N), opts);
    if (objective) *objective = res.stats.objective;
    if (converged) *converged = res.stats.converged ? 1 : 0;
    if (path_json) *path_json = dup_string(path_to_json(res.path));
  });
}

otbb_status otbb_prox_kinetic(double s_in, const double* m_in, int dim, double gamma, double w, double* s_out,
                              double* m_out) {
  return guarded([&] {
    need(m_in, "m_in");
    need(s_out, "s_out");
    need(m_out, "m_out");
    require(dim >= 1 && dim <= 3, "dim must be 1..3");
    require(gamma > 0 && w > 0, "gamma and w must be positive");
    KineticProxResult r = prox_kinetic(s_in, m_in, dim, gamma, w);
    *s_out = r.s;
    for (int i = 0; i < dim; ++i) m_out[i] = r.m[i];
  });
}

}  // extern "C"
