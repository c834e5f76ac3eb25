/*************************************************************************************************
 * Experiment specifications and runner
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

#ifndef OTBB_EXPERIMENT_HPP
#define OTBB_EXPERIMENT_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "otbb/verify.hpp"

namespace otbb {

enum class ExperimentMode { kSolve, kVerify, kConverge, kJko, kMeshReport };

const char* mode_name(ExperimentMode m);
ExperimentMode mode_from_name(const std::string& s);

// Where the spatial model comes from: grid flags, a mesh file or an icosphere depth.
struct MeshSource {
  ModelKind kind = ModelKind::kFV;
  int dim = 1;
  Pt lo = Pt::Zero(), hi = Pt(1, 0, 0);
  int cells = 16;           // FV grids: cells along the first axis
  std::string mesh_file;    // FV JSON mesh or triangle OFF file
  int subdiv = -1;          // icosphere depth, tri only
  int flat_n = 0;           // flat unit-square triangulation, tri only
  MeanKind mean = MeanKind::kArithmetic;

  bool refinable() const { return mesh_file.empty(); }
  // Resolution of this source in the family's units.
  int resolution() const;
  ModelFamily family() const;
  std::shared_ptr<const DiscreteModel> build() const;
};

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::kPotential;
  double lambda = 1;
  Pt center = Pt::Zero();  // potential V(x) = |x - center|^2
};

struct OutputPaths {
  std::string csv, json, path;
};

struct ExperimentSpec {
  ExperimentMode mode = ExperimentMode::kSolve;
  MeshSource mesh;
  std::string rho0, rho1;  // mini-language or inline JSON
  std::vector<int> N{16};
  // Resolution schedule paired with N; empty means the mesh resolution for every row.
  std::vector<int> resolutions;
  std::vector<double> sigmas;  // converted to resolutions on grids
  std::optional<Oracle> oracle;  // required by converge, optional for solve
  PenaltySpec penalty;
  SolverOptions solver;
  std::vector<std::string> assumptions;  // verify: A1..A9, A'5, A7 (controllability)
  int levels = 3;
  std::uint64_t seed = 1;
  int draws = 8;
  OutputPaths out;
  std::string base_dir;  // relative file references resolve here

  // Schedules nonempty and referenced files present; throws kInvalidArgument / kIo.
  void validate() const;
  std::string to_json() const;
  static ExperimentSpec from_json(const std::string& text, const std::string& base_dir = {});
  static ExperimentSpec from_file(const std::string& path);
};

// Inline measures: dirac:x[,y[,z]] (unit atom), uniform:a,b (unit mass on [a,b]^dim),
// file:path.json, or a JSON object. Cell references resolve against `model`.
GenericMeasure parse_measure(const std::string& text, const DiscreteModel& model, const std::string& base_dir = {});

enum class RunStatus { kOk = 0, kNotConverged = 3, kVerificationFailed = 4 };

struct ExperimentResult {
  RunStatus status = RunStatus::kOk;
  std::string csv;      // deterministic
  std::string json;     // summary with a metadata block holding timing
  std::string path;     // solve/jko: path JSON
  std::vector<std::string> lines;  // one human-readable line per check or row
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

// Writes the non-empty outputs named in spec.out.
void write_outputs(const ExperimentSpec& spec, const ExperimentResult& res);

}  // namespace otbb

#endif
