#pragma once

#include "ddctrl/deepc.hpp"
#include "ddctrl/indirect.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace ddctrl {

/// One row per sample, header u1..um,y1..yp.
std::string trajectory_to_csv(const Trajectory& w);
Trajectory trajectory_from_csv(const std::string& text);

/// {"T": ..., "q": ..., "m": ..., "data": [[...], ...]}
std::string trajectory_to_json(const Trajectory& w);
Trajectory trajectory_from_json(const std::string& text);

/// {"A": [[...]], "B": ..., "C": ..., "D": ..., "order": n, "lag": l}
std::string model_to_json(const StateSpaceModel& model);
StateSpaceModel model_from_json(const std::string& text);

std::string lotka_volterra_to_json(const LotkaVolterraParams& p);

/// K as a headerless CSV matrix.
std::string predictor_to_csv(const SpcPredictor& pred);

std::string solution_to_json(const DeepcSolution& sol, const Regularizer& reg, double realized_cost_pct,
                             std::uint64_t seed);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace ddctrl
