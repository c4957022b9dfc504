#pragma once

#include <nlohmann/json.hpp>

#include "chronospec/linalg.hpp"

namespace chronospec {

// Dense dumps: {"rows": r, "cols": c, "data": [[re, im], ...]} in row-major
// order; vectors use {"size": n, "data": [[re, im], ...]}.

nlohmann::json matrix_to_json(const MatrixXc& m);
MatrixXc matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const VectorXc& v);
VectorXc vector_from_json(const nlohmann::json& j);

}  // namespace chronospec
