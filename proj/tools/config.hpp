// config.hpp — JSON experiment configuration: one file determines an
// experiment (domain, field, rays, states, solver, seeds, output paths).
#pragma once

#include <nlohmann/json.hpp>

#include <string>

#include "hamtomo/field.hpp"
#include "hamtomo/geometry.hpp"
#include "hamtomo/matrix.hpp"
#include "hamtomo/measurement.hpp"

namespace hamtomo::cli {

inline constexpr const char* kSchema = "hamtomo-exp-1";

nlohmann::json load_config(const std::string& path);

Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Matrix& m);

ConvexDomain domain_from_json(const nlohmann::json& j);
RayFamily rays_from_json(const nlohmann::json& j, const ConvexDomain& domain);
GridSpec grid_from_json(const nlohmann::json& j);

// Phantom configs build either a matrix or a scalar field.
struct PhantomField {
    bool is_matrix = true;
    MatrixField matrix_field;
    ScalarField scalar_field;
};
PhantomField phantom_from_json(const nlohmann::json& j);

StateSets states_from_json(const nlohmann::json& j, int n);

}  // namespace hamtomo::cli
