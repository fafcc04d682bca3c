#include "config.hpp"

#include <fstream>

namespace hamtomo::cli {

using nlohmann::json;

json load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config file " + path);
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (!j.contains("schema") || j["schema"] != kSchema) {
        throw ConfigError(path + ": missing or unsupported schema key (want '" +
                          std::string(kSchema) + "')");
    }
    return j;
}

Matrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw ConfigError("matrix: expected a nonempty array of rows");
    const int n = static_cast<int>(j.size());
    Matrix m(n);
    for (int i = 0; i < n; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != n) {
            throw ConfigError("matrix: row " + std::to_string(i) + " has wrong length");
        }
        for (int k = 0; k < n; ++k) {
            const auto& e = row[static_cast<std::size_t>(k)];
            if (e.is_number()) {
                m(i, k) = e.get<double>();
            } else if (e.is_array() && e.size() == 2) {
                m(i, k) = cplx(e[0].get<double>(), e[1].get<double>());
            } else {
                throw ConfigError("matrix: entries must be numbers or [re, im] pairs");
            }
        }
    }
    return m;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.dim(); ++i) {
        json row = json::array();
        for (int k = 0; k < m.dim(); ++k) row.push_back({m(i, k).real(), m(i, k).imag()});
        rows.push_back(row);
    }
    return rows;
}

namespace {

Vec3 vec_from_json(const json& j) {
    if (!j.is_array() || j.size() < 2) throw ConfigError("vector: expected [x, y] or [x, y, z]");
    Vec3 v{j[0].get<double>(), j[1].get<double>(), 0.0};
    if (j.size() > 2) v.z = j[2].get<double>();
    return v;
}

GaussianBump bump_from_json(const json& j) {
    GaussianBump b;
    b.amplitude = j.at("amplitude").get<double>();
    b.center = vec_from_json(j.at("center"));
    b.sigma = j.at("sigma").get<double>();
    return b;
}

}  // namespace

ConvexDomain domain_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    const int dim = j.at("dim").get<int>();
    if (kind == "ball") {
        return ConvexDomain::ball(dim, vec_from_json(j.at("center")), j.at("radius").get<double>());
    }
    if (kind == "box") {
        return ConvexDomain::box(dim, vec_from_json(j.at("lo")), vec_from_json(j.at("hi")));
    }
    throw ConfigError("domain: unknown kind '" + kind + "'");
}

RayFamily rays_from_json(const json& j, const ConvexDomain& domain) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "parallel2d") {
        return parallel_beam(domain, j.at("n_angles").get<int>(), j.at("n_offsets").get<int>());
    }
    if (kind == "beam3d") {
        std::vector<int> axes = {0, 1, 2};
        if (j.contains("axes")) axes = j.at("axes").get<std::vector<int>>();
        return beam_3d(domain, j.at("n_planes").get<int>(), j.at("n_angles").get<int>(),
                       j.at("n_offsets").get<int>(), axes);
    }
    throw ConfigError("rays: unknown kind '" + kind + "'");
}

GridSpec grid_from_json(const json& j) {
    return GridSpec::square2d(j.at("n").get<int>(), j.at("extent").get<double>());
}

PhantomField phantom_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    PhantomField out;
    if (kind == "constant") {
        out.matrix_field = phantom_constant(matrix_from_json(j.at("value")));
    } else if (kind == "gaussian_bump") {
        out.matrix_field = phantom_gaussian_bump(matrix_from_json(j.at("base")),
                                                 bump_from_json(j), matrix_from_json(j.at("direction")));
    } else if (kind == "two_bumps") {
        out.matrix_field = phantom_two_bumps(
            matrix_from_json(j.at("base")), bump_from_json(j.at("bump1")),
            matrix_from_json(j.at("bump1").at("direction")), bump_from_json(j.at("bump2")),
            matrix_from_json(j.at("bump2").at("direction")));
    } else if (kind == "layered_sphere") {
        out.is_matrix = false;
        out.scalar_field = phantom_layered_sphere(
            vec_from_json(j.at("center")), j.at("radii").get<std::vector<double>>(),
            j.at("values").get<std::vector<double>>(), j.at("smooth_width").get<double>());
    } else if (kind == "scalar_gaussian_bump") {
        out.is_matrix = false;
        out.scalar_field = scalar_gaussian_bump(j.value("base", 0.0), bump_from_json(j));
    } else if (kind == "neutrino") {
        NeutrinoParameters params;
        params.pmns = matrix_from_json(j.at("pmns"));
        const auto ms = j.at("mass_squares").get<std::vector<double>>();
        if (ms.size() != 3) throw ConfigError("neutrino: mass_squares needs 3 entries");
        params.mass_squares = {ms[0], ms[1], ms[2]};
        params.energy = j.at("energy").get<double>();
        params.fermi_constant = j.at("fermi_constant").get<double>();
        params.antineutrino = j.value("antineutrino", false);
        PhantomField density = phantom_from_json(j.at("density"));
        if (density.is_matrix) throw ConfigError("neutrino: density must be a scalar phantom");
        out.matrix_field = neutrino_hamiltonian(params, density.scalar_field);
    } else {
        throw UnknownPhantom("phantom: unknown kind '" + kind + "'");
    }
    return out;
}

StateSets states_from_json(const json& j, int n) {
    if (j.at("kind") == "basis") return StateSets::orthonormal_basis(n);
    if (j.at("kind") == "explicit") {
        auto parse_set = [](const json& arr) {
            std::vector<std::vector<cplx>> states;
            for (const auto& sv : arr) {
                std::vector<cplx> v;
                for (const auto& e : sv) v.push_back(cplx(e[0].get<double>(), e[1].get<double>()));
                states.push_back(std::move(v));
            }
            return states;
        };
        StateSets s;
        s.initial = parse_set(j.at("initial"));
        s.final = parse_set(j.at("final"));
        return s;
    }
    throw ConfigError("states: unknown kind");
}

}  // namespace hamtomo::cli
