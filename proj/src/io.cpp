#include "cournot/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "cournot/errors.hpp"

namespace cournot {

using nlohmann::json;

namespace {

double require_number(const json& j, const char* field, const std::string& where) {
    if (!j.contains(field) || !j[field].is_number())
        throw ConfigError(where + ": missing numeric field \"" + field + "\"");
    return j[field].get<double>();
}

Eigen::VectorXd vector_from_json(const json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + ": expected an array");
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ConfigError(where + ": expected numbers");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected an array of rows");
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Eigen::MatrixXd m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw ConfigError(where + ": ragged rows");
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

}  // namespace

json tree_to_json(const ScenarioTree& tree) {
    json nodes = json::array();
    for (const TreeNode& nd : tree.nodes()) {
        json n{{"id", nd.id}, {"depth", nd.depth}, {"x", nd.x}, {"p", nd.p}};
        if (nd.parent >= 0)
            n["parent"] = nd.parent;
        else
            n["parent"] = nullptr;
        nodes.push_back(std::move(n));
    }
    return json{{"horizon", tree.horizon()}, {"nodes", std::move(nodes)}};
}

ScenarioTree tree_from_json(const json& j) {
    if (!j.is_object() || !j.contains("horizon") || !j.contains("nodes"))
        throw ConfigError("tree: expected {\"horizon\", \"nodes\"}");
    if (!j["horizon"].is_number_integer()) throw ConfigError("tree: horizon must be an integer");
    const int horizon = j["horizon"].get<int>();
    if (!j["nodes"].is_array()) throw ConfigError("tree: nodes must be an array");
    std::vector<TreeNode> nodes;
    nodes.reserve(j["nodes"].size());
    for (const json& n : j["nodes"]) {
        TreeNode nd;
        if (!n.contains("id") || !n["id"].is_number_integer())
            throw ConfigError("tree node: missing integer id");
        nd.id = n["id"].get<int>();
        const std::string where = "tree node " + std::to_string(nd.id);
        if (!n.contains("depth") || !n["depth"].is_number_integer())
            throw ConfigError(where + ": missing integer depth");
        nd.depth = n["depth"].get<int>();
        nd.x = require_number(n, "x", where);
        nd.p = require_number(n, "p", where);
        if (n.contains("parent") && !n["parent"].is_null()) {
            if (!n["parent"].is_number_integer())
                throw ConfigError(where + ": parent must be an integer or null");
            nd.parent = n["parent"].get<int>();
        }
        nodes.push_back(nd);
    }
    return ScenarioTree(horizon, std::move(nodes));
}

json measure_to_json(const DiscreteMeasure& nu) {
    json atoms = json::array();
    for (const Atom& a : nu.atoms())
        atoms.push_back(json{{"y", vector_to_json(a.point)}, {"w", a.weight}});
    return json{{"dim", nu.dim()}, {"atoms", std::move(atoms)}};
}

DiscreteMeasure measure_from_json(const json& j) {
    if (!j.is_object() || !j.contains("dim") || !j.contains("atoms"))
        throw ConfigError("measure: expected {\"dim\", \"atoms\"}");
    const int dim = j["dim"].get<int>();
    std::vector<Atom> atoms;
    for (const json& a : j["atoms"]) {
        if (!a.contains("y") || !a.contains("w")) throw ConfigError("atom: expected {\"y\",\"w\"}");
        atoms.push_back({vector_from_json(a["y"], "atom y"), a["w"].get<double>()});
    }
    return DiscreteMeasure(dim, std::move(atoms));
}

std::unique_ptr<MeanFieldCost> cost_from_json(const json& j) {
    if (!j.is_object() || !j.contains("kind")) throw ConfigError("cost: missing \"kind\"");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "price_impact") {
        PriceImpactParams p;
        p.K = require_number(j, "K", "price_impact cost");
        p.A = require_number(j, "A", "price_impact cost");
        p.S0 = require_number(j, "S0", "price_impact cost");
        p.Q0 = require_number(j, "Q0", "price_impact cost");
        if (!j.contains("N") || !j["N"].is_number_integer())
            throw ConfigError("price_impact cost: missing integer N");
        p.N = j["N"].get<int>();
        const double eps = j.contains("eps") ? j["eps"].get<double>() : 1.0;
        QuadraticMeanFieldCost cost = price_impact_cost(p);
        return scale_cost(cost, eps);
    }
    if (kind == "quadratic") {
        if (!j.contains("Q") || !j.contains("b") || !j.contains("M"))
            throw ConfigError("quadratic cost: expected fields Q, b, M");
        const double c0 = j.contains("c0") ? j["c0"].get<double>() : 0.0;
        return std::make_unique<QuadraticMeanFieldCost>(
            matrix_from_json(j["Q"], "cost Q"), vector_from_json(j["b"], "cost b"),
            matrix_from_json(j["M"], "cost M"), c0);
    }
    throw ConfigError("cost: unknown kind \"" + kind + "\"");
}

json map_to_json(const AdaptedMap& map) {
    json actions = json::array();
    for (int id = 0; id < map.size(); ++id)
        actions.push_back(json{{"id", id}, {"y", map.action(id)}});
    return json{{"node_actions", std::move(actions)}};
}

AdaptedMap map_from_json(const json& j) {
    if (!j.is_object() || !j.contains("node_actions"))
        throw ConfigError("map: expected {\"node_actions\"}");
    const json& entries = j["node_actions"];
    std::vector<double> actions(entries.size(), std::numeric_limits<double>::quiet_NaN());
    for (const json& e : entries) {
        const int id = e.at("id").get<int>();
        if (id < 0 || id >= static_cast<int>(actions.size()))
            throw StructuralError("map: node id " + std::to_string(id) + " out of range");
        actions[id] = e.at("y").get<double>();
    }
    for (std::size_t i = 0; i < actions.size(); ++i)
        if (std::isnan(actions[i]))
            throw StructuralError("map: missing action for node " + std::to_string(i));
    return AdaptedMap(std::move(actions));
}

json certificate_to_json(const ContractionCertificate& cert) {
    return json{{"N", cert.N},
                {"lambda", cert.lambda},
                {"kappa", cert.kappa},
                {"L", cert.lipschitz},
                {"lambda_k", vector_to_json(cert.lambda_k)},
                {"kappa_k", vector_to_json(cert.kappa_k)},
                {"L_k", vector_to_json(cert.lipschitz_k)},
                {"rho", cert.rho},
                {"cond_odd_product_ok", cert.cond_odd_product_ok},
                {"cond_contraction_ok", cert.cond_contraction_ok},
                {"convexity_ok", cert.convexity_ok},
                {"passes", cert.passes()},
                {"bounds_note", cert.bounds_note}};
}

json result_to_json(const EquilibriumResult& result) {
    json gaps = json::array();
    for (double g : result.gaps) gaps.push_back(g);
    return json{{"converged", result.converged},
                {"iterations", result.iterations},
                {"method",
                 result.method == SolveMethod::iteration ? "iteration" : "linear_system"},
                {"value", result.value},
                {"gaps", std::move(gaps)},
                {"nu_hat", measure_to_json(result.nu_hat)},
                {"map", map_to_json(result.map)}};
}

void policy_to_csv(const ScenarioTree& tree, const AffinePolicy& policy, std::ostream& os) {
    const int n = tree.horizon();
    os << "node_id,alpha";
    for (int s = 1; s <= n - 1; ++s) os << ",beta_" << s;
    for (int k = 1; k <= n; ++k) os << ",gamma_" << k;
    os << ",delta\n";
    os.precision(17);
    for (int id = 0; id < tree.node_count(); ++id) {
        const NodePolicy& pol = policy.at(id);
        os << id << "," << pol.alpha;
        for (int s = 0; s < n - 1; ++s)
            os << "," << (s < pol.beta.size() ? pol.beta[s] : 0.0);
        for (int k = 0; k < n; ++k) os << "," << pol.gamma[k];
        os << "," << pol.delta << "\n";
    }
}

void trace_to_csv(const EquilibriumResult& result, int horizon, std::ostream& os) {
    os << "iter,gap";
    for (int k = 1; k <= horizon; ++k) os << ",m_" << k;
    os << ",value\n";
    os.precision(17);
    for (std::size_t i = 0; i < result.gaps.size(); ++i) {
        os << (i + 1) << "," << result.gaps[i];
        for (int k = 0; k < horizon; ++k) {
            const double m =
                (i < result.mean_trace.size() && k < result.mean_trace[i].size())
                    ? result.mean_trace[i][k]
                    : 0.0;
            os << "," << m;
        }
        os << "," << (i < result.value_trace.size() ? result.value_trace[i] : 0.0) << "\n";
    }
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse " + path + ": " + e.what());
    }
    return j;
}

void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace cournot
