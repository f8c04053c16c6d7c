#pragma once

#include <iosfwd>
#include <memory>
#include <string>

#include <json.hpp>

#include "cournot/best_response.hpp"
#include "cournot/contraction.hpp"
#include "cournot/costs.hpp"
#include "cournot/equilibrium.hpp"
#include "cournot/measures.hpp"

namespace cournot {

// Scenario tree: {"horizon", "nodes": [{"id","parent","depth","x","p"}]},
// parent null at depth 1.
nlohmann::json tree_to_json(const ScenarioTree& tree);
ScenarioTree tree_from_json(const nlohmann::json& j);

// Measure: {"dim", "atoms": [{"y": [...], "w"}]}.
nlohmann::json measure_to_json(const DiscreteMeasure& nu);
DiscreteMeasure measure_from_json(const nlohmann::json& j);

// Cost spec: {"kind": "price_impact", "K","A","S0","Q0","N","eps"} or
// {"kind": "quadratic", "Q","b","M","c0"}. eps defaults to 1.
std::unique_ptr<MeanFieldCost> cost_from_json(const nlohmann::json& j);

// Adapted map: {"node_actions": [{"id","y"}]}.
nlohmann::json map_to_json(const AdaptedMap& map);
AdaptedMap map_from_json(const nlohmann::json& j);

nlohmann::json certificate_to_json(const ContractionCertificate& cert);

nlohmann::json result_to_json(const EquilibriumResult& result);

/// Per-node coefficient table, columns
/// node_id,alpha,beta_1..beta_{N-1},gamma_1..gamma_N,delta
/// (absent ancestor loads written as 0).
void policy_to_csv(const ScenarioTree& tree, const AffinePolicy& policy, std::ostream& os);

/// Iteration trace, columns iter,gap,m_1..m_N,value.
void trace_to_csv(const EquilibriumResult& result, int horizon, std::ostream& os);

nlohmann::json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace cournot
