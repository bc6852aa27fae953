#ifndef DIVPREM_JSON_IO_HPP
#define DIVPREM_JSON_IO_HPP

#include "divprem/asymptotics.hpp"
#include "divprem/insurance.hpp"
#include "divprem/scenario_tree.hpp"
#include "divprem/schedule.hpp"
#include "divprem/utility.hpp"
#include "divprem/valuation.hpp"

#include <json.hpp>

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace divprem {

// Tree files:
//   {"horizon": T,
//    "nodes": [{"id": str, "time": int, "parent": str|null, "prob": float}],
//    "rvs": {"name": {"leaf_id": float}}}
// The root's prob may be omitted; rvs is optional.
struct TreeInput {
    TreeSpec spec;
    std::map<std::string, std::map<std::string, double>> rvs;
};

TreeInput parse_tree_json(const nlohmann::json& j);
TreeInput load_tree_file(const std::string& path);

RandomVariable attach_rv(const ScenarioTree& tree, const TreeInput& input,
                         const std::string& name);

// Schedule files: {"alpha": scalar | [per-s] | [[per-i][per-s]], "agents": n?}
// or the bare alpha value/array.  agents broadcasts scalar and per-time forms.
RiskAversionSchedule parse_schedule_json(const nlohmann::json& j, int horizon);
RiskAversionSchedule load_schedule_file(const std::string& path, int horizon);

// Utility lists: {"utilities": [{"kind": "exp", "alpha": a} |
//                               {"kind": "mixexp", "weight": w,
//                                "alpha1": a, "alpha2": b}]}
std::vector<std::unique_ptr<Utility>> parse_utilities_json(const nlohmann::json& j);
std::vector<std::unique_ptr<Utility>> load_utilities_file(const std::string& path);

// Portfolio files:
//   {"T": int, "schedule": {...},
//    "contracts": [{"id": str, "payments": [c_1..c_T], "hazard": [q_0..q_{T-1}]}]}
InsurancePortfolio parse_portfolio_json(const nlohmann::json& j);
InsurancePortfolio load_portfolio_file(const std::string& path);

nlohmann::ordered_json tree_to_json(const ScenarioTree& tree);
nlohmann::ordered_json process_to_json(const ScenarioTree& tree,
                                       const AdaptedProcess& process);
nlohmann::ordered_json valuation_report_json(const ScenarioTree& tree,
                                             const ValuationResult& result);
nlohmann::ordered_json sweep_report_json(const SweepReport& report);
std::string sweep_report_csv(const SweepReport& report);
nlohmann::ordered_json insurance_report_json(const InsurancePortfolio& portfolio,
                                             const HTable& table, double premium);

} // namespace divprem

#endif // DIVPREM_JSON_IO_HPP
