#include "divprem/json_io.hpp"

#include "divprem/numerics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace divprem {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(path + ": cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(path + ": " + e.what());
    }
}

double require_number(const json& j, const std::string& context) {
    if (!j.is_number()) throw Error(context + ": expected a number");
    double v = j.get<double>();
    if (!std::isfinite(v)) throw Error(context + ": value must be finite");
    return v;
}

std::string fmt12(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

} // namespace

TreeInput parse_tree_json(const json& j) {
    if (!j.is_object()) throw Error("tree input: expected an object");
    if (!j.contains("horizon") || !j["horizon"].is_number_integer())
        throw Error("tree input: missing integer 'horizon'");
    if (!j.contains("nodes") || !j["nodes"].is_array())
        throw Error("tree input: missing array 'nodes'");

    TreeInput input;
    input.spec.horizon = j["horizon"].get<int>();
    int k = 0;
    for (const json& nj : j["nodes"]) {
        std::string context = "tree input: nodes[" + std::to_string(k++) + "]";
        if (!nj.is_object()) throw Error(context + ": expected an object");
        if (!nj.contains("id") || !nj["id"].is_string())
            throw Error(context + ": missing string 'id'");
        if (!nj.contains("time") || !nj["time"].is_number_integer())
            throw Error(context + ": missing integer 'time'");
        NodeSpec ns;
        ns.id = nj["id"].get<std::string>();
        ns.time = nj["time"].get<int>();
        if (nj.contains("parent") && !nj["parent"].is_null())
            ns.parent = nj["parent"].get<std::string>();
        if (nj.contains("prob") && !nj["prob"].is_null())
            ns.prob = require_number(nj["prob"], context + ".prob");
        input.spec.nodes.push_back(std::move(ns));
    }

    if (j.contains("rvs")) {
        if (!j["rvs"].is_object()) throw Error("tree input: 'rvs' must be an object");
        for (const auto& [name, table] : j["rvs"].items()) {
            if (!table.is_object())
                throw Error("tree input: rv '" + name + "' must map leaf ids to numbers");
            for (const auto& [leaf, value] : table.items())
                input.rvs[name][leaf] =
                    require_number(value, "rv '" + name + "' at leaf '" + leaf + "'");
        }
    }
    return input;
}

TreeInput load_tree_file(const std::string& path) {
    return parse_tree_json(load_json(path));
}

RandomVariable attach_rv(const ScenarioTree& tree, const TreeInput& input,
                         const std::string& name) {
    auto it = input.rvs.find(name);
    if (it == input.rvs.end()) throw Error("rv '" + name + "' not found in tree input");
    RandomVariable rv;
    rv.time = tree.horizon();
    rv.values.assign(tree.leaves().size(), 0.0);
    std::vector<bool> seen(tree.leaves().size(), false);
    for (const auto& [leaf, value] : it->second) {
        int idx = tree.index_of(leaf);
        if (idx < 0 || tree.node(idx).time != tree.horizon())
            throw Error("rv '" + name + "': unknown leaf '" + leaf + "'");
        rv.values[tree.node(idx).slot] = value;
        seen[tree.node(idx).slot] = true;
    }
    for (int leaf : tree.leaves())
        if (!seen[tree.node(leaf).slot])
            throw Error("rv '" + name + "': missing value for leaf '" +
                        tree.node(leaf).id + "'");
    return rv;
}

RiskAversionSchedule parse_schedule_json(const json& j, int horizon) {
    json alpha = j;
    int agents = 1;
    if (j.is_object()) {
        if (!j.contains("alpha")) throw Error("schedule: missing 'alpha'");
        alpha = j["alpha"];
        if (j.contains("agents")) {
            if (!j["agents"].is_number_integer() || j["agents"].get<int>() < 1)
                throw Error("schedule: 'agents' must be a positive integer");
            agents = j["agents"].get<int>();
        }
    }

    if (alpha.is_number())
        return RiskAversionSchedule::constant(alpha.get<double>(), agents, horizon);

    if (alpha.is_array() && !alpha.empty() && alpha[0].is_number()) {
        std::vector<double> row;
        for (const json& v : alpha) row.push_back(require_number(v, "schedule alpha"));
        if (static_cast<int>(row.size()) != horizon + 1)
            throw Error("schedule: expected " + std::to_string(horizon + 1) +
                        " per-time entries, got " + std::to_string(row.size()));
        return RiskAversionSchedule::per_time(row, agents);
    }

    if (alpha.is_array() && !alpha.empty() && alpha[0].is_array()) {
        std::vector<std::vector<double>> matrix;
        for (const json& rj : alpha) {
            std::vector<double> row;
            for (const json& v : rj) row.push_back(require_number(v, "schedule alpha"));
            if (static_cast<int>(row.size()) != horizon + 1)
                throw Error("schedule: expected " + std::to_string(horizon + 1) +
                            " per-time entries, got " + std::to_string(row.size()));
            matrix.push_back(std::move(row));
        }
        return RiskAversionSchedule(std::move(matrix));
    }

    throw Error("schedule: 'alpha' must be a scalar, a per-time array, or a matrix");
}

RiskAversionSchedule load_schedule_file(const std::string& path, int horizon) {
    return parse_schedule_json(load_json(path), horizon);
}

std::vector<std::unique_ptr<Utility>> parse_utilities_json(const json& j) {
    const json* list = &j;
    if (j.is_object() && j.contains("utilities")) list = &j["utilities"];
    if (!list->is_array() || list->empty())
        throw Error("utilities: expected a nonempty array");
    std::vector<std::unique_ptr<Utility>> out;
    int k = 0;
    for (const json& uj : *list) {
        std::string context = "utilities[" + std::to_string(k++) + "]";
        if (!uj.is_object() || !uj.contains("kind") || !uj["kind"].is_string())
            throw Error(context + ": expected an object with string 'kind'");
        std::string kind = uj["kind"].get<std::string>();
        if (kind == "exp") {
            out.push_back(std::make_unique<ExponentialUtility>(
                require_number(uj.at("alpha"), context + ".alpha")));
        } else if (kind == "mixexp") {
            out.push_back(std::make_unique<MixedExponentialUtility>(
                require_number(uj.at("weight"), context + ".weight"),
                require_number(uj.at("alpha1"), context + ".alpha1"),
                require_number(uj.at("alpha2"), context + ".alpha2")));
        } else {
            throw Error(context + ": unknown kind '" + kind + "'");
        }
    }
    return out;
}

std::vector<std::unique_ptr<Utility>> load_utilities_file(const std::string& path) {
    return parse_utilities_json(load_json(path));
}

InsurancePortfolio parse_portfolio_json(const json& j) {
    if (!j.is_object()) throw Error("portfolio: expected an object");
    if (!j.contains("T") || !j["T"].is_number_integer())
        throw Error("portfolio: missing integer 'T'");
    int T = j["T"].get<int>();
    if (!j.contains("schedule")) throw Error("portfolio: missing 'schedule'");
    if (!j.contains("contracts") || !j["contracts"].is_array())
        throw Error("portfolio: missing array 'contracts'");

    InsurancePortfolio pf{T, parse_schedule_json(j["schedule"], T), {}};
    int k = 0;
    for (const json& cj : j["contracts"]) {
        std::string context = "portfolio: contracts[" + std::to_string(k++) + "]";
        if (!cj.is_object()) throw Error(context + ": expected an object");
        Contract c;
        c.id = cj.contains("id") && cj["id"].is_string() ? cj["id"].get<std::string>()
                                                         : "c" + std::to_string(k - 1);
        if (!cj.contains("payments") || !cj["payments"].is_array())
            throw Error(context + ": missing array 'payments'");
        if (!cj.contains("hazard") || !cj["hazard"].is_array())
            throw Error(context + ": missing array 'hazard'");
        for (const json& v : cj["payments"])
            c.payments.push_back(require_number(v, context + ".payments"));
        for (const json& v : cj["hazard"])
            c.hazard.push_back(require_number(v, context + ".hazard"));
        pf.contracts.push_back(std::move(c));
    }
    validate_portfolio(pf);
    return pf;
}

InsurancePortfolio load_portfolio_file(const std::string& path) {
    return parse_portfolio_json(load_json(path));
}

ordered_json tree_to_json(const ScenarioTree& tree) {
    ordered_json out;
    out["horizon"] = tree.horizon();
    out["nodes"] = ordered_json::array();
    for (int t = 0; t <= tree.horizon(); ++t)
        for (int idx : tree.slice(t)) {
            const TreeNode& n = tree.node(idx);
            ordered_json nj;
            nj["id"] = n.id;
            nj["time"] = n.time;
            if (n.parent < 0)
                nj["parent"] = nullptr;
            else
                nj["parent"] = tree.node(n.parent).id;
            nj["prob"] = sig12(n.prob);
            out["nodes"].push_back(std::move(nj));
        }
    return out;
}

ordered_json process_to_json(const ScenarioTree& tree, const AdaptedProcess& process) {
    ordered_json out;
    for (int t = process.start; t <= process.end(); ++t) {
        ordered_json slice;
        for (int idx : tree.slice(t))
            slice[tree.node(idx).id] = sig12(process.at(t)[tree.node(idx).slot]);
        out[std::to_string(t)] = std::move(slice);
    }
    return out;
}

ordered_json valuation_report_json(const ScenarioTree& tree,
                                   const ValuationResult& result) {
    ordered_json out;
    out["t"] = result.start;
    if (result.start == 0)
        out["premium"] = sig12(result.premium.at(0)[0]);
    else {
        ordered_json slice;
        for (int idx : tree.slice(result.start))
            slice[tree.node(idx).id] =
                sig12(result.premium.at(result.start)[tree.node(idx).slot]);
        out["premium"] = std::move(slice);
    }
    out["H"] = process_to_json(tree, result.premium);
    out["V"] = process_to_json(tree, result.value);
    out["U"] = process_to_json(tree, result.utility);
    out["X"] = process_to_json(tree, result.allocation.allocation);
    out["M"] = process_to_json(tree, result.allocation.dual_martingale);
    out["X_agents"] = ordered_json::array();
    for (const AdaptedProcess& xi : result.allocation.agent_allocation)
        out["X_agents"].push_back(process_to_json(tree, xi));
    out["diagnostics"] = {
        {"martingale_residual", sig12(result.allocation.diagnostics.martingale_residual)},
        {"allocation_sum_residual",
         sig12(result.allocation.diagnostics.allocation_sum_residual)},
        {"duality_gap", sig12(result.allocation.diagnostics.duality_gap)}};
    return out;
}

ordered_json sweep_report_json(const SweepReport& report) {
    ordered_json out;
    out["points"] = ordered_json::array();
    for (const SweepPoint& pt : report.points) {
        ordered_json pj;
        pj["n_or_m"] = sig12(pt.param);
        pj["premium"] = sig12(pt.premium);
        pj["reference"] = sig12(pt.reference);
        pj["expansion_term"] = sig12(pt.expansion_term);
        pj["residual"] = sig12(pt.residual);
        out["points"].push_back(std::move(pj));
    }
    if (std::isfinite(report.loglog_slope))
        out["loglog_slope"] = sig12(report.loglog_slope);
    else
        out["loglog_slope"] = nullptr;
    out["residual_ratios"] = ordered_json::array();
    for (double r : report.residual_ratios) out["residual_ratios"].push_back(sig12(r));
    return out;
}

std::string sweep_report_csv(const SweepReport& report) {
    std::ostringstream os;
    os << "n_or_m,premium,reference,expansion_term,residual\n";
    for (const SweepPoint& pt : report.points)
        os << fmt12(pt.param) << ',' << fmt12(pt.premium) << ',' << fmt12(pt.reference)
           << ',' << fmt12(pt.expansion_term) << ',' << fmt12(pt.residual) << '\n';
    return os.str();
}

ordered_json insurance_report_json(const InsurancePortfolio& portfolio,
                                   const HTable& table, double premium) {
    ordered_json out;
    out["premium"] = sig12(premium);
    out["t"] = 0;
    ordered_json h, logh;
    for (std::size_t i = 0; i < portfolio.contracts.size(); ++i) {
        ordered_json hrow = ordered_json::array(), lrow = ordered_json::array();
        for (int t = 1; t <= portfolio.horizon + 1; ++t) {
            hrow.push_back(sig12(table.h(static_cast<int>(i), t)));
            lrow.push_back(sig12(table.log(static_cast<int>(i), t)));
        }
        h[portfolio.contracts[i].id] = std::move(hrow);
        logh[portfolio.contracts[i].id] = std::move(lrow);
    }
    out["h"] = std::move(h);
    out["log_h"] = std::move(logh);
    return out;
}

} // namespace divprem
