// Command-line front end: premiums, allocations, convolutions, insurance
// pricing, diversification sweeps, and brute-force verification on tiny
// instances.  All numeric output carries 12 significant digits.

#include "divprem/asymptotics.hpp"
#include "divprem/instances.hpp"
#include "divprem/insurance.hpp"
#include "divprem/json_io.hpp"
#include "divprem/numerics.hpp"
#include "divprem/oracle.hpp"
#include "divprem/valuation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using divprem::Error;
using nlohmann::ordered_json;

std::string fmt12(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

struct Options {
    std::string tree_path;
    std::string rv_name = "Z";
    std::string schedule_path;
    std::string portfolio_path;
    std::string grid;
    std::string out;
    std::string format = "json";
    int t = 0;
    bool strict = false;
    std::uint64_t seed = 0;
    double tol = 0.0; // 0 = per-check defaults
};

void write_output(const Options& opt, const std::string& text) {
    if (opt.out.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream os(opt.out);
    if (!os) throw Error(opt.out + ": cannot open for writing");
    os << text;
    if (!text.empty() && text.back() != '\n') os << '\n';
}

void write_json(const Options& opt, const ordered_json& j) {
    write_output(opt, j.dump(2));
}

std::vector<int> parse_int_grid(const std::string& spec) {
    std::vector<int> grid;
    if (spec.empty()) throw Error("empty grid spec");
    if (spec.find(',') != std::string::npos || spec.find(':') == std::string::npos) {
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ',')) grid.push_back(std::stoi(item));
        return grid;
    }
    // "lo:hi:x2" geometric or "lo:hi:+3" (or bare step) arithmetic
    std::stringstream ss(spec);
    std::string lo_s, hi_s, step_s;
    if (!std::getline(ss, lo_s, ':') || !std::getline(ss, hi_s, ':') ||
        !std::getline(ss, step_s))
        throw Error("grid spec '" + spec + "': expected lo:hi:step");
    int lo = std::stoi(lo_s), hi = std::stoi(hi_s);
    if (step_s.size() > 1 && step_s[0] == 'x') {
        int factor = std::stoi(step_s.substr(1));
        if (factor < 2) throw Error("grid spec: geometric factor must be >= 2");
        for (long long v = lo; v <= hi; v *= factor) grid.push_back(static_cast<int>(v));
        return grid;
    }
    int step = std::stoi(step_s[0] == '+' ? step_s.substr(1) : step_s);
    if (step < 1) throw Error("grid spec: arithmetic step must be >= 1");
    for (long long v = lo; v <= hi; v += step) grid.push_back(static_cast<int>(v));
    return grid;
}

struct RealGrid {
    double lo = 0.0, hi = 0.0, step = 0.0;
};

RealGrid parse_real_grid(const std::string& spec) {
    std::stringstream ss(spec);
    std::string lo_s, hi_s, step_s;
    if (!std::getline(ss, lo_s, ':') || !std::getline(ss, hi_s, ':') ||
        !std::getline(ss, step_s))
        throw Error("grid spec '" + spec + "': expected lo:hi:step");
    RealGrid g{std::stod(lo_s), std::stod(hi_s), std::stod(step_s)};
    if (!(g.step > 0.0) || !(g.hi > g.lo))
        throw Error("grid spec '" + spec + "': need hi > lo and step > 0");
    return g;
}

divprem::RiskAversionSchedule load_schedule_or_default(const Options& opt, int horizon) {
    if (opt.schedule_path.empty())
        return divprem::RiskAversionSchedule::constant(1.0, 1, horizon);
    return divprem::load_schedule_file(opt.schedule_path, horizon);
}

int run_premium(const Options& opt, bool allocate_view) {
    divprem::TreeInput input = divprem::load_tree_file(opt.tree_path);
    divprem::ScenarioTree tree = divprem::build_tree(input.spec);
    divprem::RandomVariable z = divprem::attach_rv(tree, input, opt.rv_name);
    divprem::RiskAversionSchedule schedule = load_schedule_or_default(opt, tree.horizon());
    if (opt.t < 0 || opt.t > tree.horizon())
        throw Error("--t " + std::to_string(opt.t) + " outside [0, " +
                    std::to_string(tree.horizon()) + "]");

    divprem::ValuationResult result = divprem::evaluate(tree, z, schedule, opt.t);

    if (!allocate_view) {
        if (opt.t == 0) {
            std::cout << "H_0 = " << fmt12(result.premium.at(0)[0]) << "\n";
        } else {
            for (int idx : tree.slice(opt.t))
                std::cout << "H_" << opt.t << "(" << tree.node(idx).id
                          << ") = " << fmt12(result.premium.at(opt.t)[tree.node(idx).slot])
                          << "\n";
        }
    } else {
        const auto& d = result.allocation.diagnostics;
        std::cout << "martingale_residual = " << fmt12(d.martingale_residual) << "\n"
                  << "allocation_sum_residual = " << fmt12(d.allocation_sum_residual)
                  << "\n"
                  << "duality_gap = " << fmt12(d.duality_gap) << "\n";
    }

    if (!opt.out.empty()) {
        if (opt.format == "csv") {
            std::ostringstream os;
            os << "table,time,node,value\n";
            auto emit = [&](const char* name, const divprem::AdaptedProcess& p) {
                for (int s = p.start; s <= p.end(); ++s)
                    for (int idx : tree.slice(s))
                        os << name << ',' << s << ',' << tree.node(idx).id << ','
                           << fmt12(p.at(s)[tree.node(idx).slot]) << '\n';
            };
            emit("H", result.premium);
            emit("V", result.value);
            emit("U", result.utility);
            emit("X", result.allocation.allocation);
            emit("M", result.allocation.dual_martingale);
            write_output(opt, os.str());
        } else {
            write_json(opt, divprem::valuation_report_json(tree, result));
        }
    }

    if (opt.strict) {
        double tol_mart = opt.tol > 0.0 ? opt.tol : 1e-9;
        double tol_sum = opt.tol > 0.0 ? opt.tol : 1e-9;
        double tol_gap = opt.tol > 0.0 ? opt.tol : 1e-8;
        const auto& d = result.allocation.diagnostics;
        if (d.martingale_residual > tol_mart || d.allocation_sum_residual > tol_sum ||
            d.duality_gap > tol_gap) {
            std::cerr << "divprem: strict mode: diagnostics breach tolerance\n";
            return 2;
        }
    }
    return 0;
}

int run_convolve(const Options& opt) {
    if (opt.schedule_path.empty())
        throw Error("convolve: --schedule must name a utilities file");
    auto owned = divprem::load_utilities_file(opt.schedule_path);
    std::vector<const divprem::Utility*> members;
    for (const auto& u : owned) members.push_back(u.get());
    RealGrid grid = opt.grid.empty() ? RealGrid{-2.0, 2.0, 0.25} : parse_real_grid(opt.grid);

    ordered_json out;
    out["points"] = ordered_json::array();
    std::ostringstream csv;
    csv << "x,value,lambda";
    for (std::size_t i = 0; i < members.size(); ++i) csv << ",split_" << i;
    csv << '\n';
    for (double x = grid.lo; x <= grid.hi + 1e-12; x += grid.step) {
        divprem::ConvolutionResult r = divprem::sup_convolution(members, x);
        ordered_json pj;
        pj["x"] = divprem::sig12(x);
        pj["value"] = divprem::sig12(r.value);
        pj["lambda"] = divprem::sig12(r.lambda);
        pj["split"] = ordered_json::array();
        csv << fmt12(x) << ',' << fmt12(r.value) << ',' << fmt12(r.lambda);
        for (double s : r.split) {
            pj["split"].push_back(divprem::sig12(s));
            csv << ',' << fmt12(s);
        }
        csv << '\n';
        out["points"].push_back(std::move(pj));
    }
    if (opt.format == "csv")
        write_output(opt, csv.str());
    else
        write_json(opt, out);
    return 0;
}

int run_insure(const Options& opt) {
    divprem::InsurancePortfolio pf = divprem::load_portfolio_file(opt.portfolio_path);
    divprem::HTable table = divprem::h_recursion(pf);
    double premium = divprem::premium_closed_form(pf);
    std::cout << "premium = " << fmt12(premium) << "\n";
    if (!opt.out.empty()) {
        if (opt.format == "csv") {
            std::ostringstream os;
            os << "contract,t,h,log_h\n";
            for (std::size_t i = 0; i < pf.contracts.size(); ++i)
                for (int t = 1; t <= pf.horizon + 1; ++t)
                    os << pf.contracts[i].id << ',' << t << ','
                       << fmt12(table.h(static_cast<int>(i), t)) << ','
                       << fmt12(table.log(static_cast<int>(i), t)) << '\n';
            write_output(opt, os.str());
        } else {
            write_json(opt, divprem::insurance_report_json(pf, table, premium));
        }
    }
    return 0;
}

int run_sweep_n(const Options& opt) {
    divprem::TreeInput input = divprem::load_tree_file(opt.tree_path);
    divprem::ScenarioTree tree = divprem::build_tree(input.spec);
    divprem::RandomVariable z = divprem::attach_rv(tree, input, opt.rv_name);
    double base_alpha = 1.0;
    if (!opt.schedule_path.empty()) {
        divprem::RiskAversionSchedule s =
            divprem::load_schedule_file(opt.schedule_path, tree.horizon());
        base_alpha = s.alpha(0, 0);
    }
    std::vector<int> grid =
        opt.grid.empty() ? parse_int_grid("1:1024:x2") : parse_int_grid(opt.grid);
    divprem::SweepReport report = divprem::large_n_sweep(tree, z, base_alpha, grid);
    if (opt.format == "csv")
        write_output(opt, divprem::sweep_report_csv(report));
    else
        write_json(opt, divprem::sweep_report_json(report));
    return 0;
}

int run_sweep_m(const Options& opt) {
    double alpha = 1.0;
    if (!opt.schedule_path.empty()) {
        // A scalar alpha file also parses as a horizon-0 schedule.
        divprem::RiskAversionSchedule s = divprem::load_schedule_file(opt.schedule_path, 0);
        alpha = s.alpha(0, 0);
    }
    std::vector<int> grid =
        opt.grid.empty() ? parse_int_grid("1,2,4,8,12") : parse_int_grid(opt.grid);
    divprem::SweepReport report = divprem::time_refinement_sweep(
        [](int m) { return divprem::coin_flip_payoff(m); }, grid, alpha);
    if (opt.format == "csv")
        write_output(opt, divprem::sweep_report_csv(report));
    else
        write_json(opt, divprem::sweep_report_json(report));
    return 0;
}

int run_oracle_check(const Options& opt) {
    namespace oracle = divprem::oracle;
    using divprem::instances::Rng;

    double step = 1e-3;
    if (!opt.grid.empty()) step = parse_real_grid(opt.grid).step;

    ordered_json checks = ordered_json::array();
    bool all_pass = true;
    auto record = [&](const std::string& name, double value, double reference,
                      double tolerance) {
        bool pass = std::abs(value - reference) <= tolerance;
        all_pass = all_pass && pass;
        checks.push_back({{"name", name},
                          {"value", divprem::sig12(value)},
                          {"reference", divprem::sig12(reference)},
                          {"tolerance", divprem::sig12(tolerance)},
                          {"pass", pass}});
    };

    Rng rng(opt.seed);

    // Convolution scans against the analytic sup-convolution.
    for (int rep = 0; rep < 3; ++rep) {
        divprem::ExponentialUtility u1(rng.uniform(0.5, 2.0));
        divprem::ExponentialUtility u2(rng.uniform(0.5, 3.0));
        const divprem::Utility* members[] = {&u1, &u2};
        double x = rng.uniform(-0.5, 1.5);
        divprem::ConvolutionResult analytic = divprem::sup_convolution(members, x);
        oracle::GridSpec grid{-2.0, 2.5, step, 200'000'000};
        oracle::ConvolutionScan scan = oracle::grid_sup_convolution(members, x, grid);
        record("sup_convolution[" + std::to_string(rep) + "]", scan.value,
               analytic.value, scan.tolerance);
    }

    // Allocation scan against the closed-form utility on a two-leaf tree.
    {
        divprem::TreeSpec spec;
        spec.horizon = 1;
        spec.nodes.push_back({"r", 0, std::nullopt, 1.0});
        spec.nodes.push_back({"r.a", 1, std::string("r"), 0.5});
        spec.nodes.push_back({"r.b", 1, std::string("r"), 0.5});
        divprem::ScenarioTree tree = divprem::build_tree(spec);
        divprem::RandomVariable z{1, {rng.uniform(0.0, 1.0), rng.uniform(-1.0, 0.0)}};
        divprem::RiskAversionSchedule schedule =
            divprem::RiskAversionSchedule::constant(1.0, 1, 1);
        divprem::RandomVariable u = divprem::utility_U(tree, z, schedule, 0);

        divprem::ExponentialUtility ua(1.0);
        std::vector<std::vector<const divprem::Utility*>> utilities{{&ua, &ua}};
        oracle::GridSpec grid{-2.0, 2.0, std::max(step, 1e-3), 200'000'000};
        oracle::AllocationScan scan = oracle::grid_allocation_search(tree, z, utilities, grid);
        record("allocation_search", scan.objective, u.values[0], scan.tolerance);
    }

    // Duality gaps on random trees: ~0 at the optimum, >= 0 on random pairs.
    for (int rep = 0; rep < 3; ++rep) {
        divprem::instances::TreeOptions topt;
        topt.max_horizon = 3;
        topt.max_leaves = 8;
        divprem::ScenarioTree tree = divprem::instances::random_tree(rng, topt);
        divprem::RandomVariable z = divprem::instances::random_payoff(rng, tree);
        divprem::RiskAversionSchedule schedule =
            divprem::instances::random_schedule(rng, tree.horizon());
        divprem::AllocationResult alloc = divprem::optimal_allocation(tree, z, schedule, 0);

        std::vector<divprem::ExponentialUtility> owned;
        owned.reserve(tree.horizon() + 1);
        for (int s = 0; s <= tree.horizon(); ++s)
            owned.emplace_back(schedule.aggregate_alpha(s));
        std::vector<const divprem::Utility*> per_time;
        for (const auto& u : owned) per_time.push_back(&u);

        oracle::GapReport at_opt = oracle::duality_gap(
            tree, z, per_time, alloc.allocation, alloc.dual_martingale);
        record("duality_gap_optimal[" + std::to_string(rep) + "]", at_opt.gap, 0.0, 1e-8);

        double min_gap = 0.0;
        for (int k = 0; k < 20; ++k) {
            divprem::AdaptedProcess x =
                divprem::instances::random_allocation(rng, tree, z);
            divprem::AdaptedProcess m =
                divprem::instances::random_positive_martingale(rng, tree);
            oracle::GapReport g = oracle::duality_gap(tree, z, per_time, x, m);
            min_gap = std::min(min_gap, g.gap);
        }
        bool nonneg = min_gap >= -1e-10;
        all_pass = all_pass && nonneg;
        checks.push_back({{"name", "weak_duality[" + std::to_string(rep) + "]"},
                          {"value", divprem::sig12(min_gap)},
                          {"reference", 0.0},
                          {"tolerance", 1e-10},
                          {"pass", nonneg}});
    }

    ordered_json out;
    out["seed"] = opt.seed;
    out["pass"] = all_pass;
    out["checks"] = std::move(checks);
    write_json(opt, out);
    if (!all_pass && opt.strict) return 2;
    return 0;
}

void add_common(CLI::App* cmd, Options& opt) {
    cmd->add_option("--out", opt.out, "Write the report to this path");
    cmd->add_option("--format", opt.format, "Report format: json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_flag("--strict", opt.strict,
                  "Exit with status 2 when a diagnostic breaches tolerance");
    cmd->add_option("--seed", opt.seed, "Seed for randomized verification");
    cmd->add_option("--tol", opt.tol, "Override diagnostic tolerances");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynamic diversification premiums on scenario trees"};
    app.require_subcommand(1);
    Options opt;

    CLI::App* premium = app.add_subcommand("premium", "Indifference premium process");
    premium->add_option("--tree", opt.tree_path, "Scenario tree JSON")->required();
    premium->add_option("--rv", opt.rv_name, "Payoff name inside the tree file");
    premium->add_option("--schedule", opt.schedule_path, "Risk aversion schedule JSON");
    premium->add_option("--t", opt.t, "Evaluation time");
    add_common(premium, opt);

    CLI::App* allocate = app.add_subcommand(
        "allocate", "Optimal allocation with martingale certificate");
    allocate->add_option("--tree", opt.tree_path, "Scenario tree JSON")->required();
    allocate->add_option("--rv", opt.rv_name, "Payoff name inside the tree file");
    allocate->add_option("--schedule", opt.schedule_path, "Risk aversion schedule JSON");
    allocate->add_option("--t", opt.t, "Evaluation time");
    add_common(allocate, opt);

    CLI::App* convolve = app.add_subcommand("convolve", "Sup-convolution table");
    convolve->add_option("--schedule", opt.schedule_path, "Utilities JSON")->required();
    convolve->add_option("--grid", opt.grid, "Wealth grid lo:hi:step");
    add_common(convolve, opt);

    CLI::App* insure = app.add_subcommand("insure", "Closed-form portfolio premium");
    insure->add_option("--portfolio", opt.portfolio_path, "Portfolio JSON")->required();
    add_common(insure, opt);

    CLI::App* sweep_n = app.add_subcommand("sweep-n", "Premium sweep over agent counts");
    sweep_n->add_option("--tree", opt.tree_path, "Scenario tree JSON")->required();
    sweep_n->add_option("--rv", opt.rv_name, "Payoff name inside the tree file");
    sweep_n->add_option("--schedule", opt.schedule_path, "Base alpha schedule JSON");
    sweep_n->add_option("--grid", opt.grid, "Agent grid, e.g. 1:1024:x2 or 1,2,4");
    add_common(sweep_n, opt);

    CLI::App* sweep_m =
        app.add_subcommand("sweep-m", "Premium sweep over time refinements");
    sweep_m->add_option("--schedule", opt.schedule_path, "Scalar alpha schedule JSON");
    sweep_m->add_option("--grid", opt.grid, "Refinement grid, e.g. 1,2,4,8,12");
    add_common(sweep_m, opt);

    CLI::App* oracle_check =
        app.add_subcommand("oracle-check", "Brute-force verification on tiny instances");
    oracle_check->add_option("--grid", opt.grid, "Scan resolution lo:hi:step");
    add_common(oracle_check, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (opt.tol < 0.0) throw Error("--tol must be positive");
        if (premium->parsed()) return run_premium(opt, false);
        if (allocate->parsed()) return run_premium(opt, true);
        if (convolve->parsed()) return run_convolve(opt);
        if (insure->parsed()) return run_insure(opt);
        if (sweep_n->parsed()) return run_sweep_n(opt);
        if (sweep_m->parsed()) return run_sweep_m(opt);
        if (oracle_check->parsed()) return run_oracle_check(opt);
    } catch (const std::exception& e) {
        std::cerr << "divprem: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
