#include "divprem/insurance.hpp"

#include "divprem/numerics.hpp"

#include <cmath>
#include <limits>

namespace divprem {

void validate_portfolio(const InsurancePortfolio& portfolio) {
    const int T = portfolio.horizon;
    if (T < 1) throw Error("portfolio horizon must be >= 1");
    if (portfolio.schedule.horizon() != T)
        throw Error("portfolio schedule horizon " +
                    std::to_string(portfolio.schedule.horizon()) +
                    " does not match portfolio horizon " + std::to_string(T));
    if (portfolio.contracts.empty()) throw Error("portfolio has no contracts");
    for (const Contract& c : portfolio.contracts) {
        if (c.id.empty()) throw Error("contract with empty id");
        if (static_cast<int>(c.payments.size()) != T)
            throw Error("contract '" + c.id + "': expected " + std::to_string(T) +
                        " payments, got " + std::to_string(c.payments.size()));
        if (static_cast<int>(c.hazard.size()) != T)
            throw Error("contract '" + c.id + "': expected " + std::to_string(T) +
                        " hazard probabilities, got " + std::to_string(c.hazard.size()));
        for (double x : c.payments)
            if (!std::isfinite(x) || x < 0.0)
                throw Error("contract '" + c.id + "': payments must be finite and >= 0");
        for (double q : c.hazard)
            if (!std::isfinite(q) || q < 0.0 || q >= 1.0)
                throw Error("contract '" + c.id + "': hazard probabilities must lie in [0, 1)");
    }
}

double HTable::h(int contract, int t) const { return std::exp(log(contract, t)); }

HTable h_recursion(const InsurancePortfolio& portfolio) {
    validate_portfolio(portfolio);
    const int T = portfolio.horizon;
    HTable table;
    table.log_h.resize(portfolio.contracts.size());
    for (std::size_t i = 0; i < portfolio.contracts.size(); ++i) {
        const Contract& c = portfolio.contracts[i];
        auto& y = table.log_h[i];
        y.assign(T + 1, 0.0); // y[t-1] = log h_{i,t}; h_{i,T+1} = 1
        for (int t = T; t >= 1; --t) {
            double beta = portfolio.schedule.beta(t);
            double q = c.hazard[t - 1];
            double p = 1.0 - q;
            double y_next = y[t]; // log h_{i,t+1}
            double ec = beta * c.payments[t - 1];
            double es = beta * y_next;
            if (ec < 600.0 && es < 600.0) {
                y[t - 1] = std::log(q * std::exp(ec) + p * std::exp(es)) / beta;
            } else {
                double a = q > 0.0 ? std::log(q) + ec
                                   : -std::numeric_limits<double>::infinity();
                double b = std::log(p) + es;
                y[t - 1] = logaddexp(a, b) / beta;
            }
        }
    }
    return table;
}

double premium_closed_form(const InsurancePortfolio& portfolio, int t,
                           std::span<const ContractState> states) {
    validate_portfolio(portfolio);
    if (t < 0 || t > portfolio.horizon)
        throw Error("premium time " + std::to_string(t) + " outside [0, " +
                    std::to_string(portfolio.horizon) + "]");
    if (states.size() != portfolio.contracts.size())
        throw Error("expected " + std::to_string(portfolio.contracts.size()) +
                    " contract states, got " + std::to_string(states.size()));

    HTable table = h_recursion(portfolio);
    double premium = 0.0;
    for (std::size_t i = 0; i < portfolio.contracts.size(); ++i) {
        const Contract& c = portfolio.contracts[i];
        int died = states[i].died_at;
        if (died < 0 || died > t)
            throw Error("contract '" + c.id + "': death time " + std::to_string(died) +
                        " inconsistent with evaluation time " + std::to_string(t));
        if (died > 0)
            premium += c.payments[died - 1];
        else
            premium += table.log(static_cast<int>(i), t + 1);
    }
    return premium;
}

double premium_closed_form(const InsurancePortfolio& portfolio) {
    std::vector<ContractState> alive(portfolio.contracts.size());
    return premium_closed_form(portfolio, 0, alive);
}

ExpandedPortfolio hazard_to_tree(const InsurancePortfolio& portfolio, int n_max) {
    validate_portfolio(portfolio);
    const int n = static_cast<int>(portfolio.contracts.size());
    const int T = portfolio.horizon;
    if (n > n_max)
        throw Error("state-space budget exceeded: " + std::to_string(n) +
                    " contracts > " + std::to_string(n_max));
    if (T > 6)
        throw Error("state-space budget exceeded: horizon " + std::to_string(T) + " > 6");

    auto encode = [&](int time, const std::vector<ContractState>& state) {
        std::string id = "t" + std::to_string(time) + ":";
        for (int i = 0; i < n; ++i) {
            if (i) id += ".";
            id += state[i].died_at == 0 ? "a" : std::to_string(state[i].died_at);
        }
        return id;
    };

    TreeSpec spec;
    spec.horizon = T;

    struct Pending {
        std::string id;
        std::vector<ContractState> state;
    };
    std::vector<Pending> current;
    std::vector<std::pair<std::string, std::vector<ContractState>>> all_states;

    std::vector<ContractState> root_state(n);
    std::string root_id = encode(0, root_state);
    spec.nodes.push_back({root_id, 0, std::nullopt, 1.0});
    all_states.emplace_back(root_id, root_state);
    current.push_back({root_id, root_state});

    for (int t = 0; t < T; ++t) {
        std::vector<Pending> next;
        for (const Pending& node : current) {
            std::vector<int> alive;
            for (int i = 0; i < n; ++i)
                if (node.state[i].died_at == 0) alive.push_back(i);

            // Each alive contract branches on whether its event falls in
            // (t, t+1]; zero-hazard branches are dropped so every kept
            // transition has positive probability.
            const int k = static_cast<int>(alive.size());
            for (int mask = 0; mask < (1 << k); ++mask) {
                double prob = 1.0;
                std::vector<ContractState> state = node.state;
                bool feasible = true;
                for (int j = 0; j < k; ++j) {
                    double q = portfolio.contracts[alive[j]].hazard[t];
                    if (mask & (1 << j)) {
                        if (q == 0.0) { feasible = false; break; }
                        prob *= q;
                        state[alive[j]].died_at = t + 1;
                    } else {
                        prob *= 1.0 - q;
                    }
                }
                if (!feasible) continue;
                std::string id = encode(t + 1, state);
                spec.nodes.push_back({id, t + 1, node.id, prob});
                all_states.emplace_back(id, state);
                next.push_back({id, std::move(state)});
            }
        }
        current = std::move(next);
    }

    ExpandedPortfolio out{ScenarioTree::build(spec), {}, {}};
    out.node_states.resize(out.tree.size());
    for (auto& [id, state] : all_states)
        out.node_states[out.tree.index_of(id)] = std::move(state);

    out.payoff.time = T;
    out.payoff.values.resize(out.tree.leaves().size());
    for (int leaf : out.tree.leaves()) {
        const auto& state = out.node_states[leaf];
        double z = 0.0;
        for (int i = 0; i < n; ++i)
            if (state[i].died_at > 0)
                z += portfolio.contracts[i].payments[state[i].died_at - 1];
        out.payoff.values[out.tree.node(leaf).slot] = z;
    }
    return out;
}

} // namespace divprem
