#include "stopirl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace stopirl {

namespace {

using njson = nlohmann::json;

constexpr double row_sum_tol = 1e-6;

void require(bool ok, const std::string& what) {
    if (!ok) throw schema_violation(what);
}

}  // namespace

std::string to_string(dataset_kind k) {
    switch (k) {
        case dataset_kind::stopping: return "stopping";
        case dataset_kind::sht: return "sht";
        case dataset_kind::search: return "search";
    }
    throw error("unreachable dataset kind");
}

dataset_kind dataset_kind_from_string(const std::string& s) {
    if (s == "stopping") return dataset_kind::stopping;
    if (s == "sht") return dataset_kind::sht;
    if (s == "search") return dataset_kind::search;
    throw schema_violation("unknown dataset kind: " + s);
}

double dataset::action_prob(std::size_t m, std::size_t a) const {
    double p = 0.0;
    for (std::size_t x = 0; x < num_states; ++x) p += prior[x] * policy_at(m, x, a);
    return p;
}

void dataset::validate() const {
    require(num_states >= 2, "need at least two states");
    require(num_actions >= 1, "need at least one action");
    require(prior.size() == num_states, "prior size mismatch");
    require(!envs.empty(), "need at least one environment");
    if (kind != dataset_kind::stopping)
        require(num_actions == num_states, "square policy required");
    require(kind == dataset_kind::sht || !tau_max.has_value(),
            "tau_max only applies to sht data");
    if (tau_max) require(*tau_max >= 1.0 && std::isfinite(*tau_max), "tau_max must be >= 1");
    for (const auto& e : envs) {
        require(e.policy.size() == num_states * num_actions, "policy shape mismatch");
        require(e.counts.size() == num_states, "counts shape mismatch");
        for (long long k : e.counts) require(k >= 1, "every stratum needs trials");
        for (std::size_t x = 0; x < num_states; ++x) {
            double row = 0.0;
            for (std::size_t a = 0; a < num_actions; ++a) {
                double p = e.policy[x * num_actions + a];
                require(std::isfinite(p) && p >= -simplex_tolerance, "policy entries in [0,1]");
                row += p;
            }
            require(std::abs(row - 1.0) <= row_sum_tol, "policy rows sum to one");
        }
        if (kind == dataset_kind::sht) {
            require(std::isfinite(e.mean_stopping_time) && e.mean_stopping_time >= 1.0 - 1e-12,
                    "mean stopping times start at one");
            if (tau_max)
                require(e.mean_stopping_time <= *tau_max + 1e-9,
                        "mean stopping time exceeds tau_max");
        } else {
            require(std::isnan(e.mean_stopping_time),
                    "mean stopping time only applies to sht data");
        }
        if (kind == dataset_kind::search) {
            require(e.search_policy.size() == num_states * num_actions,
                    "search occupation shape mismatch");
            for (std::size_t x = 0; x < num_states; ++x)
                for (std::size_t a = 0; a < num_actions; ++a) {
                    double g = e.search_policy[x * num_actions + a];
                    require(std::isfinite(g) && g >= 0.0, "occupations are nonnegative");
                    if (x == a)
                        require(g >= 1.0 - 1e-12, "the finding search is counted: g(x,x) >= 1");
                }
        } else {
            require(e.search_policy.empty(), "occupations only apply to search data");
        }
    }
}

stopping_aggregator::stopping_aggregator(std::size_t m, std::size_t x, std::size_t a)
    : num_envs(m), num_states(x), num_actions(a),
      action_counts(m * x * a, 0), state_counts(m * x, 0), tau_sums(m * x, 0.0) {}

void stopping_aggregator::add(const trial_record& t) {
    if (t.environment >= num_envs || t.true_state >= num_states)
        throw schema_violation("trial outside the declared shape");
    if (t.action >= num_actions) throw unsupported_action("stop action out of range");
    if (t.stopping_time < 1) throw schema_violation("stopping times start at one");
    std::size_t s = t.environment * num_states + t.true_state;
    ++action_counts[s * num_actions + t.action];
    ++state_counts[s];
    tau_sums[s] += static_cast<double>(t.stopping_time);
    max_tau = std::max(max_tau, t.stopping_time);
}

dataset stopping_aggregator::finish(const belief& prior, dataset_kind kind) const {
    if (kind == dataset_kind::search) throw usage_error("use search_aggregator for search data");
    if (prior.size() != num_states) throw dimension_mismatch("prior size mismatch");
    dataset d;
    d.kind = kind;
    d.prior = prior;
    d.num_states = num_states;
    d.num_actions = num_actions;
    d.envs.resize(num_envs);
    for (std::size_t m = 0; m < num_envs; ++m) {
        auto& e = d.envs[m];
        e.id = static_cast<int>(m);
        e.policy.assign(num_states * num_actions, 0.0);
        e.counts.assign(num_states, 0);
        double mean_tau = 0.0;
        for (std::size_t x = 0; x < num_states; ++x) {
            std::size_t s = m * num_states + x;
            long long k = state_counts[s];
            if (k == 0)
                throw missing_stratum("no trials for environment " + std::to_string(m) +
                                      ", state " + std::to_string(x));
            e.counts[x] = k;
            for (std::size_t a = 0; a < num_actions; ++a)
                e.policy[x * num_actions + a] =
                    static_cast<double>(action_counts[s * num_actions + a]) / static_cast<double>(k);
            mean_tau += prior[x] * (tau_sums[s] / static_cast<double>(k));
        }
        if (kind == dataset_kind::sht) e.mean_stopping_time = mean_tau;
    }
    if (kind == dataset_kind::sht) d.tau_max = static_cast<double>(max_tau);
    d.validate();
    return d;
}

search_aggregator::search_aggregator(std::size_t m, std::size_t x)
    : num_envs(m), num_states(x),
      state_counts(m * x, 0), search_counts(m * x * x, 0.0), final_counts(m * x * x, 0) {}

void search_aggregator::add(const search_trial_record& t) {
    if (t.environment >= num_envs || t.true_state >= num_states)
        throw schema_violation("trial outside the declared shape");
    if (t.actions.empty() || t.actions.size() != t.stopping_time)
        throw schema_violation("action trace must cover every search step");
    std::size_t s = t.environment * num_states + t.true_state;
    for (std::size_t a : t.actions) {
        if (a >= num_states) throw unsupported_action("search location out of range");
        search_counts[s * num_states + a] += 1.0;
    }
    if (t.actions.back() != t.true_state)
        throw schema_violation("a search ends where the target is found");
    ++final_counts[s * num_states + t.actions.back()];
    ++state_counts[s];
}

dataset search_aggregator::finish(const belief& prior) const {
    if (prior.size() != num_states) throw dimension_mismatch("prior size mismatch");
    dataset d;
    d.kind = dataset_kind::search;
    d.prior = prior;
    d.num_states = num_states;
    d.num_actions = num_states;
    d.envs.resize(num_envs);
    for (std::size_t m = 0; m < num_envs; ++m) {
        auto& e = d.envs[m];
        e.id = static_cast<int>(m);
        e.policy.assign(num_states * num_states, 0.0);
        e.search_policy.assign(num_states * num_states, 0.0);
        e.counts.assign(num_states, 0);
        for (std::size_t x = 0; x < num_states; ++x) {
            std::size_t s = m * num_states + x;
            long long k = state_counts[s];
            if (k == 0)
                throw missing_stratum("no trials for environment " + std::to_string(m) +
                                      ", state " + std::to_string(x));
            e.counts[x] = k;
            for (std::size_t a = 0; a < num_states; ++a) {
                e.search_policy[x * num_states + a] =
                    search_counts[s * num_states + a] / static_cast<double>(k);
                e.policy[x * num_states + a] =
                    static_cast<double>(final_counts[s * num_states + a]) / static_cast<double>(k);
            }
        }
    }
    d.validate();
    return d;
}

dataset aggregate_stopping(const belief& prior, std::size_t num_envs,
                           std::size_t num_states, std::size_t num_actions,
                           const std::vector<trial_record>& trials) {
    stopping_aggregator agg(num_envs, num_states, num_actions);
    for (const auto& t : trials) agg.add(t);
    return agg.finish(prior, dataset_kind::stopping);
}

dataset aggregate_sht(const belief& prior, std::size_t num_envs, std::size_t num_states,
                      const std::vector<trial_record>& trials) {
    stopping_aggregator agg(num_envs, num_states, num_states);
    for (const auto& t : trials) agg.add(t);
    return agg.finish(prior, dataset_kind::sht);
}

dataset aggregate_search(const belief& prior, std::size_t num_envs, std::size_t num_states,
                         const std::vector<search_trial_record>& trials) {
    search_aggregator agg(num_envs, num_states);
    for (const auto& t : trials) agg.add(t);
    return agg.finish(prior);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

void append_vector(std::string& out, const std::vector<double>& v) {
    out += '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    out += ']';
}

void append_matrix(std::string& out, const std::vector<double>& m,
                   std::size_t rows, std::size_t cols) {
    out += '[';
    for (std::size_t r = 0; r < rows; ++r) {
        if (r) out += ',';
        out += '[';
        for (std::size_t c = 0; c < cols; ++c) {
            if (c) out += ',';
            out += format_double(m[r * cols + c]);
        }
        out += ']';
    }
    out += ']';
}

}  // namespace

std::string dataset_to_json(const dataset& d) {
    d.validate();
    std::string out;
    out += "{\"schema_version\":" + std::to_string(dataset_schema_version);
    out += ",\"kind\":\"" + to_string(d.kind) + "\"";
    out += ",\"prior\":";
    append_vector(out, d.prior.p);
    if (d.tau_max) out += ",\"tau_max\":" + format_double(*d.tau_max);
    out += ",\"environments\":[";
    for (std::size_t m = 0; m < d.num_envs(); ++m) {
        const auto& e = d.envs[m];
        if (m) out += ',';
        out += "{\"id\":" + std::to_string(e.id);
        out += ",\"policy\":";
        append_matrix(out, e.policy, d.num_states, d.num_actions);
        out += ",\"counts\":[";
        for (std::size_t x = 0; x < d.num_states; ++x) {
            if (x) out += ',';
            out += std::to_string(e.counts[x]);
        }
        out += ']';
        if (d.kind == dataset_kind::sht)
            out += ",\"mean_stopping_time\":" + format_double(e.mean_stopping_time);
        if (d.kind == dataset_kind::search) {
            out += ",\"search_policy\":";
            append_matrix(out, e.search_policy, d.num_states, d.num_actions);
        }
        out += '}';
    }
    out += "]}";
    return out;
}

namespace {

std::vector<double> parse_matrix(const njson& j, std::size_t rows, std::size_t cols,
                                 const std::string& what) {
    if (!j.is_array() || j.size() != rows) throw schema_violation(what + ": row count mismatch");
    std::vector<double> m;
    m.reserve(rows * cols);
    for (const auto& row : j) {
        if (!row.is_array() || row.size() != cols)
            throw schema_violation(what + ": column count mismatch");
        for (const auto& v : row) {
            if (!v.is_number()) throw schema_violation(what + ": numeric entries required");
            m.push_back(v.get<double>());
        }
    }
    return m;
}

}  // namespace

dataset dataset_from_json(const std::string& text) {
    njson j;
    try {
        j = njson::parse(text);
    } catch (const njson::exception& ex) {
        throw schema_violation(std::string("invalid JSON: ") + ex.what());
    }
    if (!j.is_object()) throw schema_violation("top level must be an object");
    if (!j.contains("schema_version") || !j["schema_version"].is_number_integer())
        throw schema_violation("schema_version missing");
    if (j["schema_version"].get<int>() != dataset_schema_version)
        throw version_mismatch("unsupported schema_version " + j["schema_version"].dump());
    if (!j.contains("kind") || !j["kind"].is_string())
        throw schema_violation("kind missing");
    dataset d;
    d.kind = dataset_kind_from_string(j["kind"].get<std::string>());
    if (!j.contains("prior") || !j["prior"].is_array())
        throw schema_violation("prior missing");
    try {
        d.prior = validate_simplex(j["prior"].get<std::vector<double>>());
    } catch (const not_a_simplex_point& ex) {
        throw schema_violation(std::string("prior: ") + ex.what());
    }
    d.num_states = d.prior.size();
    if (j.contains("tau_max")) {
        if (!j["tau_max"].is_number()) throw schema_violation("tau_max must be numeric");
        d.tau_max = j["tau_max"].get<double>();
    }
    if (!j.contains("environments") || !j["environments"].is_array() || j["environments"].empty())
        throw schema_violation("environments missing");
    for (const auto& je : j["environments"]) {
        if (!je.is_object()) throw schema_violation("environment entries must be objects");
        dataset::env e;
        if (!je.contains("id") || !je["id"].is_number_integer())
            throw schema_violation("environment id missing");
        e.id = je["id"].get<int>();
        if (!je.contains("policy") || !je["policy"].is_array() || je["policy"].empty())
            throw schema_violation("policy missing");
        if (d.envs.empty()) d.num_actions = je["policy"][0].size();
        e.policy = parse_matrix(je["policy"], d.num_states, d.num_actions, "policy");
        if (!je.contains("counts") || !je["counts"].is_array())
            throw schema_violation("counts missing");
        for (const auto& c : je["counts"]) {
            if (!c.is_number_integer()) throw schema_violation("counts must be integers");
            e.counts.push_back(c.get<long long>());
        }
        if (d.kind == dataset_kind::sht) {
            if (!je.contains("mean_stopping_time") || !je["mean_stopping_time"].is_number())
                throw schema_violation("mean_stopping_time missing");
            e.mean_stopping_time = je["mean_stopping_time"].get<double>();
        }
        if (d.kind == dataset_kind::search) {
            if (!je.contains("search_policy") || !je["search_policy"].is_array())
                throw schema_violation("search_policy missing");
            e.search_policy =
                parse_matrix(je["search_policy"], d.num_states, d.num_actions, "search_policy");
        }
        d.envs.push_back(std::move(e));
    }
    d.validate();
    return d;
}

void write_dataset(const dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot open for writing: " + path);
    out << dataset_to_json(d) << '\n';
    if (!out) throw error("write failed: " + path);
}

dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return dataset_from_json(buf.str());
}

std::string region_to_csv(std::size_t env_index, const std::vector<region_point>& pts) {
    std::string out = "env,cost_1,cost_2,feasible\n";
    for (const auto& p : pts) {
        out += std::to_string(env_index);
        out += ',';
        out += format_double(p.cost_1);
        out += ',';
        out += format_double(p.cost_2);
        out += ',';
        out += p.feasible ? '1' : '0';
        out += '\n';
    }
    return out;
}

}  // namespace stopirl
