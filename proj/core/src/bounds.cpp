#include "renki/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "renki/errors.hpp"

namespace renki::bounds {

namespace {
constexpr double kE = 2.718281828459045;

// log clamped from below at log(2), flagging when the clamp fires.
double clamped_log(double x, bool& clamped) {
    if (x < 2.0) {
        clamped = true;
        return std::log(2.0);
    }
    return std::log(x);
}
}  // namespace

double BoundInputs::total_relation_params() const {
    double w = 0.0;
    for (const auto& rel : layer_params)
        for (const double p : rel) w += p;
    return w;
}

double BoundInputs::avg_relation_params() const {
    return relations > 0 ? total_relation_params() / relations : 0.0;
}

int BoundInputs::max_layers() const {
    std::size_t l = 0;
    for (const auto& rel : layer_params) l = std::max(l, rel.size());
    return static_cast<int>(l);
}

double BoundInputs::avg_cumulative_depth() const {
    // sum over relations and layers of the parameter count up to that layer
    double total = 0.0;
    for (const auto& rel : layer_params) {
        double upto = 0.0;
        for (const double p : rel) {
            upto += p;
            total += upto;
        }
    }
    const double kw = total_relation_params();
    return kw > 0.0 ? total / kw : 0.0;
}

namespace {

BoundInputs identical_relation_inputs(int entities, int embedding_dim, int relations,
                                      const std::vector<double>& widths,
                                      const std::vector<double>& params, int nets_per_relation) {
    BoundInputs in;
    in.entities = entities;
    in.embedding_dim = embedding_dim;
    in.relations = relations;
    std::vector<double> w = widths, p = params;
    if (nets_per_relation == 2) {
        // two parallel networks per relation, widths and parameter counts
        // stack layerwise
        for (auto& v : w) v *= 2.0;
        for (auto& v : p) v *= 2.0;
    }
    in.layer_widths.assign(relations, w);
    in.layer_params.assign(relations, p);
    return in;
}

void fully_connected_counts(std::span<const std::size_t> dims, std::vector<double>& widths,
                            std::vector<double>& params) {
    widths.clear();
    params.clear();
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        widths.push_back(static_cast<double>(dims[l + 1]));
        params.push_back(static_cast<double>(dims[l] * dims[l + 1] + dims[l + 1]));
    }
}

}  // namespace

BoundInputs inputs_for_cnkg(int entities, int embedding_dim, int relations,
                            std::span<const std::size_t> hidden) {
    std::vector<std::size_t> dims;
    dims.push_back(2 * static_cast<std::size_t>(embedding_dim));
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(1);
    std::vector<double> widths, params;
    fully_connected_counts(dims, widths, params);
    return identical_relation_inputs(entities, embedding_dim, relations, widths, params, 1);
}

BoundInputs inputs_for_ipnkg(int entities, int embedding_dim, int relations,
                             std::span<const std::size_t> hidden, std::size_t out_dim) {
    std::vector<std::size_t> dims;
    dims.push_back(static_cast<std::size_t>(embedding_dim));
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(out_dim == 0 ? static_cast<std::size_t>(embedding_dim) : out_dim);
    std::vector<double> widths, params;
    fully_connected_counts(dims, widths, params);
    return identical_relation_inputs(entities, embedding_dim, relations, widths, params, 2);
}

long moe_vc_bound(std::span<const long> vc_dims) {
    if (vc_dims.empty()) throw ConfigError("moe_vc_bound needs at least one expert");
    long sum = 0;
    for (const long d : vc_dims) {
        if (d < 0) throw ConfigError("VC-dimensions must be nonnegative");
        sum += d;
    }
    return 4 * sum;
}

BoundValue pdim_fixed_embedding(std::span<const long> layers_per_relation,
                                std::span<const double> params_per_relation) {
    if (layers_per_relation.size() != params_per_relation.size())
        throw ShapeError("per-relation lists must align");
    BoundValue out;
    for (std::size_t k = 0; k < layers_per_relation.size(); ++k) {
        const double l = static_cast<double>(layers_per_relation[k]);
        const double w = params_per_relation[k];
        if (l <= 0.0 || w <= 0.0) throw ConfigError("layer and parameter counts must be positive");
        out.value += l * w * clamped_log(w, out.clamped);
    }
    return out;
}

BoundValue pdim_trainable_embedding(double entities, double embedding_dim, double relations,
                                    double avg_params, double layers) {
    if (entities <= 0 || embedding_dim <= 0 || relations <= 0 || avg_params <= 0 || layers <= 0)
        throw ConfigError("all size arguments must be positive");
    BoundValue out;
    const double kw = relations * avg_params;
    out.value = (entities * embedding_dim + kw) * layers * clamped_log(kw, out.clamped);
    return out;
}

double partition_complexity_u(const BoundInputs& in, Family family) {
    if (in.pieces < 1 || in.degree < 0) throw ConfigError("need S >= 1 and Q >= 0");
    if (in.layer_widths.size() != in.layer_params.size())
        throw ShapeError("layer widths and parameter counts must align per relation");
    const int levels = in.max_layers();
    // Combined widths across relations: hidden layers stack, but the output
    // level counts once (a sample selects a single relation's output).
    std::vector<double> combined(static_cast<std::size_t>(levels), 0.0);
    for (const auto& rel : in.layer_widths) {
        if (rel.size() != static_cast<std::size_t>(levels))
            throw ShapeError("relations must have equal depth for the partition bound");
        for (std::size_t l = 0; l + 1 < rel.size(); ++l) combined[l] += rel[l];
    }
    if (levels > 0) combined[static_cast<std::size_t>(levels) - 1] = 1.0;

    const double s = static_cast<double>(in.pieces);
    double u = 0.0;
    if (in.degree <= 1) {
        for (int l = 1; l <= levels; ++l)
            u += static_cast<double>(l + 1) * combined[static_cast<std::size_t>(l) - 1];
        u *= s;
    } else {
        for (int l = 1; l <= levels; ++l)
            u += combined[static_cast<std::size_t>(l) - 1] *
                 std::pow(static_cast<double>(in.degree), l);
        u *= 3.0 * s;
    }
    return family == Family::IpNkg ? 2.0 * u : u;
}

BoundValue vc_partition_bound(const BoundInputs& in, Family family) {
    if (in.entities <= 0 || in.embedding_dim <= 0 || in.relations <= 0)
        throw ConfigError("need N, D, K >= 1");
    const double u = partition_complexity_u(in, family);
    const double l = static_cast<double>(in.max_layers());
    const double lbar = in.avg_cumulative_depth();
    const double kw = in.total_relation_params();
    BoundValue out;
    out.value = 3.0 *
                (l * in.entities * in.embedding_dim + lbar * kw) *
                clamped_log(8.0 * kE * u, out.clamped);
    return out;
}

BoundValue delta_stat(const BoundInputs& in, Regime regime) {
    if (in.sample_size <= 0.0) throw ConfigError("sample size must be positive");
    const double nd = static_cast<double>(in.entities) * in.embedding_dim;
    const double kw = in.total_relation_params();
    const double l = static_cast<double>(in.max_layers());
    const double b_sq = in.score_bound * in.score_bound;
    const double lead = regime == Regime::InSample ? in.sigma_h_sq + b_sq : b_sq;

    BoundValue out;
    const double capacity = (nd + kw) * l * clamped_log(kw, out.clamped);
    double tail = std::log(in.sample_size / ((nd + kw) * l));
    if (tail < 0.0) {
        tail = 0.0;
        out.clamped = true;
    }
    out.value = lead * capacity / in.sample_size * tail;
    return out;
}

int brute_force_vc(const FiniteClass& cls, int max_points) {
    if (cls.labelings.size() > kMaxEnumeratedFunctions)
        throw BudgetError("function class too large to enumerate: " +
                          std::to_string(cls.labelings.size()));
    for (const auto& row : cls.labelings)
        if (row.size() != cls.domain_size)
            throw ShapeError("labeling length != domain size");
    if (cls.labelings.empty() || cls.domain_size == 0) return 0;

    const int cap = std::min<int>(max_points, static_cast<int>(cls.domain_size));
    int vc = 0;
    std::vector<std::size_t> subset;
    std::vector<char> pattern_seen;

    // Is some m-subset shattered? Enumerate subsets in lexicographic order.
    const auto shattered = [&](int m) {
        subset.assign(static_cast<std::size_t>(m), 0);
        for (int i = 0; i < m; ++i) subset[static_cast<std::size_t>(i)] = static_cast<std::size_t>(i);
        const std::size_t want = std::size_t{1} << m;
        while (true) {
            pattern_seen.assign(want, 0);
            std::size_t distinct = 0;
            for (const auto& row : cls.labelings) {
                std::size_t pat = 0;
                for (int i = 0; i < m; ++i)
                    pat |= static_cast<std::size_t>(row[subset[static_cast<std::size_t>(i)]] != 0)
                           << i;
                if (!pattern_seen[pat]) {
                    pattern_seen[pat] = 1;
                    if (++distinct == want) return true;
                }
            }
            // next subset
            int i = m - 1;
            while (i >= 0 &&
                   subset[static_cast<std::size_t>(i)] ==
                       cls.domain_size - static_cast<std::size_t>(m - i))
                --i;
            if (i < 0) break;
            ++subset[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < m; ++j)
                subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
        }
        return false;
    };

    for (int m = 1; m <= cap; ++m) {
        // 2^m distinct patterns cannot come from fewer functions
        if ((std::size_t{1} << m) > cls.labelings.size()) break;
        if (!shattered(m)) break;
        vc = m;
    }
    return vc;
}

}  // namespace renki::bounds
