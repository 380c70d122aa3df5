#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace renki::bounds {

// Model family for the partition-counting VC bound; the inner-product
// family doubles the polynomial degrees, hence its U.
enum class Family { CNkg, IpNkg };

// Size arguments for the capacity-bound calculators. layer_widths[k][l] is
// the width of layer l+1 of relation k's network (the output layer
// included); layer_params[k][l] is that layer's parameter count. Biases are
// counted as parameters here.
struct BoundInputs {
    int entities = 0;       // N
    int embedding_dim = 0;  // D
    int relations = 0;      // K
    std::vector<std::vector<double>> layer_widths;
    std::vector<std::vector<double>> layer_params;
    int pieces = 2;         // S of the piecewise-polynomial activation
    int degree = 1;         // Q (ReLU: S = 2, Q = 1)
    double score_bound = 1.0;  // B
    double sigma_h_sq = 1.0;
    double sample_size = 0.0;  // n
    double delta_opt = 0.0;

    double total_relation_params() const;  // sum_k W_k
    double avg_relation_params() const;    // W
    int max_layers() const;                // L
    // (1 / K W) sum_k sum_l sum_{i<=l} W_k^(i)
    double avg_cumulative_depth() const;
};

// BoundInputs for K identical fully-connected concat networks
// (2D -> hidden... -> 1). ReLU activation: S = 2, Q = 1.
BoundInputs inputs_for_cnkg(int entities, int embedding_dim, int relations,
                            std::span<const std::size_t> hidden);
// Same for the inner-product family (D -> hidden... -> out_dim, two nets per
// relation).
BoundInputs inputs_for_ipnkg(int entities, int embedding_dim, int relations,
                             std::span<const std::size_t> hidden, std::size_t out_dim);

// A bound value plus whether any log clamp fired; clamps are surfaced, not
// silently applied.
struct BoundValue {
    double value = 0.0;
    bool clamped = false;
};

// VC-dimension of a mixture of K expert classes: 4 * sum of the experts'
// VC-dimensions.
long moe_vc_bound(std::span<const long> vc_dims);

// Growth function sum_k L_k W_k log W_k with the hidden constant set to 1
// and natural logs; log clamped at log 2 when W_k < 2.
BoundValue pdim_fixed_embedding(std::span<const long> layers_per_relation,
                                std::span<const double> params_per_relation);

// (N D + K W) L log(K W), same conventions.
BoundValue pdim_trainable_embedding(double entities, double embedding_dim, double relations,
                                    double avg_params, double layers);

// The piecewise-polynomial partition complexity U; the inner-product family
// doubles the concat value.
double partition_complexity_u(const BoundInputs& in, Family family);

// 3 (L N D + Lbar K W) log(8 e U)
BoundValue vc_partition_bound(const BoundInputs& in, Family family);

enum class Regime { InSample, OutOfSample };

// In-sample:   (sigma_H^2 + B^2) (ND + KW) L log(KW) / n * log(n / ((ND+KW) L))
// Out-of-sample: B^2 (ND + KW) L log(KW) / n * log(n / ((ND+KW) L))
// The trailing log is clamped at 0 (flagged) when n is small.
BoundValue delta_stat(const BoundInputs& in, Regime regime);

// Constant of the capped-weight out-of-sample oracle inequality, reproduced
// verbatim; the toolkit does not re-derive it.
inline constexpr double kCappedOracleConstant = 22132.0;

// A finite function class over a finite domain: labelings[f][p] is the
// binary label function f assigns to domain point p.
struct FiniteClass {
    std::vector<std::vector<std::uint8_t>> labelings;
    std::size_t domain_size = 0;
};

inline constexpr std::size_t kMaxEnumeratedFunctions = 1'000'000;

// Largest m <= max_points such that some m-point subset is shattered, by
// exhaustive search. Throws BudgetError past kMaxEnumeratedFunctions.
int brute_force_vc(const FiniteClass& cls, int max_points);

}  // namespace renki::bounds
