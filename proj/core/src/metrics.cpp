#include "renki/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "renki/errors.hpp"
#include "renki/rng.hpp"

namespace renki {

double weighted_mse(const ScoreModel& model, const EmbeddingTable& emb,
                    std::span<const Triple> triples, std::span<const double> weights,
                    const ScoreOracle& oracle) {
    if (!weights.empty() && weights.size() != triples.size())
        throw ShapeError("weights length != triple count");
    if (triples.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < triples.size(); ++i) {
        const double r = score(model, emb, triples[i]) - oracle(triples[i]);
        sum += (weights.empty() ? 1.0 : weights[i]) * r * r;
    }
    return sum / static_cast<double>(triples.size());
}

namespace {

std::uint64_t triple_key(const Triple& t) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.head)) << 40) ^
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.relation)) << 20) ^
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.tail));
}

}  // namespace

std::vector<Triple> corrupt_negatives(std::span<const Triple> positives,
                                      std::span<const int> entity_categories, std::uint64_t seed) {
    // category -> member entities
    std::unordered_map<int, std::vector<EntityId>> members;
    for (std::size_t i = 0; i < entity_categories.size(); ++i)
        members[entity_categories[i]].push_back(static_cast<EntityId>(i));

    std::unordered_set<std::uint64_t> positive_keys;
    positive_keys.reserve(positives.size() * 2);
    for (const auto& p : positives) {
        const auto n = static_cast<std::int64_t>(entity_categories.size());
        if (p.head >= n || p.tail >= n)
            throw DataError("entity categories do not cover entity " +
                            std::to_string(std::max(p.head, p.tail)));
        positive_keys.insert(triple_key(p));
    }

    constexpr int kRetryCap = 64;
    Rng rng(seed);
    std::vector<Triple> negatives;
    negatives.reserve(positives.size());

    for (std::size_t i = 0; i < positives.size(); ++i) {
        const Triple& pos = positives[i];
        const bool corrupt_head = rng.coin();
        const EntityId original = corrupt_head ? pos.head : pos.tail;
        const auto& pool = members.at(entity_categories[static_cast<std::size_t>(original)]);
        if (pool.size() < 2)
            throw DataError("triple " + std::to_string(i) +
                            " cannot be corrupted: its category has a single entity");

        const auto candidate_with = [&](EntityId e) {
            Triple neg = pos;
            (corrupt_head ? neg.head : neg.tail) = e;
            return neg;
        };

        bool found = false;
        for (int attempt = 0; attempt < kRetryCap && !found; ++attempt) {
            const EntityId e = pool[rng.below(pool.size())];
            if (e == original) continue;
            const Triple neg = candidate_with(e);
            if (positive_keys.count(triple_key(neg))) continue;
            negatives.push_back(neg);
            found = true;
        }
        if (!found) {
            // Retry budget spent; enumerate the remaining valid candidates.
            std::vector<EntityId> valid;
            for (const EntityId e : pool) {
                if (e == original) continue;
                if (!positive_keys.count(triple_key(candidate_with(e)))) valid.push_back(e);
            }
            if (valid.empty())
                throw DataError("triple " + std::to_string(i) +
                                " cannot be corrupted: every candidate is a positive");
            negatives.push_back(candidate_with(valid[rng.below(valid.size())]));
        }
    }
    return negatives;
}

double auc(std::span<const double> positive_scores, std::span<const double> negative_scores) {
    if (positive_scores.empty() || negative_scores.empty())
        throw ConfigError("auc needs nonempty positive and negative scores");

    struct Entry {
        double score;
        bool positive;
    };
    std::vector<Entry> all;
    all.reserve(positive_scores.size() + negative_scores.size());
    for (const double s : positive_scores) all.push_back({s, true});
    for (const double s : negative_scores) all.push_back({s, false});
    std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.score < b.score; });

    // Average ranks over ties, then the Mann-Whitney statistic.
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].score == all[i].score) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t k = i; k < j; ++k)
            if (all[k].positive) pos_rank_sum += avg_rank;
        i = j;
    }
    const auto np = static_cast<double>(positive_scores.size());
    const auto nn = static_cast<double>(negative_scores.size());
    const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
    return u / (np * nn);
}

double classification_error(std::span<const double> scores, std::span<const int> labels,
                            double threshold) {
    if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
    if (scores.empty()) return 0.0;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] > threshold;
        const bool actual = labels[i] != 0;
        if (predicted != actual) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(scores.size());
}

double best_threshold(std::span<const double> positive_scores,
                      std::span<const double> negative_scores) {
    if (positive_scores.empty() || negative_scores.empty())
        throw ConfigError("best_threshold needs nonempty scores on both sides");
    struct Entry {
        double score;
        bool positive;
    };
    std::vector<Entry> all;
    all.reserve(positive_scores.size() + negative_scores.size());
    for (const double s : positive_scores) all.push_back({s, true});
    for (const double s : negative_scores) all.push_back({s, false});
    std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.score < b.score; });

    // Scan cut points; classify "> threshold" as positive. Balanced error =
    // (miss rate + false alarm rate) / 2.
    const double np = static_cast<double>(positive_scores.size());
    const double nn = static_cast<double>(negative_scores.size());
    double pos_below = 0.0, neg_below = 0.0;
    double best = 0.5 * (0.0 / np + (nn - 0.0) / nn);  // threshold below all scores
    double best_t = all.front().score - 1.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].score == all[i].score) ++j;
        for (std::size_t k = i; k < j; ++k) (all[k].positive ? pos_below : neg_below) += 1.0;
        const double err = 0.5 * (pos_below / np + (nn - neg_below) / nn);
        if (err < best) {
            best = err;
            best_t = (j < all.size()) ? 0.5 * (all[i].score + all[j].score) : all[i].score + 1.0;
        }
        i = j;
    }
    return best_t;
}

double weighted_auc_average(const std::map<RelationId, double>& auc_per_relation,
                            const std::map<RelationId, std::size_t>& counts) {
    double num = 0.0, den = 0.0;
    for (const auto& [rel, a] : auc_per_relation) {
        const auto it = counts.find(rel);
        const double c = it == counts.end() ? 0.0 : static_cast<double>(it->second);
        num += c * a;
        den += c;
    }
    return den > 0.0 ? num / den : 0.0;
}

}  // namespace renki
