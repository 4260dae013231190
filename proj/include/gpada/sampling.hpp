#pragma once

#include <map>
#include <numeric>

#include "gpada/gp.hpp"

namespace gpada {

namespace detail {

/// ceil(kappa% of base), with exact handling of rational-intent inputs so
/// e.g. 25% of 4 is exactly 1 rather than ceil(1.0000000000000002) = 2.
inline std::int64_t ceil_percent(double kappa, std::int64_t base) {
    const double v = kappa * static_cast<double>(base) / 100.0;
    const double r = std::nearbyint(v);
    if (std::abs(v - r) < 1e-9) return static_cast<std::int64_t>(r);
    return static_cast<std::int64_t>(std::ceil(v));
}

}  // namespace detail

/// PLCS output: the top-kappa% most confident unlabeled samples of each class.
struct ConfidentSelection {
    struct Item {
        SampleId id;
        int pseudo_label;
        double confidence;
    };
    std::vector<std::vector<Item>> per_class;
    double kappa_used = 0.0;

    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& v : per_class) n += v.size();
        return n;
    }
};

/// Selects ceil(kappa/100 * base_counts[c]) ids per class by confidence,
/// capped at the class's available members. Ties break toward smaller id.
inline ConfidentSelection plcs_select(
    const std::map<SampleId, std::pair<int, double>>& confidences, double kappa,
    const std::vector<std::int64_t>& base_counts) {
    if (kappa < 0.0 || kappa > 100.0) fail("plcs_select: kappa must be in [0,100]");
    const int C = static_cast<int>(base_counts.size());
    ConfidentSelection sel;
    sel.kappa_used = kappa;
    sel.per_class.resize(static_cast<std::size_t>(C));

    std::vector<std::vector<ConfidentSelection::Item>> by_class(static_cast<std::size_t>(C));
    for (const auto& [id, pl_conf] : confidences) {
        const auto [pl, conf] = pl_conf;
        if (pl < 0 || pl >= C) fail("plcs_select: pseudo-label " + std::to_string(pl) + " out of range");
        by_class[static_cast<std::size_t>(pl)].push_back({id, pl, conf});
    }
    for (int c = 0; c < C; ++c) {
        auto& items = by_class[static_cast<std::size_t>(c)];
        std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
            if (a.confidence != b.confidence) return a.confidence > b.confidence;
            return a.id < b.id;
        });
        const std::int64_t want = detail::ceil_percent(kappa, base_counts[static_cast<std::size_t>(c)]);
        const std::size_t take = std::min<std::size_t>(items.size(), static_cast<std::size_t>(std::max<std::int64_t>(0, want)));
        sel.per_class[static_cast<std::size_t>(c)].assign(items.begin(), items.begin() + static_cast<long>(take));
    }
    return sel;
}

/// GPAS output: ids ordered by descending posterior variance.
struct QuerySelection {
    std::vector<SampleId> ids;
    std::vector<double> pv_values;
};

inline QuerySelection gpas_select(const PosteriorVarianceVector& pv, std::int64_t b) {
    if (b < 0) fail("gpas_select: b must be >= 0");
    std::vector<std::size_t> order(pv.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
        if (pv.pv[a] != pv.pv[c]) return pv.pv[a] > pv.pv[c];
        return pv.ids[a] < pv.ids[c];
    });
    const std::size_t take = std::min<std::size_t>(pv.size(), static_cast<std::size_t>(b));
    QuerySelection sel;
    sel.ids.reserve(take);
    sel.pv_values.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        sel.ids.push_back(pv.ids[order[i]]);
        sel.pv_values.push_back(pv.pv[order[i]]);
    }
    return sel;
}

/// EMA-tracked per-class uncertainty. A class's entry is set to its first
/// observed average variance, then follows U <- alpha U + (1-alpha) AV.
struct ClassUncertaintyState {
    Vector u;
    std::vector<char> initialized;
    double alpha = 0.9;
    int epoch = 0;
};

inline ClassUncertaintyState make_ucs_state(int num_classes, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) fail("ucs: alpha must be in [0,1]");
    ClassUncertaintyState st;
    st.u = Vector::Zero(num_classes);
    st.initialized.assign(static_cast<std::size_t>(num_classes), 0);
    st.alpha = alpha;
    return st;
}

inline ClassUncertaintyState ucs_update(const ClassUncertaintyState& state,
                                        const PosteriorVarianceVector& pv,
                                        const std::map<SampleId, int>& pseudo_labels) {
    const int C = static_cast<int>(state.u.size());
    Vector sum = Vector::Zero(C);
    Eigen::VectorXi count = Eigen::VectorXi::Zero(C);
    for (std::size_t i = 0; i < pv.size(); ++i) {
        auto it = pseudo_labels.find(pv.ids[i]);
        if (it == pseudo_labels.end())
            fail("ucs_update: missing pseudo-label for id " + std::to_string(pv.ids[i]));
        if (it->second < 0 || it->second >= C) fail("ucs_update: pseudo-label out of range");
        sum[it->second] += pv.pv[i];
        count[it->second] += 1;
    }
    ClassUncertaintyState next = state;
    next.epoch = state.epoch + 1;
    for (int c = 0; c < C; ++c) {
        if (count[c] == 0) continue;  // carry forward unchanged
        const double av = sum[c] / count[c];
        if (!state.initialized[static_cast<std::size_t>(c)]) {
            next.u[c] = av;
            next.initialized[static_cast<std::size_t>(c)] = 1;
        } else {
            next.u[c] = state.alpha * state.u[c] + (1.0 - state.alpha) * av;
        }
    }
    return next;
}

/// Draws |ids| samples with replacement, weighted by the uncertainty of each
/// id's pseudo-class. All-zero weights fall back to uniform.
inline std::vector<SampleId> ucs_resample(const std::vector<SampleId>& ids,
                                          const std::map<SampleId, int>& pseudo_labels,
                                          const ClassUncertaintyState& state, std::uint64_t seed) {
    std::vector<double> weights;
    weights.reserve(ids.size());
    double total = 0.0;
    for (SampleId id : ids) {
        auto it = pseudo_labels.find(id);
        if (it == pseudo_labels.end())
            fail("ucs_resample: missing pseudo-label for id " + std::to_string(id));
        if (it->second < 0 || it->second >= static_cast<int>(state.u.size()))
            fail("ucs_resample: pseudo-label out of range");
        const double w = state.u[it->second];
        if (w < 0.0) fail("ucs_resample: negative class uncertainty");
        weights.push_back(w);
        total += w;
    }
    if (total <= 0.0) {
        weights.assign(ids.size(), 1.0);
        total = static_cast<double>(ids.size());
    }
    std::vector<double> cumulative(weights.size());
    std::partial_sum(weights.begin(), weights.end(), cumulative.begin());

    Rng rng(seed);
    std::vector<SampleId> out;
    out.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const double r = rng.uniform01() * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
        if (it == cumulative.end()) --it;  // r == total edge
        out.push_back(ids[static_cast<std::size_t>(it - cumulative.begin())]);
    }
    return out;
}

}  // namespace gpada
