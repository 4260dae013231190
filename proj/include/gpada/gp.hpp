#pragma once

#include <map>
#include <set>

#include "gpada/kernel.hpp"
#include "gpada/pool.hpp"

namespace gpada {

/// Per-class feature stacks: labeled = source + queried target + PLCS target
/// (PLCS entries counted under their stored pseudo-label), unlabeled = the
/// still-unqueried target samples grouped by current pseudo-label.
struct ClassPartition {
    std::vector<FeatureBlock> labeled;
    std::vector<FeatureBlock> unlabeled;

    int num_classes() const { return static_cast<int>(labeled.size()); }
};

inline ClassPartition class_partition(const PoolState& pool, const Dataset& ds,
                                      const std::map<SampleId, int>& pseudo_labels) {
    const int C = ds.num_classes;
    for (SampleId id : pool.target_unlabeled_ids)
        if (!pseudo_labels.count(id))
            fail("class_partition: missing pseudo-label for unlabeled id " + std::to_string(id));

    std::vector<std::vector<SampleId>> lab_ids(static_cast<std::size_t>(C));
    std::vector<std::vector<SampleId>> unlab_ids(static_cast<std::size_t>(C));
    auto class_checked = [&](int c, SampleId id) {
        if (c < 0 || c >= C)
            fail("class_partition: label " + std::to_string(c) + " out of range for id " + std::to_string(id));
        return static_cast<std::size_t>(c);
    };
    for (SampleId id : pool.source_ids)
        lab_ids[class_checked(ds.by_id(id).true_label, id)].push_back(id);
    for (SampleId id : pool.target_queried_ids)
        lab_ids[class_checked(ds.by_id(id).true_label, id)].push_back(id);
    for (const auto& [id, pl] : pool.target_plcs) lab_ids[class_checked(pl, id)].push_back(id);
    for (SampleId id : pool.target_unlabeled_ids)
        unlab_ids[class_checked(pseudo_labels.at(id), id)].push_back(id);

    ClassPartition part;
    part.labeled.resize(static_cast<std::size_t>(C));
    part.unlabeled.resize(static_cast<std::size_t>(C));
    auto build = [&](const std::vector<SampleId>& ids) {
        FeatureBlock block;
        block.ids = ids;
        std::sort(block.ids.begin(), block.ids.end());
        block.rows.resize(static_cast<long>(block.ids.size()), ds.dim);
        for (std::size_t i = 0; i < block.ids.size(); ++i)
            block.rows.row(static_cast<long>(i)) = ds.by_id(block.ids[i]).features.transpose();
        return block;
    };
    for (int c = 0; c < C; ++c) {
        part.labeled[static_cast<std::size_t>(c)] = build(lab_ids[static_cast<std::size_t>(c)]);
        part.unlabeled[static_cast<std::size_t>(c)] = build(unlab_ids[static_cast<std::size_t>(c)]);
    }
    return part;
}

/// Posterior of one class-wise GP over its unlabeled members.
struct ClassGpPosterior {
    int class_id = 0;
    Matrix mean;        // N_u x d
    Matrix covariance;  // N_u x N_u
    std::vector<SampleId> member_ids;
};

/// mean  = K(U,L) (K(L,L)+jI)^-1 L
/// cov   = K(U,U) - K(U,L) (K(L,L)+jI)^-1 K(L,U)
/// The solve goes through an LLT factorization; on failure the jitter
/// escalates x10 up to 1e-1 before reporting an error.
inline ClassGpPosterior gp_posterior(const FeatureBlock& unlabeled, const FeatureBlock& labeled,
                                     double jitter, int class_id = 0) {
    if (labeled.empty())
        fail("gp_posterior: empty labeled conditioning set (class " + std::to_string(class_id) + ")");
    if (!(jitter > 0.0)) fail("gp_posterior: jitter must be > 0");

    ClassGpPosterior post;
    post.class_id = class_id;
    post.member_ids = unlabeled.ids;
    if (unlabeled.empty()) {
        post.mean.resize(0, labeled.rows.cols());
        post.covariance.resize(0, 0);
        return post;
    }

    const Matrix k_ll = cosine_kernel(labeled.rows, labeled.rows);
    const Matrix k_ul = cosine_kernel(unlabeled.rows, labeled.rows);
    const Matrix k_uu = cosine_kernel(unlabeled.rows, unlabeled.rows);

    Eigen::LLT<Matrix> llt;
    double j = jitter;
    for (;;) {
        Matrix a = k_ll;
        a.diagonal().array() += j;
        llt.compute(a);
        if (llt.info() == Eigen::Success) break;
        j *= 10.0;
        if (j > 0.1 * (1.0 + 1e-12))
            fail("gp_posterior: SPD factorization failed for class " + std::to_string(class_id) +
                 " after jitter escalation to " + format_double(j));
    }
    post.mean = k_ul * llt.solve(labeled.rows);
    post.covariance = k_uu - k_ul * llt.solve(k_ul.transpose());
    return post;
}

/// Per-class posterior variances, diagonal clamped at zero.
struct ClassVariances {
    int class_id = 0;
    std::vector<double> pv;
    std::vector<SampleId> ids;
};

inline ClassVariances posterior_variance(const ClassGpPosterior& post) {
    ClassVariances out;
    out.class_id = post.class_id;
    out.ids = post.member_ids;
    out.pv.reserve(static_cast<std::size_t>(post.covariance.rows()));
    for (long i = 0; i < post.covariance.rows(); ++i)
        out.pv.push_back(std::max(0.0, post.covariance(i, i)));
    return out;
}

/// PV values for all unlabeled samples, concatenated in ascending class order.
struct PosteriorVarianceVector {
    std::vector<double> pv;
    std::vector<SampleId> ids;

    std::size_t size() const { return pv.size(); }
};

inline PosteriorVarianceVector assemble_pv(const std::vector<ClassVariances>& per_class) {
    std::vector<const ClassVariances*> ordered;
    ordered.reserve(per_class.size());
    for (const ClassVariances& cv : per_class) ordered.push_back(&cv);
    std::sort(ordered.begin(), ordered.end(),
              [](const ClassVariances* a, const ClassVariances* b) { return a->class_id < b->class_id; });
    PosteriorVarianceVector out;
    std::set<SampleId> seen;
    for (const ClassVariances* cv : ordered) {
        if (cv->pv.size() != cv->ids.size()) fail("assemble_pv: misaligned class variance vector");
        for (std::size_t i = 0; i < cv->ids.size(); ++i) {
            if (!seen.insert(cv->ids[i]).second)
                fail("assemble_pv: duplicate id " + std::to_string(cv->ids[i]) + " across classes");
            out.pv.push_back(cv->pv[i]);
            out.ids.push_back(cv->ids[i]);
        }
    }
    return out;
}

/// One PV vector per class. Classes with an empty labeled conditioning set
/// fall back to the prior variance K(x,x) = 1 for every member.
inline std::vector<ClassVariances> class_posterior_variances(const ClassPartition& part, double jitter) {
    std::vector<ClassVariances> out;
    out.reserve(static_cast<std::size_t>(part.num_classes()));
    for (int c = 0; c < part.num_classes(); ++c) {
        const FeatureBlock& fu = part.unlabeled[static_cast<std::size_t>(c)];
        const FeatureBlock& fl = part.labeled[static_cast<std::size_t>(c)];
        if (fu.empty()) {
            out.push_back(ClassVariances{c, {}, {}});
        } else if (fl.empty()) {
            out.push_back(ClassVariances{c, std::vector<double>(fu.ids.size(), 1.0), fu.ids});
        } else {
            out.push_back(posterior_variance(gp_posterior(fu, fl, jitter, c)));
        }
    }
    return out;
}

}  // namespace gpada
