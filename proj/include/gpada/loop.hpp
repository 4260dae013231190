#pragma once

#include <chrono>
#include <map>

#include "gpada/gp.hpp"
#include "gpada/metrics.hpp"
#include "gpada/model.hpp"
#include "gpada/pool.hpp"
#include "gpada/sampling.hpp"

namespace gpada {

enum class Strategy { gpas_plcs_ucs, gpas_ucs, gpas, random, entropy };

inline std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::gpas_plcs_ucs: return "gpas_plcs_ucs";
        case Strategy::gpas_ucs: return "gpas_ucs";
        case Strategy::gpas: return "gpas";
        case Strategy::random: return "random";
        case Strategy::entropy: return "entropy";
    }
    fail("unknown strategy");
}

inline Strategy strategy_from_string(const std::string& s) {
    if (s == "gpas_plcs_ucs") return Strategy::gpas_plcs_ucs;
    if (s == "gpas_ucs") return Strategy::gpas_ucs;
    if (s == "gpas") return Strategy::gpas;
    if (s == "random") return Strategy::random;
    if (s == "entropy") return Strategy::entropy;
    fail("unknown strategy '" + s + "'");
}

inline bool strategy_uses_gp(Strategy s) {
    return s == Strategy::gpas_plcs_ucs || s == Strategy::gpas_ucs || s == Strategy::gpas;
}
inline bool strategy_uses_plcs(Strategy s) { return s == Strategy::gpas_plcs_ucs; }
inline bool strategy_uses_ucs(Strategy s) {
    return s == Strategy::gpas_plcs_ucs || s == Strategy::gpas_ucs;
}

struct LoopConfig {
    int rounds = 5;
    double budget_fraction = 0.05;
    double kappa_start = 1.0;
    double kappa_step = 1.0;
    int warmup_epochs = 5;
    int epochs_per_round = 3;
    double alpha = 0.9;
    double lambda = 1.0;
    double jitter = 1e-4;
    OptimizerConfig optimizer;
    CommitteeConfig committee;
    double eval_fraction = 0.2;
    std::uint64_t seed = 0;
    Strategy strategy = Strategy::gpas_plcs_ucs;

    void validate() const {
        if (rounds < 1) fail("loop: rounds must be >= 1");
        if (budget_fraction < 0.0 || budget_fraction > 1.0) fail("loop: budget_fraction must be in [0,1]");
        if (kappa_start < 0.0 || kappa_start > 100.0) fail("loop: kappa_start must be in [0,100]");
        if (kappa_step < 0.0) fail("loop: kappa_step must be >= 0");
        if (warmup_epochs < 0) fail("loop: warmup_epochs must be >= 0");
        if (epochs_per_round < 1) fail("loop: epochs_per_round must be >= 1");
        if (alpha < 0.0 || alpha > 1.0) fail("loop: alpha must be in [0,1]");
        if (!(jitter > 0.0)) fail("loop: jitter must be > 0");
        if (eval_fraction < 0.0 || eval_fraction >= 1.0) fail("loop: eval_fraction must be in [0,1)");
        optimizer.validate();
        committee.validate();
    }
};

enum class EvalSplit { target_all, target_eval };

/// Stratified, seeded held-out target split used for accuracy reporting.
inline std::vector<SampleId> make_eval_split(const Dataset& ds, double fraction, std::uint64_t seed) {
    if (fraction < 0.0 || fraction >= 1.0) fail("make_eval_split: fraction must be in [0,1)");
    std::vector<std::vector<SampleId>> per_class(static_cast<std::size_t>(ds.num_classes));
    for (SampleId id : ds.domain_ids(Domain::target))
        per_class[static_cast<std::size_t>(ds.by_id(id).true_label)].push_back(id);
    Rng rng(mix_seed(seed, 0x4556414cULL));  // stream tag "EVAL"
    std::vector<SampleId> eval_ids;
    for (auto& ids : per_class) {
        rng.shuffle(ids);
        const auto take = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(ids.size())));
        eval_ids.insert(eval_ids.end(), ids.begin(), ids.begin() + static_cast<long>(take));
    }
    std::sort(eval_ids.begin(), eval_ids.end());
    return eval_ids;
}

/// Fraction of correct argmax predictions over the given ids.
inline double evaluate(const ModelState& m, const Dataset& ds, const std::vector<SampleId>& ids) {
    if (ids.empty()) fail("evaluate: empty split");
    std::int64_t correct = 0;
    for (SampleId id : ids) {
        const FeatureRecord& r = ds.by_id(id);
        if (pseudo_label(predict_proba(m, r.features)).first == r.true_label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(ids.size());
}

inline double evaluate(const ModelState& m, const Dataset& ds, EvalSplit split,
                       double eval_fraction = 0.2, std::uint64_t seed = 0) {
    if (split == EvalSplit::target_all) return evaluate(m, ds, ds.domain_ids(Domain::target));
    return evaluate(m, ds, make_eval_split(ds, eval_fraction, seed));
}

/// Default SENTRY perturbation scale: 0.1 * mean feature norm / sqrt(d).
inline double auto_committee_sigma(const Dataset& ds) {
    double mean_norm = 0.0;
    for (const FeatureRecord& r : ds.records) mean_norm += r.features.norm();
    mean_norm /= static_cast<double>(ds.records.size());
    return 0.1 * mean_norm / std::sqrt(static_cast<double>(ds.dim));
}

struct RunResult {
    std::vector<RoundMetrics> rounds;
    ModelState model;
    PoolState pool;
    std::vector<SampleId> eval_ids;
    double warmup_accuracy = 0.0;  // accuracy after warm-up, before round 1
};

struct PvRow {
    SampleId id;
    int pseudo;
    double pv;
};

namespace detail {

// Seed-stream tags.
constexpr std::uint64_t kTagInit = 0x494e4954;
constexpr std::uint64_t kTagShuffle = 0x53485546;
constexpr std::uint64_t kTagResample = 0x52455350;
constexpr std::uint64_t kTagCommittee = 0x434f4d4d;
constexpr std::uint64_t kTagFresh = 0x46524553;
constexpr std::uint64_t kTagRandomSel = 0x52414e44;

}  // namespace detail

/// Runs the round-based adaptation loop: warm-up, then per round PLCS
/// harvesting, posterior-variance (or baseline) querying, oracle labeling,
/// uncertainty-balanced resampling and supervised + consistency training.
class AdaEngine {
public:
    AdaEngine(LoopConfig cfg, const Dataset& ds) : cfg_(cfg), ds_(ds) {
        cfg_.validate();
        if (ds_.records.empty()) fail("run_ada: empty dataset");
        sigma_ = cfg_.committee.sigma ? *cfg_.committee.sigma : auto_committee_sigma(ds_);
        eval_ids_ = cfg_.eval_fraction > 0.0 ? make_eval_split(ds_, cfg_.eval_fraction, cfg_.seed)
                                             : std::vector<SampleId>{};
        pool_ = split_pools(ds_, cfg_.budget_fraction, cfg_.rounds, eval_ids_);
        if (pool_.target_unlabeled_ids.empty()) fail("run_ada: no target samples left to adapt on");
        model_ = init_model(ds_.num_classes, ds_.dim, mix_seed(cfg_.seed, detail::kTagInit));
        ucs_ = make_ucs_state(ds_.num_classes, cfg_.alpha);
    }

    RunResult run() {
        for (int e = 0; e < cfg_.warmup_epochs; ++e) {
            refresh_ucs();
            train_epoch();
        }
        const double warmup_acc = eval_current();

        std::vector<RoundMetrics> metrics;
        const std::int64_t b = pool_.per_round_budget;
        for (int r = 1; r <= cfg_.rounds; ++r) {
            RoundMetrics m;
            m.round = r;

            const auto t0 = std::chrono::steady_clock::now();
            refresh_pseudo_labels();
            const double kappa_r = cfg_.kappa_start + static_cast<double>(r - 1) * cfg_.kappa_step;
            if (strategy_uses_plcs(cfg_.strategy) && kappa_r > 0.0) m.plcs_count = run_plcs(kappa_r);
            refresh_pseudo_labels();  // repeat of the prediction pass ahead of the query phase

            const std::int64_t b_r =
                (r < cfg_.rounds) ? b : pool_.budget_total - b * static_cast<std::int64_t>(cfg_.rounds - 1);
            PosteriorVarianceVector pv;
            QuerySelection selection;
            if (strategy_uses_gp(cfg_.strategy)) {
                pv = assemble_pv(class_posterior_variances(
                    class_partition(pool_, ds_, unlabeled_pseudo()), cfg_.jitter));
                selection = gpas_select(pv, b_r);
            } else if (cfg_.strategy == Strategy::entropy) {
                selection = entropy_select(b_r);
            } else {
                selection = random_select(b_r, r);
            }
            const auto t1 = std::chrono::steady_clock::now();
            m.selection_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

            if (static_cast<std::int64_t>(selection.ids.size()) < b_r)
                fail("run_ada: infeasible budget at round " + std::to_string(r) + ": need " +
                     std::to_string(b_r) + " candidates, unlabeled pool offers " +
                     std::to_string(selection.ids.size()));
            if (!selection.ids.empty()) query_oracle(pool_, ds_, selection.ids);
            m.queried_ids = selection.ids;
            m.budget_spent = pool_.budget_spent;
            m.mean_pv = mean_pv(pv);

            double loss_sum = 0.0;
            for (int e = 0; e < cfg_.epochs_per_round; ++e) {
                refresh_ucs();
                loss_sum += train_epoch();
            }
            m.train_loss = loss_sum / static_cast<double>(cfg_.epochs_per_round);
            m.target_accuracy = eval_current();
            pool_.validate();
            metrics.push_back(std::move(m));
        }
        return RunResult{std::move(metrics), std::move(model_), std::move(pool_), std::move(eval_ids_),
                         warmup_acc};
    }

    /// Warm-up only, then a posterior-variance snapshot of the unlabeled
    /// pool (source-only conditioning), sorted by id.
    std::vector<PvRow> probe() {
        for (int e = 0; e < cfg_.warmup_epochs; ++e) train_epoch();
        refresh_pseudo_labels();
        PosteriorVarianceVector pv = assemble_pv(
            class_posterior_variances(class_partition(pool_, ds_, unlabeled_pseudo()), cfg_.jitter));
        std::vector<PvRow> rows;
        rows.reserve(pv.size());
        for (std::size_t i = 0; i < pv.size(); ++i)
            rows.push_back(PvRow{pv.ids[i], pseudo_.at(pv.ids[i]), pv.pv[i]});
        std::sort(rows.begin(), rows.end(), [](const PvRow& a, const PvRow& b) { return a.id < b.id; });
        return rows;
    }

private:
    double eval_current() const {
        if (!eval_ids_.empty()) return evaluate(model_, ds_, eval_ids_);
        return evaluate(model_, ds_, ds_.domain_ids(Domain::target));
    }

    /// Predictions for every member of the original target pool. PLCS
    /// entries also get their stored pseudo-label refreshed here.
    void refresh_pseudo_labels() {
        pseudo_.clear();
        confidence_.clear();
        for (SampleId id : pool_.initial_target_ids) {
            const auto [cls, conf] = pseudo_label(predict_proba(model_, ds_.by_id(id).features));
            pseudo_[id] = cls;
            confidence_[id] = conf;
        }
        for (auto& [id, stored] : pool_.target_plcs) stored = pseudo_.at(id);
    }

    std::map<SampleId, int> unlabeled_pseudo() const {
        std::map<SampleId, int> out;
        for (SampleId id : pool_.target_unlabeled_ids) out.emplace(id, pseudo_.at(id));
        return out;
    }

    /// Epoch-cadence uncertainty tracking: recompute the class-wise
    /// posterior variances under the current model's pseudo-labels and fold
    /// the per-class averages into the EMA.
    void refresh_ucs() {
        if (!strategy_uses_ucs(cfg_.strategy) || pool_.target_unlabeled_ids.empty()) return;
        std::map<SampleId, int> pseudo;
        for (SampleId id : pool_.target_unlabeled_ids) {
            const int cls = pseudo_label(predict_proba(model_, ds_.by_id(id).features)).first;
            pseudo.emplace(id, cls);
            pseudo_[id] = cls;  // keep resampling weights aligned with these labels
        }
        PosteriorVarianceVector pv = assemble_pv(
            class_posterior_variances(class_partition(pool_, ds_, pseudo), cfg_.jitter));
        ucs_ = ucs_update(ucs_, pv, pseudo);
    }

    /// Harvest the top-kappa% confident unlabeled samples per class. The
    /// selection base is the original pool's per-pseudo-class census, so
    /// successive kappa values accumulate against a fixed denominator.
    std::int64_t run_plcs(double kappa) {
        std::vector<std::int64_t> base(static_cast<std::size_t>(ds_.num_classes), 0);
        for (SampleId id : pool_.initial_target_ids) base[static_cast<std::size_t>(pseudo_.at(id))]++;
        std::map<SampleId, std::pair<int, double>> conf;
        for (SampleId id : pool_.target_unlabeled_ids)
            conf.emplace(id, std::make_pair(pseudo_.at(id), confidence_.at(id)));
        ConfidentSelection sel = plcs_select(conf, kappa, base);
        for (const auto& cls : sel.per_class) {
            for (const auto& item : cls) {
                detail::sorted_erase(pool_.target_unlabeled_ids, item.id);
                pool_.target_plcs[item.id] = item.pseudo_label;
            }
        }
        return static_cast<std::int64_t>(sel.total());
    }

    QuerySelection entropy_select(std::int64_t b) const {
        PosteriorVarianceVector scores;
        for (SampleId id : pool_.target_unlabeled_ids) {
            scores.ids.push_back(id);
            scores.pv.push_back(entropy(predict_proba(model_, ds_.by_id(id).features)));
        }
        return gpas_select(scores, b);
    }

    QuerySelection random_select(std::int64_t b, int round) const {
        std::vector<SampleId> candidates = pool_.target_unlabeled_ids;
        Rng rng(mix_seed(cfg_.seed, detail::kTagRandomSel, static_cast<std::uint64_t>(round)));
        rng.shuffle(candidates);
        const std::size_t take = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(b));
        QuerySelection sel;
        sel.ids.assign(candidates.begin(), candidates.begin() + static_cast<long>(take));
        sel.pv_values.assign(take, 0.0);
        return sel;
    }

    static double mean_pv(const PosteriorVarianceVector& pv) {
        if (pv.pv.empty()) return std::numeric_limits<double>::quiet_NaN();
        double s = 0.0;
        for (double v : pv.pv) s += v;
        return s / static_cast<double>(pv.pv.size());
    }

    struct TrainItem {
        SampleId id;
        int label;
    };

    /// One epoch: seeded shuffles of the source, queried-target and
    /// PLCS-target lists plus the UCS-resampled unlabeled list, all consumed
    /// cyclically. Labeled batches reserve separate slots for queried and
    /// PLCS samples, each share sized so its samples appear roughly
    /// kTargetOversample times per epoch, together capped at half the batch
    /// with the oracle-labeled share allocated first. Returns the mean
    /// batch loss.
    double train_epoch() {
        const std::uint64_t epoch_tag = static_cast<std::uint64_t>(global_epoch_++);
        std::vector<TrainItem> src;
        std::vector<TrainItem> queried;
        std::vector<TrainItem> plcs;
        for (SampleId id : pool_.source_ids) src.push_back({id, ds_.by_id(id).true_label});
        for (SampleId id : pool_.target_queried_ids) queried.push_back({id, ds_.by_id(id).true_label});
        for (const auto& [id, lab] : pool_.target_plcs) plcs.push_back({id, lab});
        Rng shuffle_rng(mix_seed(cfg_.seed, detail::kTagShuffle, epoch_tag));
        shuffle_rng.shuffle(src);
        shuffle_rng.shuffle(queried);
        shuffle_rng.shuffle(plcs);

        std::vector<SampleId> unlabeled;
        if (!pool_.target_unlabeled_ids.empty()) {
            ClassUncertaintyState weights =
                strategy_uses_ucs(cfg_.strategy) ? ucs_ : make_ucs_state(ds_.num_classes, cfg_.alpha);
            unlabeled = ucs_resample(pool_.target_unlabeled_ids, pseudo_or_predict(), weights,
                                     mix_seed(cfg_.seed, detail::kTagResample, epoch_tag));
        }

        const auto bs = static_cast<std::size_t>(cfg_.optimizer.batch_size);
        constexpr std::size_t kQueriedOversample = 4;  // oracle labels
        constexpr std::size_t kPlcsOversample = 1;     // pseudo-labels carry source-like weight
        std::size_t q_share = 0, p_share = 0;
        if (bs >= 4) {
            const std::size_t steps_est = src.empty() ? 1 : (src.size() + bs - 1) / bs;
            auto scaled = [&](std::size_t n, std::size_t oversample) {
                return n == 0 ? std::size_t{0}
                              : std::max<std::size_t>(1, (oversample * n + steps_est - 1) / steps_est);
            };
            q_share = std::min(scaled(queried.size(), kQueriedOversample), bs / 4);
            p_share = std::min(scaled(plcs.size(), kPlcsOversample), bs / 2 - q_share);
        } else {
            // tiny batches: fold all labeled items into one list
            src.insert(src.end(), queried.begin(), queried.end());
            src.insert(src.end(), plcs.begin(), plcs.end());
            shuffle_rng.shuffle(src);
            queried.clear();
            plcs.clear();
        }
        const std::size_t src_share = bs - q_share - p_share;
        const std::size_t l_steps = src.empty() ? 0 : (src.size() + src_share - 1) / src_share;
        const std::size_t u_steps = unlabeled.empty() ? 0 : (unlabeled.size() + bs - 1) / bs;
        const std::size_t steps = std::max<std::size_t>(1, std::max(l_steps, u_steps));

        double loss_sum = 0.0;
        for (std::size_t s = 0; s < steps; ++s) {
            std::vector<LabeledExample> lb;
            if (!src.empty()) {
                for (std::size_t k = 0; k < src_share; ++k) {
                    const TrainItem& it = src[(s * src_share + k) % src.size()];
                    lb.push_back({ds_.by_id(it.id).features, it.label});
                }
            }
            for (std::size_t k = 0; k < q_share; ++k) {
                const TrainItem& it = queried[(s * q_share + k) % queried.size()];
                lb.push_back({ds_.by_id(it.id).features, it.label});
            }
            for (std::size_t k = 0; k < p_share; ++k) {
                const TrainItem& it = plcs[(s * p_share + k) % plcs.size()];
                lb.push_back({ds_.by_id(it.id).features, it.label});
            }
            std::vector<UnlabeledExample> ub;
            if (!unlabeled.empty()) {
                for (std::size_t k = 0; k < bs; ++k) {
                    const SampleId id = unlabeled[(s * bs + k) % unlabeled.size()];
                    const Vector& x = ds_.by_id(id).features;
                    ConsistencyVerdict v =
                        sentry_verdict(model_, x, cfg_.committee.size, sigma_,
                                       mix_seed(cfg_.seed, detail::kTagCommittee, epoch_tag, id), id);
                    Rng fresh(mix_seed(cfg_.seed, detail::kTagFresh, epoch_tag, id));
                    ub.push_back({perturb_features(x, sigma_, fresh), v.consistent});
                }
            }
            LossResult res = total_loss(model_, lb, ub, cfg_.lambda);
            sgd_step(model_, res.grad, cfg_.optimizer);
            loss_sum += res.value;
        }
        return loss_sum / static_cast<double>(steps);
    }

    /// Pseudo-labels for the current unlabeled pool; recomputed on the spot
    /// during warm-up epochs, cached between refreshes inside rounds.
    std::map<SampleId, int> pseudo_or_predict() {
        std::map<SampleId, int> out;
        for (SampleId id : pool_.target_unlabeled_ids) {
            auto it = pseudo_.find(id);
            if (it != pseudo_.end()) {
                out.emplace(id, it->second);
            } else {
                out.emplace(id, pseudo_label(predict_proba(model_, ds_.by_id(id).features)).first);
            }
        }
        return out;
    }

    LoopConfig cfg_;
    const Dataset& ds_;
    double sigma_ = 0.0;
    std::vector<SampleId> eval_ids_;
    PoolState pool_;
    ModelState model_;
    ClassUncertaintyState ucs_;
    std::map<SampleId, int> pseudo_;
    std::map<SampleId, double> confidence_;
    int global_epoch_ = 0;
};

inline RunResult run_ada(const LoopConfig& cfg, const Dataset& ds) {
    return AdaEngine(cfg, ds).run();
}

}  // namespace gpada
