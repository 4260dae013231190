#pragma once

#include <chrono>
#include <fstream>

#include "gpada/loop.hpp"
#include "gpada/synthetic.hpp"

namespace gpada {

/// Query-time benchmark: times one selection round per strategy on a
/// synthetic pool, training excluded, oracle advance excluded.
struct BenchConfig {
    int n_unlabeled = 5000;  // target pool size (split evenly over classes)
    int dim = 64;
    int num_classes = 10;
    int rounds = 1;
    std::int64_t per_round_budget = 50;
    std::uint64_t seed = 0;

    void validate() const {
        if (num_classes < 2) fail("bench: classes must be >= 2");
        if (n_unlabeled < num_classes) fail("bench: n must be >= classes");
        if (dim < 1) fail("bench: dim must be >= 1");
        if (rounds < 1) fail("bench: rounds must be >= 1");
        if (per_round_budget < 0) fail("bench: budget must be >= 0");
    }
};

struct BenchRow {
    std::string strategy;
    int round = 0;
    std::int64_t candidates = 0;
    double selection_ms = 0.0;
};

inline std::vector<BenchRow> run_bench(const BenchConfig& bc) {
    bc.validate();
    SyntheticSpec spec;
    spec.num_classes = bc.num_classes;
    spec.dim = bc.dim;
    spec.per_class_per_domain = bc.n_unlabeled / bc.num_classes;
    spec.shift_magnitude = 1.0;
    spec.rotation_angle = 0.2;
    spec.noise_sigma = 1.0;
    spec.seed = bc.seed;
    const Dataset ds = generate_synthetic(spec);

    const ModelState model = init_model(ds.num_classes, ds.dim, mix_seed(bc.seed, detail::kTagInit));
    const Strategy strategies[] = {Strategy::gpas_plcs_ucs, Strategy::gpas_ucs, Strategy::gpas,
                                   Strategy::random, Strategy::entropy};

    std::vector<BenchRow> rows;
    for (Strategy strat : strategies) {
        PoolState pool = split_pools(ds, 0.0, 1);
        pool.budget_total = bc.per_round_budget * bc.rounds;
        pool.per_round_budget = bc.per_round_budget;
        double kappa = 1.0;
        for (int r = 1; r <= bc.rounds; ++r) {
            BenchRow row;
            row.strategy = to_string(strat);
            row.round = r;
            row.candidates = static_cast<std::int64_t>(pool.target_unlabeled_ids.size());

            const auto t0 = std::chrono::steady_clock::now();
            std::map<SampleId, int> pseudo;
            std::map<SampleId, double> confidence;
            for (SampleId id : pool.initial_target_ids) {
                const auto [cls, conf] = pseudo_label(predict_proba(model, ds.by_id(id).features));
                pseudo[id] = cls;
                confidence[id] = conf;
            }
            if (strategy_uses_plcs(strat)) {
                std::vector<std::int64_t> base(static_cast<std::size_t>(ds.num_classes), 0);
                for (SampleId id : pool.initial_target_ids) base[static_cast<std::size_t>(pseudo.at(id))]++;
                std::map<SampleId, std::pair<int, double>> conf;
                for (SampleId id : pool.target_unlabeled_ids)
                    conf.emplace(id, std::make_pair(pseudo.at(id), confidence.at(id)));
                ConfidentSelection sel = plcs_select(conf, kappa, base);
                for (const auto& cls : sel.per_class) {
                    for (const auto& item : cls) {
                        detail::sorted_erase(pool.target_unlabeled_ids, item.id);
                        pool.target_plcs[item.id] = item.pseudo_label;
                    }
                }
            }
            QuerySelection sel;
            if (strategy_uses_gp(strat)) {
                std::map<SampleId, int> unlab;
                for (SampleId id : pool.target_unlabeled_ids) unlab.emplace(id, pseudo.at(id));
                PosteriorVarianceVector pv =
                    assemble_pv(class_posterior_variances(class_partition(pool, ds, unlab), 1e-4));
                sel = gpas_select(pv, bc.per_round_budget);
            } else if (strat == Strategy::entropy) {
                PosteriorVarianceVector scores;
                for (SampleId id : pool.target_unlabeled_ids) {
                    scores.ids.push_back(id);
                    scores.pv.push_back(entropy(predict_proba(model, ds.by_id(id).features)));
                }
                sel = gpas_select(scores, bc.per_round_budget);
            } else {
                std::vector<SampleId> cand = pool.target_unlabeled_ids;
                Rng rng(mix_seed(bc.seed, detail::kTagRandomSel, static_cast<std::uint64_t>(r)));
                rng.shuffle(cand);
                const std::size_t take =
                    std::min<std::size_t>(cand.size(), static_cast<std::size_t>(bc.per_round_budget));
                sel.ids.assign(cand.begin(), cand.begin() + static_cast<long>(take));
            }
            const auto t1 = std::chrono::steady_clock::now();
            row.selection_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            rows.push_back(row);

            if (!sel.ids.empty()) query_oracle(pool, ds, sel.ids);
            kappa += 1.0;
        }
    }
    return rows;
}

inline void write_bench_csv(const std::string& path, const std::vector<BenchRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("bench: cannot write file '" + path + "'");
    out << "strategy,round,candidates,selection_ms\n";
    for (const BenchRow& r : rows)
        out << r.strategy << ',' << r.round << ',' << r.candidates << ',' << format_double(r.selection_ms)
            << "\n";
    if (!out) fail("bench: write failure on '" + path + "'");
}

}  // namespace gpada
