#include <catch2/catch.hpp>

#include "gpada/gp.hpp"
#include "gpada/kernel.hpp"
#include "oracle_utils.hpp"

using namespace gpada;

namespace {

Matrix random_features(long n, long d, Rng& rng, double duplicate_prob = 0.0) {
    Matrix m(n, d);
    for (long i = 0; i < n; ++i) {
        if (i > 0 && rng.uniform01() < duplicate_prob) {
            m.row(i) = m.row(static_cast<long>(rng.uniform_index(static_cast<std::uint64_t>(i))));
            continue;
        }
        double norm = 0.0;
        do {
            for (long j = 0; j < d; ++j) m(i, j) = 2.0 * rng.uniform01() - 1.0;
            norm = m.row(i).norm();
        } while (norm < 1e-3);
    }
    return m;
}

oracle::Mat to_oracle(const Matrix& m) {
    oracle::Mat out(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
    for (long i = 0; i < m.rows(); ++i)
        for (long j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
    return out;
}

FeatureBlock block_of(const Matrix& m, SampleId first_id = 0) {
    FeatureBlock b;
    b.rows = m;
    for (long i = 0; i < m.rows(); ++i) b.ids.push_back(first_id + static_cast<SampleId>(i));
    return b;
}

}  // namespace

TEST_CASE("cosine kernel basic values") {
    Matrix x(1, 2);
    x << 0.3, -0.7;
    REQUIRE(cosine_kernel(x, x)(0, 0) == Approx(1.0).margin(1e-15));

    Matrix p(1, 2), q(1, 2);
    p << 1.0, 0.0;
    q << 0.0, 1.0;
    REQUIRE(cosine_kernel(p, q)(0, 0) == Approx(0.0).margin(1e-15));

    p << 1.0, 1.0;
    q << 1.0, 0.0;
    // direct evaluation of the dot-product formula: 1 / sqrt(2)
    const double expected = 1.0 / std::sqrt(2.0);
    REQUIRE(cosine_kernel(p, q)(0, 0) == Approx(expected).epsilon(1e-14));
    REQUIRE(cosine_kernel(p, q)(0, 0) == Approx(0.70710678).margin(1e-8));
}

TEST_CASE("cosine kernel rejects dimension mismatch") {
    Matrix p(1, 2), q(1, 3);
    p << 1.0, 0.0;
    q << 1.0, 0.0, 0.0;
    REQUIRE_THROWS_WITH(cosine_kernel(p, q), Catch::Contains("dimensionality"));
}

TEST_CASE("cosine kernel bounds and symmetry", "[property]") {
    Rng rng(42);
    for (int iter = 0; iter < 50; ++iter) {
        const long n = 2 + static_cast<long>(rng.uniform_index(9));
        const long d = 1 + static_cast<long>(rng.uniform_index(6));
        Matrix x = random_features(n, d, rng, 0.2);
        Matrix k = cosine_kernel(x, x);
        for (long i = 0; i < n; ++i)
            for (long j = 0; j < n; ++j) {
                REQUIRE(k(i, j) >= -1.0 - 1e-12);
                REQUIRE(k(i, j) <= 1.0 + 1e-12);
                REQUIRE(std::abs(k(i, j) - k(j, i)) <= 1e-12);
            }
    }
}

TEST_CASE("gp posterior: single shared sample leaves jitter-sized variance") {
    Matrix x(1, 3);
    x << 0.2, -0.4, 1.0;
    const double jitter = 1e-4;
    ClassGpPosterior post = gp_posterior(block_of(x), block_of(x, 100), jitter);
    // closed form with K = 1 everywhere: 1 - 1/(1+jitter)
    const double expected = jitter / (1.0 + jitter);
    REQUIRE(post.covariance.rows() == 1);
    REQUIRE(post.covariance(0, 0) == Approx(expected).epsilon(1e-10));
}

TEST_CASE("gp posterior: orthogonal conditioning is uninformative") {
    Matrix fu(1, 2), fl(1, 2);
    fu << 0.0, 1.0;
    fl << 1.0, 0.0;
    ClassGpPosterior post = gp_posterior(block_of(fu), block_of(fl, 10), 1e-4);
    REQUIRE(post.covariance(0, 0) == Approx(1.0).margin(1e-12));
}

TEST_CASE("gp posterior matches direct-inversion oracle on a random instance") {
    Rng rng(7);
    Matrix fl = random_features(6, 3, rng);
    Matrix fu = random_features(4, 3, rng);
    const double jitter = 1e-4;
    ClassGpPosterior post = gp_posterior(block_of(fu), block_of(fl, 50), jitter);
    oracle::GpResult ref = oracle::gp_direct(to_oracle(fu), to_oracle(fl), jitter);
    for (long i = 0; i < 4; ++i) {
        for (long j = 0; j < 4; ++j)
            REQUIRE(post.covariance(i, j) == Approx(ref.cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]).margin(1e-8));
        for (long j = 0; j < 3; ++j)
            REQUIRE(post.mean(i, j) == Approx(ref.mean[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]).margin(1e-8));
    }
}

TEST_CASE("gp posterior oracle equivalence over many random instances", "[property]") {
    Rng rng(2024);
    for (int iter = 0; iter < 120; ++iter) {
        const long n_l = 1 + static_cast<long>(rng.uniform_index(20));
        const long n_u = 1 + static_cast<long>(rng.uniform_index(20));
        const long d = 1 + static_cast<long>(rng.uniform_index(8));
        Matrix fl = random_features(n_l, d, rng, 0.15);
        Matrix fu = random_features(n_u, d, rng, 0.15);
        ClassGpPosterior post = gp_posterior(block_of(fu), block_of(fl, 1000), 1e-4);
        oracle::GpResult ref = oracle::gp_direct(to_oracle(fu), to_oracle(fl), 1e-4);
        double max_err = 0.0;
        for (long i = 0; i < n_u; ++i) {
            for (long j = 0; j < n_u; ++j)
                max_err = std::max(max_err,
                                   std::abs(post.covariance(i, j) -
                                            ref.cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
            for (long j = 0; j < d; ++j)
                max_err = std::max(max_err,
                                   std::abs(post.mean(i, j) -
                                            ref.mean[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
        }
        INFO("instance " << iter << " n_l=" << n_l << " n_u=" << n_u << " d=" << d);
        REQUIRE(max_err <= 1e-8);
    }
}

TEST_CASE("posterior variance clamps tiny negative diagonal residue") {
    ClassGpPosterior post;
    post.class_id = 2;
    post.covariance = Matrix::Zero(3, 3);
    post.covariance(0, 0) = 0.2;
    post.covariance(1, 1) = 0.0;
    post.covariance(2, 2) = -1e-12;
    post.member_ids = {4, 9, 11};
    ClassVariances pv = posterior_variance(post);
    REQUIRE(pv.pv == std::vector<double>{0.2, 0.0, 0.0});
    REQUIRE(pv.ids == std::vector<SampleId>{4, 9, 11});
}

TEST_CASE("posterior variance of an empty class is empty") {
    ClassGpPosterior post;
    post.covariance.resize(0, 0);
    ClassVariances pv = posterior_variance(post);
    REQUIRE(pv.pv.empty());
}

TEST_CASE("variance shrinkage: conditioning on more data never increases pv", "[property]") {
    Rng rng(321);
    for (int iter = 0; iter < 60; ++iter) {
        const long n_l = 1 + static_cast<long>(rng.uniform_index(12));
        const long n_u = 1 + static_cast<long>(rng.uniform_index(12));
        const long d = 2 + static_cast<long>(rng.uniform_index(5));
        Matrix fl = random_features(n_l, d, rng, 0.1);
        Matrix fu = random_features(n_u, d, rng, 0.1);
        Matrix fl_bigger(n_l + 1, d);
        fl_bigger.topRows(n_l) = fl;
        fl_bigger.bottomRows(1) = random_features(1, d, rng);
        ClassVariances before = posterior_variance(gp_posterior(block_of(fu), block_of(fl, 500), 1e-4));
        ClassVariances after =
            posterior_variance(gp_posterior(block_of(fu), block_of(fl_bigger, 500), 1e-4));
        for (std::size_t i = 0; i < before.pv.size(); ++i) REQUIRE(after.pv[i] <= before.pv[i] + 1e-8);
    }
}

TEST_CASE("labeled-point recovery: duplicated feature has near-zero variance", "[property]") {
    Rng rng(99);
    const double jitter = 1e-4;
    for (int iter = 0; iter < 25; ++iter) {
        const long n_l = 2 + static_cast<long>(rng.uniform_index(10));
        const long d = 2 + static_cast<long>(rng.uniform_index(5));
        Matrix fl = random_features(n_l, d, rng);
        Matrix fu = random_features(3, d, rng);
        fu.row(1) = fl.row(static_cast<long>(rng.uniform_index(static_cast<std::uint64_t>(n_l))));
        ClassVariances pv = posterior_variance(gp_posterior(block_of(fu), block_of(fl, 40), jitter));
        REQUIRE(pv.pv[1] <= 2.0 * jitter);
    }
}

TEST_CASE("permutation equivariance of the posterior", "[property]") {
    Rng rng(55);
    Matrix fl = random_features(7, 4, rng);
    Matrix fu = random_features(5, 4, rng);
    ClassGpPosterior base = gp_posterior(block_of(fu), block_of(fl, 60), 1e-4);

    std::vector<long> perm = {3, 0, 4, 1, 2};
    Matrix fu_perm(5, 4);
    for (std::size_t i = 0; i < perm.size(); ++i) fu_perm.row(static_cast<long>(i)) = fu.row(perm[i]);
    ClassGpPosterior shuffled = gp_posterior(block_of(fu_perm), block_of(fl, 60), 1e-4);

    for (std::size_t i = 0; i < perm.size(); ++i) {
        for (long j = 0; j < 4; ++j)
            REQUIRE(shuffled.mean(static_cast<long>(i), j) == Approx(base.mean(perm[i], j)).margin(1e-12));
        for (std::size_t k = 0; k < perm.size(); ++k)
            REQUIRE(shuffled.covariance(static_cast<long>(i), static_cast<long>(k)) ==
                    Approx(base.covariance(perm[i], perm[k])).margin(1e-12));
    }
}

TEST_CASE("gp posterior covariance is symmetric within tolerance") {
    Rng rng(77);
    Matrix fl = random_features(10, 5, rng, 0.3);
    Matrix fu = random_features(8, 5, rng, 0.3);
    ClassGpPosterior post = gp_posterior(block_of(fu), block_of(fl, 70), 1e-4);
    for (long i = 0; i < 8; ++i)
        for (long j = 0; j < 8; ++j)
            REQUIRE(std::abs(post.covariance(i, j) - post.covariance(j, i)) <= 1e-10);
}

TEST_CASE("gp posterior rejects empty labeled set and bad jitter") {
    Rng rng(1);
    Matrix fu = random_features(2, 3, rng);
    FeatureBlock empty;
    empty.rows.resize(0, 3);
    REQUIRE_THROWS_WITH(gp_posterior(block_of(fu), empty, 1e-4, 3), Catch::Contains("class 3"));
    REQUIRE_THROWS(gp_posterior(block_of(fu), block_of(fu), 0.0));
}

TEST_CASE("assemble_pv concatenates in ascending class order") {
    ClassVariances c0{0, {0.1}, {10}};
    ClassVariances c1{1, {0.3, 0.2}, {20, 30}};
    PosteriorVarianceVector pv = assemble_pv({c1, c0});
    REQUIRE(pv.pv == std::vector<double>{0.1, 0.3, 0.2});
    REQUIRE(pv.ids == std::vector<SampleId>{10, 20, 30});
}

TEST_CASE("assemble_pv of all-empty classes is empty") {
    PosteriorVarianceVector pv = assemble_pv({ClassVariances{0, {}, {}}, ClassVariances{1, {}, {}}});
    REQUIRE(pv.size() == 0);
}

TEST_CASE("assemble_pv rejects duplicate ids across classes") {
    ClassVariances c0{0, {0.1}, {10}};
    ClassVariances c1{1, {0.3}, {10}};
    REQUIRE_THROWS_WITH(assemble_pv({c0, c1}), Catch::Contains("duplicate id"));
}

namespace {

Dataset partition_fixture() {
    // source labels {0,0,1}; two target samples
    Dataset ds;
    auto add = [&](SampleId id, Domain dom, int label, double a, double b) {
        FeatureRecord r;
        r.id = id;
        r.domain = dom;
        r.true_label = label;
        r.features.resize(2);
        r.features << a, b;
        ds.records.push_back(r);
    };
    add(0, Domain::source, 0, 1.0, 0.1);
    add(1, Domain::source, 0, 0.9, 0.2);
    add(2, Domain::source, 1, 0.1, 1.0);
    add(3, Domain::target, 1, 0.2, 0.9);
    add(4, Domain::target, 1, 0.3, 0.8);
    ds.finalize();
    return ds;
}

}  // namespace

TEST_CASE("class_partition splits labeled and pseudo-labeled stacks") {
    Dataset ds = partition_fixture();
    PoolState pool = split_pools(ds, 0.0, 1);

    SECTION("enumerated sizes: labels 0,0,1 labeled; pseudo 1,1 unlabeled") {
        std::map<SampleId, int> pseudo{{3, 1}, {4, 1}};
        ClassPartition part = class_partition(pool, ds, pseudo);
        REQUIRE(part.labeled[0].n() == 2);
        REQUIRE(part.labeled[1].n() == 1);
        REQUIRE(part.unlabeled[0].n() == 0);
        REQUIRE(part.unlabeled[1].n() == 2);
        REQUIRE(part.unlabeled[1].ids == std::vector<SampleId>{3, 4});
    }

    SECTION("degenerate labeling: everything pseudo-labeled 0") {
        std::map<SampleId, int> pseudo{{3, 0}, {4, 0}};
        ClassPartition part = class_partition(pool, ds, pseudo);
        REQUIRE(part.unlabeled[0].n() == 2);
        REQUIRE(part.unlabeled[1].n() == 0);
    }

    SECTION("empty unlabeled pool yields empty stacks") {
        pool.target_unlabeled_ids.clear();
        pool.target_queried_ids = {3, 4};
        pool.budget_total = 2;
        pool.budget_spent = 2;
        ClassPartition part = class_partition(pool, ds, {});
        REQUIRE(part.unlabeled[0].n() == 0);
        REQUIRE(part.unlabeled[1].n() == 0);
        REQUIRE(part.labeled[1].n() == 3);  // source + two queried
    }

    SECTION("PLCS entries join the labeled stack under their stored label") {
        detail::sorted_erase(pool.target_unlabeled_ids, 3);
        pool.target_plcs[3] = 0;  // stored pseudo-label, not the true one
        std::map<SampleId, int> pseudo{{4, 1}};
        ClassPartition part = class_partition(pool, ds, pseudo);
        REQUIRE(part.labeled[0].n() == 3);
        REQUIRE(part.labeled[1].n() == 1);
    }

    SECTION("missing pseudo-label is rejected") {
        REQUIRE_THROWS_WITH(class_partition(pool, ds, {{3, 1}}), Catch::Contains("missing pseudo-label"));
    }
}

TEST_CASE("class_posterior_variances falls back to prior variance for unconditioned classes") {
    Rng rng(5);
    ClassPartition part;
    part.labeled.resize(2);
    part.unlabeled.resize(2);
    part.labeled[0] = block_of(random_features(3, 2, rng), 0);
    part.unlabeled[0] = block_of(random_features(2, 2, rng), 10);
    part.labeled[1].rows.resize(0, 2);  // no conditioning data for class 1
    part.unlabeled[1] = block_of(random_features(2, 2, rng), 20);

    std::vector<ClassVariances> pvs = class_posterior_variances(part, 1e-4);
    REQUIRE(pvs[1].pv == std::vector<double>{1.0, 1.0});
    REQUIRE(pvs[1].ids == std::vector<SampleId>{20, 21});
    REQUIRE(pvs[0].pv.size() == 2);
    for (double v : pvs[0].pv) REQUIRE(v >= 0.0);
}
