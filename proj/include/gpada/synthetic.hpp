#pragma once

#include "gpada/dataset.hpp"

namespace gpada {

/// Two-domain Gaussian class-cluster generator. Target class means are the
/// source means rotated in the first two dimensions plus a per-class shift.
struct SyntheticSpec {
    int num_classes = 5;
    int dim = 16;
    int per_class_per_domain = 200;
    double shift_magnitude = 0.0;
    double rotation_angle = 0.0;
    double noise_sigma = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (num_classes < 2) fail("synthetic: num_classes must be >= 2");
        if (dim < 1) fail("synthetic: dim must be >= 1");
        if (per_class_per_domain < 1) fail("synthetic: per_class_per_domain must be >= 1");
        if (shift_magnitude < 0.0) fail("synthetic: shift_magnitude must be >= 0");
        if (!(noise_sigma > 0.0)) fail("synthetic: noise_sigma must be > 0");
    }
};

namespace detail {

constexpr double kClassMeanNorm = 3.0;

inline Vector unit_direction(int dim, Rng& rng) {
    Vector v(dim);
    double norm = 0.0;
    do {
        for (int j = 0; j < dim; ++j) v[j] = rng.gaussian();
        norm = v.norm();
    } while (norm < 1e-12);
    return v / norm;
}

inline Vector rotate_first_two(const Vector& v, double angle) {
    if (v.size() < 2 || angle == 0.0) return v;
    Vector out = v;
    const double c = std::cos(angle), s = std::sin(angle);
    out[0] = c * v[0] - s * v[1];
    out[1] = s * v[0] + c * v[1];
    return out;
}

}  // namespace detail

inline Dataset generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(mix_seed(spec.seed, 0x53594e5448ULL));  // stream tag "SYNTH"
    const int C = spec.num_classes, d = spec.dim, n = spec.per_class_per_domain;

    std::vector<Vector> source_mean(static_cast<std::size_t>(C));
    std::vector<Vector> target_mean(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c)
        source_mean[static_cast<std::size_t>(c)] = detail::unit_direction(d, rng) * detail::kClassMeanNorm;
    for (int c = 0; c < C; ++c) {
        // Per-class difficulty ramp: low classes shift in a random direction
        // (recoverable wholesale translation), high classes lean toward their
        // nearest neighbor so the same magnitude creates genuine confusion.
        int nearest = c == 0 ? 1 : 0;
        for (int j = 0; j < C; ++j) {
            if (j == c) continue;
            if ((source_mean[static_cast<std::size_t>(j)] - source_mean[static_cast<std::size_t>(c)]).norm() <
                (source_mean[static_cast<std::size_t>(nearest)] - source_mean[static_cast<std::size_t>(c)]).norm())
                nearest = j;
        }
        const Vector toward = (source_mean[static_cast<std::size_t>(nearest)] -
                               source_mean[static_cast<std::size_t>(c)])
                                  .normalized();
        const double lean = 0.45 * static_cast<double>(c) / static_cast<double>(C - 1);
        Vector shift_dir = (lean * toward + (1.0 - lean) * detail::unit_direction(d, rng));
        const double norm = shift_dir.norm();
        shift_dir = norm > 1e-9 ? Vector(shift_dir / norm) : toward;
        target_mean[static_cast<std::size_t>(c)] =
            detail::rotate_first_two(source_mean[static_cast<std::size_t>(c)], spec.rotation_angle) +
            spec.shift_magnitude * shift_dir;
    }

    Dataset ds;
    ds.records.reserve(static_cast<std::size_t>(2 * C * n));
    SampleId next_id = 0;
    auto emit = [&](Domain dom, int c, const Vector& mean) {
        FeatureRecord rec;
        rec.id = next_id++;
        rec.domain = dom;
        rec.true_label = c;
        do {
            rec.features = mean;
            for (int j = 0; j < d; ++j) rec.features[j] += spec.noise_sigma * rng.gaussian();
        } while (rec.features.norm() < 1e-12);
        ds.records.push_back(std::move(rec));
    };
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < n; ++i) emit(Domain::source, c, source_mean[static_cast<std::size_t>(c)]);
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < n; ++i) emit(Domain::target, c, target_mean[static_cast<std::size_t>(c)]);
    ds.finalize();
    return ds;
}

}  // namespace gpada
