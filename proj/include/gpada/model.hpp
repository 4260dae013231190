#pragma once

#include <fstream>
#include <limits>
#include <optional>

#include "gpada/common.hpp"

namespace gpada {

/// Linear softmax head with heavy-ball momentum buffers.
struct ModelState {
    Matrix weights;     // C x d
    Vector bias;        // C
    Matrix w_momentum;  // C x d
    Vector b_momentum;  // C

    int num_classes() const { return static_cast<int>(weights.rows()); }
    int dim() const { return static_cast<int>(weights.cols()); }
};

/// Xavier-uniform weights, zero bias and momentum.
inline ModelState init_model(int num_classes, int dim, std::uint64_t seed) {
    if (num_classes < 2 || dim < 1) fail("init_model: bad shape");
    ModelState m;
    m.weights.resize(num_classes, dim);
    const double bound = std::sqrt(6.0 / static_cast<double>(num_classes + dim));
    Rng rng(seed);
    for (int c = 0; c < num_classes; ++c)
        for (int j = 0; j < dim; ++j) m.weights(c, j) = (2.0 * rng.uniform01() - 1.0) * bound;
    m.bias = Vector::Zero(num_classes);
    m.w_momentum = Matrix::Zero(num_classes, dim);
    m.b_momentum = Vector::Zero(num_classes);
    return m;
}

struct OptimizerConfig {
    double learning_rate = 0.002;
    double momentum = 0.9;
    double weight_decay = 0.005;
    int batch_size = 16;

    void validate() const {
        if (!(learning_rate > 0.0)) fail("optimizer: learning_rate must be > 0");
        if (momentum < 0.0 || momentum >= 1.0) fail("optimizer: momentum must be in [0,1)");
        if (weight_decay < 0.0) fail("optimizer: weight_decay must be >= 0");
        if (batch_size < 1) fail("optimizer: batch_size must be >= 1");
    }
};

inline Vector predict_logits(const ModelState& m, const Vector& x) {
    if (x.size() != m.weights.cols())
        fail("predict: feature dimension " + std::to_string(x.size()) + " does not match model dim " +
             std::to_string(m.weights.cols()));
    return m.weights * x + m.bias;
}

/// Max-subtracted softmax. Entries are clamped to the smallest positive
/// normal double so downstream logs stay finite at extreme logits.
inline Vector softmax(const Vector& logits) {
    const double mx = logits.maxCoeff();
    Vector p = (logits.array() - mx).exp();
    p /= p.sum();
    for (long i = 0; i < p.size(); ++i) p[i] = std::max(p[i], std::numeric_limits<double>::min());
    return p;
}

inline Vector predict_proba(const ModelState& m, const Vector& x) {
    return softmax(predict_logits(m, x));
}

/// (argmax class, max probability); ties break toward the smaller index.
inline std::pair<int, double> pseudo_label(const Vector& probs) {
    if (probs.size() == 0) fail("pseudo_label: empty probability vector");
    int best = 0;
    for (long i = 1; i < probs.size(); ++i)
        if (probs[i] > probs[best]) best = static_cast<int>(i);
    return {best, probs[best]};
}

/// Shannon entropy in nats, with 0 log 0 = 0.
inline double entropy(const Vector& probs) {
    double h = 0.0;
    for (long i = 0; i < probs.size(); ++i)
        if (probs[i] > 0.0) h -= probs[i] * std::log(probs[i]);
    return std::max(0.0, h);
}

struct Gradients {
    Matrix w;
    Vector b;

    static Gradients zero(int num_classes, int dim) {
        return Gradients{Matrix::Zero(num_classes, dim), Vector::Zero(num_classes)};
    }
    void accumulate(const Gradients& g, double scale) {
        w += scale * g.w;
        b += scale * g.b;
    }
};

struct LossResult {
    double value = 0.0;
    Gradients grad;
};

/// Cross-entropy -log p_y with analytic softmax gradient.
inline LossResult cross_entropy_loss(const ModelState& m, const Vector& x, int label) {
    if (label < 0 || label >= m.num_classes())
        fail("cross_entropy_loss: label " + std::to_string(label) + " out of range [0," +
             std::to_string(m.num_classes()) + ")");
    const Vector logits = predict_logits(m, x);
    const double mx = logits.maxCoeff();
    const double lse = mx + std::log((logits.array() - mx).exp().sum());
    const Vector p = softmax(logits);
    LossResult res;
    res.value = lse - logits[label];
    Vector dz = p;
    dz[label] -= 1.0;
    res.grad.w = dz * x.transpose();
    res.grad.b = dz;
    return res;
}

/// d entropy / d logits = -p (log p + H); shared by both SENTRY branches.
inline LossResult entropy_loss(const ModelState& m, const Vector& x) {
    const Vector p = predict_proba(m, x);
    const double h = entropy(p);
    LossResult res;
    res.value = h;
    Vector dz(p.size());
    for (long i = 0; i < p.size(); ++i) dz[i] = -p[i] * (std::log(p[i]) + h);
    res.grad.w = dz * x.transpose();
    res.grad.b = dz;
    return res;
}

struct CommitteeConfig {
    int size = 3;
    std::optional<double> sigma;  // empty -> derived from the data at run start

    void validate() const {
        if (size < 1 || size % 2 == 0) fail("committee: size must be odd and >= 1");
        if (sigma && *sigma < 0.0) fail("committee: sigma must be >= 0");
    }
};

struct ConsistencyVerdict {
    SampleId id = 0;
    bool consistent = false;
    std::vector<int> committee_votes;
};

inline Vector perturb_features(const Vector& x, double sigma, Rng& rng) {
    Vector out = x;
    for (long j = 0; j < out.size(); ++j) out[j] += sigma * rng.gaussian();
    return out;
}

/// Votes k seeded Gaussian feature perturbations against the clean
/// prediction; consistent iff a strict majority agrees with it.
inline ConsistencyVerdict sentry_verdict(const ModelState& m, const Vector& x, int committee_size,
                                         double sigma, std::uint64_t seed, SampleId id = 0) {
    if (committee_size < 1 || committee_size % 2 == 0)
        fail("sentry_verdict: committee size must be odd and >= 1");
    if (sigma < 0.0) fail("sentry_verdict: sigma must be >= 0");
    const int clean = pseudo_label(predict_proba(m, x)).first;
    Rng rng(seed);
    ConsistencyVerdict v;
    v.id = id;
    v.committee_votes.reserve(static_cast<std::size_t>(committee_size));
    int agree = 0;
    for (int i = 0; i < committee_size; ++i) {
        const int vote = pseudo_label(predict_proba(m, perturb_features(x, sigma, rng))).first;
        v.committee_votes.push_back(vote);
        if (vote == clean) ++agree;
    }
    v.consistent = 2 * agree > committee_size;
    return v;
}

/// SENTRY objective at an already-perturbed input: +H for consistent
/// samples (entropy minimized), -H for inconsistent ones (maximized).
inline LossResult sentry_loss_at(const ModelState& m, const Vector& x_tilde, bool consistent) {
    LossResult res = entropy_loss(m, x_tilde);
    if (!consistent) {
        res.value = -res.value;
        res.grad.w = -res.grad.w;
        res.grad.b = -res.grad.b;
    }
    return res;
}

/// Draws the fresh perturbation from the seed, then evaluates the objective.
inline LossResult sentry_loss(const ModelState& m, const Vector& x, const ConsistencyVerdict& verdict,
                              double sigma, std::uint64_t seed) {
    Rng rng(seed);
    return sentry_loss_at(m, perturb_features(x, sigma, rng), verdict.consistent);
}

struct LabeledExample {
    Vector x;
    int label;
};

struct UnlabeledExample {
    Vector x_tilde;
    bool consistent;
};

/// mean cross-entropy over the labeled batch + lambda * mean SENTRY loss
/// over the unlabeled batch. Empty batches contribute zero. Gradients sum
/// in sample-index order.
inline LossResult total_loss(const ModelState& m, const std::vector<LabeledExample>& labeled,
                             const std::vector<UnlabeledExample>& unlabeled, double lambda) {
    LossResult res;
    res.grad = Gradients::zero(m.num_classes(), m.dim());
    if (!labeled.empty()) {
        const double scale = 1.0 / static_cast<double>(labeled.size());
        for (const LabeledExample& ex : labeled) {
            LossResult one = cross_entropy_loss(m, ex.x, ex.label);
            res.value += scale * one.value;
            res.grad.accumulate(one.grad, scale);
        }
    }
    if (!unlabeled.empty() && lambda != 0.0) {
        const double scale = lambda / static_cast<double>(unlabeled.size());
        for (const UnlabeledExample& ex : unlabeled) {
            LossResult one = sentry_loss_at(m, ex.x_tilde, ex.consistent);
            res.value += scale * one.value;
            res.grad.accumulate(one.grad, scale);
        }
    }
    return res;
}

/// Heavy-ball update: v <- momentum v + g + weight_decay p; p <- p - lr v.
inline void sgd_step(ModelState& m, const Gradients& grads, const OptimizerConfig& cfg) {
    cfg.validate();
    if (grads.w.rows() != m.weights.rows() || grads.w.cols() != m.weights.cols() ||
        grads.b.size() != m.bias.size())
        fail("sgd_step: gradient shape mismatch");
    if (!grads.w.allFinite() || !grads.b.allFinite())
        fail("sgd_step: non-finite gradient (training diverged)");
    m.w_momentum = cfg.momentum * m.w_momentum + grads.w + cfg.weight_decay * m.weights;
    m.b_momentum = cfg.momentum * m.b_momentum + grads.b + cfg.weight_decay * m.bias;
    m.weights -= cfg.learning_rate * m.w_momentum;
    m.bias -= cfg.learning_rate * m.b_momentum;
}

inline void save_model(const ModelState& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("model: cannot write file '" + path + "'");
    out << "C=" << m.num_classes() << ",d=" << m.dim() << "\n";
    out << "format=gp-ada-model-v1\n";
    for (int c = 0; c < m.num_classes(); ++c) {
        for (int j = 0; j < m.dim(); ++j) out << (j ? "," : "") << format_double(m.weights(c, j));
        out << "\n";
    }
    for (int c = 0; c < m.num_classes(); ++c) out << (c ? "," : "") << format_double(m.bias[c]);
    out << "\n";
    if (!out) fail("model: write failure on '" + path + "'");
}

inline ModelState load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("model: cannot open file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) fail("model: missing shape header");
    int C = 0, d = 0;
    if (std::sscanf(line.c_str(), "C=%d,d=%d", &C, &d) != 2 || C < 2 || d < 1)
        fail("model: malformed shape header '" + line + "'");
    if (!std::getline(in, line) || line != "format=gp-ada-model-v1")
        fail("model: unsupported checkpoint format");
    ModelState m;
    m.weights.resize(C, d);
    m.bias.resize(C);
    auto read_row = [&](long expected, auto set) {
        if (!std::getline(in, line)) fail("model: truncated checkpoint");
        std::size_t start = 0;
        long k = 0;
        while (start <= line.size() && k < expected) {
            std::size_t pos = line.find(',', start);
            std::string tok = line.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
            try {
                set(k, std::stod(tok));
            } catch (...) {
                fail("model: non-numeric value '" + tok + "'");
            }
            ++k;
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        if (k != expected) fail("model: wrong value count in checkpoint row");
    };
    for (int c = 0; c < C; ++c)
        read_row(d, [&](long j, double v) { m.weights(c, j) = v; });
    read_row(C, [&](long c, double v) { m.bias[c] = v; });
    if (!m.weights.allFinite() || !m.bias.allFinite()) fail("model: non-finite checkpoint values");
    m.w_momentum = Matrix::Zero(C, d);
    m.b_momentum = Vector::Zero(C);
    return m;
}

}  // namespace gpada
