#include "hgpop/latent_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hgpop/error.hpp"
#include "hgpop/special_functions.hpp"

namespace hgpop {

namespace {

using Eigen::MatrixXd;

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), 0x7a3du};
    return Rng(seq);
}

double softplus(double a) { return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a)); }
double sigmoid(double a) {
    if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
    const double e = std::exp(a);
    return e / (1.0 + e);
}

void apply_activation(Activation act, MatrixXd& m) {
    if (act == Activation::relu) {
        m = m.cwiseMax(0.0);
    } else {
        m = m.array().tanh().matrix();
    }
}

// derivative evaluated from the pre-activation
void multiply_activation_grad(Activation act, const MatrixXd& pre, MatrixXd& grad) {
    if (act == Activation::relu) {
        grad = (pre.array() > 0.0).select(grad, 0.0);
    } else {
        grad.array() *= 1.0 - pre.array().tanh().square();
    }
}

struct MlpCache {
    std::vector<MatrixXd> inputs;  // input to each layer
    std::vector<MatrixXd> pre;     // pre-activation of each layer
};

// Layers [first, last) of the flat network; hidden activation after every layer but the last.
MatrixXd mlp_forward(const NetworkParams& params, std::size_t first, std::size_t last, MatrixXd x,
                     MlpCache* cache) {
    const Activation act = params.spec().hidden_activation;
    for (std::size_t l = first; l < last; ++l) {
        MatrixXd pre = params.weights(l) * x;
        pre.colwise() += params.bias(l);
        if (cache) {
            cache->inputs.push_back(std::move(x));
            cache->pre.push_back(pre);
        }
        x = std::move(pre);
        if (l + 1 < last) apply_activation(act, x);
    }
    return x;
}

// Backpropagates d(loss)/d(pre-activation of the last layer) and writes
// weight gradients into `grad`; returns d(loss)/d(input of layer `first`).
MatrixXd mlp_backward(const NetworkParams& params, std::size_t first, const MlpCache& cache,
                      MatrixXd d_pre, std::span<double> grad) {
    const Activation act = params.spec().hidden_activation;
    const std::size_t count = cache.pre.size();
    for (std::size_t idx = count; idx-- > 0;) {
        const std::size_t l = first + idx;
        const auto& shape = params.layers()[l];
        Eigen::Map<RowMajorMatrix> d_w(grad.data() + shape.offset, shape.out, shape.in);
        Eigen::Map<Eigen::VectorXd> d_b(grad.data() + shape.offset + std::size_t(shape.out) * shape.in,
                                        shape.out);
        d_w.noalias() += d_pre * cache.inputs[idx].transpose();
        d_b += d_pre.rowwise().sum();
        MatrixXd d_in = params.weights(l).transpose() * d_pre;
        if (idx > 0) multiply_activation_grad(act, cache.pre[idx - 1], d_in);
        d_pre = std::move(d_in);
    }
    return d_pre;
}

MatrixXd encoder_input(const CountMatrix& batch) {
    MatrixXd x(batch.cols(), batch.rows());
    for (std::size_t r = 0; r < batch.rows(); ++r) {
        auto row = batch.row(r);
        for (std::size_t c = 0; c < batch.cols(); ++c) x(c, r) = std::log1p(static_cast<double>(row[c]));
    }
    return x;
}

struct HeadResult {
    double nll = 0.0;
    double penalty = 0.0;  // unweighted
    std::size_t violated = 0;
};

// Per-column head evaluation. When d_out is non-null it receives
// d(nll + weight * penalty)/d(pre-activation), scaled by `scale`.
HeadResult evaluate_head(LikelihoodKind kind, std::span<const Count> counts, const double* pre,
                         double weight, double scale, double* d_out) {
    const std::size_t k = counts.size();
    HeadResult res;
    switch (kind) {
        case LikelihoodKind::hypergeometric: {
            std::vector<double> raw(k), est(k);
            for (std::size_t i = 0; i < k; ++i) {
                raw[i] = std::max(pre[i], 0.0);
                est[i] = std::max(static_cast<double>(counts[i]), raw[i]);
                if (raw[i] < static_cast<double>(counts[i])) ++res.violated;
            }
            res.nll = -hypergeom_log_pmf(counts, est);
            res.penalty = violation_penalty(counts, raw);
            if (d_out) {
                std::vector<double> g(k, 0.0);
                add_row_nll_grad(counts, est, 1.0, g);
                for (std::size_t i = 0; i < k; ++i) {
                    const double c = static_cast<double>(counts[i]);
                    double d = raw[i] > c ? g[i] : 0.0;
                    if (raw[i] < c) d -= weight;
                    d_out[i] = pre[i] > 0.0 ? scale * d : 0.0;
                }
            }
            break;
        }
        case LikelihoodKind::multinomial: {
            const double mx = *std::max_element(pre, pre + k);
            double sum = 0.0;
            for (std::size_t i = 0; i < k; ++i) sum += std::exp(pre[i] - mx);
            const double log_norm = mx + std::log(sum);
            double n = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                res.nll -= static_cast<double>(counts[i]) * (pre[i] - log_norm);
                n += static_cast<double>(counts[i]);
            }
            if (d_out) {
                for (std::size_t i = 0; i < k; ++i) {
                    d_out[i] = scale * (n * std::exp(pre[i] - log_norm) - static_cast<double>(counts[i]));
                }
            }
            break;
        }
        case LikelihoodKind::poisson: {
            for (std::size_t i = 0; i < k; ++i) {
                const double c = static_cast<double>(counts[i]);
                const double rate = softplus(pre[i]);
                const double log_rate = pre[i] < -30.0 ? pre[i] : std::log(rate);
                res.nll += rate - c * log_rate + log_gamma(c + 1.0);
                if (d_out) {
                    // d/da [rate - c log rate] = sigmoid(a) (1 - c / rate)
                    const double ratio = pre[i] < -30.0 ? 1.0 : sigmoid(pre[i]) / rate;
                    d_out[i] = scale * (sigmoid(pre[i]) - c * ratio);
                }
            }
            break;
        }
    }
    return res;
}

std::vector<double> head_output(LikelihoodKind kind, const double* pre, std::size_t k) {
    std::vector<double> out(k);
    switch (kind) {
        case LikelihoodKind::hypergeometric:
            for (std::size_t i = 0; i < k; ++i) out[i] = std::max(pre[i], 0.0);
            break;
        case LikelihoodKind::multinomial: {
            const double mx = *std::max_element(pre, pre + k);
            double sum = 0.0;
            for (std::size_t i = 0; i < k; ++i) sum += (out[i] = std::exp(pre[i] - mx));
            for (auto& v : out) v /= sum;
            break;
        }
        case LikelihoodKind::poisson:
            for (std::size_t i = 0; i < k; ++i) out[i] = softplus(pre[i]);
            break;
    }
    for (double v : out) {
        if (!std::isfinite(v)) throw NumericalError("decode: non-finite head output");
    }
    return out;
}

}  // namespace

LikelihoodKind parse_likelihood(std::string_view name) {
    if (name == "hg" || name == "hypergeometric") return LikelihoodKind::hypergeometric;
    if (name == "mn" || name == "multinomial") return LikelihoodKind::multinomial;
    if (name == "poisson" || name == "p") return LikelihoodKind::poisson;
    throw ValidationError("unknown likelihood '" + std::string(name) + "' (expected hg, mn or poisson)");
}

std::string likelihood_name(LikelihoodKind kind) {
    switch (kind) {
        case LikelihoodKind::hypergeometric: return "hg";
        case LikelihoodKind::multinomial: return "mn";
        case LikelihoodKind::poisson: return "poisson";
    }
    return "?";
}

Activation parse_activation(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw ValidationError("unknown activation '" + std::string(name) + "'");
}

std::string activation_name(Activation act) { return act == Activation::relu ? "relu" : "tanh"; }

void NetworkSpec::validate() const {
    auto positive = [](const std::vector<int>& widths) {
        return std::all_of(widths.begin(), widths.end(), [](int w) { return w >= 1; });
    };
    if (!positive(encoder_hidden) || !positive(decoder_hidden)) {
        throw ValidationError("network: layer widths must be >= 1");
    }
    if (latent_dim < 1) throw ValidationError("network: latent_dim must be >= 1");
}

NetworkParams::NetworkParams(const NetworkSpec& spec, int num_categories)
    : spec_(spec), num_categories_(num_categories) {
    spec.validate();
    if (num_categories < 2) throw ValidationError("network: need at least 2 categories");
    std::vector<int> widths;
    widths.push_back(num_categories);
    widths.insert(widths.end(), spec.encoder_hidden.begin(), spec.encoder_hidden.end());
    widths.push_back(2 * spec.latent_dim);
    std::vector<int> dec;
    dec.push_back(spec.latent_dim);
    dec.insert(dec.end(), spec.decoder_hidden.begin(), spec.decoder_hidden.end());
    dec.push_back(num_categories);

    std::size_t offset = 0;
    auto add = [&](const std::vector<int>& w) {
        for (std::size_t i = 0; i + 1 < w.size(); ++i) {
            layers_.push_back({w[i], w[i + 1], offset});
            offset += std::size_t(w[i]) * w[i + 1] + w[i + 1];
        }
    };
    add(widths);
    add(dec);
    values_.assign(offset, 0.0);
    optimizer = AdamState(offset);
}

NetworkParams NetworkParams::random(const NetworkSpec& spec, int num_categories, std::uint64_t seed) {
    NetworkParams p(spec, num_categories);
    Rng rng = make_stream(seed, 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t l = 0; l < p.layers_.size(); ++l) {
        const auto& shape = p.layers_[l];
        const double scale = std::sqrt(2.0 / shape.in);
        auto w = p.weights(l);
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = scale * normal(rng);
        }
    }
    return p;
}

Eigen::Map<RowMajorMatrix> NetworkParams::weights(std::size_t layer) {
    const auto& s = layers_.at(layer);
    return {values_.data() + s.offset, s.out, s.in};
}
Eigen::Map<const RowMajorMatrix> NetworkParams::weights(std::size_t layer) const {
    const auto& s = layers_.at(layer);
    return {values_.data() + s.offset, s.out, s.in};
}
Eigen::Map<Eigen::VectorXd> NetworkParams::bias(std::size_t layer) {
    const auto& s = layers_.at(layer);
    return {values_.data() + s.offset + std::size_t(s.out) * s.in, s.out};
}
Eigen::Map<const Eigen::VectorXd> NetworkParams::bias(std::size_t layer) const {
    const auto& s = layers_.at(layer);
    return {values_.data() + s.offset + std::size_t(s.out) * s.in, s.out};
}

PosteriorParams encode(std::span<const Count> counts, const NetworkParams& params) {
    if (counts.size() != static_cast<std::size_t>(params.num_categories())) {
        throw ValidationError("encode: expected " + std::to_string(params.num_categories()) + " categories");
    }
    CountMatrix one(1, counts.size(), std::vector<Count>(counts.begin(), counts.end()));
    const MatrixXd out = mlp_forward(params, 0, params.num_encoder_layers(), encoder_input(one), nullptr);
    const int d = params.spec().latent_dim;
    PosteriorParams post;
    post.mean.resize(d);
    post.log_var.resize(d);
    for (int i = 0; i < d; ++i) {
        post.mean[i] = out(i, 0);
        post.log_var[i] = out(d + i, 0);
        if (!std::isfinite(post.mean[i]) || !std::isfinite(post.log_var[i])) {
            throw NumericalError("encode: non-finite activation");
        }
    }
    return post;
}

std::vector<double> reparameterize(PosteriorParams& post, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    post.z.resize(post.mean.size());
    for (std::size_t i = 0; i < post.mean.size(); ++i) {
        post.z[i] = post.mean[i] + std::exp(0.5 * post.log_var[i]) * normal(rng);
    }
    return post.z;
}

std::vector<double> decode(std::span<const double> z, const NetworkParams& params) {
    if (z.size() != static_cast<std::size_t>(params.spec().latent_dim)) {
        throw ValidationError("decode: latent vector has wrong length");
    }
    MatrixXd x = Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
    const MatrixXd out = mlp_forward(params, params.num_encoder_layers(), params.layers().size(), x, nullptr);
    return head_output(params.spec().output_head, out.data(), out.rows());
}

LossParts elbo_loss_and_grad(const CountMatrix& batch, const NetworkParams& params, double penalty_weight,
                             const Eigen::MatrixXd& eps, std::span<double> grad) {
    const int d = params.spec().latent_dim;
    const auto rows = static_cast<Eigen::Index>(batch.rows());
    if (batch.cols() != static_cast<std::size_t>(params.num_categories())) {
        throw ValidationError("elbo_loss: batch has wrong number of categories");
    }
    if (eps.rows() != d || eps.cols() != rows) throw ValidationError("elbo_loss: noise has wrong shape");
    const bool want_grad = !grad.empty();
    if (want_grad && grad.size() != params.size()) throw ValidationError("elbo_loss: gradient buffer size");
    if (rows == 0) return {};

    const std::size_t n_enc = params.num_encoder_layers();
    const std::size_t n_all = params.layers().size();
    MlpCache enc_cache, dec_cache;
    const MatrixXd enc_out = mlp_forward(params, 0, n_enc, encoder_input(batch), want_grad ? &enc_cache : nullptr);
    const auto mean = enc_out.topRows(d);
    const auto log_var = enc_out.bottomRows(d);
    const MatrixXd std_dev = (0.5 * log_var.array()).exp().matrix();
    const MatrixXd z = mean + std_dev.cwiseProduct(eps);
    const MatrixXd dec_out = mlp_forward(params, n_enc, n_all, z, want_grad ? &dec_cache : nullptr);

    const double scale = 1.0 / static_cast<double>(rows);
    LossParts parts;
    parts.kl = 0.5 * (mean.array().square() + log_var.array().exp() - 1.0 - log_var.array()).sum() * scale;
    MatrixXd d_dec;
    if (want_grad) d_dec.resize(dec_out.rows(), dec_out.cols());
    const LikelihoodKind kind = params.spec().output_head;
    for (Eigen::Index j = 0; j < rows; ++j) {
        const HeadResult head = evaluate_head(kind, batch.row(j), dec_out.col(j).data(), penalty_weight, scale,
                                              want_grad ? d_dec.col(j).data() : nullptr);
        parts.nll += head.nll * scale;
        parts.penalty += penalty_weight * head.penalty * scale;
        parts.violated_fraction += static_cast<double>(head.violated);
    }
    parts.violated_fraction /= static_cast<double>(rows) * static_cast<double>(batch.cols());
    parts.total = parts.kl + parts.nll + parts.penalty;
    if (!want_grad) return parts;

    std::fill(grad.begin(), grad.end(), 0.0);
    const MatrixXd d_z = mlp_backward(params, n_enc, dec_cache, std::move(d_dec), grad);
    MatrixXd d_enc(2 * d, rows);
    d_enc.topRows(d) = d_z + scale * mean;
    d_enc.bottomRows(d) = (0.5 * d_z.cwiseProduct(eps).cwiseProduct(std_dev)) +
                          (0.5 * scale) * (log_var.array().exp() - 1.0).matrix();
    mlp_backward(params, 0, enc_cache, std::move(d_enc), grad);
    return parts;
}

namespace {

Eigen::MatrixXd draw_noise(int d, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd eps(d, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (int r = 0; r < d; ++r) eps(r, c) = normal(rng);
    }
    return eps;
}

}  // namespace

LossParts elbo_loss(std::span<const Count> counts, const NetworkParams& params, const PenaltyConfig& penalty,
                    Rng& rng) {
    CountMatrix one(1, counts.size(), std::vector<Count>(counts.begin(), counts.end()));
    return elbo_loss_and_grad(one, params, penalty.weight, draw_noise(params.spec().latent_dim, 1, rng), {});
}

std::vector<double> backward(std::span<const Count> counts, const NetworkParams& params,
                             const PenaltyConfig& penalty, Rng& rng) {
    CountMatrix one(1, counts.size(), std::vector<Count>(counts.begin(), counts.end()));
    std::vector<double> grad(params.size(), 0.0);
    elbo_loss_and_grad(one, params, penalty.weight, draw_noise(params.spec().latent_dim, 1, rng), grad);
    return grad;
}

void TrainConfig::validate() const {
    adam.validate();
    penalty.validate();
    if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
    if (max_epochs < 1) throw ValidationError("train: max_epochs must be >= 1");
    if (samples_per_observation < 1) throw ValidationError("train: samples_per_observation must be >= 1");
}

TrainResult train(const CountMatrix& data, const NetworkSpec& spec, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
    config.validate();
    if (data.empty()) throw ValidationError("train: data is empty");
    PenaltyConfig penalty = config.penalty;
    // a min/max pair without an explicit ramp length ramps over the first half of training
    if (penalty.weight_min != penalty.weight_max && penalty.ramp_epochs == 0) {
        penalty.ramp_epochs = std::max(1, config.max_epochs / 2);
    }

    TrainResult result{NetworkParams::random(spec, static_cast<int>(data.cols()), config.seed), {}};
    NetworkParams& params = result.params;
    Rng shuffle_rng = make_stream(config.seed, 2);
    Rng noise_rng = make_stream(config.seed, 3);

    std::vector<std::size_t> order(data.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad(params.size(), 0.0);
    const std::size_t k = data.cols();

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        const double weight = penalty.weight_at(epoch);
        EpochStats stats;
        stats.epoch = epoch;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            const auto samples = static_cast<std::size_t>(config.samples_per_observation);
            const std::size_t width = stop - start;
            CountMatrix batch(width * samples, k);
            for (std::size_t s = 0; s < samples; ++s) {
                for (std::size_t r = start; r < stop; ++r) {
                    auto src = data.row(order[r]);
                    std::copy(src.begin(), src.end(), batch.row(s * width + r - start).begin());
                }
            }
            const Eigen::MatrixXd eps = draw_noise(spec.latent_dim, static_cast<Eigen::Index>(batch.rows()), noise_rng);
            const LossParts parts = elbo_loss_and_grad(batch, params, weight, eps, grad);
            if (!std::isfinite(parts.total)) {
                std::ostringstream msg;
                msg << "train: non-finite loss at epoch " << epoch << " (kl=" << parts.kl << ", nll=" << parts.nll
                    << ", penalty=" << parts.penalty << ")";
                throw NumericalError(msg.str());
            }
            const double rows = static_cast<double>(width);
            stats.mean.kl += parts.kl * rows;
            stats.mean.nll += parts.nll * rows;
            stats.mean.penalty += parts.penalty * rows;
            stats.violated_fraction += parts.violated_fraction * rows;
            adam_apply(params.optimizer, grad, params.values(), config.adam);
        }
        const double n = static_cast<double>(data.rows());
        stats.mean.kl /= n;
        stats.mean.nll /= n;
        stats.mean.penalty /= n;
        stats.mean.total = stats.mean.kl + stats.mean.nll + stats.mean.penalty;
        stats.violated_fraction /= n;
        result.history.push_back(stats);
        if (on_epoch) on_epoch(epoch, params);
    }
    return result;
}

RealMatrix latent_means(const CountMatrix& data, const NetworkParams& params) {
    const int d = params.spec().latent_dim;
    RealMatrix out{data.rows(), static_cast<std::size_t>(d), std::vector<double>(data.rows() * d)};
    if (data.rows() == 0) return out;
    const MatrixXd enc = mlp_forward(params, 0, params.num_encoder_layers(), encoder_input(data), nullptr);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (int i = 0; i < d; ++i) out.data[r * d + i] = enc(i, static_cast<Eigen::Index>(r));
    }
    return out;
}

RealMatrix infer_estimates(const CountMatrix& data, const NetworkParams& params, bool round) {
    const std::size_t k = data.cols();
    RealMatrix out{data.rows(), k, std::vector<double>(data.rows() * k)};
    if (data.rows() == 0) return out;
    const int d = params.spec().latent_dim;
    const MatrixXd enc = mlp_forward(params, 0, params.num_encoder_layers(), encoder_input(data), nullptr);
    const MatrixXd dec = mlp_forward(params, params.num_encoder_layers(), params.layers().size(), enc.topRows(d), nullptr);
    const LikelihoodKind kind = params.spec().output_head;
    for (std::size_t r = 0; r < data.rows(); ++r) {
        std::vector<double> head = head_output(kind, dec.col(static_cast<Eigen::Index>(r)).data(), k);
        if (kind == LikelihoodKind::hypergeometric) {
            head = threshold_estimates(data.row(r), head);
            if (round) {
                for (auto& v : head) v = std::round(v);
            }
        }
        std::copy(head.begin(), head.end(), out.data.begin() + r * k);
    }
    return out;
}

}  // namespace hgpop
