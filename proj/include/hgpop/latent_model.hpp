#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hgpop/adam.hpp"
#include "hgpop/count_matrix.hpp"
#include "hgpop/likelihood.hpp"
#include "hgpop/simulator.hpp"

namespace hgpop {

enum class LikelihoodKind { hypergeometric, multinomial, poisson };

/// "hg" | "mn" | "poisson" (long names are accepted as well).
LikelihoodKind parse_likelihood(std::string_view name);
std::string likelihood_name(LikelihoodKind kind);

enum class Activation { relu, tanh };

Activation parse_activation(std::string_view name);
std::string activation_name(Activation act);

struct NetworkSpec {
    std::vector<int> encoder_hidden{128, 128};
    std::vector<int> decoder_hidden{128, 128};
    int latent_dim = 10;
    Activation hidden_activation = Activation::relu;
    LikelihoodKind output_head = LikelihoodKind::hypergeometric;

    void validate() const;
    bool operator==(const NetworkSpec&) const = default;
};

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Encoder (phi) and decoder (psi) weights in one flat buffer, laid out
/// layer by layer (encoder first) as a row-major weight matrix followed by
/// its bias, together with the Adam moments for that buffer.
class NetworkParams {
public:
    struct LayerShape {
        int in = 0;
        int out = 0;
        std::size_t offset = 0;  // start of the weights in the flat buffer
    };

    NetworkParams() = default;
    /// Zero-filled parameters for K input categories.
    NetworkParams(const NetworkSpec& spec, int num_categories);

    /// He-normal weights for every layer, zero biases.
    static NetworkParams random(const NetworkSpec& spec, int num_categories, std::uint64_t seed);

    const NetworkSpec& spec() const { return spec_; }
    int num_categories() const { return num_categories_; }
    std::size_t num_encoder_layers() const { return spec_.encoder_hidden.size() + 1; }
    const std::vector<LayerShape>& layers() const { return layers_; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    std::size_t size() const { return values_.size(); }

    Eigen::Map<RowMajorMatrix> weights(std::size_t layer);
    Eigen::Map<const RowMajorMatrix> weights(std::size_t layer) const;
    Eigen::Map<Eigen::VectorXd> bias(std::size_t layer);
    Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;

    AdamState optimizer;

private:
    NetworkSpec spec_;
    int num_categories_ = 0;
    std::vector<LayerShape> layers_;
    std::vector<double> values_;
};

struct PosteriorParams {
    std::vector<double> mean;
    std::vector<double> log_var;
    std::vector<double> z;  // filled by reparameterize
};

struct LossParts {
    double kl = 0.0;
    double nll = 0.0;      // negative log-likelihood of the head
    double penalty = 0.0;  // already multiplied by the penalty weight
    double total = 0.0;
    double violated_fraction = 0.0;  // hg only: share of entries with raw output below the count
};

/// Forward pass of the encoder on one row (input transformed by log(1 + c)).
PosteriorParams encode(std::span<const Count> counts, const NetworkParams& params);

/// z = mean + exp(log_var / 2) * eps with eps ~ N(0, I). Stores z in `post`.
std::vector<double> reparameterize(PosteriorParams& post, Rng& rng);

/// Decoder head output for one latent vector: raw rectified sizes (hg),
/// simplex probabilities (mn) or softplus rates (poisson).
std::vector<double> decode(std::span<const double> z, const NetworkParams& params);

/// Batch loss and gradients for fixed noise `eps` (D x rows). The loss is the
/// mean over rows; `grad`, when non-empty, receives the gradient with respect
/// to every parameter in the flat layout.
LossParts elbo_loss_and_grad(const CountMatrix& batch, const NetworkParams& params,
                             double penalty_weight, const Eigen::MatrixXd& eps,
                             std::span<double> grad);

/// Single-row loss with one reparameterized sample drawn from `rng`.
LossParts elbo_loss(std::span<const Count> counts, const NetworkParams& params,
                    const PenaltyConfig& penalty, Rng& rng);

/// Gradient of elbo_loss for one row; consumes the same noise as elbo_loss
/// when given an identically seeded `rng`.
std::vector<double> backward(std::span<const Count> counts, const NetworkParams& params,
                             const PenaltyConfig& penalty, Rng& rng);

struct TrainConfig {
    AdamConfig adam{0.01};
    int batch_size = 100;
    int max_epochs = 200;
    PenaltyConfig penalty{};
    std::uint64_t seed = 0;
    /// Reparameterized draws per observation and step; the likelihood and
    /// penalty terms are averaged over them.
    int samples_per_observation = 1;

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    LossParts mean;  // per-observation averages over the epoch
    double violated_fraction = 0.0;
};

struct TrainResult {
    NetworkParams params;
    std::vector<EpochStats> history;
};

using EpochCallback = std::function<void(int epoch, const NetworkParams&)>;

/// Mini-batch Adam on the penalized negative ELBO. Deterministic for a fixed
/// seed: weight init, shuffling and noise each draw from their own stream.
TrainResult train(const CountMatrix& data, const NetworkSpec& spec, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Row-major rows x cols matrix of reals.
struct RealMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Posterior means for every row (the latent representation used for clustering).
RealMatrix latent_means(const CountMatrix& data, const NetworkParams& params);

/// Decoder output at the posterior mean for every row. Hypergeometric
/// estimates are thresholded against their row and optionally rounded.
RealMatrix infer_estimates(const CountMatrix& data, const NetworkParams& params, bool round = false);

}  // namespace hgpop
