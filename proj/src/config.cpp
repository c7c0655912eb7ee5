#include "hgpop/config.hpp"

#include <set>
#include <string>

#include "hgpop/error.hpp"

namespace hgpop {

namespace {

using json = nlohmann::ordered_json;

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* what) {
    if (!j.is_object()) throw ValidationError(std::string(what) + ": expected a JSON object");
    std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, _] : j.items()) {
        if (!keys.count(key)) throw ValidationError(std::string(what) + ": unknown key '" + key + "'");
    }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

void adam_to(json& j, const AdamConfig& c) {
    j["learning_rate"] = c.learning_rate;
    j["beta1"] = c.beta1;
    j["beta2"] = c.beta2;
    j["epsilon"] = c.epsilon;
}

void adam_from(const json& j, AdamConfig& c) {
    read_opt(j, "learning_rate", c.learning_rate);
    read_opt(j, "beta1", c.beta1);
    read_opt(j, "beta2", c.beta2);
    read_opt(j, "epsilon", c.epsilon);
}

}  // namespace

void to_json(json& j, const PenaltyConfig& c) {
    j = json{{"weight", c.weight}, {"weight_min", c.weight_min}, {"weight_max", c.weight_max},
             {"ramp_epochs", c.ramp_epochs}};
}

void from_json(const json& j, PenaltyConfig& c) {
    reject_unknown(j, {"weight", "weight_min", "weight_max", "ramp_epochs"}, "penalty");
    read_opt(j, "weight", c.weight);
    read_opt(j, "weight_min", c.weight_min);
    read_opt(j, "weight_max", c.weight_max);
    read_opt(j, "ramp_epochs", c.ramp_epochs);
}

void to_json(json& j, const AdamConfig& c) {
    j = json::object();
    adam_to(j, c);
}

void from_json(const json& j, AdamConfig& c) {
    reject_unknown(j, {"learning_rate", "beta1", "beta2", "epsilon"}, "adam");
    adam_from(j, c);
}

void to_json(json& j, const SimulationConfig& c) {
    j = json{{"num_distributions", c.num_distributions},
             {"num_categories", c.num_categories},
             {"trials_per_distribution", c.trials_per_distribution},
             {"total_counts", c.total_counts},
             {"sample_fraction_min", c.sample_fraction_min},
             {"sample_fraction_max", c.sample_fraction_max},
             {"shared_prob_groups", c.shared_prob_groups},
             {"dirichlet_alpha", c.dirichlet_alpha},
             {"seed", c.seed}};
    if (c.ground_truth) j["ground_truth"] = *c.ground_truth;
    if (c.depth_reference_total) j["depth_reference_total"] = *c.depth_reference_total;
}

void from_json(const json& j, SimulationConfig& c) {
    reject_unknown(j,
                   {"num_distributions", "num_categories", "trials_per_distribution", "total_counts",
                    "sample_fraction_min", "sample_fraction_max", "shared_prob_groups", "dirichlet_alpha", "seed",
                    "ground_truth", "depth_reference_total"},
                   "simulation");
    read_opt(j, "num_distributions", c.num_distributions);
    read_opt(j, "num_categories", c.num_categories);
    read_opt(j, "trials_per_distribution", c.trials_per_distribution);
    if (j.contains("total_counts")) {
        const auto& t = j.at("total_counts");
        c.total_counts = t.is_array() ? t.get<std::vector<Count>>() : std::vector<Count>{t.get<Count>()};
    }
    read_opt(j, "sample_fraction_min", c.sample_fraction_min);
    read_opt(j, "sample_fraction_max", c.sample_fraction_max);
    read_opt(j, "shared_prob_groups", c.shared_prob_groups);
    read_opt(j, "dirichlet_alpha", c.dirichlet_alpha);
    read_opt(j, "seed", c.seed);
    if (j.contains("ground_truth") && !j.at("ground_truth").is_null()) {
        c.ground_truth = j.at("ground_truth").get<std::vector<std::vector<Count>>>();
    }
    if (j.contains("depth_reference_total") && !j.at("depth_reference_total").is_null()) {
        c.depth_reference_total = j.at("depth_reference_total").get<Count>();
    }
}

void to_json(json& j, const NetworkSpec& c) {
    j = json{{"encoder_hidden", c.encoder_hidden},
             {"decoder_hidden", c.decoder_hidden},
             {"latent_dim", c.latent_dim},
             {"hidden_activation", activation_name(c.hidden_activation)},
             {"output_head", likelihood_name(c.output_head)}};
}

void from_json(const json& j, NetworkSpec& c) {
    reject_unknown(j, {"encoder_hidden", "decoder_hidden", "latent_dim", "hidden_activation", "output_head"},
                   "network");
    read_opt(j, "encoder_hidden", c.encoder_hidden);
    read_opt(j, "decoder_hidden", c.decoder_hidden);
    read_opt(j, "latent_dim", c.latent_dim);
    if (j.contains("hidden_activation")) c.hidden_activation = parse_activation(j.at("hidden_activation").get<std::string>());
    if (j.contains("output_head")) c.output_head = parse_likelihood(j.at("output_head").get<std::string>());
}

void to_json(json& j, const TrainConfig& c) {
    j = json::object();
    adam_to(j, c.adam);
    j["batch_size"] = c.batch_size;
    j["max_epochs"] = c.max_epochs;
    j["penalty"] = c.penalty;
    j["seed"] = c.seed;
    j["samples_per_observation"] = c.samples_per_observation;
}

void from_json(const json& j, TrainConfig& c) {
    reject_unknown(j,
                   {"learning_rate", "beta1", "beta2", "epsilon", "batch_size", "max_epochs", "penalty", "seed",
                    "samples_per_observation"},
                   "train");
    adam_from(j, c.adam);
    read_opt(j, "batch_size", c.batch_size);
    read_opt(j, "max_epochs", c.max_epochs);
    read_opt(j, "penalty", c.penalty);
    read_opt(j, "seed", c.seed);
    read_opt(j, "samples_per_observation", c.samples_per_observation);
}

void to_json(json& j, const OptimizerConfig& c) {
    j = json::object();
    adam_to(j, c.adam);
    j["max_epochs"] = c.max_epochs;
    j["init"] = c.init.empty() ? json("zeros") : json(c.init);
    j["penalty"] = c.penalty;
    j["patience"] = c.patience;
    j["tolerance"] = c.tolerance;
}

void from_json(const json& j, OptimizerConfig& c) {
    reject_unknown(j,
                   {"learning_rate", "beta1", "beta2", "epsilon", "max_epochs", "init", "penalty", "patience",
                    "tolerance"},
                   "optimizer");
    adam_from(j, c.adam);
    read_opt(j, "max_epochs", c.max_epochs);
    if (j.contains("init")) {
        const auto& init = j.at("init");
        if (init.is_string()) {
            if (init.get<std::string>() != "zeros") throw ValidationError("optimizer: init must be 'zeros' or a vector");
            c.init.clear();
        } else {
            c.init = init.get<std::vector<double>>();
        }
    }
    read_opt(j, "penalty", c.penalty);
    read_opt(j, "patience", c.patience);
    read_opt(j, "tolerance", c.tolerance);
}

}  // namespace hgpop
