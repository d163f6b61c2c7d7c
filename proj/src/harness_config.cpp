#include "routerl/harness/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

namespace routerl::harness {

using json = nlohmann::ordered_json;

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "ppo") return Algorithm::PPO;
    if (s == "reinforce") return Algorithm::Reinforce;
    throw ConfigError("unknown algorithm: " + s);
}

std::string to_string(Algorithm algorithm) {
    return algorithm == Algorithm::PPO ? "ppo" : "reinforce";
}

void ExperimentConfig::validate() const {
    if (num_customers < 2) throw ConfigError("problem.n must be at least 2");
    if (num_instances < 1) throw ConfigError("env.num_instances must be positive");
    if (trajectories < 1) throw ConfigError("env.trajectories must be positive");
    if (env_step_budget < 0) throw ConfigError("train.env_step_budget must be non-negative");
    if (eval_instances < 1) throw ConfigError("train.eval_instances must be positive");
    if (eval_cadence < 1) throw ConfigError("train.eval_cadence must be positive");
    if (checkpoint_cadence < 1) throw ConfigError("train.checkpoint_cadence must be positive");
    if (out_dir.empty()) throw ConfigError("train.out_dir must not be empty");
    if (model.kind != kind) throw ConfigError("model kind must match problem kind");
    model.validate();
    ppo.validate();
    reinforce.validate();
    baseline.validate();
    // A row cannot serve as its own comparison set.
    if (algorithm == Algorithm::Reinforce && baseline.kind == algo::BaselineKind::SharedRollouts &&
        trajectories < 2)
        throw ConfigError("shared-rollouts baseline needs env.trajectories >= 2");
}

namespace {

nn::NormKind norm_from_string(const std::string& s) {
    if (s == "instance") return nn::NormKind::Instance;
    if (s == "batch") return nn::NormKind::Batch;
    throw ConfigError("unknown normalization: " + s);
}

std::string norm_to_string(nn::NormKind kind) {
    return kind == nn::NormKind::Instance ? "instance" : "batch";
}

[[noreturn]] void type_error(const std::string& key, const char* want, const json& got) {
    throw ConfigError("config key '" + key + "' expects " + want + ", got: " + got.dump());
}

int get_int(const json& v, const std::string& key) {
    if (!v.is_number_integer()) type_error(key, "an integer", v);
    return v.get<int>();
}

std::int64_t get_i64(const json& v, const std::string& key) {
    if (!v.is_number_integer()) type_error(key, "an integer", v);
    return v.get<std::int64_t>();
}

std::uint64_t get_u64(const json& v, const std::string& key) {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                   v.get<std::int64_t>() < 0))
        type_error(key, "a non-negative integer", v);
    return v.get<std::uint64_t>();
}

double get_double(const json& v, const std::string& key) {
    if (!v.is_number()) type_error(key, "a number", v);
    return v.get<double>();
}

bool get_bool(const json& v, const std::string& key) {
    if (!v.is_boolean()) type_error(key, "a boolean", v);
    return v.get<bool>();
}

std::string get_string(const json& v, const std::string& key) {
    if (!v.is_string()) type_error(key, "a string", v);
    return v.get<std::string>();
}

struct Key {
    const char* name;
    std::function<json(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const json&)> set;
};

const std::vector<Key>& key_table() {
    using C = ExperimentConfig;
    static const std::vector<Key> table = {
        {"problem.kind", [](const C& c) { return json(problems::to_string(c.kind)); },
         [](C& c, const json& v) {
             c.kind = problems::problem_kind_from_string(get_string(v, "problem.kind"));
             c.model.kind = c.kind;
         }},
        {"problem.n", [](const C& c) { return json(c.num_customers); },
         [](C& c, const json& v) { c.num_customers = get_int(v, "problem.n"); }},

        {"env.num_instances", [](const C& c) { return json(c.num_instances); },
         [](C& c, const json& v) { c.num_instances = get_int(v, "env.num_instances"); }},
        {"env.trajectories", [](const C& c) { return json(c.trajectories); },
         [](C& c, const json& v) { c.trajectories = get_int(v, "env.trajectories"); }},
        {"env.reward_mode", [](const C& c) { return json(env::to_string(c.reward_mode)); },
         [](C& c, const json& v) {
             c.reward_mode = env::reward_mode_from_string(get_string(v, "env.reward_mode"));
         }},

        {"model.embed_dim", [](const C& c) { return json(c.model.embed_dim); },
         [](C& c, const json& v) { c.model.embed_dim = get_int(v, "model.embed_dim"); }},
        {"model.num_heads", [](const C& c) { return json(c.model.num_heads); },
         [](C& c, const json& v) { c.model.num_heads = get_int(v, "model.num_heads"); }},
        {"model.num_layers", [](const C& c) { return json(c.model.num_encoder_layers); },
         [](C& c, const json& v) {
             c.model.num_encoder_layers = get_int(v, "model.num_layers");
         }},
        {"model.feedforward_dim", [](const C& c) { return json(c.model.feedforward_dim); },
         [](C& c, const json& v) {
             c.model.feedforward_dim = get_int(v, "model.feedforward_dim");
         }},
        {"model.logit_clip", [](const C& c) { return json(c.model.logit_clip); },
         [](C& c, const json& v) { c.model.logit_clip = get_double(v, "model.logit_clip"); }},
        {"model.normalization",
         [](const C& c) { return json(norm_to_string(c.model.normalization)); },
         [](C& c, const json& v) {
             c.model.normalization = norm_from_string(get_string(v, "model.normalization"));
         }},
        {"model.dynamic_logit_keys", [](const C& c) { return json(c.model.dynamic_logit_keys); },
         [](C& c, const json& v) {
             c.model.dynamic_logit_keys = get_bool(v, "model.dynamic_logit_keys");
         }},

        {"algo.name", [](const C& c) { return json(to_string(c.algorithm)); },
         [](C& c, const json& v) {
             c.algorithm = algorithm_from_string(get_string(v, "algo.name"));
         }},

        {"ppo.learning_rate", [](const C& c) { return json(c.ppo.learning_rate); },
         [](C& c, const json& v) { c.ppo.learning_rate = get_double(v, "ppo.learning_rate"); }},
        {"ppo.num_minibatches", [](const C& c) { return json(c.ppo.num_minibatches); },
         [](C& c, const json& v) {
             c.ppo.num_minibatches = get_int(v, "ppo.num_minibatches");
         }},
        {"ppo.update_epochs", [](const C& c) { return json(c.ppo.update_epochs); },
         [](C& c, const json& v) { c.ppo.update_epochs = get_int(v, "ppo.update_epochs"); }},
        {"ppo.clip_coef", [](const C& c) { return json(c.ppo.clip_coef); },
         [](C& c, const json& v) { c.ppo.clip_coef = get_double(v, "ppo.clip_coef"); }},
        {"ppo.gamma", [](const C& c) { return json(c.ppo.gamma); },
         [](C& c, const json& v) { c.ppo.gamma = get_double(v, "ppo.gamma"); }},
        {"ppo.gae_lambda", [](const C& c) { return json(c.ppo.gae_lambda); },
         [](C& c, const json& v) { c.ppo.gae_lambda = get_double(v, "ppo.gae_lambda"); }},
        {"ppo.value_coef", [](const C& c) { return json(c.ppo.value_coef); },
         [](C& c, const json& v) { c.ppo.value_coef = get_double(v, "ppo.value_coef"); }},
        {"ppo.entropy_coef", [](const C& c) { return json(c.ppo.entropy_coef); },
         [](C& c, const json& v) { c.ppo.entropy_coef = get_double(v, "ppo.entropy_coef"); }},
        {"ppo.max_grad_norm", [](const C& c) { return json(c.ppo.max_grad_norm); },
         [](C& c, const json& v) { c.ppo.max_grad_norm = get_double(v, "ppo.max_grad_norm"); }},

        {"reinforce.learning_rate", [](const C& c) { return json(c.reinforce.learning_rate); },
         [](C& c, const json& v) {
             c.reinforce.learning_rate = get_double(v, "reinforce.learning_rate");
         }},
        {"reinforce.value_coef", [](const C& c) { return json(c.reinforce.value_coef); },
         [](C& c, const json& v) {
             c.reinforce.value_coef = get_double(v, "reinforce.value_coef");
         }},
        {"reinforce.entropy_coef", [](const C& c) { return json(c.reinforce.entropy_coef); },
         [](C& c, const json& v) {
             c.reinforce.entropy_coef = get_double(v, "reinforce.entropy_coef");
         }},
        {"reinforce.max_grad_norm", [](const C& c) { return json(c.reinforce.max_grad_norm); },
         [](C& c, const json& v) {
             c.reinforce.max_grad_norm = get_double(v, "reinforce.max_grad_norm");
         }},

        {"baseline.kind", [](const C& c) { return json(algo::to_string(c.baseline.kind)); },
         [](C& c, const json& v) {
             c.baseline.kind = algo::baseline_kind_from_string(get_string(v, "baseline.kind"));
         }},
        {"baseline.alpha", [](const C& c) { return json(c.baseline.alpha); },
         [](C& c, const json& v) { c.baseline.alpha = get_double(v, "baseline.alpha"); }},
        {"baseline.num_rollouts", [](const C& c) { return json(c.baseline.num_rollouts); },
         [](C& c, const json& v) {
             c.baseline.num_rollouts = get_int(v, "baseline.num_rollouts");
         }},

        {"train.env_step_budget", [](const C& c) { return json(c.env_step_budget); },
         [](C& c, const json& v) {
             c.env_step_budget = get_i64(v, "train.env_step_budget");
         }},
        {"train.eval_instances", [](const C& c) { return json(c.eval_instances); },
         [](C& c, const json& v) { c.eval_instances = get_int(v, "train.eval_instances"); }},
        {"train.eval_seed", [](const C& c) { return json(c.eval_seed); },
         [](C& c, const json& v) { c.eval_seed = get_u64(v, "train.eval_seed"); }},
        {"train.eval_cadence", [](const C& c) { return json(c.eval_cadence); },
         [](C& c, const json& v) { c.eval_cadence = get_int(v, "train.eval_cadence"); }},
        {"train.checkpoint_cadence", [](const C& c) { return json(c.checkpoint_cadence); },
         [](C& c, const json& v) {
             c.checkpoint_cadence = get_int(v, "train.checkpoint_cadence");
         }},
        {"train.target_eval_length", [](const C& c) { return json(c.target_eval_length); },
         [](C& c, const json& v) {
             c.target_eval_length = get_double(v, "train.target_eval_length");
         }},
        {"train.out_dir", [](const C& c) { return json(c.out_dir); },
         [](C& c, const json& v) { c.out_dir = get_string(v, "train.out_dir"); }},
        {"train.seed", [](const C& c) { return json(c.seed); },
         [](C& c, const json& v) { c.seed = get_u64(v, "train.seed"); }},
    };
    return table;
}

const Key& find_key(const std::string& name) {
    for (const Key& k : key_table())
        if (name == k.name) return k;
    throw ConfigError("unknown config key: " + name);
}

// Env vars and override values arrive as text; numbers/booleans parse as
// JSON scalars, anything else stays a bare string ("tsp", "greedy_rollout").
json parse_scalar(const std::string& text) {
    json v = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (v.is_discarded() || v.is_object() || v.is_array() || v.is_null()) return json(text);
    return v;
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const Key& k : key_table()) out.emplace_back(k.name);
        return out;
    }();
    return names;
}

ExperimentConfig config_from_json(const std::string& text) {
    json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) throw ConfigError("config is not valid JSON");
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig cfg;
    for (const auto& [name, value] : doc.items()) find_key(name).set(cfg, value);
    cfg.model.kind = cfg.kind;
    return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json doc = json::object();
    for (const Key& k : key_table()) doc[k.name] = k.get(cfg);
    return doc.dump(2);
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like key=value: " + assignment);
    const std::string key = assignment.substr(0, eq);
    find_key(key).set(cfg, parse_scalar(assignment.substr(eq + 1)));
    cfg.model.kind = cfg.kind;
}

std::string env_var_for_key(const std::string& key) {
    std::string out = "ROUTERL_";
    for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(c));
    return out;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    ExperimentConfig cfg;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read config file: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        cfg = config_from_json(buf.str());
    }
    for (const Key& k : key_table())
        if (const char* v = std::getenv(env_var_for_key(k.name).c_str())) k.set(cfg, parse_scalar(v));
    for (const std::string& o : overrides) apply_override(cfg, o);
    cfg.model.kind = cfg.kind;
    cfg.validate();
    return cfg;
}

}  // namespace routerl::harness
