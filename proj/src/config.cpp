#include "lipad/config.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>

#include "lipad/errors.hpp"

namespace lipad {

using json = nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& scope) {
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw ConfigError("config: unknown key '" + key + "' in " + scope);
}

template <typename T> void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(std::string("config: bad value type for '") + key + "'");
        }
    }
}

void parse_train(const json& j, TrainConfig& t, bool& iterations_set) {
    reject_unknown(j,
                   {"lambda", "learning_rate", "beta1", "beta2", "epsilon", "batch_size", "iterations", "seed",
                    "trace_every", "gp_warmup_steps"},
                   "train");
    get_if(j, "lambda", t.lambda);
    get_if(j, "learning_rate", t.learning_rate);
    get_if(j, "beta1", t.beta1);
    get_if(j, "beta2", t.beta2);
    get_if(j, "epsilon", t.epsilon);
    get_if(j, "batch_size", t.batch_size);
    if (j.contains("iterations")) iterations_set = true;
    get_if(j, "iterations", t.iterations);
    get_if(j, "seed", t.seed);
    get_if(j, "trace_every", t.trace_every);
    get_if(j, "gp_warmup_steps", t.gp_warmup_steps);
}

void parse_corruption(const json& j, CorruptionProcess& c) {
    reject_unknown(j, {"kind", "sigma", "patch", "side"}, "corruption");
    std::string kind = "gaussian";
    get_if(j, "kind", kind);
    if (kind == "gaussian")
        c.kind = CorruptionKind::Gaussian;
    else if (kind == "patch-shuffle")
        c.kind = CorruptionKind::PatchShuffle;
    else
        throw ConfigError("config: corruption kind must be 'gaussian' or 'patch-shuffle'");
    get_if(j, "sigma", c.sigma);
    get_if(j, "patch", c.patch_size);
    get_if(j, "side", c.image_side);
}

void parse_mnist(const json& j, MnistPaths& m) {
    reject_unknown(j, {"train_images", "train_labels", "test_images", "test_labels"}, "mnist");
    get_if(j, "train_images", m.train_images);
    get_if(j, "train_labels", m.train_labels);
    get_if(j, "test_images", m.test_images);
    get_if(j, "test_labels", m.test_labels);
}

json apply_overrides(json j, const FlagOverrides& overrides) {
    for (const auto& [key, value] : overrides) {
        // flags override top-level scalar keys; type inferred from the
        // existing value when present, else parsed as number/bool/string
        json parsed;
        if (j.contains(key) && j.at(key).is_string()) {
            parsed = value;
        } else if (value == "true" || value == "false") {
            parsed = value == "true";
        } else {
            try {
                size_t used = 0;
                const double num = std::stod(value, &used);
                if (used == value.size())
                    parsed = num;
                else
                    parsed = value;
            } catch (const std::exception&) {
                parsed = value;
            }
        }
        if (j.contains(key) && (j.at(key).is_object() || j.at(key).is_array()))
            throw ConfigError("config: flag --" + key + " cannot override a non-scalar key");
        j[key] = parsed;
    }
    return j;
}

} // namespace

void RunConfig::validate() const {
    for (double g : gammas)
        if (g < 0.0 || g >= 0.5) throw ConfigError("config: gamma values must be in [0, 0.5)");
    for (int d : digits)
        if (d < 0 || d > 9) throw ConfigError("config: digits must be 0..9");
    if (seeds.empty()) throw ConfigError("config: seeds must be nonempty");
    if (grid_size < 2) throw ConfigError("config: grid_size must be >= 2");
    if (moons_n < 2) throw ConfigError("config: moons_n must be >= 2");
    if (tabular_n < 100) throw ConfigError("config: tabular_n must be >= 100");
    if (tabular_train_fraction <= 0.0 || tabular_train_fraction >= 1.0)
        throw ConfigError("config: tabular_train_fraction must be in (0,1)");
    if (knn_k < 1 || lof_k < 1) throw ConfigError("config: knn_k and lof_k must be >= 1");
    if (ae_denoising_sigma < 0.0) throw ConfigError("config: ae_denoising_sigma must be nonnegative");
    if (digits_train_per_class < 1 || digits_test_per_class < 1)
        throw ConfigError("config: digits per-class counts must be >= 1");
    if (data_kind != "moons" && data_kind != "tabular" && data_kind != "csv")
        throw ConfigError("config: data_kind must be moons|tabular|csv");
    train.validate();
    if (corruption_set) corruption.validate();
    for (const std::string& m : methods)
        if (m != "lad" && m != "ae" && m != "dcae" && m != "lof" && m != "knn")
            throw ConfigError("config: unknown method '" + m + "'");
}

long RunConfig::effective_threads() const {
    if (threads > 0) return threads;
    if (const char* env = std::getenv("LIPAD_THREADS")) {
        const long t = std::strtol(env, nullptr, 10);
        if (t > 0) return t;
    }
    const long hw = static_cast<long>(std::thread::hardware_concurrency());
    return hw > 0 ? hw : 1;
}

RunConfig parse_config_text(const std::string& text, const FlagOverrides& overrides) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid json: ") + e.what());
    }
    j = apply_overrides(j, overrides);

    reject_unknown(j,
                   {"experiment",     "output_dir",      "seed",
                    "seeds",          "digits",          "gammas",
                    "methods",        "mnist",           "digits_cache_dir",
                    "digits_train_per_class",            "digits_test_per_class",
                    "train",          "corruption",      "moons_n",
                    "moons_noise",    "grid_size",       "tabular_n",
                    "tabular_train_fraction",            "knn_k",
                    "lof_k",          "ae_denoising_sigma",
                    "data_kind",      "data_csv",        "model_path",
                    "trace_path",     "threads"},
                   "top level");

    RunConfig c;
    get_if(j, "experiment", c.experiment);
    get_if(j, "output_dir", c.output_dir);
    get_if(j, "seed", c.seed);
    get_if(j, "seeds", c.seeds);
    get_if(j, "digits", c.digits);
    get_if(j, "gammas", c.gammas);
    get_if(j, "methods", c.methods);
    if (j.contains("mnist")) parse_mnist(j.at("mnist"), c.mnist);
    get_if(j, "digits_cache_dir", c.digits_cache_dir);
    get_if(j, "digits_train_per_class", c.digits_train_per_class);
    get_if(j, "digits_test_per_class", c.digits_test_per_class);
    if (j.contains("train")) parse_train(j.at("train"), c.train, c.train_iterations_set);
    if (j.contains("corruption")) {
        parse_corruption(j.at("corruption"), c.corruption);
        c.corruption_set = true;
    }
    get_if(j, "moons_n", c.moons_n);
    get_if(j, "moons_noise", c.moons_noise);
    get_if(j, "grid_size", c.grid_size);
    get_if(j, "tabular_n", c.tabular_n);
    get_if(j, "tabular_train_fraction", c.tabular_train_fraction);
    get_if(j, "knn_k", c.knn_k);
    get_if(j, "lof_k", c.lof_k);
    get_if(j, "ae_denoising_sigma", c.ae_denoising_sigma);
    get_if(j, "data_kind", c.data_kind);
    get_if(j, "data_csv", c.data_csv);
    get_if(j, "model_path", c.model_path);
    get_if(j, "trace_path", c.trace_path);
    get_if(j, "threads", c.threads);

    if (!j.contains("seeds") && j.contains("seed")) c.seeds = {c.seed};
    c.train.seed = j.contains("train") && j.at("train").contains("seed") ? c.train.seed : c.seed;

    c.validate();
    return c;
}

RunConfig parse_config_file(const std::string& path, const FlagOverrides& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text, overrides);
}

} // namespace lipad
