#include "lipad/models.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>

#include "lipad/rng.hpp"

namespace lipad {

using json = nlohmann::json;

void DenseNetSpec::validate() const {
    if (input_dim <= 0) throw ContractError("DenseNetSpec: input_dim must be positive");
    if (output_dim <= 0) throw ContractError("DenseNetSpec: output_dim must be positive");
    for (long h : hidden_dims)
        if (h <= 0) throw ContractError("DenseNetSpec: hidden dims must be positive");
    if (activation_slope <= 0.0 || activation_slope >= 1.0)
        throw ContractError("DenseNetSpec: activation_slope must be in (0,1)");
}

std::vector<long> DenseNetSpec::layer_dims() const {
    std::vector<long> dims;
    dims.push_back(input_dim);
    dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
    dims.push_back(output_dim);
    return dims;
}

namespace {
long count_chain(const std::vector<long>& dims, bool use_bias) {
    long total = 0;
    for (size_t i = 0; i + 1 < dims.size(); ++i) total += dims[i] * dims[i + 1] + (use_bias ? dims[i + 1] : 0);
    return total;
}
} // namespace

long DenseNetSpec::param_count() const { return count_chain(layer_dims(), use_bias); }

void AutoencoderSpec::validate() const {
    if (input_dim <= 0) throw ContractError("AutoencoderSpec: input_dim must be positive");
    if (bottleneck_dim <= 0) throw ContractError("AutoencoderSpec: bottleneck_dim must be positive");
    // bottleneck == input occurs in the reference dense AE on 10-d data, so
    // equality is allowed; larger-than-input is rejected.
    if (bottleneck_dim > input_dim) throw ContractError("AutoencoderSpec: bottleneck_dim must not exceed input_dim");
    for (long h : encoder_dims)
        if (h <= 0) throw ContractError("AutoencoderSpec: encoder dims must be positive");
    for (long h : decoder_dims)
        if (h <= 0) throw ContractError("AutoencoderSpec: decoder dims must be positive");
    if (activation_slope <= 0.0 || activation_slope > 1.0)
        throw ContractError("AutoencoderSpec: activation_slope must be in (0,1]");
}

std::vector<long> AutoencoderSpec::effective_decoder_dims() const {
    if (!decoder_dims.empty()) return decoder_dims;
    std::vector<long> mirrored(encoder_dims.rbegin(), encoder_dims.rend());
    return mirrored;
}

std::vector<long> AutoencoderSpec::layer_dims() const {
    std::vector<long> dims;
    dims.push_back(input_dim);
    dims.insert(dims.end(), encoder_dims.begin(), encoder_dims.end());
    dims.push_back(bottleneck_dim);
    const auto dec = effective_decoder_dims();
    dims.insert(dims.end(), dec.begin(), dec.end());
    dims.push_back(input_dim);
    return dims;
}

long AutoencoderSpec::param_count() const { return count_chain(layer_dims(), true); }

long ParamSet::scalar_count() const {
    long total = 0;
    for (const auto& [name, t] : entries) total += t.size();
    return total;
}

Tensor& ParamSet::find(const std::string& name) {
    for (auto& [n, t] : entries)
        if (n == name) return t;
    throw ContractError("ParamSet: no entry '" + name + "'");
}

const Tensor& ParamSet::find(const std::string& name) const {
    for (const auto& [n, t] : entries)
        if (n == name) return t;
    throw ContractError("ParamSet: no entry '" + name + "'");
}

namespace {

void init_chain(ParamSet& ps, const std::vector<long>& dims, bool use_bias, std::uint64_t seed) {
    Rng rng = Rng(seed).child("init");
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        const long fan_in = dims[i];
        const long fan_out = dims[i + 1];
        Tensor w(fan_in, fan_out);
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (long j = 0; j < w.size(); ++j) w[j] = rng.uniform(-bound, bound);
        ps.entries.emplace_back("weight_" + std::to_string(i), std::move(w));
        if (use_bias) ps.entries.emplace_back("bias_" + std::to_string(i), Tensor(1, fan_out));
    }
}

struct ChainLayout {
    std::vector<long> dims;
    bool use_bias;
    double slope;
    size_t n_layers() const { return dims.size() - 1; }
};

ChainLayout layout_of(const ParamSet& ps) {
    if (ps.kind == ModelKind::Critic) {
        const auto& s = ps.dense_spec();
        return {s.layer_dims(), s.use_bias, s.activation_slope};
    }
    const auto& s = ps.ae_spec();
    return {s.layer_dims(), true, s.activation_slope};
}

// hidden layers activated; for autoencoders the bottleneck is linear too
bool layer_activated(const ParamSet& ps, const ChainLayout& lay, size_t layer) {
    if (layer + 1 == lay.n_layers()) return false;
    if (ps.kind == ModelKind::Autoencoder) {
        const size_t bottleneck_layer = ps.ae_spec().encoder_dims.size(); // output of this layer is the bottleneck
        if (layer == bottleneck_layer) return false;
    }
    return true;
}

Tensor chain_forward(const ParamSet& ps, const Tensor& batch) {
    const ChainLayout lay = layout_of(ps);
    if (batch.cols() != lay.dims.front())
        throw DimensionError("forward: batch width " + std::to_string(batch.cols()) + " != input dim " +
                             std::to_string(lay.dims.front()));
    Tensor h = batch;
    for (size_t i = 0; i < lay.n_layers(); ++i) {
        Tensor z = matmul(h, ps.find("weight_" + std::to_string(i)));
        if (lay.use_bias) {
            const Tensor& b = ps.find("bias_" + std::to_string(i));
            for (long r = 0; r < z.rows(); ++r)
                for (long c = 0; c < z.cols(); ++c) z.at(r, c) += b[c];
        }
        if (layer_activated(ps, lay, i)) {
            for (long j = 0; j < z.size(); ++j)
                if (z[j] < 0.0) z[j] *= lay.slope;
        }
        h = std::move(z);
    }
    check_finite(h, "model forward");
    return h;
}

} // namespace

ParamSet build_critic(const DenseNetSpec& spec, std::uint64_t seed) {
    spec.validate();
    ParamSet ps;
    ps.kind = ModelKind::Critic;
    ps.spec = spec;
    ps.init_seed = seed;
    init_chain(ps, spec.layer_dims(), spec.use_bias, seed);
    return ps;
}

ParamSet build_autoencoder(const AutoencoderSpec& spec, std::uint64_t seed) {
    spec.validate();
    ParamSet ps;
    ps.kind = ModelKind::Autoencoder;
    ps.spec = spec;
    ps.init_seed = seed;
    init_chain(ps, spec.layer_dims(), true, seed);
    return ps;
}

Tensor critic_forward(const ParamSet& params, const Tensor& batch) {
    if (params.kind != ModelKind::Critic) throw ContractError("critic_forward: not a critic ParamSet");
    return chain_forward(params, batch);
}

Tensor autoencoder_forward(const ParamSet& params, const Tensor& batch) {
    if (params.kind != ModelKind::Autoencoder) throw ContractError("autoencoder_forward: not an autoencoder ParamSet");
    return chain_forward(params, batch);
}

ad::NodeId build_mlp_graph(ad::Graph& g, const ParamSet& params, ad::NodeId x) {
    const ChainLayout lay = layout_of(params);
    ad::NodeId h = x;
    for (size_t i = 0; i < lay.n_layers(); ++i) {
        const std::string wname = "weight_" + std::to_string(i);
        ad::NodeId w = g.has_leaf(wname) ? g.leaf_id(wname) : g.param(wname, lay.dims[i], lay.dims[i + 1]);
        ad::NodeId z = g.matmul(h, w);
        if (lay.use_bias) {
            const std::string bname = "bias_" + std::to_string(i);
            ad::NodeId b = g.has_leaf(bname) ? g.leaf_id(bname) : g.param(bname, 1, lay.dims[i + 1]);
            z = g.add(z, b);
        }
        if (layer_activated(params, lay, i)) z = g.leaky_relu(z, lay.slope);
        h = z;
    }
    return h;
}

void bind_params(ad::Graph& g, const ParamSet& params) {
    for (const auto& [name, t] : params.entries) g.bind(name, t);
}

namespace {

json spec_to_json(const ParamSet& ps) {
    json j;
    if (ps.kind == ModelKind::Critic) {
        const auto& s = ps.dense_spec();
        j["kind"] = "critic";
        j["input_dim"] = s.input_dim;
        j["hidden_dims"] = s.hidden_dims;
        j["output_dim"] = s.output_dim;
        j["activation_slope"] = s.activation_slope;
        j["use_bias"] = s.use_bias;
    } else {
        const auto& s = ps.ae_spec();
        j["kind"] = "autoencoder";
        j["input_dim"] = s.input_dim;
        j["encoder_dims"] = s.encoder_dims;
        j["bottleneck_dim"] = s.bottleneck_dim;
        j["decoder_dims"] = s.decoder_dims;
        j["activation_slope"] = s.activation_slope;
    }
    j["init_seed"] = ps.init_seed;
    return j;
}

ParamSet spec_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    ParamSet ps;
    ps.init_seed = j.at("init_seed").get<std::uint64_t>();
    if (kind == "critic") {
        DenseNetSpec s;
        s.input_dim = j.at("input_dim").get<long>();
        s.hidden_dims = j.at("hidden_dims").get<std::vector<long>>();
        s.output_dim = j.at("output_dim").get<long>();
        s.activation_slope = j.at("activation_slope").get<double>();
        s.use_bias = j.at("use_bias").get<bool>();
        ps = build_critic(s, ps.init_seed);
    } else if (kind == "autoencoder") {
        AutoencoderSpec s;
        s.input_dim = j.at("input_dim").get<long>();
        s.encoder_dims = j.at("encoder_dims").get<std::vector<long>>();
        s.bottleneck_dim = j.at("bottleneck_dim").get<long>();
        s.decoder_dims = j.at("decoder_dims").get<std::vector<long>>();
        s.activation_slope = j.at("activation_slope").get<double>();
        ps = build_autoencoder(s, ps.init_seed);
    } else {
        throw IoError("model file: unknown kind '" + kind + "'");
    }
    return ps;
}

constexpr char kMagic[8] = {'L', 'I', 'P', 'A', 'D', 'N', 'E', 'T'};

} // namespace

void save_model(const ParamSet& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("save_model: cannot open '" + path + "'");
    out.write(kMagic, 8);
    const std::string spec = spec_to_json(params).dump();
    const std::uint64_t len = spec.size();
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(spec.data(), static_cast<std::streamsize>(spec.size()));
    for (const auto& [name, t] : params.entries)
        out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * 8));
    if (!out) throw IoError("save_model: write failed for '" + path + "'");
}

ParamSet load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("load_model: cannot open '" + path + "'");
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) throw IoError("load_model: bad magic in '" + path + "'");
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 8);
    if (!in || len > (1u << 20)) throw IoError("load_model: bad header in '" + path + "'");
    std::string spec(len, '\0');
    in.read(spec.data(), static_cast<std::streamsize>(len));
    if (!in) throw IoError("load_model: truncated header in '" + path + "'");
    json j;
    try {
        j = json::parse(spec);
    } catch (const json::exception& e) {
        throw IoError(std::string("load_model: bad spec json: ") + e.what());
    }
    ParamSet ps = spec_from_json(j);
    for (auto& [name, t] : ps.entries) {
        in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * 8));
        if (!in) throw IoError("load_model: truncated parameter data in '" + path + "'");
    }
    char extra;
    if (in.read(&extra, 1)) throw IoError("load_model: trailing bytes in '" + path + "'");
    return ps;
}

} // namespace lipad
