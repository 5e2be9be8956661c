#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lipad/graph.hpp"
#include "lipad/tensor.hpp"

namespace lipad {

/// Feed-forward net: input -> hidden... (leaky-relu) -> output (linear).
struct DenseNetSpec {
    long input_dim = 0;
    std::vector<long> hidden_dims;
    long output_dim = 1;
    double activation_slope = 0.2;
    bool use_bias = true;

    void validate() const;
    long param_count() const;
    /// Layer widths including input and output: {in, h..., out}.
    std::vector<long> layer_dims() const;
};

/// Mirrored autoencoder: input -> encoder... -> bottleneck -> decoder... -> input.
/// Hidden layers use leaky-relu; the bottleneck and the final output are linear.
struct AutoencoderSpec {
    long input_dim = 0;
    std::vector<long> encoder_dims;
    long bottleneck_dim = 0;
    std::vector<long> decoder_dims; // empty = mirror of encoder_dims
    double activation_slope = 0.2;

    void validate() const;
    long param_count() const;
    std::vector<long> layer_dims() const; // {in, enc..., bottleneck, dec..., in}
    std::vector<long> effective_decoder_dims() const;
};

enum class ModelKind { Critic, Autoencoder };

using ModelSpec = std::variant<DenseNetSpec, AutoencoderSpec>;

/// Named trainable tensors in declaration order (weight_0, bias_0, ...).
struct ParamSet {
    ModelKind kind = ModelKind::Critic;
    ModelSpec spec;
    std::vector<std::pair<std::string, Tensor>> entries;
    std::uint64_t init_seed = 0;

    long scalar_count() const;
    Tensor& find(const std::string& name);
    const Tensor& find(const std::string& name) const;
    const DenseNetSpec& dense_spec() const { return std::get<DenseNetSpec>(spec); }
    const AutoencoderSpec& ae_spec() const { return std::get<AutoencoderSpec>(spec); }
};

/// Weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero; deterministic in seed.
ParamSet build_critic(const DenseNetSpec& spec, std::uint64_t seed);
ParamSet build_autoencoder(const AutoencoderSpec& spec, std::uint64_t seed);

/// Per-row potential f(x); pure function of (params, batch).
Tensor critic_forward(const ParamSet& params, const Tensor& batch);

/// Full reconstruction for an autoencoder ParamSet.
Tensor autoencoder_forward(const ParamSet& params, const Tensor& batch);

/// Builds the MLP into `g`, declaring leaves named after the ParamSet entries,
/// and returns the output node. Call bind_params() before forward().
ad::NodeId build_mlp_graph(ad::Graph& g, const ParamSet& params, ad::NodeId x);

void bind_params(ad::Graph& g, const ParamSet& params);

/// Flat binary model file: magic "LIPADNET", u64 LE json length, spec json,
/// raw little-endian f64 parameters in declaration order.
void save_model(const ParamSet& params, const std::string& path);
ParamSet load_model(const std::string& path);

} // namespace lipad
