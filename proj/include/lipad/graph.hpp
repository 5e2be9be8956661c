#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "lipad/tensor.hpp"

namespace lipad::ad {

using NodeId = int;

enum class Op : std::uint8_t {
    Input,
    Param,
    Const,
    MatMul,      // a(ta) * b(tb)
    Add,         // elementwise, or row-broadcast when b is 1xK
    Sub,         // elementwise
    SubScalar,   // a - s
    Scale,       // a * s
    Mul,         // elementwise a .* b; b may be Nx1 (broadcast across columns)
    LeakyRelu,   // max(x, slope*x)
    LreluMask,   // d/dx leaky_relu at a's value; gradient-stopped
    RowNorm,     // NxD -> Nx1 euclidean norm per row
    Square,      // elementwise
    Sum,         // -> 1x1
    Mean,        // -> 1x1 over all entries
    Interpolate, // row i: t[i]*a_i + (1-t[i])*b_i, t fixed per row
};

const char* op_name(Op op);

struct Node {
    Op op;
    NodeId a = -1;
    NodeId b = -1;
    double scalar = 0.0; // SubScalar / Scale
    double slope = 0.0;  // LeakyRelu / LreluMask
    bool trans_a = false;
    bool trans_b = false;
    std::vector<double> coeffs; // Interpolate per-row t
    long rows = 0;
    long cols = 0;
    std::string name; // leaves only
    Tensor value;
    Tensor adjoint;
};

using GradMap = std::map<std::string, Tensor>;

/// Static computation graph over named leaves. Node ids are topological by
/// construction. Shapes are fixed at build time; leaves are rebindable and
/// forward() re-evaluates the whole graph.
class Graph {
  public:
    NodeId input(std::string name, long rows, long cols);
    NodeId param(std::string name, long rows, long cols);
    NodeId constant(Tensor v);

    NodeId matmul(NodeId a, NodeId b, bool trans_a = false, bool trans_b = false);
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId sub_scalar(NodeId a, double s);
    NodeId scale(NodeId a, double s);
    NodeId mul(NodeId a, NodeId b);
    NodeId leaky_relu(NodeId a, double slope);
    NodeId lrelu_mask(NodeId a, double slope);
    NodeId row_norm(NodeId a);
    NodeId square(NodeId a);
    NodeId sum(NodeId a);
    NodeId mean(NodeId a);
    NodeId interpolate(NodeId a, NodeId b, std::vector<double> t);

    void bind(const std::string& leaf, Tensor v);
    bool has_leaf(const std::string& leaf) const { return leaves_.count(leaf) > 0; }
    NodeId leaf_id(const std::string& leaf) const;

    /// Rebinds the constant of a Scale or SubScalar node (e.g. a penalty
    /// coefficient schedule).
    void set_scalar(NodeId id, double s);

    /// Evaluates every node and returns the value of `output`.
    const Tensor& forward(NodeId output);

    /// Reverse pass from a scalar output; forward() must have run.
    /// Returns gradients for every Input and Param leaf. Values are untouched.
    GradMap backward(NodeId output);

    /// Appends nodes computing the per-row gradient of `output` w.r.t. leaf
    /// `wrt` (output must be one scalar per row of wrt, e.g. an MLP head).
    /// Activation derivative masks are captured as gradient-stopped nodes, so
    /// a numeric backward() through the result treats them as locally constant.
    NodeId input_gradient(NodeId output, NodeId wrt);

    /// row_norm(input_gradient): the Nx1 per-row gradient norm as a graph
    /// node, differentiable w.r.t. parameters for penalty terms.
    NodeId input_grad_norm(NodeId output, NodeId wrt);

    const Tensor& value(NodeId id) const;
    const Node& node(NodeId id) const { return nodes_[id]; }
    long num_nodes() const { return static_cast<long>(nodes_.size()); }

  private:
    NodeId push(Node n);
    void eval(NodeId id);
    std::string describe(NodeId id) const;
    void check_id(NodeId id) const;

    std::vector<Node> nodes_;
    std::unordered_map<std::string, NodeId> leaves_;
    bool forward_done_ = false;
};

} // namespace lipad::ad
