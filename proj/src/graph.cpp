#include "lipad/graph.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>

namespace lipad::ad {

namespace {
using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

ECMap cmap(const Tensor& t) { return ECMap(t.data(), t.rows(), t.cols()); }
EMap map(Tensor& t) { return EMap(t.data(), t.rows(), t.cols()); }
} // namespace

const char* op_name(Op op) {
    switch (op) {
    case Op::Input: return "input";
    case Op::Param: return "param";
    case Op::Const: return "const";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "subtract";
    case Op::SubScalar: return "subtract-scalar";
    case Op::Scale: return "scale";
    case Op::Mul: return "multiply";
    case Op::LeakyRelu: return "leaky-relu";
    case Op::LreluMask: return "leaky-relu-mask";
    case Op::RowNorm: return "norm";
    case Op::Square: return "square";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::Interpolate: return "interpolate";
    }
    return "?";
}

std::string Graph::describe(NodeId id) const {
    const Node& n = nodes_[id];
    std::string s = "node#" + std::to_string(id) + ":" + op_name(n.op);
    if (!n.name.empty()) s += "(" + n.name + ")";
    return s;
}

void Graph::check_id(NodeId id) const {
    if (id < 0 || id >= static_cast<NodeId>(nodes_.size())) throw ContractError("graph: invalid node id");
}

NodeId Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    forward_done_ = false;
    return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::input(std::string name, long rows, long cols) {
    if (leaves_.count(name)) throw ContractError("graph: duplicate leaf '" + name + "'");
    Node n;
    n.op = Op::Input;
    n.rows = rows;
    n.cols = cols;
    n.name = name;
    const NodeId id = push(std::move(n));
    leaves_[nodes_[id].name] = id;
    return id;
}

NodeId Graph::param(std::string name, long rows, long cols) {
    const NodeId id = input(std::move(name), rows, cols);
    nodes_[id].op = Op::Param;
    return id;
}

NodeId Graph::constant(Tensor v) {
    Node n;
    n.op = Op::Const;
    n.rows = v.rows();
    n.cols = v.cols();
    n.value = std::move(v);
    return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b, bool trans_a, bool trans_b) {
    check_id(a);
    check_id(b);
    const Node& na = nodes_[a];
    const Node& nb = nodes_[b];
    const long ar = trans_a ? na.cols : na.rows;
    const long ac = trans_a ? na.rows : na.cols;
    const long br = trans_b ? nb.cols : nb.rows;
    const long bc = trans_b ? nb.rows : nb.cols;
    if (ac != br)
        throw DimensionError("matmul of " + describe(a) + " and " + describe(b) + ": inner dimensions disagree");
    Node n;
    n.op = Op::MatMul;
    n.a = a;
    n.b = b;
    n.trans_a = trans_a;
    n.trans_b = trans_b;
    n.rows = ar;
    n.cols = bc;
    return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
    check_id(a);
    check_id(b);
    const Node& na = nodes_[a];
    const Node& nb = nodes_[b];
    const bool broadcast = nb.rows == 1 && na.cols == nb.cols && na.rows != 1;
    if (!broadcast && (na.rows != nb.rows || na.cols != nb.cols))
        throw DimensionError("add of " + describe(a) + " and " + describe(b) + ": shape mismatch");
    Node n;
    n.op = Op::Add;
    n.a = a;
    n.b = b;
    n.rows = na.rows;
    n.cols = na.cols;
    return push(std::move(n));
}

NodeId Graph::sub(NodeId a, NodeId b) {
    check_id(a);
    check_id(b);
    const Node& na = nodes_[a];
    const Node& nb = nodes_[b];
    if (na.rows != nb.rows || na.cols != nb.cols)
        throw DimensionError("subtract of " + describe(a) + " and " + describe(b) + ": shape mismatch");
    Node n;
    n.op = Op::Sub;
    n.a = a;
    n.b = b;
    n.rows = na.rows;
    n.cols = na.cols;
    return push(std::move(n));
}

NodeId Graph::sub_scalar(NodeId a, double s) {
    check_id(a);
    Node n;
    n.op = Op::SubScalar;
    n.a = a;
    n.scalar = s;
    n.rows = nodes_[a].rows;
    n.cols = nodes_[a].cols;
    return push(std::move(n));
}

NodeId Graph::scale(NodeId a, double s) {
    check_id(a);
    Node n;
    n.op = Op::Scale;
    n.a = a;
    n.scalar = s;
    n.rows = nodes_[a].rows;
    n.cols = nodes_[a].cols;
    return push(std::move(n));
}

NodeId Graph::mul(NodeId a, NodeId b) {
    check_id(a);
    check_id(b);
    const Node& na = nodes_[a];
    const Node& nb = nodes_[b];
    const bool col_broadcast = nb.cols == 1 && na.rows == nb.rows && na.cols != 1;
    if (!col_broadcast && (na.rows != nb.rows || na.cols != nb.cols))
        throw DimensionError("multiply of " + describe(a) + " and " + describe(b) + ": shape mismatch");
    Node n;
    n.op = Op::Mul;
    n.a = a;
    n.b = b;
    n.rows = na.rows;
    n.cols = na.cols;
    return push(std::move(n));
}

NodeId Graph::leaky_relu(NodeId a, double slope) {
    check_id(a);
    Node n;
    n.op = Op::LeakyRelu;
    n.a = a;
    n.slope = slope;
    n.rows = nodes_[a].rows;
    n.cols = nodes_[a].cols;
    return push(std::move(n));
}

NodeId Graph::lrelu_mask(NodeId a, double slope) {
    check_id(a);
    Node n;
    n.op = Op::LreluMask;
    n.a = a;
    n.slope = slope;
    n.rows = nodes_[a].rows;
    n.cols = nodes_[a].cols;
    return push(std::move(n));
}

NodeId Graph::row_norm(NodeId a) {
    check_id(a);
    Node n;
    n.op = Op::RowNorm;
    n.a = a;
    n.rows = nodes_[a].rows;
    n.cols = 1;
    return push(std::move(n));
}

NodeId Graph::square(NodeId a) {
    check_id(a);
    Node n;
    n.op = Op::Square;
    n.a = a;
    n.rows = nodes_[a].rows;
    n.cols = nodes_[a].cols;
    return push(std::move(n));
}

NodeId Graph::sum(NodeId a) {
    check_id(a);
    Node n;
    n.op = Op::Sum;
    n.a = a;
    n.rows = 1;
    n.cols = 1;
    return push(std::move(n));
}

NodeId Graph::mean(NodeId a) {
    check_id(a);
    Node n;
    n.op = Op::Mean;
    n.a = a;
    n.rows = 1;
    n.cols = 1;
    return push(std::move(n));
}

NodeId Graph::interpolate(NodeId a, NodeId b, std::vector<double> t) {
    check_id(a);
    check_id(b);
    const Node& na = nodes_[a];
    const Node& nb = nodes_[b];
    if (na.rows != nb.rows || na.cols != nb.cols)
        throw DimensionError("interpolate of " + describe(a) + " and " + describe(b) + ": shape mismatch");
    if (static_cast<long>(t.size()) != na.rows)
        throw DimensionError("interpolate: coefficient count " + std::to_string(t.size()) + " != rows " +
                             std::to_string(na.rows));
    Node n;
    n.op = Op::Interpolate;
    n.a = a;
    n.b = b;
    n.coeffs = std::move(t);
    n.rows = na.rows;
    n.cols = na.cols;
    return push(std::move(n));
}

void Graph::bind(const std::string& leaf, Tensor v) {
    auto it = leaves_.find(leaf);
    if (it == leaves_.end()) throw ContractError("graph: no leaf named '" + leaf + "'");
    Node& n = nodes_[it->second];
    if (v.rows() != n.rows || v.cols() != n.cols)
        throw DimensionError("bind '" + leaf + "': expected " + std::to_string(n.rows) + "x" +
                             std::to_string(n.cols) + ", got " + v.shape_str());
    n.value = std::move(v);
    forward_done_ = false;
}

NodeId Graph::leaf_id(const std::string& leaf) const {
    auto it = leaves_.find(leaf);
    if (it == leaves_.end()) throw ContractError("graph: no leaf named '" + leaf + "'");
    return it->second;
}

void Graph::set_scalar(NodeId id, double s) {
    check_id(id);
    Node& n = nodes_[id];
    if (n.op != Op::Scale && n.op != Op::SubScalar)
        throw ContractError("set_scalar: " + describe(id) + " has no scalar constant");
    n.scalar = s;
    forward_done_ = false;
}

void Graph::eval(NodeId id) {
    Node& n = nodes_[id];
    switch (n.op) {
    case Op::Input:
    case Op::Param:
        if (n.value.rows() != n.rows || n.value.cols() != n.cols)
            throw ContractError("forward: leaf '" + n.name + "' is not bound");
        return; // bound values are trusted as-is; finiteness checked below
    case Op::Const:
        return;
    case Op::MatMul:
        n.value = lipad::matmul(nodes_[n.a].value, nodes_[n.b].value, n.trans_a, n.trans_b);
        break;
    case Op::Add: {
        const Tensor& a = nodes_[n.a].value;
        const Tensor& b = nodes_[n.b].value;
        n.value = a;
        if (b.rows() == 1 && a.rows() != 1) {
            map(n.value).rowwise() += cmap(b).row(0);
        } else {
            map(n.value) += cmap(b);
        }
        break;
    }
    case Op::Sub: {
        n.value = nodes_[n.a].value;
        map(n.value) -= cmap(nodes_[n.b].value);
        break;
    }
    case Op::SubScalar: {
        n.value = nodes_[n.a].value;
        map(n.value).array() -= n.scalar;
        break;
    }
    case Op::Scale: {
        n.value = nodes_[n.a].value;
        map(n.value) *= n.scalar;
        break;
    }
    case Op::Mul: {
        const Tensor& a = nodes_[n.a].value;
        const Tensor& b = nodes_[n.b].value;
        n.value = a;
        if (b.cols() == 1 && a.cols() != 1) {
            map(n.value).array().colwise() *= cmap(b).col(0).array();
        } else {
            map(n.value).array() *= cmap(b).array();
        }
        break;
    }
    case Op::LeakyRelu: {
        const Tensor& a = nodes_[n.a].value;
        n.value = Tensor(n.rows, n.cols);
        const double s = n.slope;
        for (long i = 0; i < a.size(); ++i) n.value[i] = a[i] >= 0.0 ? a[i] : s * a[i];
        break;
    }
    case Op::LreluMask: {
        const Tensor& a = nodes_[n.a].value;
        n.value = Tensor(n.rows, n.cols);
        const double s = n.slope;
        for (long i = 0; i < a.size(); ++i) n.value[i] = a[i] >= 0.0 ? 1.0 : s;
        break;
    }
    case Op::RowNorm: {
        const Tensor& a = nodes_[n.a].value;
        n.value = Tensor(n.rows, 1);
        for (long r = 0; r < a.rows(); ++r) {
            double acc = 0.0;
            for (long c = 0; c < a.cols(); ++c) acc += a.at(r, c) * a.at(r, c);
            n.value[r] = std::sqrt(acc);
        }
        break;
    }
    case Op::Square: {
        const Tensor& a = nodes_[n.a].value;
        n.value = Tensor(n.rows, n.cols);
        for (long i = 0; i < a.size(); ++i) n.value[i] = a[i] * a[i];
        break;
    }
    case Op::Sum:
    case Op::Mean: {
        const Tensor& a = nodes_[n.a].value;
        double acc = 0.0;
        for (double v : a.flat()) acc += v;
        if (n.op == Op::Mean && a.size() > 0) acc /= static_cast<double>(a.size());
        n.value = Tensor::scalar(acc);
        break;
    }
    case Op::Interpolate: {
        const Tensor& a = nodes_[n.a].value;
        const Tensor& b = nodes_[n.b].value;
        n.value = Tensor(n.rows, n.cols);
        for (long r = 0; r < n.rows; ++r) {
            const double t = n.coeffs[r];
            for (long c = 0; c < n.cols; ++c) n.value.at(r, c) = t * a.at(r, c) + (1.0 - t) * b.at(r, c);
        }
        break;
    }
    }
    if (!n.value.all_finite()) throw NumericError("forward: non-finite result at " + describe(id));
}

const Tensor& Graph::forward(NodeId output) {
    check_id(output);
    for (NodeId id = 0; id < static_cast<NodeId>(nodes_.size()); ++id) eval(id);
    forward_done_ = true;
    return nodes_[output].value;
}

GradMap Graph::backward(NodeId output) {
    check_id(output);
    if (!forward_done_) throw ContractError("backward: run forward first");
    const Node& out = nodes_[output];
    if (out.rows * out.cols != 1) throw ContractError("backward: output " + describe(output) + " is not scalar");

    for (Node& n : nodes_) n.adjoint = Tensor(n.rows, n.cols);
    nodes_[output].adjoint[0] = 1.0;

    for (NodeId id = static_cast<NodeId>(nodes_.size()) - 1; id >= 0; --id) {
        Node& n = nodes_[id];
        const Tensor& g = n.adjoint;
        switch (n.op) {
        case Op::Input:
        case Op::Param:
        case Op::Const:
            break;
        case Op::MatMul: {
            Node& na = nodes_[n.a];
            Node& nb = nodes_[n.b];
            // d(A op B)/dA and /dB for each transpose combination
            if (!n.trans_a && !n.trans_b) {
                map(na.adjoint).noalias() += cmap(g) * cmap(nb.value).transpose();
                map(nb.adjoint).noalias() += cmap(na.value).transpose() * cmap(g);
            } else if (!n.trans_a && n.trans_b) {
                map(na.adjoint).noalias() += cmap(g) * cmap(nb.value);
                map(nb.adjoint).noalias() += cmap(g).transpose() * cmap(na.value);
            } else if (n.trans_a && !n.trans_b) {
                map(na.adjoint).noalias() += cmap(nb.value) * cmap(g).transpose();
                map(nb.adjoint).noalias() += cmap(na.value) * cmap(g);
            } else {
                map(na.adjoint).noalias() += cmap(nb.value).transpose() * cmap(g).transpose();
                map(nb.adjoint).noalias() += cmap(g).transpose() * cmap(na.value).transpose();
            }
            break;
        }
        case Op::Add: {
            Node& na = nodes_[n.a];
            Node& nb = nodes_[n.b];
            map(na.adjoint) += cmap(g);
            if (nb.rows == 1 && n.rows != 1)
                map(nb.adjoint).row(0) += cmap(g).colwise().sum();
            else
                map(nb.adjoint) += cmap(g);
            break;
        }
        case Op::Sub:
            map(nodes_[n.a].adjoint) += cmap(g);
            map(nodes_[n.b].adjoint) -= cmap(g);
            break;
        case Op::SubScalar:
            map(nodes_[n.a].adjoint) += cmap(g);
            break;
        case Op::Scale:
            map(nodes_[n.a].adjoint) += n.scalar * cmap(g);
            break;
        case Op::Mul: {
            Node& na = nodes_[n.a];
            Node& nb = nodes_[n.b];
            if (nb.cols == 1 && n.cols != 1) {
                map(na.adjoint).array() += cmap(g).array().colwise() * cmap(nb.value).col(0).array();
                map(nb.adjoint).col(0) += (cmap(g).array() * cmap(na.value).array()).rowwise().sum().matrix();
            } else {
                map(na.adjoint).array() += cmap(g).array() * cmap(nb.value).array();
                map(nb.adjoint).array() += cmap(g).array() * cmap(na.value).array();
            }
            break;
        }
        case Op::LeakyRelu: {
            Node& na = nodes_[n.a];
            const double s = n.slope;
            for (long i = 0; i < g.size(); ++i) na.adjoint[i] += (na.value[i] >= 0.0 ? 1.0 : s) * g[i];
            break;
        }
        case Op::LreluMask:
            break; // gradient-stopped by construction
        case Op::RowNorm: {
            Node& na = nodes_[n.a];
            for (long r = 0; r < na.rows; ++r) {
                const double nv = n.value[r];
                if (nv == 0.0) continue; // subgradient 0 at the origin
                const double gr = g[r] / nv;
                for (long c = 0; c < na.cols; ++c) na.adjoint.at(r, c) += gr * na.value.at(r, c);
            }
            break;
        }
        case Op::Square: {
            Node& na = nodes_[n.a];
            for (long i = 0; i < g.size(); ++i) na.adjoint[i] += 2.0 * na.value[i] * g[i];
            break;
        }
        case Op::Sum: {
            Node& na = nodes_[n.a];
            const double gv = g[0];
            for (long i = 0; i < na.adjoint.size(); ++i) na.adjoint[i] += gv;
            break;
        }
        case Op::Mean: {
            Node& na = nodes_[n.a];
            const double gv = g[0] / static_cast<double>(na.rows * na.cols);
            for (long i = 0; i < na.adjoint.size(); ++i) na.adjoint[i] += gv;
            break;
        }
        case Op::Interpolate: {
            Node& na = nodes_[n.a];
            Node& nb = nodes_[n.b];
            for (long r = 0; r < n.rows; ++r) {
                const double t = n.coeffs[r];
                for (long c = 0; c < n.cols; ++c) {
                    na.adjoint.at(r, c) += t * g.at(r, c);
                    nb.adjoint.at(r, c) += (1.0 - t) * g.at(r, c);
                }
            }
            break;
        }
        }
    }

    GradMap grads;
    for (const Node& n : nodes_)
        if (n.op == Op::Input || n.op == Op::Param) grads[n.name] = n.adjoint;
    return grads;
}

NodeId Graph::input_gradient(NodeId output, NodeId wrt) {
    check_id(output);
    check_id(wrt);
    const Node& out = nodes_[output];
    if (out.cols != 1) throw ContractError("input_gradient: output must be one scalar per row");

    // which nodes can reach `wrt` through their inputs
    const NodeId n_orig = static_cast<NodeId>(nodes_.size());
    std::vector<char> reaches(n_orig, 0);
    reaches[wrt] = 1;
    for (NodeId id = 0; id < n_orig; ++id) {
        const Node& n = nodes_[id];
        if ((n.a >= 0 && reaches[n.a]) || (n.b >= 0 && reaches[n.b])) reaches[id] = 1;
    }
    if (!reaches[output]) {
        // output does not depend on wrt; gradient is identically zero
        return constant(Tensor(nodes_[wrt].rows, nodes_[wrt].cols));
    }

    std::vector<NodeId> adj(n_orig, -1);
    adj[output] = constant(Tensor::full(out.rows, 1, 1.0));

    auto accumulate = [&](NodeId target, NodeId contribution) {
        if (adj[target] < 0)
            adj[target] = contribution;
        else
            adj[target] = add(adj[target], contribution);
    };

    for (NodeId id = output; id >= 0; --id) {
        if (id >= n_orig || adj[id] < 0) continue;
        const Node n = nodes_[id]; // copy: push() may reallocate nodes_
        const NodeId g = adj[id];
        switch (n.op) {
        case Op::Input:
        case Op::Param:
        case Op::Const:
            break;
        case Op::MatMul: {
            if (n.trans_a) throw ContractError("input_gradient: matmul with transposed data side is unsupported");
            if (n.a >= 0 && reaches[n.a]) accumulate(n.a, matmul(g, n.b, false, !n.trans_b));
            if (n.b >= 0 && reaches[n.b])
                throw ContractError("input_gradient: path through matmul weight side is unsupported");
            break;
        }
        case Op::Add: {
            if (reaches[n.a]) accumulate(n.a, g);
            if (reaches[n.b]) {
                if (nodes_[n.b].rows == 1 && n.rows != 1)
                    throw ContractError("input_gradient: path through broadcast add is unsupported");
                accumulate(n.b, g);
            }
            break;
        }
        case Op::Sub:
            if (reaches[n.a]) accumulate(n.a, g);
            if (reaches[n.b]) accumulate(n.b, scale(g, -1.0));
            break;
        case Op::SubScalar:
            if (reaches[n.a]) accumulate(n.a, g);
            break;
        case Op::Scale:
            if (reaches[n.a]) accumulate(n.a, scale(g, n.scalar));
            break;
        case Op::Mul: {
            if (nodes_[n.b].cols == 1 && n.cols != 1)
                throw ContractError("input_gradient: path through broadcast multiply is unsupported");
            if (reaches[n.a]) accumulate(n.a, mul(g, n.b));
            if (reaches[n.b]) accumulate(n.b, mul(g, n.a));
            break;
        }
        case Op::LeakyRelu:
            // second derivative of the piecewise-linear activation is taken
            // as 0: the mask node is gradient-stopped
            if (reaches[n.a]) accumulate(n.a, mul(g, lrelu_mask(n.a, n.slope)));
            break;
        case Op::Square:
            if (reaches[n.a]) accumulate(n.a, scale(mul(g, n.a), 2.0));
            break;
        case Op::Interpolate: {
            if (reaches[n.a]) {
                const NodeId zero_a = constant(Tensor(n.rows, n.cols));
                accumulate(n.a, interpolate(g, zero_a, n.coeffs));
            }
            if (reaches[n.b]) {
                const NodeId zero_b = constant(Tensor(n.rows, n.cols));
                accumulate(n.b, interpolate(zero_b, g, n.coeffs));
            }
            break;
        }
        case Op::LreluMask:
        case Op::RowNorm:
        case Op::Sum:
        case Op::Mean:
            throw ContractError(std::string("input_gradient: op '") + op_name(n.op) +
                                "' is not row-separable; unsupported on the input path");
        }
    }

    if (adj[wrt] < 0) return constant(Tensor(nodes_[wrt].rows, nodes_[wrt].cols));
    return adj[wrt];
}

NodeId Graph::input_grad_norm(NodeId output, NodeId wrt) { return row_norm(input_gradient(output, wrt)); }

const Tensor& Graph::value(NodeId id) const {
    check_id(id);
    return nodes_[id].value;
}

} // namespace lipad::ad
