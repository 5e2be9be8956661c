#include "lipad/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "lipad/errors.hpp"

namespace lipad::ot {

namespace {

constexpr double kWeightTol = 1e-12;
constexpr double kDualTol = 1e-9;

double point_dist(const Tensor& a, long i, const Tensor& b, long j) {
    double acc = 0.0;
    for (long c = 0; c < a.cols(); ++c) {
        const double d = a.at(i, c) - b.at(j, c);
        acc += d * d;
    }
    return std::sqrt(acc);
}

Tensor cost_matrix(const EmpiricalDist& p, const EmpiricalDist& q) {
    if (p.dim() != q.dim()) throw DimensionError("exact_w1: point dimensions differ");
    Tensor c(p.size(), q.size());
    for (long i = 0; i < p.size(); ++i)
        for (long j = 0; j < q.size(); ++j) c.at(i, j) = point_dist(p.points, i, q.points, j);
    return c;
}

bool is_uniform(const EmpiricalDist& d) {
    const double w = 1.0 / static_cast<double>(d.size());
    for (double x : d.weights)
        if (std::abs(x - w) > kWeightTol) return false;
    return true;
}

// Jonker-style shortest augmenting path assignment with dual potentials.
// On return u[i] + v[j] <= cost(i,j) for all pairs, tight on matches.
void solve_assignment(const Tensor& cost, std::vector<int>& row_to_col, std::vector<double>& u,
                      std::vector<double>& v) {
    const long n = cost.rows();
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> pu(n + 1, 0.0), pv(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (long i = 1; i <= n; ++i) {
        p[0] = static_cast<int>(i);
        long j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const long i0 = p[j0];
            long j1 = 0;
            double delta = kInf;
            for (long j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost.at(i0 - 1, j - 1) - pu[i0] - pv[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = static_cast<int>(j0);
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (long j = 0; j <= n; ++j) {
                if (used[j]) {
                    pu[p[j]] += delta;
                    pv[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const long j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    row_to_col.assign(n, -1);
    for (long j = 1; j <= n; ++j)
        if (p[j] != 0) row_to_col[p[j] - 1] = static_cast<int>(j - 1);
    u.assign(n, 0.0);
    v.assign(n, 0.0);
    for (long i = 0; i < n; ++i) u[i] = pu[i + 1];
    for (long j = 0; j < n; ++j) v[j] = pv[j + 1];
}

struct Arc {
    int i;
    int j;
    double flow;
};

// Transportation simplex. Supplies/demands each sum to 1.
void solve_transport_lp(const Tensor& cost, const std::vector<double>& supply, const std::vector<double>& demand,
                        Tensor& plan, std::vector<double>& u, std::vector<double>& v, bool& degenerate) {
    const long n = static_cast<long>(supply.size());
    const long m = static_cast<long>(demand.size());

    // northwest-corner initial basis: exactly n+m-1 arcs
    std::vector<Arc> basis;
    basis.reserve(n + m - 1);
    {
        long i = 0, j = 0;
        double a = supply[0], b = demand[0];
        while (true) {
            const double x = std::min(a, b);
            basis.push_back({static_cast<int>(i), static_cast<int>(j), x});
            a -= x;
            b -= x;
            if (i == n - 1 && j == m - 1) break;
            const bool advance_row = (j == m - 1) || (a <= b && i < n - 1);
            if (advance_row) {
                ++i;
                a = supply[i];
            } else {
                ++j;
                b = demand[j];
            }
        }
    }

    std::vector<char> in_basis(n * m, 0);
    for (const Arc& a : basis) in_basis[a.i * m + a.j] = 1;

    const double scale = std::max(1.0, max_abs(cost));
    const double enter_tol = 1e-12 * scale;

    u.assign(n, 0.0);
    v.assign(m, 0.0);
    std::vector<std::vector<int>> adj(n + m); // node -> basis arc indices; cols are n+j

    const long max_iters = 2000 + 200 * (n + m) * (n + m);
    long stalled = 0;
    bool bland = false;

    for (long iter = 0;; ++iter) {
        if (iter > max_iters) throw NumericError("transport simplex: iteration cap exceeded");

        // duals from the basis tree, u[0] = 0
        for (auto& a : adj) a.clear();
        for (size_t k = 0; k < basis.size(); ++k) {
            adj[basis[k].i].push_back(static_cast<int>(k));
            adj[n + basis[k].j].push_back(static_cast<int>(k));
        }
        std::vector<char> seen(n + m, 0);
        std::queue<int> bfs;
        bfs.push(0);
        seen[0] = 1;
        u[0] = 0.0;
        while (!bfs.empty()) {
            const int node = bfs.front();
            bfs.pop();
            for (int k : adj[node]) {
                const Arc& a = basis[k];
                const int other = node < n ? n + a.j : a.i;
                if (seen[other]) continue;
                seen[other] = 1;
                if (other >= n)
                    v[a.j] = cost.at(a.i, a.j) - u[a.i];
                else
                    u[a.i] = cost.at(a.i, a.j) - v[a.j];
                bfs.push(other);
            }
        }

        // entering arc
        int ei = -1, ej = -1;
        double best = -enter_tol;
        for (long i = 0; i < n && !(bland && ei >= 0); ++i) {
            for (long j = 0; j < m; ++j) {
                if (in_basis[i * m + j]) continue;
                const double r = cost.at(i, j) - u[i] - v[j];
                if (r < best) {
                    best = r;
                    ei = static_cast<int>(i);
                    ej = static_cast<int>(j);
                    if (bland) break; // first negative in lexicographic order
                }
            }
        }
        if (ei < 0) break; // optimal

        // unique tree path from row node ei to col node n+ej
        std::vector<int> parent_arc(n + m, -1);
        std::vector<int> parent_node(n + m, -1);
        std::fill(seen.begin(), seen.end(), 0);
        std::queue<int> q2;
        q2.push(ei);
        seen[ei] = 1;
        while (!q2.empty()) {
            const int node = q2.front();
            q2.pop();
            if (node == n + ej) break;
            for (int k : adj[node]) {
                const Arc& a = basis[k];
                const int other = node < n ? n + a.j : a.i;
                if (seen[other]) continue;
                seen[other] = 1;
                parent_arc[other] = k;
                parent_node[other] = node;
                q2.push(other);
            }
        }
        if (!seen[n + ej]) throw NumericError("transport simplex: basis is not connected");

        // walk back from the entering column; signs alternate -,+,-,...
        std::vector<int> minus_arcs, plus_arcs;
        {
            int node = n + ej;
            bool minus = true;
            while (node != ei) {
                const int k = parent_arc[node];
                (minus ? minus_arcs : plus_arcs).push_back(k);
                node = parent_node[node];
                minus = !minus;
            }
        }

        // leaving arc: minimum flow among minus arcs, lexicographic tie-break
        int leave = -1;
        for (int k : minus_arcs) {
            if (leave < 0) {
                leave = k;
                continue;
            }
            const Arc& a = basis[k];
            const Arc& l = basis[leave];
            if (a.flow < l.flow - 1e-15 ||
                (a.flow <= l.flow + 1e-15 && std::pair(a.i, a.j) < std::pair(l.i, l.j)))
                leave = k;
        }
        if (leave < 0) throw NumericError("transport simplex: no leaving arc");
        const double theta = basis[leave].flow;

        for (int k : plus_arcs) basis[k].flow += theta;
        for (int k : minus_arcs) basis[k].flow -= theta;

        if (theta <= 1e-15) {
            if (++stalled > (n + m) * (n + m)) bland = true; // anti-cycling fallback
        } else {
            stalled = 0;
        }

        in_basis[basis[leave].i * m + basis[leave].j] = 0;
        in_basis[ei * m + ej] = 1;
        basis[leave] = {ei, ej, theta};
    }

    plan = Tensor(n, m);
    degenerate = false;
    for (const Arc& a : basis) {
        plan.at(a.i, a.j) = std::max(0.0, a.flow);
        if (a.flow <= 1e-14) degenerate = true;
    }
}

} // namespace

EmpiricalDist EmpiricalDist::uniform(Tensor pts) {
    EmpiricalDist d;
    const long n = pts.rows();
    d.points = std::move(pts);
    d.weights.assign(n, n > 0 ? 1.0 / static_cast<double>(n) : 0.0);
    d.validate();
    return d;
}

EmpiricalDist EmpiricalDist::weighted(Tensor pts, std::vector<double> w) {
    EmpiricalDist d;
    d.points = std::move(pts);
    d.weights = std::move(w);
    d.validate();
    return d;
}

void EmpiricalDist::validate() const {
    if (points.rows() < 1) throw ContractError("EmpiricalDist: needs at least one point");
    if (static_cast<long>(weights.size()) != points.rows())
        throw ContractError("EmpiricalDist: weight count mismatch");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw ContractError("EmpiricalDist: negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > kWeightTol) throw ContractError("EmpiricalDist: weights must sum to 1");
}

W1Result exact_w1(const EmpiricalDist& p, const EmpiricalDist& q) {
    p.validate();
    q.validate();
    const long n = p.size(), m = q.size();
    if (n * m > 1'000'000) throw ContractError("exact_w1: instance exceeds the n*m <= 1e6 bound");

    const Tensor cost = cost_matrix(p, q);
    Tensor plan;
    std::vector<double> u, v;
    bool degenerate = false;

    if (n == m && is_uniform(p) && is_uniform(q)) {
        std::vector<int> row_to_col;
        solve_assignment(cost, row_to_col, u, v);
        plan = Tensor(n, m);
        const double w = 1.0 / static_cast<double>(n);
        for (long i = 0; i < n; ++i) plan.at(i, row_to_col[i]) = w;
        degenerate = false;
    } else {
        solve_transport_lp(cost, p.weights, q.weights, plan, u, v, degenerate);
    }

    W1Result res;
    res.plan.coupling = plan;
    double primal = 0.0;
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < m; ++j) primal += plan.at(i, j) * cost.at(i, j);
    res.plan.cost = primal;
    res.cost = primal;
    res.degenerate_basis = degenerate;

    double dual = 0.0;
    for (long i = 0; i < n; ++i) dual += p.weights[i] * u[i];
    for (long j = 0; j < m; ++j) dual += q.weights[j] * v[j];
    res.duality_gap = std::abs(primal - dual);
    if (res.duality_gap > kDualTol * std::max(1.0, primal))
        throw NumericError("exact_w1: duality gap " + std::to_string(res.duality_gap));

    // c-transform onto a single 1-Lipschitz function, then pin phi[0] = 0
    std::vector<double> psi_raw(m);
    for (long j = 0; j < m; ++j) psi_raw[j] = -v[j];
    auto f_at = [&](const Tensor& pts, long row) {
        double best = std::numeric_limits<double>::infinity();
        for (long j = 0; j < m; ++j) best = std::min(best, psi_raw[j] + point_dist(pts, row, q.points, j));
        return best;
    };
    res.potentials.phi.resize(n);
    res.potentials.psi.resize(m);
    for (long i = 0; i < n; ++i) res.potentials.phi[i] = f_at(p.points, i);
    for (long j = 0; j < m; ++j) res.potentials.psi[j] = f_at(q.points, j);
    const double shift = res.potentials.phi[0];
    for (double& x : res.potentials.phi) x -= shift;
    for (double& x : res.potentials.psi) x -= shift;
    return res;
}

double brute_force_w1(const EmpiricalDist& p, const EmpiricalDist& q) {
    if (p.size() != q.size()) throw ContractError("brute_force_w1: sizes differ");
    if (!is_uniform(p) || !is_uniform(q)) throw ContractError("brute_force_w1: weights must be uniform");
    const long n = p.size();
    if (n > 8) throw ContractError("brute_force_w1: n must be <= 8");
    const Tensor cost = cost_matrix(p, q);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (long i = 0; i < n; ++i) total += cost.at(i, perm[i]);
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / static_cast<double>(n);
}

double potential_value(const PotentialPair& pot, const Tensor& target_points, const double* z) {
    double best = std::numeric_limits<double>::infinity();
    for (long j = 0; j < target_points.rows(); ++j) {
        double acc = 0.0;
        for (long c = 0; c < target_points.cols(); ++c) {
            const double d = z[c] - target_points.at(j, c);
            acc += d * d;
        }
        best = std::min(best, pot.psi[j] + std::sqrt(acc));
    }
    return best;
}

EmpiricalDist mixture(const EmpiricalDist& pn, const EmpiricalDist& pa, double gamma) {
    if (gamma < 0.0 || gamma >= 1.0) throw ContractError("mixture: gamma must be in [0,1)");
    if (pn.dim() != pa.dim()) throw DimensionError("mixture: dimensions differ");
    Tensor pts(pn.size() + pa.size(), pn.dim());
    std::vector<double> w(pn.size() + pa.size());
    for (long i = 0; i < pn.size(); ++i) {
        for (long c = 0; c < pn.dim(); ++c) pts.at(i, c) = pn.points.at(i, c);
        w[i] = (1.0 - gamma) * pn.weights[i];
    }
    for (long j = 0; j < pa.size(); ++j) {
        for (long c = 0; c < pa.dim(); ++c) pts.at(pn.size() + j, c) = pa.points.at(j, c);
        w[pn.size() + j] = gamma * pa.weights[j];
    }
    return EmpiricalDist::weighted(std::move(pts), std::move(w));
}

Prop2Report check_prop2_bound(const EmpiricalDist& pn, const EmpiricalDist& pa, double gamma) {
    if (gamma <= 0.0 || gamma >= 1.0) throw ContractError("check_prop2_bound: gamma must be in (0,1)");
    const EmpiricalDist m = mixture(pn, pa, gamma);

    const W1Result s1 = exact_w1(pn, pa); // f*
    const W1Result s2 = exact_w1(m, pa);  // f**
    const W1Result s3 = exact_w1(pn, m);

    double e_pn_fstar = 0.0, e_pn_fss = 0.0, e_pa_fstar = 0.0, e_pa_fss = 0.0;
    for (long i = 0; i < pn.size(); ++i) {
        e_pn_fstar += pn.weights[i] * s1.potentials.phi[i];
        e_pn_fss += pn.weights[i] * s2.potentials.phi[i]; // mixture's first block is Pn's points
    }
    for (long j = 0; j < pa.size(); ++j) {
        e_pa_fstar += pa.weights[j] * s1.potentials.psi[j];
        e_pa_fss += pa.weights[j] * s2.potentials.psi[j];
    }

    Prop2Report rep;
    rep.a_value = std::abs((e_pn_fstar - e_pn_fss) + (e_pa_fss - e_pa_fstar));
    rep.b_value = s3.cost / (1.0 - gamma);
    rep.holds = rep.a_value <= rep.b_value + 1e-6;
    rep.degenerate = s1.degenerate_basis || s2.degenerate_basis;
    rep.w_pn_pa = s1.cost;
    rep.w_m_pa = s2.cost;
    rep.w_pn_m = s3.cost;
    return rep;
}

StabilityReport check_stability_triangle(const EmpiricalDist& pn, const EmpiricalDist& pa,
                                         const EmpiricalDist& pa_hat) {
    StabilityReport rep;
    rep.w_pn_pa = exact_w1(pn, pa).cost;
    rep.w_pn_pahat = exact_w1(pn, pa_hat).cost;
    rep.w_pa_pahat = exact_w1(pa, pa_hat).cost;
    rep.lhs = std::abs(rep.w_pn_pa - rep.w_pn_pahat);
    rep.rhs = rep.w_pa_pahat;
    rep.holds = rep.lhs <= rep.rhs + 1e-9;
    return rep;
}

} // namespace lipad::ot
