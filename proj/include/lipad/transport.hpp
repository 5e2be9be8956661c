#pragma once

#include <vector>

#include "lipad/tensor.hpp"

namespace lipad::ot {

/// Finite weighted point set; weights default to uniform 1/n.
struct EmpiricalDist {
    Tensor points; // n x d
    std::vector<double> weights;

    static EmpiricalDist uniform(Tensor pts);
    static EmpiricalDist weighted(Tensor pts, std::vector<double> w);
    long size() const { return points.rows(); }
    long dim() const { return points.cols(); }
    void validate() const;
};

/// Optimal coupling for the discrete problem; row sums = source weights,
/// column sums = target weights.
struct TransportPlan {
    Tensor coupling; // n x m
    double cost = 0.0;
};

/// Kantorovich potentials sampled at the source (phi) and target (psi)
/// points. Both are values of one 1-Lipschitz function (the c-transform of
/// the LP duals), normalized so phi[0] = 0, with
///   phi[i] - psi[j] <= ||x_i - y_j||    and    sum w*phi - sum v*psi = cost.
struct PotentialPair {
    std::vector<double> phi;
    std::vector<double> psi;
};

struct W1Result {
    TransportPlan plan;
    PotentialPair potentials;
    double cost = 0.0;
    double duality_gap = 0.0;    // |primal - dual| at the raw LP solution
    bool degenerate_basis = false; // some basic arc carried zero flow at optimum
};

/// Exact Wasserstein-1 with Euclidean ground cost. Equal-size uniform inputs
/// are solved as an assignment problem; the general weighted case runs a
/// transportation simplex with lexicographic tie-breaking.
W1Result exact_w1(const EmpiricalDist& p, const EmpiricalDist& q);

/// Enumeration oracle: min over all n! assignments of the mean matched
/// distance. Uniform weights, n = m <= 8.
double brute_force_w1(const EmpiricalDist& p, const EmpiricalDist& q);

/// Evaluate the 1-Lipschitz potential anywhere via its c-transform
/// f(z) = min_j (psi[j] + ||z - y_j||), given the target points of the solve.
double potential_value(const PotentialPair& pot, const Tensor& target_points, const double* z);

/// Mixture M = (1-gamma) Pn + gamma Pa as a weighted empirical distribution
/// over the union of supports.
EmpiricalDist mixture(const EmpiricalDist& pn, const EmpiricalDist& pa, double gamma);

struct Prop2Report {
    double a_value = 0.0; // |E_Pn[f*-f**] + E_Pa[f**-f*]|
    double b_value = 0.0; // W(Pn, M) / (1-gamma)
    bool holds = false;   // a <= b + 1e-6
    bool degenerate = false;
    double w_pn_pa = 0.0;
    double w_m_pa = 0.0;
    double w_pn_m = 0.0;
};

/// Numeric check of the contamination-robustness bound on exact potentials.
Prop2Report check_prop2_bound(const EmpiricalDist& pn, const EmpiricalDist& pa, double gamma);

struct StabilityReport {
    double lhs = 0.0; // |W(Pn,Pa) - W(Pn,Pa_hat)|
    double rhs = 0.0; // W(Pa,Pa_hat)
    bool holds = false;
    double w_pn_pa = 0.0;
    double w_pn_pahat = 0.0;
    double w_pa_pahat = 0.0;
};

/// Triangle-inequality stability of the anomaly-estimate substitution.
StabilityReport check_stability_triangle(const EmpiricalDist& pn, const EmpiricalDist& pa,
                                         const EmpiricalDist& pa_hat);

} // namespace lipad::ot
