#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace lipad {

struct ScoredDataset {
    std::vector<double> scores;
    std::vector<int> labels; // 0 nominal, 1 anomalous
};

/// Mann-Whitney AUC: fraction of (anomalous, nominal) pairs where the
/// anomalous score is higher; ties count 1/2.
double roc_auc(const ScoredDataset& sd);

/// Fraction of reference scores strictly below `score`, ties 1/2.
double rank_fraction(double score, std::span<const double> reference);

/// (1-gamma)-quantile of training scores with linear interpolation between
/// order statistics at position (n-1)*(1-gamma).
double threshold_from_quantile(std::span<const double> train_scores, double gamma);

struct ReportRow {
    std::string experiment;
    std::string method;
    int digit = -1; // -1 when not digit-indexed
    double gamma = 0.0;
    std::uint64_t seed = 0;
    double value = 0.0;
};

struct SummaryRow {
    std::string experiment;
    std::string method;
    int digit = -1;
    double gamma = 0.0;
    long n_seeds = 0;
    double mean = 0.0;
    double ci95 = 0.0; // 1.96 * std / sqrt(n_seeds)
};

/// Per-cell metric rows plus mean +- 95% CI aggregates over seeds.
struct ExperimentReport {
    std::string name;
    std::vector<ReportRow> rows;

    void add(ReportRow row) { rows.push_back(std::move(row)); }
    /// Canonical order: (method, digit, gamma, seed). Makes output byte-stable
    /// regardless of the execution schedule.
    void sort_rows();
    std::vector<SummaryRow> summarize() const;
    void write_csv(const std::string& path) const;
    void write_summary_csv(const std::string& path) const;
    /// Mean value over seeds for one (method, digit, gamma) cell.
    double mean_value(const std::string& method, int digit, double gamma) const;
};

/// 16-bit binary PGM (P5), min-max normalized; used for score grids.
void write_pgm16(const std::string& path, const std::vector<double>& values, long width, long height);

} // namespace lipad
